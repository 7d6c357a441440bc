//! The `replay-grounding` command line.
//!
//! Stages are separate subcommands (`gen`, `prepare`, `train`, `detect`,
//! `eval`, `inspect`). Every stage resolves its configuration from defaults,
//! then an optional `--config` JSON file, then explicit flags; prints the
//! result; and stores it next to its outputs. Exit codes: 0 success, 1
//! usage or configuration error, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::augmentation::{augment_dataset, AugmentConfig};
use crate::conditioning::{build_samples, read_samples, write_samples, Mode, WindowConfig};
use crate::dataset_io::{
    generate_synthetic, load_manifest, read_rgf1_header, write_predictions, Manifest, SynthConfig,
};
use crate::detection::{actionness_train, ActionnessModel, AnchorConfig, FrameScorer, SimilarityScorer, TrainConfig};
use crate::error::Error;
use crate::evaluation::{evaluate, MetricConfig};
use crate::pipeline::{detect, DetectConfig};
use crate::postprocess::{NmsMethod, PostConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    #[default]
    Similarity,
    Actionness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Train,
    Test,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Train => Mode::Train,
            ModeArg::Test => Mode::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NmsArg {
    Gaussian,
    Linear,
    Hard,
}

impl From<NmsArg> for NmsMethod {
    fn from(m: NmsArg) -> Self {
        match m {
            NmsArg::Gaussian => NmsMethod::Gaussian,
            NmsArg::Linear => NmsMethod::Linear,
            NmsArg::Hard => NmsMethod::Hard,
        }
    }
}

/// Input and output locations of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub manifest: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Every tunable of every stage, plus the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub window: WindowConfig,
    pub augment: AugmentConfig,
    pub anchors: AnchorConfig,
    pub post: PostConfig,
    pub metrics: MetricConfig,
    pub train: TrainConfig,
    pub refine_radius: usize,
    pub scorer: ScorerKind,
    /// Streams to use from the manifest; empty selects all.
    pub streams: Vec<String>,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            synth: SynthConfig::default(),
            window: WindowConfig::default(),
            augment: AugmentConfig::default(),
            anchors: AnchorConfig::default(),
            post: PostConfig::default(),
            metrics: MetricConfig::default(),
            train: TrainConfig::default(),
            refine_radius: DetectConfig::default().refine_radius,
            scorer: ScorerKind::default(),
            streams: Vec::new(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    /// Propagates the run seed into every seeded sub-config.
    fn sync_seed(&mut self) {
        self.synth.seed = self.seed;
        self.augment.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            anchors: self.anchors.clone(),
            post: self.post.clone(),
            refine_radius: self.refine_radius,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Parser)]
#[command(name = "replay-grounding", version, about = "Replay grounding as temporal segment detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (feature tracks + manifest).
    Gen(GenArgs),
    /// Window, condition and resize replay contexts into samples.
    Prepare(PrepareArgs),
    /// Train the actionness head on prepared samples.
    Train(TrainArgs),
    /// Score prepared samples and write ranked predictions.
    Detect(DetectArgs),
    /// Evaluate predictions against a manifest.
    Eval(EvalArgs),
    /// Print RGF1 headers.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "games", alias = "n-games")]
    pub n_games: Option<usize>,
    #[arg(long)]
    pub actions_per_half: Option<usize>,
    #[arg(long)]
    pub distractors_per_half: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "duration", alias = "duration-s")]
    pub duration_s: Option<f64>,
    #[arg(long = "noise", alias = "noise-sigma")]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub signature_len_s: Option<f64>,
    #[arg(long)]
    pub fps: Option<f32>,
    /// Comma-separated stream names.
    #[arg(long, value_delimiter = ',')]
    pub streams: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub window_len_s: Option<f64>,
    #[arg(long)]
    pub stride_s: Option<f64>,
    #[arg(long)]
    pub resize_len: Option<usize>,
    #[arg(long)]
    pub train_context_s: Option<f64>,
    #[arg(long)]
    pub test_context_s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Synthetic positives per real positive (train mode only).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Comma-separated subset of manifest streams.
    #[arg(long, value_delimiter = ',')]
    pub streams: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Coarse proposals kept per window.
    #[arg(long = "topk", alias = "k")]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub durations_f: Option<Vec<usize>>,
    #[arg(long)]
    pub start_stride_f: Option<usize>,
    #[arg(long)]
    pub refine_radius: Option<usize>,
    #[arg(long, value_enum)]
    pub nms_method: Option<NmsArg>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub score_floor: Option<f64>,
    #[arg(long)]
    pub top_m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub tight_deltas_s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub loose_deltas_s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub tiou_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(format!("invalid config: {m}")),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, common.seed);
    Ok(cfg)
}

fn require(path: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    path.clone()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn announce(cfg: &mut RunConfig, out: &mut dyn Write) {
    cfg.sync_seed();
    let compact = serde_json::to_string(cfg).expect("config serializes");
    let _ = writeln!(out, "config: {compact}");
}

/// `<file>.config.json` next to a file output.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".config.json");
    path.with_file_name(name)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Builds a directory output in a sibling temp dir, then moves it into place.
/// An existing target is replaced only if it is empty or holds `marker`.
fn commit_dir(out: &Path, marker: &str, build: impl FnOnce(&Path) -> CliResult<()>) -> CliResult<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if out.exists() {
        let replaceable = out.is_dir()
            && (out.join(marker).is_file()
                || fs::read_dir(out).map(|mut d| d.next().is_none()).unwrap_or(false));
        if !replaceable {
            return Err(CliError::Usage(format!(
                "refusing to overwrite {}: not an earlier output of this command",
                out.display()
            )));
        }
    }
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(&parent)
        .map_err(|e| CliError::Usage(format!("cannot write under {}: {e}", parent.display())))?;
    build(staging.path())?;
    if out.exists() {
        fs::remove_dir_all(out)
            .map_err(|e| CliError::Usage(format!("cannot replace {}: {e}", out.display())))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        CliError::Usage(format!("cannot move output into {}: {e}", out.display()))
    })
}

fn select_streams(manifest: &mut Manifest, streams: &[String]) -> CliResult<()> {
    if streams.is_empty() {
        return Ok(());
    }
    for game in &mut manifest.games {
        for half in &mut game.halves {
            for s in streams {
                if !half.streams.contains_key(s) {
                    return Err(CliError::Usage(format!(
                        "stream {s:?} not present in game {} half {}",
                        game.id, half.half
                    )));
                }
            }
            half.streams.retain(|name, _| streams.contains(name));
            let order: Vec<_> = streams.iter().collect();
            half.streams
                .sort_by_key(|name, _| order.iter().position(|s| *s == name).unwrap_or(usize::MAX));
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg.paths.out, args.out.map(Some));
    let s = &mut cfg.synth;
    set(&mut s.n_games, args.n_games);
    set(&mut s.actions_per_half, args.actions_per_half);
    set(&mut s.distractors_per_half, args.distractors_per_half);
    set(&mut s.dim, args.dim);
    set(&mut s.duration_s, args.duration_s);
    set(&mut s.noise_sigma, args.noise_sigma);
    set(&mut s.signature_len_s, args.signature_len_s);
    set(&mut s.fps, args.fps);
    set(&mut s.streams, args.streams);
    announce(&mut cfg, out);
    cfg.synth.validate()?;
    let out_dir = require(&cfg.paths.out, "out")?;

    let mut replays = 0;
    commit_dir(&out_dir, "manifest.json", |staging| {
        let manifest = generate_synthetic(&cfg.synth, staging)?;
        replays = manifest.replays().count();
        write_text(&staging.join("run_config.json"), &cfg.to_json())
    })?;
    let _ = writeln!(
        out,
        "wrote {} ({} games, {} replays)",
        out_dir.join("manifest.json").display(),
        cfg.synth.n_games,
        replays
    );
    Ok(())
}

fn cmd_prepare(args: PrepareArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg.paths.manifest, args.manifest.map(Some));
    set(&mut cfg.paths.out, args.out.map(Some));
    let w = &mut cfg.window;
    set(&mut w.window_len_s, args.window.window_len_s);
    set(&mut w.stride_s, args.window.stride_s);
    set(&mut w.resize_len, args.window.resize_len);
    set(&mut w.train_context_s, args.window.train_context_s);
    set(&mut w.test_context_s, args.window.test_context_s);
    set(&mut cfg.augment.ratio, args.ratio);
    set(&mut cfg.streams, args.streams);
    let mode: Mode = args.mode.into();
    announce(&mut cfg, out);
    cfg.window.validate()?;
    cfg.augment.validate()?;
    let manifest_path = require(&cfg.paths.manifest, "manifest")?;
    let out_dir = require(&cfg.paths.out, "out")?;

    let mut manifest = load_manifest(&manifest_path)?;
    select_streams(&mut manifest, &cfg.streams)?;
    let mut samples = build_samples(&manifest, &cfg.window, mode)?;
    let n_real = samples.len();
    if mode == Mode::Train {
        samples = augment_dataset(samples, &manifest, &cfg.window, &cfg.augment)?;
    }
    commit_dir(&out_dir, crate::conditioning::SAMPLE_INDEX, |staging| {
        write_samples(&samples, staging)?;
        write_text(&staging.join("run_config.json"), &cfg.to_json())
    })?;
    let _ = writeln!(
        out,
        "wrote {} samples ({} real, {} synthetic) to {}",
        samples.len(),
        n_real,
        samples.len() - n_real,
        out_dir.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg.paths.samples, args.samples.map(Some));
    set(&mut cfg.paths.out, args.out.map(Some));
    set(&mut cfg.train.epochs, args.epochs);
    set(&mut cfg.train.lr, args.lr);
    set(&mut cfg.train.batch_size, args.batch_size);
    set(&mut cfg.train.hidden, args.hidden);
    announce(&mut cfg, out);
    let samples_dir = require(&cfg.paths.samples, "samples")?;
    let model_path = require(&cfg.paths.out, "out")?;

    let samples = read_samples(&samples_dir)?;
    let model = actionness_train(&samples, &cfg.train)?;
    write_text(&model_path, &model.to_json())?;
    write_text(&sidecar(&model_path), &cfg.to_json())?;
    let _ = writeln!(
        out,
        "final loss {:.6} over {} samples; model written to {}",
        model.final_loss.unwrap_or(f64::NAN),
        samples.len(),
        model_path.display()
    );
    Ok(())
}

fn cmd_detect(args: DetectArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg.paths.samples, args.samples.map(Some));
    set(&mut cfg.paths.out, args.out.map(Some));
    set(&mut cfg.paths.model, args.model.map(Some));
    set(&mut cfg.scorer, args.scorer);
    set(&mut cfg.anchors.k, args.k);
    set(&mut cfg.anchors.durations_f, args.durations_f);
    set(&mut cfg.anchors.start_stride_f, args.start_stride_f);
    set(&mut cfg.refine_radius, args.refine_radius);
    set(&mut cfg.post.nms_method, args.nms_method.map(Into::into));
    set(&mut cfg.post.sigma, args.sigma);
    set(&mut cfg.post.iou_threshold, args.iou_threshold);
    set(&mut cfg.post.score_floor, args.score_floor);
    set(&mut cfg.post.top_m, args.top_m);
    announce(&mut cfg, out);
    cfg.post.validate()?;
    let samples_dir = require(&cfg.paths.samples, "samples")?;
    let pred_path = require(&cfg.paths.out, "out")?;

    let samples = read_samples(&samples_dir)?;
    let scorer: Box<dyn FrameScorer> = match cfg.scorer {
        ScorerKind::Similarity => Box::new(SimilarityScorer),
        ScorerKind::Actionness => {
            let path = require(&cfg.paths.model, "model")?;
            Box::new(ActionnessModel::load(path)?)
        }
    };
    let spots = detect(&samples, scorer.as_ref(), &cfg.detect_config())?;
    write_predictions(&spots, &pred_path)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    write_text(&sidecar(&pred_path), &cfg.to_json())?;
    let replays = spots.iter().filter(|s| s.rank == 1).count();
    let _ = writeln!(
        out,
        "wrote {} predictions for {} replays to {}",
        spots.len(),
        replays,
        pred_path.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg.paths.manifest, args.manifest.map(Some));
    set(&mut cfg.paths.predictions, args.predictions.map(Some));
    set(&mut cfg.paths.out, args.out.map(Some));
    set(&mut cfg.metrics.tight_deltas_s, args.tight_deltas_s);
    set(&mut cfg.metrics.loose_deltas_s, args.loose_deltas_s);
    set(&mut cfg.metrics.tiou_thresholds, args.tiou_thresholds);
    announce(&mut cfg, out);
    cfg.metrics.validate()?;
    let manifest = load_manifest(require(&cfg.paths.manifest, "manifest")?)?;
    let preds = require(&cfg.paths.predictions, "predictions")?;

    let report = evaluate(&manifest, &preds, &cfg.metrics)?;
    if let Some(path) = &cfg.paths.out {
        write_text(path, &report.to_json())?;
        write_text(&sidecar(path), &cfg.to_json())?;
    }
    let _ = write!(out, "{}", report.render_table());
    Ok(())
}

fn cmd_inspect(args: InspectArgs, out: &mut dyn Write) -> CliResult<()> {
    for path in &args.files {
        let h = read_rgf1_header(path)?;
        let _ = writeln!(
            out,
            "{}: RGF1 v{} T={} D={} fps={} payload={} bytes",
            path.display(),
            h.version,
            h.frames,
            h.dim,
            h.fps,
            h.payload_len()
        );
    }
    Ok(())
}

/// Runs one command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Prepare(a) => cmd_prepare(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Detect(a) => cmd_detect(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_from(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}
