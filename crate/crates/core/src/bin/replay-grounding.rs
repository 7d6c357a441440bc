fn main() -> std::process::ExitCode {
    replay_grounding::cli::main()
}
