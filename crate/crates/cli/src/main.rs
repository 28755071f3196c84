fn main() -> std::process::ExitCode {
    logtally_cli::run(std::env::args_os())
}
