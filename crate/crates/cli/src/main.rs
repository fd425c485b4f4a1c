fn main() -> std::process::ExitCode {
    fracsource_cli::app::main_with_args(std::env::args_os())
}
