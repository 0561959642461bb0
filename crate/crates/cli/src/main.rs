use std::process::ExitCode;

fn main() -> ExitCode {
    satake_cli::main_with(std::env::args_os())
}
