use std::process::ExitCode;

fn main() -> ExitCode {
    gaugeflow::cli::main_with_args(std::env::args_os())
}
