use std::process::ExitCode;

fn main() -> ExitCode {
    oja_newton::cli::main_with_args(std::env::args_os())
}
