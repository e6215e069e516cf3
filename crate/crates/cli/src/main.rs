use std::process::ExitCode;

fn main() -> ExitCode {
    ergodic_smpc_cli::cli::main_with_args(std::env::args_os())
}
