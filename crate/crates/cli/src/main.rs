use std::process::ExitCode;

fn main() -> ExitCode {
    irls_svm_cli::run(std::env::args_os())
}
