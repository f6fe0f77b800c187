use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(aigvqa::cli::run(std::env::args_os()))
}
