use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fracle::run(std::env::args_os()))
}
