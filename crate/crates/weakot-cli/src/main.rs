use std::process::ExitCode;

fn main() -> ExitCode {
    let code = weakot_cli::run_command(std::env::args().skip(1));
    ExitCode::from(code as u8)
}
