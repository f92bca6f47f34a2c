use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = vfsreg::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(outcome.exit_code as u8)
}
