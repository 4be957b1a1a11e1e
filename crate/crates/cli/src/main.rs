use std::io::{stderr, stdout};
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = constat_cli::init_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(e.code() as u8);
    }
    let code = constat_cli::run(std::env::args_os(), &mut stdout().lock(), &mut stderr().lock());
    ExitCode::from(code as u8)
}
