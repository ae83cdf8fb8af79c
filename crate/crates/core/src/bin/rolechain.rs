use std::io;
use std::process::ExitCode;

use rolechain::cli::{run_cli, SEED_ENV};

fn main() -> ExitCode {
    let code = run_cli(std::env::args_os(), std::env::var(SEED_ENV).ok(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
