use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use interdim::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|()| out.flush().map_err(Into::into));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("interdim: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
