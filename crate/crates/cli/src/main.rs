mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use infometer::error::{Error, Result};

use args::Cli;
use commands::Produced;

const EXIT_VALIDATION: u8 = 2;
const EXIT_MISSING_FIELD: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn execute(cli: Cli) -> Result<()> {
    let Cli { common, command } = cli;
    let seed = if commands::needs_seed(&command) {
        Some(common.seed.unwrap_or_else(|| {
            let s = rand::random::<u64>();
            eprintln!("seed: {s}");
            s
        }))
    } else {
        common.seed
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Error::InvalidConfig("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let text = match pool.install(|| commands::run(command, &common, seed))? {
        Produced::Report(out) => output::render(out, common.format, common.bits)?,
        Produced::Text(text) => text,
    };
    output::emit(&text, common.output.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_MISSING_FIELD })
        }
    }
}
