use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use otto_cli::{execute, CliError, Mode};

/// Quantum Otto refrigerator with a coupled-spin working medium.
#[derive(Debug, Parser)]
#[command(name = "otto", version)]
struct Args {
    mode: Mode,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `out`, else the current one).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Validation(e.to_string().trim_end().to_owned())),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            return fail(&CliError::Validation("--threads must be >= 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail(&CliError::Validation(format!("--threads: {e}")));
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(&CliError::io(&args.config, e)),
    };
    match execute(args.mode, &text, args.out.as_deref(), args.seed) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
