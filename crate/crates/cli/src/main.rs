use clap::{Parser, Subcommand};
use spacings_core::experiment::{run_experiment, ExperimentConfig, DEFAULT_SEED};
use spacings_core::limit_laws::{sample_limit, LimitLaw};
use spacings_core::rng::replicate_stream;
use spacings_core::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const SEED_ENV: &str = "SPACINGS_LAB_SEED";

#[derive(Parser)]
#[command(name = "spacings-lab", version, about = "Simulate and test limit laws for spacings of order statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed and SPACINGS_LAB_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (default: the config's `output`, else `spacings-lab-out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 1 when any test fails.
        #[arg(long)]
        strict: bool,
    },
    /// Print draws from a limiting law as CSV, e.g. `--law gumbel-w-vector:j=3`.
    Oracle {
        #[arg(long)]
        law: String,
        #[arg(long)]
        draws: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Seed precedence: flag, then config file, then environment, then default.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config { field: SEED_ENV.into(), reason: format!("`{v}` is not a 64-bit unsigned integer") }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, seed, threads, out, strict } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| Error::Config { field: "threads".into(), reason: e.to_string() })?;
            }
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.seed = Some(resolve_seed(seed, cfg.seed)?);
            let dir = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("spacings-lab-out"));
            let outcome = run_experiment(&cfg, Some(&dir))?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for line in &outcome.summary {
                writeln!(lock, "{line}")?;
            }
            for f in &outcome.files {
                writeln!(lock, "wrote {}", f.display())?;
            }
            Ok(!strict || outcome.report.all_passed)
        }
        Command::Oracle { law, draws, seed } => {
            let law: LimitLaw = law.parse()?;
            let seed = resolve_seed(seed, None)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "#schema=1")?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(lock);
            w.write_record((1..=law.dimension()).map(|j| format!("w_{j}")))?;
            for i in 0..draws {
                let row = sample_limit(&law, &mut replicate_stream(seed, i))?;
                w.write_record(row.iter().map(f64::to_string))?;
            }
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("spacings-lab: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                _ => 1,
            })
        }
    }
}
