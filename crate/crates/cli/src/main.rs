use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use lapkit_cli::config::{load_config, seed_override_from_env, ConfigError};
use lapkit_cli::report::{write_run, Command};
use lapkit_cli::runner::{execute, Context};

const EXIT_CONFIG: u8 = 1;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "lapkit", version, about = "Limiting absorption and Lippmann-Schwinger experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Probe the boundary value of the sandwiched resolvent at each λ.
    Probe(Args),
    /// Coupling resonances and a chosen non-resonant coupling.
    Resonances(Args),
    /// Solve the homogeneous equation and extract bound states.
    SolveLs(Args),
    /// Full pipeline: classification, kernel, independence and concentration checks.
    Verify(Args),
    /// Sup-norm profile and classification over a λ grid.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Omit wall time and other volatile fields from the report.
    #[arg(long)]
    canonical: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn split(sub: Sub) -> (Command, Args) {
    match sub {
        Sub::Probe(a) => (Command::Probe, a),
        Sub::Resonances(a) => (Command::Resonances, a),
        Sub::SolveLs(a) => (Command::SolveLs, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Sweep(a) => (Command::Sweep, a),
    }
}

fn prepare(args: &Args) -> Result<Context, ConfigError> {
    let config = load_config(&args.config)?;
    Context::new(config, seed_override_from_env()?)
}

fn run(command: Command, args: Args, ctx: Context) -> anyhow::Result<u8> {
    let out_dir = args
        .output
        .clone()
        .or_else(|| ctx.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("lapkit-out").join(&ctx.config.run_label));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool.build().context("starting worker pool")?;
    let mut out = pool.install(|| execute(command, &ctx));
    if args.canonical {
        out.report.canonicalize();
    }
    let path = write_run(&out_dir, &out.report, &out.tables)?;
    let s = &out.report.summary;
    eprintln!(
        "{}: {}/{} λ passed, {} inconclusive, report at {}",
        ctx.config.run_label,
        s.passed,
        s.lambdas,
        s.inconclusive,
        path.display()
    );
    for rec in out.report.records.iter().filter(|r| !r.errors.is_empty()) {
        for e in &rec.errors {
            eprintln!("  λ = {}: {e}", rec.lambda);
        }
    }
    Ok(out.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = split(cli.command);
    let ctx = match prepare(&args) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(command, args, ctx) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
