use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flock::config::MetricName;
use flock::{HarnessError, RunConfig, Suite, EXIT_VERDICT_FAILED};

#[derive(Parser)]
#[command(name = "flock", version, about = "Simulate and verify collision-avoiding flocking particle systems")]
struct Cli {
    /// Worker threads for force evaluation and studies.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output.dir`, then runs/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the root seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's ground metric.
    #[arg(long, value_enum)]
    metric: Option<MetricName>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle system and write moments, snapshots and a manifest.
    Simulate(RunArgs),
    /// Print W1 between two snapshot or discrete-measure files.
    W1 {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricName,
    },
    /// Run a verification suite and write its report.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Sample the model assumptions on the configured ball.
    CheckAssumptions(RunArgs),
}

fn load(args: &RunArgs, command: &str) -> Result<(RunConfig, PathBuf), HarnessError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(metric) = args.metric {
        cfg.metric = metric;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir(command));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, out) = load(&args, "simulate")?;
            let outcome = flock::simulate(&cfg, &out)?;
            println!("{} snapshots written to {}", outcome.trajectory.len(), outcome.dir.display());
            Ok(true)
        }
        Command::W1 { a, b, metric } => {
            let d = flock::w1_files(&a, &b, metric == MetricName::Sum)?;
            println!("{d:.12}");
            Ok(true)
        }
        Command::Verify { run, suite } => {
            let (cfg, out) = load(&run, "verify")?;
            let outcome = flock::verify(&cfg, suite, &out)?;
            for v in &outcome.verdicts {
                println!("{} {:<12} margin {:+.3e}  {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.margin, v.detail);
            }
            Ok(outcome.pass)
        }
        Command::CheckAssumptions(args) => {
            let (cfg, out) = load(&args, "check-assumptions")?;
            let result = flock::check_assumptions(&cfg, &out);
            if let Ok(report) = &result {
                for c in &report.checks {
                    println!("{} {:<20} worst {:e}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.worst, c.detail);
                }
            }
            result.map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERDICT_FAILED as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
