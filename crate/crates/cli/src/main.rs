use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinflow_cli::commands;
use kinflow_cli::error::{EXIT_CERTIFICATE, EXIT_OK};
use kinflow_cli::{CliError, CliResult, RunConfig};

/// Particle solver for a mean-field kinetic equation with a cut-off
/// interaction force.
#[derive(Parser)]
#[command(name = "kinflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward run: manifest, diagnostics CSV, snapshots.
    Simulate(Common),
    /// Forward run plus the certificate suite; exit 1 if any certificate fails.
    Invariants(Common),
    /// Paired run from two nearby initial data with a W1 report.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Second configuration (only its density may differ); defaults to
        /// shifting the first density by `stability.shift`.
        #[arg(long)]
        config_b: Option<PathBuf>,
    },
    /// Mean-field refinement study over `converge.sizes`.
    Converge(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            c.run.seed = seed;
        }
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        Ok(c)
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("KINFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("KINFLOW_THREADS: expected a positive integer, found `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> CliResult<i32> {
    init_threads()?;
    match cli.command {
        Command::Simulate(common) => {
            let dir = commands::simulate(&common.load()?, common.force)?;
            println!("wrote {}", dir.display());
            Ok(EXIT_OK)
        }
        Command::Invariants(common) => {
            let (dir, report) = commands::invariants(&common.load()?, common.force)?;
            print!("{}", report.table());
            println!("wrote {}", dir.display());
            Ok(if report.passed { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Stability { common, config_b } => {
            let config = common.load()?;
            let b = config_b.as_deref().map(RunConfig::from_path).transpose()?;
            let (dir, out) = commands::stability(&config, b.as_ref(), common.force)?;
            let r = &out.report;
            println!(
                "W1(0) = {:.6e}  W1(t) = {:.6e}  bound = {:.6e}  L_K = {:.6}  {}",
                r.w1_initial,
                r.w1_final,
                r.bound,
                r.lipschitz,
                if out.holds { "PASS" } else { "FAIL" }
            );
            println!("wrote {}", dir.display());
            Ok(if out.holds { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Converge(common) => {
            let (dir, out) = commands::converge(&common.load()?, common.force)?;
            println!("{:>6} {:>6} {:>14} {:>14}", "n_low", "n_high", "median W1(0)", "median W1(t)");
            for p in &out.study.pairs {
                println!(
                    "{:>6} {:>6} {:>14.6e} {:>14.6e}",
                    p.n_low, p.n_high, p.median_initial, p.median_final
                );
            }
            println!(
                "non-increasing in {} of {} comparisons: {}",
                out.non_increasing,
                out.comparisons,
                if out.trend_holds { "PASS" } else { "FAIL" }
            );
            println!("wrote {}", dir.display());
            Ok(if out.trend_holds { EXIT_OK } else { EXIT_CERTIFICATE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kinflow: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
