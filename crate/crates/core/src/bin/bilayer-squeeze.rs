use std::path::PathBuf;
use std::process::ExitCode;

use bilayer_squeeze::harness::{self, ExperimentKind, RunConfig, RunOptions, Scale};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bilayer-squeeze",
    version,
    about = "Two-mode squeezing in power-law bilayer spin models"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root (default: `output` from the config, else ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "BILAYER_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "desk")]
    scale: Scale,
    /// Recompute cached results.
    #[arg(long, global = true)]
    force: bool,
    /// Run even when the cost estimate exceeds the budget.
    #[arg(long, global = true)]
    allow_long: bool,
}

#[derive(Subcommand)]
enum Command {
    /// dTWA ensembles over a lattice sweep.
    Simulate(ConfigArg),
    /// Unstable modes and the Bogoliubov transition.
    Bogoliubov(ConfigArg),
    /// Exact collective dynamics with XY anisotropy.
    Exact(ConfigArg),
    /// Scaling collapse of minimal variances and time curves.
    Collapse(ConfigArg),
    /// Size exponent against aspect ratio and the transition point.
    PhaseDiagram(ConfigArg),
    /// Size exponent at fixed layer separation.
    FixedSpacing(ConfigArg),
    /// A named experiment.
    Recipe {
        /// fig1, universality, anisotropy, fixed-spacing or bogoliubov
        name: String,
        /// Print the recipe configs as TOML instead of running them.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> bilayer_squeeze::Result<()> {
    let c = cli.common;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| bilayer_squeeze::Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let options = |config_out: Option<PathBuf>| {
        let mut o = RunOptions::new(c.out.clone().or(config_out).unwrap_or_else(|| PathBuf::from("runs")));
        o.force = c.force;
        o.allow_long = c.allow_long;
        o
    };
    let (kind, arg) = match cli.command {
        Command::Recipe { name, print_config } => {
            if print_config {
                for cfg in harness::recipe(&name, c.scale)? {
                    println!("{}", cfg.to_toml());
                }
                return Ok(());
            }
            for r in harness::run_recipe(&name, c.scale, c.seed.unwrap_or(0), &options(None))? {
                println!("{}\n{}", r.dir.display(), r.summary);
            }
            return Ok(());
        }
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Bogoliubov(a) => (ExperimentKind::Bogoliubov, a),
        Command::Exact(a) => (ExperimentKind::Exact, a),
        Command::Collapse(a) => (ExperimentKind::Collapse, a),
        Command::PhaseDiagram(a) => (ExperimentKind::PhaseDiagram, a),
        Command::FixedSpacing(a) => (ExperimentKind::FixedSpacing, a),
    };
    let mut config = RunConfig::load(&arg.config)?;
    if config.kind != kind {
        return Err(bilayer_squeeze::Error::InvalidConfig(format!(
            "{} declares kind = {:?} but the {} subcommand was used",
            arg.config.display(),
            config.kind.name(),
            kind.name()
        )));
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    let report = harness::run(&config, &options(config.output.clone()))?;
    println!("{}\n{}", report.dir.display(), report.summary);
    Ok(())
}
