use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcmdp_harness::aggregate::aggregate;
use pcmdp_harness::config::{parse_doubling, parse_seeds, AlgoKind, EnvKind, ExperimentConfig};
use pcmdp_harness::csv_io::{read_raw, write_aggregate, write_raw};
use pcmdp_harness::runner::run_experiment;
use pcmdp_harness::{scaling, verify, Result};

#[derive(Parser)]
#[command(name = "pcmdp", version, about = "Run and check exogenous-state learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learner on an environment over several seeds and write raw CSV.
    Run(RunArgs),
    /// Average a raw CSV across seeds with 95% intervals.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle and property checks.
    Verify,
    /// Regret-growth sweep on the lower-bound family with slope fits.
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// `a..b` (inclusive) or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// TOML experiment file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    replan_every: Option<u64>,
    /// Trading only: run the reduced instance instead of the full one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    desk_scale: Option<bool>,
    /// Skip exact per-episode regret.
    #[arg(long)]
    no_regret: bool,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, default_value = "lower-bound")]
    family: String,
    #[arg(long = "N", default_value = "2,4,8")]
    n: String,
    /// `a..b` doubles from `a` up to `b`, or a comma list.
    #[arg(long = "K", default_value = "1000..16000")]
    k: String,
    #[arg(long, default_value = "exaq")]
    algo: String,
    #[arg(long, default_value = "1..10")]
    seeds: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(env) = &args.env {
        cfg.env = EnvKind::parse(env)?;
    }
    if let Some(algo) = &args.algo {
        cfg.algo = AlgoKind::parse(algo)?;
    }
    if args.config.is_none() {
        cfg.episodes = ExperimentConfig::for_pair(cfg.env, cfg.algo).episodes;
    }
    if let Some(k) = args.episodes {
        cfg.episodes = k;
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(r) = args.replan_every {
        cfg.replan_every = r;
    }
    if let Some(d) = args.desk_scale {
        cfg.desk_scale = d;
    }
    if args.no_regret {
        cfg.track_regret = false;
    }
    cfg.validate()?;
    let records: Vec<_> = run_experiment(&cfg)?.into_iter().flatten().collect();
    write_raw(&args.out, &records)
}

fn scaling_cmd(args: ScalingArgs) -> Result<()> {
    if args.family != "lower-bound" {
        return Err(pcmdp_harness::HarnessError::UnknownName {
            kind: "family",
            name: args.family,
        });
    }
    let sweep = scaling::ScalingSweep {
        branching: parse_doubling(&args.n)?,
        episodes: parse_doubling(&args.k)?,
        algo: AlgoKind::parse(&args.algo)?,
        seeds: parse_seeds(&args.seeds)?,
        master_seed: 0,
    };
    let table = scaling::run_sweep(&sweep)?;
    let text = scaling::render_csv(&table);
    match args.out {
        Some(path) => std::fs::write(&path, text).map_err(|source| pcmdp_harness::HarnessError::Io { path, source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Aggregate { input, out } => read_raw(&input).and_then(|r| write_aggregate(&out, &aggregate(&r))),
        Command::Verify => verify::run_all().map(|report| {
            print!("{report}");
        }),
        Command::Scaling(args) => scaling_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
