use std::path::PathBuf;
use std::process::ExitCode;

use bhcache_cli::config::{ExperimentConfig, Strategy};
use bhcache_cli::{csv_string, run_sweep, write_results, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bhcache", version, about = "Backhaul-aware caching placement experiments")]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for results.csv and placement dumps; CSV goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides sim.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SCA at the scenario's backhaul delay.
    Optimize,
    /// Evaluate mpc, mpc-paper-formula and lcd at the scenario's backhaul delay.
    Baselines,
    /// Enumerate every replica vector; fails if over the enumeration cap.
    Exhaustive,
    /// Simulate one strategy at the scenario's backhaul delay.
    Simulate {
        #[arg(long, default_value = "sca")]
        strategy: String,
        /// Used when sim.trials is 0.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Run every delta and strategy of the sweep block.
    Sweep,
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let path = args
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    let single = |config: &mut ExperimentConfig, strategies: Vec<Strategy>| {
        config.sweep.delta_values = vec![config.scenario.backhaul_delay_slots];
        config.sweep.strategies = strategies;
    };
    let exhaustive_only = matches!(args.command, Command::Exhaustive);
    match args.command {
        Command::Optimize => single(&mut config, vec![Strategy::Sca]),
        Command::Baselines => single(
            &mut config,
            vec![Strategy::Mpc, Strategy::MpcLiteral, Strategy::Lcd],
        ),
        Command::Exhaustive => {
            single(&mut config, vec![Strategy::Exhaustive]);
            config.sim.trials = 0;
        }
        Command::Simulate { strategy, trials } => {
            let s = Strategy::parse(&strategy)
                .ok_or_else(|| CliError::Config(format!("unknown strategy {strategy:?}")))?;
            single(&mut config, vec![s]);
            if config.sim.trials == 0 {
                config.sim.trials = trials;
            }
        }
        Command::Sweep => {}
    }

    let table = run_sweep(&config)?;
    if exhaustive_only {
        if let Some(bhcache_cli::Outcome::Refused { required, cap }) =
            table.rows.first().map(|r| &r.outcome)
        {
            return Err(bhcache::Error::EnumerationCap {
                required: *required,
                cap: *cap,
            }
            .into());
        }
    }
    match args.out {
        Some(dir) => {
            let written = write_results(&table, &config.scenario()?, &dir)?;
            eprintln!("wrote {} files to {}", written.len(), dir.display());
        }
        None => print!("{}", csv_string(&table)),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
