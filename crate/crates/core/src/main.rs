use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reviewsim::engine::RunOptions;
use reviewsim::harness::{
    exact_report, load_scenario, run_preset, simulate, standard_scenario, HarnessError, ReportCsv, RunParams,
    ScenarioFile, DEFAULT_PRESET_ROUNDS,
};
use reviewsim::planner::{Bound, GuaranteeSpec};
use reviewsim::quality::Selectivity;
use reviewsim::strategy::compare_strategies;

#[derive(Parser)]
#[command(name = "reviewsim", version, about = "Accuracy of score-based peer review")]
struct Cli {
    /// Suppress progress messages on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Tight,
    Loose,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Hetero,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the accuracy metrics for a scenario file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output CSV; defaults to the file's `run.out`, then standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact pmf of the accuracy metrics for small fixed-quality scenarios.
    Exact {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rounds needed for a pmf accuracy guarantee.
    Plan {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "tight")]
        bound: BoundArg,
        /// Lower bound on every nonzero pmf entry, for the loose bound.
        #[arg(long)]
        p_floor: Option<f64>,
    },
    /// Re-run one of the experiment sweeps.
    Reproduce {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = DEFAULT_PRESET_ROUNDS)]
        rounds: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a review strategy with the homogeneous plan.
    Compare {
        #[arg(long, value_enum, default_value = "hetero")]
        strategy: StrategyArg,
        #[arg(long)]
        config: PathBuf,
        /// Average reviews per paper; defaults to the scenario's `n`.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a scenario file for the standard 200-paper setting.
    Template {
        #[arg(long, value_enum, default_value = "medium")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    High,
    Medium,
    Low,
    Random,
}

impl From<RegimeArg> for Selectivity {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::High => Selectivity::High,
            RegimeArg::Medium => Selectivity::Medium,
            RegimeArg::Low => Selectivity::Low,
            RegimeArg::Random => Selectivity::Random,
        }
    }
}

fn emit(csv: &ReportCsv, out: Option<PathBuf>) -> Result<(), HarnessError> {
    match out {
        Some(path) => csv.write(&path),
        None => {
            print!("{}", csv.render());
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let progress = !cli.quiet;
    match cli.command {
        Command::Simulate {
            config,
            rounds,
            seed,
            workers,
            out,
        } => {
            let file = load_scenario(&config)?;
            let csv = simulate(&file, rounds, seed, workers, progress)?;
            emit(&csv, out.or(file.run.out))
        }
        Command::Exact { config, out } => {
            let file = load_scenario(&config)?;
            let csv = exact_report(&file.scenario)?;
            emit(&csv, out.or(file.run.out))
        }
        Command::Plan {
            epsilon,
            delta,
            k,
            bound,
            p_floor,
        } => {
            let bound = match (bound, p_floor) {
                (BoundArg::Tight, _) => Bound::Tight,
                (BoundArg::Loose, Some(p_floor)) => Bound::Loose { p_floor },
                (BoundArg::Loose, None) => {
                    return Err(HarnessError::Validation("loose bound needs --p-floor".into()))
                }
            };
            let spec = GuaranteeSpec::new(epsilon, delta, bound, k)?;
            println!("{}", spec.required_rounds());
            Ok(())
        }
        Command::Reproduce {
            preset,
            rounds,
            seed,
            workers,
            out,
        } => {
            let csv = run_preset(&preset, rounds, seed, RunOptions { workers, progress })?;
            emit(&csv, out)
        }
        Command::Compare {
            strategy: StrategyArg::Hetero,
            config,
            n,
            rounds,
            seed,
            workers,
            out,
        } => {
            let file = load_scenario(&config)?;
            let mut scenario = file.scenario.clone();
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let n = n.unwrap_or(scenario.reviews.n());
            let rounds = rounds
                .or_else(|| file.run.resolved_rounds())
                .ok_or_else(|| HarnessError::Validation("rounds given in the file or on the command line".into()))?;
            let report = compare_strategies(
                &scenario,
                n,
                rounds,
                RunOptions {
                    workers: workers.or(file.run.workers),
                    progress,
                },
            )?;
            let mut csv = ReportCsv::default();
            csv.comment(format!("compare hetero, n = {n}"));
            csv.describe("scenario", &scenario);
            csv.push_improvement("scenario", &report, scenario.seed);
            emit(&csv, out.or(file.run.out))
        }
        Command::Template { regime, n, seed, rounds } => {
            let file = ScenarioFile {
                scenario: standard_scenario(regime.into(), n, seed),
                run: RunParams {
                    rounds: Some(rounds),
                    ..RunParams::default()
                },
            };
            file.validate()?;
            println!("{}", file.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
