//! softctl <task> --config FILE
//! softctl <task> --mdp FILE --out FILE [task flags]
//!
//! SOFTCTL_THREADS caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxent_control::learning::EstimatorKind;
use maxent_control::runner::{
    self, ActorCriticParams, ExperimentConfig, IrlParams, NoParams, PgParams, SoftQParams,
    SolveSoftParams, TaskParams, EXIT_INVALID_INPUT,
};
use maxent_control::Error;

#[derive(Parser)]
#[command(name = "softctl", version, about = "Tabular max-ent control experiments")]
struct Cli {
    #[command(subcommand)]
    task: Task,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; excludes every other flag
    #[arg(long, conflicts_with_all = ["mdp", "out", "seed"])]
    config: Option<PathBuf>,
    #[arg(long)]
    mdp: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Task {
    /// Backward messages: log_q, log_v, policy (JSON)
    SolveExact(#[command(flatten)] Common),
    /// Soft value iteration: q, v, policy (JSON)
    SolveSoft {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        stationary: bool,
    },
    /// Exact vs variational Q-rows and policies (CSV)
    CompareRisk(#[command(flatten)] Common),
    /// Max-ent policy gradient
    Pg {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        /// Monte Carlo episodes per step; exact expectation when absent
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Tabular soft actor-critic
    ActorCritic {
        #[command(flatten)]
        common: Common,
        /// Actor and critic step size
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Expected soft Q-learning sweeps
    SoftQ {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        sweeps: Option<usize>,
    },
    /// Max-ent IRL with linear rewards
    Irl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        demos: Option<PathBuf>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Every feasible trajectory with its posterior log-probability (CSV)
    OracleDump(#[command(flatten)] Common),
}

fn required<T>(value: Option<T>, flag: &str) -> maxent_control::Result<T> {
    value.ok_or_else(|| Error::Config(format!("--{flag} is required without --config")))
}

fn build(common: Common, params: impl FnOnce() -> maxent_control::Result<TaskParams>) -> maxent_control::Result<ExperimentConfig> {
    let expected = params()?;
    match common.config {
        Some(path) => {
            let config = ExperimentConfig::load(&path)?;
            if config.task != expected_kind(&expected) {
                return Err(Error::Config(format!(
                    "{} holds a {} config",
                    path.display(),
                    config.task.name()
                )));
            }
            Ok(config)
        }
        None => ExperimentConfig::new(
            required(common.mdp, "mdp")?,
            required(common.out, "out")?,
            common.seed,
            expected,
        ),
    }
}

fn expected_kind(params: &TaskParams) -> runner::TaskKind {
    use runner::TaskKind as K;
    match params {
        TaskParams::SolveExact(_) => K::SolveExact,
        TaskParams::SolveSoft(_) => K::SolveSoft,
        TaskParams::CompareRisk(_) => K::CompareRisk,
        TaskParams::Pg(_) => K::Pg,
        TaskParams::ActorCritic(_) => K::ActorCritic,
        TaskParams::SoftQ(_) => K::SoftQ,
        TaskParams::Irl(_) => K::Irl,
        TaskParams::OracleDump(_) => K::OracleDump,
    }
}

fn config_from(task: Task) -> maxent_control::Result<ExperimentConfig> {
    match task {
        Task::SolveExact(c) => build(c, || Ok(TaskParams::SolveExact(NoParams {}))),
        Task::CompareRisk(c) => build(c, || Ok(TaskParams::CompareRisk(NoParams {}))),
        Task::OracleDump(c) => build(c, || Ok(TaskParams::OracleDump(NoParams {}))),
        Task::SolveSoft {
            common,
            temperature,
            discount,
            stationary,
        } => build(common, || {
            let d = SolveSoftParams::default();
            Ok(TaskParams::SolveSoft(SolveSoftParams {
                temperature: temperature.unwrap_or(d.temperature),
                discount: discount.unwrap_or(d.discount),
                stationary,
                ..d
            }))
        }),
        Task::Pg {
            common,
            rate,
            iters,
            samples,
        } => build(common, || {
            let d = PgParams::default();
            Ok(TaskParams::Pg(PgParams {
                rate: rate.unwrap_or(d.rate),
                iters: iters.unwrap_or(d.iters),
                estimator: if samples.is_some() {
                    EstimatorKind::MonteCarlo
                } else {
                    EstimatorKind::ExactExpectation
                },
                samples: samples.unwrap_or(d.samples),
            }))
        }),
        Task::ActorCritic {
            common,
            rate,
            iters,
        } => build(common, || {
            let d = ActorCriticParams::default();
            Ok(TaskParams::ActorCritic(ActorCriticParams {
                actor_rate: rate.unwrap_or(d.actor_rate),
                critic_rate: rate.unwrap_or(d.critic_rate),
                iters: iters.unwrap_or(d.iters),
            }))
        }),
        Task::SoftQ {
            common,
            rate,
            sweeps,
        } => build(common, || {
            let d = SoftQParams::default();
            Ok(TaskParams::SoftQ(SoftQParams {
                rate: rate.unwrap_or(d.rate),
                sweeps: sweeps.unwrap_or(d.sweeps),
            }))
        }),
        Task::Irl {
            common,
            features,
            demos,
            rate,
            iters,
            l2,
        } => {
            let from_file = common.config.is_some();
            build(common, || {
                // With --config the block comes from the file; placeholders only
                // select the task kind.
                let path = |p: Option<PathBuf>, flag| {
                    if from_file {
                        Ok(p.unwrap_or_default())
                    } else {
                        required(p, flag)
                    }
                };
                let d = IrlParams::new(path(features, "features")?, path(demos, "demos")?);
                Ok(TaskParams::Irl(IrlParams {
                    rate: rate.unwrap_or(d.rate),
                    iters: iters.unwrap_or(d.iters),
                    l2: l2.unwrap_or(d.l2),
                    ..d
                }))
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };

    if let Some(n) = std::env::var("SOFTCTL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let result = config_from(cli.task).and_then(|config| runner::run(&config));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("softctl: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
