use std::path::PathBuf;
use std::process::ExitCode;

use aggfw::harness::{self, Algorithm, ExperimentConfig};
use aggfw::oracles::OracleId;
use aggfw::{Error, StepRule};
use clap::{Args, Parser, Subcommand};

/// Distributed Frank-Wolfe experiments on aggregative problems.
///
/// Exit codes: 0 success, 1 config error, 2 invariant failure,
/// 3 oracle non-convergence.
#[derive(Parser)]
#[command(name = "aggfw", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; omitted keys take the reference values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Number of rounds K (overrides `rounds`).
    #[arg(short = 'k', long)]
    rounds: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One run: trace CSV, summary and plot.
    Run {
        #[command(flatten)]
        common: Common,
        /// dfwagt or pga (overrides `algorithm`).
        #[arg(long)]
        algorithm: Option<String>,
    },
    /// Same run under several step-size rules.
    StepsizeStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated rules, e.g. inv_k,inv_k_sq (overrides `study.rules`).
        #[arg(long, value_delimiter = ',')]
        rules: Vec<String>,
    },
    /// Accuracy and subproblem timing across dimensions.
    ScalingStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated dimensions (overrides `scaling.dims`).
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Comma-separated algorithms (overrides `scaling.algorithms`).
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
        /// Use the active-set ℓ1 projection in PGA (sets `pga.slow_projection`).
        #[arg(long)]
        slow_projection: bool,
    },
    /// Per-round invariant checks; exits 2 on any failure.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Scale this row of every mixing matrix by `audit.fault_factor`.
        #[arg(long)]
        inject_fault: Option<usize>,
    },
    /// Oracle micro-benchmarks.
    Bench {
        /// Comma-separated oracle names; default all.
        #[arg(long, value_delimiter = ',')]
        oracles: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Directory for bench.csv.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn config_err(key: &str, message: String) -> Error {
    Error::Config {
        key: key.into(),
        message,
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output.dir = out.clone();
    }
    if let Some(k) = common.rounds {
        config.rounds = k;
    }
    config.validate()?;
    Ok(config)
}

fn parse_algorithm(s: &str) -> Result<Algorithm, Error> {
    Algorithm::from_name(s).ok_or_else(|| config_err("algorithm", format!("unknown algorithm `{s}`")))
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { common, algorithm } => {
            let mut config = load(&common)?;
            if let Some(a) = algorithm {
                config.algorithm = parse_algorithm(&a)?;
            }
            let summary = harness::cmd_run(&config)?;
            print!("{}", summary.to_text());
            summary.audit.into_result()?;
        }
        Command::StepsizeStudy { common, rules } => {
            let config = load(&common)?;
            let names = if rules.is_empty() { config.study.rules.clone() } else { rules };
            let rules = names
                .iter()
                .map(|r| StepRule::parse(r).ok_or_else(|| config_err("study.rules", format!("unknown step rule `{r}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let report = harness::cmd_stepsize_study(&config, &rules)?;
            println!("f_star {}", report.f_star);
            for r in &report.rows {
                println!("{:<16} final_gap {:.6e} rel_err {:.3e}", r.rule.name(), r.final_gap, r.rel_err);
            }
        }
        Command::ScalingStudy {
            common,
            dims,
            algorithms,
            slow_projection,
        } => {
            let mut config = load(&common)?;
            config.pga.slow_projection |= slow_projection;
            let dims = if dims.is_empty() { config.scaling.dims.clone() } else { dims };
            let algorithms = if algorithms.is_empty() {
                config.scaling.algorithms.clone()
            } else {
                algorithms.iter().map(|a| parse_algorithm(a)).collect::<Result<_, _>>()?
            };
            let report = harness::cmd_scaling_study(&config, &dims, &algorithms)?;
            print!("{}", report.to_csv());
        }
        Command::Audit { common, inject_fault } => {
            let mut config = load(&common)?;
            if inject_fault.is_some() {
                config.audit.fault_row = inject_fault;
                config.validate()?;
            }
            let report = harness::cmd_audit(&config)?;
            print!("{report}");
            report.into_result()?;
        }
        Command::Bench {
            oracles,
            dims,
            trials,
            seed,
            out,
        } => {
            let ids = if oracles.is_empty() {
                OracleId::ALL.to_vec()
            } else {
                oracles
                    .iter()
                    .map(|o| OracleId::from_name(o).ok_or_else(|| config_err("oracles", format!("unknown oracle `{o}`"))))
                    .collect::<Result<_, _>>()?
            };
            let stats = harness::cmd_bench(&ids, &dims, trials, seed, out.as_deref())?;
            println!("{}", aggfw::oracles::BenchStats::CSV_HEADER);
            for s in &stats {
                println!("{}", s.csv_row());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
