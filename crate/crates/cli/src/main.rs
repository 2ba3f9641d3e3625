use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pg_bandits::experiment::{emit_outputs, run_experiment, Algorithm, ExperimentConfig};
use pg_bandits::{Baseline, Error, ScheduleKind};

/// Run a bandit policy-gradient experiment and write its result files.
///
/// Flags override the matching fields of `--config`. Without a config file,
/// `--algorithm`, `--means`, `--alpha0` and `--horizon` are required.
#[derive(Debug, Parser)]
#[command(name = "pg-bandits", version)]
struct Args {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// softmax_pg, samba, softmax_ode or samba_ode.
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated arm means, e.g. 0.3,0.7.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// constant, inverse_log_time or state_dependent.
    #[arg(long)]
    schedule: Option<String>,
    /// zero, running_mean, or a number for a fixed baseline.
    #[arg(long)]
    baseline: Option<String>,
    /// Step count (stochastic) or end time (ODE).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one CSV per replication.
    #[arg(long)]
    per_rep: bool,
    /// Write regret.svg.
    #[arg(long)]
    plot: bool,
}

fn parse_baseline(text: &str) -> Result<Baseline, Error> {
    match text {
        "zero" => Ok(Baseline::Zero),
        "running_mean" => Ok(Baseline::RunningMean),
        other => other
            .strip_prefix("fixed:")
            .unwrap_or(other)
            .parse()
            .map(Baseline::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("unknown baseline {other:?}"))),
    }
}

fn build_config(args: Args) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let missing =
                |flag: &str| Error::InvalidConfig(format!("{flag} is required without --config"));
            let algorithm: Algorithm = args
                .algorithm
                .as_deref()
                .ok_or_else(|| missing("--algorithm"))?
                .parse()?;
            ExperimentConfig::new(
                algorithm,
                args.means.clone().ok_or_else(|| missing("--means"))?,
                args.alpha0.ok_or_else(|| missing("--alpha0"))?,
                args.horizon.ok_or_else(|| missing("--horizon"))?,
            )
        }
    };
    if let Some(a) = &args.algorithm {
        config.algorithm = a.parse()?;
    }
    if let Some(m) = args.means {
        config.instance_means = m;
    }
    if let Some(a) = args.alpha0 {
        config.alpha0 = a;
    }
    if let Some(s) = &args.schedule {
        config.schedule = s.parse::<ScheduleKind>()?;
    }
    if let Some(b) = &args.baseline {
        config.baseline = parse_baseline(b)?;
    }
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(r) = args.replications {
        config.replications = r;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    config.per_rep |= args.per_rep;
    config.plot |= args.plot;
    Ok(config)
}

fn error_json(err: &Error) -> serde_json::Value {
    let mut value = serde_json::json!({
        "kind": err.kind(),
        "message": err.to_string(),
    });
    if let Error::Replication {
        replication,
        step,
        source,
    } = err
    {
        value["replication"] = (*replication).into();
        value["step"] = (*step).into();
        value["cause"] = source.kind().into();
    }
    value
}

fn run(args: Args) -> Result<(), Error> {
    let config = build_config(args)?;
    let result = run_experiment(&config)?;
    for path in emit_outputs(&result, &config.output_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::FAILURE
        }
    }
}
