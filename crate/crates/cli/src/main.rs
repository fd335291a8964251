use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use banditlab_core::concentration::{
    bound_report_etc_mm, bound_report_iid, bound_report_mm, Alpha, BoundReport,
    ConcentrationError, IidAlgorithm, RadiusFamily,
};
use banditlab_core::sim::{
    compare_to_bounds, run_one, sweep, verify_concentration, write_csv, write_json,
    with_threads, CoverageConfig, CoverageReport, ExperimentConfig, PolicySpec, Setting, SimError,
    VERSION,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "banditlab", version, about = "Bandit experiments: single runs, sweeps, bounds, coverage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One replication of one policy.
    Run(RunArgs),
    /// Every policy × δ × replication, aggregated.
    Sweep(SweepArgs),
    /// Theoretical decision-time and regret bounds.
    Bounds(BoundsArgs),
    /// Empirical coverage of the anytime radii.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file (`key = value` with `[section]` headers, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "BANDITLAB_THREADS")]
    threads: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Kv,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Policy, e.g. `ucb:2`; defaults to the first configured one.
    #[arg(long)]
    policy: Option<String>,
    /// Position in the `log_inv_delta` grid.
    #[arg(long, default_value_t = 0)]
    delta_index: usize,
    #[arg(long, default_value_t = 0)]
    replication: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Append the bound comparison to JSON output.
    #[arg(long)]
    compare: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// etc, ucb, etc_prime, ucb_mm or etc_mm. Defaults to ucb when --alpha
    /// is given, otherwise to the configured policies.
    #[arg(long)]
    algorithm: Option<String>,
    /// α values (`inf` allowed). Repeatable.
    #[arg(long)]
    alpha: Vec<String>,
    /// δ values; defaults to the configured grid. Repeatable.
    #[arg(long)]
    delta: Vec<f64>,
    #[arg(long)]
    gap: Option<f64>,
    /// Arm variance σ² (iid).
    #[arg(long)]
    var: Option<f64>,
    #[arg(long)]
    sigma_r_sq: Option<f64>,
    #[arg(long)]
    sigma_eps_sq: Option<f64>,
    /// Number of arms (iid).
    #[arg(long)]
    arms: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// iid, mm or both.
    #[arg(long, default_value = "both")]
    family: String,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Horizon of the iid check.
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    /// Horizon of the mean-of-means check.
    #[arg(long, default_value_t = 1_000)]
    mm_horizon: u64,
    #[arg(long, default_value_t = 50)]
    units: usize,
    #[arg(long, default_value_t = 2_000)]
    replications: u64,
    /// Radius multipliers. Repeatable.
    #[arg(long, default_values_t = vec![1.0])]
    scale: Vec<f64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ConcentrationError> for CliError {
    fn from(e: ConcentrationError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    config.apply_overrides(&common.overrides)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(common: &Common, text: &str) -> Result<(), CliError> {
    match &common.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn echo_kv(config: &ExperimentConfig) -> String {
    config.to_kv().lines().map(|l| format!("#! {l}\n")).collect()
}

fn num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn opt_text(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map_or_else(|| "NA".into(), |v| v.to_string())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let config = load_config(&args.common)?;
    let policy: PolicySpec = match &args.policy {
        Some(p) => p.parse()?,
        None => config.policies[0],
    };
    let outcome = run_one(&config, &policy, args.delta_index, args.replication)?;
    let tau = outcome.decision_step.map_or("NoDecision".to_string(), |t| t.to_string());
    let chosen = outcome.chosen_arm.map_or("NoDecision".to_string(), |a| a.to_string());
    let log_inv = config.log_inv_delta[args.delta_index];
    let text = match args.common.format.unwrap_or(Format::Kv) {
        Format::Json => {
            let doc = serde_json::json!({
                "version": VERSION,
                "config": config.to_json(),
                "policy": policy.to_string(),
                "log_inv_delta": log_inv,
                "replication": args.replication,
                "decision_step": outcome.decision_step.map_or(serde_json::json!("NoDecision"), |t| serde_json::json!(t)),
                "chosen_arm": outcome.chosen_arm.map_or(serde_json::json!("NoDecision"), |a| serde_json::json!(a)),
                "correct": outcome.correct,
                "pseudo_regret": num(outcome.pseudo_regret),
                "realized_regret": num(outcome.realized_regret),
                "concentration_held": outcome.concentration_held,
                "steps": outcome.steps,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Kv => {
            let mut s = echo_kv(&config);
            let _ = write!(
                s,
                "policy = {policy}\nlog_inv_delta = {log_inv}\nreplication = {}\ndecision_step = {tau}\n\
                 chosen_arm = {chosen}\ncorrect = {}\npseudo_regret = {}\nrealized_regret = {}\n\
                 concentration_held = {}\nsteps = {}\n",
                args.replication,
                outcome.correct,
                opt_text(Some(outcome.pseudo_regret)),
                opt_text(Some(outcome.realized_regret)),
                outcome.concentration_held,
                outcome.steps,
            );
            s
        }
        Format::Csv => {
            let mut s = echo_kv(&config);
            s.push_str("policy,log_inv_delta,replication,decision_step,chosen_arm,correct,pseudo_regret,realized_regret,concentration_held,steps\n");
            let _ = writeln!(
                s,
                "{policy},{log_inv},{},{tau},{chosen},{},{},{},{},{}",
                args.replication,
                outcome.correct,
                opt_text(Some(outcome.pseudo_regret)),
                opt_text(Some(outcome.realized_regret)),
                outcome.concentration_held,
                outcome.steps,
            );
            s
        }
    };
    emit(&args.common, &text)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let config = load_config(&args.common)?;
    let format = args.common.format.unwrap_or(Format::Csv);
    if format == Format::Kv {
        return Err(CliError::Config("sweep writes csv or json".into()));
    }
    let result = sweep(&config, args.common.threads)?;
    let text = match format {
        Format::Json if args.compare => {
            let mut doc: serde_json::Value =
                serde_json::from_str(&write_json(&result)).expect("own json");
            doc["bounds"] = serde_json::to_value(compare_to_bounds(&config, &result.rows))
                .expect("comparison serializes");
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Json => write_json(&result),
        _ => write_csv(&result),
    };
    emit(&args.common, &text)
}

struct BoundLine {
    algorithm: String,
    alpha: Option<String>,
    delta: f64,
    exact: bool,
    report: Result<BoundReport, ConcentrationError>,
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let config = load_config(&args.common)?;
    let alphas: Vec<Alpha> = args
        .alpha
        .iter()
        .map(|a| a.parse::<Alpha>().map_err(|e| CliError::Config(format!("--alpha {a}: {e}"))))
        .collect::<Result<_, _>>()?;
    let policies: Vec<PolicySpec> = match (&args.algorithm, alphas.is_empty()) {
        (None, true) => config.policies.clone(),
        (alg, _) => {
            let alg = alg.as_deref().unwrap_or("ucb");
            if matches!(alg, "ucb" | "ucb_mm") {
                if alphas.is_empty() {
                    return Err(CliError::Config(format!("{alg} needs --alpha")));
                }
                alphas.iter().map(|a| format!("{alg}:{a}").parse()).collect::<Result<_, _>>()?
            } else {
                vec![alg.parse()?]
            }
        }
    };
    let deltas = if args.delta.is_empty() { config.deltas() } else { args.delta.clone() };
    let gap = args.gap.unwrap_or_else(|| config.gap());
    let sigma_sq = args.var.unwrap_or(config.sigma_sq);
    let sr = args.sigma_r_sq.unwrap_or(config.sigma_r_sq);
    let se = args.sigma_eps_sq.unwrap_or(config.sigma_eps_sq);
    let k = args.arms.unwrap_or(config.means.len());

    let mut lines = Vec::new();
    for policy in &policies {
        for &delta in &deltas {
            for exact in [true, false] {
                let report = match policy {
                    PolicySpec::Etc => bound_report_iid(IidAlgorithm::Etc, delta, gap, sigma_sq, k, exact),
                    PolicySpec::Ucb(a) => {
                        bound_report_iid(IidAlgorithm::Ucb(*a), delta, gap, sigma_sq, k, exact)
                    }
                    PolicySpec::EtcPrime if config.setting == Setting::Unit && args.algorithm.is_none() => {
                        bound_report_mm(Alpha::INFINITY, delta, gap, sr, se, exact, config.mm_scale)
                    }
                    PolicySpec::EtcPrime => bound_report_iid(
                        IidAlgorithm::Ucb(Alpha::INFINITY),
                        delta,
                        gap,
                        sigma_sq,
                        k,
                        exact,
                    ),
                    PolicySpec::UcbMm(a) => {
                        bound_report_mm(*a, delta, gap, sr, se, exact, config.mm_scale)
                    }
                    PolicySpec::EtcMm => bound_report_etc_mm(delta, gap, sr, se, exact),
                    other => {
                        return Err(CliError::Config(format!("no bounds for `{other}`")));
                    }
                };
                lines.push(BoundLine {
                    algorithm: policy.name().to_string(),
                    alpha: policy.alpha().map(|a| a.to_string()),
                    delta,
                    exact,
                    report,
                });
            }
        }
    }
    // Parameter errors (bad δ, gap, variance) are config errors; a missing
    // exact form or guarantee is reported per line.
    for line in &lines {
        if let Err(e @ (ConcentrationError::Domain { .. } | ConcentrationError::InvalidParameter(_))) =
            &line.report
        {
            return Err(CliError::Config(e.to_string()));
        }
    }
    let text = match args.common.format.unwrap_or(Format::Kv) {
        Format::Json => {
            let rows: Vec<serde_json::Value> = lines
                .iter()
                .map(|l| {
                    let mut v = serde_json::json!({
                        "algorithm": l.algorithm,
                        "alpha": l.alpha,
                        "delta": l.delta,
                        "exact": l.exact,
                    });
                    match &l.report {
                        Ok(r) => {
                            v["c_alpha"] = r.constants.c_alpha.map_or(serde_json::Value::Null, num);
                            v["report"] = serde_json::to_value(r).expect("report");
                        }
                        Err(e) => v["note"] = serde_json::json!(e.to_string()),
                    }
                    v
                })
                .collect();
            let doc = serde_json::json!({"version": VERSION, "config": config.to_json(), "bounds": rows});
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Kv => {
            let mut s = echo_kv(&config);
            for l in &lines {
                let _ = write!(
                    s,
                    "algorithm={} alpha={} delta={} exact={}",
                    l.algorithm,
                    l.alpha.as_deref().unwrap_or("NA"),
                    l.delta,
                    l.exact
                );
                match &l.report {
                    Ok(r) => {
                        let c = &r.constants;
                        let _ = writeln!(
                            s,
                            " decision_time_bound={} regret_bound={} c_alpha={} c1={} c2={} gamma1={} gamma2={}",
                            r.decision_time_bound.map_or("NoFiniteBound".into(), |t| opt_text(Some(t))),
                            opt_text(Some(r.regret_bound)),
                            opt_text(c.c_alpha),
                            opt_text(c.c1),
                            opt_text(c.c2),
                            opt_text(c.gamma1),
                            opt_text(c.gamma2),
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(s, " note=\"{e}\"");
                    }
                }
            }
            s
        }
        Format::Csv => {
            let mut s = echo_kv(&config);
            s.push_str("algorithm,alpha,delta,exact,decision_time_bound,regret_bound,c_alpha,note\n");
            for l in &lines {
                let (t, r, c, note) = match &l.report {
                    Ok(r) => (
                        r.decision_time_bound.map_or("NoFiniteBound".into(), |t| opt_text(Some(t))),
                        opt_text(Some(r.regret_bound)),
                        opt_text(r.constants.c_alpha),
                        String::new(),
                    ),
                    Err(e) => ("NA".into(), "NA".into(), "NA".into(), e.to_string().replace(',', ";")),
                };
                let _ = writeln!(
                    s,
                    "{},{},{},{},{t},{r},{c},{note}",
                    l.algorithm,
                    l.alpha.as_deref().unwrap_or("NA"),
                    l.delta,
                    l.exact
                );
            }
            s
        }
    };
    emit(&args.common, &text)
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let config = load_config(&args.common)?;
    let families: &[&str] = match args.family.as_str() {
        "both" => &["iid", "mm"],
        "iid" => &["iid"],
        "mm" => &["mm"],
        other => return Err(CliError::Config(format!("unknown family `{other}`"))),
    };
    let mut reports: Vec<CoverageReport> = Vec::new();
    for &family in families {
        for &scale in &args.scale {
            let mut cov = match family {
                "iid" => CoverageConfig::iid(config.sigma_sq, args.delta, args.horizon, args.replications),
                _ => CoverageConfig::mean_of_means(
                    config.sigma_r_sq,
                    config.sigma_eps_sq,
                    args.delta,
                    args.units,
                    args.mm_horizon,
                    args.replications,
                ),
            };
            cov.seed = config.seed;
            cov.radius_scale = scale;
            cov.mm_scale = config.mm_scale;
            reports.push(with_threads(args.common.threads, || verify_concentration(&cov))??);
        }
    }
    let name = |f: RadiusFamily| match f {
        RadiusFamily::MeanOfMeans => "mm",
        _ => "iid",
    };
    let text = match args.common.format.unwrap_or(Format::Kv) {
        Format::Json => {
            let doc = serde_json::json!({"version": VERSION, "config": config.to_json(), "coverage": reports});
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Kv => {
            let mut s = echo_kv(&config);
            for r in &reports {
                let _ = writeln!(
                    s,
                    "family={} delta={} scale={} replications={} violation_rate={} delta_tilde={} mc_se={} within_tolerance={}",
                    name(r.family),
                    r.delta,
                    r.radius_scale,
                    r.replications,
                    r.violation_rate,
                    r.delta_tilde,
                    r.monte_carlo_se,
                    r.within_tolerance
                );
            }
            s
        }
        Format::Csv => {
            let mut s = echo_kv(&config);
            s.push_str("family,delta,scale,replications,violation_rate,delta_tilde,mc_se,within_tolerance\n");
            for r in &reports {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    name(r.family),
                    r.delta,
                    r.radius_scale,
                    r.replications,
                    r.violation_rate,
                    r.delta_tilde,
                    r.monte_carlo_se,
                    r.within_tolerance
                );
            }
            s
        }
    };
    emit(&args.common, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("banditlab: config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("banditlab: {msg}");
            ExitCode::from(1)
        }
    }
}
