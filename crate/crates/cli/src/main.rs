//! Command-line entry point: wires configs to the verification suites and
//! emits aligned tables plus machine-readable CSV/JSON artifacts.
//!
//! Exit codes: 0 when every assertion in the invoked suite holds, 1 on any
//! bound violation or counterexample mismatch (the violating instance is
//! serialized to stderr), 2 on usage or configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use auclab_core::accuracy;
use auclab_core::boost;
use auclab_core::consistency;
use auclab_core::dist::DiscreteDistribution;
use auclab_core::loss::SurrogateLoss;
use auclab_core::optim::OptimizerConfig;
use auclab_core::regret;

mod table;

#[derive(Parser)]
#[command(
    name = "auclab",
    about = "Numerical laboratory for pairwise AUC surrogate losses",
    version
)]
struct Cli {
    /// Emit reports as JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    /// Optimizer configuration file (JSON keys: max_iters, tol, radius, seed).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probe every catalogued loss for calibration on an (eta, eta') grid.
    Calibration(CalibrationArgs),
    /// Verify one of the three-point inconsistency constructions.
    Counterexample(CounterexampleArgs),
    /// Compare full minimization against the pointwise lower bound.
    Lemma2(Lemma2Args),
    /// Check closed-form pointwise attainment for exp and logistic.
    Attainment(AttainmentArgs),
    /// Run the square-root regret-bound trials.
    Regret(RegretArgs),
    /// Run the linear regret-bound trials on realizable distributions.
    Realizable(RealizableArgs),
    /// Run the ranking/classification bridge inequalities.
    Bridge(BridgeArgs),
    /// Train both boosters across a sample-size ladder.
    Boost(BoostArgs),
}

#[derive(Args)]
struct CalibrationArgs {
    /// Restrict to a single loss (selection grammar, e.g. "qhinge:2").
    #[arg(long)]
    loss: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 25)]
    resolution: usize,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Which construction to run.
    #[arg(value_parser = ["hinge", "absolute"])]
    construction: String,
    /// Conditional probabilities eta1,eta2,eta3.
    #[arg(long, value_name = "E1,E2,E3")]
    etas: String,
}

#[derive(Args)]
struct Lemma2Args {
    /// Distribution file (JSON {"marginal": [...], "eta": [...]}).
    #[arg(long, value_name = "FILE")]
    dist: Option<PathBuf>,
}

#[derive(Args)]
struct AttainmentArgs {
    #[arg(long, value_name = "FILE")]
    dist: Option<PathBuf>,
}

#[derive(Args)]
struct RegretArgs {
    /// Loss to test; the general square-root bound exists for exp and
    /// logistic only.
    #[arg(long)]
    loss: String,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run the realizable-setting suite instead of the general one.
    #[arg(long)]
    realizable: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RealizableArgs {
    #[arg(long)]
    loss: String,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BridgeArgs {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoostArgs {
    /// Comma-separated sample-size ladder.
    #[arg(long, default_value = "100,1000,10000")]
    sizes: String,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// A failed run, with the exit code it maps to.
enum Failure {
    /// Usage or configuration problem (exit 2).
    Usage(String),
    /// A suite assertion failed (exit 1); carries the serialized evidence.
    Violation(String),
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

type RunResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// AUCLAB_THREADS caps the worker pool; trial outputs are ordered by index
/// regardless of parallelism.
fn configure_threads() {
    if let Ok(v) = std::env::var("AUCLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> RunResult {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Calibration(args) => run_calibration(args, cli.json),
        Command::Counterexample(args) => run_counterexample(args, &cfg, cli.json),
        Command::Lemma2(args) => run_lemma2(args, &cfg, cli.json),
        Command::Attainment(args) => run_attainment(args, cli.json),
        Command::Regret(args) => run_regret(args, &cfg, cli.json),
        Command::Realizable(args) => {
            run_realizable(args.loss, args.trials, args.seed, args.out, &cfg, cli.json)
        }
        Command::Bridge(args) => run_bridge(args, &cfg, cli.json),
        Command::Boost(args) => run_boost(args, cli.json),
    }
}

fn load_config(path: Option<&Path>) -> Result<OptimizerConfig, Failure> {
    let Some(path) = path else {
        return Ok(OptimizerConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
}

fn load_dist(path: Option<&Path>) -> Result<DiscreteDistribution, Failure> {
    match path {
        None => Ok(DiscreteDistribution::uniform(vec![0.4, 0.45, 0.55]).expect("valid fixture")),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!("cannot read distribution {}: {e}", path.display()))
            })?;
            DiscreteDistribution::from_json(&text).map_err(|e| {
                Failure::usage(format!("bad distribution {}: {e}", path.display()))
            })
        }
    }
}

fn parse_loss(spec: &str) -> Result<SurrogateLoss, Failure> {
    spec.parse::<SurrogateLoss>().map_err(|e| Failure::usage(e.to_string()))
}

fn write_artifact(path: &Path, contents: &str) -> RunResult {
    fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn fmt(v: f64) -> String {
    format!("{v:.6e}")
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_calibration(args: CalibrationArgs, json: bool) -> RunResult {
    if args.resolution < 3 {
        return Err(Failure::usage("calibration needs --resolution >= 3"));
    }
    let losses = match args.loss {
        Some(spec) => vec![parse_loss(&spec)?],
        None => SurrogateLoss::catalogue(),
    };
    let reports: Vec<_> = losses
        .iter()
        .map(|l| consistency::calibration_check(l, args.resolution))
        .collect();
    if json {
        print_json(&reports);
    } else {
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.loss.to_string(),
                    r.grid.len().to_string(),
                    fmt(r.min_margin),
                    r.calibrated.to_string(),
                ]
            })
            .collect();
        table::print(&["loss", "grid cells", "min margin", "calibrated"], &rows);
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.calibrated).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(
            serde_json::to_string(&failed).expect("reports serialize"),
        ))
    }
}

fn parse_etas(spec: &str) -> Result<(f64, f64, f64), Failure> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(Failure::usage("--etas expects three comma-separated probabilities"));
    }
    let mut vals = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|_| Failure::usage(format!("bad eta value {p:?}")))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn run_counterexample(args: CounterexampleArgs, cfg: &OptimizerConfig, json: bool) -> RunResult {
    let (e1, e2, e3) = parse_etas(&args.etas)?;
    let report = match args.construction.as_str() {
        "hinge" => consistency::hinge_counterexample(e1, e2, e3, cfg),
        "absolute" => consistency::absolute_counterexample(e1, e2, e3, cfg),
        other => return Err(Failure::usage(format!("unknown construction {other:?}"))),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;

    if json {
        print_json(&report);
    } else {
        let rows = vec![
            vec!["construction".into(), report.construction.to_string()],
            vec!["etas".into(), format!("{:?}", report.etas)],
            vec!["constraints_ok".into(), report.constraints_ok.to_string()],
            vec!["closed_form_optimum".into(), fmt(report.closed_form_optimum)],
            vec!["numeric_optimum".into(), fmt(report.numeric_optimum)],
            vec!["suboptimal_value".into(), fmt(report.suboptimal_value)],
            vec!["strict_gap".into(), fmt(report.strict_gap)],
            vec!["persistent_auc_regret".into(), fmt(report.persistent_auc_regret)],
        ];
        table::print(&["field", "value"], &rows);
    }

    if !report.constraints_ok {
        return Err(Failure::Violation(format!(
            "constraints violated for etas {:?}",
            report.etas
        )));
    }
    let closed_ok = (report.closed_form_optimum - report.numeric_optimum).abs() <= 1e-8;
    if !closed_ok || report.strict_gap <= 0.0 || report.persistent_auc_regret <= 0.0 {
        return Err(Failure::Violation(
            serde_json::to_string(&report).expect("report serializes"),
        ));
    }
    Ok(())
}

fn run_lemma2(args: Lemma2Args, cfg: &OptimizerConfig, json: bool) -> RunResult {
    let d = load_dist(args.dist.as_deref())?;
    // strict gap expected for the four pointwise-incompatible losses,
    // equality for the two with pointwise attainment
    let strict = [
        SurrogateLoss::Hinge,
        SurrogateLoss::Absolute,
        SurrogateLoss::LeastSquare,
        SurrogateLoss::LeastSquareHinge,
    ];
    let equal = [SurrogateLoss::Exponential, SurrogateLoss::Logistic];

    #[derive(serde::Serialize)]
    struct Row {
        loss: SurrogateLoss,
        inf_full: f64,
        pointwise_bound: f64,
        gap: f64,
        expect: &'static str,
        ok: bool,
    }

    let mut rows = Vec::new();
    for (losses, expect) in [(&strict[..], "gap > 1e-6"), (&equal[..], "gap <= 1e-8")] {
        for loss in losses {
            let g = consistency::lemma2_gap_check(loss, &d, cfg)
                .map_err(|e| Failure::usage(e.to_string()))?;
            let ok = if expect.starts_with("gap >") { g.gap > 1e-6 } else { g.gap <= 1e-8 };
            rows.push(Row {
                loss: *loss,
                inf_full: g.inf_full,
                pointwise_bound: g.pointwise_bound,
                gap: g.gap,
                expect,
                ok,
            });
        }
    }

    if json {
        print_json(&rows);
    } else {
        let trows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.loss.to_string(),
                    fmt(r.inf_full),
                    fmt(r.pointwise_bound),
                    fmt(r.gap),
                    r.expect.to_string(),
                    r.ok.to_string(),
                ]
            })
            .collect();
        table::print(
            &["loss", "inf full", "pointwise bound", "gap", "expected", "ok"],
            &trows,
        );
    }
    if rows.iter().all(|r| r.ok) {
        Ok(())
    } else {
        Err(Failure::Violation("gap expectations not met".into()))
    }
}

fn run_attainment(args: AttainmentArgs, json: bool) -> RunResult {
    let d = load_dist(args.dist.as_deref())?;

    #[derive(serde::Serialize)]
    struct Row {
        loss: SurrogateLoss,
        constructed_risk: f64,
        pointwise_bound: f64,
        ok: bool,
    }

    let mut rows = Vec::new();
    for loss in [SurrogateLoss::Exponential, SurrogateLoss::Logistic] {
        let r = consistency::pointwise_attainment(&d, &loss)
            .map_err(|e| Failure::usage(e.to_string()))?;
        rows.push(Row {
            loss,
            constructed_risk: r.constructed_risk,
            pointwise_bound: r.pointwise_bound,
            ok: (r.constructed_risk - r.pointwise_bound).abs() <= 1e-9,
        });
    }
    if json {
        print_json(&rows);
    } else {
        let trows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.loss.to_string(),
                    fmt(r.constructed_risk),
                    fmt(r.pointwise_bound),
                    r.ok.to_string(),
                ]
            })
            .collect();
        table::print(&["loss", "constructed risk", "pointwise bound", "ok"], &trows);
    }
    if rows.iter().all(|r| r.ok) {
        Ok(())
    } else {
        Err(Failure::Violation("closed-form attainment mismatch".into()))
    }
}

fn checks_to_csv(checks: &[regret::BoundCheck]) -> String {
    let mut out = String::from("trial,seed,n,loss,lhs,rhs,slack\n");
    for c in checks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.trial, c.trial_seed, c.n, c.loss, c.lhs, c.rhs, c.slack
        ));
    }
    out
}

fn summarize_bounds(
    name: &str,
    checks: &[regret::BoundCheck],
    out: Option<&Path>,
    json: bool,
) -> RunResult {
    if let Some(path) = out {
        write_artifact(path, &checks_to_csv(checks))?;
    }
    let violations = regret::violations(checks);
    if json {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            suite: &'a str,
            trials: usize,
            violations: Vec<&'a regret::BoundCheck>,
            min_slack: f64,
        }
        let min_slack = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        print_json(&Summary { suite: name, trials: checks.len(), violations, min_slack });
        if !regret::violations(checks).is_empty() {
            return Err(Failure::Violation(format!("{name}: bound violations")));
        }
        return Ok(());
    }
    let min_slack = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    println!(
        "{name}: {} trials, {} violations, min slack {}",
        checks.len(),
        violations.len(),
        fmt(min_slack)
    );
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(
            serde_json::to_string(&violations).expect("checks serialize"),
        ))
    }
}

fn run_regret(args: RegretArgs, cfg: &OptimizerConfig, json: bool) -> RunResult {
    let loss = parse_loss(&args.loss)?;
    let seed = effective_seed(args.seed, cfg);
    if args.realizable {
        return run_realizable(args.loss, args.trials, seed, args.out, cfg, json);
    }
    if args.trials < 1 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let checks = match loss {
        SurrogateLoss::Exponential => regret::verify_exp_bound(args.trials, seed),
        SurrogateLoss::Logistic => regret::verify_logistic_bound(args.trials, seed),
        other => {
            return Err(Failure::usage(format!(
                "no general regret bound for {other}; use --realizable"
            )))
        }
    };
    summarize_bounds(&format!("regret[{loss}]"), &checks, args.out.as_deref(), json)
}

fn run_realizable(
    loss: String,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    cfg: &OptimizerConfig,
    json: bool,
) -> RunResult {
    let loss = parse_loss(&loss)?;
    let seed = effective_seed(seed, cfg);
    if trials < 1 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let allowed = matches!(
        loss,
        SurrogateLoss::Exponential
            | SurrogateLoss::Logistic
            | SurrogateLoss::Hinge
            | SurrogateLoss::LeastSquare
            | SurrogateLoss::LeastSquareHinge
            | SurrogateLoss::QNormHinge { .. }
            | SurrogateLoss::GeneralHinge { .. }
    );
    if !allowed {
        return Err(Failure::usage(format!(
            "realizable bound suite does not cover {loss}"
        )));
    }
    let checks = regret::verify_realizable_bounds(loss, trials, seed);
    summarize_bounds(&format!("realizable[{loss}]"), &checks, out.as_deref(), json)
}

fn effective_seed(cli_seed: u64, cfg: &OptimizerConfig) -> u64 {
    if cli_seed == 42 && cfg.seed != 0 {
        cfg.seed
    } else {
        cli_seed
    }
}

fn run_bridge(args: BridgeArgs, cfg: &OptimizerConfig, json: bool) -> RunResult {
    if args.trials < 1 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let seed = effective_seed(args.seed, cfg);
    let checks = accuracy::bridge_suite(args.trials, seed);
    if let Some(path) = &args.out {
        let mut csv = String::from("trial,seed,n,ineq_id,lhs,rhs,slack\n");
        for c in &checks {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.trial, c.trial_seed, c.n, c.ineq, c.lhs, c.rhs, c.slack
            ));
        }
        write_artifact(path, &csv)?;
    }
    let violations = accuracy::chain_violations(&checks);
    if json {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            trials: u64,
            records: usize,
            violations: Vec<&'a accuracy::ChainCheck>,
        }
        print_json(&Summary { trials: args.trials, records: checks.len(), violations });
    } else {
        let mut rows = Vec::new();
        for ineq in ["T9", "T10", "T11a", "T11b", "T11c", "T11d"] {
            let subset: Vec<_> =
                checks.iter().filter(|c| c.ineq.to_string() == ineq).collect();
            let min_slack =
                subset.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
            let nviol = subset.iter().filter(|c| c.is_violation()).count();
            rows.push(vec![
                ineq.to_string(),
                subset.len().to_string(),
                nviol.to_string(),
                fmt(min_slack),
            ]);
        }
        table::print(&["ineq", "trials", "violations", "min slack"], &rows);
    }
    if accuracy::chain_violations(&checks).is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation("bridge inequality violations".into()))
    }
}

fn run_boost(args: BoostArgs, json: bool) -> RunResult {
    let sizes: Result<Vec<usize>, _> =
        args.sizes.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let sizes = sizes.map_err(|_| Failure::usage("bad --sizes list"))?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Failure::usage("--sizes needs positive entries"));
    }
    if args.rounds == 0 || args.trials == 0 {
        return Err(Failure::usage("--rounds and --trials must be positive"));
    }
    let spec = boost::GaussianSpec::default();
    let report =
        boost::equivalence_experiment(&spec, &sizes, args.rounds, args.trials, args.seed);
    if let Some(path) = &args.out {
        let mut csv = String::from(
            "size,trial,seed,auc_ada,auc_rank,auc_gap,auc_ada_train,auc_rank_train,\
             auc_gap_train,acc_err_ada,acc_err_rank_plugin,acc_gap_plugin,\
             acc_err_rank_best,acc_gap_best\n",
        );
        for r in &report.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.size,
                r.trial,
                r.trial_seed,
                r.auc_ada,
                r.auc_rank,
                r.auc_gap,
                r.auc_ada_train,
                r.auc_rank_train,
                r.auc_gap_train,
                r.acc_err_ada,
                r.acc_err_rank_plugin,
                r.acc_gap_plugin,
                r.acc_err_rank_best,
                r.acc_gap_best
            ));
        }
        write_artifact(path, &csv)?;
    }
    if json {
        print_json(&report.summaries);
    } else {
        let rows: Vec<Vec<String>> = report
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.size.to_string(),
                    fmt(s.median_auc_gap),
                    fmt(s.median_acc_gap_plugin),
                    fmt(s.median_acc_gap_best),
                ]
            })
            .collect();
        table::print(
            &["size", "median auc gap", "median acc gap (plug-in)", "median acc gap (best)"],
            &rows,
        );
    }
    // trend acceptance: medians non-increasing along the ladder
    let gaps: Vec<f64> = report.summaries.iter().map(|s| s.median_auc_gap).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if monotone {
        Ok(())
    } else {
        Err(Failure::Violation(format!("auc gap medians not non-increasing: {gaps:?}")))
    }
}
