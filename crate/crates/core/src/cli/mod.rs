//! The `gdp` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid scenario or arguments, 3 unmet
//! hypotheses or preconditions, 4 internal inconsistency. Reports go to
//! stdout as JSON, errors to stderr as JSON.

mod batch;

use crate::duality::{self, DualMode, Verdict};
use crate::error::{Error, Result};
use crate::gooddeal;
use crate::oracle::{self, GridSpec, DEAL_SCALES};
use crate::pricing;
use crate::report::{self, render};
use crate::scenario::{load_scenario, Query, Scenario};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

/// Largest primal/dual gap tolerated when the duality hypotheses hold.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "gdp", version, about = "Good-deal pricing on finite state spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct PayoffArgs {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Payoff as a JSON array, e.g. "[-2,1]".
    #[arg(allow_hyphen_values = true)]
    payoff: Option<String>,
    #[arg(long = "payoff", value_name = "JSON", allow_hyphen_values = true)]
    payoff_flag: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Superreplication price and market-consistent price interval.
    Price(PayoffArgs),
    /// Market-consistent price interval.
    Mcp {
        #[command(flatten)]
        args: PayoffArgs,
        /// Also compute the dual interval over strictly consistent deflators.
        #[arg(long)]
        dual: bool,
    },
    /// Good deals, scalable good deals and strong scalable good deals.
    Gooddeal { scenario: PathBuf },
    /// Classifies `--d`, or searches for a strictly consistent deflator.
    Deflator {
        scenario: PathBuf,
        #[arg(long, value_name = "JSON")]
        d: Option<String>,
    },
    /// Primal superreplication price against both dual formulations.
    DualityGap(PayoffArgs),
    /// Checks the FTAP implications on the scenario.
    FtapCheck { scenario: PathBuf },
    /// Compares the solver with the brute-force grid oracle.
    OracleCheck {
        #[command(flatten)]
        args: PayoffArgs,
        #[arg(long)]
        lower: Option<f64>,
        #[arg(long)]
        upper: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Runs the queries of every scenario in a directory.
    Batch {
        dir: PathBuf,
        /// Report directory (default `<dir>/reports`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite golden reports with the current results.
        #[arg(long)]
        bless: bool,
    },
}

/// A computed report with the exit code it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub exit: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, exit: 0 }
    }
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>> {
    serde_json::from_str::<Vec<f64>>(text).map_err(|e| Error::Invalid(format!("{what} must be a JSON array of numbers: {e}")))
}

impl PayoffArgs {
    fn payoff(&self, s: &Scenario) -> Result<Vec<f64>> {
        match (&self.payoff, &self.payoff_flag) {
            (Some(_), Some(_)) => Err(Error::Invalid("payoff given twice".into())),
            (Some(p), None) | (None, Some(p)) => parse_vector(p, "payoff"),
            (None, None) => s
                .queries
                .iter()
                .find_map(|q| match q {
                    Query::Price { payoff } | Query::Mcp { payoff } | Query::DualityGap { payoff } => Some(payoff.clone()),
                    Query::OracleCheck { payoff, .. } => Some(payoff.clone()),
                    _ => None,
                })
                .ok_or_else(|| Error::Invalid("no payoff given and the scenario lists none".into())),
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn price(s: &Scenario, x: &[f64]) -> Result<Outcome> {
    let (m, a) = (&s.market, &s.acceptance);
    let interval = pricing::mcp_interval(m, a, x)?;
    let mut report = to_json(&interval);
    let extra = match pricing::superreplication_price(m, a, x) {
        Ok(sr) => json!({ "attained": sr.attained, "portfolio": sr.portfolio, "status": sr.status }),
        Err(Error::InfeasibleAcceptability) => json!({ "attained": false, "portfolio": null, "status": "Infeasible" }),
        Err(e) => return Err(e),
    };
    report.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    Ok(Outcome::ok(report))
}

fn mcp(s: &Scenario, x: &[f64], dual: bool) -> Result<Outcome> {
    if dual {
        return Ok(Outcome::ok(to_json(&duality::dual_mcp(&s.market, &s.acceptance, x)?)));
    }
    Ok(Outcome::ok(to_json(&pricing::mcp_interval(&s.market, &s.acceptance, x)?)))
}

fn good_deals(s: &Scenario) -> Result<Outcome> {
    let (m, a) = (&s.market, &s.acceptance);
    Ok(Outcome::ok(json!({
        "good_deal": to_json(&gooddeal::find_good_deal(m, a)?),
        "scalable_good_deal": to_json(&gooddeal::find_scalable_good_deal(m, a)?),
        "strong_scalable_good_deal": to_json(&gooddeal::has_strong_scalable(m, a)?),
        "no_scalable_condition": to_json(&gooddeal::sufficient_no_scalable(m, a)?),
    })))
}

fn deflator(s: &Scenario, d: Option<&[f64]>) -> Result<Outcome> {
    let (m, a) = (&s.market, &s.acceptance);
    Ok(Outcome::ok(match d {
        Some(d) => to_json(&duality::classify_deflator(m, a, d)?),
        None => match duality::find_strictly_consistent_deflator(m, a)? {
            Some(r) => json!({ "found": true, "deflator": to_json(&r) }),
            None => json!({ "found": false, "deflator": null }),
        },
    }))
}

fn duality_gap(s: &Scenario, x: &[f64]) -> Result<Outcome> {
    let (m, a) = (&s.market, &s.acceptance);
    let primal = match pricing::superreplication_price(m, a, x) {
        Ok(sr) => sr.value,
        Err(Error::InfeasibleAcceptability) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let weak = duality::dual_superreplication(m, a, x, DualMode::Weak)?;
    let strict = match duality::dual_superreplication(m, a, x, DualMode::Strict) {
        Ok(r) => Ok(r),
        Err(e) if e.exit_code() == 3 => Err(e.kind()),
        Err(e) => return Err(e),
    };
    let gap = |d: f64| if primal == d { 0.0 } else { primal - d };
    let hypotheses = gooddeal::has_strong_scalable(m, a)?.kind == gooddeal::DealKind::None;
    let weak_gap = gap(weak.value);
    let mut report = json!({
        "primal": report::ext_value(primal),
        "dual_weak": to_json(&weak),
        "dual_strict": match &strict { Ok(r) => to_json(r), Err(kind) => json!({ "error": kind }) },
        "gap_weak": report::ext_value(weak_gap),
        "gap_strict": strict.as_ref().ok().map(|r| report::ext_value(gap(r.value))),
        "hypotheses_hold": hypotheses,
    });
    let violated = weak.value > primal + GAP_TOL || (hypotheses && !(weak_gap.abs() <= GAP_TOL));
    if violated {
        report["inconsistency"] = json!("primal and dual values disagree beyond tolerance");
    }
    Ok(Outcome { report, exit: if violated { 4 } else { 0 } })
}

fn ftap(s: &Scenario) -> Result<Outcome> {
    let r = duality::verify_ftap(&s.market, &s.acceptance)?;
    let exit = match r.verdict {
        Verdict::EquivalenceHolds => 0,
        Verdict::PreconditionFailed => 3,
        Verdict::CounterexampleDetected => 4,
    };
    Ok(Outcome { report: to_json(&r), exit })
}

/// Default oracle grid: the box `[−5, 5]` with step 0.01 for up to two
/// securities, 0.1 for three.
pub fn default_grid(n_securities: usize) -> GridSpec {
    GridSpec { lower: -5.0, upper: 5.0, step: if n_securities <= 2 { 0.01 } else { 0.1 } }
}

fn oracle_check(s: &Scenario, x: &[f64], grid: Option<GridSpec>) -> Result<Outcome> {
    let (m, a) = (&s.market, &s.acceptance);
    let grid = grid.unwrap_or_else(|| default_grid(m.n_securities()));
    let brute = oracle::brute_price(m, a, x, &grid)?;
    let deals = oracle::brute_deal_scan(m, a, &GridSpec { lower: -1.0, upper: 1.0, step: 0.05 }, &DEAL_SCALES)?;
    let solver = match pricing::superreplication_price(m, a, x) {
        Ok(sr) => sr.value,
        Err(Error::InfeasibleAcceptability) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    // the grid minimum is an upper bound; it can only be checked against a finite price
    let excess = brute.value - solver;
    let agrees = !solver.is_finite() || !brute.value.is_finite() || (excess >= -GAP_TOL && excess <= brute.radius + GAP_TOL);
    let report = json!({
        "solver": report::ext_value(solver),
        "oracle": to_json(&brute),
        "grid": to_json(&grid),
        "deal_scan": to_json(&deals),
        "within_radius": agrees,
    });
    Ok(Outcome { report, exit: if agrees { 0 } else { 4 } })
}

/// Runs one query against a loaded scenario.
pub fn execute(s: &Scenario, q: &Query) -> Result<Outcome> {
    match q {
        Query::Price { payoff } => price(s, payoff),
        Query::Mcp { payoff } => mcp(s, payoff, false),
        Query::GoodDeal => good_deals(s),
        Query::Deflator { d } => deflator(s, d.as_deref()),
        Query::DualityGap { payoff } => duality_gap(s, payoff),
        Query::FtapCheck => ftap(s),
        Query::OracleCheck { payoff, grid } => oracle_check(s, payoff, *grid),
    }
}

/// Error report written to stderr.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
    if let Error::Schema(issues) = e {
        v["issues"] = to_json(issues);
    }
    v
}

fn configure_threads() {
    if let Some(n) = std::env::var("GDP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let single = |path: &PathBuf, f: &dyn Fn(&Scenario) -> Result<Outcome>| -> Result<Outcome> { f(&load_scenario(path)?) };
    let outcome = match cmd {
        Command::Price(a) => single(&a.scenario, &|s| price(s, &a.payoff(s)?))?,
        Command::Mcp { args, dual } => single(&args.scenario, &|s| mcp(s, &args.payoff(s)?, *dual))?,
        Command::Gooddeal { scenario } => single(scenario, &good_deals)?,
        Command::Deflator { scenario, d } => {
            let d = d.as_deref().map(|t| parse_vector(t, "deflator")).transpose()?;
            single(scenario, &|s| deflator(s, d.as_deref()))?
        }
        Command::DualityGap(a) => single(&a.scenario, &|s| duality_gap(s, &a.payoff(s)?))?,
        Command::FtapCheck { scenario } => single(scenario, &ftap)?,
        Command::OracleCheck { args, lower, upper, step } => single(&args.scenario, &|s| {
            let base = default_grid(s.market.n_securities());
            let grid = GridSpec { lower: lower.unwrap_or(base.lower), upper: upper.unwrap_or(base.upper), step: step.unwrap_or(base.step) };
            oracle_check(s, &args.payoff(s)?, Some(grid))
        })?,
        Command::Batch { dir, out: report_dir, bless } => return batch::run(dir, report_dir.as_deref(), *bless, out, err),
    };
    writeln!(out, "{}", render(&outcome.report)).ok();
    if outcome.exit != 0 {
        let reason = match outcome.exit {
            3 => "PreconditionFailed",
            _ => "InternalInconsistency",
        };
        let mut v = json!({ "error": reason, "exit_code": outcome.exit });
        if let Some(verdict) = outcome.report.get("verdict") {
            v["verdict"] = verdict.clone();
        }
        writeln!(err, "{}", render(&v)).ok();
    }
    Ok(outcome.exit)
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                write!(out, "{e}").ok();
            } else {
                let v = json!({ "error": "Usage", "message": e.to_string(), "exit_code": 2 });
                writeln!(err, "{}", render(&v)).ok();
            }
            return code;
        }
    };
    configure_threads();
    match dispatch(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            writeln!(err, "{}", render(&error_json(&e))).ok();
            e.exit_code()
        }
    }
}

/// Runs the CLI on the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
