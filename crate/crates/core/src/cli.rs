//! The `revert` command-line driver.
//!
//! Every command prints one document `{meta, params, result}` (JSON) or a
//! plot-ready table preceded by `# key=value` metadata lines (CSV).

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::branching::{self, OffspringLaw, DEFAULT_POPULATION_CAP};
use crate::clock;
use crate::error::{Error, Result};
use crate::integral;
use crate::law::{ReversionLaw, StepLaw};
use crate::montecarlo::{with_threads, Moments, MonteCarlo};
use crate::nonuniform;
use crate::occasional;
use crate::pmf::Pmf;
use crate::suite::{self, Suite};
use crate::verify::{chi_square, counts};
use crate::walk;
use crate::{EXACT_MAX_N, VERSION};

/// Tail tolerance used when exact arithmetic is out of reach.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Parser)]
#[command(name = "revert", version, about = "Reverting clocks, walks and branching processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for all Monte Carlo work.
    #[arg(long, global = true, env = "REVERT_SEED", default_value_t = 1)]
    pub seed: u64,

    /// Worker threads for Monte Carlo (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The reverting clock T_n.
    Clock(ClockArgs),
    /// The reverting random walk R_n.
    Walk(WalkArgs),
    /// The time integral S_n and its martingale.
    Integral(IntegralArgs),
    /// The occasionally reverting clock.
    Occasional(OccasionalArgs),
    /// The reverting Galton-Watson process.
    Branching(BranchingArgs),
    /// Run the oracle-equivalence and invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub n: usize,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Tail tolerance for floating pmfs; 0 asks for exact rationals.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClockArgs {
    #[command(flatten)]
    pub common: Common,
    /// uniform | power:BETA | weights:FILE
    #[arg(long, default_value = "uniform")]
    pub law: LawSpec,
    /// pmf | moments | clt | simulate
    #[arg(long, default_value = "pmf")]
    pub mode: ClockMode,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub common: Common,
    /// Probability of a +1 step.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// pmf | moments | cf | simulate
    #[arg(long, default_value = "pmf")]
    pub mode: WalkMode,
}

#[derive(Debug, Args)]
pub struct IntegralArgs {
    #[command(flatten)]
    pub common: Common,
    /// variance | covariance:M | simulate
    #[arg(long, default_value = "variance")]
    pub mode: IntegralMode,
}

#[derive(Debug, Args)]
pub struct OccasionalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Reversion probability.
    #[arg(long)]
    pub q: f64,
    /// pmf | moments | gf:S,Z | dobrushin | martingale
    #[arg(long, default_value = "pmf")]
    pub mode: OccasionalMode,
}

#[derive(Debug, Args)]
pub struct BranchingArgs {
    #[command(flatten)]
    pub common: Common,
    /// Offspring law file: one `value probability` pair per line.
    #[arg(long)]
    pub offspring: PathBuf,
    /// pgf:S | extinction | simulate
    #[arg(long, default_value = "extinction")]
    pub mode: BranchingMode,
    #[arg(long, default_value_t = DEFAULT_POPULATION_CAP)]
    pub population_cap: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// all | clock | walk | integral | occasional | branching
    #[arg(long, default_value = "all")]
    pub suite: Suite,
}

/// Reversion law as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum LawSpec {
    Uniform,
    Power(f64),
    Weights(PathBuf),
}

impl FromStr for LawSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "uniform" => Ok(LawSpec::Uniform),
            Some(("power", b)) => b
                .parse()
                .map(LawSpec::Power)
                .map_err(|_| Error::config(format!("bad power-law exponent '{b}'"))),
            Some(("weights", f)) if !f.is_empty() => Ok(LawSpec::Weights(PathBuf::from(f))),
            _ => Err(Error::config(format!(
                "unknown law '{s}' (expected uniform, power:BETA or weights:FILE)"
            ))),
        }
    }
}

impl LawSpec {
    pub fn resolve(&self) -> Result<ReversionLaw> {
        let law = match self {
            LawSpec::Uniform => ReversionLaw::Uniform,
            LawSpec::Power(b) => ReversionLaw::power(*b),
            LawSpec::Weights(path) => ReversionLaw::Explicit(read_weights(path)?),
        };
        law.validate()?;
        Ok(law)
    }

    fn describe(&self) -> String {
        match self {
            LawSpec::Uniform => "uniform".into(),
            LawSpec::Power(b) => format!("power:{b}"),
            LawSpec::Weights(p) => format!("weights:{}", p.display()),
        }
    }
}

macro_rules! simple_mode {
    ($name:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub enum $name {
            $($variant),*
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(Self::$variant),)*
                    other => Err(Error::config(format!("unknown mode '{other}'"))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $(Self::$variant => $text),*
                })
            }
        }
    };
}

simple_mode!(ClockMode { Pmf => "pmf", Moments => "moments", Clt => "clt", Simulate => "simulate" });
simple_mode!(WalkMode { Pmf => "pmf", Moments => "moments", Cf => "cf", Simulate => "simulate" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralMode {
    Variance,
    Covariance(usize),
    Simulate,
}

impl FromStr for IntegralMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "variance" => Ok(Self::Variance),
            None if s == "simulate" => Ok(Self::Simulate),
            Some(("covariance", m)) => m
                .parse()
                .map(Self::Covariance)
                .map_err(|_| Error::config(format!("bad lag '{m}'"))),
            _ => Err(Error::config(format!("unknown mode '{s}'"))),
        }
    }
}

impl fmt::Display for IntegralMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Variance => f.write_str("variance"),
            Self::Covariance(m) => write!(f, "covariance:{m}"),
            Self::Simulate => f.write_str("simulate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OccasionalMode {
    Pmf,
    Moments,
    Gf { s: f64, z: f64 },
    Dobrushin,
    Martingale,
}

impl FromStr for OccasionalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => match s {
                "pmf" => Ok(Self::Pmf),
                "moments" => Ok(Self::Moments),
                "dobrushin" => Ok(Self::Dobrushin),
                "martingale" => Ok(Self::Martingale),
                _ => Err(Error::config(format!("unknown mode '{s}'"))),
            },
            Some(("gf", args)) => {
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| Error::config("gf mode needs S,Z"))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::config(format!("bad number '{x}'")));
                Ok(Self::Gf { s: parse(a)?, z: parse(b)? })
            }
            _ => Err(Error::config(format!("unknown mode '{s}'"))),
        }
    }
}

impl fmt::Display for OccasionalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pmf => f.write_str("pmf"),
            Self::Moments => f.write_str("moments"),
            Self::Gf { s, z } => write!(f, "gf:{s},{z}"),
            Self::Dobrushin => f.write_str("dobrushin"),
            Self::Martingale => f.write_str("martingale"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchingMode {
    Pgf(f64),
    Extinction,
    Simulate,
}

impl FromStr for BranchingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "extinction" => Ok(Self::Extinction),
            None if s == "simulate" => Ok(Self::Simulate),
            Some(("pgf", v)) => v
                .parse()
                .map(Self::Pgf)
                .map_err(|_| Error::config(format!("bad pgf argument '{v}'"))),
            _ => Err(Error::config(format!("unknown mode '{s}'"))),
        }
    }
}

impl fmt::Display for BranchingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pgf(s) => write!(f, "pgf:{s}"),
            Self::Extinction => f.write_str("extinction"),
            Self::Simulate => f.write_str("simulate"),
        }
    }
}

/// Non-empty, non-comment lines of a plain text file.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| (i + 1, body.to_string()))
        })
        .collect())
}

/// Reads `alpha_1, alpha_2, ...`, one per line.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let weights = data_lines(path)?
        .into_iter()
        .map(|(line, body)| {
            body.parse::<f64>()
                .map_err(|_| Error::config(format!("{}:{line}: '{body}' is not a number", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    if weights.is_empty() {
        return Err(Error::config(format!("{}: no weights", path.display())));
    }
    Ok(weights)
}

/// Reads `value probability` pairs into an offspring law.
pub fn read_offspring(path: &Path) -> Result<OffspringLaw> {
    let mut probs: Vec<f64> = Vec::new();
    for (line, body) in data_lines(path)? {
        let bad = || Error::config(format!("{}:{line}: expected 'value probability'", path.display()));
        let mut parts = body.split_whitespace();
        let value: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let prob: f64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        if probs.len() <= value {
            probs.resize(value + 1, 0.0);
        }
        probs[value] += prob;
    }
    OffspringLaw::new(probs)
}

/// A finished command: the JSON document plus a table for CSV output.
#[derive(Debug, Clone)]
pub struct Report {
    meta: Map<String, Value>,
    params: Map<String, Value>,
    result: Value,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Report {
    fn new(command: &str, seed: u64) -> Self {
        let mut meta = Map::new();
        meta.insert("program".into(), json!("revert"));
        meta.insert("version".into(), json!(VERSION));
        meta.insert("command".into(), json!(command));
        meta.insert("seed".into(), json!(seed));
        Self {
            meta,
            params: Map::new(),
            result: Value::Null,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta.insert(key.into(), to_value(value));
        self
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.into(), to_value(value));
        self
    }

    fn result(mut self, value: impl Serialize) -> Self {
        self.result = to_value(value);
        self
    }

    fn table(mut self, columns: Vec<&'static str>, rows: Vec<Vec<Value>>) -> Self {
        self.columns = columns;
        self.rows = rows;
        self
    }

    /// The `{meta, params, result}` document.
    pub fn to_json(&self) -> Value {
        json!({ "meta": self.meta, "params": self.params, "result": self.result })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.to_json())
                .map(|s| s + "\n")
                .map_err(|e| Error::Invariant(e.to_string())),
            Format::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (section, map) in [("meta", &self.meta), ("params", &self.params)] {
            for (k, v) in map {
                out.push_str(&format!("# {section}.{k}={}\n", scalar_text(v)));
            }
        }
        let (columns, rows) = if self.columns.is_empty() {
            flatten(&self.result)
        } else {
            (
                self.columns.iter().map(|c| c.to_string()).collect(),
                self.rows.iter().map(|r| r.iter().map(scalar_text).collect()).collect(),
            )
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&columns).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `key,value` rows for results without a natural table.
fn flatten(v: &Value) -> (Vec<String>, Vec<Vec<String>>) {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<Vec<String>>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out);
                }
            }
            other => out.push(vec![prefix.to_string(), scalar_text(other)]),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    (vec!["key".into(), "value".into()], rows)
}

fn pmf_rows(pmf: &Pmf) -> Vec<Vec<Value>> {
    let exact: Vec<Value> = pmf
        .exact_iter()
        .map(|it| it.map(|(_, r)| json!(r.to_string())).collect())
        .unwrap_or_default();
    pmf.iter()
        .enumerate()
        .map(|(i, (x, p))| vec![json!(x), json!(p), exact.get(i).cloned().unwrap_or(Value::Null)])
        .collect()
}

fn pmf_result(pmf: &Pmf) -> Value {
    let map: Map<String, Value> = pmf.iter().map(|(x, p)| (x.to_string(), json!(p))).collect();
    let mut out = Map::new();
    out.insert("pmf".into(), Value::Object(map));
    if let Some(it) = pmf.exact_iter() {
        let exact: Map<String, Value> = it.map(|(x, r)| (x.to_string(), json!(r.to_string()))).collect();
        out.insert("exact".into(), Value::Object(exact));
    }
    out.insert("mean".into(), json!(pmf.mean()));
    out.insert("variance".into(), json!(pmf.variance()));
    Value::Object(out)
}

/// Exact arithmetic when asked for (`tol = 0`) or when `n` is small enough
/// and no tolerance was given.
fn pick_tolerance(tol: Option<f64>, n: usize) -> f64 {
    match tol {
        Some(t) => t,
        None if n <= EXACT_MAX_N => 0.0,
        None => DEFAULT_TAIL_TOLERANCE,
    }
}

fn with_pmf_meta(report: Report, pmf: &Pmf, tol: f64) -> Report {
    report
        .meta("exact", pmf.is_exact())
        .meta("tail_tolerance", tol)
        .meta("dropped_mass", pmf.dropped_mass())
}

fn empirical(report: Report, samples: Vec<i64>, reference: Option<&Pmf>) -> Result<Report> {
    let mut m = Moments::default();
    samples.iter().for_each(|&x| m.push(x as f64));
    let tally = counts(samples.iter().copied());
    let total = samples.len() as f64;
    let rows: Vec<Vec<Value>> = tally
        .iter()
        .map(|(x, c)| {
            vec![
                json!(x),
                json!(c),
                json!(*c as f64 / total),
                reference.map(|p| json!(p.prob(*x))).unwrap_or(Value::Null),
            ]
        })
        .collect();
    let chi = match reference {
        Some(p) => Some(chi_square(&tally, p)?),
        None => None,
    };
    let freq: Map<String, Value> = tally.iter().map(|(x, c)| (x.to_string(), json!(c))).collect();
    Ok(report
        .result(json!({
            "samples": samples.len(),
            "mean": m.mean(),
            "variance": m.variance(),
            "std_error": m.std_error(),
            "counts": freq,
            "chi_square": chi,
        }))
        .table(vec!["value", "count", "frequency", "expected"], rows))
}

fn run_clock(args: &ClockArgs, cli: &Cli) -> Result<Report> {
    let n = args.common.n;
    let law = args.law.resolve()?;
    let report = Report::new("clock", cli.seed)
        .param("n", n)
        .param("law", args.law.describe())
        .param("mode", args.mode.to_string());
    let uniform = law == ReversionLaw::Uniform;
    match args.mode {
        ClockMode::Pmf => {
            let mut tol = pick_tolerance(args.common.tol, n);
            let pmf = match nonuniform::weighted_clock_pmf(&law, n, tol) {
                Err(Error::Configuration(_)) if tol == 0.0 && args.common.tol.is_none() => {
                    tol = DEFAULT_TAIL_TOLERANCE;
                    nonuniform::weighted_clock_pmf(&law, n, tol)?
                }
                other => other?,
            };
            Ok(with_pmf_meta(report, &pmf, tol)
                .result(pmf_result(&pmf))
                .table(vec!["value", "probability", "exact"], pmf_rows(&pmf)))
        }
        ClockMode::Moments => {
            let m = nonuniform::weighted_clock_moments(&law, n)?;
            let mut result = json!({ "mean": m.mean, "variance": m.variance });
            if uniform {
                let c = clock::clock_moments(n)?;
                result["asymptotic_mean"] = json!(c.asymptotic_mean);
                result["asymptotic_variance"] = json!(c.asymptotic_variance);
            }
            if n <= EXACT_MAX_N {
                if let Ok((em, ev)) = nonuniform::weighted_clock_moments_exact(&law, n) {
                    result["exact_mean"] = json!(em.to_string());
                    result["exact_variance"] = json!(ev.to_string());
                }
            }
            Ok(report.result(result))
        }
        ClockMode::Clt => {
            let tol = args.common.tol.unwrap_or(1e-300);
            if uniform {
                let d = clock::clock_clt_diagnostic(n, tol)?;
                Ok(report
                    .meta("tail_tolerance", tol)
                    .meta("dropped_mass", d.dropped_mass)
                    .meta("ks_convention", d.convention)
                    .result(&d))
            } else {
                let d = nonuniform::lyapunov_diagnostic(&law, n)?;
                Ok(report.result(d))
            }
        }
        ClockMode::Simulate => {
            let mc = MonteCarlo::new(cli.seed);
            let sims: Vec<Result<i64>> = mc.run(args.common.samples, |rng| {
                clock::simulate_clock(n, &law, rng).map(|t| t.last() as i64)
            });
            let samples = sims.into_iter().collect::<Result<Vec<_>>>()?;
            let reference = nonuniform::weighted_clock_pmf(&law, n, DEFAULT_TAIL_TOLERANCE).ok();
            empirical(report.param("samples", args.common.samples), samples, reference.as_ref())
        }
    }
}

fn run_walk(args: &WalkArgs, cli: &Cli) -> Result<Report> {
    let n = args.common.n;
    let step = StepLaw::rademacher(args.p)?;
    let report = Report::new("walk", cli.seed)
        .param("n", n)
        .param("p", args.p)
        .param("mode", args.mode.to_string());
    match args.mode {
        WalkMode::Pmf => {
            let tol = pick_tolerance(args.common.tol, n);
            let pmf = if tol == 0.0 { walk::walk_pmf_simple(n, args.p)? } else { walk::walk_pmf(n, &step, tol)? };
            Ok(with_pmf_meta(report, &pmf, tol)
                .result(pmf_result(&pmf))
                .table(vec!["value", "probability", "exact"], pmf_rows(&pmf)))
        }
        WalkMode::Moments => {
            let (mean, variance) = walk::walk_moments(n, &step)?;
            Ok(report.result(json!({ "mean": mean, "variance": variance })))
        }
        WalkMode::Cf => {
            let grid: Vec<f64> = (0..=32).map(|i| i as f64 * std::f64::consts::PI / 32.0).collect();
            let mut rows = Vec::with_capacity(grid.len());
            for &theta in &grid {
                let c = walk::walk_char_function_for(n, theta, &step)?;
                rows.push(vec![json!(theta), json!(c.re), json!(c.im)]);
            }
            let values: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "theta": r[0], "re": r[1], "im": r[2] }))
                .collect();
            Ok(report.result(json!({ "values": values })).table(vec!["theta", "re", "im"], rows))
        }
        WalkMode::Simulate => {
            let mc = MonteCarlo::new(cli.seed);
            let sims: Vec<Result<i64>> = mc.run(args.common.samples, |rng| {
                walk::simulate_walk_recursive(n, &step, &ReversionLaw::Uniform, rng).map(|w| w.last() as i64)
            });
            let samples = sims.into_iter().collect::<Result<Vec<_>>>()?;
            let reference = walk::walk_pmf(n, &step, DEFAULT_TAIL_TOLERANCE).ok();
            empirical(report.param("samples", args.common.samples), samples, reference.as_ref())
        }
    }
}

fn run_integral(args: &IntegralArgs, cli: &Cli) -> Result<Report> {
    let n = args.common.n;
    let report = Report::new("integral", cli.seed)
        .param("n", n)
        .param("mode", args.mode.to_string());
    match args.mode {
        IntegralMode::Variance => Ok(report.result(integral::martingale_variance(n)?)),
        IntegralMode::Covariance(m) => {
            let formula = integral::clock_covariance(n, m)?;
            let est = integral::covariance_experiment(n, &[m], args.common.samples, &MonteCarlo::new(cli.seed))?;
            Ok(report
                .param("lag", m)
                .param("samples", args.common.samples)
                .result(json!({ "formula": formula, "monte_carlo": est[0] })))
        }
        IntegralMode::Simulate => {
            let mc = MonteCarlo::new(cli.seed);
            let summary = integral::martingale_summary(n, args.common.samples, &mc)?;
            let hoeffding = integral::hoeffding_experiment(n, args.common.samples, &mc)?;
            Ok(report
                .param("samples", args.common.samples)
                .result(json!({ "summary": summary, "hoeffding": hoeffding })))
        }
    }
}

fn run_occasional(args: &OccasionalArgs, cli: &Cli) -> Result<Report> {
    let n = args.common.n;
    let q = args.q;
    let report = Report::new("occasional", cli.seed)
        .param("n", n)
        .param("q", q)
        .param("mode", args.mode.to_string());
    match args.mode {
        OccasionalMode::Pmf => {
            let tol = pick_tolerance(args.common.tol, n);
            let pmf = occasional::occasional_pmf(n, q, tol)?;
            Ok(with_pmf_meta(report, &pmf, tol)
                .result(pmf_result(&pmf))
                .table(vec!["value", "probability", "exact"], pmf_rows(&pmf)))
        }
        OccasionalMode::Moments => {
            let m = occasional::occasional_moments(n, q)?;
            Ok(report.result(m))
        }
        OccasionalMode::Gf { s, z } => {
            let closed = occasional::occasional_bivariate_gf(s, z, q)?;
            let tol = args.common.tol.unwrap_or(1e-12);
            let series = occasional::occasional_gf_series(s, z, q, tol)?;
            Ok(report
                .param("s", s)
                .param("z", z)
                .meta("series_tolerance", tol)
                .result(json!({ "closed_form": closed, "series": series, "difference": closed - series })))
        }
        OccasionalMode::Dobrushin => Ok(report.result(occasional::dobrushin_diagnostic(n, q)?)),
        OccasionalMode::Martingale => {
            let tol = args.common.tol.unwrap_or(1e-12);
            let mut rng = crate::rng::RandomStream::new(cli.seed, 0);
            let trace = occasional::occasional_martingale_trace(n, q, &mut rng, tol)?;
            let rows = trace
                .epochs
                .iter()
                .map(|e| {
                    vec![
                        json!(e.n),
                        json!(e.reversion_time),
                        json!(e.interval),
                        json!(e.s),
                        json!(e.correction),
                        json!(e.m),
                    ]
                })
                .collect();
            Ok(report
                .meta("series_tolerance", tol)
                .meta("truncation_bound", trace.truncation_bound)
                .result(&trace)
                .table(vec!["epoch", "reversion_time", "interval", "s", "correction", "m"], rows))
        }
    }
}

fn run_branching(args: &BranchingArgs, cli: &Cli) -> Result<Report> {
    let n = args.common.n;
    let law = read_offspring(&args.offspring)?;
    let report = Report::new("branching", cli.seed)
        .param("n", n)
        .param("offspring", law.probs())
        .param("mode", args.mode.to_string());
    match args.mode {
        BranchingMode::Pgf(s) => Ok(report.result(json!({
            "s": s,
            "pgf": branching::reverting_gw_pgf(n, &law, s)?,
            "mean": branching::reverting_gw_mean(n, &law)?,
        }))),
        BranchingMode::Extinction => {
            let mut result = json!({ "extinction_probability": branching::extinction_probability(n, &law)? });
            if n <= EXACT_MAX_N {
                if let Ok(r) = branching::extinction_probability_exact(n, &law) {
                    result["exact"] = json!(r.to_string());
                }
            }
            Ok(report.result(result))
        }
        BranchingMode::Simulate => {
            let est = branching::extinction_experiment(
                n,
                &law,
                args.common.samples,
                &MonteCarlo::new(cli.seed),
                args.population_cap,
            )?;
            Ok(report
                .param("samples", args.common.samples)
                .meta("population_cap", args.population_cap)
                .meta("capped_paths", est.capped)
                .result(est))
        }
    }
}

fn run_verify(args: &VerifyArgs, cli: &Cli) -> (Report, bool) {
    let r = suite::run_suite(args.suite, cli.seed);
    let rows = r
        .checks
        .iter()
        .map(|c| vec![json!(c.suite), json!(c.name), json!(c.passed), json!(c.detail)])
        .collect();
    let failures: Vec<&str> = r.failures().map(|c| c.name).collect();
    let passed = r.passed;
    let report = Report::new("verify", cli.seed)
        .param("suite", args.suite.name())
        .result(json!({ "passed": passed, "failures": failures, "checks": r.checks }))
        .table(vec!["suite", "check", "passed", "detail"], rows);
    (report, passed)
}

/// What a run produced: exit code and the text for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Configuration(_) | Error::Precondition(_) | Error::Size { .. } => 2,
        _ => 1,
    }
}

/// Parses arguments and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                code: e.exit_code(),
                stdout: if e.use_stderr() { String::new() } else { e.to_string() },
                stderr: if e.use_stderr() { e.render().to_string() } else { String::new() },
            }
        }
    };
    let threads = cli.threads;
    with_threads(threads, || execute(&cli))
}

fn execute(cli: &Cli) -> Outcome {
    let produced = match &cli.command {
        Command::Clock(a) => run_clock(a, cli).map(|r| (r, true)),
        Command::Walk(a) => run_walk(a, cli).map(|r| (r, true)),
        Command::Integral(a) => run_integral(a, cli).map(|r| (r, true)),
        Command::Occasional(a) => run_occasional(a, cli).map(|r| (r, true)),
        Command::Branching(a) => run_branching(a, cli).map(|r| (r, true)),
        Command::Verify(a) => Ok(run_verify(a, cli)),
    };
    let (report, ok) = match produced {
        Ok(x) => x,
        Err(e) => {
            return Outcome {
                code: error_code(&e),
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    };
    let text = match report.render(cli.format) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                code: 1,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    };
    let mut stderr = String::new();
    if !ok {
        if let Some(fails) = report.result.get("checks").and_then(Value::as_array) {
            for c in fails.iter().filter(|c| c["passed"] == json!(false)) {
                stderr.push_str(&format!("FAIL {}: {}\n", scalar_text(&c["name"]), scalar_text(&c["detail"])));
            }
        }
    }
    let stdout = match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                return Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: format!("error: {}: {e}\n", path.display()),
                };
            }
            String::new()
        }
        None => text,
    };
    Outcome {
        code: if ok { 0 } else { 1 },
        stdout,
        stderr,
    }
}
