//! JSON-configured experiment runner.
//!
//! A config is one JSON object. Pmfs are arrays of masses (rationals as `"num/den"`
//! strings), distortions and channels are named builtins or explicit matrices. Every run
//! writes `<out>/<command>.json` with sorted keys, the verbatim config and the toolkit
//! version; `rd`, `threshold` and `simulate` also write a CSV table.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{compound_capacity_with, CapacityOptions};
use crate::channels::{ChannelConfig, CompoundChannel};
use crate::coding::{error_exponent_bound, simulate_decay, ExponentQuery, SimulationConfig, SimulationMode};
use crate::covering::{duality_sweep, threshold_trace};
use crate::distortion::{DistortionConfig, DistortionSpec};
use crate::error::Error;
use crate::multiuser::{
    end_to_end_separation, layered_replacement, simulate_unicast, ExactSystem, MediumConfig, MediumKernel, ModemStack, PairDemand,
    UnicastDemandSet,
};
use crate::probability::rational::{format_rational, parse_rational};
use crate::probability::{Alphabet, Distribution};
use crate::rate_distortion::rd_curve;
use crate::report::{fmt_f64, to_sorted_json, write_csv};
use crate::verify::{verify_all, Fault, VerifyOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rd,
    Capacity,
    Simulate,
    Exponent,
    Duality,
    Threshold,
    Multiuser,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rd => "rd",
            Command::Capacity => "capacity",
            Command::Simulate => "simulate",
            Command::Exponent => "exponent",
            Command::Duality => "duality",
            Command::Threshold => "threshold",
            Command::Multiuser => "multiuser",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub budget: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub reports: Vec<PathBuf>,
    pub message: String,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Fail {
    code: i32,
    message: String,
}

fn schema(message: impl Into<String>) -> Fail {
    Fail { code: EXIT_SCHEMA, message: message.into() }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidDistribution(_) | Error::AlphabetMismatch(_) | Error::DimensionMismatch { .. } => EXIT_SCHEMA,
            Error::BudgetExceeded { .. } | Error::StateSpaceTooLarge { .. } => EXIT_BUDGET,
            Error::DualityViolated { .. } => EXIT_ASSERTION,
            _ => EXIT_RUNTIME,
        };
        Fail { code, message: e.to_string() }
    }
}

/// A pmf: a bare array of masses, or `{"masses": [...], "alphabet": [...]}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PmfConfig {
    Masses(Vec<Value>),
    Full(Distribution),
}

impl PmfConfig {
    pub fn build(&self) -> Result<Distribution, Error> {
        match self {
            PmfConfig::Full(d) => Ok(d.clone()),
            PmfConfig::Masses(values) => {
                let masses = values
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => parse_rational(s),
                        Value::Number(n) => parse_rational(&n.to_string()),
                        _ => Err(Error::Config("masses must be numbers or \"num/den\" strings".into())),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Distribution::exact(Alphabet::indexed(masses.len()), masses)
            }
        }
    }
}

/// A distortion level: a number or a `"num/den"` string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Float(f64),
    Text(String),
}

impl Level {
    fn exact(&self) -> Result<crate::Rational, Error> {
        match self {
            Level::Float(v) => parse_rational(&v.to_string()),
            Level::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RdConfig {
    command: Option<String>,
    source: PmfConfig,
    distortion: DistortionConfig,
    grid: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityConfig {
    command: Option<String>,
    channels: Vec<ChannelConfig>,
    alphabet: Option<usize>,
    seed: Option<u64>,
    restarts: Option<usize>,
    iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    command: Option<String>,
    seed: Option<u64>,
    source: PmfConfig,
    distortion: DistortionConfig,
    channels: Vec<ChannelConfig>,
    d: f64,
    eps: f64,
    rate: f64,
    blocklengths: Vec<usize>,
    trials: u64,
    batch_size: Option<u64>,
    mode: Option<SimulationMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentConfig {
    command: Option<String>,
    source: PmfConfig,
    distortion: DistortionConfig,
    d: f64,
    eps: f64,
    rate: f64,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualityConfig {
    command: Option<String>,
    seed: Option<u64>,
    sources: Vec<PmfConfig>,
    distortions: Vec<DistortionConfig>,
    max_n: usize,
    representatives: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdConfig {
    command: Option<String>,
    source: PmfConfig,
    distortion: DistortionConfig,
    d: Level,
    rate: f64,
    blocklengths: Vec<usize>,
    /// Recorded, never checked.
    assume_inf_criterion_equal: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairConfig {
    from: usize,
    to: usize,
    source: PmfConfig,
    distortion: DistortionConfig,
    d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum ModemConfig {
    Identity,
    Separation { rates: Vec<f64>, laws: Vec<PmfConfig> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplacementConfig {
    pair: usize,
    rate: f64,
    law: PmfConfig,
    n: usize,
    /// Fail with exit 3 unless the other pairs' law is unchanged.
    #[serde(default)]
    assert_preserved: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiuserConfig {
    command: Option<String>,
    seed: Option<u64>,
    users: usize,
    media: Vec<MediumConfig>,
    pairs: Vec<PairConfig>,
    modems: Option<ModemConfig>,
    n: usize,
    trials: u64,
    batch_size: Option<u64>,
    replacement: Option<ReplacementConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    command: Option<String>,
    seed: Option<u64>,
    budget: Option<f64>,
    only: Option<Vec<usize>>,
    inject_fault: Option<Fault>,
}

fn parse<T: DeserializeOwned>(raw: &Value) -> Result<T, Fail> {
    serde_json::from_value(raw.clone()).map_err(|e| schema(format!("config: {e}")))
}

fn check_command(field: &Option<String>, cmd: Command) -> Result<(), Fail> {
    match field {
        Some(c) if c != cmd.name() => Err(schema(format!("command: config is for '{c}', not '{}'", cmd.name()))),
        _ => Ok(()),
    }
}

fn required_seed(config: Option<u64>, args: &RunArgs, cmd: Command) -> Result<u64, Fail> {
    args.seed.or(config).ok_or_else(|| schema(format!("seed: required for '{}' (set it in the config or pass --seed)", cmd.name())))
}

fn spec_for(d: &DistortionConfig, p: &Distribution) -> Result<DistortionSpec, Fail> {
    let spec = d.build(p.len())?;
    if spec.sources() != p.len() {
        return Err(schema("distortion: source alphabet differs from the pmf"));
    }
    Ok(spec)
}

fn compound(channels: &[ChannelConfig], alphabet: usize) -> Result<CompoundChannel, Fail> {
    if channels.is_empty() {
        return Err(schema("channels: at least one channel is required"));
    }
    Ok(CompoundChannel::new(channels.iter().map(|c| c.build(alphabet)).collect::<Result<Vec<_>, _>>()?)?)
}

/// File name, header, rows.
type CsvTable = (String, Vec<&'static str>, Vec<Vec<String>>);

struct Output {
    results: Value,
    /// Named pass/fail checks; any failure gives exit 3.
    checks: Vec<(String, bool)>,
    csv: Option<CsvTable>,
    budget_exceeded: bool,
}

impl Output {
    fn plain(results: Value) -> Self {
        Output { results, checks: Vec::new(), csv: None, budget_exceeded: false }
    }
}

fn run_rd(raw: &Value) -> Result<Output, Fail> {
    let c: RdConfig = parse(raw)?;
    check_command(&c.command, Command::Rd)?;
    let p = c.source.build()?;
    let spec = spec_for(&c.distortion, &p)?;
    let curve = rd_curve(&p, &spec, &c.grid)?;
    let rows = curve
        .iter()
        .map(|r| vec![fmt_f64(r.d), fmt_f64(r.rate), fmt_f64(r.achieved_distortion), fmt_f64(r.slope), fmt_f64(r.gap)])
        .collect();
    Ok(Output {
        results: json!({"mode": "float", "curve": curve}),
        checks: Vec::new(),
        csv: Some(("rd.csv".into(), vec!["d", "rate", "achieved_distortion", "slope", "gap"], rows)),
        budget_exceeded: false,
    })
}

fn run_capacity(raw: &Value, args: &RunArgs) -> Result<Output, Fail> {
    let c: CapacityConfig = parse(raw)?;
    check_command(&c.command, Command::Capacity)?;
    let alphabet = c.alphabet.unwrap_or(2);
    let kernels = c.channels.iter().map(|k| k.letter_matrix(alphabet)).collect::<Result<Vec<_>, _>>()?;
    let mut opts = CapacityOptions::default();
    if let Some(s) = args.seed.or(c.seed) {
        opts.seed = s;
    }
    opts.restarts = c.restarts.unwrap_or(opts.restarts);
    opts.iterations = c.iterations.unwrap_or(opts.iterations);
    let r = compound_capacity_with(&kernels, &opts)?;
    Ok(Output::plain(json!({"mode": "float", "capacity": r, "options": opts})))
}

fn run_simulate(raw: &Value, args: &RunArgs) -> Result<Output, Fail> {
    let c: SimulateConfig = parse(raw)?;
    check_command(&c.command, Command::Simulate)?;
    let seed = required_seed(c.seed, args, Command::Simulate)?;
    let p = c.source.build()?;
    let spec = spec_for(&c.distortion, &p)?;
    let set = compound(&c.channels, p.len())?;
    if c.blocklengths.is_empty() {
        return Err(schema("blocklengths: at least one blocklength is required"));
    }
    let cfg = SimulationConfig {
        p_x: p,
        eps: c.eps,
        spec,
        d: c.d,
        rate: c.rate,
        n: c.blocklengths[0],
        trials: c.trials,
        batch_size: c.batch_size.unwrap_or(100),
        seed,
        mode: c.mode.unwrap_or_default(),
    };
    let r = simulate_decay(&set, &cfg, &c.blocklengths)?;
    let mut rows = Vec::new();
    for prof in &r.profiles {
        for k in &prof.per_kernel {
            rows.push(vec![
                prof.n.to_string(),
                k.kernel.to_string(),
                k.name.clone(),
                k.error.count.to_string(),
                prof.trials.to_string(),
                fmt_f64(k.error.estimate),
                fmt_f64(k.error.sigma),
                fmt_f64(k.e2.estimate),
            ]);
        }
    }
    Ok(Output {
        results: json!({"mode": "monte_carlo", "decay": r}),
        checks: Vec::new(),
        csv: Some(("simulate.csv".into(), vec!["n", "kernel", "name", "errors", "trials", "error", "sigma", "e2"], rows)),
        budget_exceeded: false,
    })
}

fn run_exponent(raw: &Value) -> Result<Output, Fail> {
    let c: ExponentConfig = parse(raw)?;
    check_command(&c.command, Command::Exponent)?;
    let p = c.source.build()?;
    let spec = spec_for(&c.distortion, &p)?;
    let r = error_exponent_bound(&ExponentQuery { p_x: p, spec, d: c.d, eps: c.eps, rate: c.rate, n: c.n })?;
    Ok(Output::plain(json!({"mode": "float", "exponent": r})))
}

fn run_duality(raw: &Value, args: &RunArgs) -> Result<Output, Fail> {
    let c: DualityConfig = parse(raw)?;
    check_command(&c.command, Command::Duality)?;
    let seed = required_seed(c.seed, args, Command::Duality)?;
    let mut sweeps = Vec::new();
    let mut checks = Vec::new();
    for s in &c.sources {
        let p = s.build()?;
        p.require_exact()?;
        for d in &c.distortions {
            let spec = spec_for(d, &p)?;
            let sweep = duality_sweep(&p, &spec, c.max_n, c.representatives.unwrap_or(5), seed)?;
            let label = format!("{} {}", p, spec.name());
            checks.push((format!("duality {label}"), sweep.all_equal));
            checks.push((format!("representative_invariance {label}"), sweep.representative_invariant));
            sweeps.push(sweep);
        }
    }
    Ok(Output { results: json!({"mode": "exact", "sweeps": sweeps}), checks, csv: None, budget_exceeded: false })
}

fn run_threshold(raw: &Value) -> Result<Output, Fail> {
    let c: ThresholdConfig = parse(raw)?;
    check_command(&c.command, Command::Threshold)?;
    let p = c.source.build()?;
    let spec = spec_for(&c.distortion, &p)?;
    let d = c.d.exact()?;
    let t = threshold_trace(&p, &spec, &d, c.rate, &c.blocklengths)?;
    let rows = t
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format_rational(&r.a),
                r.minimizer.join(" "),
                r.log2_codebook_size.to_string(),
                fmt_f64(r.channel_functional),
                fmt_f64(r.source_functional),
            ]
        })
        .collect();
    Ok(Output {
        results: json!({"mode": "exact", "trace": t, "assume_inf_criterion_equal": c.assume_inf_criterion_equal}),
        checks: Vec::new(),
        csv: Some((
            "threshold.csv".into(),
            vec!["n", "a", "minimizer", "log2_codebook_size", "channel_functional", "source_functional"],
            rows,
        )),
        budget_exceeded: false,
    })
}

fn run_multiuser(raw: &Value, args: &RunArgs) -> Result<Output, Fail> {
    let c: MultiuserConfig = parse(raw)?;
    check_command(&c.command, Command::Multiuser)?;
    let seed = required_seed(c.seed, args, Command::Multiuser)?;
    let media = c.media.iter().map(|m| m.build()).collect::<Result<Vec<MediumKernel>, _>>()?;
    let pairs = c
        .pairs
        .iter()
        .map(|p| {
            let p_x = p.source.build()?;
            let spec = p.distortion.build(p_x.len())?;
            Ok(PairDemand { from: p.from, to: p.to, p_x, spec, d: p.d })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let demands = UnicastDemandSet::new(c.users, pairs)?;
    let profile = match &c.modems {
        None | Some(ModemConfig::Identity) => {
            simulate_unicast(&media, &demands, &ModemStack::identity(demands.pairs().len(), seed), c.n, c.trials, c.batch_size.unwrap_or(100))?
        }
        Some(ModemConfig::Separation { rates, laws }) => {
            let laws = laws.iter().map(|l| l.build()).collect::<Result<Vec<_>, _>>()?;
            end_to_end_separation(&media, &demands, rates, &laws, c.n, c.trials, seed)?
        }
    };
    let mut checks = Vec::new();
    let mut replacement = Value::Null;
    if let Some(r) = &c.replacement {
        let medium = media.first().ok_or_else(|| schema("media: replacement needs a medium"))?;
        let system = ExactSystem::new(medium.clone(), demands.clone(), r.n)?;
        let (_, report) = layered_replacement(&system, r.pair, r.rate, &r.law.build()?, seed)?;
        if r.assert_preserved {
            checks.push(("marginal_preservation".to_string(), report.other_pairs_tv <= 1e-12));
        }
        replacement = json!(report);
    }
    Ok(Output { results: json!({"mode": "monte_carlo", "unicast": profile, "replacement": replacement}), checks, csv: None, budget_exceeded: false })
}

fn run_verify(raw: &Value, args: &RunArgs) -> Result<Output, Fail> {
    let c: VerifyConfig = parse(raw)?;
    check_command(&c.command, Command::VerifyAll)?;
    let budget = args.budget.or(c.budget);
    if budget.is_some_and(|b| b.is_nan() || b < 0.0) {
        return Err(schema("budget: must be a nonnegative number of seconds"));
    }
    let opts = VerifyOptions {
        seed: args.seed.or(c.seed).unwrap_or(crate::verify::DEFAULT_SEED),
        budget: budget.map(Duration::from_secs_f64),
        only: c.only.unwrap_or_default(),
        fault: c.inject_fault,
    };
    let r = verify_all(&opts)?;
    for line in r.criteria.iter().map(|c| c.line()) {
        eprintln!("{line}");
    }
    let checks = r.criteria.iter().map(|c| (format!("{} {}", c.id, c.name), c.passed)).collect();
    Ok(Output { budget_exceeded: r.budget_exceeded, results: json!({"mode": "mixed", "verify": r}), checks, csv: None })
}

fn load(args: &RunArgs, cmd: Command) -> Result<Value, Fail> {
    match &args.config {
        None if cmd == Command::VerifyAll => Ok(json!({})),
        None => Err(schema("--config is required")),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| schema(format!("cannot read {}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| schema(format!("config is not valid JSON: {e}")))?;
            if !v.is_object() {
                return Err(schema("config must be a JSON object"));
            }
            Ok(v)
        }
    }
}

fn write_report(out: &Path, cmd: Command, raw: &Value, args: &RunArgs, o: &Output) -> Result<Vec<PathBuf>, Fail> {
    std::fs::create_dir_all(out).map_err(Error::from)?;
    let checks: Vec<Value> = o.checks.iter().map(|(name, ok)| json!({"name": name, "passed": ok})).collect();
    let report = json!({
        "command": cmd.name(),
        "version": VERSION,
        "config": raw,
        "seed_override": args.seed,
        "results": o.results,
        "checks": checks,
        "passed": o.checks.iter().all(|c| c.1),
        "budget_exceeded": o.budget_exceeded,
    });
    let path = out.join(format!("{}.json", cmd.name()));
    std::fs::write(&path, to_sorted_json(&report)? + "\n").map_err(Error::from)?;
    let mut written = vec![path];
    if let Some((name, header, rows)) = &o.csv {
        let p = out.join(name);
        write_csv(&p, header, rows)?;
        written.push(p);
    }
    Ok(written)
}

fn execute(cmd: Command, args: &RunArgs) -> Result<RunOutcome, Fail> {
    let start = Instant::now();
    let raw = load(args, cmd)?;
    if let Some(b) = args.budget {
        if b.is_nan() || b < 0.0 {
            return Err(schema("--budget must be a nonnegative number of seconds"));
        }
        if b == 0.0 && cmd != Command::VerifyAll {
            return Err(Fail { code: EXIT_BUDGET, message: "budget of 0 seconds leaves no time to run".into() });
        }
    }
    let mut output = match cmd {
        Command::Rd => run_rd(&raw)?,
        Command::Capacity => run_capacity(&raw, args)?,
        Command::Simulate => run_simulate(&raw, args)?,
        Command::Exponent => run_exponent(&raw)?,
        Command::Duality => run_duality(&raw, args)?,
        Command::Threshold => run_threshold(&raw)?,
        Command::Multiuser => run_multiuser(&raw, args)?,
        Command::VerifyAll => run_verify(&raw, args)?,
    };
    if cmd != Command::VerifyAll && args.budget.is_some_and(|b| start.elapsed().as_secs_f64() > b) {
        output.budget_exceeded = true;
    }
    let reports = write_report(&args.out, cmd, &raw, args, &output)?;
    let failed: Vec<&str> = output.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let (exit_code, message) = if output.budget_exceeded {
        (EXIT_BUDGET, "runtime budget exceeded; partial report written".to_string())
    } else if !failed.is_empty() {
        (EXIT_ASSERTION, format!("failed checks: {}", failed.join(", ")))
    } else {
        (EXIT_OK, "ok".to_string())
    };
    Ok(RunOutcome { exit_code, reports, message })
}

/// Runs one subcommand. Never panics on bad input; the exit code carries the verdict.
pub fn run(cmd: Command, args: &RunArgs) -> RunOutcome {
    let go = || execute(cmd, args).unwrap_or_else(|f| RunOutcome { exit_code: f.code, reports: Vec::new(), message: f.message });
    match args.threads {
        Some(0) => RunOutcome { exit_code: EXIT_SCHEMA, reports: Vec::new(), message: "--threads must be at least 1".into() },
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(go),
            Err(e) => RunOutcome { exit_code: EXIT_RUNTIME, reports: Vec::new(), message: e.to_string() },
        },
        None => go(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(cmd: Command, config: Value, dir: &Path) -> RunOutcome {
        let path = dir.join("config.json");
        std::fs::write(&path, config.to_string()).unwrap();
        run(cmd, &RunArgs { config: Some(path), out: dir.to_path_buf(), ..Default::default() })
    }

    #[test]
    fn rd_writes_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_json(Command::Rd, json!({"source": ["1/2", "1/2"], "distortion": "hamming", "grid": [0.0, 0.1, 0.5]}), dir.path());
        assert_eq!(r.exit_code, 0, "{}", r.message);
        let csv = std::fs::read_to_string(dir.path().join("rd.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        let rate = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
        assert!((rate(lines[1]) - 1.0).abs() < 1e-6);
        assert!((rate(lines[2]) - 0.531004).abs() < 1e-6);
        assert!(rate(lines[3]).abs() < 1e-6);
    }

    #[test]
    fn missing_seed_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = json!({"source": ["1/2", "1/2"], "distortion": "hamming", "channels": ["bsc(1/10)"], "d": 0.2, "eps": 0.1,
                         "rate": 0.1, "blocklengths": [8], "trials": 10});
        let r = run_json(Command::Simulate, cfg, dir.path());
        assert_eq!(r.exit_code, EXIT_SCHEMA);
        assert!(r.message.starts_with("seed"), "{}", r.message);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_json(Command::Rd, json!({"source": ["1/2", "1/2"], "distortion": "hamming", "grid": [0.1], "gird": 1}), dir.path());
        assert_eq!(r.exit_code, EXIT_SCHEMA);
        assert!(r.message.contains("gird"), "{}", r.message);
    }

    #[test]
    fn duality_sweep_passes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = json!({"seed": 3, "sources": [["1/2", "1/2"]], "distortions": ["hamming", "sorted_sequence"], "max_n": 8});
        let r = run_json(Command::Duality, cfg, dir.path());
        assert_eq!(r.exit_code, 0, "{}", r.message);
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("duality.json")).unwrap()).unwrap();
        let cases = report["results"]["sweeps"][0]["cases"].as_array().unwrap();
        assert!(!cases.is_empty());
        assert!(cases.iter().all(|c| c["equal"] == json!(true) && c["channel"] == c["source"]));
    }

    #[test]
    fn zero_budget_exits_four() {
        let dir = tempfile::tempdir().unwrap();
        let r = run(Command::VerifyAll, &RunArgs { out: dir.path().to_path_buf(), budget: Some(0.0), ..Default::default() });
        assert_eq!(r.exit_code, EXIT_BUDGET);
    }

    #[test]
    fn mismatched_law_fails_the_assertion() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = json!({
            "seed": 1, "users": 2, "n": 8, "trials": 50,
            "media": [{"kind": "interfering", "p": "1/10"}],
            "pairs": [{"from": 0, "to": 1, "source": ["1/2", "1/2"], "distortion": "hamming", "d": 0.2},
                      {"from": 1, "to": 0, "source": ["1/2", "1/2"], "distortion": "hamming", "d": 0.2}],
            "replacement": {"pair": 0, "rate": 0.5, "law": ["3/4", "1/4"], "n": 2, "assert_preserved": true}
        });
        let r = run_json(Command::Multiuser, cfg, dir.path());
        assert_eq!(r.exit_code, EXIT_ASSERTION);
        assert!(r.message.contains("marginal_preservation"));
    }

    #[test]
    fn wrong_command_field() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_json(Command::Rd, json!({"command": "capacity", "source": ["1/2", "1/2"], "distortion": "hamming", "grid": [0.1]}), dir.path());
        assert_eq!(r.exit_code, EXIT_SCHEMA);
    }
}
