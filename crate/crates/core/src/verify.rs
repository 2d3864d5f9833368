//! The reference scenario set: twelve checks with fixed configurations and tolerances,
//! run under an optional wall-clock budget.

use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use crate::capacity::{compound_capacity, random_chain_instance, verify_single_letterization};
use crate::channels::{half_lying_channel, identity_scheme_distortion, CompoundChannel, Dmc};
use crate::coding::{
    error_exponent_bound, kl_chain_report, simulate_decay, simulate_reliable_comm, ExponentQuery, SimulationConfig, SimulationMode,
};
use crate::covering::{compute_a, duality_sweep, mc_packing_covering, DualitySweep};
use crate::distortion::DistortionSpec;
use crate::error::Result;
use crate::multiuser::{layered_replacement, ExactSystem, MediumKernel, PairDemand, UnicastDemandSet};
use crate::probability::rational::ratio;
use crate::probability::{binary_entropy, random_rational_joint, random_rational_pmf, Distribution, StochasticMatrix};
use crate::rate_distortion::blahut_arimoto;
use crate::rng::stream;

pub const CRITERIA: usize = 12;
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Faults that can be injected to check that the suite notices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// The "matched" codebook in the marginal-preservation check gets letter law (3/4, 1/4).
    MismatchedCodebookLaw,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Wall-clock budget for the whole run.
    pub budget: Option<Duration>,
    /// Criteria to run, 1-based; all when empty.
    pub only: Vec<usize>,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: DEFAULT_SEED, budget: None, only: Vec::new(), fault: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock time; left out of reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    /// Runtime ceiling, when the criterion has one.
    pub time_limit: Option<f64>,
    pub values: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("[{}] {:>2} {} ({:.2}s): {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.seconds, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
    pub budget_exceeded: bool,
    /// Criteria not run because the budget ran out.
    pub skipped: Vec<usize>,
}

pub fn criterion_name(id: usize) -> &'static str {
    match id {
        1 => "rate-distortion oracle",
        2 => "covering-packing duality",
        3 => "representative invariance",
        4 => "union bound domination",
        5 => "KL chain identity",
        6 => "compound capacity",
        7 => "single-letterization chain",
        8 => "end-to-end reliable communication",
        9 => "half-lying channel",
        10 => "packing/covering events vs exact",
        11 => "A reference value",
        12 => "marginal preservation",
        _ => "unknown",
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    values: Value,
}

fn uniform() -> Distribution {
    Distribution::rational(&[(1, 2), (1, 2)]).unwrap()
}

fn bsc(num: i64, den: i64) -> StochasticMatrix {
    StochasticMatrix::bsc_ratio(num, den)
}

fn compound(num: i64, den: i64) -> CompoundChannel {
    CompoundChannel::single(Dmc::new(bsc(num, den)).into_kernel())
}

fn rate_distortion_oracle() -> Result<Outcome> {
    let h = DistortionSpec::hamming(2);
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 1..=9 {
        let d = 0.05 * i as f64;
        let r = blahut_arimoto(&uniform(), &h, d)?;
        let err = (r.rate - (1.0 - binary_entropy(d))).abs();
        worst = worst.max(err);
        rows.push(json!({"d": d, "rate": r.rate, "error": err}));
    }
    Ok(Outcome { passed: worst <= 1e-6, detail: format!("max |R(D) - (1 - h(D))| = {worst:.2e} (tol 1e-6)"), values: json!(rows) })
}

fn sweeps(seed: u64) -> Result<Vec<DualitySweep>> {
    let sources = [uniform(), Distribution::rational(&[(1, 3), (2, 3)]).unwrap()];
    let specs = [DistortionSpec::hamming(2), DistortionSpec::sorted_sequence(2)];
    let mut out = Vec::new();
    for p in &sources {
        for s in &specs {
            out.push(duality_sweep(p, s, 12, 5, seed)?);
        }
    }
    Ok(out)
}

fn sweep_summary(s: &DualitySweep) -> Value {
    json!({
        "p_x": s.p_x, "spec": s.spec, "blocklengths": s.blocklengths, "cases": s.cases.len(),
        "all_equal": s.all_equal, "representative_invariant": s.representative_invariant,
    })
}

fn duality(sw: &[DualitySweep]) -> Outcome {
    let cases: usize = sw.iter().map(|s| s.cases.len()).sum();
    let unequal: usize = sw.iter().map(|s| s.cases.iter().filter(|c| !c.equal).count()).sum();
    Outcome {
        passed: unequal == 0 && cases > 0,
        detail: format!("{cases} (n', q, D) cases over 2 sources x 2 distortions, {unequal} unequal"),
        values: json!(sw.iter().map(sweep_summary).collect::<Vec<_>>()),
    }
}

fn invariance(sw: &[DualitySweep]) -> Outcome {
    let cases: usize = sw.iter().map(|s| s.cases.len()).sum();
    let bad: usize = sw.iter().map(|s| s.cases.iter().filter(|c| !c.representative_invariant).count()).sum();
    Outcome {
        passed: bad == 0 && cases > 0,
        detail: format!("{cases} cases x 5 representatives per side, {bad} changed"),
        values: json!({"cases": cases, "changed": bad}),
    }
}

fn union_bound(seed: u64) -> Result<Outcome> {
    let h = DistortionSpec::hamming(2);
    let channel = compound(1, 10);
    let mut rows = Vec::new();
    let mut ok = true;
    for &n in &[8usize, 16, 32] {
        for &rate in &[0.1, 0.3] {
            let q = ExponentQuery { p_x: uniform(), spec: h.clone(), d: 0.2, eps: 0.1, rate, n };
            let bound = error_exponent_bound(&q)?;
            let cfg = SimulationConfig {
                p_x: uniform(),
                eps: 0.1,
                spec: h.clone(),
                d: 0.2,
                rate,
                n,
                trials: 10_000,
                batch_size: 100,
                seed,
                mode: SimulationMode::Auto,
            };
            let e2 = simulate_reliable_comm(&channel, &cfg)?.per_kernel[0].e2;
            let holds = bound.bound >= e2.estimate - 3.0 * e2.sigma;
            ok &= holds;
            rows.push(json!({"n": n, "rate": rate, "bound": bound.bound, "exponent": bound.exponent, "e2": e2, "holds": holds}));
        }
    }
    Ok(Outcome { passed: ok, detail: "bound >= Pr(E2) - 3 sigma on 6 configurations (BSC(0.1), D=0.2, eps=0.1)".into(), values: json!(rows) })
}

fn kl_chain(seed: u64) -> Result<Outcome> {
    let mut rng = stream(seed, &[5]);
    let mut exact = 0;
    for _ in 0..1000 {
        let p = random_rational_pmf(&mut rng, 2, 12, 0.0);
        let q = random_rational_joint(&mut rng, 2, 3, 12, 0.2);
        if kl_chain_report(&q, &p)?.identity_exact == Some(true) {
            exact += 1;
        }
    }
    Ok(Outcome { passed: exact == 1000, detail: format!("{exact}/1000 random rational joints satisfy the chain exactly"), values: json!({"exact": exact}) })
}

fn capacity() -> Result<Outcome> {
    let pair = compound_capacity(&[bsc(1, 10), bsc(1, 5)])?;
    let single = compound_capacity(&[bsc(1, 10)])?;
    let e1 = (pair.capacity - 0.278072).abs();
    let e2 = (single.capacity - 0.531004).abs();
    Ok(Outcome {
        passed: e1 <= 1e-4 && e2 <= 1e-4,
        detail: format!("{{BSC(0.1), BSC(0.2)}} -> {:.6}, {{BSC(0.1)}} -> {:.6} (tol 1e-4)", pair.capacity, single.capacity),
        values: json!({"pair": pair.capacity, "single": single.capacity}),
    })
}

fn chain(seed: u64) -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut holds = 0;
    for i in 0..1000 {
        let inst = random_chain_instance(seed, i, 3);
        let r = verify_single_letterization(&inst.encoder, &inst.decoder, &inst.kernel, &inst.p_x, inst.n)?;
        worst = r.slacks.iter().copied().fold(worst, f64::min);
        holds += r.holds as usize;
    }
    Ok(Outcome {
        passed: holds == 1000 && worst >= -1e-9,
        detail: format!("{holds}/1000 instances, smallest slack {worst:.3e}"),
        values: json!({"holds": holds, "min_slack": worst}),
    })
}

fn end_to_end(seed: u64) -> Result<Outcome> {
    let cfg = SimulationConfig {
        p_x: uniform(),
        eps: 0.1,
        spec: DistortionSpec::hamming(2),
        d: 0.07,
        rate: 0.4,
        n: 128,
        trials: 500,
        batch_size: 25,
        seed,
        mode: SimulationMode::Auto,
    };
    let r = simulate_decay(&compound(1, 20), &cfg, &[128, 512])?;
    let (e128, e512) = (r.profiles[0].worst_error, r.profiles[1].worst_error);
    Ok(Outcome {
        passed: e512 <= 0.05 && e512 <= e128,
        detail: format!("BSC(0.05), D=0.07, R=0.4: error {e128:.4} at n=128, {e512:.4} at n=512"),
        values: json!({"n128": r.profiles[0], "n512": r.profiles[1]}),
    })
}

fn half_lying(seed: u64) -> Result<Outcome> {
    let h = DistortionSpec::hamming(2);
    let d = identity_scheme_distortion(half_lying_channel().as_ref(), &uniform(), &h, 20, 100_000, seed)?;
    let cfg = SimulationConfig {
        p_x: uniform(),
        eps: 0.2,
        spec: h,
        d: 0.1,
        rate: 0.5,
        n: 20,
        trials: 10_000,
        batch_size: 100,
        seed,
        mode: SimulationMode::Auto,
    };
    let err = simulate_reliable_comm(&CompoundChannel::single(half_lying_channel()), &cfg)?.worst_error;
    Ok(Outcome {
        passed: (d.mean - 0.25).abs() <= 0.01 && err >= 0.45,
        detail: format!("expected distortion {:.4} (0.25 +- 0.01), message error {err:.4} (>= 0.45)", d.mean),
        values: json!({"expected_distortion": d, "message_error": err}),
    })
}

fn packing_covering(seed: u64) -> Result<Outcome> {
    let h = DistortionSpec::hamming(2);
    let mut rows = Vec::new();
    let mut ok = true;
    for &n in &[4usize, 8] {
        let cert = h.certify(n)?;
        for &rate in &[0.25, 0.5] {
            let r = mc_packing_covering(n, &uniform(), &uniform(), &cert, &ratio(1, 4), rate, 10_000, seed)?;
            ok &= r.channel_agrees && r.source_agrees;
            rows.push(json!(r));
        }
    }
    Ok(Outcome { passed: ok, detail: "events (correct decoding, covering failure) within 3 sigma at n' in {4, 8}, R in {0.25, 0.5}".into(), values: json!(rows) })
}

fn a_value() -> Result<Outcome> {
    let a = compute_a(4, &uniform(), &DistortionSpec::hamming(2).certify(4)?, &ratio(1, 4))?;
    let want_q = Distribution::rational(&[(1, 4), (3, 4)]).unwrap();
    Ok(Outcome {
        passed: a.a == ratio(1, 2) && a.minimizer_dist == want_q,
        detail: format!("A = {} at q = ({})", crate::probability::rational::format_rational(&a.a), a.minimizer.join(", ")),
        values: json!(a),
    })
}

fn marginal_preservation(seed: u64, fault: Option<Fault>) -> Result<Outcome> {
    let pair = |from, to| PairDemand { from, to, p_x: uniform(), spec: DistortionSpec::hamming(2), d: 0.1 };
    let demands = UnicastDemandSet::new(2, vec![pair(0, 1), pair(1, 0)])?;
    let sys = ExactSystem::new(MediumKernel::interfering(ratio(1, 10))?, demands, 2)?;
    let skewed = Distribution::rational(&[(3, 4), (1, 4)]).unwrap();
    let matched_law = if fault == Some(Fault::MismatchedCodebookLaw) { skewed.clone() } else { uniform() };
    let (_, matched) = layered_replacement(&sys, 0, 0.5, &matched_law, seed)?;
    let (_, control) = layered_replacement(&sys, 0, 0.5, &skewed, seed)?;
    let preserved = matched.other_pairs_tv <= 1e-12;
    let detected = control.other_pairs_tv > 1e-3;
    let mut detail = format!("matched TV {}, mismatched control TV {:.4}", matched.other_pairs_tv_exact, control.other_pairs_tv);
    if !preserved {
        detail.push_str("; failing check: marginal_preservation");
    }
    Ok(Outcome { passed: preserved && detected, detail, values: json!({"matched": matched, "control": control}) })
}

fn time_limit(id: usize) -> Option<f64> {
    match id {
        1 => Some(5.0),
        2 => Some(60.0),
        4 => Some(120.0),
        6 => Some(30.0),
        7 => Some(60.0),
        8 => Some(600.0),
        _ => None,
    }
}

/// Runs one criterion. Runtime ceilings count towards the verdict.
pub fn run_criterion(id: usize, opts: &VerifyOptions, cached: &mut Option<Vec<DualitySweep>>) -> Result<CriterionResult> {
    let start = Instant::now();
    let seed = opts.seed;
    let mut sweep_secs = 0.0;
    let mut get_sweeps = |cached: &mut Option<Vec<DualitySweep>>| -> Result<Vec<DualitySweep>> {
        if cached.is_none() {
            let t = Instant::now();
            *cached = Some(sweeps(seed)?);
            sweep_secs = t.elapsed().as_secs_f64();
        }
        Ok(cached.clone().unwrap())
    };
    let outcome = match id {
        1 => rate_distortion_oracle()?,
        2 => duality(&get_sweeps(cached)?),
        3 => invariance(&get_sweeps(cached)?),
        4 => union_bound(seed)?,
        5 => kl_chain(seed)?,
        6 => capacity()?,
        7 => chain(seed)?,
        8 => end_to_end(seed)?,
        9 => half_lying(seed)?,
        10 => packing_covering(seed)?,
        11 => a_value()?,
        12 => marginal_preservation(seed, opts.fault)?,
        other => return Err(crate::Error::Config(format!("no criterion {other}"))),
    };
    // criterion 3 reuses the sweep of criterion 2; its own time is the comparison only
    let seconds = if id == 3 { start.elapsed().as_secs_f64() - sweep_secs } else { start.elapsed().as_secs_f64() };
    let limit = time_limit(id);
    let in_time = limit.is_none_or(|l| seconds <= l);
    let mut detail = outcome.detail;
    if !in_time {
        detail.push_str(&format!("; over the {:.0}s runtime limit", limit.unwrap()));
    }
    Ok(CriterionResult {
        id,
        name: criterion_name(id).into(),
        passed: outcome.passed && in_time,
        detail,
        seconds,
        time_limit: limit,
        values: outcome.values,
    })
}

/// Runs the selected criteria in order, stopping when the budget is spent.
pub fn verify_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    let start = Instant::now();
    let ids: Vec<usize> = if opts.only.is_empty() { (1..=CRITERIA).collect() } else { opts.only.clone() };
    let mut criteria = Vec::new();
    let mut skipped = Vec::new();
    let mut cached = None;
    for (i, &id) in ids.iter().enumerate() {
        if opts.budget.is_some_and(|b| start.elapsed() >= b) {
            skipped = ids[i..].to_vec();
            break;
        }
        criteria.push(run_criterion(id, opts, &mut cached)?);
    }
    let budget_exceeded = !skipped.is_empty() || opts.budget.is_some_and(|b| start.elapsed() > b);
    Ok(VerifyReport {
        seed: opts.seed,
        passed: criteria.iter().all(|c| c.passed) && skipped.is_empty(),
        criteria,
        budget_exceeded,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_budget_runs_nothing() {
        let r = verify_all(&VerifyOptions { budget: Some(Duration::ZERO), ..Default::default() }).unwrap();
        assert!(r.criteria.is_empty());
        assert!(r.budget_exceeded && !r.passed);
        assert_eq!(r.skipped.len(), CRITERIA);
    }

    #[test]
    fn quick_criteria_pass() {
        let r = verify_all(&VerifyOptions { only: vec![11, 12], ..Default::default() }).unwrap();
        assert!(r.passed, "{:?}", r.criteria);
    }

    #[test]
    fn injected_fault_is_caught() {
        let r = verify_all(&VerifyOptions { only: vec![12], fault: Some(Fault::MismatchedCodebookLaw), ..Default::default() }).unwrap();
        assert!(!r.passed);
        assert!(r.criteria[0].detail.contains("marginal_preservation"));
    }
}
