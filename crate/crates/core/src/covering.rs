//! Exact excess-distortion probabilities over type classes.
//!
//! Channel side: `Pr[d(U, y_q) > n D]` with `U` uniform on the source type class and `y_q`
//! a fixed block of type `q`. Source side: `Pr[d(u, V_q) > n D]` with `u` a fixed source
//! block and `V_q` uniform on the type class of `q`. Both are computed either by listing
//! the type class or, for additive distortions, by counting joint types.

use std::collections::BTreeMap;

use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{compositions, log2_size};
use crate::distortion::{CertifiedDistortion, DistortionKind, DistortionSpec};
use crate::error::{Error, Result};
use crate::probability::rational::{format_rational, multinomial, to_f64, Rational};
use crate::probability::Distribution;
use crate::report::Estimate;
use crate::rng::stream;
use crate::types::{achievable_types, type_class, type_counts, Permutation, TypeClass, UniformSourceSpec, DEFAULT_ENUMERATION_BUDGET};

/// Number of random representatives re-checked per case.
pub const REPRESENTATIVES: usize = 5;
const REPRESENTATIVE_SEED: u64 = 0xD0A1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// List every member of the random type class.
    Enumeration,
    /// Count members per joint type; additive distortions only.
    JointType,
}

/// Block-distortion histogram of a uniformly random type-class member against a fixed block.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcessProfile {
    pub n: usize,
    pub total: BigUint,
    pub counts: BTreeMap<Rational, BigUint>,
}

impl ExcessProfile {
    /// `Pr[(1/n) d > D]`, exactly.
    pub fn excess(&self, d: &Rational) -> Rational {
        let limit = d * Rational::from_integer(self.n.into());
        let over: BigUint = self.counts.iter().filter(|(v, _)| **v > limit).map(|(_, c)| c.clone()).sum();
        Rational::new(over.into(), self.total.clone().into())
    }

    pub fn max_value(&self) -> Rational {
        self.counts.keys().next_back().cloned().unwrap_or_else(Rational::zero)
    }
}

fn enumerate_profile(members: &TypeClass, fixed: &[usize], spec: &DistortionSpec, random_is_source: bool) -> Result<ExcessProfile> {
    let mut counts: BTreeMap<Rational, BigUint> = BTreeMap::new();
    for m in members.members_within(DEFAULT_ENUMERATION_BUDGET)? {
        let v = if random_is_source { spec.block_distortion(&m, fixed)? } else { spec.block_distortion(fixed, &m)? };
        *counts.entry(v).or_insert_with(BigUint::zero) += 1u32;
    }
    Ok(ExcessProfile { n: members.n(), total: members.cardinality().clone(), counts })
}

/// Histogram by joint types: for fixed-letter counts `fixed` and random-class counts `free`,
/// the number of random blocks with joint count matrix `K` is `prod_f multinomial(K[f][.])`.
fn joint_type_profile(n: usize, fixed: &[u64], free: &[u64], cost: impl Fn(usize, usize) -> Rational) -> ExcessProfile {
    let options: Vec<Vec<Vec<u64>>> =
        fixed.iter().map(|&m| compositions(m, free.len()).into_iter().filter(|p| p.iter().zip(free).all(|(a, b)| a <= b)).collect()).collect();
    let mut counts: BTreeMap<Rational, BigUint> = BTreeMap::new();
    let mut used = vec![0u64; free.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: usize,
        options: &[Vec<Vec<u64>>],
        free: &[u64],
        used: &mut [u64],
        value: Rational,
        weight: BigUint,
        cost: &dyn Fn(usize, usize) -> Rational,
        counts: &mut BTreeMap<Rational, BigUint>,
    ) {
        if f == options.len() {
            if used == free {
                *counts.entry(value).or_insert_with(BigUint::zero) += weight;
            }
            return;
        }
        for parts in &options[f] {
            if used.iter().zip(parts).zip(free).any(|((u, p), c)| u + p > *c) {
                continue;
            }
            used.iter_mut().zip(parts).for_each(|(u, p)| *u += p);
            let extra: Rational = parts.iter().enumerate().filter(|(_, &k)| k > 0).map(|(g, &k)| cost(f, g) * Rational::from_integer(k.into())).sum();
            rec(f + 1, options, free, used, &value + extra, &weight * multinomial(parts), cost, counts);
            used.iter_mut().zip(parts).for_each(|(u, p)| *u -= p);
        }
    }
    rec(0, &options, free, &mut used, Rational::zero(), BigUint::one(), &cost, &mut counts);
    ExcessProfile { n, total: multinomial(free), counts }
}

struct Setup {
    n: usize,
    source: TypeClass,
    output: TypeClass,
}

fn setup(n: usize, p_x: &Distribution, q: &Distribution, cert: &CertifiedDistortion) -> Result<Setup> {
    cert.require(n)?;
    let spec = cert.spec();
    if p_x.len() != spec.sources() || q.len() != spec.reproductions() {
        return Err(Error::AlphabetMismatch("p_X and q must match the distortion alphabets".into()));
    }
    let source = UniformSourceSpec::new(p_x.clone())?.support(n)?;
    let output = type_class(n, q)?;
    Ok(Setup { n, source, output })
}

fn channel_profile(s: &Setup, spec: &DistortionSpec, rep: Option<&[usize]>) -> Result<ExcessProfile> {
    match (spec.kind(), rep) {
        (DistortionKind::Additive(m), None) => {
            Ok(joint_type_profile(s.n, s.output.counts(), s.source.counts(), |y, x| m.get_exact(x, y).clone()))
        }
        _ => {
            let y = rep.map_or_else(|| s.output.canonical(), |r| r.to_vec());
            enumerate_profile(&s.source, &y, spec, true)
        }
    }
}

fn source_profile(s: &Setup, spec: &DistortionSpec, rep: Option<&[usize]>) -> Result<ExcessProfile> {
    match (spec.kind(), rep) {
        (DistortionKind::Additive(m), None) => {
            Ok(joint_type_profile(s.n, s.source.counts(), s.output.counts(), |x, y| m.get_exact(x, y).clone()))
        }
        _ => {
            let u = rep.map_or_else(|| s.source.canonical(), |r| r.to_vec());
            enumerate_profile(&s.output, &u, spec, false)
        }
    }
}

/// `Pr[(1/n) d(U, y_q) > D]`, `U` uniform on the type class of `p_X`, `y_q` canonical of type `q`.
pub fn excess_prob_channel_side(n: usize, p_x: &Distribution, q: &Distribution, cert: &CertifiedDistortion, d: &Rational) -> Result<Rational> {
    let s = setup(n, p_x, q, cert)?;
    Ok(channel_profile(&s, cert.spec(), None)?.excess(d))
}

/// `Pr[(1/n) d(u, V_q) > D]`, `u` canonical of type `p_X`, `V_q` uniform on the type class of `q`.
pub fn excess_prob_source_side(n: usize, p_x: &Distribution, q: &Distribution, cert: &CertifiedDistortion, d: &Rational) -> Result<Rational> {
    let s = setup(n, p_x, q, cert)?;
    Ok(source_profile(&s, cert.spec(), None)?.excess(d))
}

/// Channel side against a given representative `y` of type `q`, by enumeration.
pub fn excess_prob_channel_side_at(
    n: usize,
    p_x: &Distribution,
    q: &Distribution,
    cert: &CertifiedDistortion,
    d: &Rational,
    y: &[usize],
) -> Result<Rational> {
    let s = setup(n, p_x, q, cert)?;
    if !s.output.contains(y) {
        return Err(Error::Config("representative is not of type q".into()));
    }
    Ok(channel_profile(&s, cert.spec(), Some(y))?.excess(d))
}

/// Source side against a given representative `u` of type `p_X`, by enumeration.
pub fn excess_prob_source_side_at(
    n: usize,
    p_x: &Distribution,
    q: &Distribution,
    cert: &CertifiedDistortion,
    d: &Rational,
    u: &[usize],
) -> Result<Rational> {
    let s = setup(n, p_x, q, cert)?;
    if !s.source.contains(u) {
        return Err(Error::Config("representative is not of type p_X".into()));
    }
    Ok(source_profile(&s, cert.spec(), Some(u))?.excess(d))
}

pub fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualitySample {
    pub n: usize,
    pub p_x: Vec<String>,
    pub q: Vec<String>,
    pub spec: String,
    #[serde(serialize_with = "ser_rational")]
    pub d: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub channel: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub source: Rational,
    pub representatives: usize,
}

fn representative_rng(n: usize, counts: &[u64], seed: u64) -> crate::rng::SimRng {
    let mut path = vec![n as u64];
    path.extend_from_slice(counts);
    stream(seed, &path)
}

fn random_representatives(class: &TypeClass, count: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let canonical = class.canonical();
    (0..count).map(|_| Permutation::random(class.n(), rng).apply(&canonical)).collect()
}

/// Both sides computed independently and compared exactly; each side is also recomputed
/// against [`REPRESENTATIVES`] randomly permuted representatives.
pub fn verify_duality(n: usize, p_x: &Distribution, q: &Distribution, cert: &CertifiedDistortion, d: &Rational) -> Result<DualitySample> {
    let s = setup(n, p_x, q, cert)?;
    let spec = cert.spec();
    let channel = channel_profile(&s, spec, None)?.excess(d);
    let source = source_profile(&s, spec, None)?.excess(d);
    if channel != source {
        return Err(Error::DualityViolated { channel: format_rational(&channel), source_side: format_rational(&source) });
    }
    let mut rng = representative_rng(n, s.output.counts(), REPRESENTATIVE_SEED);
    for y in random_representatives(&s.output, REPRESENTATIVES, &mut rng) {
        let v = channel_profile(&s, spec, Some(&y))?.excess(d);
        if v != channel {
            return Err(Error::DualityViolated { channel: format!("{} at representative {:?}", format_rational(&v), y), source_side: format_rational(&source) });
        }
    }
    for u in random_representatives(&s.source, REPRESENTATIVES, &mut rng) {
        let v = source_profile(&s, spec, Some(&u))?.excess(d);
        if v != source {
            return Err(Error::DualityViolated { channel: format_rational(&channel), source_side: format!("{} at representative {:?}", format_rational(&v), u) });
        }
    }
    Ok(DualitySample {
        n,
        p_x: p_x.mass_strings(),
        q: q.mass_strings(),
        spec: spec.name(),
        d: d.clone(),
        channel,
        source,
        representatives: REPRESENTATIVES,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityCase {
    pub n: usize,
    pub q: Vec<String>,
    #[serde(serialize_with = "ser_rational")]
    pub d: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub channel: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub source: Rational,
    pub equal: bool,
    /// Every re-drawn representative reproduced both sides exactly.
    pub representative_invariant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualitySweep {
    pub p_x: Vec<String>,
    pub spec: String,
    pub blocklengths: Vec<usize>,
    pub cases: Vec<DualityCase>,
    pub all_equal: bool,
    pub representative_invariant: bool,
}

/// Every admissible `n' <= max_n`, every achievable `q`, every `D` on the `1/n'` grid up to
/// the largest block distortion.
pub fn duality_sweep(p_x: &Distribution, spec: &DistortionSpec, max_n: usize, reps: usize, seed: u64) -> Result<DualitySweep> {
    let source = UniformSourceSpec::new(p_x.clone())?;
    let blocklengths = source.admissible_up_to(max_n);
    let alphabet = crate::probability::Alphabet::indexed(spec.reproductions());
    let per_n: Vec<Vec<DualityCase>> = blocklengths
        .par_iter()
        .map(|&n| -> Result<Vec<DualityCase>> {
            let cert = spec.certify(n)?;
            let mut cases = Vec::new();
            for q in achievable_types(n, &alphabet) {
                let s = setup(n, p_x, &q, &cert)?;
                let ch = channel_profile(&s, spec, None)?;
                let so = source_profile(&s, spec, None)?;
                let mut rng = representative_rng(n, s.output.counts(), seed);
                let ch_reps = random_representatives(&s.output, reps, &mut rng)
                    .iter()
                    .map(|y| channel_profile(&s, spec, Some(y)))
                    .collect::<Result<Vec<_>>>()?;
                let so_reps = random_representatives(&s.source, reps, &mut rng)
                    .iter()
                    .map(|u| source_profile(&s, spec, Some(u)))
                    .collect::<Result<Vec<_>>>()?;
                let top = ch.max_value().max(so.max_value()).ceil().to_integer();
                let top = top.to_u64().unwrap_or(0) as usize;
                for j in 0..=top.max(n) {
                    let d = Rational::new(j.into(), n.into());
                    let channel = ch.excess(&d);
                    let source = so.excess(&d);
                    let representative_invariant =
                        ch_reps.iter().all(|p| p.excess(&d) == channel) && so_reps.iter().all(|p| p.excess(&d) == source);
                    cases.push(DualityCase {
                        n,
                        q: q.mass_strings(),
                        d,
                        equal: channel == source,
                        channel,
                        source,
                        representative_invariant,
                    });
                }
            }
            Ok(cases)
        })
        .collect::<Result<_>>()?;
    let cases: Vec<DualityCase> = per_n.into_iter().flatten().collect();
    Ok(DualitySweep {
        p_x: p_x.mass_strings(),
        spec: spec.name(),
        blocklengths,
        all_equal: cases.iter().all(|c| c.equal),
        representative_invariant: cases.iter().all(|c| c.representative_invariant),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeValue {
    pub q: Vec<String>,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AValue {
    pub n: usize,
    #[serde(serialize_with = "ser_rational")]
    pub a: Rational,
    pub minimizer: Vec<String>,
    #[serde(skip)]
    pub minimizer_dist: Distribution,
    pub per_type: Vec<TypeValue>,
}

/// `A_n' = min_q Pr[(1/n') d(U, y_q) > D]` over achievable output types; ties go to the
/// lexicographically smallest `q`.
pub fn compute_a(n: usize, p_x: &Distribution, cert: &CertifiedDistortion, d: &Rational) -> Result<AValue> {
    let alphabet = crate::probability::Alphabet::indexed(cert.spec().reproductions());
    let mut types = achievable_types(n, &alphabet);
    types.sort_by(|a, b| a.lex_cmp(b));
    let values: Vec<Rational> =
        types.par_iter().map(|q| excess_prob_channel_side(n, p_x, q, cert, d)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    Ok(AValue {
        n,
        a: values[best].clone(),
        minimizer: types[best].mass_strings(),
        minimizer_dist: types[best].clone(),
        per_type: types.iter().zip(&values).map(|(q, v)| TypeValue { q: q.mass_strings(), value: v.clone() }).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    #[serde(serialize_with = "ser_rational")]
    pub a: Rational,
    pub minimizer: Vec<String>,
    pub log2_codebook_size: u64,
    /// `A^(2^floor(n'R) - 1)`.
    pub channel_functional: f64,
    /// `A^(2^floor(n'R))`.
    pub source_functional: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdTrace {
    pub rate: f64,
    pub rows: Vec<ThresholdRow>,
    /// Channel functional nondecreasing along the blocklengths.
    pub channel_trend_up: bool,
    /// Source functional nonincreasing along the blocklengths.
    pub source_trend_down: bool,
}

/// `a^m` for `m` possibly astronomically large.
pub fn power(a: &Rational, m: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    let a = to_f64(a);
    if a == 0.0 {
        0.0
    } else {
        (m * a.ln()).exp()
    }
}

pub fn threshold_trace(p_x: &Distribution, spec: &DistortionSpec, d: &Rational, rate: f64, blocklengths: &[usize]) -> Result<ThresholdTrace> {
    let rows = blocklengths
        .iter()
        .map(|&n| -> Result<ThresholdRow> {
            let cert = spec.certify(n)?;
            let a = compute_a(n, p_x, &cert, d)?;
            let k = log2_size(n, rate);
            let m = 2f64.powi(k as i32);
            Ok(ThresholdRow {
                n,
                channel_functional: power(&a.a, m - 1.0),
                source_functional: power(&a.a, m),
                a: a.a,
                minimizer: a.minimizer,
                log2_codebook_size: k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdTrace {
        rate,
        channel_trend_up: rows.windows(2).all(|w| w[1].channel_functional >= w[0].channel_functional),
        source_trend_down: rows.windows(2).all(|w| w[1].source_functional <= w[0].source_functional),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McPackingCovering {
    pub n: usize,
    pub rate: f64,
    pub codebook_size: u64,
    /// All `M - 1` competing codewords exceed `D` against `y_q`.
    pub channel_event: Estimate,
    pub channel_exact: f64,
    /// All `M` codewords exceed `D` against `u`: covering fails.
    pub source_event: Estimate,
    pub source_exact: f64,
    pub channel_agrees: bool,
    pub source_agrees: bool,
}

const MC_CHANNEL_TAG: u64 = 0x36;
const MC_SOURCE_TAG: u64 = 0x37;

/// Direct simulation with codewords uniform on type classes, against the exact products.
#[allow(clippy::too_many_arguments)]
pub fn mc_packing_covering(
    n: usize,
    p_x: &Distribution,
    q: &Distribution,
    cert: &CertifiedDistortion,
    d: &Rational,
    rate: f64,
    trials: u64,
    seed: u64,
) -> Result<McPackingCovering> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let s = setup(n, p_x, q, cert)?;
    let spec = cert.spec();
    let k = log2_size(n, rate);
    if k > 20 {
        return Err(Error::BudgetExceeded { size: format!("2^{k} codewords"), budget: 1 << 20 });
    }
    let m = 1u64 << k;
    let limit = d * Rational::from_integer(n.into());
    let y = s.output.canonical();
    let u = s.source.canonical();
    let df = to_f64(&limit);
    // float screen with exact fallback near the threshold
    let exceeds = |a: &[usize], b: &[usize]| -> bool {
        let v = spec.block_distortion_f64(a, b).unwrap();
        if (v - df).abs() > 1e-6 {
            v > df
        } else {
            spec.block_distortion(a, b).unwrap() > limit
        }
    };
    let (channel_hits, source_hits): (u64, u64) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rc = stream(seed, &[MC_CHANNEL_TAG, t]);
            let c = (0..m - 1).all(|_| exceeds(&s.source.sample(&mut rc), &y));
            let mut rs = stream(seed, &[MC_SOURCE_TAG, t]);
            let so = (0..m).all(|_| exceeds(&u, &s.output.sample(&mut rs)));
            (c as u64, so as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let pc = channel_profile(&s, spec, None)?.excess(d);
    let ps = source_profile(&s, spec, None)?.excess(d);
    let channel_exact = power(&pc, (m - 1) as f64);
    let source_exact = power(&ps, m as f64);
    let channel_event = Estimate::new(channel_hits, trials);
    let source_event = Estimate::new(source_hits, trials);
    Ok(McPackingCovering {
        n,
        rate,
        codebook_size: m,
        channel_agrees: channel_event.agrees_with(channel_exact, 3.0),
        source_agrees: source_event.agrees_with(source_exact, 3.0),
        channel_event,
        channel_exact,
        source_event,
        source_exact,
    })
}

/// Type counts of a block, as a convenience for callers holding representatives.
pub fn block_type(block: &[usize], k: usize) -> Result<Vec<u64>> {
    type_counts(block, k)
}
