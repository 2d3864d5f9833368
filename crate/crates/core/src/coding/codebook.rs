use std::collections::HashMap;
use std::sync::Mutex;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::Serialize;

use crate::distortion::{DistortionSpec, FLOAT_COMPARE_SLACK};
use crate::error::{Error, Result};
use crate::probability::rational::ln_factorial;
use crate::probability::Distribution;
use crate::types::{counts_in_ranges, type_counts, typical_count_ranges, TypeClass};

/// Largest codebook (log2 of the size) that is ever materialized.
pub const MAX_EXPLICIT_LOG2: u32 = 20;

/// `floor(n R)`, guarded against representation error in `R`.
pub fn log2_size(n: usize, rate: f64) -> u64 {
    (n as f64 * rate + 1e-9).floor().max(0.0) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    Iid,
    UniformType,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Codebook {
    pub n: usize,
    pub rate: f64,
    pub words: Vec<Vec<usize>>,
    pub mode: CodebookMode,
}

impl Codebook {
    pub fn explicit(words: Vec<Vec<usize>>) -> Result<Self> {
        let n = words.first().ok_or(Error::EmptySet)?.len();
        if let Some(w) = words.iter().find(|w| w.len() != n) {
            return Err(Error::LengthMismatch { left: n, right: w.len() });
        }
        let rate = if n == 0 { 0.0 } else { (words.len() as f64).log2() / n as f64 };
        Ok(Codebook { n, rate, words, mode: CodebookMode::Explicit })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Samples letters i.i.d. from a pmf.
#[derive(Clone, Debug)]
pub struct LetterSampler(WeightedIndex<f64>);

impl LetterSampler {
    pub fn new(p: &Distribution) -> Self {
        LetterSampler(WeightedIndex::new(p.probs()).expect("valid pmf"))
    }

    pub fn word<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.0.sample(rng)).collect()
    }
}

fn check_size(n: usize, rate: f64) -> Result<usize> {
    if rate < 0.0 || rate.is_nan() {
        return Err(Error::Negative(format!("rate {rate}")));
    }
    let k = log2_size(n, rate);
    if k > MAX_EXPLICIT_LOG2 as u64 {
        return Err(Error::BudgetExceeded { size: format!("2^{k} codewords"), budget: 1 << MAX_EXPLICIT_LOG2 });
    }
    Ok(1usize << k)
}

/// `2^floor(nR)` codewords with letters i.i.d. `p_X`.
pub fn generate_iid_codebook<R: Rng + ?Sized>(p_x: &Distribution, n: usize, rate: f64, rng: &mut R) -> Result<Codebook> {
    let m = check_size(n, rate)?;
    let sampler = LetterSampler::new(p_x);
    let words = (0..m).map(|_| sampler.word(n, rng)).collect();
    Ok(Codebook { n, rate, words, mode: CodebookMode::Iid })
}

/// `2^floor(nR)` codewords drawn independently and uniformly from a type class.
pub fn generate_type_codebook<R: Rng + ?Sized>(class: &TypeClass, rate: f64, rng: &mut R) -> Result<Codebook> {
    let m = check_size(class.n(), rate)?;
    let words = (0..m).map(|_| class.sample(rng)).collect();
    Ok(Codebook { n: class.n(), rate, words, mode: CodebookMode::UniformType })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "value")]
pub enum Decoded {
    Index(usize),
    /// No codeword qualifies.
    None,
    /// This many codewords qualify.
    Ambiguous(usize),
}

/// Joint typicality test: `x` is eps-typical for `p_X` and `(1/n) d(x, y) <= D`.
#[derive(Clone, Debug)]
pub struct TypicalityTest {
    n: usize,
    k: usize,
    ranges: Vec<(u64, u64)>,
    spec: DistortionSpec,
    d: f64,
}

impl TypicalityTest {
    pub fn new(n: usize, p_x: &Distribution, eps: f64, spec: &DistortionSpec, d: f64) -> Result<Self> {
        if spec.sources() != p_x.len() {
            return Err(Error::AlphabetMismatch(format!(
                "distortion over {} letters, source over {}",
                spec.sources(),
                p_x.len()
            )));
        }
        Ok(TypicalityTest { n, k: p_x.len(), ranges: typical_count_ranges(n, p_x, eps)?, spec: spec.clone(), d })
    }

    pub fn typical(&self, x: &[usize]) -> bool {
        let mut counts = vec![0u64; self.k];
        for &s in x {
            counts[s] += 1;
        }
        counts_in_ranges(&counts, &self.ranges)
    }

    pub fn close(&self, x: &[usize], y: &[usize]) -> bool {
        self.spec.within(x, y, self.d)
    }

    pub fn qualifies(&self, x: &[usize], y: &[usize]) -> bool {
        x.len() == self.n && self.typical(x) && self.close(x, y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ranges(&self) -> &[(u64, u64)] {
        &self.ranges
    }

    pub fn decode(&self, y: &[usize], codebook: &Codebook) -> Decoded {
        let mut found = None;
        let mut count = 0;
        for (i, w) in codebook.words.iter().enumerate() {
            if self.qualifies(w, y) {
                count += 1;
                found.get_or_insert(i);
            }
        }
        match count {
            0 => Decoded::None,
            1 => Decoded::Index(found.unwrap()),
            c => Decoded::Ambiguous(c),
        }
    }
}

/// Returns the unique qualifying codeword, or why there is none.
pub fn typicality_decode(
    y: &[usize],
    codebook: &Codebook,
    p_x: &Distribution,
    eps: f64,
    spec: &DistortionSpec,
    d: f64,
) -> Result<Decoded> {
    if y.len() != codebook.n {
        return Err(Error::LengthMismatch { left: y.len(), right: codebook.n });
    }
    if let Some(&s) = y.iter().find(|&&s| s >= spec.reproductions()) {
        return Err(Error::SymbolOutOfRange { symbol: s, size: spec.reproductions() });
    }
    Ok(TypicalityTest::new(codebook.n, p_x, eps, spec, d)?.decode(y, codebook))
}

/// Upper limit on compositions visited when computing one match probability.
pub const MATCH_ENUMERATION_LIMIT: u64 = 20_000_000;

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Pr[W qualifies against a fixed block f]` for a random block `W` i.i.d. `law`,
/// where qualifying means `sum_t cost[W_t][f_t] <= n D` and, optionally, `W` typical.
///
/// The value depends on `f` only through its type, so results are cached per type.
/// Computed by enumerating conditional compositions of `W` given each letter of `f`.
pub struct MatchProbability {
    n: usize,
    ln_law: Vec<f64>,
    cost: Vec<Vec<f64>>,
    budget: f64,
    ranges: Option<Vec<(u64, u64)>>,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

impl MatchProbability {
    /// `cost[w][f]` is the per-letter cost of random letter `w` against fixed letter `f`.
    pub fn new(n: usize, law: &Distribution, cost: Vec<Vec<f64>>, d: f64, typical: Option<(&Distribution, f64)>) -> Result<Self> {
        if cost.len() != law.len() {
            return Err(Error::DimensionMismatch { expected: law.len(), got: cost.len() });
        }
        let ranges = typical.map(|(p, eps)| typical_count_ranges(n, p, eps)).transpose()?;
        Ok(MatchProbability {
            n,
            ln_law: law.probs().iter().map(|p| p.ln()).collect(),
            cost,
            budget: n as f64 * d + FLOAT_COMPARE_SLACK,
            ranges,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Channel decoding: codeword `Z` i.i.d. `p_X`, typical, `d(Z, y) <= nD`.
    pub fn for_decoding(n: usize, p_x: &Distribution, eps: f64, spec: &DistortionSpec, d: f64) -> Result<Self> {
        let m = spec.matrix()?;
        let cost = (0..m.sources()).map(|x| (0..m.reproductions()).map(|y| m.get(x, y)).collect()).collect();
        Self::new(n, p_x, cost, d, Some((p_x, eps)))
    }

    /// Covering: reproduction `V` i.i.d. `q`, `d(x, V) <= nD`.
    pub fn for_covering(n: usize, q: &Distribution, spec: &DistortionSpec, d: f64) -> Result<Self> {
        let m = spec.matrix()?;
        let cost = (0..m.reproductions()).map(|y| (0..m.sources()).map(|x| m.get(x, y)).collect()).collect();
        Self::new(n, q, cost, d, None)
    }

    pub fn ln_prob(&self, fixed: &[usize]) -> Result<f64> {
        if fixed.len() != self.n {
            return Err(Error::LengthMismatch { left: fixed.len(), right: self.n });
        }
        let kf = self.cost.first().map_or(0, |r| r.len());
        let counts = type_counts(fixed, kf)?;
        if let Some(&v) = self.cache.lock().unwrap().get(&counts) {
            return Ok(v);
        }
        let v = self.ln_prob_counts(&counts)?;
        self.cache.lock().unwrap().insert(counts, v);
        Ok(v)
    }

    pub fn prob(&self, fixed: &[usize]) -> Result<f64> {
        Ok(self.ln_prob(fixed)?.exp())
    }

    fn ln_prob_counts(&self, fixed_counts: &[u64]) -> Result<f64> {
        let kw = self.ln_law.len();
        // per fixed letter: (composition of its positions among random letters, ln weight, cost)
        let mut options = Vec::with_capacity(fixed_counts.len());
        let mut visited = 0u64;
        for (b, &m) in fixed_counts.iter().enumerate() {
            let mut here = Vec::new();
            for parts in compositions(m, kw) {
                visited += 1;
                if visited > MATCH_ENUMERATION_LIMIT {
                    return Err(Error::BudgetExceeded { size: "conditional compositions".into(), budget: MATCH_ENUMERATION_LIMIT });
                }
                if parts.iter().zip(&self.ln_law).any(|(&c, &l)| c > 0 && l == f64::NEG_INFINITY) {
                    continue;
                }
                let ln_w = ln_factorial(m) - parts.iter().map(|&k| ln_factorial(k)).sum::<f64>()
                    + parts.iter().zip(&self.ln_law).filter(|(&c, _)| c > 0).map(|(&c, &l)| c as f64 * l).sum::<f64>();
                let cost: f64 = parts.iter().enumerate().map(|(a, &c)| c as f64 * self.cost[a][b]).sum();
                if cost <= self.budget {
                    here.push((parts, ln_w, cost));
                }
            }
            options.push(here);
        }
        let mut terms = Vec::new();
        let mut w_counts = vec![0u64; kw];
        self.dfs(&options, 0, &mut w_counts, 0.0, 0.0, &mut terms, &mut visited)?;
        Ok(logsumexp(&terms))
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        options: &[Vec<(Vec<u64>, f64, f64)>],
        b: usize,
        w_counts: &mut [u64],
        cost: f64,
        ln_w: f64,
        terms: &mut Vec<f64>,
        visited: &mut u64,
    ) -> Result<()> {
        if b == options.len() {
            if self.ranges.as_ref().is_none_or(|r| counts_in_ranges(w_counts, r)) {
                terms.push(ln_w);
            }
            return Ok(());
        }
        for (parts, w, c) in &options[b] {
            *visited += 1;
            if *visited > MATCH_ENUMERATION_LIMIT {
                return Err(Error::BudgetExceeded { size: "conditional compositions".into(), budget: MATCH_ENUMERATION_LIMIT });
            }
            if cost + c > self.budget {
                continue;
            }
            w_counts.iter_mut().zip(parts).for_each(|(x, p)| *x += p);
            let over = self.ranges.as_ref().is_some_and(|r| w_counts.iter().zip(r).any(|(&x, &(_, hi))| x > hi));
            if !over {
                self.dfs(options, b + 1, w_counts, cost + c, ln_w + w, terms, visited)?;
            }
            w_counts.iter_mut().zip(parts).for_each(|(x, p)| *x -= p);
        }
        Ok(())
    }
}

/// All ways to write `m` as an ordered sum of `k` nonnegative parts.
pub fn compositions(m: u64, k: usize) -> Vec<Vec<u64>> {
    fn rec(rem: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=rem {
            prefix.push(c);
            rec(rem - c, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(m, k, &mut Vec::new(), &mut out);
    }
    out
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Pr[at least one of `count` independent trials succeeds], each with probability `exp(ln_p)`.
pub fn prob_any(ln_p: f64, count: f64) -> f64 {
    if count <= 0.0 || ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    let ln_none = count * ln_one_minus_exp(ln_p.min(0.0));
    -ln_none.exp_m1()
}
