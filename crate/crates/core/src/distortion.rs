//! Block distortion functions.
//!
//! Additive specs extend a per-letter matrix `d(x, y)` to blocks by summation. General
//! specs are opaque block evaluators; code that relies on permutation invariance takes a
//! [`CertifiedDistortion`], which can only be obtained from a passing invariance check.

use std::fmt;
use std::sync::Arc;

use num::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::rational::{int, parse_rational, to_f64, Rational};
use crate::probability::Distribution;
use crate::rng::stream;
use crate::types::{all_sequences, Permutation};

/// Slack used when comparing float block distortions against `n * D`.
pub const FLOAT_COMPARE_SLACK: f64 = 1e-9;

type Evaluator = dyn Fn(&[usize], &[usize]) -> Rational + Send + Sync;

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionMatrix {
    sources: usize,
    reproductions: usize,
    exact: Vec<Rational>,
    float: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let sources = rows.len();
        let reproductions = rows.first().map(Vec::len).unwrap_or(0);
        if sources == 0 || reproductions == 0 {
            return Err(Error::Config("empty distortion matrix".into()));
        }
        if rows.iter().any(|r| r.len() != reproductions) {
            return Err(Error::Config("ragged distortion matrix".into()));
        }
        let exact: Vec<Rational> = rows.into_iter().flatten().collect();
        if exact.iter().any(|v| v.is_negative()) {
            return Err(Error::Negative("distortion entry".into()));
        }
        let float = exact.iter().map(to_f64).collect();
        Ok(DistortionMatrix { sources, reproductions, exact, float })
    }

    pub fn hamming(k: usize) -> Self {
        let rows = (0..k).map(|i| (0..k).map(|j| int((i != j) as i64)).collect()).collect();
        Self::new(rows).expect("hamming matrix")
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn reproductions(&self) -> usize {
        self.reproductions
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.float[x * self.reproductions + y]
    }

    pub fn get_exact(&self, x: usize, y: usize) -> &Rational {
        &self.exact[x * self.reproductions + y]
    }

    pub fn max_entry(&self) -> f64 {
        self.float.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_entry_exact(&self) -> Rational {
        self.exact.iter().cloned().fold(Rational::zero(), |a, b| if b > a { b } else { a })
    }
}

#[derive(Clone)]
pub enum DistortionKind {
    Additive(DistortionMatrix),
    General { name: String, sources: usize, reproductions: usize, eval: Arc<Evaluator> },
}

/// A block distortion function.
#[derive(Clone)]
pub struct DistortionSpec {
    kind: DistortionKind,
}

impl fmt::Debug for DistortionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DistortionKind::Additive(m) => f.debug_tuple("Additive").field(m).finish(),
            DistortionKind::General { name, .. } => f.debug_tuple("General").field(name).finish(),
        }
    }
}

impl DistortionSpec {
    pub fn additive(matrix: DistortionMatrix) -> Self {
        DistortionSpec { kind: DistortionKind::Additive(matrix) }
    }

    pub fn hamming(k: usize) -> Self {
        Self::additive(DistortionMatrix::hamming(k))
    }

    /// An opaque block evaluator; values must be finite and nonnegative.
    pub fn general<F>(name: &str, sources: usize, reproductions: usize, eval: F) -> Self
    where
        F: Fn(&[usize], &[usize]) -> Rational + Send + Sync + 'static,
    {
        DistortionSpec {
            kind: DistortionKind::General { name: name.to_string(), sources, reproductions, eval: Arc::new(eval) },
        }
    }

    /// Hamming distance between the sorted versions of the two blocks.
    pub fn sorted_sequence(k: usize) -> Self {
        Self::general("sorted_sequence", k, k, |x, y| {
            let mut a = x.to_vec();
            let mut b = y.to_vec();
            a.sort_unstable();
            b.sort_unstable();
            int(a.iter().zip(&b).filter(|(p, q)| p != q).count() as i64)
        })
    }

    /// `sum_i (i+1) [x_i != y_i]`: not permutation invariant.
    pub fn position_weighted(k: usize) -> Self {
        Self::general("position_weighted", k, k, |x, y| {
            int(x.iter().zip(y).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i as i64 + 1).sum())
        })
    }

    pub fn kind(&self) -> &DistortionKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            DistortionKind::Additive(_) => "additive".into(),
            DistortionKind::General { name, .. } => name.clone(),
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.kind, DistortionKind::Additive(_))
    }

    pub fn matrix(&self) -> Result<&DistortionMatrix> {
        match &self.kind {
            DistortionKind::Additive(m) => Ok(m),
            DistortionKind::General { .. } => Err(Error::NotAdditive),
        }
    }

    pub fn sources(&self) -> usize {
        match &self.kind {
            DistortionKind::Additive(m) => m.sources,
            DistortionKind::General { sources, .. } => *sources,
        }
    }

    pub fn reproductions(&self) -> usize {
        match &self.kind {
            DistortionKind::Additive(m) => m.reproductions,
            DistortionKind::General { reproductions, .. } => *reproductions,
        }
    }

    fn check(&self, x: &[usize], y: &[usize]) -> Result<()> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        if let Some(&s) = x.iter().find(|&&s| s >= self.sources()) {
            return Err(Error::SymbolOutOfRange { symbol: s, size: self.sources() });
        }
        if let Some(&s) = y.iter().find(|&&s| s >= self.reproductions()) {
            return Err(Error::SymbolOutOfRange { symbol: s, size: self.reproductions() });
        }
        Ok(())
    }

    /// Exact block distortion `d^n(x, y)`; divide by `n` for the per-letter value.
    pub fn block_distortion(&self, x: &[usize], y: &[usize]) -> Result<Rational> {
        self.check(x, y)?;
        Ok(self.eval_exact(x, y))
    }

    pub(crate) fn eval_exact(&self, x: &[usize], y: &[usize]) -> Rational {
        match &self.kind {
            DistortionKind::Additive(m) => x.iter().zip(y).map(|(&a, &b)| m.get_exact(a, b)).sum(),
            DistortionKind::General { eval, .. } => eval(x, y),
        }
    }

    /// Float block distortion, for simulation hot paths.
    pub fn block_distortion_f64(&self, x: &[usize], y: &[usize]) -> Result<f64> {
        self.check(x, y)?;
        Ok(self.eval_f64(x, y))
    }

    pub(crate) fn eval_f64(&self, x: &[usize], y: &[usize]) -> f64 {
        match &self.kind {
            DistortionKind::Additive(m) => x.iter().zip(y).map(|(&a, &b)| m.get(a, b)).sum(),
            DistortionKind::General { eval, .. } => to_f64(&eval(x, y)),
        }
    }

    /// `(1/n) d^n(x, y) <= D` in float arithmetic with [`FLOAT_COMPARE_SLACK`].
    pub(crate) fn within(&self, x: &[usize], y: &[usize], d: f64) -> bool {
        self.eval_f64(x, y) <= x.len() as f64 * d + FLOAT_COMPARE_SLACK
    }

    /// Certifies permutation invariance at blocklength `n`, exhaustively when `n <= 6`
    /// and with 10^4 seeded random triples otherwise.
    pub fn certify(&self, n: usize) -> Result<CertifiedDistortion> {
        let mode = if self.is_additive() || n <= EXHAUSTIVE_MAX_N {
            CheckMode::Exhaustive
        } else {
            CheckMode::Random { trials: 10_000, seed: 0x5EED }
        };
        let report = check_permutation_invariance(self, n, mode)?;
        report.certificate.map(|certificate| CertifiedDistortion { spec: self.clone(), certificate }).ok_or(Error::Uncertified(n))
    }
}

pub const EXHAUSTIVE_MAX_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Exhaustive,
    Random { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceCertificate {
    pub n: usize,
    pub spec: String,
    pub mode: CheckMode,
    pub checked: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub permutation: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub original: String,
    pub permuted: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub checked: u64,
    pub witness: Option<Counterexample>,
    pub certificate: Option<InvarianceCertificate>,
}

/// A distortion spec bundled with a passing invariance check at one blocklength.
#[derive(Clone, Debug)]
pub struct CertifiedDistortion {
    spec: DistortionSpec,
    certificate: InvarianceCertificate,
}

impl CertifiedDistortion {
    pub fn spec(&self) -> &DistortionSpec {
        &self.spec
    }

    pub fn certificate(&self) -> &InvarianceCertificate {
        &self.certificate
    }

    pub fn n(&self) -> usize {
        self.certificate.n
    }

    /// Fails unless the certificate covers blocklength `n`. Additive specs cover every `n`.
    pub fn require(&self, n: usize) -> Result<()> {
        if self.certificate.n == n || self.spec.is_additive() {
            Ok(())
        } else {
            Err(Error::Uncertified(n))
        }
    }
}

/// Checks `d(pi x, pi y) = d(x, y)`.
///
/// Exhaustive mode checks every pair `(x, y)` against the transposition `(0 1)` and the
/// cyclic shift; these two generate the symmetric group, so passing them implies
/// invariance under every permutation.
pub fn check_permutation_invariance(spec: &DistortionSpec, n: usize, mode: CheckMode) -> Result<InvarianceReport> {
    if n == 0 {
        return Err(Error::UnsupportedBlocklength(0));
    }
    if spec.is_additive() {
        let certificate = InvarianceCertificate { n, spec: spec.name(), mode, checked: 0 };
        return Ok(InvarianceReport { invariant: true, checked: 0, witness: None, certificate: Some(certificate) });
    }
    let mut checked = 0u64;
    let witness = match mode {
        CheckMode::Exhaustive => {
            if n > EXHAUSTIVE_MAX_N {
                return Err(Error::StateSpaceTooLarge { size: n as u128, limit: EXHAUSTIVE_MAX_N as u128 });
            }
            let gens = generators(n);
            let xs = all_sequences(n, spec.sources());
            let ys = all_sequences(n, spec.reproductions());
            let mut found = None;
            'outer: for x in &xs {
                for y in &ys {
                    let base = spec.eval_exact(x, y);
                    for g in &gens {
                        checked += 1;
                        if let Some(w) = compare(spec, g, x, y, &base) {
                            found = Some(w);
                            break 'outer;
                        }
                    }
                }
            }
            found
        }
        CheckMode::Random { trials, seed } => {
            let mut rng = stream(seed, &[n as u64]);
            let mut found = None;
            for _ in 0..trials {
                let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..spec.sources())).collect();
                let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..spec.reproductions())).collect();
                let p = Permutation::random(n, &mut rng);
                checked += 1;
                if let Some(w) = compare(spec, &p, &x, &y, &spec.eval_exact(&x, &y)) {
                    found = Some(w);
                    break;
                }
            }
            found
        }
    };
    let invariant = witness.is_none();
    let certificate = invariant.then(|| InvarianceCertificate { n, spec: spec.name(), mode, checked });
    Ok(InvarianceReport { invariant, checked, witness, certificate })
}

fn generators(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    if n >= 2 {
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        out.push(Permutation::new(swap).unwrap());
        out.push(Permutation::new((0..n).map(|i| (i + 1) % n).collect()).unwrap());
    }
    out
}

fn compare(
    spec: &DistortionSpec,
    p: &Permutation,
    x: &[usize],
    y: &[usize],
    base: &Rational,
) -> Option<Counterexample> {
    let permuted = spec.eval_exact(&p.apply(x), &p.apply(y));
    (permuted != *base).then(|| Counterexample {
        permutation: p.image().to_vec(),
        x: x.to_vec(),
        y: y.to_vec(),
        original: base.to_string(),
        permuted: permuted.to_string(),
    })
}

/// `min_y sum_x p(x) d(x, y)`: the distortion reachable at rate zero.
pub fn d_max(spec: &DistortionSpec, p_x: &Distribution) -> Result<f64> {
    let m = spec.matrix()?;
    if m.sources != p_x.len() {
        return Err(Error::DimensionMismatch { expected: m.sources, got: p_x.len() });
    }
    Ok((0..m.reproductions)
        .map(|y| (0..m.sources).map(|x| p_x.prob(x) * m.get(x, y)).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}

/// `sum_x p(x) min_y d(x, y)`: the least achievable expected distortion.
pub fn d_min(spec: &DistortionSpec, p_x: &Distribution) -> Result<f64> {
    let m = spec.matrix()?;
    if m.sources != p_x.len() {
        return Err(Error::DimensionMismatch { expected: m.sources, got: p_x.len() });
    }
    Ok((0..m.sources)
        .map(|x| p_x.prob(x) * (0..m.reproductions).map(|y| m.get(x, y)).fold(f64::INFINITY, f64::min))
        .sum())
}

/// Config form: a named builtin or an explicit row-major matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionConfig {
    Named(String),
    Builtin { builtin: String, size: Option<usize> },
    Matrix { matrix: Vec<Vec<serde_json::Value>> },
}

impl DistortionConfig {
    /// `alphabet` is the default size for builtins.
    pub fn build(&self, alphabet: usize) -> Result<DistortionSpec> {
        let named = |name: &str, k: usize| match name {
            "hamming" => Ok(DistortionSpec::hamming(k)),
            "sorted_sequence" | "sorted" => Ok(DistortionSpec::sorted_sequence(k)),
            "position_weighted" => Ok(DistortionSpec::position_weighted(k)),
            other => Err(Error::Config(format!("unknown distortion builtin '{other}'"))),
        };
        match self {
            DistortionConfig::Named(n) => named(n, alphabet),
            DistortionConfig::Builtin { builtin, size } => named(builtin, size.unwrap_or(alphabet)),
            DistortionConfig::Matrix { matrix } => {
                let rows = matrix
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| match v {
                                serde_json::Value::String(s) => parse_rational(s),
                                serde_json::Value::Number(n) => parse_rational(&n.to_string()),
                                _ => Err(Error::Config("distortion entries must be numbers or strings".into())),
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DistortionSpec::additive(DistortionMatrix::new(rows)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::rational::ratio;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<usize> {
        s.bytes().map(|b| (b - b'0') as usize).collect()
    }

    #[test]
    fn hamming_examples() {
        let h = DistortionSpec::hamming(2);
        assert_eq!(h.block_distortion(&bits("0011"), &bits("0011")).unwrap(), int(0));
        assert_eq!(h.block_distortion(&bits("0011"), &bits("0101")).unwrap(), int(2));
        assert_eq!(h.block_distortion(&bits("0011"), &bits("1100")).unwrap(), int(4));
        assert!(matches!(h.block_distortion(&bits("001"), &bits("0011")), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn invariance_examples() {
        let h = DistortionSpec::hamming(2);
        assert!(check_permutation_invariance(&h, 5, CheckMode::Exhaustive).unwrap().invariant);

        let pw = DistortionSpec::position_weighted(2);
        let r = check_permutation_invariance(&pw, 3, CheckMode::Exhaustive).unwrap();
        assert!(!r.invariant);
        let w = r.witness.unwrap();
        let p = Permutation::new(w.permutation.clone()).unwrap();
        assert_ne!(pw.eval_exact(&w.x, &w.y), pw.eval_exact(&p.apply(&w.x), &p.apply(&w.y)));
        assert!(pw.certify(3).is_err());

        let s = DistortionSpec::sorted_sequence(2);
        assert!(check_permutation_invariance(&s, 4, CheckMode::Exhaustive).unwrap().invariant);
        assert!(check_permutation_invariance(&s, 9, CheckMode::Exhaustive).is_err());
        assert!(check_permutation_invariance(&s, 9, CheckMode::Random { trials: 500, seed: 1 }).unwrap().invariant);
    }

    #[test]
    fn sorted_sequence_oracle_over_all_permutations() {
        // Literal check over every pi, x, y at n = 4 agrees with the generator-based check.
        let s = DistortionSpec::sorted_sequence(2);
        let seqs = all_sequences(4, 2);
        for p in Permutation::all(4) {
            for x in &seqs {
                for y in &seqs {
                    assert_eq!(s.eval_exact(x, y), s.eval_exact(&p.apply(x), &p.apply(y)));
                }
            }
        }
    }

    #[test]
    fn additive_invariance_exhaustive_small_n() {
        let m = DistortionMatrix::new(vec![vec![int(0), ratio(1, 2), int(3)], vec![int(2), int(0), ratio(1, 3)]])
            .unwrap();
        let spec = DistortionSpec::additive(m);
        for n in 1..=4 {
            let xs = all_sequences(n, 2);
            let ys = all_sequences(n, 3);
            for p in Permutation::all(n) {
                for x in &xs {
                    for y in &ys {
                        assert_eq!(spec.eval_exact(x, y), spec.eval_exact(&p.apply(x), &p.apply(y)));
                    }
                }
            }
        }
        // n = 5 binary Hamming, all 120 permutations
        let h = DistortionSpec::hamming(2);
        let seqs = all_sequences(5, 2);
        for p in Permutation::all(5) {
            for x in &seqs {
                for y in &seqs {
                    assert_eq!(h.eval_exact(x, y), h.eval_exact(&p.apply(x), &p.apply(y)));
                }
            }
        }
    }

    #[test]
    fn d_max_examples() {
        let h = DistortionSpec::hamming(2);
        assert_eq!(d_max(&h, &Distribution::rational(&[(1, 2), (1, 2)]).unwrap()).unwrap(), 0.5);
        assert!((d_max(&h, &Distribution::from_f64(&[0.9, 0.1]).unwrap()).unwrap() - 0.1).abs() < 1e-15);
        let zero = DistortionSpec::additive(DistortionMatrix::new(vec![vec![int(0); 2]; 2]).unwrap());
        assert_eq!(d_max(&zero, &Distribution::from_f64(&[0.3, 0.7]).unwrap()).unwrap(), 0.0);
        assert_eq!(d_max(&DistortionSpec::sorted_sequence(2), &Distribution::from_f64(&[0.3, 0.7]).unwrap()), Err(Error::NotAdditive));
    }

    #[test]
    fn config_forms() {
        let c: DistortionConfig = serde_json::from_str(r#""hamming""#).unwrap();
        assert!(c.build(3).unwrap().is_additive());
        let c: DistortionConfig = serde_json::from_str(r#"{"matrix":[[0,"1/2"],[1,0]]}"#).unwrap();
        assert_eq!(c.build(2).unwrap().matrix().unwrap().get_exact(0, 1), &ratio(1, 2));
        let c: DistortionConfig = serde_json::from_str(r#"{"builtin":"sorted_sequence","size":2}"#).unwrap();
        assert!(!c.build(2).unwrap().is_additive());
        assert!(DistortionConfig::Named("nope".into()).build(2).is_err());
    }

    proptest! {
        #[test]
        fn hamming_zero_iff_equal(x in prop::collection::vec(0usize..2, 1..10), flip in any::<u64>()) {
            let h = DistortionSpec::hamming(2);
            let y: Vec<usize> = x.iter().enumerate().map(|(i, &b)| if (flip >> i) & 1 == 1 { 1 - b } else { b }).collect();
            let d = h.block_distortion(&x, &y).unwrap();
            prop_assert!(!d.is_negative());
            prop_assert_eq!(d.is_zero(), x == y);
        }
    }
}
