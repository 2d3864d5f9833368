//! Block channels: `k^n(.|.)` maps an input block to a distribution over output blocks.
//!
//! Kernels can always be sampled; kernels built from exact parts can also return the
//! full output law for tiny state spaces. Channels are non-causal block maps; no
//! causality constraint is imposed.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::rational::{parse_rational, ratio, Rational};
use crate::probability::{MatrixSpec, StochasticMatrix};
use crate::types::{all_sequences, index_to_sequence};

/// Exact mode is restricted to state spaces of at most this many blocks.
pub const EXACT_STATE_LIMIT: u128 = 4096;

/// Exact law over blocks.
pub type BlockLaw = BTreeMap<Vec<usize>, Rational>;

pub fn state_space(k: usize, n: usize) -> u128 {
    (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

pub fn check_state_space(k: usize, n: usize) -> Result<()> {
    let size = state_space(k, n);
    if size > EXACT_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge { size, limit: EXACT_STATE_LIMIT });
    }
    Ok(())
}

/// A channel acting on whole blocks.
pub trait BlockKernel: Send + Sync {
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;
    fn name(&self) -> String;

    /// Draws one output block for `input`.
    fn sample(&self, input: &[usize], rng: &mut dyn RngCore) -> Result<Vec<usize>>;

    /// Full output law, if the kernel supports exact evaluation at this input length.
    fn exact_law(&self, _input: &[usize]) -> Option<Result<BlockLaw>> {
        None
    }
}

pub type ChannelKernel = Arc<dyn BlockKernel>;

impl fmt::Debug for dyn BlockKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn check_input(input: &[usize], size: usize) -> Result<()> {
    if input.is_empty() {
        return Err(Error::UnsupportedBlocklength(0));
    }
    match input.iter().find(|&&s| s >= size) {
        Some(&s) => Err(Error::SymbolOutOfRange { symbol: s, size }),
        None => Ok(()),
    }
}

/// Memoryless channel: letters pass independently through one stochastic matrix.
#[derive(Clone, Debug)]
pub struct Dmc {
    matrix: StochasticMatrix,
    label: String,
}

impl Dmc {
    pub fn new(matrix: StochasticMatrix) -> Self {
        Dmc { label: format!("dmc({}x{})", matrix.inputs(), matrix.outputs()), matrix }
    }

    pub fn bsc(p: Rational) -> Result<Self> {
        let label = format!("bsc({p})");
        Ok(Dmc { matrix: StochasticMatrix::bsc(p)?, label })
    }

    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }

    pub fn into_kernel(self) -> ChannelKernel {
        Arc::new(self)
    }
}

pub(crate) fn sample_row(row: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (o, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return o;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

impl BlockKernel for Dmc {
    fn input_size(&self) -> usize {
        self.matrix.inputs()
    }

    fn output_size(&self) -> usize {
        self.matrix.outputs()
    }

    fn name(&self) -> String {
        self.label.clone()
    }

    fn sample(&self, input: &[usize], rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        check_input(input, self.input_size())?;
        Ok(input.iter().map(|&i| sample_row(self.matrix.row(i), rng)).collect())
    }

    fn exact_law(&self, input: &[usize]) -> Option<Result<BlockLaw>> {
        if !self.matrix.is_exact() {
            return None;
        }
        Some((|| {
            check_input(input, self.input_size())?;
            check_state_space(self.output_size(), input.len())?;
            let mut law = BlockLaw::new();
            law.insert(Vec::new(), Rational::one());
            for &i in input {
                let row = self.matrix.exact_row(i).unwrap();
                let mut next = BlockLaw::new();
                for (prefix, p) in &law {
                    for (o, q) in row.iter().enumerate() {
                        if q.is_zero() {
                            continue;
                        }
                        let mut b = prefix.clone();
                        b.push(o);
                        next.insert(b, p * q);
                    }
                }
                law = next;
            }
            Ok(law)
        })())
    }
}

/// With probability 1/2 the output equals the input block; otherwise it is uniform on
/// `{0,1}^n` independent of the input.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfLying;

pub fn half_lying_channel() -> ChannelKernel {
    Arc::new(HalfLying)
}

impl BlockKernel for HalfLying {
    fn input_size(&self) -> usize {
        2
    }

    fn output_size(&self) -> usize {
        2
    }

    fn name(&self) -> String {
        "half_lying".into()
    }

    fn sample(&self, input: &[usize], rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        check_input(input, 2)?;
        if rng.random::<bool>() {
            Ok(input.to_vec())
        } else {
            Ok((0..input.len()).map(|_| rng.random_range(0..2)).collect())
        }
    }

    fn exact_law(&self, input: &[usize]) -> Option<Result<BlockLaw>> {
        Some((|| {
            check_input(input, 2)?;
            check_state_space(2, input.len())?;
            let n = input.len();
            let each = ratio(1, 2) * ratio(1, 1i64 << n);
            let mut law: BlockLaw = all_sequences(n, 2).into_iter().map(|s| (s, each.clone())).collect();
            *law.get_mut(input).unwrap() += ratio(1, 2);
            Ok(law)
        })())
    }
}

/// A deterministic (given the shared seed) map between blocks; used for encoders and decoders.
pub trait BlockMap: Send + Sync {
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;
    fn map(&self, block: &[usize], shared: u64) -> Vec<usize>;
    fn name(&self) -> String;
}

pub type Coder = Arc<dyn BlockMap>;

#[derive(Clone, Debug)]
pub struct IdentityMap(pub usize);

impl BlockMap for IdentityMap {
    fn input_size(&self) -> usize {
        self.0
    }
    fn output_size(&self) -> usize {
        self.0
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        block.to_vec()
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

/// Sends every block to the same symbol repeated (length preserved).
#[derive(Clone, Debug)]
pub struct ConstantMap {
    pub input_size: usize,
    pub output_size: usize,
    pub symbol: usize,
}

impl BlockMap for ConstantMap {
    fn input_size(&self) -> usize {
        self.input_size
    }
    fn output_size(&self) -> usize {
        self.output_size
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        vec![self.symbol; block.len()]
    }
    fn name(&self) -> String {
        format!("constant({})", self.symbol)
    }
}

/// Applies a per-letter relabeling.
#[derive(Clone, Debug)]
pub struct LetterMap {
    pub table: Vec<usize>,
    pub output_size: usize,
}

impl LetterMap {
    pub fn complement() -> Self {
        LetterMap { table: vec![1, 0], output_size: 2 }
    }
}

impl BlockMap for LetterMap {
    fn input_size(&self) -> usize {
        self.table.len()
    }
    fn output_size(&self) -> usize {
        self.output_size
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        block.iter().map(|&s| self.table[s]).collect()
    }
    fn name(&self) -> String {
        format!("letter_map({:?})", self.table)
    }
}

/// Repeats every letter `times` times.
#[derive(Clone, Debug)]
pub struct Repetition {
    pub alphabet: usize,
    pub times: usize,
}

impl BlockMap for Repetition {
    fn input_size(&self) -> usize {
        self.alphabet
    }
    fn output_size(&self) -> usize {
        self.alphabet
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        block.iter().flat_map(|&s| std::iter::repeat_n(s, self.times)).collect()
    }
    fn name(&self) -> String {
        format!("repetition({})", self.times)
    }
}

/// Majority vote over consecutive groups of `times` letters (ties to the smaller symbol).
#[derive(Clone, Debug)]
pub struct Majority {
    pub alphabet: usize,
    pub times: usize,
}

impl BlockMap for Majority {
    fn input_size(&self) -> usize {
        self.alphabet
    }
    fn output_size(&self) -> usize {
        self.alphabet
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        block
            .chunks(self.times)
            .map(|g| {
                let mut counts = vec![0usize; self.alphabet];
                for &s in g {
                    counts[s] += 1;
                }
                let best = *counts.iter().max().unwrap();
                counts.iter().position(|&c| c == best).unwrap()
            })
            .collect()
    }
    fn name(&self) -> String {
        format!("majority({})", self.times)
    }
}

/// Explicit lookup table on blocks of one fixed length, indexed lexicographically.
#[derive(Clone, Debug)]
pub struct TableMap {
    pub n: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub table: Vec<Vec<usize>>,
}

impl TableMap {
    /// A uniformly random deterministic map `input_size^n -> output_size^m`.
    pub fn random<R: Rng + ?Sized>(n: usize, input_size: usize, m: usize, output_size: usize, rng: &mut R) -> Self {
        let rows = input_size.pow(n as u32);
        let table = (0..rows).map(|_| (0..m).map(|_| rng.random_range(0..output_size)).collect()).collect();
        TableMap { n, input_size, output_size, table }
    }
}

impl BlockMap for TableMap {
    fn input_size(&self) -> usize {
        self.input_size
    }
    fn output_size(&self) -> usize {
        self.output_size
    }
    fn map(&self, block: &[usize], _: u64) -> Vec<usize> {
        assert_eq!(block.len(), self.n, "table map applied at the wrong blocklength");
        self.table[crate::types::sequence_to_index(block, self.input_size)].clone()
    }
    fn name(&self) -> String {
        format!("table(n={})", self.n)
    }
}

/// Encoder/decoder pair with optional shared randomness.
///
/// A randomized pair is a uniform mixture over `seeds` deterministic pairs; both sides
/// see the same seed.
#[derive(Clone)]
pub struct CoderPair {
    pub encoder: Coder,
    pub decoder: Coder,
    pub seeds: u64,
}

impl CoderPair {
    pub fn deterministic(encoder: Coder, decoder: Coder) -> Self {
        CoderPair { encoder, decoder, seeds: 1 }
    }

    pub fn identity(k: usize) -> Self {
        Self::deterministic(Arc::new(IdentityMap(k)), Arc::new(IdentityMap(k)))
    }
}

/// The black box `x -> f(k(e(x)))`.
pub struct Composed {
    encoder: Coder,
    kernel: ChannelKernel,
    decoder: Coder,
    seeds: u64,
}

pub fn compose(encoder: Coder, kernel: ChannelKernel, decoder: Coder) -> Result<ChannelKernel> {
    compose_randomized(encoder, kernel, decoder, 1)
}

pub fn compose_pair(pair: &CoderPair, kernel: ChannelKernel) -> Result<ChannelKernel> {
    compose_randomized(pair.encoder.clone(), kernel, pair.decoder.clone(), pair.seeds)
}

pub fn compose_randomized(encoder: Coder, kernel: ChannelKernel, decoder: Coder, seeds: u64) -> Result<ChannelKernel> {
    if encoder.output_size() != kernel.input_size() {
        return Err(Error::AlphabetMismatch(format!(
            "encoder emits {} symbols, channel accepts {}",
            encoder.output_size(),
            kernel.input_size()
        )));
    }
    if kernel.output_size() != decoder.input_size() {
        return Err(Error::AlphabetMismatch(format!(
            "channel emits {} symbols, decoder accepts {}",
            kernel.output_size(),
            decoder.input_size()
        )));
    }
    if seeds == 0 {
        return Err(Error::Config("randomized coder needs at least one seed".into()));
    }
    Ok(Arc::new(Composed { encoder, kernel, decoder, seeds }))
}

impl BlockKernel for Composed {
    fn input_size(&self) -> usize {
        self.encoder.input_size()
    }

    fn output_size(&self) -> usize {
        self.decoder.output_size()
    }

    fn name(&self) -> String {
        format!("{} o {} o {}", self.encoder.name(), self.kernel.name(), self.decoder.name())
    }

    fn sample(&self, input: &[usize], rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        check_input(input, self.input_size())?;
        let seed = if self.seeds == 1 { 0 } else { rng.random_range(0..self.seeds) };
        let i = self.encoder.map(input, seed);
        let o = self.kernel.sample(&i, rng)?;
        Ok(self.decoder.map(&o, seed))
    }

    fn exact_law(&self, input: &[usize]) -> Option<Result<BlockLaw>> {
        if let Err(e) = check_input(input, self.input_size()) {
            return Some(Err(e));
        }
        if self.seeds as u128 > EXACT_STATE_LIMIT {
            return Some(Err(Error::StateSpaceTooLarge { size: self.seeds as u128, limit: EXACT_STATE_LIMIT }));
        }
        let weight = ratio(1, self.seeds as i64);
        let mut out = BlockLaw::new();
        for seed in 0..self.seeds {
            let i = self.encoder.map(input, seed);
            let inner = match self.kernel.exact_law(&i)? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            for (o, p) in inner {
                *out.entry(self.decoder.map(&o, seed)).or_insert_with(Rational::zero) += p * &weight;
            }
        }
        Some(Ok(out))
    }
}

/// Samples `kernel^n(.|input)`.
pub fn apply(kernel: &dyn BlockKernel, input: &[usize], rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    kernel.sample(input, rng)
}

/// Exact output laws for every input block of length `n`, inputs in lexicographic order.
pub fn exact_matrix(kernel: &dyn BlockKernel, n: usize) -> Result<Vec<BlockLaw>> {
    check_state_space(kernel.input_size(), n)?;
    (0..state_space(kernel.input_size(), n) as usize)
        .map(|idx| {
            let x = index_to_sequence(idx, n, kernel.input_size());
            kernel.exact_law(&x).unwrap_or(Err(Error::RequiresExact))
        })
        .collect()
}

/// A nonempty set of kernels sharing input and output alphabets.
#[derive(Clone, Debug)]
pub struct CompoundChannel {
    kernels: Vec<ChannelKernel>,
}

impl CompoundChannel {
    pub fn new(kernels: Vec<ChannelKernel>) -> Result<Self> {
        let first = kernels.first().ok_or(Error::EmptySet)?;
        let (i, o) = (first.input_size(), first.output_size());
        if let Some(k) = kernels.iter().find(|k| k.input_size() != i || k.output_size() != o) {
            return Err(Error::AlphabetMismatch(format!("kernel {} does not share alphabets", k.name())));
        }
        Ok(CompoundChannel { kernels })
    }

    pub fn single(kernel: ChannelKernel) -> Self {
        CompoundChannel { kernels: vec![kernel] }
    }

    pub fn kernels(&self) -> &[ChannelKernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn input_size(&self) -> usize {
        self.kernels[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.kernels[0].output_size()
    }
}

/// Sample mean of the per-letter distortion when source letters are fed straight through.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub sigma: f64,
    pub trials: u64,
}

/// `E (1/n) d(X^n, k(X^n))` with `X` i.i.d. `p_x`, by simulation.
pub fn identity_scheme_distortion(
    kernel: &dyn BlockKernel,
    p_x: &crate::probability::Distribution,
    spec: &crate::distortion::DistortionSpec,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<DistortionEstimate> {
    use rayon::prelude::*;
    if trials < 2 {
        return Err(Error::Config("need at least 2 trials".into()));
    }
    let sampler = crate::coding::LetterSampler::new(p_x);
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, &[t]);
            let x = sampler.word(n, &mut rng);
            let y = kernel.sample(&x, &mut rng)?;
            Ok(spec.block_distortion_f64(&x, &y)? / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(DistortionEstimate { mean, sigma: (var / trials as f64).sqrt(), trials })
}

/// Config form: `"bsc(1/10)"`, `"half_lying"`, `"identity"`, or an explicit matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelConfig {
    Named(String),
    Matrix { matrix: MatrixSpec },
}

impl ChannelConfig {
    pub fn build(&self, alphabet: usize) -> Result<ChannelKernel> {
        match self {
            ChannelConfig::Matrix { matrix } => Ok(Dmc::new(matrix.build()?).into_kernel()),
            ChannelConfig::Named(s) => {
                let t = s.trim();
                if let Some(arg) = t.strip_prefix("bsc(").and_then(|r| r.strip_suffix(')')) {
                    return Ok(Dmc::bsc(parse_rational(arg)?)?.into_kernel());
                }
                match t {
                    "half_lying" => Ok(half_lying_channel()),
                    "identity" => Ok(Dmc::new(StochasticMatrix::identity(alphabet)).into_kernel()),
                    other => Err(Error::Config(format!("unknown channel '{other}'"))),
                }
            }
        }
    }

    /// Single-letter matrix, for builtins that are memoryless.
    pub fn letter_matrix(&self, alphabet: usize) -> Result<StochasticMatrix> {
        match self {
            ChannelConfig::Matrix { matrix } => matrix.build(),
            ChannelConfig::Named(s) => {
                let t = s.trim();
                if let Some(arg) = t.strip_prefix("bsc(").and_then(|r| r.strip_suffix(')')) {
                    return StochasticMatrix::bsc(parse_rational(arg)?);
                }
                match t {
                    "identity" => Ok(StochasticMatrix::identity(alphabet)),
                    other => Err(Error::Config(format!("'{other}' is not a memoryless channel"))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn bits(s: &str) -> Vec<usize> {
        s.bytes().map(|b| (b - b'0') as usize).collect()
    }

    fn bsc(num: i64, den: i64) -> ChannelKernel {
        Dmc::bsc(ratio(num, den)).unwrap().into_kernel()
    }

    #[test]
    fn apply_examples() {
        let mut rng = stream(1, &[]);
        assert_eq!(apply(bsc(0, 1).as_ref(), &bits("0101"), &mut rng).unwrap(), bits("0101"));
        assert_eq!(apply(bsc(1, 1).as_ref(), &bits("0101"), &mut rng).unwrap(), bits("1010"));
        assert!(apply(bsc(1, 2).as_ref(), &[], &mut rng).is_err());
        assert!(apply(bsc(1, 2).as_ref(), &[2], &mut rng).is_err());
    }

    #[test]
    fn bsc_flip_frequency() {
        // Oracle: per-bit flips are Binomial(N, 0.1); 5 sigma band.
        let k = bsc(1, 10);
        let mut rng = stream(2, &[]);
        let trials = 100_000;
        let mut flips = [0usize; 4];
        for _ in 0..trials {
            let y = k.sample(&[0, 0, 0, 0], &mut rng).unwrap();
            for (f, b) in flips.iter_mut().zip(y) {
                *f += b;
            }
        }
        let sigma = (0.1f64 * 0.9 / trials as f64).sqrt();
        for f in flips {
            assert!((f as f64 / trials as f64 - 0.1).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn identity_composition_preserves_law() {
        for n in 1..=3 {
            let k = bsc(1, 10);
            let c = compose(Arc::new(IdentityMap(2)), k.clone(), Arc::new(IdentityMap(2))).unwrap();
            assert_eq!(exact_matrix(c.as_ref(), n).unwrap(), exact_matrix(k.as_ref(), n).unwrap());
        }
    }

    #[test]
    fn constant_encoder_makes_output_independent() {
        let c = compose(
            Arc::new(ConstantMap { input_size: 2, output_size: 2, symbol: 0 }),
            bsc(1, 5),
            Arc::new(IdentityMap(2)),
        )
        .unwrap();
        let rows = exact_matrix(c.as_ref(), 2).unwrap();
        assert!(rows.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn repetition_majority_flip_probability() {
        // Oracle: 3(0.1)^2(0.9) + (0.1)^3 = 0.028, by enumeration of the 8 noise patterns.
        let c = compose(
            Arc::new(Repetition { alphabet: 2, times: 3 }),
            bsc(1, 10),
            Arc::new(Majority { alphabet: 2, times: 3 }),
        )
        .unwrap();
        let law = c.exact_law(&[0]).unwrap().unwrap();
        assert_eq!(law[&vec![1]], ratio(28, 1000));
        let oracle: f64 = (0..8u32)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| 0.1f64.powi(m.count_ones() as i32) * 0.9f64.powi(3 - m.count_ones() as i32))
            .sum();
        assert!((oracle - 0.028).abs() < 1e-15);
    }

    #[test]
    fn composed_rows_sum_to_one_exactly() {
        let mut rng = stream(5, &[]);
        let enc = TableMap::random(2, 2, 3, 2, &mut rng);
        let dec = TableMap::random(3, 2, 2, 2, &mut rng);
        let c = compose(Arc::new(enc), bsc(1, 7), Arc::new(dec)).unwrap();
        for row in exact_matrix(c.as_ref(), 2).unwrap() {
            assert!(row.values().sum::<Rational>().is_one());
        }
        let randomized = compose_randomized(Arc::new(IdentityMap(2)), half_lying_channel(), Arc::new(IdentityMap(2)), 3).unwrap();
        for row in exact_matrix(randomized.as_ref(), 3).unwrap() {
            assert!(row.values().sum::<Rational>().is_one());
        }
    }

    #[test]
    fn composition_alphabet_mismatch() {
        let three = Dmc::new(StochasticMatrix::identity(3)).into_kernel();
        assert!(matches!(
            compose(Arc::new(IdentityMap(2)), three, Arc::new(IdentityMap(3))),
            Err(Error::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn half_lying_match_law() {
        // Oracle: Pr[output = input] = 1/2 + 1/2 * 2^-n.
        let k = half_lying_channel();
        let x = bits("0101");
        assert_eq!(k.exact_law(&x).unwrap().unwrap()[&x], ratio(1, 2) + ratio(1, 32));
        let mut rng = stream(3, &[]);
        let trials = 100_000;
        let hits = (0..trials).filter(|_| k.sample(&x, &mut rng).unwrap() == x).count();
        let p = 0.5 + 0.5 / 16.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 5.0 * sigma);
        assert!(k.sample(&[], &mut rng).is_err());
    }

    #[test]
    fn half_lying_expected_distortion() {
        let p = crate::probability::Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let h = crate::distortion::DistortionSpec::hamming(2);
        let e = identity_scheme_distortion(half_lying_channel().as_ref(), &p, &h, 20, 100_000, 4).unwrap();
        assert!((e.mean - 0.25).abs() <= 0.01, "{e:?}");
        // exactly: half the time a fresh uniform block, which disagrees on half the letters
        assert!((e.mean - 0.25).abs() <= 5.0 * e.sigma);
    }

    #[test]
    fn exact_mode_limit() {
        assert!(bsc(1, 2).exact_law(&[0; 13]).unwrap().is_err());
        assert!(bsc(1, 2).exact_law(&[0; 12]).unwrap().is_ok());
        let float = Dmc::new(StochasticMatrix::from_f64_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap());
        assert!(float.exact_law(&[0]).is_none());
    }

    #[test]
    fn compound_validation() {
        assert!(matches!(CompoundChannel::new(vec![]), Err(Error::EmptySet)));
        let three = Dmc::new(StochasticMatrix::identity(3)).into_kernel();
        assert!(CompoundChannel::new(vec![bsc(1, 10), three]).is_err());
        assert_eq!(CompoundChannel::new(vec![bsc(1, 10), bsc(1, 5)]).unwrap().len(), 2);
    }

    #[test]
    fn channel_config() {
        let c: ChannelConfig = serde_json::from_str(r#""bsc(1/10)""#).unwrap();
        assert_eq!(c.build(2).unwrap().name(), "bsc(1/10)");
        let c: ChannelConfig = serde_json::from_str(r#""bsc(0.05)""#).unwrap();
        assert_eq!(c.letter_matrix(2).unwrap().exact_p(0, 1), Some(&ratio(1, 20)));
        let c: ChannelConfig = serde_json::from_str(r#"{"matrix":[[0.5,0.5],[0.1,0.9]]}"#).unwrap();
        assert_eq!(c.build(2).unwrap().output_size(), 2);
        assert!(ChannelConfig::Named("half_lying".into()).letter_matrix(2).is_err());
        assert!(ChannelConfig::Named("wat".into()).build(2).is_err());
    }
}
