//! N-user media, unicast demands and the per-pair layered replacement.
//!
//! A medium takes one input letter from every user per time step and returns one output
//! letter to every user, through a memoryless joint kernel over the product alphabets.
//! Each user sends at most one unicast source; user `j` reproduces every source
//! addressed to it from its own output block.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_row, ChannelConfig, EXACT_STATE_LIMIT};
use crate::coding::{bits_to_index, index_to_bits, log2_size, Codebook, LetterSampler};
use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::probability::rational::{format_rational, parse_rational, ratio, to_f64, Rational};
use crate::probability::{Distribution, StochasticMatrix};
use crate::report::Estimate;
use crate::rng::stream;
use crate::types::{all_sequences, index_to_sequence};

const SOURCE_TAG: u64 = 0x70;
const MEDIUM_TAG: u64 = 0x71;
const BOOK_TAG: u64 = 0x72;
const REPLACE_TAG: u64 = 0x73;

/// Largest covering codebook (log2) a separation modem materializes.
pub const MAX_MODEM_LOG2: u64 = 16;
/// Draws used when the codeword law cannot be enumerated.
pub const STATISTICAL_DRAWS: u64 = 100_000;

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(sizes.len());
    let mut acc = 1;
    for &k in sizes {
        s.push(acc);
        acc *= k;
    }
    s
}

/// Memoryless N-user medium with an explicit joint letter kernel.
#[derive(Clone, Debug)]
pub struct MediumKernel {
    name: String,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    /// Row per joint input letter (user 0 varies fastest), column per joint output letter.
    kernel: StochasticMatrix,
}

impl MediumKernel {
    pub fn new(name: &str, inputs: Vec<usize>, outputs: Vec<usize>, kernel: StochasticMatrix) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::LengthMismatch { left: inputs.len(), right: outputs.len() });
        }
        let rows: usize = inputs.iter().product();
        let cols: usize = outputs.iter().product();
        if kernel.inputs() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: kernel.inputs() });
        }
        if kernel.outputs() != cols {
            return Err(Error::DimensionMismatch { expected: cols, got: kernel.outputs() });
        }
        Ok(MediumKernel { name: name.into(), inputs, outputs, kernel })
    }

    /// Builds the joint kernel from a per-letter rule returning `(joint output letters, mass)` pairs.
    pub fn from_fn<F>(name: &str, inputs: Vec<usize>, outputs: Vec<usize>, rule: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<(Vec<usize>, Rational)>,
    {
        let rows: usize = inputs.iter().product();
        let cols: usize = outputs.iter().product();
        let out_strides = strides(&outputs);
        let mut table = vec![vec![Rational::zero(); cols]; rows];
        for (r, row) in table.iter_mut().enumerate() {
            let letters = split(r, &inputs);
            for (o, mass) in rule(&letters) {
                let idx: usize = o.iter().zip(&out_strides).map(|(a, s)| a * s).sum();
                row[idx] += mass;
            }
        }
        MediumKernel::new(name, inputs, outputs, StochasticMatrix::from_rational_rows(table)?)
    }

    /// User `j` observes the input of user `route[j]` through `links[j]`; links act independently.
    pub fn independent_links(route: &[usize], links: &[StochasticMatrix]) -> Result<Self> {
        if route.len() != links.len() {
            return Err(Error::LengthMismatch { left: route.len(), right: links.len() });
        }
        let n_users = route.len();
        let mut inputs = vec![0; n_users];
        for (j, &src) in route.iter().enumerate() {
            if src >= n_users || src == j {
                return Err(Error::Config(format!("user {j} cannot listen to user {src}")));
            }
            if inputs[src] != 0 && inputs[src] != links[j].inputs() {
                return Err(Error::AlphabetMismatch(format!("links out of user {src} disagree on its input alphabet")));
            }
            inputs[src] = links[j].inputs();
        }
        for k in inputs.iter_mut().filter(|k| **k == 0) {
            *k = 1;
        }
        if links.iter().any(|l| !l.is_exact()) {
            return Err(Error::RequiresExact);
        }
        let outputs: Vec<usize> = links.iter().map(|l| l.outputs()).collect();
        let name = format!("independent[{}]", route.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
        Self::from_fn(&name, inputs, outputs.clone(), |x| {
            let mut law = vec![(Vec::new(), ratio(1, 1))];
            for (j, link) in links.iter().enumerate() {
                let row = link.exact_row(x[route[j]]).unwrap();
                law = law
                    .into_iter()
                    .flat_map(|(o, p)| {
                        row.iter().enumerate().filter(|(_, q)| !q.is_zero()).map(move |(b, q)| {
                            let mut o = o.clone();
                            o.push(b);
                            (o, &p * q)
                        })
                    })
                    .collect();
            }
            law
        })
    }

    /// Two binary users: user 1 sees `x0` through BSC(p); user 0 sees `x0 xor x1` through BSC(p).
    pub fn interfering(p: Rational) -> Result<Self> {
        let link = StochasticMatrix::bsc(p.clone())?;
        let m = Self::from_fn("interfering", vec![2, 2], vec![2, 2], |x| {
            let to0 = link.exact_row(x[0] ^ x[1]).unwrap();
            let to1 = link.exact_row(x[0]).unwrap();
            let mut law = Vec::new();
            for (a, pa) in to0.iter().enumerate() {
                for (b, pb) in to1.iter().enumerate() {
                    law.push((vec![a, b], pa * pb));
                }
            }
            law
        })?;
        Ok(MediumKernel { name: format!("interfering({})", format_rational(&p)), ..m })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn users(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_size(&self, user: usize) -> usize {
        self.inputs[user]
    }

    pub fn output_size(&self, user: usize) -> usize {
        self.outputs[user]
    }

    pub fn kernel(&self) -> &StochasticMatrix {
        &self.kernel
    }

    fn joint_input(&self, letters: &[usize]) -> usize {
        letters.iter().zip(strides(&self.inputs)).map(|(a, s)| a * s).sum()
    }

    /// One block through the medium: `blocks[u]` is user `u`'s input, the result user `u`'s output.
    pub fn sample(&self, blocks: &[Vec<usize>], rng: &mut dyn RngCore) -> Result<Vec<Vec<usize>>> {
        if blocks.len() != self.users() {
            return Err(Error::LengthMismatch { left: blocks.len(), right: self.users() });
        }
        let n = blocks.first().map_or(0, |b| b.len());
        for (u, b) in blocks.iter().enumerate() {
            if b.len() != n {
                return Err(Error::LengthMismatch { left: b.len(), right: n });
            }
            if let Some(&s) = b.iter().find(|&&s| s >= self.inputs[u]) {
                return Err(Error::SymbolOutOfRange { symbol: s, size: self.inputs[u] });
            }
        }
        let mut out = vec![Vec::with_capacity(n); self.users()];
        let mut letters = vec![0; self.users()];
        for t in 0..n {
            for (u, b) in blocks.iter().enumerate() {
                letters[u] = b[t];
            }
            let o = sample_row(self.kernel.row(self.joint_input(&letters)), rng);
            for (u, a) in split(o, &self.outputs).into_iter().enumerate() {
                out[u].push(a);
            }
        }
        Ok(out)
    }
}

fn split(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&k| {
            let a = idx % k;
            idx /= k;
            a
        })
        .collect()
}

/// Config form of a medium.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MediumConfig {
    /// User `j` listens to `route[j]` (default: the previous user, cyclically).
    IndependentLinks { links: Vec<ChannelConfig>, route: Option<Vec<usize>> },
    Interfering { p: String },
    Table { inputs: Vec<usize>, outputs: Vec<usize>, rows: Vec<Vec<String>> },
}

impl MediumConfig {
    pub fn build(&self) -> Result<MediumKernel> {
        match self {
            MediumConfig::IndependentLinks { links, route } => {
                let n = links.len();
                let route = route.clone().unwrap_or_else(|| (0..n).map(|j| (j + n - 1) % n.max(1)).collect());
                let links = links.iter().map(|l| l.letter_matrix(2)).collect::<Result<Vec<_>>>()?;
                MediumKernel::independent_links(&route, &links)
            }
            MediumConfig::Interfering { p } => MediumKernel::interfering(parse_rational(p)?),
            MediumConfig::Table { inputs, outputs, rows } => {
                let rows = rows.iter().map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
                MediumKernel::new("table", inputs.clone(), outputs.clone(), StochasticMatrix::from_rational_rows(rows)?)
            }
        }
    }
}

/// Source `p_x` at user `from` to be reproduced at user `to` within `d` under `spec`.
#[derive(Clone, Debug)]
pub struct PairDemand {
    pub from: usize,
    pub to: usize,
    pub p_x: Distribution,
    pub spec: DistortionSpec,
    pub d: f64,
}

/// Independent unicast sources, at most one leaving each user.
#[derive(Clone, Debug)]
pub struct UnicastDemandSet {
    users: usize,
    pairs: Vec<PairDemand>,
}

impl UnicastDemandSet {
    pub fn new(users: usize, pairs: Vec<PairDemand>) -> Result<Self> {
        let mut senders = vec![false; users];
        for p in &pairs {
            if p.from >= users || p.to >= users || p.from == p.to {
                return Err(Error::Config(format!("bad pair ({}, {})", p.from, p.to)));
            }
            if senders[p.from] {
                return Err(Error::Config(format!("user {} sends more than one source", p.from)));
            }
            senders[p.from] = true;
            if p.spec.sources() != p.p_x.len() {
                return Err(Error::AlphabetMismatch(format!("pair ({}, {}): source and distortion alphabets differ", p.from, p.to)));
            }
        }
        Ok(UnicastDemandSet { users, pairs })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn pairs(&self) -> &[PairDemand] {
        &self.pairs
    }

    /// Pairs whose target cannot be met by any scheme.
    pub fn degenerate(&self) -> Vec<String> {
        self.pairs.iter().filter(|p| p.d < 0.0).map(|p| format!("pair ({}, {}) has negative distortion target {}", p.from, p.to, p.d)).collect()
    }
}

#[derive(Clone, Debug)]
pub enum PairModem {
    /// Source letters go straight into the medium; the receiver's output letters are the reproduction.
    Identity,
    /// Covering codebook of `2^floor(nR)` words i.i.d. `law`, first word within `D` (else
    /// index 0); index bits sent uncoded in the first letters of the block.
    Separation { rate: f64, law: Distribution },
}

/// One modem per demand pair, plus the shared randomness seed for codebooks.
#[derive(Clone, Debug)]
pub struct ModemStack {
    pub modems: Vec<PairModem>,
    pub seed: u64,
}

impl ModemStack {
    pub fn identity(pairs: usize, seed: u64) -> Self {
        ModemStack { modems: vec![PairModem::Identity; pairs], seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairErrors {
    pub from: usize,
    pub to: usize,
    pub excess: Estimate,
    /// Codebook seed of this pair (separation modems).
    pub codebook_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MediumErrors {
    pub medium: usize,
    pub name: String,
    pub per_pair: Vec<PairErrors>,
    /// Every pair in excess at once.
    pub joint_excess: Estimate,
    pub product_of_marginals: f64,
    pub joint_agrees_with_product: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnicastProfile {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub per_medium: Vec<MediumErrors>,
    /// Worst excess frequency of each pair over the medium set.
    pub worst_per_pair: Vec<f64>,
    pub degenerate: Vec<String>,
}

struct PreparedModem {
    k: u64,
    sampler: Option<LetterSampler>,
}

fn prepare(medium: &MediumKernel, demand: &PairDemand, modem: &PairModem, n: usize) -> Result<PreparedModem> {
    match modem {
        PairModem::Identity => {
            if demand.p_x.len() > medium.input_size(demand.from) {
                return Err(Error::AlphabetMismatch(format!("user {} cannot send its source letters", demand.from)));
            }
            if medium.output_size(demand.to) > demand.spec.reproductions() {
                return Err(Error::AlphabetMismatch(format!("user {} output is not a reproduction letter", demand.to)));
            }
            Ok(PreparedModem { k: 0, sampler: None })
        }
        PairModem::Separation { rate, law } => {
            if law.len() != demand.spec.reproductions() {
                return Err(Error::AlphabetMismatch("codebook law is not over the reproduction alphabet".into()));
            }
            if medium.input_size(demand.from) < 2 || medium.output_size(demand.to) != 2 {
                return Err(Error::AlphabetMismatch("uncoded bits need binary links".into()));
            }
            let k = log2_size(n, *rate);
            if k > MAX_MODEM_LOG2 {
                return Err(Error::BudgetExceeded { size: format!("2^{k} codewords"), budget: 1 << MAX_MODEM_LOG2 });
            }
            if k as usize > n {
                return Err(Error::Config(format!("{k} index bits do not fit in {n} letters")));
            }
            Ok(PreparedModem { k, sampler: Some(LetterSampler::new(law)) })
        }
    }
}

/// Runs every pair simultaneously over each medium of the set. Sources of different pairs
/// come from independent streams; codebooks are redrawn every `batch` trials per pair.
pub fn simulate_unicast(
    media: &[MediumKernel],
    demands: &UnicastDemandSet,
    modems: &ModemStack,
    n: usize,
    trials: u64,
    batch: u64,
) -> Result<UnicastProfile> {
    let pairs = demands.pairs();
    if modems.modems.len() != pairs.len() {
        return Err(Error::LengthMismatch { left: modems.modems.len(), right: pairs.len() });
    }
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::UnsupportedBlocklength(0));
    }
    let seed = modems.seed;
    if pairs.is_empty() {
        return Ok(UnicastProfile { n, trials, seed, per_medium: Vec::new(), worst_per_pair: Vec::new(), degenerate: Vec::new() });
    }
    let prepared: Vec<Vec<PreparedModem>> = media
        .iter()
        .map(|m| {
            if m.users() != demands.users() {
                return Err(Error::DimensionMismatch { expected: demands.users(), got: m.users() });
            }
            pairs.iter().zip(&modems.modems).map(|(d, md)| prepare(m, d, md, n)).collect()
        })
        .collect::<Result<_>>()?;
    let prep = &prepared[0];
    let batch = batch.max(1);
    let batches = trials.div_ceil(batch);
    let sources: Vec<LetterSampler> = pairs.iter().map(|p| LetterSampler::new(&p.p_x)).collect();

    // outcome[b][medium][trial][pair]
    let outcomes: Vec<Vec<Vec<Vec<bool>>>> = (0..batches)
        .into_par_iter()
        .map(|b| -> Result<Vec<Vec<Vec<bool>>>> {
            let books: Vec<Option<Codebook>> = prep
                .iter()
                .enumerate()
                .map(|(pi, p)| {
                    p.sampler.as_ref().map(|s| {
                        let mut rng = stream(seed, &[BOOK_TAG, pi as u64, b]);
                        Codebook::explicit((0..1u64 << p.k).map(|_| s.word(n, &mut rng)).collect())
                    })
                    .transpose()
                })
                .collect::<Result<_>>()?;
            let in_batch = batch.min(trials - b * batch);
            let mut out = vec![Vec::with_capacity(in_batch as usize); media.len()];
            for t in 0..in_batch {
                let trial = b * batch + t;
                let xs: Vec<Vec<usize>> =
                    sources.iter().enumerate().map(|(pi, s)| s.word(n, &mut stream(seed, &[SOURCE_TAG, pi as u64, trial]))).collect();
                let mut blocks = vec![vec![0usize; n]; demands.users()];
                for (pi, pair) in pairs.iter().enumerate() {
                    match &books[pi] {
                        None => blocks[pair.from] = xs[pi].clone(),
                        Some(book) => {
                            let j = book.words.iter().position(|w| pair.spec.within(&xs[pi], w, pair.d)).unwrap_or(0);
                            let bits = index_to_bits(j as u64, prep[pi].k);
                            blocks[pair.from][..bits.len()].copy_from_slice(&bits);
                        }
                    }
                }
                for (mi, medium) in media.iter().enumerate() {
                    let mut rng = stream(seed, &[MEDIUM_TAG, mi as u64, trial]);
                    let received = medium.sample(&blocks, &mut rng)?;
                    let excess: Vec<bool> = pairs
                        .iter()
                        .enumerate()
                        .map(|(pi, pair)| {
                            let y = &received[pair.to];
                            match &books[pi] {
                                None => !pair.spec.within(&xs[pi], y, pair.d),
                                Some(book) => {
                                    let j = bits_to_index(&y[..prepared[mi][pi].k as usize]) as usize;
                                    !pair.spec.within(&xs[pi], &book.words[j], pair.d)
                                }
                            }
                        })
                        .collect();
                    out[mi].push(excess);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let per_medium: Vec<MediumErrors> = media
        .iter()
        .enumerate()
        .map(|(mi, medium)| {
            let rows: Vec<&Vec<bool>> = outcomes.iter().flat_map(|b| b[mi].iter()).collect();
            let per_pair: Vec<PairErrors> = pairs
                .iter()
                .enumerate()
                .map(|(pi, p)| PairErrors {
                    from: p.from,
                    to: p.to,
                    excess: Estimate::new(rows.iter().filter(|r| r[pi]).count() as u64, trials),
                    codebook_seed: prep[pi].sampler.as_ref().map(|_| crate::rng::derive_seed(seed, &[BOOK_TAG, pi as u64])),
                })
                .collect();
            let joint_excess = Estimate::new(rows.iter().filter(|r| r.iter().all(|&e| e)).count() as u64, trials);
            let product_of_marginals = per_pair.iter().map(|p| p.excess.estimate).product();
            MediumErrors {
                medium: mi,
                name: medium.name().into(),
                joint_agrees_with_product: joint_excess.agrees_with(product_of_marginals, 3.0),
                per_pair,
                joint_excess,
                product_of_marginals,
            }
        })
        .collect();
    let worst_per_pair =
        (0..pairs.len()).map(|pi| per_medium.iter().map(|m| m.per_pair[pi].excess.estimate).fold(0.0, f64::max)).collect();
    Ok(UnicastProfile { n, trials, seed, per_medium, worst_per_pair, degenerate: demands.degenerate() })
}

/// Source covering at `rates[i]` with codebook law `laws[i]` for every pair, index bits sent
/// uncoded; all pairs share the medium.
pub fn end_to_end_separation(
    media: &[MediumKernel],
    demands: &UnicastDemandSet,
    rates: &[f64],
    laws: &[Distribution],
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<UnicastProfile> {
    if rates.len() != demands.pairs().len() || laws.len() != rates.len() {
        return Err(Error::LengthMismatch { left: rates.len(), right: demands.pairs().len() });
    }
    let modems = ModemStack {
        modems: rates.iter().zip(laws).map(|(&rate, law)| PairModem::Separation { rate, law: law.clone() }).collect(),
        seed,
    };
    simulate_unicast(media, demands, &modems, n, trials, 50)
}

/// Exact law over blocks of one user's medium input.
pub type InputLaw = BTreeMap<Vec<usize>, Rational>;

fn product_law(p: &[Rational], n: usize) -> InputLaw {
    all_sequences(n, p.len())
        .into_iter()
        .map(|w| {
            let m = w.iter().map(|&a| p[a].clone()).product::<Rational>();
            (w, m)
        })
        .filter(|(_, m)| !m.is_zero())
        .collect()
}

/// A multi-user system with identity modems at blocklength `n`, tracked exactly.
#[derive(Clone, Debug)]
pub struct ExactSystem {
    pub medium: MediumKernel,
    pub demands: UnicastDemandSet,
    pub n: usize,
    /// Medium input law of each user.
    pub inputs: Vec<InputLaw>,
    pub replaced: Vec<bool>,
}

impl ExactSystem {
    pub fn new(medium: MediumKernel, demands: UnicastDemandSet, n: usize) -> Result<Self> {
        if medium.users() != demands.users() {
            return Err(Error::DimensionMismatch { expected: demands.users(), got: medium.users() });
        }
        let joint_in: usize = medium.inputs.iter().product();
        let joint_out: usize = medium.outputs.iter().product();
        for k in [joint_in, joint_out] {
            crate::channels::check_state_space(k, n)?;
        }
        let mut inputs: Vec<InputLaw> = (0..medium.users()).map(|_| InputLaw::from([(vec![0; n], ratio(1, 1))])).collect();
        for p in demands.pairs() {
            if p.p_x.len() != medium.input_size(p.from) {
                return Err(Error::AlphabetMismatch(format!("user {} input alphabet differs from its source", p.from)));
            }
            inputs[p.from] = product_law(p.p_x.require_exact()?, n);
        }
        let replaced = vec![false; demands.pairs().len()];
        Ok(ExactSystem { medium, demands, n, inputs, replaced })
    }

    /// Joint law of every user's input and output block, keyed by the concatenation
    /// `inputs[0] .. inputs[N-1] outputs[0] .. outputs[N-1]`.
    pub fn joint_law(&self) -> BTreeMap<Vec<usize>, Rational> {
        let n = self.n;
        let users = self.medium.users();
        let mut combos: Vec<(Vec<Vec<usize>>, Rational)> = vec![(Vec::new(), ratio(1, 1))];
        for law in &self.inputs {
            combos = combos
                .into_iter()
                .flat_map(|(blocks, p)| {
                    law.iter().map(move |(w, q)| {
                        let mut b = blocks.clone();
                        b.push(w.clone());
                        (b, &p * q)
                    })
                })
                .collect();
        }
        let k = &self.medium.kernel;
        let mut law = BTreeMap::new();
        for (blocks, p) in combos {
            let rows: Vec<usize> = (0..n)
                .map(|t| self.medium.joint_input(&blocks.iter().map(|b| b[t]).collect::<Vec<_>>()))
                .collect();
            let mut outs: Vec<(Vec<usize>, Rational)> = vec![(Vec::new(), p)];
            for &r in &rows {
                let row = k.exact_row(r).expect("exact medium");
                outs = outs
                    .into_iter()
                    .flat_map(|(o, p)| {
                        row.iter().enumerate().filter(|(_, q)| !q.is_zero()).map(move |(c, q)| {
                            let mut o = o.clone();
                            o.push(c);
                            (o, &p * q)
                        })
                    })
                    .collect();
            }
            for (o, p) in outs {
                let mut key: Vec<usize> = blocks.concat();
                let mut per_user = vec![Vec::with_capacity(n); users];
                for &c in &o {
                    for (u, a) in split(c, &self.medium.outputs).into_iter().enumerate() {
                        per_user[u].push(a);
                    }
                }
                key.extend(per_user.concat());
                *law.entry(key).or_insert_with(Rational::zero) += p;
            }
        }
        law
    }

    /// Positions in [`Self::joint_law`] keys observed by pair `pi`: sender input and receiver output.
    fn pair_positions(&self, pi: usize) -> Vec<usize> {
        let n = self.n;
        let users = self.medium.users();
        let p = &self.demands.pairs()[pi];
        (p.from * n..(p.from + 1) * n).chain((users + p.to) * n..(users + p.to + 1) * n).collect()
    }

    /// Law of everything observed by the pairs other than `exclude`.
    pub fn observed_law(&self, exclude: Option<usize>) -> BTreeMap<Vec<usize>, Rational> {
        let positions: Vec<usize> =
            (0..self.demands.pairs().len()).filter(|&pi| Some(pi) != exclude).flat_map(|pi| self.pair_positions(pi)).collect();
        marginal(&self.joint_law(), &positions)
    }
}

fn marginal(law: &BTreeMap<Vec<usize>, Rational>, positions: &[usize]) -> BTreeMap<Vec<usize>, Rational> {
    let mut out = BTreeMap::new();
    for (k, p) in law {
        let key: Vec<usize> = positions.iter().map(|&i| k[i]).collect();
        *out.entry(key).or_insert_with(Rational::zero) += p;
    }
    out
}

/// Exact total variation distance between two laws over the same key space.
pub fn total_variation(a: &BTreeMap<Vec<usize>, Rational>, b: &BTreeMap<Vec<usize>, Rational>) -> Rational {
    let zero = Rational::zero();
    let mut sum = Rational::zero();
    for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
        sum += (a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero)).abs();
    }
    sum / ratio(2, 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplacementReport {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub codebook_size: u64,
    pub law: Vec<String>,
    /// `exact` when every codebook is enumerated, otherwise `monte_carlo`.
    pub mode: String,
    pub draws: Option<u64>,
    /// Other pairs' observations, before vs after.
    pub other_pairs_tv: f64,
    pub other_pairs_tv_exact: String,
    /// The sender's medium input, before vs after.
    pub input_tv: f64,
    pub input_tv_exact: String,
}

/// Law of the transmitted codeword of a random i.i.d. `law` codebook with `m` words and a
/// uniform message, by enumerating every codebook, or by sampling when there are too many.
pub fn codeword_law(law: &Distribution, n: usize, m: u64, seed: u64) -> Result<(InputLaw, Option<u64>)> {
    let a = law.len();
    crate::channels::check_state_space(a, n)?;
    let words = all_sequences(n, a);
    let codebooks = (words.len() as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if codebooks <= EXACT_STATE_LIMIT {
        let p = law.require_exact()?;
        let pw: Vec<Rational> = words.iter().map(|w| w.iter().map(|&x| p[x].clone()).product()).collect();
        let share = ratio(1, m as i64);
        let mut out = InputLaw::new();
        for idx in 0..codebooks as usize {
            let book = index_to_sequence(idx, m as usize, words.len());
            let prob: Rational = book.iter().map(|&w| pw[w].clone()).product();
            if prob.is_zero() {
                continue;
            }
            for &w in &book {
                *out.entry(words[w].clone()).or_insert_with(Rational::zero) += &prob * &share;
            }
        }
        return Ok((out, None));
    }
    if m > 1 << MAX_MODEM_LOG2 {
        return Err(Error::BudgetExceeded { size: format!("{m} codewords"), budget: 1 << MAX_MODEM_LOG2 });
    }
    let sampler = LetterSampler::new(law);
    let counts: BTreeMap<Vec<usize>, u64> = (0..STATISTICAL_DRAWS)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, &[REPLACE_TAG, s]);
            let msg = rng.random_range(0..m);
            let mut sent = Vec::new();
            for w in 0..m {
                let word = sampler.word(n, &mut rng);
                if w == msg {
                    sent = word;
                }
            }
            sent
        })
        .fold(BTreeMap::new, |mut acc, w| {
            *acc.entry(w).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let total = STATISTICAL_DRAWS as i64;
    Ok((counts.into_iter().map(|(w, c)| (w, ratio(c as i64, total))).collect(), Some(STATISTICAL_DRAWS)))
}

/// Replaces the source input of pair `pi` by the codeword of a random `2^floor(nR)`-word
/// codebook with letters i.i.d. `law`, and compares what every other pair observes.
pub fn layered_replacement(system: &ExactSystem, pi: usize, rate: f64, law: &Distribution, seed: u64) -> Result<(ExactSystem, ReplacementReport)> {
    let pair = system.demands.pairs().get(pi).ok_or_else(|| Error::Config(format!("no pair {pi}")))?;
    if law.len() != system.medium.input_size(pair.from) {
        return Err(Error::AlphabetMismatch("codebook law is not over the sender's input alphabet".into()));
    }
    let k = log2_size(system.n, rate);
    let m = 1u64 << k.min(62);
    let (codeword, draws) = codeword_law(law, system.n, m, crate::rng::derive_seed(seed, &[pi as u64]))?;
    let mut next = system.clone();
    next.inputs[pair.from] = codeword;
    next.replaced[pi] = true;
    let others = total_variation(&system.observed_law(Some(pi)), &next.observed_law(Some(pi)));
    let input = total_variation(&system.inputs[pair.from], &next.inputs[pair.from]);
    let report = ReplacementReport {
        from: pair.from,
        to: pair.to,
        rate,
        codebook_size: m,
        law: law.mass_strings(),
        mode: if draws.is_some() { "monte_carlo" } else { "exact" }.into(),
        draws,
        other_pairs_tv: to_f64(&others),
        other_pairs_tv_exact: format_rational(&others),
        input_tv: to_f64(&input),
        input_tv_exact: format_rational(&input),
    };
    Ok((next, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationReport {
    pub orders: Vec<Vec<usize>>,
    /// Largest exact total variation between final joint laws of any two orders.
    pub max_tv: f64,
    pub commutes: bool,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut v: Vec<usize> = (0..k).collect();
    let mut out = vec![v.clone()];
    while crate::types::next_permutation(&mut v) {
        out.push(v.clone());
    }
    out
}

/// Replaces every pair in each possible order and compares the final joint laws.
pub fn check_commutation(system: &ExactSystem, rate: f64, laws: &[Distribution], seed: u64) -> Result<CommutationReport> {
    if laws.len() != system.demands.pairs().len() {
        return Err(Error::LengthMismatch { left: laws.len(), right: system.demands.pairs().len() });
    }
    let orders = permutations(laws.len());
    let finals = orders
        .iter()
        .map(|order| {
            let mut s = system.clone();
            for &pi in order {
                s = layered_replacement(&s, pi, rate, &laws[pi], seed)?.0;
            }
            Ok(s.joint_law())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max = Rational::zero();
    for a in &finals {
        for b in &finals {
            let tv = total_variation(a, b);
            if tv > max {
                max = tv;
            }
        }
    }
    Ok(CommutationReport { orders, max_tv: to_f64(&max), commutes: max.is_zero() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> Distribution {
        Distribution::rational(&[(1, 2), (1, 2)]).unwrap()
    }

    fn two_way(d: f64) -> UnicastDemandSet {
        let pair = |from, to| PairDemand { from, to, p_x: uniform(), spec: DistortionSpec::hamming(2), d };
        UnicastDemandSet::new(2, vec![pair(0, 1), pair(1, 0)]).unwrap()
    }

    fn links(num: i64, den: i64) -> MediumKernel {
        let l = StochasticMatrix::bsc_ratio(num, den);
        MediumKernel::independent_links(&[1, 0], &[l.clone(), l]).unwrap()
    }

    fn binomial_tail_above(n: u64, p: f64, limit: f64) -> f64 {
        (0..=n)
            .filter(|&k| k as f64 > limit)
            .map(|k| (crate::probability::rational::ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp())
            .sum()
    }

    #[test]
    fn medium_rows_are_distributions() {
        for m in [links(1, 10), MediumKernel::interfering(ratio(1, 10)).unwrap()] {
            assert_eq!(m.kernel().inputs(), 4);
            for r in 0..4 {
                assert!((m.kernel().row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        // interfering: inputs (1, 1) make user 0 see 0 with probability 9/10
        let m = MediumKernel::interfering(ratio(1, 10)).unwrap();
        let row = m.kernel().exact_row(3).unwrap();
        assert_eq!(&row[0] + &row[2], ratio(9, 10));
    }

    #[test]
    fn demand_validation() {
        let pair = |from, to| PairDemand { from, to, p_x: uniform(), spec: DistortionSpec::hamming(2), d: 0.1 };
        assert!(UnicastDemandSet::new(2, vec![pair(0, 0)]).is_err());
        assert!(UnicastDemandSet::new(2, vec![pair(0, 1), pair(0, 1)]).is_err());
        assert!(UnicastDemandSet::new(2, vec![pair(0, 2)]).is_err());
    }

    #[test]
    fn noiseless_identity_is_exact() {
        let p = simulate_unicast(&[links(0, 1)], &two_way(0.0), &ModemStack::identity(2, 1), 16, 500, 50).unwrap();
        assert!(p.per_medium[0].per_pair.iter().all(|e| e.excess.count == 0));
    }

    #[test]
    fn bsc_links_match_binomial_tail() {
        let trials = 4000;
        let p = simulate_unicast(&[links(1, 10)], &two_way(0.15), &ModemStack::identity(2, 2), 64, trials, 100).unwrap();
        let oracle = binomial_tail_above(64, 0.1, 9.6 + 1e-9);
        let m = &p.per_medium[0];
        assert!((oracle - 0.102_786_792).abs() < 1e-8);
        for e in &m.per_pair {
            assert!(e.excess.agrees_with(oracle, 3.0), "{} vs {oracle}", e.excess.estimate);
        }
        assert!(m.joint_agrees_with_product);
    }

    #[test]
    fn negative_target_is_flagged() {
        let p = simulate_unicast(&[links(0, 1)], &two_way(-0.1), &ModemStack::identity(2, 1), 8, 100, 10).unwrap();
        assert_eq!(p.degenerate.len(), 2);
        assert!(p.per_medium[0].per_pair.iter().all(|e| e.excess.count == 100));
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                end_to_end_separation(&[links(1, 20)], &two_way(0.3), &[0.2, 0.2], &[uniform(), uniform()], 32, 200, 5).unwrap()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn separation_over_noiseless_links() {
        let p = end_to_end_separation(&[links(0, 1)], &two_way(0.3), &[0.25, 0.25], &[uniform(), uniform()], 64, 300, 3).unwrap();
        assert!(p.worst_per_pair.iter().all(|&e| e <= 0.1), "{:?}", p.worst_per_pair);
        // rate 0 for pair 0: one random word, far from most sources
        let p = end_to_end_separation(&[links(0, 1)], &two_way(0.3), &[0.0, 0.25], &[uniform(), uniform()], 64, 300, 3).unwrap();
        assert!(p.worst_per_pair[0] >= 0.4);
        assert!(p.worst_per_pair[1] <= 0.1);
    }

    #[test]
    fn zero_users_give_an_empty_report() {
        let demands = UnicastDemandSet::new(0, Vec::new()).unwrap();
        let p = simulate_unicast(&[], &demands, &ModemStack::identity(0, 1), 4, 10, 10).unwrap();
        assert!(p.per_medium.is_empty());
    }

    #[test]
    fn codeword_law_is_the_letter_product() {
        let law = Distribution::rational(&[(1, 3), (2, 3)]).unwrap();
        let (exact, draws) = codeword_law(&law, 2, 2, 0).unwrap();
        assert!(draws.is_none());
        assert_eq!(exact, product_law(law.require_exact().unwrap(), 2));
        let (mc, draws) = codeword_law(&law, 2, 8, 0).unwrap();
        assert_eq!(draws, Some(STATISTICAL_DRAWS));
        for (w, p) in product_law(law.require_exact().unwrap(), 2) {
            assert!((to_f64(&mc[&w]) - to_f64(&p)).abs() < 0.01);
        }
    }

    #[test]
    fn replacement_preserves_other_pairs() {
        for medium in [links(1, 10), MediumKernel::interfering(ratio(1, 10)).unwrap()] {
            let sys = ExactSystem::new(medium, two_way(0.1), 2).unwrap();
            let (after, r) = layered_replacement(&sys, 0, 0.5, &uniform(), 7).unwrap();
            assert_eq!(r.mode, "exact");
            assert_eq!(r.other_pairs_tv_exact, "0");
            assert_eq!(r.input_tv_exact, "0");
            assert!(after.replaced[0]);
        }
    }

    #[test]
    fn mismatched_law_is_detected_on_interfering_medium() {
        let skewed = Distribution::rational(&[(3, 4), (1, 4)]).unwrap();
        let sys = ExactSystem::new(MediumKernel::interfering(ratio(1, 10)).unwrap(), two_way(0.1), 2).unwrap();
        let (_, r) = layered_replacement(&sys, 0, 0.5, &skewed, 7).unwrap();
        assert!(r.other_pairs_tv > 1e-3, "{r:?}");
        // independent links hide the sender's law from the other pair
        let sys = ExactSystem::new(links(1, 10), two_way(0.1), 2).unwrap();
        let (_, r) = layered_replacement(&sys, 0, 0.5, &skewed, 7).unwrap();
        assert_eq!(r.other_pairs_tv, 0.0);
        assert!(r.input_tv > 0.0);
    }

    #[test]
    fn replacements_commute() {
        let sys = ExactSystem::new(MediumKernel::interfering(ratio(1, 10)).unwrap(), two_way(0.1), 2).unwrap();
        let skewed = Distribution::rational(&[(3, 4), (1, 4)]).unwrap();
        let r = check_commutation(&sys, 0.5, &[uniform(), skewed], 1).unwrap();
        assert_eq!(r.orders.len(), 2);
        assert!(r.commutes);
    }

    #[test]
    fn total_variation_is_exact() {
        let a = BTreeMap::from([(vec![0], ratio(1, 2)), (vec![1], ratio(1, 2))]);
        let b = BTreeMap::from([(vec![0], ratio(1, 1))]);
        assert_eq!(total_variation(&a, &b), ratio(1, 2));
        assert_eq!(total_variation(&a, &a), ratio(0, 1));
    }

    #[test]
    fn medium_config_parses() {
        let c: MediumConfig = serde_json::from_str(r#"{"kind":"independent_links","links":["bsc(1/10)","bsc(1/5)"]}"#).unwrap();
        let m = c.build().unwrap();
        assert_eq!(m.users(), 2);
        let c: MediumConfig = serde_json::from_str(r#"{"kind":"interfering","p":"1/10"}"#).unwrap();
        assert_eq!(c.build().unwrap().name(), "interfering(1/10)");
    }
}
