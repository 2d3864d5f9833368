use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::codebook::{
    generate_iid_codebook, ln_one_minus_exp, log2_size, Codebook, Decoded, LetterSampler, MatchProbability, TypicalityTest,
};
use crate::channels::{ChannelKernel, CompoundChannel};
use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::probability::Distribution;
use crate::report::Estimate;
use crate::rng::{stream, SimRng};

/// Codebooks up to this size (log2) are materialized; larger ones are simulated implicitly.
pub const EXPLICIT_PIPELINE_LOG2: u64 = 16;
const MAX_INDEX_BITS: u64 = 62;

const SOURCE_TAG: u64 = 0x50;
const SOURCE_BOOK_TAG: u64 = 0x51;
const CHANNEL_BOOK_TAG: u64 = 0x52;
const CHANNEL_TAG: u64 = 0x53;

#[derive(Clone, Debug)]
pub enum SourceCode {
    /// Each source letter is sent as `ceil(log2 |X|)` bits and reproduced as itself.
    Identity,
    /// Random covering codebook of `2^floor(nR)` words i.i.d. `law` over reproductions;
    /// the encoder picks the first word within `D`, or index 0 if none is.
    Covering { rate: f64, law: Distribution },
}

#[derive(Clone, Debug)]
pub enum ChannelCode {
    /// One message bit per use of a binary channel.
    IdentityBits,
    /// Random i.i.d. codebook with joint-typicality decoding.
    Typicality { n: usize, rate: f64, p_in: Distribution, eps: f64, spec: DistortionSpec, d: f64 },
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub p_x: Distribution,
    pub spec: DistortionSpec,
    pub d: f64,
    pub source: SourceCode,
    pub channel: ChannelCode,
    pub n: usize,
    pub trials: u64,
    pub batch_size: u64,
    pub seed: u64,
    /// Largest codebook (log2) to materialize; defaults to [`EXPLICIT_PIPELINE_LOG2`].
    pub explicit_limit: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineKernelReport {
    pub kernel: usize,
    pub name: String,
    /// `(1/n) d(X^n, Yhat^n) > D`.
    pub excess: Estimate,
    pub channel_failures: Estimate,
    pub covering_failures: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineProfile {
    pub n: usize,
    pub message_bits: u64,
    pub trials: u64,
    pub seed: u64,
    /// What a channel-decoding failure is mapped to.
    pub failure_policy: String,
    pub source_mode: String,
    pub channel_mode: String,
    pub per_kernel: Vec<PipelineKernelReport>,
    pub worst_kernel: usize,
    pub worst_excess: f64,
}

pub fn index_to_bits(index: u64, k: u64) -> Vec<usize> {
    (0..k).rev().map(|i| ((index >> i) & 1) as usize).collect()
}

pub fn bits_to_index(bits: &[usize]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

fn bits_per_letter(k: usize) -> u64 {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as u64
    }
}

/// Source-side state for one trial.
enum Encoded {
    Identity,
    /// Explicit covering; the codebook decides.
    Explicit,
    /// Implicit covering: chosen index (or none) and `p = Pr[a word covers x]`.
    Implicit { index: Option<u64>, p: f64 },
}

struct SourceSide {
    k: u64,
    matcher: Option<MatchProbability>,
}

impl SourceSide {
    fn new(cfg: &PipelineConfig) -> Result<Self> {
        match &cfg.source {
            SourceCode::Identity => {
                if cfg.spec.reproductions() != cfg.p_x.len() {
                    return Err(Error::AlphabetMismatch("identity source code needs matching alphabets".into()));
                }
                Ok(SourceSide { k: cfg.n as u64 * bits_per_letter(cfg.p_x.len()), matcher: None })
            }
            SourceCode::Covering { rate, law } => {
                if law.len() != cfg.spec.reproductions() {
                    return Err(Error::AlphabetMismatch("covering law is not over the reproduction alphabet".into()));
                }
                let k = log2_size(cfg.n, *rate);
                if k > MAX_INDEX_BITS {
                    return Err(Error::BudgetExceeded { size: format!("2^{k} messages"), budget: 1 << MAX_INDEX_BITS });
                }
                let matcher = if k > cfg.explicit_limit.unwrap_or(EXPLICIT_PIPELINE_LOG2) { Some(MatchProbability::for_covering(cfg.n, law, &cfg.spec, cfg.d)?) } else { None };
                Ok(SourceSide { k, matcher })
            }
        }
    }

    fn mode(&self, cfg: &PipelineConfig) -> &'static str {
        match (&cfg.source, &self.matcher) {
            (SourceCode::Identity, _) => "identity",
            (_, Some(_)) => "implicit",
            _ => "explicit",
        }
    }

    fn encode(&self, cfg: &PipelineConfig, book: Option<&Codebook>, x: &[usize], rng: &mut SimRng) -> Result<(Encoded, Vec<usize>, bool)> {
        match &cfg.source {
            SourceCode::Identity => {
                let b = bits_per_letter(cfg.p_x.len());
                let bits = x.iter().flat_map(|&s| index_to_bits(s as u64, b)).collect();
                Ok((Encoded::Identity, bits, false))
            }
            SourceCode::Covering { .. } => match (book, &self.matcher) {
                (Some(book), _) => {
                    let found = book.words.iter().position(|w| cfg.spec.within(x, w, cfg.d));
                    let index = found.unwrap_or(0) as u64;
                    Ok((Encoded::Explicit, index_to_bits(index, self.k), found.is_none()))
                }
                (None, Some(m)) => {
                    let ln_p = m.ln_prob(x)?;
                    let p = ln_p.exp();
                    let total = 2f64.powi(self.k as i32);
                    let index = if ln_p == f64::NEG_INFINITY {
                        None
                    } else if p >= 1.0 {
                        Some(0)
                    } else {
                        // first covering index is geometric; none if it exceeds the codebook
                        let ln_miss = ln_one_minus_exp(ln_p);
                        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        let j = (u.ln() / ln_miss).floor();
                        if j < total {
                            Some(j as u64)
                        } else {
                            None
                        }
                    };
                    Ok((Encoded::Implicit { index, p }, index_to_bits(index.unwrap_or(0), self.k), index.is_none()))
                }
                _ => unreachable!(),
            },
        }
    }

    /// Whether the reproduction for message `bits` has excess distortion.
    fn excess(&self, cfg: &PipelineConfig, book: Option<&Codebook>, x: &[usize], enc: &Encoded, bits: &[usize], rng: &mut SimRng) -> bool {
        match enc {
            Encoded::Identity => {
                let b = bits_per_letter(cfg.p_x.len()) as usize;
                let last = cfg.p_x.len() - 1;
                let y: Vec<usize> = if b == 0 {
                    vec![0; cfg.n]
                } else {
                    bits.chunks(b).map(|c| (bits_to_index(c) as usize).min(last)).collect()
                };
                !cfg.spec.within(x, &y, cfg.d)
            }
            Encoded::Explicit => {
                let j = bits_to_index(bits) as usize;
                !cfg.spec.within(x, &book.expect("explicit covering codebook").words[j], cfg.d)
            }
            Encoded::Implicit { index, p } => {
                let j = bits_to_index(bits);
                match index {
                    None => true,
                    Some(i) if j == *i => false,
                    // words before the first covering one are known not to cover
                    Some(i) if j < *i => true,
                    Some(_) => rng.random::<f64>() >= *p,
                }
            }
        }
    }
}

struct ChannelSide {
    kc: u64,
    test: Option<TypicalityTest>,
    matcher: Option<MatchProbability>,
    sampler: Option<LetterSampler>,
}

impl ChannelSide {
    fn new(cfg: &PipelineConfig, k: u64, compound: &CompoundChannel) -> Result<Self> {
        match &cfg.channel {
            ChannelCode::IdentityBits => {
                if compound.input_size() != 2 || compound.output_size() != 2 {
                    return Err(Error::AlphabetMismatch("identity bit transport needs a binary channel".into()));
                }
                Ok(ChannelSide { kc: k, test: None, matcher: None, sampler: None })
            }
            ChannelCode::Typicality { n, rate, p_in, eps, spec, d } => {
                if compound.input_size() != p_in.len() || compound.output_size() != spec.reproductions() {
                    return Err(Error::AlphabetMismatch("channel code alphabets do not match the channel".into()));
                }
                let kc = log2_size(*n, *rate);
                if kc < k {
                    return Err(Error::Config(format!("channel code carries {kc} bits, source needs {k}")));
                }
                if kc > MAX_INDEX_BITS {
                    return Err(Error::BudgetExceeded { size: format!("2^{kc} messages"), budget: 1 << MAX_INDEX_BITS });
                }
                let test = TypicalityTest::new(*n, p_in, *eps, spec, *d)?;
                let matcher = if kc > cfg.explicit_limit.unwrap_or(EXPLICIT_PIPELINE_LOG2) { Some(MatchProbability::for_decoding(*n, p_in, *eps, spec, *d)?) } else { None };
                Ok(ChannelSide { kc, test: Some(test), matcher, sampler: Some(LetterSampler::new(p_in)) })
            }
        }
    }

    fn mode(&self, cfg: &PipelineConfig) -> &'static str {
        match (&cfg.channel, &self.matcher) {
            (ChannelCode::IdentityBits, _) => "identity_bits",
            (_, Some(_)) => "implicit",
            _ => "explicit",
        }
    }

    /// Sends `bits` and returns the decoded message bits and whether decoding failed.
    fn transmit(&self, book: Option<&Codebook>, k: u64, bits: &[usize], kernel: &ChannelKernel, rng: &mut SimRng) -> Result<(Vec<usize>, bool)> {
        if self.test.is_none() {
            if bits.is_empty() {
                return Ok((Vec::new(), false));
            }
            return Ok((kernel.sample(bits, rng)?, false));
        }
        let test = self.test.as_ref().unwrap();
        let message = bits_to_index(bits);
        let failure = (index_to_bits(0, k), true);
        match (book, &self.matcher) {
            (Some(book), _) => {
                let y = kernel.sample(&book.words[message as usize], rng)?;
                match test.decode(&y, book) {
                    Decoded::Index(j) if (j as u64) < (1u64 << k) => Ok((index_to_bits(j as u64, k), false)),
                    _ => Ok(failure),
                }
            }
            (None, Some(m)) => {
                let sent = self.sampler.as_ref().unwrap().word(test.n(), rng);
                let y = kernel.sample(&sent, rng)?;
                let sent_ok = test.qualifies(&sent, &y);
                let ln_p = m.ln_prob(&y)?;
                let others = 2f64.powi(self.kc as i32) - 1.0;
                // number of other qualifying words: 0, 1 or more
                let (p0, p1) = if ln_p == f64::NEG_INFINITY {
                    (1.0, 0.0)
                } else {
                    let ln_miss = ln_one_minus_exp(ln_p.min(0.0));
                    ((others * ln_miss).exp(), (others.ln() + ln_p + (others - 1.0) * ln_miss).exp())
                };
                let u: f64 = rng.random();
                let count = if u < p0 { 0 } else if u < p0 + p1 { 1 } else { 2 };
                match (sent_ok, count) {
                    (true, 0) => Ok((bits.to_vec(), false)),
                    (false, 1) => {
                        let total = 1u64 << self.kc;
                        let mut j = rng.random_range(0..total - 1);
                        if j >= message {
                            j += 1;
                        }
                        if j < (1u64 << k) {
                            Ok((index_to_bits(j, k), false))
                        } else {
                            Ok(failure)
                        }
                    }
                    _ => Ok(failure),
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Source coding followed by channel coding over each kernel of a compound set.
/// A channel-decoding failure is mapped to message 0.
pub fn separation_pipeline(compound: &CompoundChannel, cfg: &PipelineConfig) -> Result<PipelineProfile> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cfg.spec.sources() != cfg.p_x.len() {
        return Err(Error::AlphabetMismatch("distortion and source alphabets differ".into()));
    }
    let base_source = SourceSide::new(cfg)?;
    let k = base_source.k;
    let base_channel = ChannelSide::new(cfg, k, compound)?;
    let batch = cfg.batch_size.max(1);
    let batches = cfg.trials.div_ceil(batch);
    let x_sampler = LetterSampler::new(&cfg.p_x);
    let kernels = compound.kernels();

    let per_batch: Vec<Vec<Vec<(bool, bool, bool)>>> = (0..batches)
        .into_par_iter()
        .map(|b| -> Result<Vec<Vec<(bool, bool, bool)>>> {
            let source_book = match (&cfg.source, &base_source.matcher) {
                (SourceCode::Covering { rate, law }, None) => {
                    Some(generate_iid_codebook(law, cfg.n, *rate, &mut stream(cfg.seed, &[SOURCE_BOOK_TAG, b]))?)
                }
                _ => None,
            };
            let channel_book = match (&cfg.channel, &base_channel.matcher) {
                (ChannelCode::Typicality { n, rate, p_in, .. }, None) => {
                    Some(generate_iid_codebook(p_in, *n, *rate, &mut stream(cfg.seed, &[CHANNEL_BOOK_TAG, b]))?)
                }
                _ => None,
            };
            let in_batch = batch.min(cfg.trials - b * batch);
            let mut out = vec![Vec::with_capacity(in_batch as usize); kernels.len()];
            for t in 0..in_batch {
                let mut src_rng = stream(cfg.seed, &[SOURCE_TAG, b, t]);
                let x = x_sampler.word(cfg.n, &mut src_rng);
                let (enc, bits, cover_fail) = base_source.encode(cfg, source_book.as_ref(), &x, &mut src_rng)?;
                for (ki, kernel) in kernels.iter().enumerate() {
                    let mut ch = stream(cfg.seed, &[CHANNEL_TAG, ki as u64, b, t]);
                    let (decoded, failed) = base_channel.transmit(channel_book.as_ref(), k, &bits, kernel, &mut ch)?;
                    let excess = base_source.excess(cfg, source_book.as_ref(), &x, &enc, &decoded, &mut ch);
                    out[ki].push((excess, failed, cover_fail));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let per_kernel: Vec<PipelineKernelReport> = kernels
        .iter()
        .enumerate()
        .map(|(ki, kernel)| {
            let all: Vec<(bool, bool, bool)> = per_batch.iter().flat_map(|b| b[ki].iter().copied()).collect();
            let c = |f: fn(&(bool, bool, bool)) -> bool| all.iter().filter(|o| f(o)).count() as u64;
            PipelineKernelReport {
                kernel: ki,
                name: kernel.name(),
                excess: Estimate::new(c(|o| o.0), cfg.trials),
                channel_failures: Estimate::new(c(|o| o.1), cfg.trials),
                covering_failures: Estimate::new(c(|o| o.2), cfg.trials),
            }
        })
        .collect();
    let worst_kernel =
        per_kernel.iter().enumerate().fold(0, |best, (i, r)| if r.excess.estimate > per_kernel[best].excess.estimate { i } else { best });
    Ok(PipelineProfile {
        n: cfg.n,
        message_bits: k,
        trials: cfg.trials,
        seed: cfg.seed,
        failure_policy: "channel decoding failure reproduces message 0".into(),
        source_mode: base_source.mode(cfg).into(),
        channel_mode: base_channel.mode(cfg).into(),
        worst_excess: per_kernel[worst_kernel].excess.estimate,
        worst_kernel,
        per_kernel,
    })
}
