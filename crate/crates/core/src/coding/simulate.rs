use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::codebook::{generate_iid_codebook, log2_size, prob_any, LetterSampler, MatchProbability, TypicalityTest, MAX_EXPLICIT_LOG2};
use crate::channels::CompoundChannel;
use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::probability::Distribution;
use crate::report::Estimate;
use crate::rng::stream;

const CODEBOOK_TAG: u64 = 0xC0DE;
const MESSAGE_TAG: u64 = 0x3E55;
const CHANNEL_TAG: u64 = 0xC4A1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Explicit codebooks when they fit, implicit ensemble otherwise.
    #[default]
    Auto,
    Explicit,
    Implicit,
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub p_x: Distribution,
    pub eps: f64,
    pub spec: DistortionSpec,
    pub d: f64,
    pub rate: f64,
    pub n: usize,
    pub trials: u64,
    pub batch_size: u64,
    pub seed: u64,
    pub mode: SimulationMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelErrors {
    pub kernel: usize,
    pub name: String,
    /// Decoded index differs from the sent index.
    pub error: Estimate,
    /// Some non-transmitted codeword qualifies.
    pub e2: Estimate,
    /// The sent codeword itself fails to qualify.
    pub sent_failure: Estimate,
    /// Mean over trials of the exact conditional `Pr[E2 | y]`, when available.
    pub e2_conditional_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorProfile {
    pub n: usize,
    pub rate: f64,
    pub log2_codebook_size: u64,
    pub trials: u64,
    pub batch_size: u64,
    pub seed: u64,
    pub mode: SimulationMode,
    pub per_kernel: Vec<KernelErrors>,
    pub worst_kernel: usize,
    pub worst_error: f64,
}

#[derive(Clone, Copy, Default)]
struct TrialOutcome {
    error: bool,
    e2: bool,
    sent_failure: bool,
    e2_prob: f64,
}

fn resolve_mode(cfg: &SimulationConfig, k: u64) -> Result<SimulationMode> {
    match cfg.mode {
        SimulationMode::Auto if k <= 12 => Ok(SimulationMode::Explicit),
        SimulationMode::Auto => {
            cfg.spec.matrix()?;
            Ok(SimulationMode::Implicit)
        }
        SimulationMode::Explicit if k > MAX_EXPLICIT_LOG2 as u64 => {
            Err(Error::BudgetExceeded { size: format!("2^{k} codewords"), budget: 1 << MAX_EXPLICIT_LOG2 })
        }
        m => Ok(m),
    }
}

/// Random-coding simulation of message transport over every kernel of a compound set.
///
/// Messages are uniform. One codebook is drawn per batch and shared by all kernels. In
/// implicit mode the codebook is never materialized: the sent codeword is drawn i.i.d.
/// `p_X`, and whether any of the other `M - 1` independent codewords qualifies against the
/// received block is drawn from its exact probability.
pub fn simulate_reliable_comm(compound: &CompoundChannel, cfg: &SimulationConfig) -> Result<ErrorProfile> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if compound.input_size() != cfg.p_x.len() || compound.output_size() != cfg.spec.reproductions() {
        return Err(Error::AlphabetMismatch("channel alphabets do not match source and distortion".into()));
    }
    let k = log2_size(cfg.n, cfg.rate);
    let mode = resolve_mode(cfg, k)?;
    let m = 2f64.powi(k as i32);
    let batch = cfg.batch_size.max(1);
    let batches = cfg.trials.div_ceil(batch);
    let test = TypicalityTest::new(cfg.n, &cfg.p_x, cfg.eps, &cfg.spec, cfg.d)?;
    let matcher = if cfg.spec.is_additive() {
        Some(MatchProbability::for_decoding(cfg.n, &cfg.p_x, cfg.eps, &cfg.spec, cfg.d)?)
    } else {
        None
    };
    let sampler = LetterSampler::new(&cfg.p_x);
    let kernels = compound.kernels();

    let outcomes: Vec<Vec<Vec<TrialOutcome>>> = (0..batches)
        .into_par_iter()
        .map(|b| -> Result<Vec<Vec<TrialOutcome>>> {
            let in_batch = batch.min(cfg.trials - b * batch);
            let codebook = match mode {
                SimulationMode::Explicit => {
                    Some(generate_iid_codebook(&cfg.p_x, cfg.n, cfg.rate, &mut stream(cfg.seed, &[CODEBOOK_TAG, b]))?)
                }
                _ => None,
            };
            let mut per_kernel = vec![Vec::with_capacity(in_batch as usize); kernels.len()];
            for t in 0..in_batch {
                let mut msg_rng = stream(cfg.seed, &[MESSAGE_TAG, b, t]);
                let (sent_index, sent) = match &codebook {
                    Some(cb) => {
                        let i = msg_rng.random_range(0..cb.len());
                        (i, cb.words[i].clone())
                    }
                    None => (0, sampler.word(cfg.n, &mut msg_rng)),
                };
                for (ki, kernel) in kernels.iter().enumerate() {
                    let mut ch = stream(cfg.seed, &[CHANNEL_TAG, ki as u64, b, t]);
                    let y = kernel.sample(&sent, &mut ch)?;
                    let sent_ok = test.qualifies(&sent, &y);
                    let e2_prob = match &matcher {
                        Some(mp) => prob_any(mp.ln_prob(&y)?, m - 1.0),
                        None => f64::NAN,
                    };
                    let (e2, error) = match &codebook {
                        Some(cb) => {
                            let others = cb
                                .words
                                .iter()
                                .enumerate()
                                .any(|(i, w)| i != sent_index && test.qualifies(w, &y));
                            let decoded = test.decode(&y, cb);
                            (others, decoded != super::codebook::Decoded::Index(sent_index))
                        }
                        None => {
                            let e2 = ch.random::<f64>() < e2_prob;
                            (e2, e2 || !sent_ok)
                        }
                    };
                    per_kernel[ki].push(TrialOutcome { error, e2, sent_failure: !sent_ok, e2_prob });
                }
            }
            Ok(per_kernel)
        })
        .collect::<Result<_>>()?;

    let mut per_kernel = Vec::new();
    for (ki, kernel) in kernels.iter().enumerate() {
        let all: Vec<TrialOutcome> = outcomes.iter().flat_map(|b| b[ki].iter().copied()).collect();
        let count = |f: fn(&TrialOutcome) -> bool| all.iter().filter(|o| f(o)).count() as u64;
        let e2_conditional_mean = matcher.as_ref().map(|_| all.iter().map(|o| o.e2_prob).sum::<f64>() / all.len() as f64);
        per_kernel.push(KernelErrors {
            kernel: ki,
            name: kernel.name(),
            error: Estimate::new(count(|o| o.error), cfg.trials),
            e2: Estimate::new(count(|o| o.e2), cfg.trials),
            sent_failure: Estimate::new(count(|o| o.sent_failure), cfg.trials),
            e2_conditional_mean,
        });
    }
    let worst_kernel = per_kernel
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if e.error.estimate > per_kernel[best].error.estimate { i } else { best });
    Ok(ErrorProfile {
        n: cfg.n,
        rate: cfg.rate,
        log2_codebook_size: k,
        trials: cfg.trials,
        batch_size: batch,
        seed: cfg.seed,
        mode,
        worst_error: per_kernel[worst_kernel].error.estimate,
        worst_kernel,
        per_kernel,
    })
}

/// Runs the same configuration over several blocklengths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRecord {
    pub profiles: Vec<ErrorProfile>,
    /// Worst-case error is nonincreasing along the given blocklengths.
    pub monotone: bool,
}

pub fn simulate_decay(compound: &CompoundChannel, cfg: &SimulationConfig, blocklengths: &[usize]) -> Result<DecayRecord> {
    let profiles = blocklengths
        .iter()
        .map(|&n| simulate_reliable_comm(compound, &SimulationConfig { n, ..cfg.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let monotone = profiles.windows(2).all(|w| w[1].worst_error <= w[0].worst_error);
    Ok(DecayRecord { profiles, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{half_lying_channel, ChannelKernel, Dmc};
    use crate::probability::rational::ratio;

    fn uniform() -> Distribution {
        Distribution::rational(&[(1, 2), (1, 2)]).unwrap()
    }

    fn bsc(num: i64, den: i64) -> ChannelKernel {
        Dmc::bsc(ratio(num, den)).unwrap().into_kernel()
    }

    fn cfg(n: usize, rate: f64, d: f64, eps: f64, trials: u64) -> SimulationConfig {
        SimulationConfig {
            p_x: uniform(),
            eps,
            spec: DistortionSpec::hamming(2),
            d,
            rate,
            n,
            trials,
            batch_size: 100,
            seed: 7,
            mode: SimulationMode::Auto,
        }
    }

    #[test]
    fn noiseless_identity_rarely_errs() {
        let compound = CompoundChannel::single(bsc(0, 1));
        let p = simulate_reliable_comm(&compound, &cfg(16, 0.25, 0.0, 1.0, 1000)).unwrap();
        // union bound on collisions: 2^4 * 2^-16
        assert!(p.worst_error <= 0.02);
        assert_eq!(p.per_kernel[0].sent_failure.count, 0);
    }

    #[test]
    fn half_lying_fails() {
        let compound = CompoundChannel::single(half_lying_channel());
        let p = simulate_reliable_comm(&compound, &cfg(20, 0.5, 0.1, 0.2, 2000)).unwrap();
        assert!(p.worst_error >= 0.45, "{}", p.worst_error);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let compound = CompoundChannel::new(vec![bsc(1, 10), bsc(1, 5)]).unwrap();
        let c = cfg(16, 0.25, 0.2, 0.2, 300);
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate_reliable_comm(&compound, &c)).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| simulate_reliable_comm(&compound, &c)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_kernel.len(), 2);
    }

    #[test]
    fn implicit_matches_explicit_in_distribution() {
        // Same ensemble, two samplers: error frequencies agree within Monte Carlo noise.
        let compound = CompoundChannel::single(bsc(1, 10));
        let mut c = cfg(16, 0.5, 0.2, 0.15, 4000);
        c.mode = SimulationMode::Explicit;
        let ex = simulate_reliable_comm(&compound, &c).unwrap();
        c.mode = SimulationMode::Implicit;
        let im = simulate_reliable_comm(&compound, &c).unwrap();
        let (a, b) = (ex.per_kernel[0].error, im.per_kernel[0].error);
        let sigma = (a.sigma.powi(2) + b.sigma.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() <= 4.0 * sigma + 1e-3, "{} vs {}", a.estimate, b.estimate);
        let ce = ex.per_kernel[0].e2_conditional_mean.unwrap();
        assert!(ex.per_kernel[0].e2.agrees_with(ce, 4.0));
    }

    #[test]
    fn rejects_zero_trials() {
        let compound = CompoundChannel::single(bsc(1, 10));
        assert!(simulate_reliable_comm(&compound, &cfg(8, 0.5, 0.1, 0.1, 0)).is_err());
    }
}
