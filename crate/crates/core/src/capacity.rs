//! Compound-DMC capacity `sup_Q min_k I(Q, k)` and exact checks of the chain
//! `I(X^n;Y^n) <= I(I^n;O^n) <= sum_t I(I_t;O_t) <= n I(T, k)`.

use std::collections::HashMap;

use num::Zero;
use rand::Rng;
use rand_distr::{Distribution as _, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{check_state_space, state_space, BlockMap};
use crate::error::{Error, Result};
use crate::probability::rational::{ratio, Rational};
use crate::probability::{kl_of, mutual_information_of, Alphabet, Distribution, StochasticMatrix};
use crate::rng::stream;
use crate::types::index_to_sequence;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Step size numerator `c` in `c / sqrt(t)`.
    pub step: f64,
    pub seed: u64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions { restarts: 20, iterations: 10_000, step: 0.5, seed: 0xC0FFEE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityDiagnostics {
    pub restarts: usize,
    pub iterations: usize,
    pub best_restart: usize,
    pub polished: bool,
    /// Kernels whose information at `Q*` ties the minimum within 1e-12.
    pub tied_kernels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompoundCapacityResult {
    pub capacity: f64,
    pub q_star: Vec<f64>,
    pub worst_kernel: usize,
    pub per_kernel: Vec<f64>,
    pub diagnostics: CapacityDiagnostics,
}

fn objective(q: &[f64], kernels: &[StochasticMatrix]) -> (f64, usize) {
    kernels
        .iter()
        .enumerate()
        .map(|(i, k)| (mutual_information_of(q, k), i))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Gradient of `I(., k)` at `q` up to an additive constant: `D(k(.|i) || qk)`.
fn gradient(q: &[f64], k: &StochasticMatrix) -> Vec<f64> {
    let out = k.output_marginal(q);
    (0..k.inputs()).map(|i| kl_of(k.row(i), &out).min(1e6)).collect()
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn subgradient_run(start: Vec<f64>, kernels: &[StochasticMatrix], opts: &CapacityOptions) -> (f64, Vec<f64>) {
    let mut q = start;
    let (mut best_val, _) = objective(&q, kernels);
    let mut best_q = q.clone();
    for t in 1..=opts.iterations {
        let (val, active) = objective(&q, kernels);
        if val > best_val {
            best_val = val;
            best_q = q.clone();
        }
        let mut g = gradient(&q, &kernels[active]);
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter_mut().for_each(|x| *x -= mean);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-15 {
            break;
        }
        let step = opts.step / (t as f64).sqrt() / norm;
        let next: Vec<f64> = q.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        q = project_simplex(&next);
    }
    let (val, _) = objective(&q, kernels);
    if val > best_val {
        (val, q)
    } else {
        (best_val, best_q)
    }
}

/// Golden-section maximization of the concave map `a -> f((a, 1-a))` on `[0, 1]`.
fn polish_binary(kernels: &[StochasticMatrix]) -> (f64, Vec<f64>) {
    let f = |a: f64| objective(&[a, 1.0 - a], kernels).0;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut best = (f(0.0), 0.0);
    for a in [0.5 * (lo + hi), 1.0] {
        let v = f(a);
        if v > best.0 {
            best = (v, a);
        }
    }
    (best.0, vec![best.1, 1.0 - best.1])
}

pub fn compound_capacity(kernels: &[StochasticMatrix]) -> Result<CompoundCapacityResult> {
    compound_capacity_with(kernels, &CapacityOptions::default())
}

pub fn compound_capacity_with(kernels: &[StochasticMatrix], opts: &CapacityOptions) -> Result<CompoundCapacityResult> {
    let first = kernels.first().ok_or(Error::EmptySet)?;
    let (ni, no) = (first.inputs(), first.outputs());
    if let Some(k) = kernels.iter().find(|k| k.inputs() != ni || k.outputs() != no) {
        return Err(Error::DimensionMismatch { expected: ni * no, got: k.inputs() * k.outputs() });
    }
    let runs: Vec<(f64, Vec<f64>)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                vec![1.0 / ni as f64; ni]
            } else {
                let mut rng = stream(opts.seed, &[r as u64]);
                let w: Vec<f64> = (0..ni).map(|_| Exp1.sample(&mut rng)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            };
            subgradient_run(start, kernels, opts)
        })
        .collect();
    let (mut best_restart, mut best) = (0, runs[0].clone());
    for (i, run) in runs.iter().enumerate().skip(1) {
        if run.0 > best.0 {
            best_restart = i;
            best = run.clone();
        }
    }
    let mut polished = false;
    if ni == 2 {
        let p = polish_binary(kernels);
        if p.0 > best.0 {
            best = p;
            polished = true;
        }
    }
    let per_kernel: Vec<f64> = kernels.iter().map(|k| mutual_information_of(&best.1, k)).collect();
    let capacity = per_kernel.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst_kernel = per_kernel.iter().position(|&v| v == capacity).unwrap();
    let tied_kernels = per_kernel.iter().enumerate().filter(|(_, &v)| v - capacity <= 1e-12).map(|(i, _)| i).collect();
    Ok(CompoundCapacityResult {
        capacity,
        q_star: best.1,
        worst_kernel,
        per_kernel,
        diagnostics: CapacityDiagnostics {
            restarts: opts.restarts,
            iterations: opts.iterations,
            best_restart,
            polished,
            tied_kernels,
        },
    })
}

/// Time-averaged letter distribution at the channel input.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedLetterDistribution {
    pub t: Distribution,
    pub encoder: String,
    pub n: usize,
}

fn block_prob_exact(p: &[Rational], x: &[usize]) -> Rational {
    x.iter().map(|&s| p[s].clone()).product()
}

fn block_prob(p: &[f64], x: &[usize]) -> f64 {
    x.iter().map(|&s| p[s]).product()
}

/// `T(i) = (1/m) sum_t Pr(I_t = i)` for `X^n` i.i.d. `p_X` mapped by the encoder (output length `m`).
pub fn induced_t(encoder: &dyn BlockMap, p_x: &Distribution, n: usize) -> Result<InducedLetterDistribution> {
    if n == 0 {
        return Err(Error::UnsupportedBlocklength(0));
    }
    check_state_space(p_x.len(), n)?;
    let k = encoder.output_size();
    let alphabet = Alphabet::indexed(k);
    let total = state_space(p_x.len(), n) as usize;
    let t = match p_x.exact_masses() {
        Some(p) => {
            let mut acc = vec![Rational::zero(); k];
            let mut m = 0;
            for idx in 0..total {
                let x = index_to_sequence(idx, n, p_x.len());
                let w = block_prob_exact(p, &x);
                let i = encoder.map(&x, 0);
                m = i.len();
                for s in i {
                    acc[s] += &w;
                }
            }
            let scale = ratio(1, m as i64);
            Distribution::exact(alphabet, acc.into_iter().map(|v| v * &scale).collect())?
        }
        None => {
            let mut acc = vec![0.0; k];
            let mut m = 0;
            for idx in 0..total {
                let x = index_to_sequence(idx, n, p_x.len());
                let w = block_prob(p_x.probs(), &x);
                let i = encoder.map(&x, 0);
                m = i.len();
                for s in i {
                    acc[s] += w;
                }
            }
            Distribution::normalized(alphabet, acc.into_iter().map(|v| v / m as f64).collect())?
        }
    };
    Ok(InducedLetterDistribution { t, encoder: encoder.name(), n })
}

/// Exact evaluation of the single-letterization chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleLetterReport {
    pub i_source: f64,
    pub i_channel_blocks: f64,
    pub sum_letter_information: f64,
    pub n_times_i_t: f64,
    pub t: Vec<f64>,
    /// `b - a` for each of the three inequalities `a <= b`.
    pub slacks: [f64; 3],
    pub holds: bool,
}

pub const CHAIN_SLACK: f64 = 1e-9;

fn mi_from_map(joint: &HashMap<(usize, usize), f64>) -> f64 {
    let mut a: HashMap<usize, f64> = HashMap::new();
    let mut b: HashMap<usize, f64> = HashMap::new();
    for (&(x, y), &p) in joint {
        *a.entry(x).or_default() += p;
        *b.entry(y).or_default() += p;
    }
    joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(&(x, y), &p)| p * (p / (a[&x] * b[&y])).log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn verify_single_letterization(
    encoder: &dyn BlockMap,
    decoder: &dyn BlockMap,
    k: &StochasticMatrix,
    p_x: &Distribution,
    n: usize,
) -> Result<SingleLetterReport> {
    if encoder.output_size() != k.inputs() || decoder.input_size() != k.outputs() {
        return Err(Error::AlphabetMismatch("coder alphabets do not chain through the channel".into()));
    }
    check_state_space(p_x.len(), n)?;
    let nx = state_space(p_x.len(), n) as usize;
    let probe = encoder.map(&vec![0; n], 0);
    let m = probe.len();
    check_state_space(k.outputs(), m)?;
    let no = state_space(k.outputs(), m) as usize;
    let ni = k.inputs();

    let mut j_xy: HashMap<(usize, usize), f64> = HashMap::new();
    let mut j_io: HashMap<(usize, usize), f64> = HashMap::new();
    let mut letters: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); m];
    let mut t = vec![0.0; ni];

    let outputs: Vec<Vec<usize>> = (0..no).map(|o| index_to_sequence(o, m, k.outputs())).collect();
    for xi in 0..nx {
        let x = index_to_sequence(xi, n, p_x.len());
        let px = block_prob(p_x.probs(), &x);
        if px == 0.0 {
            continue;
        }
        let i = encoder.map(&x, 0);
        if i.len() != m {
            return Err(Error::LengthMismatch { left: i.len(), right: m });
        }
        let i_idx = crate::types::sequence_to_index(&i, ni);
        for (pos, &s) in i.iter().enumerate() {
            t[s] += px / m as f64;
            let _ = pos;
        }
        for (oi, o) in outputs.iter().enumerate() {
            let pt: f64 = i.iter().zip(o).map(|(&a, &b)| k.p(a, b)).product();
            let w = px * pt;
            if w == 0.0 {
                continue;
            }
            let y = decoder.map(o, 0);
            let y_idx = crate::types::sequence_to_index(&y, decoder.output_size());
            *j_xy.entry((xi, y_idx)).or_default() += w;
            *j_io.entry((i_idx, oi)).or_default() += w;
            for (pos, (&a, &b)) in i.iter().zip(o).enumerate() {
                *letters[pos].entry((a, b)).or_default() += w;
            }
        }
    }
    let i_source = mi_from_map(&j_xy);
    let i_channel_blocks = mi_from_map(&j_io);
    let sum_letter_information: f64 = letters.iter().map(mi_from_map).sum();
    let n_times_i_t = m as f64 * mutual_information_of(&t, k);
    let slacks = [
        i_channel_blocks - i_source,
        sum_letter_information - i_channel_blocks,
        n_times_i_t - sum_letter_information,
    ];
    let holds = slacks.iter().all(|&s| s >= -CHAIN_SLACK);
    Ok(SingleLetterReport { i_source, i_channel_blocks, sum_letter_information, n_times_i_t, t, slacks, holds })
}

/// A random instance for chain checks: random source, random encoder/decoder tables, random DMC.
pub struct ChainInstance {
    pub p_x: Distribution,
    pub encoder: crate::channels::TableMap,
    pub decoder: crate::channels::TableMap,
    pub kernel: StochasticMatrix,
    pub n: usize,
}

pub fn random_chain_instance(seed: u64, index: u64, max_n: usize) -> ChainInstance {
    let mut rng = stream(seed, &[index]);
    let n = rng.random_range(1..=max_n);
    let p: f64 = rng.random_range(0.05..0.95);
    let p_x = Distribution::from_f64(&[p, 1.0 - p]).unwrap();
    let encoder = crate::channels::TableMap::random(n, 2, n, 2, &mut rng);
    let decoder = crate::channels::TableMap::random(n, 2, n, 2, &mut rng);
    let kernel = crate::probability::random_kernel(&mut rng, 2, 2);
    ChainInstance { p_x, encoder, decoder, kernel, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ConstantMap, IdentityMap, LetterMap};
    use crate::probability::binary_entropy;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.7, 0.7]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = project_simplex(&[2.0, -1.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn capacity_examples() {
        let one = compound_capacity(&[StochasticMatrix::bsc_ratio(1, 10)]).unwrap();
        assert!((one.capacity - (1.0 - binary_entropy(0.1))).abs() < 1e-4);
        let two = compound_capacity(&[StochasticMatrix::bsc_ratio(1, 10), StochasticMatrix::bsc_ratio(1, 5)]).unwrap();
        assert!((two.capacity - 0.278072).abs() < 1e-4);
        assert_eq!(two.worst_kernel, 1);
        let det = compound_capacity(&[StochasticMatrix::bsc_ratio(0, 1), StochasticMatrix::bsc_ratio(1, 1)]).unwrap();
        assert!((det.capacity - 1.0).abs() < 1e-6);
        assert!(matches!(compound_capacity(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn grid_oracle_for_two_bscs() {
        // Fine grid over binary inputs as an independent oracle.
        let ks = [StochasticMatrix::bsc_ratio(1, 10), StochasticMatrix::bsc_ratio(1, 5)];
        let grid_best = (0..=100_000)
            .map(|i| {
                let a = i as f64 / 100_000.0;
                ks.iter().map(|k| mutual_information_of(&[a, 1.0 - a], k)).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let r = compound_capacity(&ks).unwrap();
        assert!((r.capacity - grid_best).abs() < 1e-6);
        assert!((grid_best - 0.278072).abs() < 1e-4);
    }

    #[test]
    fn ternary_capacity_dominates_random_points() {
        let mut rng = stream(9, &[]);
        let ks: Vec<StochasticMatrix> = (0..3).map(|_| crate::probability::random_kernel(&mut rng, 3, 3)).collect();
        let r = compound_capacity(&ks).unwrap();
        for _ in 0..500 {
            let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let q: Vec<f64> = w.iter().map(|x| x / s).collect();
            assert!(r.capacity >= objective(&q, &ks).0 - 1e-6);
        }
    }

    #[test]
    fn induced_t_examples() {
        let u = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        assert_eq!(induced_t(&IdentityMap(2), &u, 3).unwrap().t, u);
        let constant = ConstantMap { input_size: 2, output_size: 2, symbol: 0 };
        assert_eq!(induced_t(&constant, &u, 3).unwrap().t, Distribution::rational(&[(1, 1), (0, 1)]).unwrap());
        let skew = Distribution::rational(&[(1, 4), (3, 4)]).unwrap();
        assert_eq!(
            induced_t(&LetterMap::complement(), &skew, 2).unwrap().t,
            Distribution::rational(&[(3, 4), (1, 4)]).unwrap()
        );
        assert!(induced_t(&IdentityMap(2), &u, 13).is_err());
    }

    #[test]
    fn chain_identity_coders_are_tight() {
        let u = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let r = verify_single_letterization(&IdentityMap(2), &IdentityMap(2), &StochasticMatrix::bsc_ratio(1, 10), &u, 2)
            .unwrap();
        let oracle = 2.0 * (1.0 - binary_entropy(0.1));
        assert!((oracle - 1.0620088).abs() < 1e-6);
        for v in [r.i_source, r.i_channel_blocks, r.sum_letter_information, r.n_times_i_t] {
            assert!((v - oracle).abs() < 1e-9);
        }
        assert!(r.holds);
    }

    #[test]
    fn chain_constant_encoder_is_zero() {
        let u = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let c = ConstantMap { input_size: 2, output_size: 2, symbol: 1 };
        let r = verify_single_letterization(&c, &IdentityMap(2), &StochasticMatrix::bsc_ratio(1, 10), &u, 3).unwrap();
        for v in [r.i_source, r.i_channel_blocks, r.sum_letter_information, r.n_times_i_t] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn chain_random_instances() {
        for idx in 0..200 {
            let inst = random_chain_instance(42, idx, 3);
            let r = verify_single_letterization(&inst.encoder, &inst.decoder, &inst.kernel, &inst.p_x, inst.n).unwrap();
            assert!(r.holds, "instance {idx}: {:?}", r.slacks);
        }
    }

    #[test]
    fn concavity_spot_check() {
        let mut rng = stream(4, &[]);
        for _ in 0..200 {
            let k = crate::probability::random_kernel(&mut rng, 3, 2);
            let a: Vec<f64> = {
                let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            };
            let b: Vec<f64> = {
                let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            };
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let lhs = mutual_information_of(&mid, &k);
            let rhs = 0.5 * (mutual_information_of(&a, &k) + mutual_information_of(&b, &k));
            assert!(lhs >= rhs - 1e-10);
        }
    }
}
