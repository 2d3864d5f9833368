//! Informational rate-distortion function `R(D) = min I(X;Y)` subject to `E d(X,Y) <= D`,
//! computed with Blahut-Arimoto alternating minimization at a fixed slope and bisection
//! on the slope to meet the distortion target.

use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::{d_max, d_min, DistortionSpec};
use crate::error::{Error, Result};
use crate::probability::{kl_of, Distribution};

/// Output letters whose mass falls below this are pruned.
const PRUNE_BELOW: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaOptions {
    /// Stop when the upper/lower bound gap falls below this (bits).
    pub gap_tol: f64,
    pub max_iter: u64,
    /// Required `|achieved D - target D|`.
    pub distortion_tol: f64,
}

impl Default for BaOptions {
    fn default() -> Self {
        BaOptions { gap_tol: 1e-9, max_iter: 100_000, distortion_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateDistortionResult {
    /// Target per-letter distortion.
    pub d: f64,
    pub achieved_distortion: f64,
    /// Bits per source letter.
    pub rate: f64,
    /// `p(y|x)`, one row per source letter.
    pub test_channel: Vec<Vec<f64>>,
    pub output: Vec<f64>,
    /// Lagrange slope (bits per unit distortion) of the final iterate.
    pub slope: f64,
    pub iterations: u64,
    pub gap: f64,
}

struct Problem<'a> {
    p: &'a [f64],
    d: Vec<Vec<f64>>,
    ny: usize,
}

struct SlopeSolution {
    channel: Vec<Vec<f64>>,
    output: Vec<f64>,
    distortion: f64,
    rate: f64,
    iterations: u64,
    gap: f64,
}

impl Problem<'_> {
    /// BA iterations at slope `beta` with weights `2^{-beta (d - min_y d)}`; entries with
    /// `mask == false` are excluded.
    fn solve(&self, beta: f64, mask: Option<&[Vec<bool>]>, opts: &BaOptions) -> SlopeSolution {
        let nx = self.p.len();
        let ny = self.ny;
        let allowed = |x: usize, y: usize| mask.map(|m| m[x][y]).unwrap_or(true);
        let weights: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                let m = (0..ny).filter(|&y| allowed(x, y)).map(|y| self.d[x][y]).fold(f64::INFINITY, f64::min);
                (0..ny)
                    .map(|y| if allowed(x, y) { (-beta * (self.d[x][y] - m)).exp2() } else { 0.0 })
                    .collect()
            })
            .collect();
        let mut r = vec![1.0 / ny as f64; ny];
        let mut iterations = 0;
        let mut gap = f64::INFINITY;
        let mut z = vec![0.0; nx];
        while iterations < opts.max_iter {
            iterations += 1;
            for x in 0..nx {
                z[x] = (0..ny).map(|y| r[y] * weights[x][y]).sum();
            }
            let c: Vec<f64> = (0..ny)
                .map(|y| (0..nx).filter(|&x| self.p[x] > 0.0 && z[x] > 0.0).map(|x| self.p[x] * weights[x][y] / z[x]).sum())
                .collect();
            let max_log = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max).log2();
            let avg: f64 = (0..ny).filter(|&y| r[y] > 0.0 && c[y] > 0.0).map(|y| r[y] * c[y] * c[y].log2()).sum();
            gap = (max_log - avg).max(0.0);
            for y in 0..ny {
                r[y] *= c[y];
                if r[y] < PRUNE_BELOW {
                    r[y] = 0.0;
                }
            }
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
            if gap < opts.gap_tol {
                break;
            }
        }
        let channel: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                let zx: f64 = (0..ny).map(|y| r[y] * weights[x][y]).sum();
                if zx > 0.0 {
                    (0..ny).map(|y| r[y] * weights[x][y] / zx).collect()
                } else {
                    // Unreachable for letters with p(x) > 0; keep the row a valid pmf.
                    let best = (0..ny).find(|&y| allowed(x, y)).unwrap_or(0);
                    (0..ny).map(|y| (y == best) as u8 as f64).collect()
                }
            })
            .collect();
        let (rate, distortion, output) = self.evaluate(&channel);
        SlopeSolution { channel, output, distortion, rate, iterations, gap }
    }

    fn evaluate(&self, channel: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
        let mut output = vec![0.0; self.ny];
        let mut distortion = 0.0;
        for (x, row) in channel.iter().enumerate() {
            for y in 0..self.ny {
                output[y] += self.p[x] * row[y];
                distortion += self.p[x] * row[y] * self.d[x][y];
            }
        }
        let rate = channel
            .iter()
            .enumerate()
            .filter(|(x, _)| self.p[*x] > 0.0)
            .map(|(x, row)| self.p[x] * kl_of(row, &output))
            .sum::<f64>()
            .max(0.0);
        (rate, distortion, output)
    }
}

fn result(d: f64, beta: f64, s: SlopeSolution, iterations: u64) -> RateDistortionResult {
    RateDistortionResult {
        d,
        achieved_distortion: s.distortion,
        rate: s.rate,
        test_channel: s.channel,
        output: s.output,
        slope: beta,
        iterations,
        gap: s.gap,
    }
}

pub fn blahut_arimoto(p_x: &Distribution, spec: &DistortionSpec, d: f64) -> Result<RateDistortionResult> {
    blahut_arimoto_with(p_x, spec, d, &BaOptions::default())
}

pub fn blahut_arimoto_with(
    p_x: &Distribution,
    spec: &DistortionSpec,
    d: f64,
    opts: &BaOptions,
) -> Result<RateDistortionResult> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::Negative(format!("distortion {d}")));
    }
    let m = spec.matrix()?;
    if m.sources() != p_x.len() {
        return Err(Error::DimensionMismatch { expected: m.sources(), got: p_x.len() });
    }
    let problem = Problem {
        p: p_x.probs(),
        d: (0..m.sources()).map(|x| (0..m.reproductions()).map(|y| m.get(x, y)).collect()).collect(),
        ny: m.reproductions(),
    };
    let dmax = d_max(spec, p_x)?;
    let dmin = d_min(spec, p_x)?;

    if d >= dmax {
        // A constant reproduction achieves the target at rate 0.
        let ybest = (0..problem.ny)
            .min_by(|&a, &b| {
                let ca: f64 = (0..p_x.len()).map(|x| problem.p[x] * problem.d[x][a]).sum();
                let cb: f64 = (0..p_x.len()).map(|x| problem.p[x] * problem.d[x][b]).sum();
                ca.total_cmp(&cb)
            })
            .unwrap();
        let channel: Vec<Vec<f64>> =
            (0..p_x.len()).map(|_| (0..problem.ny).map(|y| (y == ybest) as u8 as f64).collect()).collect();
        let (rate, distortion, output) = problem.evaluate(&channel);
        return Ok(RateDistortionResult {
            d,
            achieved_distortion: distortion,
            rate,
            test_channel: channel,
            output,
            slope: 0.0,
            iterations: 0,
            gap: 0.0,
        });
    }
    if d < dmin - 1e-12 {
        return Err(Error::Infeasible(format!("distortion {d} below the minimum {dmin}")));
    }
    if d <= dmin + opts.distortion_tol * 1e-3 {
        // Boundary point: minimize I over test channels supported on per-letter minimizers.
        let mask: Vec<Vec<bool>> = problem
            .d
            .iter()
            .map(|row| {
                let m = row.iter().cloned().fold(f64::INFINITY, f64::min);
                row.iter().map(|&v| v == m).collect()
            })
            .collect();
        let s = problem.solve(0.0, Some(&mask), opts);
        let it = s.iterations;
        return Ok(result(d, f64::INFINITY, s, it));
    }

    let smallest_p = problem.p.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let mut hi = (m.max_entry() / smallest_p).max(1.0);
    let mut lo = 0.0;
    let mut total_iter = 0;
    let mut best = problem.solve(hi, None, opts);
    total_iter += best.iterations;
    while best.distortion > d + opts.distortion_tol && hi < 4096.0 {
        lo = hi;
        hi *= 2.0;
        best = problem.solve(hi, None, opts);
        total_iter += best.iterations;
    }
    let mut beta = hi;
    for _ in 0..200 {
        if (best.distortion - d).abs() < opts.distortion_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let s = problem.solve(mid, None, opts);
        total_iter += s.iterations;
        if s.distortion > d {
            lo = mid;
            // Keep the feasible endpoint as the candidate.
        } else {
            hi = mid;
            beta = mid;
            best = s;
        }
    }
    Ok(result(d, beta, best, total_iter))
}

/// Rate-distortion curve on a grid; points are independent and computed in parallel.
pub fn rd_curve(p_x: &Distribution, spec: &DistortionSpec, grid: &[f64]) -> Result<Vec<RateDistortionResult>> {
    grid.par_iter().map(|&d| blahut_arimoto(p_x, spec, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{binary_entropy, mutual_information, StochasticMatrix};

    fn uniform() -> Distribution {
        Distribution::rational(&[(1, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn binary_hamming_oracle() {
        let h = DistortionSpec::hamming(2);
        let r = blahut_arimoto(&uniform(), &h, 0.1).unwrap();
        assert!((r.rate - (1.0 - binary_entropy(0.1))).abs() < 1e-6, "{}", r.rate);
        assert!((r.rate - 0.531004).abs() < 1e-6);
        assert!(r.achieved_distortion <= 0.1 + 1e-8);
        assert!(r.gap < 1e-9);
    }

    #[test]
    fn endpoints() {
        let h = DistortionSpec::hamming(2);
        assert_eq!(blahut_arimoto(&uniform(), &h, 0.5).unwrap().rate, 0.0);
        assert_eq!(blahut_arimoto(&uniform(), &h, 0.7).unwrap().rate, 0.0);
        let zero = blahut_arimoto(&uniform(), &h, 0.0).unwrap();
        assert!((zero.rate - 1.0).abs() < 1e-9);
        assert!(matches!(blahut_arimoto(&uniform(), &h, -0.1), Err(Error::Negative(_))));
        assert!(blahut_arimoto(&uniform(), &DistortionSpec::sorted_sequence(2), 0.1).is_err());
    }

    #[test]
    fn skewed_source_oracle() {
        // Bernoulli(p) source, Hamming: R(D) = h(p) - h(D) for D < min(p, 1-p).
        let p = Distribution::from_f64(&[0.8, 0.2]).unwrap();
        let r = blahut_arimoto(&p, &DistortionSpec::hamming(2), 0.05).unwrap();
        assert!((r.rate - (binary_entropy(0.2) - binary_entropy(0.05))).abs() < 1e-6);
    }

    #[test]
    fn curve_grid() {
        let h = DistortionSpec::hamming(2);
        let c = rd_curve(&uniform(), &h, &[0.1, 0.2, 0.3]).unwrap();
        let expect = [0.531004, 0.278072, 0.118709];
        for (r, e) in c.iter().zip(expect) {
            assert!((r.rate - e).abs() < 1e-6, "{} vs {e}", r.rate);
        }
        let ends = rd_curve(&uniform(), &h, &[0.0, 0.5]).unwrap();
        assert!((ends[0].rate - 1.0).abs() < 1e-9);
        assert_eq!(ends[1].rate, 0.0);
        let single = rd_curve(&uniform(), &h, &[0.2]).unwrap();
        assert_eq!(single[0], blahut_arimoto(&uniform(), &h, 0.2).unwrap());
    }

    #[test]
    fn test_channel_information_equals_rate() {
        let p = Distribution::from_f64(&[0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(3);
        for d in [0.05, 0.2, 0.4] {
            let r = blahut_arimoto(&p, &spec, d).unwrap();
            let k = StochasticMatrix::from_f64_rows(r.test_channel.clone()).unwrap();
            assert!((mutual_information(&p, &k).unwrap() - r.rate).abs() < 1e-8);
            assert!(r.achieved_distortion <= d + 1e-8);
        }
    }
}
