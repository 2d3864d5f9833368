use serde::Serialize;

use crate::distortion::{DistortionSpec, FLOAT_COMPARE_SLACK};
use crate::error::{Error, Result};
use crate::probability::{joint_kl, joint_kl_exact, kl_divergence, kl_divergence_exact, Distribution, ExactBits, JointDistribution};

use super::codebook::log2_size;

#[derive(Clone, Debug)]
pub struct ExponentQuery {
    pub p_x: Distribution,
    pub spec: DistortionSpec,
    pub d: f64,
    pub eps: f64,
    pub rate: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentResult {
    /// `E`, in bits; `+inf` when no joint pmf satisfies the constraints.
    pub exponent: f64,
    pub log2_bound: f64,
    /// `min(1, ...)` is not applied; this is the raw union bound.
    pub bound: f64,
    /// Minimizing joint pmf `q_ZY`, row-major.
    pub q_zy: Option<Vec<Vec<f64>>>,
    pub achieved_distortion: Option<f64>,
    pub slope: Option<f64>,
    pub iterations: usize,
}

const INNER_TOL: f64 = 1e-13;
const INNER_MAX_ITER: usize = 100_000;
const DISTORTION_TOL: f64 = 1e-10;

struct Problem {
    p: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    d: Vec<Vec<f64>>,
}

struct Solution {
    q: Vec<Vec<f64>>,
    exponent: f64,
    distortion: f64,
    iterations: usize,
}

impl Problem {
    /// Smallest `sum_z a(z) c(z)` over `a` in the box intersected with the simplex.
    fn box_min(&self, c: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..self.p.len()).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
        let mut a = self.lo.clone();
        let mut left = 1.0 - a.iter().sum::<f64>();
        for &z in &order {
            let add = (self.hi[z] - a[z]).min(left).max(0.0);
            a[z] += add;
            left -= add;
        }
        a.iter().zip(c).map(|(x, y)| x * y).sum()
    }

    /// KL projection of `exp(ln_w)` onto `{lo <= a <= hi, sum a = 1}`: `a = clip(exp(ln_w + mu))`.
    fn project(&self, ln_w: &[f64]) -> Vec<f64> {
        let top = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let at = |mu: f64| -> Vec<f64> {
            ln_w.iter()
                .enumerate()
                .map(|(z, &l)| {
                    let v = if l == f64::NEG_INFINITY { 0.0 } else { (l - top + mu).exp() };
                    v.clamp(self.lo[z], self.hi[z])
                })
                .collect()
        };
        let (mut lo, mut hi) = (-800.0, 800.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).iter().sum::<f64>() > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let a = at(0.5 * (lo + hi));
        let s: f64 = a.iter().sum();
        a.into_iter().map(|x| x / s).collect()
    }

    /// Alternating minimization of `D(q || p x r) + s E_q d` over `q` (box marginal) and `r`.
    fn solve(&self, s: f64) -> Solution {
        let (nz, ny) = (self.p.len(), self.d[0].len());
        let mut r = vec![1.0 / ny as f64; ny];
        let mut q = vec![vec![0.0; ny]; nz];
        let mut iterations = 0;
        let ln2 = std::f64::consts::LN_2;
        loop {
            iterations += 1;
            let mut ln_w = vec![0.0; nz];
            let mut cond = vec![vec![0.0; ny]; nz];
            for z in 0..nz {
                let dmin = (0..ny).filter(|&y| r[y] > 0.0).map(|y| self.d[z][y]).fold(f64::INFINITY, f64::min);
                let mut total = 0.0;
                for y in 0..ny {
                    let v = r[y] * (-s * (self.d[z][y] - dmin) * ln2).exp();
                    cond[z][y] = v;
                    total += v;
                }
                cond[z].iter_mut().for_each(|v| *v /= total);
                ln_w[z] = if self.p[z] > 0.0 { self.p[z].ln() + total.ln() - s * dmin * ln2 } else { f64::NEG_INFINITY };
            }
            let a = self.project(&ln_w);
            for z in 0..nz {
                for y in 0..ny {
                    q[z][y] = a[z] * cond[z][y];
                }
            }
            let r_new: Vec<f64> = (0..ny).map(|y| (0..nz).map(|z| q[z][y]).sum()).collect();
            let change = r_new.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            r = r_new;
            if change < INNER_TOL || iterations >= INNER_MAX_ITER {
                break;
            }
        }
        let exponent = self.objective(&q);
        let distortion = self.distortion(&q);
        Solution { q, exponent, distortion, iterations }
    }

    fn objective(&self, q: &[Vec<f64>]) -> f64 {
        let ny = q[0].len();
        let qy: Vec<f64> = (0..ny).map(|y| q.iter().map(|row| row[y]).sum()).collect();
        let mut total = 0.0;
        for (z, row) in q.iter().enumerate() {
            for (y, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    total += v * (v / (self.p[z] * qy[y])).log2();
                }
            }
        }
        total.max(0.0)
    }

    fn distortion(&self, q: &[Vec<f64>]) -> f64 {
        q.iter().zip(&self.d).map(|(row, dr)| row.iter().zip(dr).map(|(a, b)| a * b).sum::<f64>()).sum()
    }
}

/// `E = inf D(q_ZY || p_X x q_Y)` over `q_Z` within `eps` of `p_X` letterwise and
/// `E_q d <= D`, and the union bound `(n+1)^{|X||Y|} 2^{floor(nR)} 2^{-nE}`.
pub fn error_exponent_bound(query: &ExponentQuery) -> Result<ExponentResult> {
    if query.eps < 0.0 || query.d < 0.0 {
        return Err(Error::Negative("eps and D must be nonnegative".into()));
    }
    let m = query.spec.matrix()?;
    if m.sources() != query.p_x.len() {
        return Err(Error::AlphabetMismatch("distortion and source alphabets differ".into()));
    }
    let p = query.p_x.probs().to_vec();
    let prob = Problem {
        lo: p.iter().map(|&x| (x - query.eps).max(0.0)).collect(),
        hi: p.iter().map(|&x| if x > 0.0 { (x + query.eps).min(1.0) } else { 0.0 }).collect(),
        d: (0..m.sources()).map(|x| (0..m.reproductions()).map(|y| m.get(x, y)).collect()).collect(),
        p,
    };
    let (nx, ny) = (m.sources(), m.reproductions());
    let n = query.n as f64;
    let finish = |e: f64, sol: Option<&Solution>, slope: Option<f64>| {
        let log2_bound = (nx * ny) as f64 * (n + 1.0).log2() + log2_size(query.n, query.rate) as f64 - n * e;
        ExponentResult {
            exponent: e,
            log2_bound,
            bound: log2_bound.exp2(),
            q_zy: sol.map(|s| s.q.clone()),
            achieved_distortion: sol.map(|s| s.distortion),
            slope,
            iterations: sol.map_or(0, |s| s.iterations),
        }
    };

    let letter_min: Vec<f64> = prob.d.iter().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    if prob.box_min(&letter_min) > query.d + FLOAT_COMPARE_SLACK {
        return Ok(finish(f64::INFINITY, None, None));
    }
    // zero exponent: q_Z = p_X with a constant reproduction already meets the constraint
    for y in 0..ny {
        let mean: f64 = prob.p.iter().zip(&prob.d).map(|(p, r)| p * r[y]).sum();
        if mean <= query.d + FLOAT_COMPARE_SLACK {
            return Ok(finish(0.0, None, Some(0.0)));
        }
    }
    let mut hi = 1.0;
    let mut best = prob.solve(hi);
    while best.distortion > query.d + DISTORTION_TOL && hi < 4096.0 {
        hi *= 2.0;
        best = prob.solve(hi);
    }
    let mut slope = hi;
    let mut lo = 0.0;
    for _ in 0..100 {
        if (best.distortion - query.d).abs() < DISTORTION_TOL || hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let sol = prob.solve(mid);
        if sol.distortion > query.d + DISTORTION_TOL {
            lo = mid;
        } else {
            hi = mid;
            slope = mid;
            best = sol;
        }
    }
    Ok(finish(best.exponent, Some(&best), Some(slope)))
}

/// `D(q_ZY || p_X x q_Y) = D(q_Z || p_X) + D(q_ZY || q_Z x q_Y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlChain {
    pub total: f64,
    pub marginal: f64,
    pub mutual: f64,
    /// Exact verdict on the identity when every input is rational.
    pub identity_exact: Option<bool>,
    pub mode: &'static str,
}

pub fn kl_chain_report(q_zy: &JointDistribution, p_x: &Distribution) -> Result<KlChain> {
    let q_z = q_zy.row_marginal();
    let q_y = q_zy.col_marginal();
    q_z.same_alphabet(p_x)?;
    let reference = JointDistribution::product(p_x, &q_y);
    let independent = JointDistribution::product(&q_z, &q_y);
    if q_zy.is_exact() && p_x.is_exact() {
        let total = joint_kl_exact(q_zy, &reference)?;
        let mut sum: ExactBits = kl_divergence_exact(&q_z, p_x)?;
        let mutual = joint_kl_exact(q_zy, &independent)?;
        let marginal = sum.to_f64();
        sum.add(&mutual);
        Ok(KlChain {
            total: total.to_f64(),
            marginal,
            mutual: mutual.to_f64(),
            identity_exact: Some(total.exact_eq(&sum)),
            mode: "exact",
        })
    } else {
        Ok(KlChain {
            total: joint_kl(q_zy, &reference)?,
            marginal: kl_divergence(&q_z, p_x)?,
            mutual: joint_kl(q_zy, &independent)?,
            identity_exact: None,
            mode: "float",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::rational::ratio;
    use crate::probability::{binary_entropy, random_rational_joint, Alphabet};
    use crate::rng::stream;

    fn query(p: &[f64], d: f64, eps: f64) -> ExponentQuery {
        ExponentQuery { p_x: Distribution::from_f64(p).unwrap(), spec: DistortionSpec::hamming(2), d, eps, rate: 0.0, n: 1 }
    }

    #[test]
    fn exponent_examples() {
        let e = error_exponent_bound(&query(&[0.5, 0.5], 0.1, 0.0)).unwrap();
        assert!((e.exponent - 0.531004).abs() < 1e-4);
        assert!((e.exponent - (1.0 - binary_entropy(0.1))).abs() < 1e-6);
        assert_eq!(error_exponent_bound(&query(&[0.5, 0.5], 1.0, 0.5)).unwrap().exponent, 0.0);
        let e = error_exponent_bound(&query(&[0.5, 0.5], 0.0, 0.0)).unwrap();
        assert!((e.exponent - 1.0).abs() < 1e-4);
    }

    #[test]
    fn infeasible_box_is_infinite() {
        let mut q = query(&[0.5, 0.5], 0.1, 0.0);
        q.spec = DistortionSpec::additive(
            crate::distortion::DistortionMatrix::new(vec![vec![ratio(1, 2), ratio(1, 1)], vec![ratio(1, 1), ratio(1, 2)]]).unwrap(),
        );
        assert_eq!(error_exponent_bound(&q).unwrap().exponent, f64::INFINITY);
    }

    /// `q_Z = p_X`; the distortion constraint is active at the optimum, so `c1` is fixed by
    /// `c0` and a zooming 10^4-point grid over `c0` suffices.
    fn grid_oracle(p0: f64, d: f64) -> f64 {
        let objective = |c0: f64| -> Option<f64> {
            // c_z = Pr[Y != z | Z = z]
            let c1 = (d - p0 * c0) / (1.0 - p0);
            if !(0.0..=1.0).contains(&c1) {
                return None;
            }
            let q = [[p0 * (1.0 - c0), p0 * c0], [(1.0 - p0) * c1, (1.0 - p0) * (1.0 - c1)]];
            let qy = [q[0][0] + q[1][0], q[0][1] + q[1][1]];
            let pz = [p0, 1.0 - p0];
            let mut t = 0.0;
            for z in 0..2 {
                for y in 0..2 {
                    if q[z][y] > 0.0 {
                        t += q[z][y] * (q[z][y] / (pz[z] * qy[y])).log2();
                    }
                }
            }
            Some(t)
        };
        let (mut lo, mut hi) = (0.0, (d / p0).min(1.0));
        let mut best = (f64::INFINITY, 0.0);
        for _ in 0..8 {
            for i in 0..10_000 {
                let c0 = lo + (hi - lo) * i as f64 / 9_999.0;
                if let Some(v) = objective(c0) {
                    if v < best.0 {
                        best = (v, c0);
                    }
                }
            }
            let w = (hi - lo) / 100.0;
            lo = (best.1 - w).max(0.0);
            hi = (best.1 + w).min((d / p0).min(1.0));
        }
        best.0
    }

    #[test]
    fn grid_oracle_binary() {
        for (p0, d) in [(0.5, 0.1), (0.3, 0.1), (0.2, 0.05), (0.4, 0.25)] {
            let e = error_exponent_bound(&query(&[p0, 1.0 - p0], d, 0.0)).unwrap().exponent;
            let g = grid_oracle(p0, d);
            assert!((e - g).abs() < 1e-6, "p0 {p0} d {d}: {e} vs {g}");
        }
    }

    /// For binary Hamming, `E = min_a D(a || p) + [h(a) - h(D)]^+` over the box.
    fn box_oracle(p0: f64, d: f64, eps: f64) -> f64 {
        let f = |a: f64| {
            let kl = if a > 0.0 { a * (a / p0).log2() } else { 0.0 }
                + if a < 1.0 { (1.0 - a) * ((1.0 - a) / (1.0 - p0)).log2() } else { 0.0 };
            let rd = if d < a.min(1.0 - a) { binary_entropy(a) - binary_entropy(d) } else { 0.0 };
            kl + rd
        };
        let (mut lo, mut hi) = ((p0 - eps).max(0.0), (p0 + eps).min(1.0));
        let mut best = f64::INFINITY;
        for _ in 0..30 {
            let mut arg = lo;
            for i in 0..=1000 {
                let a = lo + (hi - lo) * i as f64 / 1000.0;
                let v = f(a);
                if v < best {
                    best = v;
                    arg = a;
                }
            }
            let w = (hi - lo) / 100.0;
            lo = (arg - w).max((p0 - eps).max(0.0));
            hi = (arg + w).min((p0 + eps).min(1.0));
        }
        best
    }

    #[test]
    fn box_constraint_oracle() {
        for (p0, d, eps) in [(0.5, 0.1, 0.2), (0.3, 0.1, 0.1), (0.25, 0.05, 0.2), (0.4, 0.2, 0.3)] {
            let e = error_exponent_bound(&query(&[p0, 1.0 - p0], d, eps)).unwrap().exponent;
            let o = box_oracle(p0, d, eps);
            assert!((e - o).abs() < 1e-6, "p0 {p0} d {d} eps {eps}: {e} vs {o}");
        }
        // uniform source: the exponent does not depend on eps
        for eps in [0.0, 0.1, 0.3] {
            let e = error_exponent_bound(&query(&[0.5, 0.5], 0.15, eps)).unwrap().exponent;
            assert!((e - (1.0 - binary_entropy(0.15))).abs() < 1e-6);
        }
    }

    #[test]
    fn bound_formula() {
        let mut q = query(&[0.5, 0.5], 0.1, 0.0);
        q.n = 16;
        q.rate = 0.25;
        let r = error_exponent_bound(&q).unwrap();
        let want = 4.0 * 17f64.log2() + 4.0 - 16.0 * r.exponent;
        assert!((r.log2_bound - want).abs() < 1e-12);
    }

    #[test]
    fn kl_chain_examples() {
        let p = Distribution::rational(&[(1, 3), (2, 3)]).unwrap();
        let qy = Distribution::rational(&[(1, 4), (3, 4)]).unwrap();
        let prod = JointDistribution::product(&p, &qy);
        let r = kl_chain_report(&prod, &p).unwrap();
        assert_eq!((r.total, r.marginal, r.mutual), (0.0, 0.0, 0.0));
        assert_eq!(r.identity_exact, Some(true));

        let b = Alphabet::binary();
        let coupled = JointDistribution::exact(b.clone(), b, vec![ratio(1, 3), ratio(0, 1), ratio(1, 6), ratio(1, 2)]).unwrap();
        let r = kl_chain_report(&coupled, &p).unwrap();
        assert_eq!(r.marginal, 0.0);
        assert!((r.total - r.mutual).abs() < 1e-15);
        assert_eq!(r.identity_exact, Some(true));
    }

    #[test]
    fn kl_chain_random_rational_joints() {
        let mut rng = stream(5, &[]);
        let p = Distribution::rational(&[(1, 3), (2, 3)]).unwrap();
        for _ in 0..200 {
            let q = random_rational_joint(&mut rng, 2, 3, 12, 0.2);
            let r = kl_chain_report(&q, &p).unwrap();
            assert_eq!(r.identity_exact, Some(true));
        }
    }

    #[test]
    fn kl_chain_support_violation() {
        let p = Distribution::rational(&[(1, 1), (0, 1)]).unwrap();
        let b = Alphabet::binary();
        let q = JointDistribution::exact(b.clone(), b, vec![ratio(1, 4), ratio(1, 4), ratio(1, 4), ratio(1, 4)]).unwrap();
        let r = kl_chain_report(&q, &p).unwrap();
        assert_eq!(r.total, f64::INFINITY);
        assert_eq!(r.marginal, f64::INFINITY);
        assert_eq!(r.identity_exact, Some(true));
    }
}
