//! Entropy, divergence and mutual information in bits.
//!
//! Conventions: `0 log 0 = 0`, `0 log(0/q) = 0`, and `p log(p/0) = +inf` for `p > 0`.

use num::Zero;

use super::distribution::Distribution;
use super::exact_bits::ExactBits;
use super::joint::JointDistribution;
use super::kernel::StochasticMatrix;
use super::rational::Rational;
use crate::error::{Error, Result};

pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs())
}

/// Entropy of a raw mass vector (assumed to be a pmf).
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum::<f64>().max(0.0)
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.same_alphabet(q)?;
    Ok(kl_of(p.probs(), q.probs()))
}

pub fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        acc += a * (a / b).log2();
    }
    acc.max(0.0)
}

/// Exact symbolic KL divergence of two rational pmfs.
pub fn kl_divergence_exact(p: &Distribution, q: &Distribution) -> Result<ExactBits> {
    p.same_alphabet(q)?;
    Ok(kl_exact_of(p.require_exact()?, q.require_exact()?))
}

pub fn kl_exact_of(p: &[Rational], q: &[Rational]) -> ExactBits {
    let mut acc = ExactBits::zero();
    for (a, b) in p.iter().zip(q) {
        if a.is_zero() {
            continue;
        }
        if b.is_zero() {
            return ExactBits::infinity();
        }
        acc.add(&ExactBits::term(a.clone(), a / b));
    }
    acc
}

/// `I(Q, k) = H(Qk) - sum_i Q(i) H(k(.|i))`.
pub fn mutual_information(input: &Distribution, kernel: &StochasticMatrix) -> Result<f64> {
    if kernel.inputs() != input.len() {
        return Err(Error::DimensionMismatch { expected: input.len(), got: kernel.inputs() });
    }
    Ok(mutual_information_of(input.probs(), kernel))
}

pub fn mutual_information_of(input: &[f64], kernel: &StochasticMatrix) -> f64 {
    let out = kernel.output_marginal(input);
    let cond: f64 = input
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(i, &q)| q * entropy_of(kernel.row(i)))
        .sum();
    (entropy_of(&out) - cond).max(0.0)
}

/// `log2( P(b|a) / P(b) )` for the joint law induced by `input` and `kernel`.
pub fn information_density(a: usize, b: usize, input: &Distribution, kernel: &StochasticMatrix) -> Result<f64> {
    if kernel.inputs() != input.len() {
        return Err(Error::DimensionMismatch { expected: input.len(), got: kernel.inputs() });
    }
    if a >= kernel.inputs() {
        return Err(Error::SymbolOutOfRange { symbol: a, size: kernel.inputs() });
    }
    if b >= kernel.outputs() {
        return Err(Error::SymbolOutOfRange { symbol: b, size: kernel.outputs() });
    }
    let pb = kernel.output_marginal(input.probs())[b];
    if pb == 0.0 {
        return Err(Error::ZeroOutputProbability(b));
    }
    Ok((kernel.p(a, b) / pb).log2())
}

/// `I(X;Y) = D(P_XY || P_X x P_Y)` computed from a joint.
pub fn joint_mutual_information(joint: &JointDistribution) -> f64 {
    let prod = JointDistribution::product(&joint.row_marginal(), &joint.col_marginal());
    kl_of(joint.probs(), prod.probs())
}

pub fn joint_kl(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    p.same_shape(q)?;
    Ok(kl_of(p.probs(), q.probs()))
}

pub fn joint_kl_exact(p: &JointDistribution, q: &JointDistribution) -> Result<ExactBits> {
    p.same_shape(q)?;
    let a = p.exact_masses().ok_or(Error::RequiresExact)?;
    let b = q.exact_masses().ok_or(Error::RequiresExact)?;
    Ok(kl_exact_of(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Distribution::rational(&[(1, 2), (1, 2)]).unwrap()), 1.0);
        assert_eq!(entropy(&Distribution::rational(&[(1, 1), (0, 1)]).unwrap()), 0.0);
        // -(1/4)log2(1/4) - (3/4)log2(3/4) = 0.5 + 0.311278 = 0.811278
        let h = entropy(&Distribution::rational(&[(1, 4), (3, 4)]).unwrap());
        assert!(close(h, 0.811278, 1e-6), "{h}");
    }

    #[test]
    fn kl_examples() {
        let p = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let q = Distribution::rational(&[(1, 4), (3, 4)]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!(kl_divergence_exact(&p, &p).unwrap().is_exact_zero());
        // 0.5*log2(2) + 0.5*log2(2/3) = 0.5 - 0.292481 = 0.207519
        assert!(close(kl_divergence(&p, &q).unwrap(), 0.207519, 1e-6));
        assert!(close(kl_divergence_exact(&p, &q).unwrap().to_f64(), 0.207519, 1e-6));
        let a = Distribution::rational(&[(1, 1), (0, 1)]).unwrap();
        let b = Distribution::rational(&[(0, 1), (1, 1)]).unwrap();
        assert_eq!(kl_divergence(&a, &b).unwrap(), f64::INFINITY);
        assert!(kl_divergence_exact(&a, &b).unwrap().is_infinite());
        let c = Distribution::rational(&[(1, 3), (1, 3), (1, 3)]).unwrap();
        assert!(matches!(kl_divergence(&p, &c), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn mutual_information_examples() {
        let u = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        assert!(close(mutual_information(&u, &StochasticMatrix::bsc_ratio(0, 1)).unwrap(), 1.0, 1e-15));
        let skew = Distribution::rational(&[(1, 5), (4, 5)]).unwrap();
        assert!(close(mutual_information(&skew, &StochasticMatrix::bsc_ratio(1, 2)).unwrap(), 0.0, 1e-15));
        let oracle = 1.0 - binary_entropy(0.1);
        assert!(close(mutual_information(&u, &StochasticMatrix::bsc_ratio(1, 10)).unwrap(), oracle, 1e-12));
        assert!(close(oracle, 0.531004, 1e-6));
        let three = StochasticMatrix::identity(3);
        assert!(mutual_information(&u, &three).is_err());
    }

    #[test]
    fn information_density_examples() {
        let u = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let i = information_density(0, 0, &u, &StochasticMatrix::bsc_ratio(1, 10)).unwrap();
        assert!(close(i, (0.9f64 / 0.5).log2(), 1e-12));
        assert!(close(i, 0.847997, 1e-6));
        assert_eq!(information_density(1, 1, &u, &StochasticMatrix::identity(2)).unwrap(), 1.0);
        let indep = StochasticMatrix::from_f64_rows(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(close(information_density(0, 1, &u, &indep).unwrap(), 0.0, 1e-15));
        let point = Distribution::rational(&[(1, 1), (0, 1)]).unwrap();
        assert!(matches!(
            information_density(0, 1, &point, &StochasticMatrix::identity(2)),
            Err(Error::ZeroOutputProbability(1))
        ));
    }

    fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative(p in pmf(4), q in pmf(4)) {
            let p = Distribution::normalized(Distribution::from_f64(&[0.25;4]).unwrap().alphabet().clone(), p).unwrap();
            let q = Distribution::normalized(p.alphabet().clone(), q).unwrap();
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn mutual_information_matches_joint_form(input in pmf(3), r0 in pmf(2), r1 in pmf(2), r2 in pmf(2)) {
            let q = Distribution::from_f64(&input).unwrap();
            let k = StochasticMatrix::from_f64_rows(vec![r0, r1, r2]).unwrap();
            let direct = mutual_information(&q, &k).unwrap();
            let joint = JointDistribution::from_channel(&q, &k).unwrap();
            prop_assert!((direct - joint_mutual_information(&joint)).abs() < 1e-10);
            // E[information density] = I
            let mut expect = 0.0;
            for a in 0..3 {
                for b in 0..2 {
                    let m = joint.p(a, b);
                    if m > 0.0 {
                        expect += m * information_density(a, b, &q, &k).unwrap();
                    }
                }
            }
            prop_assert!((expect - direct).abs() < 1e-10);
        }
    }
}
