//! Exact symbolic values of the form `sum_i c_i * log2(r_i)` with rational `c_i`, `r_i`.
//!
//! Equality is decided exactly: every argument is factored over a coprime base built
//! by repeated gcd splitting, and logarithms of pairwise coprime integers greater than
//! one are linearly independent over the rationals. No floating point is involved.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigUint;
use num::integer::Integer;
use num::{One, Signed, Zero};

use super::rational::{log2_biguint, to_f64, Rational};

#[derive(Clone, Debug, Default)]
pub struct ExactBits {
    terms: Vec<(Rational, Rational)>,
    infinite: bool,
}

impl ExactBits {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn infinity() -> Self {
        ExactBits { terms: Vec::new(), infinite: true }
    }

    /// `coeff * log2(arg)`; `arg` must be positive.
    pub fn term(coeff: Rational, arg: Rational) -> Self {
        assert!(arg.is_positive(), "log of non-positive rational");
        let mut out = Self::zero();
        if !coeff.is_zero() && !arg.is_one() {
            out.terms.push((coeff, arg));
        }
        out
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    pub fn add(&mut self, other: &ExactBits) {
        self.infinite |= other.infinite;
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn to_f64(&self) -> f64 {
        if self.infinite {
            return f64::INFINITY;
        }
        self.terms
            .iter()
            .map(|(c, r)| to_f64(c) * (log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())))
            .sum()
    }

    /// Canonical coordinates over a coprime integer base: `base -> coefficient`.
    pub fn canonical(&self) -> BTreeMap<BigUint, Rational> {
        let mut ints: Vec<BigUint> = Vec::new();
        for (_, r) in &self.terms {
            ints.push(r.numer().magnitude().clone());
            ints.push(r.denom().magnitude().clone());
        }
        let base = coprime_base(ints);
        let mut coords: BTreeMap<BigUint, Rational> = BTreeMap::new();
        for (c, r) in &self.terms {
            for (b, e) in factor_over(r.numer().magnitude(), &base) {
                *coords.entry(b).or_insert_with(Rational::zero) += c * Rational::from_integer(e.into());
            }
            for (b, e) in factor_over(r.denom().magnitude(), &base) {
                *coords.entry(b).or_insert_with(Rational::zero) -= c * Rational::from_integer(e.into());
            }
        }
        coords.retain(|_, v| !v.is_zero());
        coords
    }

    /// Exact equality. Two infinite values compare equal; infinite never equals finite.
    pub fn exact_eq(&self, other: &ExactBits) -> bool {
        match (self.infinite, other.infinite) {
            (true, true) => true,
            (false, false) => {
                let mut diff = self.clone();
                diff.terms.extend(other.terms.iter().map(|(c, r)| (-c, r.clone())));
                diff.canonical().is_empty()
            }
            _ => false,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        !self.infinite && self.canonical().is_empty()
    }
}

impl fmt::Display for ExactBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.infinite {
            return write!(f, "inf");
        }
        let coords = self.canonical();
        if coords.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = coords.iter().map(|(b, c)| format!("{c}*log2({b})")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Refines a multiset of positive integers into a pairwise coprime set such that every
/// input is a product of powers of base elements.
fn coprime_base(inputs: Vec<BigUint>) -> Vec<BigUint> {
    let mut base: Vec<BigUint> = Vec::new();
    let mut pending: Vec<BigUint> = inputs.into_iter().filter(|v| !v.is_one() && !v.is_zero()).collect();
    while let Some(mut x) = pending.pop() {
        let mut i = 0;
        while i < base.len() && !x.is_one() {
            let g = x.gcd(&base[i]);
            if g.is_one() {
                i += 1;
                continue;
            }
            let b = base.swap_remove(i);
            if g == b && g == x {
                x = BigUint::one();
                base.push(b);
                break;
            }
            // Split into gcd and cofactors, re-queue everything.
            let bq = &b / &g;
            let xq = &x / &g;
            for v in [g, bq, xq] {
                if !v.is_one() {
                    pending.push(v);
                }
            }
            x = BigUint::one();
            i = 0;
        }
        if !x.is_one() {
            base.push(x);
        }
    }
    base.sort();
    base.dedup();
    base
}

fn factor_over(n: &BigUint, base: &[BigUint]) -> Vec<(BigUint, u64)> {
    let mut rest = n.clone();
    let mut out = Vec::new();
    for b in base {
        let mut e = 0u64;
        while !rest.is_one() && (&rest % b).is_zero() {
            rest /= b;
            e += 1;
        }
        if e > 0 {
            out.push((b.clone(), e));
        }
    }
    debug_assert!(rest.is_one(), "argument does not factor over the coprime base");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::rational::{int, ratio};

    #[test]
    fn log_identities_are_exact() {
        // log2(6) = log2(2) + log2(3)
        let mut lhs = ExactBits::term(int(1), int(6));
        let mut rhs = ExactBits::term(int(1), int(2));
        rhs.add(&ExactBits::term(int(1), int(3)));
        assert!(lhs.exact_eq(&rhs));
        // 2*log2(4/9) = 4 - 4*log2(3)
        lhs = ExactBits::term(int(2), ratio(4, 9));
        let mut r2 = ExactBits::term(int(4), int(2));
        r2.add(&ExactBits::term(int(-4), int(3)));
        assert!(lhs.exact_eq(&r2));
        assert!((lhs.to_f64() - 2.0 * (4.0f64 / 9.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn distinct_values_differ() {
        let a = ExactBits::term(int(1), int(6));
        let b = ExactBits::term(int(1), int(5));
        assert!(!a.exact_eq(&b));
        // log2(12) vs log2(18): shared factors but different
        assert!(!ExactBits::term(int(1), int(12)).exact_eq(&ExactBits::term(int(1), int(18))));
        assert!(ExactBits::infinity().exact_eq(&ExactBits::infinity()));
        assert!(!ExactBits::infinity().exact_eq(&ExactBits::zero()));
    }

    #[test]
    fn coprime_base_splits_shared_factors() {
        let base = coprime_base(vec![BigUint::from(12u32), BigUint::from(18u32), BigUint::from(35u32)]);
        for (i, a) in base.iter().enumerate() {
            for b in &base[i + 1..] {
                assert!(a.gcd(b).is_one());
            }
        }
        for v in [12u32, 18, 35] {
            let f = factor_over(&BigUint::from(v), &base);
            let prod = f.iter().fold(BigUint::one(), |acc, (b, e)| acc * num::pow(b.clone(), *e as usize));
            assert_eq!(prod, BigUint::from(v));
        }
    }
}
