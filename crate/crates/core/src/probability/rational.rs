//! Rational helpers shared by the exact-mode code paths.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back to a log-scale conversion for values whose parts overflow f64.
    let (n, d) = (r.numer(), r.denom());
    if n.is_zero() {
        return 0.0;
    }
    let sign = if n.is_negative() { -1.0 } else { 1.0 };
    let l = log2_biguint(n.magnitude()) - log2_biguint(d.magnitude());
    sign * l.exp2()
}

/// log2 of a positive big integer, accurate to f64 precision.
pub fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map(f64::log2).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    top.to_f64().unwrap().log2() + shift as f64
}

/// Parses `"num/den"`, an integer, or a plain decimal such as `"0.125"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Config("empty rational".into()));
    }
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| Error::Config(format!("bad rational '{s}'")))?;
        let d: BigInt = b.trim().parse().map_err(|_| Error::Config(format!("bad rational '{s}'")))?;
        if d.is_zero() {
            return Err(Error::Config(format!("zero denominator in '{s}'")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().map_err(|_| Error::Config(format!("bad decimal '{s}'")))?;
        let d = num::pow(BigInt::from(10u32), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = t.parse().map_err(|_| Error::Config(format!("bad rational '{s}'")))?;
    Ok(Rational::from_integer(n))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact conversion of a finite f64 to a rational (binary expansion).
pub fn from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// n! / prod(k_i!) for counts summing to n.
pub fn multinomial(counts: &[u64]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &c in counts {
        total += c;
        acc *= binomial(total, c);
    }
    acc
}

/// Natural log of the binomial coefficient, via lgamma-free summation of logs.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn ln_factorial(n: u64) -> f64 {
    thread_local! {
        static TABLE: std::cell::RefCell<Vec<f64>> = std::cell::RefCell::new(vec![0.0]);
    }
    TABLE.with(|t| {
        let mut t = t.borrow_mut();
        while (t.len() as u64) <= n {
            let k = t.len();
            let v = t[k - 1] + (k as f64).ln();
            t.push(v);
        }
        t[n as usize]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("2").unwrap(), int(2));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-0.5").unwrap(), ratio(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial(&[1, 1, 1]), BigUint::from(6u32));
        assert_eq!(factorial(5), BigUint::from(120u32));
        assert!((ln_binomial(10, 3) - (120f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn huge_to_f64() {
        let big = Rational::new(num::pow(BigInt::from(3), 900), num::pow(BigInt::from(3), 899));
        assert!((to_f64(&big) - 3.0).abs() < 1e-9);
        assert_eq!(format_rational(&ratio(6, 4)), "3/2");
    }
}
