use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::distribution::{Alphabet, Distribution, FLOAT_MASS_TOL};
use super::rational::{format_rational, parse_rational, ratio, to_f64, Rational};
use crate::error::{Error, Result};

/// A single-letter transition matrix `k(o|i)`: one row per input symbol, each row a pmf.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    inputs: usize,
    outputs: usize,
    exact: Option<Vec<Rational>>,
    float: Vec<f64>,
}

impl StochasticMatrix {
    pub fn from_rational_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let (inputs, outputs) = shape(&rows)?;
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidDistribution(format!("row {i} has a negative entry")));
            }
            let s: Rational = row.iter().sum();
            if !s.is_one() {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {}", format_rational(&s))));
            }
        }
        let exact: Vec<Rational> = rows.into_iter().flatten().collect();
        let float = exact.iter().map(to_f64).collect();
        Ok(StochasticMatrix { inputs, outputs, exact: Some(exact), float })
    }

    pub fn from_f64_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (inputs, outputs) = shape(&rows)?;
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidDistribution(format!("row {i} has a bad entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > FLOAT_MASS_TOL {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {s}")));
            }
        }
        Ok(StochasticMatrix { inputs, outputs, exact: None, float: rows.into_iter().flatten().collect() })
    }

    /// Binary symmetric channel with exact crossover probability.
    pub fn bsc(p: Rational) -> Result<Self> {
        if p.is_negative() || p > Rational::one() {
            return Err(Error::InvalidDistribution(format!("crossover {p} outside [0,1]")));
        }
        let q = Rational::one() - &p;
        Self::from_rational_rows(vec![vec![q.clone(), p.clone()], vec![p, q]])
    }

    /// `bsc(num/den)` shorthand.
    pub fn bsc_ratio(num: i64, den: i64) -> Self {
        Self::bsc(ratio(num, den)).expect("valid crossover")
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self::from_rational_rows(rows).expect("identity is stochastic")
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn p(&self, i: usize, o: usize) -> f64 {
        self.float[i * self.outputs + o]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.float[i * self.outputs..(i + 1) * self.outputs]
    }

    pub fn exact_p(&self, i: usize, o: usize) -> Option<&Rational> {
        self.exact.as_ref().map(|e| &e[i * self.outputs + o])
    }

    pub fn exact_row(&self, i: usize) -> Option<&[Rational]> {
        self.exact.as_ref().map(|e| &e[i * self.outputs..(i + 1) * self.outputs])
    }

    pub fn row_distribution(&self, i: usize) -> Distribution {
        match self.exact_row(i) {
            Some(r) => Distribution::exact(Alphabet::indexed(self.outputs), r.to_vec()).expect("validated row"),
            None => Distribution::from_f64(self.row(i)).expect("validated row"),
        }
    }

    /// Output marginal `sum_i Q(i) k(.|i)` in float arithmetic.
    pub fn output_marginal(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        for (i, &q) in input.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().enumerate() {
                *v += q * self.p(i, o);
            }
        }
        out
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|i| self.row(i).to_vec()).collect()
    }
}

fn shape<T>(rows: &[Vec<T>]) -> Result<(usize, usize)> {
    let inputs = rows.len();
    if inputs == 0 {
        return Err(Error::InvalidDistribution("kernel has no rows".into()));
    }
    let outputs = rows[0].len();
    if outputs == 0 {
        return Err(Error::InvalidDistribution("kernel has no columns".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != outputs) {
        return Err(Error::DimensionMismatch { expected: outputs, got: r.len() });
    }
    Ok((inputs, outputs))
}

/// JSON form: row-major nested arrays; strings are parsed as exact rationals.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Float(Vec<Vec<f64>>),
    Exact(Vec<Vec<String>>),
}

impl MatrixSpec {
    pub fn build(&self) -> Result<StochasticMatrix> {
        match self {
            MatrixSpec::Float(rows) => StochasticMatrix::from_f64_rows(rows.clone()),
            MatrixSpec::Exact(rows) => StochasticMatrix::from_rational_rows(
                rows.iter()
                    .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsc_rows() {
        let k = StochasticMatrix::bsc_ratio(1, 10);
        assert_eq!(k.exact_p(0, 1), Some(&ratio(1, 10)));
        assert!((k.p(1, 1) - 0.9).abs() < 1e-15);
        assert!(StochasticMatrix::bsc(ratio(3, 2)).is_err());
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(StochasticMatrix::from_f64_rows(vec![vec![0.5, 0.4]]).is_err());
        assert!(StochasticMatrix::from_f64_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        let spec: MatrixSpec = serde_json::from_str(r#"[["1/3","2/3"],["1","0"]]"#).unwrap();
        assert!(spec.build().unwrap().is_exact());
    }
}
