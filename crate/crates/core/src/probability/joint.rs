use num::{One, Signed, Zero};

use super::distribution::{Alphabet, Distribution, Masses, FLOAT_MASS_TOL};
use super::kernel::StochasticMatrix;
use super::rational::{to_f64, Rational};
use crate::error::{Error, Result};

/// A pmf over a product alphabet, stored row-major (`rows x cols`).
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    rows: Alphabet,
    cols: Alphabet,
    masses: Masses,
    float_view: Vec<f64>,
}

impl JointDistribution {
    pub fn exact(rows: Alphabet, cols: Alphabet, masses: Vec<Rational>) -> Result<Self> {
        check_dims(&rows, &cols, masses.len())?;
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidDistribution("negative joint mass".into()));
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("joint masses sum to {total}")));
        }
        let float_view = masses.iter().map(to_f64).collect();
        Ok(JointDistribution { rows, cols, masses: Masses::Exact(masses), float_view })
    }

    pub fn float(rows: Alphabet, cols: Alphabet, masses: Vec<f64>) -> Result<Self> {
        check_dims(&rows, &cols, masses.len())?;
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidDistribution("bad joint mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > FLOAT_MASS_TOL {
            return Err(Error::InvalidDistribution(format!("joint masses sum to {total}")));
        }
        Ok(JointDistribution { rows, cols, float_view: masses.clone(), masses: Masses::Float(masses) })
    }

    /// Product `p x q`; exact when both factors are exact.
    pub fn product(p: &Distribution, q: &Distribution) -> Self {
        match (p.exact_masses(), q.exact_masses()) {
            (Some(a), Some(b)) => {
                let m = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
                Self::exact(p.alphabet().clone(), q.alphabet().clone(), m).expect("product of pmfs")
            }
            _ => {
                let m = p.probs().iter().flat_map(|x| q.probs().iter().map(move |y| x * y)).collect();
                Self::float_unchecked(p.alphabet().clone(), q.alphabet().clone(), m)
            }
        }
    }

    /// Joint law of (input, output) for `input` sent through `kernel`.
    pub fn from_channel(input: &Distribution, kernel: &StochasticMatrix) -> Result<Self> {
        if kernel.inputs() != input.len() {
            return Err(Error::DimensionMismatch { expected: input.len(), got: kernel.inputs() });
        }
        let cols = Alphabet::indexed(kernel.outputs());
        match (input.exact_masses(), kernel.is_exact()) {
            (Some(p), true) => {
                let mut m = Vec::with_capacity(p.len() * kernel.outputs());
                for (i, pi) in p.iter().enumerate() {
                    for o in 0..kernel.outputs() {
                        m.push(pi * kernel.exact_p(i, o).unwrap());
                    }
                }
                Self::exact(input.alphabet().clone(), cols, m)
            }
            _ => {
                let mut m = Vec::with_capacity(input.len() * kernel.outputs());
                for (i, pi) in input.probs().iter().enumerate() {
                    for o in 0..kernel.outputs() {
                        m.push(pi * kernel.p(i, o));
                    }
                }
                Ok(Self::float_unchecked(input.alphabet().clone(), cols, m))
            }
        }
    }

    fn float_unchecked(rows: Alphabet, cols: Alphabet, masses: Vec<f64>) -> Self {
        JointDistribution { rows, cols, float_view: masses.clone(), masses: Masses::Float(masses) }
    }

    pub fn row_alphabet(&self) -> &Alphabet {
        &self.rows
    }

    pub fn col_alphabet(&self) -> &Alphabet {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.masses, Masses::Exact(_))
    }

    pub fn p(&self, r: usize, c: usize) -> f64 {
        self.float_view[r * self.cols.len() + c]
    }

    pub fn probs(&self) -> &[f64] {
        &self.float_view
    }

    pub fn exact_masses(&self) -> Option<&[Rational]> {
        match &self.masses {
            Masses::Exact(m) => Some(m),
            Masses::Float(_) => None,
        }
    }

    pub fn row_marginal(&self) -> Distribution {
        let nc = self.cols.len();
        match &self.masses {
            Masses::Exact(m) => {
                let v = m.chunks(nc).map(|row| row.iter().sum()).collect();
                Distribution::exact(self.rows.clone(), v).expect("marginal of a pmf")
            }
            Masses::Float(m) => {
                let v = m.chunks(nc).map(|row| row.iter().sum()).collect();
                Distribution::normalized(self.rows.clone(), v).expect("marginal of a pmf")
            }
        }
    }

    pub fn col_marginal(&self) -> Distribution {
        let nc = self.cols.len();
        match &self.masses {
            Masses::Exact(m) => {
                let mut v = vec![Rational::zero(); nc];
                for row in m.chunks(nc) {
                    for (acc, x) in v.iter_mut().zip(row) {
                        *acc += x;
                    }
                }
                Distribution::exact(self.cols.clone(), v).expect("marginal of a pmf")
            }
            Masses::Float(m) => {
                let mut v = vec![0.0; nc];
                for row in m.chunks(nc) {
                    for (acc, x) in v.iter_mut().zip(row) {
                        *acc += x;
                    }
                }
                Distribution::normalized(self.cols.clone(), v).expect("marginal of a pmf")
            }
        }
    }

    /// Flattened view as a Distribution over row-major cell indices.
    pub fn flatten(&self) -> Distribution {
        let a = Alphabet::indexed(self.float_view.len());
        match &self.masses {
            Masses::Exact(m) => Distribution::exact(a, m.clone()).expect("valid joint"),
            Masses::Float(m) => Distribution::normalized(a, m.clone()).expect("valid joint"),
        }
    }

    pub fn same_shape(&self, other: &JointDistribution) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::AlphabetMismatch("joint alphabets differ".into()));
        }
        Ok(())
    }
}

fn check_dims(rows: &Alphabet, cols: &Alphabet, n: usize) -> Result<()> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidDistribution("empty joint alphabet".into()));
    }
    if rows.len() * cols.len() != n {
        return Err(Error::DimensionMismatch { expected: rows.len() * cols.len(), got: n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_product() {
        let p = Distribution::rational(&[(1, 3), (2, 3)]).unwrap();
        let q = Distribution::rational(&[(1, 4), (1, 4), (1, 2)]).unwrap();
        let j = JointDistribution::product(&p, &q);
        assert!(j.is_exact());
        assert_eq!(j.row_marginal(), p);
        assert_eq!(j.col_marginal(), q);
    }

    #[test]
    fn channel_joint() {
        let p = Distribution::rational(&[(1, 2), (1, 2)]).unwrap();
        let k = StochasticMatrix::bsc_ratio(1, 10);
        let j = JointDistribution::from_channel(&p, &k).unwrap();
        assert!((j.p(0, 1) - 0.05).abs() < 1e-15);
        assert!(JointDistribution::from_channel(&Distribution::rational(&[(1, 1)]).unwrap(), &k).is_err());
    }
}
