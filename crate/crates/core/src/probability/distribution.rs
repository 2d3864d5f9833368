use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use super::rational::{format_rational, parse_rational, to_f64, Rational};
use crate::error::{Error, Result};

/// Tolerance on the total mass of a float-mode distribution.
pub const FLOAT_MASS_TOL: f64 = 1e-12;

/// An ordered list of symbol labels. Symbols are referred to by index everywhere else.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(Arc<[String]>);

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Alphabet(labels.into_iter().map(Into::into).collect::<Vec<_>>().into())
    }

    /// Labels `"0"`, `"1"`, ..., `"k-1"`.
    pub fn indexed(k: usize) -> Self {
        Self::new((0..k).map(|i| i.to_string()))
    }

    pub fn binary() -> Self {
        Self::indexed(2)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }
}

/// Numeric mode of a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

/// A probability mass function over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    alphabet: Alphabet,
    masses: Masses,
    float_view: Vec<f64>,
}

impl Distribution {
    pub fn exact(alphabet: Alphabet, masses: Vec<Rational>) -> Result<Self> {
        check_len(&alphabet, masses.len())?;
        if let Some(m) = masses.iter().find(|m| m.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative mass {m}")));
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {}",
                format_rational(&total)
            )));
        }
        let float_view = masses.iter().map(to_f64).collect();
        Ok(Distribution { alphabet, masses: Masses::Exact(masses), float_view })
    }

    pub fn float(alphabet: Alphabet, masses: Vec<f64>) -> Result<Self> {
        check_len(&alphabet, masses.len())?;
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("bad mass {m}")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > FLOAT_MASS_TOL {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(Distribution { alphabet, float_view: masses.clone(), masses: Masses::Float(masses) })
    }

    /// Exact distribution over an indexed alphabet from `(num, den)` pairs.
    pub fn rational(pairs: &[(i64, i64)]) -> Result<Self> {
        let masses = pairs.iter().map(|&(n, d)| super::rational::ratio(n, d)).collect();
        Self::exact(Alphabet::indexed(pairs.len()), masses)
    }

    /// Float distribution over an indexed alphabet.
    pub fn from_f64(masses: &[f64]) -> Result<Self> {
        Self::float(Alphabet::indexed(masses.len()), masses.to_vec())
    }

    /// Float distribution that renormalizes the input (used for optimizer iterates).
    pub fn normalized(alphabet: Alphabet, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution("cannot normalize".into()));
        }
        Self::float(alphabet, masses.into_iter().map(|m| m / total).collect())
    }

    pub fn uniform_exact(alphabet: Alphabet) -> Result<Self> {
        let k = alphabet.len() as i64;
        Self::exact(alphabet, vec![super::rational::ratio(1, k.max(1)); k as usize])
    }

    pub fn point_mass(alphabet: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= alphabet.len() {
            return Err(Error::SymbolOutOfRange { symbol, size: alphabet.len() });
        }
        let masses = (0..alphabet.len())
            .map(|i| if i == symbol { Rational::one() } else { Rational::zero() })
            .collect();
        Self::exact(alphabet, masses)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.float_view.len()
    }

    pub fn is_empty(&self) -> bool {
        self.float_view.is_empty()
    }

    pub fn mode(&self) -> Mode {
        match self.masses {
            Masses::Exact(_) => Mode::Rational,
            Masses::Float(_) => Mode::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode() == Mode::Rational
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    /// Masses as f64 regardless of mode.
    pub fn probs(&self) -> &[f64] {
        &self.float_view
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.float_view[i]
    }

    pub fn exact_masses(&self) -> Option<&[Rational]> {
        match &self.masses {
            Masses::Exact(m) => Some(m),
            Masses::Float(_) => None,
        }
    }

    pub fn require_exact(&self) -> Result<&[Rational]> {
        self.exact_masses().ok_or(Error::RequiresExact)
    }

    /// A float-mode copy.
    pub fn to_float(&self) -> Distribution {
        Distribution {
            alphabet: self.alphabet.clone(),
            masses: Masses::Float(self.float_view.clone()),
            float_view: self.float_view.clone(),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.float_view[i] > 0.0).collect()
    }

    pub fn same_alphabet(&self, other: &Distribution) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                self.alphabet.labels(),
                other.alphabet.labels()
            )));
        }
        Ok(())
    }

    /// Lexicographic comparison of masses (exact when both are exact).
    pub fn lex_cmp(&self, other: &Distribution) -> std::cmp::Ordering {
        match (self.exact_masses(), other.exact_masses()) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self
                .float_view
                .iter()
                .zip(&other.float_view)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal),
        }
    }

    /// Mass strings as used in the JSON schema.
    pub fn mass_strings(&self) -> Vec<String> {
        match &self.masses {
            Masses::Exact(m) => m.iter().map(format_rational).collect(),
            Masses::Float(m) => m.iter().map(|v| v.to_string()).collect(),
        }
    }
}

fn check_len(alphabet: &Alphabet, n: usize) -> Result<()> {
    if alphabet.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if alphabet.len() != n {
        return Err(Error::DimensionMismatch { expected: alphabet.len(), got: n });
    }
    Ok(())
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.mass_strings().join(","))
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Distribution", 3)?;
        s.serialize_field("alphabet", self.alphabet.labels())?;
        match &self.masses {
            Masses::Exact(m) => {
                let v: Vec<String> = m.iter().map(format_rational).collect();
                s.serialize_field("masses", &v)?;
                s.serialize_field("mode", &Mode::Rational)?;
            }
            Masses::Float(m) => {
                s.serialize_field("masses", m)?;
                s.serialize_field("mode", &Mode::Float)?;
            }
        }
        s.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawMass {
    Num(f64),
    Str(String),
}

#[derive(Deserialize)]
struct RawDistribution {
    alphabet: Option<Vec<String>>,
    masses: Vec<RawMass>,
    mode: Option<Mode>,
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDistribution::deserialize(deserializer)?;
        let alphabet = match raw.alphabet {
            Some(a) => Alphabet::new(a),
            None => Alphabet::indexed(raw.masses.len()),
        };
        let all_strings = raw.masses.iter().all(|m| matches!(m, RawMass::Str(_)));
        let mode = raw.mode.unwrap_or(if all_strings { Mode::Rational } else { Mode::Float });
        match mode {
            Mode::Rational => {
                let masses = raw
                    .masses
                    .iter()
                    .map(|m| match m {
                        RawMass::Str(s) => parse_rational(s),
                        RawMass::Num(v) => parse_rational(&v.to_string()),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(de::Error::custom)?;
                Distribution::exact(alphabet, masses).map_err(de::Error::custom)
            }
            Mode::Float => {
                let masses = raw
                    .masses
                    .iter()
                    .map(|m| match m {
                        RawMass::Num(v) => Ok(*v),
                        RawMass::Str(s) => parse_rational(s).map(|r| to_f64(&r)),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(de::Error::custom)?;
                Distribution::float(alphabet, masses).map_err(de::Error::custom)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::rational::ratio;

    #[test]
    fn validation() {
        assert!(Distribution::rational(&[(1, 2), (1, 3)]).is_err());
        assert!(Distribution::rational(&[(3, 2), (-1, 2)]).is_err());
        assert!(Distribution::from_f64(&[0.5, 0.5 + 1e-13]).is_ok());
        assert!(Distribution::from_f64(&[0.5, 0.5 + 1e-9]).is_err());
        assert!(Distribution::from_f64(&[]).is_err());
    }

    #[test]
    fn json_schema() {
        let p = Distribution::rational(&[(1, 3), (2, 3)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"alphabet":["0","1"],"masses":["1/3","2/3"],"mode":"rational"}"#);
        let back: Distribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);

        let f: Distribution =
            serde_json::from_str(r#"{"alphabet":["a","b"],"masses":[0.25,0.75],"mode":"float"}"#).unwrap();
        assert_eq!(f.mode(), Mode::Float);
        assert_eq!(f.alphabet().labels(), ["a", "b"]);

        let bad = serde_json::from_str::<Distribution>(r#"{"masses":["1/2","1/3"]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn lexicographic_order() {
        let a = Distribution::rational(&[(1, 4), (3, 4)]).unwrap();
        let b = Distribution::rational(&[(3, 4), (1, 4)]).unwrap();
        assert!(a.lex_cmp(&b).is_lt());
        assert_eq!(a.exact_masses().unwrap()[0], ratio(1, 4));
    }
}
