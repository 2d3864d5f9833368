//! Report plumbing: Monte Carlo estimates, sorted-key JSON and CSV output.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// A Bernoulli frequency with its standard error. `radius` is three standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub estimate: f64,
    pub sigma: f64,
    pub radius: f64,
}

impl Estimate {
    pub fn new(count: u64, trials: u64) -> Self {
        let estimate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        let sigma = if trials == 0 { 0.0 } else { (estimate * (1.0 - estimate) / trials as f64).sqrt() };
        Estimate { count, trials, estimate, sigma, radius: 3.0 * sigma }
    }

    /// Standard error under a known success probability.
    pub fn sigma_at(p: f64, trials: u64) -> f64 {
        (p * (1.0 - p) / trials.max(1) as f64).sqrt()
    }

    /// `|estimate - p| <= k sigma(p)`, with a floor of one count when `sigma(p)` vanishes.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        let s = Self::sigma_at(p, self.trials);
        let floor = if s == 0.0 { 0.0 } else { 0.5 / self.trials.max(1) as f64 };
        (self.estimate - p).abs() <= k * s + floor
    }
}

/// Recursively sorts object keys so that output is independent of insertion order.
pub fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&sort_keys(v)).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_sorted_json(value)?)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form, for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_basics() {
        let e = Estimate::new(25, 100);
        assert_eq!(e.estimate, 0.25);
        assert!((e.sigma - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(e.agrees_with(0.25, 3.0));
        assert!(!e.agrees_with(0.9, 3.0));
        assert_eq!(Estimate::new(0, 0).estimate, 0.0);
    }

    #[test]
    fn keys_are_sorted() {
        let v = serde_json::json!({"b": 1, "a": {"d": 2, "c": [ {"z": 0, "y": 1} ]}});
        let s = serde_json::to_string(&sort_keys(v)).unwrap();
        assert_eq!(s, r#"{"a":{"c":[{"y":1,"z":0}],"d":2},"b":1}"#);
    }

    #[test]
    fn csv_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], &[vec!["1,5".into(), "x\"y".into()]]).unwrap();
        let s = std::fs::read_to_string(p).unwrap();
        assert_eq!(s, "a,b\n\"1,5\",\"x\"\"y\"\n");
    }
}
