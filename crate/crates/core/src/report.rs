use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebra::Hermitian;

/// A measured quantity together with the largest value that counts as a pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub threshold: f64,
}

impl Residual {
    pub fn ok(&self) -> bool {
        self.value <= self.threshold
    }
}

/// Outcome of one check. `passed` is derived from the residuals and is
/// recomputed every time a residual is recorded.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub id: String,
    pub passed: bool,
    pub residuals: BTreeMap<String, Residual>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<String, Hermitian>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(id: impl Into<String>) -> Self {
        Report {
            id: id.into(),
            passed: true,
            residuals: BTreeMap::new(),
            values: BTreeMap::new(),
            witnesses: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records `value <= threshold`. A NaN value always fails.
    pub fn residual(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> &mut Self {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let name = name.into();
        match self.residuals.get_mut(&name) {
            Some(r) => {
                r.value = r.value.max(value);
                r.threshold = threshold;
            }
            None => {
                self.residuals.insert(name, Residual { value, threshold });
            }
        }
        self.passed = self.residuals.values().all(Residual::ok);
        self
    }

    /// A boolean expectation, stored as a residual of 0 (holds) or 1 (fails).
    pub fn expect(&mut self, name: impl Into<String>, holds: bool) -> &mut Self {
        self.residual(name, if holds { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) -> &mut Self {
        self.values.insert(name.into(), v);
        self
    }

    pub fn witness(&mut self, name: impl Into<String>, h: Hermitian) -> &mut Self {
        self.witnesses.insert(name.into(), h);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        let note = note.into();
        if !self.notes.contains(&note) {
            self.notes.push(note);
        }
        self
    }

    pub fn residual_value(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).map(|r| r.value)
    }

    /// Folds `other` into `self`, prefixing its entries with `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, r) in &other.residuals {
            self.residual(format!("{prefix}.{k}"), r.value, r.threshold);
        }
        for (k, v) in &other.values {
            self.values.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, w) in &other.witnesses {
            self.witnesses.insert(format!("{prefix}.{k}"), w.clone());
        }
        for n in &other.notes {
            self.note(n.clone());
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_residuals() {
        let mut r = Report::new("x");
        r.residual("a", 1e-12, 1e-9);
        assert!(r.passed);
        r.residual("b", 1.0, 0.5);
        assert!(!r.passed);
    }

    #[test]
    fn repeated_residual_keeps_the_maximum() {
        let mut r = Report::new("x");
        r.residual("a", 1e-3, 1e-2).residual("a", 1e-5, 1e-2);
        assert_eq!(r.residual_value("a"), Some(1e-3));
    }

    #[test]
    fn nan_fails() {
        let mut r = Report::new("x");
        r.residual("a", f64::NAN, 1.0);
        assert!(!r.passed);
    }
}
