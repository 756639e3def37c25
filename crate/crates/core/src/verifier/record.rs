//! Experiment records: sampled series, fitted constants and verdicts.

use serde::{Deserialize, Serialize};

use crate::fit::LinearFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Dissipative,
    ContinuousDependence,
    H1ContinuousDependence,
    TimeRegularity,
    Smoothing,
    HigherRegularity,
    ChooseTau0,
    Pullback,
    Dimension,
    Holder,
    Potential,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Dissipative => "dissipative",
            Self::ContinuousDependence => "continuous-dependence",
            Self::H1ContinuousDependence => "h1-continuous-dependence",
            Self::TimeRegularity => "time-regularity",
            Self::Smoothing => "smoothing",
            Self::HigherRegularity => "higher-regularity",
            Self::ChooseTau0 => "choose-tau0",
            Self::Pullback => "pullback",
            Self::Dimension => "dimension",
            Self::Holder => "holder",
            Self::Potential => "potential",
        }
    }
}

/// A fitted or measured constant with its provenance in the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    /// Number of data points the value was computed from.
    pub samples: usize,
    /// Abscissa range of those points.
    pub window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl FittedConstant {
    /// A directly measured quantity (max, sup, ratio) over `samples` points.
    pub fn measured(name: &str, value: f64, samples: usize, window: (f64, f64)) -> Self {
        Self {
            name: name.to_string(),
            value,
            samples,
            window: [window.0, window.1],
            r_squared: None,
            residual: None,
        }
    }

    pub fn from_fit(name: &str, value: f64, fit: &LinearFit) -> Self {
        Self {
            name: name.to_string(),
            value,
            samples: fit.samples,
            window: [fit.window.0, fit.window.1],
            r_squared: Some(fit.r_squared),
            residual: Some(fit.residual),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `measured <= threshold`
    AtMost,
    /// `measured >= threshold`
    AtLeast,
    /// `measured` is finite (threshold unused)
    Finite,
    /// measured lies in `[threshold, upper]`
    Within,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Verdict {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self::make(name, measured, Comparison::AtMost, threshold, None, measured <= threshold)
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self::make(name, measured, Comparison::AtLeast, threshold, None, measured >= threshold)
    }

    pub fn finite(name: &str, measured: f64) -> Self {
        Self::make(name, measured, Comparison::Finite, 0.0, None, measured.is_finite())
    }

    pub fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self::make(
            name,
            measured,
            Comparison::Within,
            lo,
            Some(hi),
            measured >= lo && measured <= hi,
        )
    }

    /// A check that does not apply to this data; recorded as a pass.
    pub fn skipped(name: &str, reason: &str) -> Self {
        let mut v = Self::make(name, f64::NAN, Comparison::Finite, 0.0, None, true);
        v.note = format!("skipped: {reason}");
        v
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn make(name: &str, measured: f64, comparison: Comparison, threshold: f64, upper: Option<f64>, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            passed,
            measured,
            comparison,
            threshold,
            upper,
            note: String::new(),
        }
    }
}

/// A table of samples; every row has one value per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    /// Digest of the configuration that produced the record (set by callers).
    #[serde(default)]
    pub digest: String,
    pub constants: Vec<FittedConstant>,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
}

impl ExperimentRecord {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            digest: String::new(),
            constants: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn constant(&self, name: &str) -> Option<&FittedConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub(crate) fn push_constant(&mut self, c: FittedConstant) {
        self.constants.push(c);
    }

    pub(crate) fn push_verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}
