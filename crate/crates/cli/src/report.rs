//! Case results, the JSON and CSV report writers.

use serde::{Serialize, Serializer};

use leibniz_core::operators::Residual;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::registry::Expect;

pub const SCHEMA: u32 = 1;

/// Writes a float with 16 significant digits; non-finite values become `null`.
fn sci<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    match number(*v) {
        Some(n) => n.serialize(s),
        None => s.serialize_none(),
    }
}

fn sci_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => sci(v, s),
        None => s.serialize_none(),
    }
}

fn number(v: f64) -> Option<serde_json::Number> {
    if !v.is_finite() {
        return None;
    }
    serde_json::from_str(&format_float(v)).ok()
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.15e}")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub case: String,
    pub operator: String,
    pub functions: Vec<String>,
    pub samples: usize,
    /// Residual at the sample with the largest scaled residual.
    #[serde(serialize_with = "sci")]
    pub max_residual: f64,
    /// Effective scale `max(1, largest term)` of that sample.
    #[serde(serialize_with = "sci")]
    pub scale: f64,
    #[serde(serialize_with = "sci")]
    pub tolerance: f64,
    pub expect: Expect,
    pub pass: bool,
    #[serde(serialize_with = "sci_opt", skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Tracks the worst sample of a case, by scaled residual.
#[derive(Debug, Clone)]
pub struct Accumulator {
    worst: Option<Residual>,
    samples: usize,
    error: Option<String>,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator {
            worst: None,
            samples: 0,
            error: None,
        }
    }

    pub fn push(&mut self, r: Residual) {
        self.samples += 1;
        let worse = match &self.worst {
            None => true,
            Some(w) => r.scaled() > w.scaled() || r.scaled().is_nan(),
        };
        if worse {
            self.worst = Some(r);
        }
    }

    /// Records a raw value against a unit scale.
    pub fn push_abs(&mut self, v: f64) {
        self.push(Residual {
            value: v,
            scale: 1.0,
        });
    }

    /// Records the first failure; later samples of the case are skipped.
    pub fn fail(&mut self, e: impl std::fmt::Display) {
        if self.error.is_none() {
            self.error = Some(e.to_string());
        }
    }

    pub fn push_result(&mut self, r: leibniz_core::Result<Residual>) {
        match r {
            Ok(r) => self.push(r),
            Err(e) => self.fail(e),
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn finish(self, head: CaseHead, tolerance: f64) -> CaseResult {
        let (max_residual, scale) = match &self.worst {
            Some(w) => (w.value.abs(), w.scale.max(1.0)),
            None => (f64::NAN, 1.0),
        };
        let within = max_residual <= tolerance * scale;
        let exceeds = max_residual > tolerance * scale;
        let pass = self.error.is_none()
            && self.samples > 0
            && match head.expect {
                Expect::Hold => within,
                Expect::Violation => exceeds,
            };
        CaseResult {
            case: head.case,
            operator: head.operator,
            functions: head.functions,
            samples: self.samples,
            max_residual,
            scale,
            tolerance,
            expect: head.expect,
            pass,
            measured: None,
            note: self.error,
        }
    }
}

/// Identifying fields of a case.
#[derive(Debug, Clone)]
pub struct CaseHead {
    pub case: String,
    pub operator: String,
    pub functions: Vec<String>,
    pub expect: Expect,
}

impl CaseHead {
    pub fn new(case: impl Into<String>, operator: impl Into<String>) -> Self {
        CaseHead {
            case: case.into(),
            operator: operator.into(),
            functions: Vec::new(),
            expect: Expect::Hold,
        }
    }

    pub fn functions<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.functions = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn expect(mut self, e: Expect) -> Self {
        self.expect = e;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<CaseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub seed: u64,
    #[serde(serialize_with = "sci")]
    pub tolerance: f64,
    pub points_per_check: usize,
    pub pass: bool,
    /// Excluded from determinism comparisons.
    pub wall_time_ms: u64,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(cfg: &RunConfig, suites: Vec<SuiteReport>, wall_time_ms: u64) -> Self {
        Report {
            schema: SCHEMA,
            seed: cfg.seed,
            tolerance: cfg.tolerance,
            points_per_check: cfg.points_per_check,
            pass: suites.iter().all(|s| s.failed == 0),
            wall_time_ms,
            suites,
        }
    }

    pub fn cases(&self) -> impl Iterator<Item = (&str, &CaseResult)> {
        self.suites
            .iter()
            .flat_map(|s| s.cases.iter().map(move |c| (s.suite.as_str(), c)))
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Encode(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// One row per case. Timing is left out so equal runs give equal bytes.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| CliError::Encode(e.to_string());
        w.write_record([
            "schema",
            "seed",
            "suite",
            "case",
            "operator",
            "functions",
            "samples",
            "max_residual",
            "scale",
            "tolerance",
            "expect",
            "pass",
            "measured",
            "note",
        ])
        .map_err(enc)?;
        for (suite, c) in self.cases() {
            w.write_record([
                SCHEMA.to_string(),
                self.seed.to_string(),
                suite.to_string(),
                c.case.clone(),
                c.operator.clone(),
                c.functions.join(";"),
                c.samples.to_string(),
                format_float(c.max_residual),
                format_float(c.scale),
                format_float(c.tolerance),
                c.expect.as_str().to_string(),
                c.pass.to_string(),
                c.measured.map(format_float).unwrap_or_default(),
                c.note.clone().unwrap_or_default(),
            ])
            .map_err(enc)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_sixteen_digits() {
        assert_eq!(format_float(0.1), "1.000000000000000e-1");
        assert_eq!(format_float(-2.5e-12), "-2.500000000000000e-12");
        let n = number(std::f64::consts::PI).unwrap();
        assert_eq!(n.to_string(), "3.141592653589793e+0");
        assert!(number(f64::NAN).is_none());
    }

    #[test]
    fn pass_follows_scaled_tolerance() {
        let head = || CaseHead::new("c", "op");
        let mut acc = Accumulator::new();
        acc.push(Residual {
            value: 5e-9,
            scale: 10.0,
        });
        acc.push(Residual {
            value: 1e-10,
            scale: 1.0,
        });
        let r = acc.clone().finish(head(), 1e-9);
        assert!(r.pass);
        assert_eq!((r.max_residual, r.scale), (5e-9, 10.0));
        assert!(!acc.finish(head().expect(Expect::Violation), 1e-9).pass);
        let mut bad = Accumulator::new();
        bad.push_abs(0.0);
        bad.fail("boom");
        let r = bad.finish(head(), 1.0);
        assert!(!r.pass);
        assert_eq!(r.note.as_deref(), Some("boom"));
        assert!(!Accumulator::new().finish(head(), 1.0).pass);
    }
}
