//! Verification suites and JSON reports.
//!
//! A suite turns a [`SuiteSpec`] into a list of [`Check`]s. Every check
//! compares two certified brackets, so a suite can only fail on a certified
//! violation; wide brackets give `inconclusive` instead.

pub mod check;
mod suites;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::PExponent;
use crate::postructure::StructureSpec;

pub use check::{Check, Status};

/// Slack for checks whose both sides are closed-form or solver-certified.
pub const TOL_CLOSED: f64 = 1e-6;
/// Slack for checks with a search-based side.
pub const TOL_SEARCH: f64 = 3e-2;

pub const REPORT_VERSION: &str = concat!("opspace-report/1 (", env!("CARGO_PKG_VERSION"), ")");

pub const SUITES: &[&str] = &[
    "axioms",
    "linfty",
    "expectation",
    "commutant",
    "dual-min-max",
    "bidual",
    "inj-min",
    "l1-max",
    "l1-quotient",
    "l1-tensor",
    "cross-norm",
];

fn d_n() -> usize {
    2
}
fn d_k() -> usize {
    2
}
fn d_p() -> f64 {
    3.0
}
fn d_samples() -> usize {
    10
}
fn d_levels() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub suite: String,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_k")]
    pub k: usize,
    /// Second factor size for `l1-tensor`; defaults to `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<usize>,
    #[serde(default = "d_p")]
    pub p: f64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the per-suite default slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    /// Amplification levels for cb checks.
    #[serde(default = "d_levels")]
    pub levels: usize,
    /// Structure for `axioms` and `cross-norm`; min `l^inf(k)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureSpec>,
}

impl SuiteSpec {
    pub fn new(suite: &str) -> Self {
        SuiteSpec {
            suite: suite.to_string(),
            n: d_n(),
            k: d_k(),
            k2: None,
            p: d_p(),
            samples: d_samples(),
            seed: 0,
            tol: None,
            cap_m: None,
            starts: None,
            levels: d_levels(),
            structure: None,
        }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
    pub fn k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
    pub fn k2(mut self, k2: usize) -> Self {
        self.k2 = Some(k2);
        self
    }
    pub fn p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
    pub fn samples(mut self, s: usize) -> Self {
        self.samples = s;
        self
    }
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }
    pub fn levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }
    pub fn structure(mut self, s: StructureSpec) -> Self {
        self.structure = Some(s);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn validate(&self) -> Result<PExponent> {
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(Error::UnknownSuite(self.suite.clone()));
        }
        if self.n == 0 || self.k == 0 || self.k2 == Some(0) || self.levels == 0 {
            return Err(Error::InvalidParameter("n, k, k2 and levels must be >= 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("tolerance {t}")));
            }
        }
        PExponent::new(self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub seed: u64,
    pub version: String,
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Meta,
    /// Sorted by id.
    pub checks: Vec<Check>,
    /// Wall-clock seconds per suite; not part of the digest.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Hashed<'a> {
    meta: &'a Meta,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Emitted<'a> {
    meta: &'a Meta,
    checks: &'a [Check],
    digest: String,
    timings: &'a BTreeMap<String, f64>,
}

impl Report {
    pub fn empty(spec: &SuiteSpec) -> Self {
        Report {
            meta: Meta {
                seed: spec.seed,
                version: REPORT_VERSION.to_string(),
                params: serde_json::to_value(spec).expect("spec serializes"),
            },
            checks: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Canonical bytes of the deterministic part.
    pub fn hashed_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&Hashed { meta: &self.meta, checks: &self.checks }).expect("report serializes")
    }

    /// SHA-256 of [`Report::hashed_bytes`], lowercase hex.
    pub fn digest(&self) -> String {
        Sha256::digest(self.hashed_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn has_failures(&self) -> bool {
        self.count(Status::Fail) > 0
    }

    /// 0 when nothing failed; 1 on a failure, or on an inconclusive check
    /// when `strict`.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let bad = self.has_failures() || (strict && self.count(Status::Inconclusive) > 0);
        i32::from(bad)
    }

    /// Merge several reports under one metadata block.
    pub fn merge(meta: Meta, parts: Vec<Report>) -> Report {
        let mut checks = Vec::new();
        let mut timings = BTreeMap::new();
        for r in parts {
            checks.extend(r.checks);
            timings.extend(r.timings);
        }
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        Report { meta, checks, timings }
    }

    pub fn to_json(&self) -> String {
        let e = Emitted { meta: &self.meta, checks: &self.checks, digest: self.digest(), timings: &self.timings };
        serde_json::to_string_pretty(&e).expect("report serializes")
    }
}

/// Run one suite.
pub fn run_suite(spec: &SuiteSpec) -> Result<Report> {
    let p = spec.validate()?;
    let start = Instant::now();
    let mut checks = suites::dispatch(spec, p)?;
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let mut report = Report::empty(spec);
    report.checks = checks;
    report.timings.insert(spec.suite.clone(), start.elapsed().as_secs_f64());
    Ok(report)
}

/// Write the report as pretty JSON.
pub fn emit_report(report: &Report, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json() + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(run_suite(&SuiteSpec::new("nope")), Err(Error::UnknownSuite(_))));
        assert!(run_suite(&SuiteSpec::new("linfty").p(0.5)).is_err());
        assert!(run_suite(&SuiteSpec::new("linfty").n(0)).is_err());
    }

    #[test]
    fn empty_report_shape() {
        let spec = SuiteSpec::new("linfty").samples(0);
        let r = run_suite(&spec).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"], serde_json::json!([]));
        assert_eq!(v["meta"]["seed"], 0);
        assert_eq!(r.exit_code(false), 0);
    }

    #[test]
    fn failing_check_sets_exit_code() {
        let mut r = Report::empty(&SuiteSpec::new("axioms"));
        r.checks.push(Check::holds("x", false, 1.0, 0.0, 0.0));
        assert_eq!(r.exit_code(false), 1);
        r.checks[0] = Check::new("x", Status::Inconclusive, [0.0, 1.0], [0.0, 1.0], 0.0);
        assert_eq!(r.exit_code(false), 0);
        assert_eq!(r.exit_code(true), 1);
    }

    #[test]
    fn spec_json_defaults() {
        let s = SuiteSpec::from_json(r#"{"suite":"commutant","k":3}"#).unwrap();
        assert_eq!(s, SuiteSpec::new("commutant").k(3));
        assert!(SuiteSpec::from_json(r#"{"suite":"commutant","bogus":1}"#).is_err());
    }
}
