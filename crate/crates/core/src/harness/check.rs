use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// One verified claim. `lhs` and `rhs` are brackets of the two sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub status: Status,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

/// Brackets wider than this (relative) cannot confirm an equality.
pub const CONFIRM_REL_WIDTH: f64 = 0.5;

fn pair(b: &Bounds) -> [f64; 2] {
    [b.lower, b.upper]
}

fn finite(b: &Bounds) -> bool {
    b.lower.is_finite() && b.upper.is_finite()
}

impl Check {
    pub fn new(id: impl Into<String>, status: Status, lhs: [f64; 2], rhs: [f64; 2], tol: f64) -> Check {
        Check { id: id.into(), status, lhs, rhs, tol, witness: None }
    }

    pub fn with_witness(mut self, w: serde_json::Value) -> Check {
        self.witness = Some(w);
        self
    }

    /// Claim `lhs <= rhs`. Fails only on a certified violation
    /// `lhs.lower > rhs.upper + tol`; inconclusive while `rhs` has no finite upper side.
    pub fn at_most(id: impl Into<String>, lhs: &Bounds, rhs: &Bounds, tol: f64) -> Check {
        let status = if lhs.lower > rhs.upper + tol {
            Status::Fail
        } else if !rhs.upper.is_finite() {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        Check::new(id, status, pair(lhs), pair(rhs), tol)
    }

    /// Claim `lhs = rhs`. Fails when the brackets are separated by more than
    /// `tol` (absolute) plus `tol` relative to the larger value; passes when they
    /// overlap and both are narrow enough to mean something.
    pub fn equal(id: impl Into<String>, lhs: &Bounds, rhs: &Bounds, tol: f64) -> Check {
        let slack = tol * (1.0 + lhs.upper.abs().min(rhs.upper.abs()).max(0.0));
        let slack = if slack.is_finite() { slack } else { tol };
        let status = if lhs.lower > rhs.upper + slack || rhs.lower > lhs.upper + slack {
            Status::Fail
        } else if !finite(lhs) || !finite(rhs) || lhs.rel_width() > CONFIRM_REL_WIDTH || rhs.rel_width() > CONFIRM_REL_WIDTH {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        Check::new(id, status, pair(lhs), pair(rhs), tol)
    }

    /// Exact boolean claim.
    pub fn holds(id: impl Into<String>, ok: bool, lhs: f64, rhs: f64, tol: f64) -> Check {
        let status = if ok { Status::Pass } else { Status::Fail };
        Check::new(id, status, [lhs, lhs], [rhs, rhs], tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certified_violation_fails() {
        let a = Bounds::new(2.0, 2.1, "x", "x");
        let b = Bounds::new(1.0, 1.5, "x", "x");
        assert_eq!(Check::at_most("v", &a, &b, 1e-6).status, Status::Fail);
        assert_eq!(Check::at_most("v", &b, &a, 1e-6).status, Status::Pass);
        assert_eq!(Check::equal("e", &a, &b, 1e-6).status, Status::Fail);
    }

    #[test]
    fn wide_overlap_is_inconclusive() {
        let a = Bounds::new(0.1, 10.0, "x", "x");
        let b = Bounds::new(1.0, 1.0, "x", "x");
        assert_eq!(Check::equal("e", &a, &b, 1e-6).status, Status::Inconclusive);
        let inf = Bounds::new(0.0, f64::INFINITY, "x", "x");
        assert_eq!(Check::at_most("v", &b, &inf, 1e-6).status, Status::Inconclusive);
    }
}
