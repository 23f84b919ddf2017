use serde::Serialize;

use crate::linalg::Vector;

/// Certified interval `[lower, upper]` around a quantity that is generally too
/// expensive to compute exactly, with optional witness for the lower side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vector>,
    pub lower_method: &'static str,
    pub upper_method: &'static str,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64, lower_method: &'static str, upper_method: &'static str) -> Self {
        let lower = lower.max(0.0);
        // rounding can push a tight upper side a hair under the lower side
        let upper = if upper < lower { lower } else { upper };
        Bounds { lower, upper, witness: None, lower_method, upper_method }
    }

    pub fn exact(value: f64, method: &'static str) -> Self {
        Bounds::new(value, value, method, method)
    }

    pub fn zero() -> Self {
        Bounds::exact(0.0, "zero")
    }

    pub fn with_witness(mut self, w: Vector) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Relative width, `(upper - lower) / max(upper, tiny)`.
    pub fn rel_width(&self) -> f64 {
        if self.upper <= 0.0 {
            0.0
        } else {
            self.width() / self.upper
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lower - tol <= x && x <= self.upper + tol
    }

    pub fn overlaps(&self, other: &Bounds, tol: f64) -> bool {
        self.lower <= other.upper + tol && other.lower <= self.upper + tol
    }

    pub fn scaled(&self, s: f64) -> Bounds {
        let s = s.abs();
        Bounds { lower: self.lower * s, upper: self.upper * s, ..self.clone() }
    }

    /// Bracket of `max(a, b)` from brackets of `a` and `b`.
    pub fn max_of(a: &Bounds, b: &Bounds) -> Bounds {
        let mut out = if a.lower >= b.lower { a.clone() } else { b.clone() };
        out.upper = a.upper.max(b.upper);
        if b.upper > a.upper {
            out.upper_method = b.upper_method;
        } else {
            out.upper_method = a.upper_method;
        }
        out
    }

    /// Keeps the better (larger) lower side and the better (smaller) upper side.
    pub fn intersect(&self, other: &Bounds) -> Bounds {
        let mut out = if other.lower > self.lower { other.clone() } else { self.clone() };
        if other.upper < self.upper {
            out.upper = other.upper;
            out.upper_method = other.upper_method;
        } else {
            out.upper = self.upper;
            out.upper_method = self.upper_method;
        }
        if out.upper < out.lower {
            out.upper = out.lower;
        }
        out
    }

    pub fn raise_lower(&mut self, value: f64, method: &'static str, witness: Option<Vector>) {
        if value > self.lower {
            self.lower = value;
            self.lower_method = method;
            self.witness = witness;
            if self.upper < value {
                self.upper = value;
            }
        }
    }

    pub fn lower_upper(&mut self, value: f64, method: &'static str) {
        if value < self.upper {
            self.upper = value.max(self.lower);
            self.upper_method = method;
        }
    }

    pub fn as_pair(&self) -> [f64; 2] {
        [self.lower, self.upper]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_and_max() {
        let a = Bounds::new(1.0, 2.0, "a", "a");
        let b = Bounds::new(1.5, 3.0, "b", "b");
        assert!(a.overlaps(&b, 0.0));
        assert!(!a.overlaps(&Bounds::new(2.1, 2.2, "c", "c"), 0.0));
        let m = Bounds::max_of(&a, &b);
        assert_eq!(m.as_pair(), [1.5, 3.0]);
        let i = a.intersect(&b);
        assert_eq!(i.as_pair(), [1.5, 2.0]);
    }

    #[test]
    fn rounding_never_inverts() {
        let b = Bounds::new(1.0, 1.0 - 1e-16, "x", "y");
        assert!(b.lower <= b.upper);
    }
}
