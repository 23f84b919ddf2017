//! Discrete measures acting by multiplication on `L^p(μ)`.
//!
//! For `k` atoms with weights `w_i`, `L^p(μ)` is `l^p(k)` after the diagonal
//! conjugation `D = diag(w_i^{1/p})`. Multiplication operators are diagonal, so
//! the conjugation leaves them unchanged; it is kept in [`MultRep`] for audit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::harness::check::Check;
use crate::linalg::{nullspace, Matrix, PExponent, Vector, ONE, ZERO};
use crate::postructure::{op_bounds, Effort, MatrixOverSpace, POStructure};
use crate::seeding::{derive, rng_for};
use crate::spaces::Space;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("measure needs at least one atom".into()));
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(DiscreteMeasure { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k])
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DiscreteMeasure = serde_json::from_str(s)?;
        Self::new(m.weights)
    }
}

/// `f -> M_f` from `l^inf(k)` into `B(L^p(μ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultRep {
    pub measure: DiscreteMeasure,
    pub p: PExponent,
    /// `w_i^{1/p}`, the conjugation taking `L^p(μ)` to unweighted `l^p(k)`.
    pub conjugation: Vec<f64>,
}

impl MultRep {
    pub fn new(measure: DiscreteMeasure, p: PExponent) -> Self {
        let conjugation = measure.weights.iter().map(|w| w.powf(1.0 / p.value())).collect();
        MultRep { measure, p, conjugation }
    }

    pub fn atoms(&self) -> usize {
        self.measure.atoms()
    }

    /// `diag(f)` on unweighted `l^p(k)`.
    pub fn embed(&self, f: &Vector) -> Result<Matrix> {
        if f.dim() != self.atoms() {
            return Err(Error::DimensionMismatch { expected: self.atoms(), got: f.dim() });
        }
        Ok(Matrix::diag(f))
    }

    /// Images of the point masses.
    pub fn maps(&self) -> Vec<Matrix> {
        let k = self.atoms();
        (0..k).map(|i| Matrix::unit(k, k, i, i)).collect()
    }

    /// `l^inf(k)` with the structure of its image.
    pub fn structure(&self) -> POStructure {
        POStructure::concrete(self.p, self.maps()).expect("matrix units are independent")
    }
}

/// `M^{(n)}(F)` on `l^p(n) ⊗ l^p(k)`, index `(i, a) -> i k + a`. A permutation
/// of `diag(F(1), .., F(k))` with `F(a) = [f_ij(a)]`.
pub fn mult_amplified(f: &MatrixOverSpace, rep: &MultRep) -> Result<Matrix> {
    if f.dim() != rep.atoms() {
        return Err(Error::DimensionMismatch { expected: rep.atoms(), got: f.dim() });
    }
    Ok(f.amplify(&rep.maps()))
}

/// Torus average `∫ (I ⊗ M_u) T (I ⊗ M_u*) du` in closed form: entries coupling
/// two different atoms average to zero, the rest are fixed.
pub fn expectation(t: &Matrix, rep: &MultRep, n: usize) -> Result<Matrix> {
    let k = rep.atoms();
    if !t.is_square() || t.rows() != n * k {
        return Err(Error::DimensionMismatch { expected: n * k, got: t.rows() });
    }
    let mut out = t.clone();
    for r in 0..n * k {
        for c in 0..n * k {
            if r % k != c % k {
                out[(r, c)] = ZERO;
            }
        }
    }
    Ok(out)
}

/// `J^{(n)}(f) = I_n ⊗ diag(f)`.
pub fn amplified_diag(f: &Vector, n: usize) -> Matrix {
    Matrix::identity(n).kron(&Matrix::diag(f))
}

/// Complete isometry of `min l^inf(k) -> B(L^p(μ))` on random `F`: min norm
/// against the operator norm of the amplified multiplication.
pub fn verify_linfty_isometry(n: usize, k: usize, p: PExponent, samples: usize, seed: u64) -> Result<Vec<Check>> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be >= 1".into()));
    }
    let rep = MultRep::new(DiscreteMeasure::uniform(k)?, p);
    let min = POStructure::min(Space::linf(k)?, p);
    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = rng_for(derive(seed, 0x11f), s as u64);
        let f = MatrixOverSpace::random(n, k, &mut rng);
        let lhs = min.norm_with(&f, Effort::Full);
        let big = mult_amplified(&f, &rep)?;
        let rhs = op_bounds(&big, p, Effort::Full, seed);
        out.push(Check::equal(format!("linfty/n{n}k{k}/{s:03}"), &lhs, &rhs, 1e-6));
    }
    Ok(out)
}

/// Linear system `T diag(e_i) = diag(e_i) T` for all `i`, unknowns `vec(T)`.
fn commutant_system(k: usize) -> Matrix {
    let mut m = Matrix::zeros(k * k * k, k * k);
    for i in 0..k {
        // (T E_ii - E_ii T)_{rc} = T_rc [c = i] - [r = i] T_rc
        for r in 0..k {
            for c in 0..k {
                let coef = (c == i) as i32 - (r == i) as i32;
                if coef != 0 {
                    m[(i * k * k + r * k + c, r * k + c)] = crate::linalg::c(coef as f64, 0.0);
                }
            }
        }
    }
    m
}

/// Solution space of the commutant system.
pub fn commutant_basis(k: usize) -> Vec<Vector> {
    nullspace(&commutant_system(k), 1e-12)
}

/// The commutant of the diagonal algebra is the diagonal algebra: exact
/// nullspace dimension and shape, plus random commuting/non-commuting probes.
pub fn commutant_check(k: usize, p: PExponent, trials: usize, seed: u64) -> Result<Vec<Check>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let basis = commutant_basis(k);
    let mut out = vec![Check::holds(format!("commutant/k{k}/dimension"), basis.len() == k, basis.len() as f64, k as f64, 0.0)];
    let offdiag = basis
        .iter()
        .flat_map(|v| (0..k * k).filter(|i| i / k != i % k).map(move |i| v[i].norm()))
        .fold(0.0, f64::max);
    out.push(Check::holds(format!("commutant/k{k}/diagonal"), offdiag <= 1e-12, offdiag, 0.0, 1e-12));
    let rep = MultRep::new(DiscreteMeasure::uniform(k)?, p);
    for t in 0..trials {
        let mut rng = rng_for(derive(seed, 0xc0), t as u64);
        let d = Matrix::diag(&Vector::random(k, &mut rng));
        let worst = (0..k)
            .map(|i| {
                let e = rep.embed(&Vector::basis(k, i)).expect("k atoms");
                d.matmul(&e).max_abs_diff(&e.matmul(&d))
            })
            .fold(0.0, f64::max);
        out.push(Check::holds(format!("commutant/k{k}/diag-commutes/{t:03}"), worst <= 1e-12, worst, 0.0, 1e-12));
        if k > 1 {
            let mut x = Matrix::random(k, k, &mut rng);
            let (r, c) = loop {
                let r = rng.gen_range(0..k);
                let c = rng.gen_range(0..k);
                if r != c {
                    break (r, c);
                }
            };
            x[(r, c)] += ONE;
            let best = (0..k)
                .map(|i| {
                    let e = rep.embed(&Vector::basis(k, i)).expect("k atoms");
                    x.matmul(&e).max_abs_diff(&e.matmul(&x))
                })
                .fold(0.0, f64::max);
            out.push(Check::holds(format!("commutant/k{k}/offdiag-fails/{t:03}"), best > 1e-9, best, 0.0, 1e-9));
        }
    }
    Ok(out)
}

/// Result of [`finite_embed`].
#[derive(Clone, Debug, Serialize)]
pub struct EmbedReport {
    /// Bracket of `||V||` from weighted `l^p(k)` to `l^p(m)`.
    pub contraction: Bounds,
    /// `1 - ||V f|| / ||f||` per input vector.
    pub distortions: Vec<f64>,
    pub worst: f64,
    /// Whether `worst <= eps`.
    pub within: bool,
}

/// `m` cells of consecutive atoms, sizes differing by at most one.
pub fn contiguous_partition(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for c in 0..m {
        let size = k / m + usize::from(c < k % m);
        out.push((start..start + size).collect());
        start += size;
    }
    out
}

/// Conditional expectation onto a partition of the atoms followed by the
/// isometry of the coarse `L^p` space onto `l^p(m)`:
/// `(V f)_C = W_C^{1/p - 1} sum_{i in C} w_i f_i` with `W_C = sum_{i in C} w_i`.
pub fn finite_embed(
    fs: &[Vector],
    measure: &DiscreteMeasure,
    partition: &[Vec<usize>],
    p: PExponent,
    eps: f64,
) -> Result<(Matrix, EmbedReport)> {
    let k = measure.atoms();
    let m = partition.len();
    if m == 0 || m > k {
        return Err(Error::InvalidParameter(format!("partition size {m} must be in 1..={k}")));
    }
    let mut seen = vec![false; k];
    for (ci, cell) in partition.iter().enumerate() {
        if cell.is_empty() {
            return Err(Error::EmptyCell(ci));
        }
        for &a in cell {
            if a >= k || seen[a] {
                return Err(Error::InvalidParameter(format!("atom {a} out of range or repeated")));
            }
            seen[a] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter("partition does not cover every atom".into()));
    }
    let pv = p.value();
    let w = &measure.weights;
    let mut v = Matrix::zeros(m, k);
    for (ci, cell) in partition.iter().enumerate() {
        let wc: f64 = cell.iter().map(|&a| w[a]).sum();
        for &a in cell {
            v[(ci, a)] = crate::linalg::c(wc.powf(1.0 / pv - 1.0) * w[a], 0.0);
        }
    }
    // ||V|| on L^p(μ) = ||V D^{-1/p}|| on l^p(k); square it up with zero rows
    let mut padded = Matrix::zeros(k, k);
    for r in 0..m {
        for a in 0..k {
            padded[(r, a)] = v[(r, a)] / w[a].powf(1.0 / pv);
        }
    }
    let contraction = op_bounds(&padded, p, Effort::Full, 0);
    let mut distortions = Vec::with_capacity(fs.len());
    for f in fs {
        if f.dim() != k {
            return Err(Error::DimensionMismatch { expected: k, got: f.dim() });
        }
        let nf = crate::linalg::lp_norm(f, pv, Some(w))?;
        let nv = v.matvec(f).norm_p(pv);
        distortions.push(if nf == 0.0 { 0.0 } else { (1.0 - nv / nf).max(0.0) });
    }
    let worst = distortions.iter().cloned().fold(0.0, f64::max);
    Ok((v, EmbedReport { contraction, distortions, worst, within: worst <= eps }))
}
