//! Injective and projective tensor norms on `X ⊗ Y`, the nuclear space
//! `l^{p'}(m) ⊗_γ l^p(m)`, and the p-projective norm through a level cap.
//!
//! An element `t = sum_ij c_ij e_i ⊗ e_j` is stored by its coefficient matrix.
//! Bilinear forms act through `<t, M> = sum_ij c_ij M_ij`, and `M` has norm
//! `||M||_{X* ⊗_λ Y*}` as a map `X -> Y*`.

use rand::Rng;

use crate::bounds::Bounds;
use crate::cbmaps::LinearMap;
use crate::error::{Error, Result};
use crate::linalg::{phase, svd, Matrix, PExponent, Vector, C64, ZERO};
use crate::opnorm::{opnorm_bounds, OpnormConfig};
use crate::optim::{nelder_mead, pack, unpack};
use crate::postructure::{Effort, POStructure};
use crate::seeding::{derive, rng_for};
use crate::spaces::{FiniteNormedSpace, Space};

#[derive(Clone, Debug)]
pub struct TensorElem {
    pub x: Space,
    pub y: Space,
    /// `dim X x dim Y`.
    pub coeffs: Matrix,
}

impl TensorElem {
    pub fn new(x: Space, y: Space, coeffs: Matrix) -> Result<TensorElem> {
        if coeffs.rows() != x.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: coeffs.rows() });
        }
        if coeffs.cols() != y.dim() {
            return Err(Error::DimensionMismatch { expected: y.dim(), got: coeffs.cols() });
        }
        Ok(TensorElem { x, y, coeffs })
    }

    pub fn rank_one(x: Space, y: Space, u: &Vector, v: &Vector) -> Result<TensorElem> {
        TensorElem::new(x, y, outer(u, v))
    }

    /// `<t, M>` for `M` of the same shape.
    pub fn pair(&self, m: &Matrix) -> C64 {
        self.coeffs.data().iter().zip(m.data()).map(|(a, b)| a * b).sum()
    }
}

/// `u v^T`.
pub fn outer(u: &[C64], v: &[C64]) -> Matrix {
    let mut m = Matrix::zeros(u.len(), v.len());
    for i in 0..u.len() {
        for j in 0..v.len() {
            m[(i, j)] = u[i] * v[j];
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorConfig {
    /// Restarts of the decomposition descent.
    pub starts: usize,
    pub evals: usize,
    pub seed: u64,
}

impl Default for TensorConfig {
    fn default() -> Self {
        TensorConfig { starts: 64, evals: 1500, seed: 0 }
    }
}

impl TensorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn quick(seed: u64) -> Self {
        TensorConfig { starts: 8, evals: 600, seed }
    }
}

fn is_unweighted_lp(s: &Space) -> Option<f64> {
    match s {
        Space::WeightedLp { p, weights } if weights.iter().all(|&w| w == 1.0) => Some(*p),
        _ => None,
    }
}

/// Injective norm bracket.
pub fn inj_norm(t: &TensorElem) -> Bounds {
    inj_norm_with(t, false)
}

pub(crate) fn inj_norm_with(t: &TensorElem, fast: bool) -> Bounds {
    let c = &t.coeffs;
    if c.is_zero() {
        return Bounds::zero();
    }
    let mut best: Option<Bounds> = None;
    let mut merge = |b: Bounds| {
        best = Some(match best.take() {
            None => b,
            Some(prev) => prev.intersect(&b),
        })
    };
    // sup over ω of ||C^T ω||_Y when X has a finite norming set
    if let Some(omega) = t.x.norming_set_of() {
        let ct = c.transpose();
        let b = omega
            .iter()
            .map(|w| t.y.norm_b(&ct.matvec(w)))
            .reduce(|a, b| Bounds::max_of(&a, &b))
            .expect("nonempty norming set");
        merge(b);
    }
    if let Some(psi) = t.y.norming_set_of() {
        let b = psi
            .iter()
            .map(|w| t.x.norm_b(&c.matvec(w)))
            .reduce(|a, b| Bounds::max_of(&a, &b))
            .expect("nonempty norming set");
        merge(b);
    }
    if let (Some(q), Some(p)) = (is_unweighted_lp(&t.x), is_unweighted_lp(&t.y)) {
        // X* = l^p, so the norm is ||C^T||_{B(l^p)}
        if p > 1.0 && (q - p / (p - 1.0)).abs() < 1e-12 {
            let pe = PExponent::new(p).expect("1 < p < inf");
            let cfg = if fast { OpnormConfig::fast(0) } else { OpnormConfig::default() };
            merge(opnorm_bounds(&c.transpose(), pe, &cfg).expect("valid matrix"));
        }
    }
    if let Some(b) = &best {
        if b.width() == 0.0 || fast {
            return b.clone();
        }
    }
    // generic: alternating norming functionals below, triangle bounds above
    let mut b = Bounds::new(0.0, triangle_upper(t), "none", "triangle");
    let starts = t.x.dual_ball_sample(t.x.dim() + 2, 0x1a);
    let ct = c.transpose();
    for phi0 in starts {
        let mut phi = phi0;
        for _ in 0..(if fast { 4 } else { 15 }) {
            let psi = t.y.norming_functional(&ct.matvec(&phi));
            let v = c.matvec(&psi);
            let val = phi.pair(&v).norm();
            if val > b.lower {
                b.raise_lower(val, "alternating", None);
            }
            let next = t.x.norming_functional(&v);
            let val2 = next.pair(&v).norm();
            if val2 > b.lower {
                b.raise_lower(val2, "alternating", None);
            }
            phi = next;
        }
    }
    match best {
        Some(prev) => prev.intersect(&b),
        None => b,
    }
}

/// `min` over the row and column expansions of `sum ||x_i|| ||y_i||`; valid for
/// any cross norm dominated by the projective norm.
fn triangle_upper(t: &TensorElem) -> f64 {
    residual_cost(&t.x, &t.y, &t.coeffs, &basis_norms(&t.x), &basis_norms(&t.y))
}

fn basis_norms(s: &Space) -> Vec<f64> {
    (0..s.dim()).map(|i| s.norm_upper(&Vector::basis(s.dim(), i))).collect()
}

/// Upper bound of the projective norm of `r` from the elementwise, row and
/// column decompositions.
fn residual_cost(x: &Space, y: &Space, r: &Matrix, ex: &[f64], ey: &[f64]) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let mut elem = 0.0;
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            elem += r[(i, j)].norm() * ex[i] * ey[j];
        }
    }
    let rows: f64 = (0..r.rows())
        .map(|i| {
            let row = Vector(r.row(i).to_vec());
            if row.is_zero() {
                0.0
            } else {
                ex[i] * y.norm_upper(&row)
            }
        })
        .sum();
    let cols: f64 = (0..r.cols())
        .map(|j| {
            let col = r.column(j);
            if col.is_zero() {
                0.0
            } else {
                ey[j] * x.norm_upper(&col)
            }
        })
        .sum();
    elem.min(rows).min(cols)
}

/// Projective norm bracket. The witness is a bilinear form `M` (row-major)
/// of certified norm at most one with `|<t, M>| = lower`.
pub fn proj_norm(t: &TensorElem, cfg: &TensorConfig) -> Bounds {
    let c = &t.coeffs;
    if c.is_zero() {
        return Bounds::zero();
    }
    let (lower, m) = proj_lower(t, cfg);
    let upper = proj_upper(t, cfg);
    Bounds::new(lower, upper, "bilinear-form", "decomposition").with_witness(Vector(m.data().to_vec()))
}

fn proj_upper(t: &TensorElem, cfg: &TensorConfig) -> f64 {
    let (x, y, c) = (&t.x, &t.y, &t.coeffs);
    let (dx, dy) = (x.dim(), y.dim());
    let ex = basis_norms(x);
    let ey = basis_norms(y);
    let mut best = residual_cost(x, y, c, &ex, &ey);

    let sv = svd(c);
    // c = sum s_k u_k conj(w_k)^T
    let svd_terms: Vec<(Vector, Vector)> = sv
        .iter()
        .map(|(s, u, w)| (u.scale_real(*s), Vector(w.iter().map(|z| z.conj()).collect())))
        .collect();
    let cost_terms = |terms: &[(Vector, Vector)]| -> f64 {
        let mut r = c.clone();
        let mut total = 0.0;
        for (u, v) in terms {
            r.add_scaled(&outer(u, v), -crate::linalg::ONE);
            total += x.norm_upper(u) * y.norm_upper(v);
        }
        total + residual_cost(x, y, &r, &ex, &ey)
    };
    best = best.min(cost_terms(&svd_terms));

    // descent over a few free rank-one terms; the residual is priced by the
    // elementwise/row/column expansions so every point is a valid decomposition
    let f = sv.len().max(1);
    let unit = 2 * (dx + dy);
    let encode = |terms: &[(Vector, Vector)]| -> Vec<f64> {
        let mut out = Vec::with_capacity(f * unit);
        for (u, v) in terms {
            out.extend(pack(u));
            out.extend(pack(v));
        }
        out
    };
    let decode = |z: &[f64]| -> Vec<(Vector, Vector)> {
        z.chunks(unit)
            .map(|ch| (unpack(&ch[..2 * dx]), unpack(&ch[2 * dx..])))
            .collect()
    };
    let obj = |z: &[f64]| cost_terms(&decode(z));
    let mut x0s = vec![encode(&svd_terms)];
    for s in 0..cfg.starts.saturating_sub(1) {
        let mut rng = rng_for(derive(cfg.seed, 0x9a), s as u64);
        let base = &x0s[0];
        let scale = c.max_abs();
        let jitter: Vec<f64> = base.iter().map(|v| v + 0.3 * scale * (rng.gen::<f64>() - 0.5)).collect();
        x0s.push(jitter);
    }
    for z0 in x0s {
        let (z, v) = nelder_mead(obj, &z0, 0.2, cfg.evals, 1e-13);
        // polish from the best point
        let (_, v2) = nelder_mead(obj, &z, 0.02, cfg.evals / 2, 1e-14);
        best = best.min(v).min(v2);
    }
    best
}

/// Norm of the bilinear form `m` as a map `X -> Y*` (upper side).
fn form_norm_upper(x: &Space, y: &Space, m: &Matrix) -> f64 {
    let dual = TensorElem { x: x.dual_simplified(), y: y.dual_simplified(), coeffs: m.clone() };
    inj_norm_with(&dual, false).upper
}

fn proj_lower(t: &TensorElem, cfg: &TensorConfig) -> (f64, Matrix) {
    let (x, y, c) = (&t.x, &t.y, &t.coeffs);
    let (dx, dy) = (x.dim(), y.dim());
    let mut cands: Vec<Matrix> = Vec::new();
    // entrywise phases
    let mut ph = Matrix::zeros(dx, dy);
    for i in 0..dx {
        for j in 0..dy {
            ph[(i, j)] = if c[(i, j)] == ZERO { ZERO } else { phase(c[(i, j)]).conj() };
        }
    }
    cands.push(ph);
    let sv = svd(c);
    // sum conj(u_k) w_k^T pairs to the trace norm
    let mut polar = Matrix::zeros(dx, dy);
    for (_, u, w) in &sv {
        let uc: Vec<C64> = u.iter().map(|z| z.conj()).collect();
        polar.add_scaled(&outer(&uc, w), crate::linalg::ONE);
    }
    cands.push(polar);
    if let Some((_, u, w)) = sv.first() {
        let phi = x.norming_functional(u);
        let wc = Vector(w.iter().map(|z| z.conj()).collect());
        let psi = y.norming_functional(&wc);
        cands.push(outer(&phi, &psi));
    }
    // search on the cheap lower estimate of ||M||; certified afterwards
    let ratio = |m: &Matrix| -> f64 {
        let dual = TensorElem { x: x.dual_simplified(), y: y.dual_simplified(), coeffs: m.clone() };
        let n = inj_norm_with(&dual, true).lower;
        if n > 0.0 && n.is_finite() {
            t.pair(m).norm() / n
        } else {
            0.0
        }
    };
    let mut scored: Vec<(f64, Matrix)> = cands.into_iter().map(|m| (ratio(&m), m)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut pool: Vec<Matrix> = scored.iter().map(|s| s.1.clone()).collect();
    let (_, top) = scored[0].clone();
    let (z, _) = nelder_mead(
        |z| -ratio(&Matrix::from_vec(dx, dy, unpack(z).0).expect("shape")),
        &pack(top.data()),
        0.2,
        cfg.evals,
        1e-13,
    );
    pool.push(Matrix::from_vec(dx, dy, unpack(&z).0).expect("shape"));
    // certify with the full bracket
    let mut best = (0.0, Matrix::zeros(dx, dy));
    for m in pool {
        let n = form_norm_upper(x, y, &m);
        if n > 0.0 && n.is_finite() {
            let v = t.pair(&m).norm() / n;
            if v > best.0 {
                best = (v, m.scale_real(1.0 / n));
            }
        }
    }
    best
}

/// p-projective norm bracket of `t` in `V ⊗ W` for structures on `t.x`, `t.y`.
///
/// The upper side is the projective upper bound. The lower side pairs `t` with
/// the projective dual certificate `M`, read as a map `V -> W*`, divided by the
/// largest certified upper bound of its amplifications at levels `1..=levels`.
/// This is a certified lower bound only for the level-capped norm; the method
/// tag says so.
pub fn pproj_norm_level1(
    t: &TensorElem,
    v: &POStructure,
    w: &POStructure,
    levels: usize,
    cfg: &TensorConfig,
) -> Result<Bounds> {
    if v.dim() != t.x.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: t.x.dim() });
    }
    if w.dim() != t.y.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: t.y.dim() });
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("level cap must be >= 1".into()));
    }
    if t.coeffs.is_zero() {
        return Ok(Bounds::zero());
    }
    let proj = proj_norm(t, cfg);
    let m = Matrix::from_vec(t.x.dim(), t.y.dim(), proj.witness.clone().unwrap_or_default().0)?;
    let map = LinearMap::new(v.clone(), POStructure::dual(w.clone()), m.transpose())?;
    let cap = (1..=levels)
        .map(|n| map.level_norm_with(n, Effort::Full).upper)
        .fold(0.0, f64::max);
    let lower = if cap > 0.0 && cap.is_finite() { t.pair(&m).norm() / cap } else { 0.0 };
    Ok(Bounds::new(lower, proj.upper, "cb-form-through-level-cap", "decomposition"))
}

/// Nuclear norm of `a` in `l^{p'}(m) ⊗_γ l^p(m)`. The witness is an operator
/// `M` (row-major) with `||M||_{B(l^p)} <= 1` and `|sum a_ij M_ij| = lower`.
pub fn nuclear_bounds(a: &Matrix, p: PExponent, seed: u64) -> Bounds {
    nuclear_bounds_cfg(a, p, &TensorConfig { seed, ..TensorConfig::quick(seed) })
}

pub fn nuclear_bounds_cfg(a: &Matrix, p: PExponent, cfg: &TensorConfig) -> Bounds {
    let t = TensorElem {
        x: FiniteNormedSpace::lp(p.conjugate(), a.rows()).expect("p' > 1"),
        y: FiniteNormedSpace::lp(p.value(), a.cols()).expect("p > 1"),
        coeffs: a.clone(),
    };
    proj_norm(&t, cfg)
}

/// `nuclear_norm(m, p, t)` for `t` in `l^{p'}(m) ⊗ l^p(m)`.
pub fn nuclear_norm(m: usize, p: PExponent, t: &Matrix) -> Result<Bounds> {
    if t.rows() != m || t.cols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: t.rows() });
    }
    Ok(nuclear_bounds_cfg(t, p, &TensorConfig::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c as cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inj_linf_is_max_entry() {
        let x = Space::linf(2).unwrap();
        let id = TensorElem::new(x.clone(), x.clone(), Matrix::identity(2)).unwrap();
        assert_eq!(inj_norm(&id).as_pair(), [1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Matrix::random(2, 2, &mut rng);
        let t = TensorElem::new(x.clone(), x, m.clone()).unwrap();
        let b = inj_norm(&t);
        assert!((b.lower - m.max_abs()).abs() < 1e-12 && b.width() == 0.0);
    }

    #[test]
    fn zero_tensor() {
        let x = Space::l1(2).unwrap();
        let t = TensorElem::new(x.clone(), x, Matrix::zeros(2, 2)).unwrap();
        assert_eq!(proj_norm(&t, &TensorConfig::quick(0)).as_pair(), [0.0, 0.0]);
        assert_eq!(inj_norm(&t).as_pair(), [0.0, 0.0]);
    }

    #[test]
    fn l1_projective_is_entry_sum() {
        let x = Space::l1(2).unwrap();
        let y = Space::l1(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Matrix::random(2, 3, &mut rng);
        let sum: f64 = m.data().iter().map(|z| z.norm()).sum();
        let b = proj_norm(&TensorElem::new(x, y, m).unwrap(), &TensorConfig::quick(1));
        assert!(b.contains(sum, 1e-9) && b.width() < 1e-3, "{b:?} vs {sum}");
    }

    #[test]
    fn rank_one_cross_norm() {
        let x = Space::lp(3.0, 2).unwrap();
        let y = Space::lp(1.5, 2).unwrap();
        let u = Vector(vec![cx(1.0, 0.5), cx(-0.3, 0.0)]);
        let v = Vector(vec![cx(0.2, -1.0), cx(0.7, 0.7)]);
        let t = TensorElem::rank_one(x.clone(), y.clone(), &u, &v).unwrap();
        let target = x.norm(&u).unwrap().lower * y.norm(&v).unwrap().lower;
        let p = proj_norm(&t, &TensorConfig::quick(2));
        let i = inj_norm(&t);
        assert!(p.contains(target, 1e-6), "{p:?} {target}");
        assert!(i.contains(target, 1e-6), "{i:?} {target}");
    }

    #[test]
    fn nuclear_examples() {
        let p = PExponent::new(3.0).unwrap();
        let b = nuclear_bounds(&Matrix::unit(2, 2, 0, 0), p, 0);
        assert!((b.lower - 1.0).abs() < 1e-9 && (b.upper - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::random(3, 3, &mut rng);
        let trace: f64 = svd(&a).iter().map(|s| s.0).sum();
        let b2 = nuclear_norm(3, PExponent::new(2.0).unwrap(), &a).unwrap();
        assert!(b2.contains(trace, 1e-9) && b2.width() < 1e-8, "{b2:?} {trace}");
        assert_eq!(nuclear_bounds(&Matrix::zeros(2, 2), p, 0).upper, 0.0);
    }

    #[test]
    fn nuclear_witness_is_contractive() {
        let p = PExponent::new(3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = Matrix::random(2, 2, &mut rng);
        let b = nuclear_bounds(&a, p, 0);
        let m = Matrix::from_vec(2, 2, b.witness.clone().unwrap().0).unwrap();
        let n = opnorm_bounds(&m, p, &OpnormConfig::default()).unwrap();
        assert!(n.lower <= 1.0 + 1e-9);
        let pairing: C64 = a.data().iter().zip(m.data()).map(|(x, y)| x * y).sum();
        assert!((pairing.norm() - b.lower).abs() < 1e-9);
        assert!(b.rel_width() < 0.02, "{b:?}");
    }

    #[test]
    fn pproj_maximal_matches_projective() {
        let p = PExponent::new(3.0).unwrap();
        let v = POStructure::maxlp(FiniteNormedSpace::l1(2).unwrap(), p);
        let w = POStructure::min(FiniteNormedSpace::linf(2).unwrap(), p);
        let mut rng = rng_for(5, 0);
        let t = TensorElem::new(v.space.clone(), w.space.clone(), Matrix::random(2, 2, &mut rng)).unwrap();
        let b = pproj_norm_level1(&t, &v, &w, 3, &TensorConfig::quick(0)).unwrap();
        let proj = proj_norm(&t, &TensorConfig::quick(0));
        assert!(b.lower <= b.upper + 1e-9);
        assert!(b.lower >= proj.lower * (1.0 - 3e-2), "{b:?} vs {proj:?}");
        let zero = TensorElem::new(v.space.clone(), w.space.clone(), Matrix::zeros(2, 2)).unwrap();
        assert_eq!(pproj_norm_level1(&zero, &v, &w, 3, &TensorConfig::quick(0)).unwrap().upper, 0.0);
    }
}
