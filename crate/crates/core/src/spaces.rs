//! Finite-dimensional complex normed spaces.
//!
//! A space is a description from which norms (and dual norms) are evaluated as
//! [`Bounds`]. Formula and norming-set norms are exact; quotient, dual and
//! embedded norms return two-sided brackets whose lower side is always backed by
//! an explicit vector or functional.

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::linalg::{
    c, least_squares, lp_norm_unchecked, nullspace, phase, rank, solve_consistent, Matrix, PExponent,
    Vector, C64, ONE, ZERO,
};
use crate::opnorm::{opnorm_bounds, OpnormConfig};
use crate::optim::{nelder_mead, pack, unpack};
use crate::seeding::{derive, rng_for};

const RANK_TOL: f64 = 1e-10;

/// A complex normed space of finite dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum FiniteNormedSpace {
    /// `(sum_i w_i |x_i|^p)^{1/p}` with `1 <= p < inf`.
    WeightedLp { p: f64, weights: Vec<f64> },
    /// `max_ω |ω(x)|` over a finite set of functionals spanning the dual.
    NormingSet { dim: usize, functionals: Vec<Vector> },
    /// `inf_k ||x + k||` over the span of `kernel`. Elements are coset
    /// representatives in parent coordinates.
    Quotient { parent: Box<FiniteNormedSpace>, kernel: Vec<Vector> },
    /// Coordinates with respect to `basis`, normed by the parent.
    Subspace { parent: Box<FiniteNormedSpace>, basis: Vec<Vector> },
    /// Functionals on the parent under the pairing `φ(x) = sum_i φ_i x_i`.
    Dual { parent: Box<FiniteNormedSpace> },
    /// `||sum_k x_k J_k||_{B(l^p(N))}` for an injective family of `N x N` maps.
    Embedded { p: PExponent, maps: Vec<Matrix> },
}

pub type Space = FiniteNormedSpace;

impl FiniteNormedSpace {
    pub fn lp(p: f64, dim: usize) -> Result<Space> {
        Self::weighted_lp(p, vec![1.0; dim])
    }

    pub fn weighted_lp(p: f64, weights: Vec<f64>) -> Result<Space> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(Space::WeightedLp { p, weights })
    }

    /// `l^1(k)`.
    pub fn l1(k: usize) -> Result<Space> {
        Self::lp(1.0, k)
    }

    /// `l^inf(k)` as the norming set of point evaluations.
    pub fn linf(k: usize) -> Result<Space> {
        Self::norming_set(k, (0..k).map(|i| Vector::basis(k, i)).collect())
    }

    pub fn norming_set(dim: usize, functionals: Vec<Vector>) -> Result<Space> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        for f in &functionals {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
            }
        }
        if rank(&rows_matrix(&functionals, dim), RANK_TOL) < dim {
            return Err(Error::InvalidParameter("norming set does not span the dual".into()));
        }
        Ok(Space::NormingSet { dim, functionals })
    }

    pub fn quotient(parent: Space, kernel: Vec<Vector>) -> Result<Space> {
        let d = parent.dim();
        for k in &kernel {
            if k.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.dim() });
            }
        }
        if rank(&rows_matrix(&kernel, d), RANK_TOL) >= d {
            return Err(Error::InvalidParameter("quotient kernel must be a strict subspace".into()));
        }
        Ok(Space::Quotient { parent: Box::new(parent), kernel })
    }

    pub fn subspace(parent: Space, basis: Vec<Vector>) -> Result<Space> {
        let d = parent.dim();
        for b in &basis {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
            }
        }
        if basis.is_empty() || rank(&rows_matrix(&basis, d), RANK_TOL) < basis.len() {
            return Err(Error::InvalidParameter("subspace basis must be independent".into()));
        }
        Ok(Space::Subspace { parent: Box::new(parent), basis })
    }

    pub fn dual(parent: Space) -> Space {
        Space::Dual { parent: Box::new(parent) }
    }

    pub fn embedded(p: PExponent, maps: Vec<Matrix>) -> Result<Space> {
        let n = maps.first().map(Matrix::rows).ok_or_else(|| Error::InvalidParameter("no maps".into()))?;
        for m in &maps {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.rows() });
            }
        }
        let flat: Vec<Vector> = maps.iter().map(|m| Vector(m.data().to_vec())).collect();
        if rank(&rows_matrix(&flat, n * n), RANK_TOL) < maps.len() {
            return Err(Error::InvalidParameter("embedding must be injective".into()));
        }
        Ok(Space::Embedded { p, maps })
    }

    /// `B(l^p(k))` with coordinates `x_{r k + s}` for the matrix unit `E_rs`.
    pub fn operators(p: PExponent, k: usize) -> Space {
        let maps = (0..k * k).map(|i| Matrix::unit(k, k, i / k, i % k)).collect();
        Space::Embedded { p, maps }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::WeightedLp { weights, .. } => weights.len(),
            Space::NormingSet { dim, .. } => *dim,
            Space::Quotient { parent, .. } => parent.dim(),
            Space::Subspace { basis, .. } => basis.len(),
            Space::Dual { parent } => parent.dim(),
            Space::Embedded { maps, .. } => maps.len(),
        }
    }

    /// Whether [`Self::norm`] always returns a zero-width bracket.
    pub fn is_exact(&self) -> bool {
        match self {
            Space::WeightedLp { .. } | Space::NormingSet { .. } => true,
            Space::Subspace { parent, .. } => parent.is_exact(),
            Space::Dual { parent } => parent.dual_is_exact(),
            _ => false,
        }
    }

    fn dual_is_exact(&self) -> bool {
        match self {
            Space::WeightedLp { .. } => true,
            Space::NormingSet { dim, functionals } => functionals.len() == *dim,
            _ => false,
        }
    }

    /// Dual space in closed form where one is available (weighted `l^p`).
    pub fn dual_simplified(&self) -> Space {
        match self {
            Space::WeightedLp { p, weights } if *p > 1.0 => {
                let q = *p / (*p - 1.0);
                Space::WeightedLp { p: q, weights: weights.iter().map(|w| w.powf(1.0 - q)).collect() }
            }
            Space::WeightedLp { weights, .. } => {
                let k = weights.len();
                Space::NormingSet {
                    dim: k,
                    functionals: weights
                        .iter()
                        .enumerate()
                        .map(|(i, w)| Vector::basis(k, i).scale_real(1.0 / w))
                        .collect(),
                }
            }
            Space::Dual { parent } => (**parent).clone(),
            other => Space::dual(other.clone()),
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Norm bracket of `x`.
    pub fn norm(&self, x: &Vector) -> Result<Bounds> {
        self.check(x)?;
        Ok(self.norm_b(x))
    }

    pub(crate) fn norm_b(&self, x: &Vector) -> Bounds {
        match self {
            Space::WeightedLp { p, weights } => {
                Bounds::exact(lp_norm_unchecked(x, *p, Some(weights)), "formula")
            }
            Space::NormingSet { functionals, .. } => {
                let v = functionals.iter().map(|f| f.pair(x).norm()).fold(0.0, f64::max);
                Bounds::exact(v, "norming-set")
            }
            Space::Subspace { parent, basis } => parent.norm_b(&combine(basis, x)),
            Space::Quotient { parent, kernel } => quotient_norm(parent, kernel, x),
            Space::Dual { parent } => parent.dual_norm_b(x),
            Space::Embedded { p, maps } => {
                let m = combine_maps(maps, x);
                opnorm_bounds(&m, *p, &OpnormConfig::default()).expect("square embedding")
            }
        }
    }

    /// Upper side only, cheaper where the full bracket needs a search.
    pub(crate) fn norm_upper(&self, x: &Vector) -> f64 {
        match self {
            Space::Embedded { p, maps } => {
                let m = combine_maps(maps, x);
                let fast = OpnormConfig { refine_tol: Some(1e-3), refine_cells: 5_000, ..OpnormConfig::fast(0) };
                opnorm_bounds(&m, *p, &fast).map(|b| b.upper).unwrap_or(f64::INFINITY)
            }
            _ => self.norm_b(x).upper,
        }
    }

    /// Upper side of the dual norm only. For embedded spaces this is the
    /// entrywise bound `sum |G_ij|` (each entry functional has norm at most one).
    pub(crate) fn dual_norm_upper(&self, phi: &Vector) -> f64 {
        match self {
            Space::Dual { parent } => parent.norm_upper(phi),
            Space::Embedded { maps, .. } => embedded_functional(maps, phi).data().iter().map(|z| z.norm()).sum(),
            _ => self.dual_norm_b(phi).upper,
        }
    }

    /// Norm of the functional `φ` in the dual space.
    pub fn dual_norm(&self, phi: &Vector) -> Result<Bounds> {
        self.check(phi)?;
        if let Space::Quotient { kernel, .. } = self {
            let scale = phi.max_abs().max(f64::MIN_POSITIVE);
            let worst = kernel.iter().map(|k| phi.pair(k).norm() / (scale * k.max_abs())).fold(0.0, f64::max);
            if worst > 1e-9 {
                return Err(Error::NotAnnihilating(worst));
            }
        }
        Ok(self.dual_norm_b(phi))
    }

    pub(crate) fn dual_norm_b(&self, phi: &Vector) -> Bounds {
        if phi.is_zero() {
            return Bounds::zero();
        }
        match self {
            Space::WeightedLp { p, weights } if *p > 1.0 => {
                let q = *p / (*p - 1.0);
                let w: Vec<f64> = weights.iter().map(|w| w.powf(1.0 - q)).collect();
                Bounds::exact(lp_norm_unchecked(phi, q, Some(&w)), "dual-formula")
            }
            Space::WeightedLp { weights, .. } => {
                let v = phi.iter().zip(weights).map(|(z, w)| z.norm() / w).fold(0.0, f64::max);
                Bounds::exact(v, "dual-formula")
            }
            Space::NormingSet { dim, functionals } => norming_set_dual(*dim, functionals, phi),
            Space::Quotient { parent, .. } => parent.dual_norm_b(phi),
            Space::Subspace { parent, basis } => subspace_dual(parent, basis, phi),
            Space::Dual { parent } => {
                // φ lives in the bidual, identified with the parent
                let upper = parent.norm_b(phi).upper;
                let mut b = Bounds::new(0.0, upper, "none", "bidual-norm");
                let mut cands = parent.dual_ball_sample(8, 0x5eed);
                cands.push(parent.norming_functional(phi));
                for psi in cands {
                    let v = psi.pair(phi).norm();
                    if v > b.lower {
                        b.raise_lower(v, "dual-ball", Some(psi));
                    }
                }
                b
            }
            Space::Embedded { p, maps } => embedded_dual(*p, maps, phi),
        }
    }

    /// A functional of dual norm at most one (certified) that nearly norms `x`.
    pub fn norming_functional(&self, x: &Vector) -> Vector {
        let raw = match self {
            Space::WeightedLp { p, weights } => {
                let nx = lp_norm_unchecked(x, *p, Some(weights));
                if nx == 0.0 {
                    return Vector::zeros(x.dim());
                }
                if *p == 1.0 {
                    Vector(
                        x.iter()
                            .zip(weights)
                            .map(|(z, w)| if *z == ZERO { c(*w, 0.0) } else { phase(*z).conj() * *w })
                            .collect(),
                    )
                } else {
                    Vector(
                        x.iter()
                            .zip(weights)
                            .map(|(z, w)| z.conj() * (w * (z.norm() / nx).powf(*p - 2.0) / nx))
                            .collect(),
                    )
                }
            }
            Space::NormingSet { functionals, .. } => {
                let best = functionals
                    .iter()
                    .max_by(|a, b| a.pair(x).norm().total_cmp(&b.pair(x).norm()))
                    .expect("nonempty norming set");
                best.scale(phase(best.pair(x)).conj())
            }
            Space::Dual { parent } => parent.norming_vector(x),
            _ => self.search_norming_functional(x),
        };
        self.certify_functional(raw)
    }

    /// A vector of norm at most one (certified) that nearly norms the functional `φ`.
    pub fn norming_vector(&self, phi: &Vector) -> Vector {
        let raw = match self {
            Space::WeightedLp { p, weights } if *p > 1.0 => {
                let q = *p / (*p - 1.0);
                let a: Vec<C64> = phi.iter().zip(weights).map(|(z, w)| z / w.powf(1.0 / p)).collect();
                let na = lp_norm_unchecked(&a, q, None);
                if na == 0.0 {
                    return Vector::zeros(phi.dim());
                }
                Vector(
                    a.iter()
                        .zip(weights)
                        .map(|(z, w)| z.conj() * ((z.norm() / na).powf(q - 2.0) / na) / w.powf(1.0 / p))
                        .collect(),
                )
            }
            Space::WeightedLp { weights, .. } => {
                let (k, _) = phi
                    .iter()
                    .zip(weights)
                    .enumerate()
                    .map(|(i, (z, w))| (i, z.norm() / w))
                    .fold((0, -1.0), |b, x| if x.1 > b.1 { x } else { b });
                Vector::basis(phi.dim(), k).scale(phase(phi[k]).conj() / weights[k])
            }
            Space::NormingSet { dim, functionals } if functionals.len() == *dim => {
                let m = rows_matrix(functionals, *dim);
                match solve_consistent(&m.transpose(), phi, 1e-12) {
                    Some(coef) => {
                        let target: Vec<C64> =
                            coef.iter().map(|z| if *z == ZERO { ONE } else { phase(*z).conj() }).collect();
                        solve_consistent(&m, &target, 1e-12).unwrap_or_else(|| Vector::zeros(*dim))
                    }
                    None => Vector::zeros(*dim),
                }
            }
            Space::Dual { parent } => parent.norming_functional(phi),
            _ => self.search_norming_vector(phi),
        };
        let n = self.norm_upper(&raw);
        if n > 0.0 && n.is_finite() {
            raw.scale_real(1.0 / n)
        } else {
            Vector::zeros(phi.dim())
        }
    }

    fn certify_functional(&self, psi: Vector) -> Vector {
        let n = self.dual_norm_b(&psi).upper;
        if n > 0.0 && n.is_finite() {
            psi.scale_real(1.0 / n)
        } else {
            Vector::zeros(psi.dim())
        }
    }

    fn search_norming_functional(&self, x: &Vector) -> Vector {
        let d = self.dim();
        let mut starts = self.dual_ball_sample(4, 0xf00d);
        starts.push(Vector(x.iter().map(|z| z.conj()).collect()));
        let (_, best) = maximize_ratio(
            d,
            starts,
            |psi| psi.pair(x).norm(),
            |psi| self.dual_norm_b(psi).upper,
            400,
        );
        best
    }

    fn search_norming_vector(&self, phi: &Vector) -> Vector {
        let d = self.dim();
        let mut rng = rng_for(0xbead, 0);
        let mut starts: Vec<Vector> = (0..4).map(|_| Vector::random(d, &mut rng)).collect();
        starts.push(Vector(phi.iter().map(|z| z.conj()).collect()));
        let (_, best) = maximize_ratio(d, starts, |x| phi.pair(x).norm(), |x| self.norm_upper(x), 400);
        best
    }

    /// Finite set of functionals whose max modulus is the norm, when one exists.
    pub fn norming_set_of(&self) -> Option<Vec<Vector>> {
        match self {
            Space::NormingSet { functionals, .. } => Some(functionals.clone()),
            Space::Dual { parent } => parent.ball_vertices(),
            _ => None,
        }
    }

    /// Finite set whose absolutely convex hull is the unit ball, when one exists.
    pub fn ball_vertices(&self) -> Option<Vec<Vector>> {
        match self {
            Space::WeightedLp { p, weights } if *p == 1.0 => Some(
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| Vector::basis(weights.len(), i).scale_real(1.0 / w))
                    .collect(),
            ),
            Space::Dual { parent } => parent.norming_set_of(),
            _ => None,
        }
    }

    /// Functionals in the dual unit ball: the canonical ones first (norming set,
    /// scaled coordinate functionals), then seeded random directions normalised
    /// by their certified dual norm.
    pub fn dual_ball_sample(&self, count: usize, seed: u64) -> Vec<Vector> {
        let d = self.dim();
        let mut out: Vec<Vector> = match self {
            Space::NormingSet { functionals, .. } => functionals.clone(),
            _ => (0..d).map(|i| self.certify_functional(Vector::basis(d, i))).collect(),
        };
        let mut s = 0;
        while out.len() < count.max(1) {
            let mut rng = rng_for(derive(seed, 0xd1a1), s);
            s += 1;
            let psi = self.certify_functional(Vector::random(d, &mut rng));
            if !psi.is_zero() {
                out.push(psi);
            }
            if s > 10 * count as u64 + 10 {
                break;
            }
        }
        out
    }
}

fn rows_matrix(vs: &[Vector], dim: usize) -> Matrix {
    let mut m = Matrix::zeros(vs.len(), dim);
    for (i, v) in vs.iter().enumerate() {
        for j in 0..dim {
            m[(i, j)] = v[j];
        }
    }
    m
}

fn combine(basis: &[Vector], coef: &[C64]) -> Vector {
    let d = basis.first().map_or(0, Vector::dim);
    let mut out = Vector::zeros(d);
    for (b, &a) in basis.iter().zip(coef) {
        for j in 0..d {
            out[j] += b[j] * a;
        }
    }
    out
}

pub(crate) fn combine_maps(maps: &[Matrix], x: &[C64]) -> Matrix {
    let mut m = Matrix::zeros(maps[0].rows(), maps[0].cols());
    for (j, &xk) in maps.iter().zip(x) {
        if xk != ZERO {
            m.add_scaled(j, xk);
        }
    }
    m
}

/// Multi-start Nelder-Mead maximisation of `numer(x) / denom(x)`; returns the
/// best ratio with its argument. Every candidate ratio uses the caller's
/// certified denominator, so the result is a valid lower bound.
pub(crate) fn maximize_ratio<N, D>(
    dim: usize,
    starts: Vec<Vector>,
    numer: N,
    denom: D,
    evals: usize,
) -> (f64, Vector)
where
    N: Fn(&Vector) -> f64,
    D: Fn(&Vector) -> f64,
{
    let ratio = |v: &Vector| -> f64 {
        let d = denom(v);
        if d > 0.0 && d.is_finite() {
            numer(v) / d
        } else {
            0.0
        }
    };
    let mut best = (0.0, Vector::zeros(dim));
    for s in starts {
        if s.is_zero() {
            continue;
        }
        let r0 = ratio(&s);
        if r0 > best.0 {
            best = (r0, s.clone());
        }
        let (x, _) = nelder_mead(|x| -ratio(&unpack(x)), &pack(&s), 0.3, evals, 1e-12);
        let v = unpack(&x);
        let r = ratio(&v);
        if r > best.0 {
            best = (r, v);
        }
    }
    best
}

fn norming_set_dual(dim: usize, functionals: &[Vector], phi: &Vector) -> Bounds {
    let m = rows_matrix(functionals, dim);
    if functionals.len() == dim {
        // φ = sum c_ω ω uniquely; the dual ball is the absolute convex hull of Ω
        if let Some(coef) = solve_consistent(&m.transpose(), phi, 1e-12) {
            let v: f64 = coef.iter().map(|z| z.norm()).sum();
            return Bounds::exact(v, "dual-coefficients");
        }
    }
    // overcomplete: any representation bounds the dual norm from above
    let base = least_squares(&m.transpose(), phi);
    let null = nullspace(&m.transpose(), 1e-10);
    let l1 = |t: &[f64]| -> f64 {
        let mut coef = base.clone();
        for (k, chunk) in t.chunks(2).enumerate() {
            let s = c(chunk[0], chunk[1]);
            for j in 0..coef.dim() {
                coef[j] += null[k][j] * s;
            }
        }
        coef.iter().map(|z| z.norm()).sum()
    };
    let (_, upper) = nelder_mead(l1, &vec![0.0; 2 * null.len()], 0.3, 2000, 1e-14);
    let upper = upper.min(l1(&vec![0.0; 2 * null.len()]));
    let space = Space::NormingSet { dim, functionals: functionals.to_vec() };
    let mut rng = rng_for(0x1ce, 0);
    let mut starts: Vec<Vector> = functionals.iter().map(|f| Vector(f.iter().map(|z| z.conj()).collect())).collect();
    starts.push(Vector(phi.iter().map(|z| z.conj()).collect()));
    starts.push(Vector::random(dim, &mut rng));
    let (lo, w) = maximize_ratio(dim, starts, |x| phi.pair(x).norm(), |x| space.norm_b(x).upper, 600);
    Bounds::new(lo, upper, "ball-search", "dual-representation").with_witness(w)
}

fn subspace_dual(parent: &Space, basis: &[Vector], phi: &Vector) -> Bounds {
    let d = parent.dim();
    let b = rows_matrix(basis, d); // r x d, rows are basis vectors
    // extensions ψ with B ψ = φ; ψ0 + annihilator of the subspace
    let psi0 = least_squares(&b, phi);
    let ann = nullspace(&b, 1e-10);
    let ext = |t: &[f64]| -> Vector {
        let mut psi = psi0.clone();
        for (k, ch) in t.chunks(2).enumerate() {
            let s = c(ch[0], ch[1]);
            for j in 0..d {
                psi[j] += ann[k][j] * s;
            }
        }
        psi
    };
    let (t, _) = nelder_mead(|t| parent.dual_norm_b(&ext(t)).upper, &vec![0.0; 2 * ann.len()], 0.3, 1500, 1e-13);
    let upper = parent.dual_norm_b(&ext(&t)).upper.min(parent.dual_norm_b(&psi0).upper);
    let sub = Space::Subspace { parent: Box::new(parent.clone()), basis: basis.to_vec() };
    let r = basis.len();
    let mut rng = rng_for(0x5b5, 0);
    let mut starts = vec![Vector(phi.iter().map(|z| z.conj()).collect())];
    starts.extend((0..3).map(|_| Vector::random(r, &mut rng)));
    let (lo, w) = maximize_ratio(r, starts, |x| phi.pair(x).norm(), |x| sub.norm_upper(x), 600);
    Bounds::new(lo, upper, "ball-search", "extension").with_witness(w)
}

/// `G` with `φ(x) = sum_ij G_ij J(x)_ij` on the embedded range.
fn embedded_functional(maps: &[Matrix], phi: &Vector) -> Matrix {
    let n = maps[0].rows();
    let flat: Vec<Vector> = maps.iter().map(|m| Vector(m.data().to_vec())).collect();
    let m = rows_matrix(&flat, n * n);
    // G = sum φ_k g_k with <g_k, J_l> = δ_kl
    let mut g = Vector::zeros(n * n);
    for (k, &fk) in phi.iter().enumerate() {
        if fk == ZERO {
            continue;
        }
        let gk = least_squares(&m, &Vector::basis(maps.len(), k));
        for j in 0..n * n {
            g[j] += gk[j] * fk;
        }
    }
    Matrix::from_vec(n, n, g.0).expect("square")
}

fn embedded_dual(p: PExponent, maps: &[Matrix], phi: &Vector) -> Bounds {
    let n = maps[0].rows();
    let flat: Vec<Vector> = maps.iter().map(|m| Vector(m.data().to_vec())).collect();
    let m = rows_matrix(&flat, n * n);
    let gm = embedded_functional(maps, phi);
    let nb = crate::tensor::nuclear_bounds(&gm, p, 0);
    let mut b = Bounds::new(0.0, nb.upper, "none", "trace-duality");
    // the trace-duality witness A (||A|| <= 1) projected onto the embedded range
    if let Some(a) = &nb.witness {
        let x = least_squares(&m.transpose(), a);
        let space = Space::Embedded { p, maps: maps.to_vec() };
        let nx = space.norm_upper(&x);
        if nx > 0.0 {
            let v = phi.pair(&x).norm() / nx;
            b.raise_lower(v, "trace-witness", Some(x.scale_real(1.0 / nx)));
        }
    }
    b
}

/// `inf_k ||x + k||_parent`: upper side by convex descent over the kernel
/// coordinates, lower side from functionals vanishing on the kernel.
fn quotient_norm(parent: &Space, kernel: &[Vector], x: &Vector) -> Bounds {
    let d = parent.dim();
    let kmat = rows_matrix(kernel, d);
    if x.is_zero() || solve_consistent(&kmat.transpose(), x, 1e-12).is_some() {
        return Bounds::zero();
    }
    let shift = |t: &[f64]| -> Vector {
        let mut y = x.clone();
        for (k, ch) in t.chunks(2).enumerate() {
            let s = c(ch[0], ch[1]);
            for j in 0..d {
                y[j] += kernel[k][j] * s;
            }
        }
        y
    };
    let obj = |t: &[f64]| parent.norm_upper(&shift(t));
    let r = kernel.len();
    // start at 0 and at the l2 projection of x onto the coset's minimum
    let t_ls = least_squares(&kmat.transpose(), x);
    let t_ls: Vec<f64> = pack(&t_ls.scale_real(-1.0));
    let mut upper = obj(&vec![0.0; 2 * r]);
    for start in [vec![0.0; 2 * r], t_ls] {
        for step in [0.5, 0.05] {
            let (t, v) = nelder_mead(obj, &start, step, 3000, 1e-14);
            let _ = t;
            upper = upper.min(v);
        }
    }

    // lower: |ψ(x)| / ||ψ||_* over the annihilator of the kernel
    let ann = nullspace(&kmat, 1e-10);
    let from_coords = |s: &Vector| -> Vector { combine(&ann, s) };
    let mut starts: Vec<Vector> = Vec::new();
    let best_rep = {
        let (t, _) = nelder_mead(obj, &vec![0.0; 2 * r], 0.5, 3000, 1e-14);
        shift(&t)
    };
    for rep in [best_rep, x.clone()] {
        let g = parent.norming_functional(&rep);
        // coordinates of the projection of g onto the annihilator
        let a = rows_matrix(&ann, d);
        starts.push(least_squares(&a.transpose(), &g));
    }
    let mut rng = rng_for(0x9007, 0);
    starts.extend((0..3).map(|_| Vector::random(ann.len(), &mut rng)));
    let (lo, s) = maximize_ratio(
        ann.len(),
        starts,
        |s| from_coords(s).pair(x).norm(),
        |s| parent.dual_norm_b(&from_coords(s)).upper,
        800,
    );
    let witness = from_coords(&s);
    Bounds::new(lo, upper, "annihilator", "coset-descent").with_witness(witness)
}

/// JSON description of a space.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<Vec<Vector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Box<SpaceSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vector>>,
    /// Row-major `N x N` matrices for `embedded`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<Vec<Vec<C64>>>>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Space> {
        let need_dim = || self.dim.ok_or_else(|| Error::Malformed(format!("`{}` needs dim", self.kind)));
        let need_p = || self.p.ok_or_else(|| Error::Malformed(format!("`{}` needs p", self.kind)));
        let parent = || -> Result<Space> {
            self.parent
                .as_ref()
                .ok_or_else(|| Error::Malformed(format!("`{}` needs parent", self.kind)))?
                .build()
        };
        let space = match self.kind.as_str() {
            "lp" => Space::lp(need_p()?, need_dim()?)?,
            "weighted_lp" => Space::weighted_lp(
                need_p()?,
                self.weights.clone().ok_or_else(|| Error::Malformed("weighted_lp needs weights".into()))?,
            )?,
            "l1" => Space::l1(need_dim()?)?,
            "linf" => Space::linf(need_dim()?)?,
            "norming_set" => Space::norming_set(
                need_dim()?,
                self.functionals.clone().ok_or_else(|| Error::Malformed("norming_set needs functionals".into()))?,
            )?,
            "quotient" => Space::quotient(
                parent()?,
                self.kernel.clone().ok_or_else(|| Error::Malformed("quotient needs kernel".into()))?,
            )?,
            "subspace" => Space::subspace(
                parent()?,
                self.basis.clone().ok_or_else(|| Error::Malformed("subspace needs basis".into()))?,
            )?,
            "dual" => Space::dual(parent()?),
            "embedded" => {
                let p = PExponent::new(need_p()?)?;
                let maps = self
                    .maps
                    .clone()
                    .ok_or_else(|| Error::Malformed("embedded needs maps".into()))?
                    .into_iter()
                    .map(Matrix::from_rows)
                    .collect::<Result<Vec<_>>>()?;
                Space::embedded(p, maps)?
            }
            other => return Err(Error::Malformed(format!("unknown space kind `{other}`"))),
        };
        if let Some(d) = self.dim {
            if d != space.dim() {
                return Err(Error::DimensionMismatch { expected: d, got: space.dim() });
            }
        }
        Ok(space)
    }

    pub fn from_json(s: &str) -> Result<Space> {
        let spec: SpaceSpec = serde_json::from_str(s)?;
        spec.build()
    }

    /// Description that builds back to an equal space.
    pub fn from_space(space: &Space) -> SpaceSpec {
        let mut s = SpaceSpec {
            kind: String::new(),
            dim: Some(space.dim()),
            p: None,
            weights: None,
            functionals: None,
            parent: None,
            kernel: None,
            basis: None,
            maps: None,
        };
        match space {
            Space::WeightedLp { p, weights } => {
                s.p = Some(*p);
                if weights.iter().all(|&w| w == 1.0) {
                    s.kind = "lp".into();
                } else {
                    s.kind = "weighted_lp".into();
                    s.weights = Some(weights.clone());
                }
            }
            Space::NormingSet { functionals, .. } => {
                s.kind = "norming_set".into();
                s.functionals = Some(functionals.clone());
            }
            Space::Quotient { parent, kernel } => {
                s.kind = "quotient".into();
                s.parent = Some(Box::new(Self::from_space(parent)));
                s.kernel = Some(kernel.clone());
            }
            Space::Subspace { parent, basis } => {
                s.kind = "subspace".into();
                s.parent = Some(Box::new(Self::from_space(parent)));
                s.basis = Some(basis.clone());
            }
            Space::Dual { parent } => {
                s.kind = "dual".into();
                s.parent = Some(Box::new(Self::from_space(parent)));
            }
            Space::Embedded { p, maps } => {
                s.kind = "embedded".into();
                s.p = Some(p.value());
                s.maps = Some(maps.iter().map(|m| (0..m.rows()).map(|i| m.row(i).to_vec()).collect()).collect());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_real(xs)
    }

    #[test]
    fn basic_norms() {
        let linf = Space::linf(2).unwrap();
        assert_eq!(linf.norm(&v(&[1.0, -2.0])).unwrap().as_pair(), [2.0, 2.0]);
        let l1 = Space::l1(2).unwrap();
        assert_eq!(l1.norm(&v(&[1.0, -2.0])).unwrap().as_pair(), [3.0, 3.0]);
        assert!(matches!(l1.norm(&v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn one_dimensional_spaces_are_modulus() {
        let z = Vector(vec![c(3.0, -4.0)]);
        for s in [Space::l1(1).unwrap(), Space::linf(1).unwrap()] {
            let b = s.norm(&z).unwrap();
            assert!((b.lower - 5.0).abs() < 1e-12 && b.width() == 0.0);
        }
    }

    #[test]
    fn quotient_of_l1_by_antidiagonal() {
        // inf_t |1 + t| + |t| = 1 over complex t (triangle inequality), attained on [-1, 0]
        let q = Space::quotient(Space::l1(2).unwrap(), vec![v(&[1.0, -1.0])]).unwrap();
        let b = q.norm(&v(&[1.0, 0.0])).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-9, "{b:?}");
        assert!((b.upper - 1.0).abs() < 1e-6, "{b:?}");
        assert_eq!(q.norm(&v(&[1.0, -1.0])).unwrap().upper, 0.0);
    }

    #[test]
    fn quotient_must_be_strict() {
        let err = Space::quotient(Space::l1(1).unwrap(), vec![v(&[1.0])]);
        assert!(err.is_err());
    }

    #[test]
    fn norming_set_must_span() {
        assert!(Space::norming_set(2, vec![v(&[1.0, 0.0])]).is_err());
    }

    #[test]
    fn duality_pairing_and_dual_of_l1() {
        for i in 0..3 {
            for j in 0..3 {
                let p = Vector::basis(3, i).pair(&Vector::basis(3, j));
                assert_eq!(p, if i == j { ONE } else { ZERO });
            }
        }
        let d = Space::dual(Space::l1(3).unwrap());
        let x = Vector(vec![c(0.3, -1.2), c(2.0, 0.1), c(-0.5, 0.5)]);
        let b = d.norm(&x).unwrap();
        assert!((b.lower - x.max_abs()).abs() < 1e-9 && (b.upper - x.max_abs()).abs() < 1e-9);
    }

    #[test]
    fn dual_ball_sample_contains_canonical() {
        let linf = Space::linf(2).unwrap();
        let s = linf.dual_ball_sample(5, 1);
        assert_eq!(s[0], Vector::basis(2, 0));
        assert_eq!(s[1], Vector::basis(2, 1));
        let l1 = Space::l1(2).unwrap();
        let s = l1.dual_ball_sample(3, 1);
        assert!((s[0].max_abs() - 1.0).abs() < 1e-12 && (s[1].max_abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_spaces() {
        let s = SpaceSpec::from_json(r#"{"kind":"weighted_lp","dim":2,"p":3,"weights":[8,0.001]}"#).unwrap();
        let n = s.norm(&v(&[1.0, 1.0])).unwrap();
        assert!((n.lower - 8.001f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let q = SpaceSpec::from_json(
            r#"{"kind":"quotient","parent":{"kind":"l1","dim":2},"kernel":[[[1,0],[-1,0]]]}"#,
        )
        .unwrap();
        assert_eq!(q.dim(), 2);
        let ns = SpaceSpec::from_json(r#"{"kind":"norming_set","dim":2,"functionals":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#)
            .unwrap();
        assert_eq!(ns, Space::linf(2).unwrap());
        assert!(SpaceSpec::from_json(r#"{"kind":"bogus"}"#).is_err());
    }

    #[test]
    fn quotient_dual_requires_annihilation() {
        let q = Space::quotient(Space::l1(2).unwrap(), vec![v(&[1.0, -1.0])]).unwrap();
        assert!(matches!(q.dual_norm(&v(&[1.0, 0.0])), Err(Error::NotAnnihilating(_))));
        let b = q.dual_norm(&v(&[1.0, 1.0])).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_dual_is_conjugate_weighted() {
        let s = Space::weighted_lp(3.0, vec![2.0, 0.5]).unwrap();
        let phi = v(&[1.0, -0.7]);
        let exact = s.dual_norm(&phi).unwrap().lower;
        let simplified = s.dual_simplified().norm(&phi).unwrap().lower;
        assert!((exact - simplified).abs() < 1e-12);
        let x = s.norming_vector(&phi);
        assert!(s.norm(&x).unwrap().upper <= 1.0 + 1e-12);
        assert!((phi.pair(&x).norm() - exact).abs() < 1e-9);
    }
}
