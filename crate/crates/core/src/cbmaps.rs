//! Completely bounded norms through amplification levels.
//!
//! The lower side of every bracket is a searched element `u` of the source unit
//! ball at some level, so it only bounds the cb norm from below up to the
//! levels tried. Upper sides come from rules that hold at every level:
//!
//! * target of min type: `cb = norm`;
//! * source of maximal type, target realised on `L^p`: `cb = norm`;
//! * source min with a basis of point evaluations: factor through `l^inf(Ω)`
//!   and bound by `||α|| ||β||` for `S_ω = α_ω β_ω`;
//! * always: `sum_k ||e_k*|| ||T e_k||`.

use serde::Serialize;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::linalg::{solve_consistent, Matrix, Vector, ZERO};
use crate::optim::{nelder_mead, pack, unpack};
use crate::postructure::{factorization_upper, rep_search, Effort, MatrixOverSpace, POStructure, StructureKind};
use crate::seeding::{derive, rng_for};
use crate::spaces::Space;

/// `sum_j y_j J_j`.
fn concrete_image(maps: &[Matrix], y: &[crate::linalg::C64]) -> Matrix {
    let mut m = Matrix::zeros(maps[0].rows(), maps[0].cols());
    for (jm, &yk) in maps.iter().zip(y.iter()) {
        if yk != ZERO {
            m.add_scaled(jm, yk);
        }
    }
    m
}

/// `T: V -> W` given by a `dim W x dim V` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub source: POStructure,
    pub target: POStructure,
    pub coeffs: Matrix,
}

/// Level brackets `1..=N` with the running supremum.
#[derive(Clone, Debug, Serialize)]
pub struct CbEstimate {
    pub levels: Vec<Bounds>,
    /// Whether the searched lower bounds came out non-decreasing by themselves.
    pub monotone: bool,
    /// Lower side: best level found, a lower estimate of the cb norm only.
    pub sup: Bounds,
}

impl LinearMap {
    pub fn new(source: POStructure, target: POStructure, coeffs: Matrix) -> Result<Self> {
        if coeffs.cols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), got: coeffs.cols() });
        }
        if coeffs.rows() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), got: coeffs.rows() });
        }
        if source.p != target.p {
            return Err(Error::InvalidParameter("source and target exponents differ".into()));
        }
        Ok(LinearMap { source, target, coeffs })
    }

    pub fn identity(s: POStructure) -> Self {
        let d = s.dim();
        LinearMap { target: s.clone(), source: s, coeffs: Matrix::identity(d) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        LinearMap { coeffs: self.coeffs.scale_real(c), ..self.clone() }
    }

    fn image1(&self, x: &[crate::linalg::C64]) -> MatrixOverSpace {
        let y = self.coeffs.matvec(x);
        MatrixOverSpace::from_entries(&[vec![y]]).expect("nonempty")
    }

    fn seed(&self) -> u64 {
        derive(self.source.seed, self.target.seed)
    }

    /// Bracket of the plain operator norm `||T||`.
    pub fn banach_norm(&self, effort: Effort) -> Bounds {
        let d = self.source.dim();
        if self.coeffs.is_zero() {
            return Bounds::zero();
        }
        let coarse = self.coarse_upper(effort);
        let mut b = if let Some(vs) = self.source.space.ball_vertices() {
            let mut out: Option<Bounds> = None;
            for v in &vs {
                let mut bv = self.target.norm_with(&self.image1(v), effort);
                bv.witness = Some(v.clone());
                out = Some(match out {
                    None => bv,
                    Some(prev) => Bounds::max_of(&prev, &bv),
                });
            }
            let mut out = out.expect("nonempty vertex set");
            out.lower_method = "vertices";
            out
        } else if let (Space::Dual { parent }, StructureKind::Concrete { maps }) = (&self.source.space, &self.target.kind) {
            // ||T: X* -> B(l^p)|| is the min norm on X of [T e_k*]
            let mats: Vec<Matrix> = (0..d).map(|k| concrete_image(maps, &self.coeffs.column(k))).collect();
            let u = MatrixOverSpace::new(mats).expect("square maps");
            POStructure::min((**parent).clone(), self.source.p).norm_with(&u, effort)
        } else if let (Some(omega), true) = (self.target.space.norming_set_of(), self.level_one_is_space(&self.target)) {
            let tt = self.coeffs.transpose();
            let mut out: Option<Bounds> = None;
            for w in &omega {
                let bw = self.source.space.dual_norm_b(&tt.matvec(w));
                out = Some(match out {
                    None => bw,
                    Some(prev) => Bounds::max_of(&prev, &bw),
                });
            }
            out.expect("nonempty norming set")
        } else {
            let mut rng = rng_for(self.seed(), 1);
            let mut starts: Vec<Vector> = (0..d).map(|k| Vector::basis(d, k)).collect();
            starts.push(Vector::random(d, &mut rng));
            let evals = if effort != Effort::Full { 60 } else { 300 };
            let (_, x) = crate::spaces::maximize_ratio(
                d,
                starts,
                |x| self.target.norm_with(&self.image1(x), Effort::Estimate).lower,
                |x| self.source.space.norm_upper(x),
                evals,
            );
            let nx = self.source.space.norm_b(&x).upper;
            let lo = if nx > 0.0 { self.target.norm_with(&self.image1(&x), effort).lower / nx } else { 0.0 };
            Bounds::new(lo, f64::INFINITY, "ball-search", "none").with_witness(x)
        };
        b.lower_upper(coarse, "coarse");
        b
    }

    fn level_one_is_space(&self, s: &POStructure) -> bool {
        !matches!(s.kind, StructureKind::Concrete { .. })
    }

    /// `sum_k ||e_k*||_{V*} ||T e_k||_W`: each rank-one piece `φ(.) w` has cb
    /// norm `||φ|| ||w||`.
    fn coarse_upper(&self, effort: Effort) -> f64 {
        let d = self.source.dim();
        (0..d)
            .map(|k| {
                let col = self.coeffs.column(k);
                if col.is_zero() {
                    return 0.0;
                }
                let e = self.source.space.dual_norm_upper(&Vector::basis(d, k));
                e * self.target.norm_upper(&self.image1(&Vector::basis(d, k)), effort)
            })
            .sum()
    }

    /// Best upper bound on `||T||_cb` from the rules in the module docs.
    pub fn upper_rule(&self, effort: Effort) -> (f64, &'static str) {
        let mut best = (self.coarse_upper(effort), "coarse");
        let mut take = |v: f64, m: &'static str| {
            if v < best.0 {
                best = (v, m);
            }
        };
        if matches!(self.target.kind, StructureKind::Min) {
            take(self.banach_norm(effort).upper, "min-target");
        } else if self.source.is_maximal_type() && self.target.acts_on_lp() {
            take(self.banach_norm(effort).upper, "maximal-source");
        }
        if let (StructureKind::Min, StructureKind::Concrete { maps }) = (&self.source.kind, &self.target.kind) {
            if let Some(v) = self.linf_factorization(maps, effort) {
                take(v, "linf-factorization");
            }
        }
        best
    }

    /// `T = S ∘ ι` with `ι x = (ω(x))_ω` completely isometric into min `l^inf(Ω)`.
    fn linf_factorization(&self, maps: &[Matrix], effort: Effort) -> Option<f64> {
        let omega = self.source.space.norming_set_of()?;
        let d = self.source.dim();
        if omega.len() != d {
            return None;
        }
        let mut f = Matrix::zeros(d, d);
        for (i, w) in omega.iter().enumerate() {
            for j in 0..d {
                f[(i, j)] = w[j];
            }
        }
        // S e_ω = T F^{-1} e_ω
        let mut mats = Vec::with_capacity(d);
        for o in 0..d {
            let col = solve_consistent(&f, &Vector::basis(d, o), 1e-12)?;
            mats.push(concrete_image(maps, &self.coeffs.matvec(&col)));
        }
        Some(factorization_upper(&mats, self.source.p, effort, self.seed()))
    }

    /// Largest certified `||T^{(n)} u||_W / ||u||_V` found at level `n`.
    fn level_search(&self, n: usize, effort: Effort) -> (f64, Option<MatrixOverSpace>) {
        let d = self.source.dim();
        let seed = derive(self.seed(), n as u64);
        if let StructureKind::Concrete { maps } = &self.target.kind {
            // ||T^{(n)} u|| = ||sum_k J(T e_k) ⊗ U_k|| up to a coordinate permutation
            let mats: Vec<Matrix> = (0..d).map(|k| concrete_image(maps, &self.coeffs.column(k))).collect();
            let src = &self.source;
            let constraint = |a: &[Matrix], eff: Effort| -> f64 {
                src.norm_upper(&MatrixOverSpace::new(a.to_vec()).expect("square"), eff)
            };
            let starts = if effort != Effort::Full { 2 } else { 6 };
            return match rep_search(&mats, n, starts, &constraint, self.source.p, seed, effort) {
                Some((v, a)) => (v, MatrixOverSpace::new(a).ok()),
                None => (0.0, None),
            };
        }
        let ratio = |u: &MatrixOverSpace, eff: Effort| -> f64 {
            let den = self.source.norm_upper(u, eff);
            if !(den > 0.0 && den.is_finite()) {
                return 0.0;
            }
            let img = u.map(&self.coeffs).expect("conformal");
            self.target.norm_with(&img, eff).lower / den
        };
        let count = if effort != Effort::Full { 3 } else { 10 };
        let mut best: Option<(f64, MatrixOverSpace)> = None;
        for s in 0..count {
            let mut rng = rng_for(seed, s);
            let u = MatrixOverSpace::random(n, d, &mut rng);
            let r = ratio(&u, Effort::Estimate);
            if best.as_ref().map_or(true, |b| r > b.0) {
                best = Some((r, u));
            }
        }
        let (_, mut u) = best.expect("at least one start");
        if effort == Effort::Full {
            let flat: Vec<crate::linalg::C64> = u.coeffs().iter().flat_map(|c| c.data().to_vec()).collect();
            let unflat = |x: &[f64]| -> MatrixOverSpace {
                let v = unpack(x);
                let coeffs = v.chunks(n * n).map(|ch| Matrix::from_vec(n, n, ch.to_vec()).expect("square")).collect();
                MatrixOverSpace::new(coeffs).expect("square")
            };
            let (x, _) = nelder_mead(|x| -ratio(&unflat(x), Effort::Estimate), &pack(&flat), 0.3, 200, 1e-10);
            let cand = unflat(&x);
            if ratio(&cand, Effort::Estimate) > ratio(&u, Effort::Estimate) {
                u = cand;
            }
        }
        (ratio(&u, effort), Some(u))
    }

    /// Bracket of `||T^{(n)}||`.
    pub fn level_norm(&self, n: usize) -> Result<Bounds> {
        if n == 0 {
            return Err(Error::InvalidParameter("level must be >= 1".into()));
        }
        Ok(self.level_norm_with(n, Effort::Full))
    }

    pub fn level_norm_with(&self, n: usize, effort: Effort) -> Bounds {
        if self.coeffs.is_zero() {
            return Bounds::zero();
        }
        let level1 = self.banach_norm(effort);
        let (upper, method) = self.upper_rule(effort);
        if n == 1 {
            let mut b = level1;
            b.lower_upper(upper, method);
            return b;
        }
        let mut b = Bounds::new(0.0, f64::INFINITY, "none", "none");
        b.lower_upper(upper, method);
        // u ⊕ 0 realises level one inside level n
        b.raise_lower(level1.lower, "monotone", None);
        if settled(&b) || method == "min-target" || method == "maximal-source" {
            return b;
        }
        let (v, _) = self.level_search(n, effort);
        b.raise_lower(v, "level-search", None);
        b
    }

    /// Levels `1..=levels`, a lower estimate of the cb norm.
    pub fn cb_estimate(&self, levels: usize) -> Result<CbEstimate> {
        if levels == 0 {
            return Err(Error::InvalidParameter("level cap must be >= 1".into()));
        }
        Ok(self.cb_estimate_with(levels, Effort::Full))
    }

    pub fn cb_estimate_with(&self, levels: usize, effort: Effort) -> CbEstimate {
        if self.coeffs.is_zero() {
            let z = Bounds::zero();
            return CbEstimate { levels: vec![z.clone(); levels], monotone: true, sup: z };
        }
        let level1 = self.banach_norm(effort);
        let (upper, method) = self.upper_rule(effort);
        let mut out = Vec::with_capacity(levels);
        let mut monotone = true;
        let mut prev_raw = f64::NEG_INFINITY;
        let mut running = 0.0f64;
        // a norm-type upper rule leaves nothing for the searches to find
        let closed = settled(&Bounds::new(level1.lower, upper, "", "")) || method == "min-target" || method == "maximal-source";
        for n in 1..=levels {
            // once level one meets the upper rule the searches cannot add anything
            let raw = if n == 1 || closed { level1.lower } else { self.level_search(n, effort).0 };
            if raw < prev_raw - 1e-9 * prev_raw.abs().max(1.0) {
                monotone = false;
            }
            prev_raw = raw;
            running = running.max(raw);
            let mut b = Bounds::new(0.0, f64::INFINITY, "none", "none");
            b.lower_upper(if n == 1 { level1.upper.min(upper) } else { upper }, method);
            b.raise_lower(running, if n == 1 { level1.lower_method } else { "level-search" }, None);
            out.push(b);
        }
        let sup = out.last().cloned().expect("levels >= 1");
        CbEstimate { levels: out, monotone, sup }
    }
}

fn settled(b: &Bounds) -> bool {
    b.upper - b.lower <= 1e-9 * b.upper.max(1.0)
}

/// `u ∈ M_n(V*)` as the map `x -> [u_ij(x)]` into `B(l^p(n))`.
fn dual_map(parent: &POStructure, u: &MatrixOverSpace) -> LinearMap {
    let n = u.n();
    let mut coeffs = Matrix::zeros(n * n, u.dim());
    for (k, c) in u.coeffs().iter().enumerate() {
        for (r, z) in c.data().iter().enumerate() {
            coeffs[(r, k)] = *z;
        }
    }
    let target = POStructure::operators(parent.p, n).with_seed(parent.seed);
    LinearMap { source: parent.clone(), target, coeffs }
}

pub(crate) fn dual_structure_upper(parent: &POStructure, u: &MatrixOverSpace, effort: Effort) -> (f64, &'static str) {
    if u.n() == 1 {
        return (parent.space.dual_norm_b(&u.entry(0, 0)).upper, "dual-norm");
    }
    dual_map(parent, u).upper_rule(effort)
}

/// cb-norm bracket of `x -> [u_ij(x)]`, levels `1..=levels`.
pub(crate) fn dual_structure_norm(parent: &POStructure, u: &MatrixOverSpace, levels: usize, effort: Effort) -> Bounds {
    if u.n() == 1 {
        return parent.space.dual_norm_b(&u.entry(0, 0));
    }
    let levels = if effort != Effort::Full { 1 } else { levels };
    let est = dual_map(parent, u).cb_estimate_with(levels, effort);
    let mut b = est.sup;
    b.witness = None;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, PExponent};
    use crate::spaces::Space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64) -> PExponent {
        PExponent::new(x).unwrap()
    }

    #[test]
    fn identity_on_min_linf() {
        let s = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let t = LinearMap::identity(s);
        let est = t.cb_estimate(3).unwrap();
        for b in &est.levels {
            assert!(b.contains(1.0, 1e-6), "{b:?}");
        }
        let t2 = t.scaled(2.0);
        assert!(t2.level_norm(2).unwrap().contains(2.0, 1e-6));
    }

    #[test]
    fn functional_on_min_linf_is_flat() {
        let s = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let target = POStructure::min(Space::linf(1).unwrap(), p(3.0));
        let coeffs = Matrix::from_rows(vec![vec![c(0.7, 0.0), c(0.0, -1.2)]]).unwrap();
        let t = LinearMap::new(s, target, coeffs).unwrap();
        for n in 1..=3 {
            let b = t.level_norm(n).unwrap();
            assert!(b.contains(1.9, 1e-6), "level {n}: {b:?}");
        }
    }

    #[test]
    fn maximal_source_into_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = POStructure::maxlp(Space::l1(2).unwrap(), p(3.0));
        let target = POStructure::operators(p(3.0), 2);
        let coeffs = Matrix::random(4, 2, &mut rng);
        let t = LinearMap::new(s, target, coeffs).unwrap();
        let est = t.cb_estimate(2).unwrap();
        let w = est.levels[0].width();
        for b in &est.levels {
            assert!((b.upper - est.levels[0].upper).abs() <= 2.0 * w + 1e-9);
            assert!(b.lower >= est.levels[0].lower);
        }
    }

    #[test]
    fn dual_of_maxlp_l1_is_min_linf() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = MatrixOverSpace::random(2, 2, &mut rng);
        let d = POStructure::dual(POStructure::maxlp(Space::l1(2).unwrap(), p(3.0)));
        let m = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let a = d.matrix_norm(&u).unwrap();
        let b = m.matrix_norm(&u).unwrap();
        assert!(a.overlaps(&b, 1e-6), "{a:?} {b:?}");
    }

    #[test]
    fn dual_level_one_and_rank_one() {
        let d = POStructure::dual(POStructure::min(Space::linf(2).unwrap(), p(3.0)));
        let phi = Vector(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let u = MatrixOverSpace::from_entries(&[vec![phi.clone()]]).unwrap();
        assert!(d.matrix_norm(&u).unwrap().contains(3.0, 1e-9));
        let alpha = Matrix::real(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let ua = MatrixOverSpace::scalar(&alpha, &phi);
        let na = crate::postructure::op_bounds(&alpha, p(3.0), Effort::Full, 0);
        let b = d.matrix_norm(&ua).unwrap();
        assert!(b.lower <= 3.0 * na.upper + 1e-6 && b.upper >= 3.0 * na.lower - 1e-6, "{b:?} {na:?}");
    }
}
