//! Matrix norms on a finite-dimensional space: the min and max_{L^p}
//! structures, concrete embeddings into `B(l^p(N))`, quotients and duals.
//!
//! An element of `M_n(X)` is stored by coordinates, `u = sum_k U_k ⊗ e_k` with
//! `U_k` an `n x n` scalar matrix. Every norm is a [`Bounds`]; lower sides come
//! from explicit contractive maps or functionals, upper sides from explicit
//! decompositions of `u`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::cbmaps;
use crate::error::{Error, Result};
use crate::harness::check::Check;
use crate::linalg::{direct_sum, least_squares, rank, svd, Matrix, PExponent, Vector, C64, ONE, ZERO};
use crate::opnorm::{boyd_lower_cfg, duality_map, opnorm_bounds, OpnormConfig};
use crate::optim::nelder_mead;
use crate::seeding::{derive, rng_for};
use crate::spaces::{Space, SpaceSpec};

/// How hard a norm evaluation works. `Fast` is meant for the inner loops of
/// searches: brackets stay certified but are wider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Effort {
    /// Uncertified estimates, for search objectives only.
    Estimate,
    Fast,
    #[default]
    Full,
}

impl Effort {
    pub fn opnorm(self, seed: u64) -> OpnormConfig {
        match self {
            Effort::Full => OpnormConfig::default().with_seed(seed),
            Effort::Fast => OpnormConfig { refine_tol: Some(1e-3), refine_cells: 3_000, ..OpnormConfig::fast(seed) },
            Effort::Estimate => OpnormConfig { starts: 3, max_iter: 60, ..OpnormConfig::fast(seed) },
        }
    }
}

/// Operator norm bracket. Wide matrices with at most three rows are also
/// bounded through the transpose on `l^{p'}`, where the sphere subdivision applies.
pub fn op_bounds(a: &Matrix, p: PExponent, effort: Effort, seed: u64) -> Bounds {
    let cfg = effort.opnorm(seed);
    let mut b = opnorm_bounds(a, p, &cfg).expect("opnorm of a finite matrix");
    if a.cols() > 3 && (2..=3).contains(&a.rows()) && !p.is_two() {
        let t = opnorm_bounds(&a.transpose(), p.conjugate_exponent(), &cfg).expect("opnorm of a finite matrix");
        b.lower_upper(t.upper, t.upper_method);
    }
    b
}

fn op_upper(a: &Matrix, p: PExponent, effort: Effort, seed: u64) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    if effort == Effort::Estimate {
        return op_estimate(a, p, seed);
    }
    op_bounds(a, p, effort, seed).upper
}

/// Cheap estimate (not certified) for search objectives.
fn op_estimate(a: &Matrix, p: PExponent, seed: u64) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let cfg = OpnormConfig { starts: 3, max_iter: 60, ..OpnormConfig::fast(seed) };
    boyd_lower_cfg(a, p, &cfg).lower
}

/// `[u_ij]` in `M_n(X)` stored as coefficient matrices `U_k` with
/// `u_ij = sum_k (U_k)_ij e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOverSpace {
    n: usize,
    coeffs: Vec<Matrix>,
}

impl MatrixOverSpace {
    pub fn new(coeffs: Vec<Matrix>) -> Result<Self> {
        let n = coeffs.first().map(Matrix::rows).ok_or_else(|| Error::InvalidParameter("no coefficients".into()))?;
        for c in &coeffs {
            if c.rows() != n || c.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.rows().max(c.cols()) });
            }
        }
        if n == 0 {
            return Err(Error::InvalidParameter("matrix size must be >= 1".into()));
        }
        Ok(MatrixOverSpace { n, coeffs })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        MatrixOverSpace { n, coeffs: vec![Matrix::zeros(n, n); dim] }
    }

    /// From an `n x n` array of vectors of a common dimension.
    pub fn from_entries(entries: &[Vec<Vector>]) -> Result<Self> {
        let n = entries.len();
        let dim = entries.first().and_then(|r| r.first()).map(Vector::dim).unwrap_or(0);
        if n == 0 || dim == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let mut out = Self::zeros(n, dim);
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, v) in row.iter().enumerate() {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
                }
                for k in 0..dim {
                    out.coeffs[k][(i, j)] = v[k];
                }
            }
        }
        Ok(out)
    }

    /// `[α_ij v]`.
    pub fn scalar(alpha: &Matrix, v: &Vector) -> Self {
        MatrixOverSpace { n: alpha.rows(), coeffs: v.iter().map(|&x| alpha.scale(x)).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Self {
        MatrixOverSpace { n, coeffs: (0..dim).map(|_| Matrix::random(n, n, rng)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    pub fn entry(&self, i: usize, j: usize) -> Vector {
        Vector(self.coeffs.iter().map(|c| c[(i, j)]).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Matrix::is_zero)
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixOverSpace { n: self.n, coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// `u ⊕ v`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(MatrixOverSpace {
            n: self.n + other.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| direct_sum(a, b)).collect(),
        })
    }

    /// `α u β` for `α: m x n`, `β: n x m`.
    pub fn sandwich(&self, alpha: &Matrix, beta: &Matrix) -> Result<Self> {
        if alpha.cols() != self.n || beta.rows() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: alpha.cols() });
        }
        if alpha.rows() != beta.cols() {
            return Err(Error::DimensionMismatch { expected: alpha.rows(), got: beta.cols() });
        }
        Ok(MatrixOverSpace {
            n: alpha.rows(),
            coeffs: self.coeffs.iter().map(|c| alpha.matmul(c).matmul(beta)).collect(),
        })
    }

    /// `[φ(u_ij)] = sum_k φ_k U_k`.
    pub fn apply(&self, phi: &[C64]) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for (c, &f) in self.coeffs.iter().zip(phi) {
            if f != ZERO {
                m.add_scaled(c, f);
            }
        }
        m
    }

    /// `T^{(n)} u` for `T` given by a `dim W x dim X` matrix.
    pub fn map(&self, t: &Matrix) -> Result<Self> {
        if t.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.cols() });
        }
        let coeffs = (0..t.rows()).map(|l| self.apply(t.row(l))).collect();
        Ok(MatrixOverSpace { n: self.n, coeffs })
    }

    /// `sum_k U_k ⊗ J_k`, the block matrix `[J(u_ij)]`.
    pub fn amplify(&self, maps: &[Matrix]) -> Matrix {
        amplify(&self.coeffs, maps)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<Vec<Vec<C64>>> =
            (0..self.n).map(|i| (0..self.n).map(|j| self.entry(i, j).0).collect()).collect();
        serde_json::json!({ "entries": entries })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            entries: Vec<Vec<Vec<C64>>>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        let entries: Vec<Vec<Vector>> =
            raw.entries.into_iter().map(|r| r.into_iter().map(Vector).collect()).collect();
        Self::from_entries(&entries)
    }
}

/// `sum_k A_k ⊗ B_k`.
pub(crate) fn amplify(a: &[Matrix], b: &[Matrix]) -> Matrix {
    let mut out = Matrix::zeros(a[0].rows() * b[0].rows(), a[0].cols() * b[0].cols());
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            out.add_scaled(&x.kron(y), ONE);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum StructureKind {
    Min,
    /// `x -> sum_k x_k J_k` into `B(l^p(N))`.
    Concrete { maps: Vec<Matrix> },
    /// Representations are searched up to dimension `cap_m` (default `n * dim X`).
    MaxLp { cap_m: Option<usize>, starts: usize },
    /// `q` is the `dim Z x dim V` matrix of the quotient map from the parent's space.
    Quotient { parent: Box<POStructure>, q: Matrix },
    /// Matrix norms of `CB(V, B(l^p(n)))`.
    Dual { parent: Box<POStructure> },
}

/// A matrix-norm structure on `space`.
#[derive(Clone, Debug, PartialEq)]
pub struct POStructure {
    pub space: Space,
    pub p: PExponent,
    pub kind: StructureKind,
    /// Amplification levels searched for cb norms (dual structures).
    pub cb_levels: usize,
    pub seed: u64,
}

/// Representation dimensions above this are not searched: the ascent only
/// certifies images of size up to 3 tightly.
pub const REP_SEARCH_MAX_M: usize = 3;

impl POStructure {
    fn with_kind(space: Space, p: PExponent, kind: StructureKind) -> Self {
        POStructure { space, p, kind, cb_levels: 3, seed: 0x5eed }
    }

    pub fn min(space: Space, p: PExponent) -> Self {
        Self::with_kind(space, p, StructureKind::Min)
    }

    pub fn maxlp(space: Space, p: PExponent) -> Self {
        Self::with_kind(space, p, StructureKind::MaxLp { cap_m: None, starts: 8 })
    }

    /// The structure inherited from an injective family of `N x N` matrices;
    /// the Banach norm of `x` is `||sum_k x_k J_k||`.
    pub fn concrete(p: PExponent, maps: Vec<Matrix>) -> Result<Self> {
        let space = Space::embedded(p, maps.clone())?;
        Ok(Self::with_kind(space, p, StructureKind::Concrete { maps }))
    }

    /// `space` must be the Banach quotient of the parent's space by `ker q`.
    pub fn quotient(parent: POStructure, q: Matrix, space: Space) -> Result<Self> {
        if q.cols() != parent.space.dim() {
            return Err(Error::DimensionMismatch { expected: parent.space.dim(), got: q.cols() });
        }
        if q.rows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: q.rows() });
        }
        if rank(&q, 1e-10) < q.rows() {
            return Err(Error::InvalidParameter("quotient map must be surjective".into()));
        }
        let p = parent.p;
        Ok(Self::with_kind(space, p, StructureKind::Quotient { parent: Box::new(parent), q }))
    }

    pub fn dual(parent: POStructure) -> Self {
        let space = Space::dual(parent.space.clone());
        let p = parent.p;
        Self::with_kind(space, p, StructureKind::Dual { parent: Box::new(parent) })
    }

    /// `B(l^p(k))` with its identity embedding.
    pub fn operators(p: PExponent, k: usize) -> Self {
        let maps = (0..k * k).map(|i| Matrix::unit(k, k, i / k, i % k)).collect();
        Self::concrete(p, maps).expect("matrix units are independent")
    }

    /// The trace-duality predual of `B(l^p(k))`: coordinates `t_{rk+s}` pair
    /// with `A_rs`.
    pub fn nuclear(p: PExponent, k: usize) -> Self {
        Self::dual(Self::operators(p, k))
    }

    /// `l^1(k)` as the quotient of the nuclear space by `t -> diag(t)`.
    pub fn nuclear_diagonal_quotient(p: PExponent, k: usize) -> Self {
        let mut q = Matrix::zeros(k, k * k);
        for i in 0..k {
            q[(i, i * k + i)] = ONE;
        }
        Self::quotient(Self::nuclear(p, k), q, Space::l1(k).expect("k >= 1")).expect("diag is surjective")
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        if let StructureKind::MaxLp { cap_m, .. } = &mut self.kind {
            *cap_m = Some(cap);
        }
        self
    }

    pub fn with_starts(mut self, s: usize) -> Self {
        if let StructureKind::MaxLp { starts, .. } = &mut self.kind {
            *starts = s;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cb_levels(mut self, levels: usize) -> Self {
        self.cb_levels = levels.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            StructureKind::Min => "min",
            StructureKind::Concrete { .. } => "concrete",
            StructureKind::MaxLp { .. } => "maxlp",
            StructureKind::Quotient { .. } => "quotient",
            StructureKind::Dual { .. } => "dual",
        }
    }

    /// Whether every bounded map out of this structure into a space acting
    /// on `L^p` is completely bounded with the same norm.
    pub fn is_maximal_type(&self) -> bool {
        match &self.kind {
            StructureKind::MaxLp { .. } => true,
            // complete quotients of maximal-type structures are maximal type
            StructureKind::Quotient { parent, .. } => parent.is_maximal_type(),
            // duals of min structures carry the maximal structure on l^p
            StructureKind::Dual { parent } => matches!(parent.kind, StructureKind::Min),
            _ => false,
        }
    }

    /// Whether this structure is realised on some `L^p` space (targets of
    /// this kind get `cb = norm` out of maximal-type sources).
    pub fn acts_on_lp(&self) -> bool {
        !matches!(self.kind, StructureKind::Quotient { .. })
    }

    fn check(&self, u: &MatrixOverSpace) -> Result<()> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.dim() });
        }
        Ok(())
    }

    /// Bracket of `||u||_n`.
    pub fn matrix_norm(&self, u: &MatrixOverSpace) -> Result<Bounds> {
        self.check(u)?;
        Ok(self.norm_with(u, Effort::Full))
    }

    pub fn norm_with(&self, u: &MatrixOverSpace, effort: Effort) -> Bounds {
        if u.is_zero() {
            return Bounds::zero();
        }
        match &self.kind {
            StructureKind::Min => min_norm(&self.space, self.p, u, effort, self.seed),
            StructureKind::Concrete { maps } => op_bounds(&u.amplify(maps), self.p, effort, self.seed),
            StructureKind::MaxLp { cap_m, starts } => self.maxlp_norm(u, *cap_m, *starts, effort),
            StructureKind::Quotient { parent, q } => self.quotient_norm(parent, q, u, effort),
            StructureKind::Dual { parent } => cbmaps::dual_structure_norm(parent, u, self.cb_levels, effort),
        }
    }

    /// Upper side only, skipping lower-bound searches where they are costly.
    pub fn norm_upper(&self, u: &MatrixOverSpace, effort: Effort) -> f64 {
        if u.is_zero() {
            return 0.0;
        }
        match &self.kind {
            StructureKind::Min if self.space.norming_set_of().is_none() && u.n > 1 => {
                generic_upper(&self.space, self.p, u, effort, self.seed).0
            }
            StructureKind::MaxLp { .. } if u.n > 1 => generic_upper(&self.space, self.p, u, effort, self.seed).0,
            StructureKind::Quotient { parent, q } => self.quotient_upper(parent, q, u, effort).0,
            StructureKind::Dual { parent } => cbmaps::dual_structure_upper(parent, u, effort).0,
            _ => self.norm_with(u, effort).upper,
        }
    }

    fn maxlp_norm(&self, u: &MatrixOverSpace, cap_m: Option<usize>, starts: usize, effort: Effort) -> Bounds {
        if u.n == 1 {
            // level one is the Banach norm: scalar contractions attain it
            return self.space.norm_b(&u.entry(0, 0));
        }
        let (upper, upper_method) = generic_upper(&self.space, self.p, u, effort, self.seed);
        let mut b = functional_lower(&self.space, self.p, u, effort, self.seed);
        b.upper = f64::INFINITY;
        b.lower_upper(upper, upper_method);
        let cap = cap_m.unwrap_or(u.n * self.dim()).min(REP_SEARCH_MAX_M);
        let starts = if effort == Effort::Full { starts } else { starts.min(2) };
        let verts = self.space.ball_vertices();
        let e_dual: Vec<f64> =
            (0..self.dim()).map(|k| self.space.dual_norm_upper(&Vector::basis(self.dim(), k))).collect();
        let p = self.p;
        let seed = self.seed;
        let constraint = |a: &[Matrix], eff: Effort| -> f64 {
            match &verts {
                // the unit ball is the absolutely convex hull of the vertices
                Some(vs) => vs.iter().map(|v| op_upper(&combine(a, v), p, eff, seed)).fold(0.0, f64::max),
                // ||π(x)|| <= sum_k |x_k| ||A_k|| <= ||x|| sum_k ||e_k*|| ||A_k||
                None => a.iter().zip(&e_dual).map(|(ak, w)| w * op_upper(ak, p, eff, seed)).sum(),
            }
        };
        for m in 2..=cap {
            if let Some((v, _)) = rep_search(u.coeffs(), m, starts, &constraint, p, derive(seed, m as u64), effort) {
                b.raise_lower(v, "representation", None);
            }
        }
        b
    }

    fn quotient_upper(&self, parent: &POStructure, q: &Matrix, u: &MatrixOverSpace, effort: Effort) -> (f64, &'static str) {
        let (mut best, mut method) = generic_upper(&self.space, self.p, u, effort, self.seed);
        let lift = lift_through(q, u);
        let via = parent.norm_upper(&lift, effort);
        if via < best {
            best = via;
            method = "lift";
        }
        (best, method)
    }

    fn quotient_norm(&self, parent: &POStructure, q: &Matrix, u: &MatrixOverSpace, effort: Effort) -> Bounds {
        let (upper, upper_method) = self.quotient_upper(parent, q, u, effort);
        let mut b = Bounds::new(0.0, f64::INFINITY, "none", "none");
        b.lower_upper(upper, upper_method);
        // functionals ψ on Z with ||ψ ∘ q|| <= 1 are complete contractions
        let qt = q.transpose();
        let pspace = &parent.space;
        let d = self.dim();
        let mut cands: Vec<Vector> = (0..d).map(|k| Vector::basis(d, k)).collect();
        cands.extend(self.space.dual_ball_sample(2 * d + 4, self.seed).into_iter().skip(d));
        if u.n == 1 {
            let x = u.entry(0, 0);
            cands.push(Vector(x.iter().map(|z| crate::linalg::phase(*z).conj()).collect()));
        }
        for psi in cands {
            let lifted = qt.matvec(&psi);
            let dn = pspace.dual_norm_upper(&lifted);
            if !(dn > 0.0 && dn.is_finite()) {
                continue;
            }
            let v = op_bounds(&u.apply(&psi), self.p, effort, self.seed).lower / dn;
            b.raise_lower(v, "quotient-functional", None);
        }
        if let (StructureKind::Dual { parent: inner }, true) = (&parent.kind, u.n > 1) {
            // maps T on Z with T∘q completely contractive: T∘q corresponds to
            // [q^T b_rs] in the unit ball of M_m of the predual structure
            let p = self.p;
            let constraint = |a: &[Matrix], eff: Effort| -> f64 {
                let lifted: Vec<Matrix> = (0..q.cols())
                    .map(|cidx| {
                        let mut m = Matrix::zeros(a[0].rows(), a[0].cols());
                        for (k, ak) in a.iter().enumerate() {
                            if q[(k, cidx)] != ZERO {
                                m.add_scaled(ak, q[(k, cidx)]);
                            }
                        }
                        m
                    })
                    .collect();
                inner.norm_upper(&MatrixOverSpace { n: a[0].rows(), coeffs: lifted }, eff)
            };
            let starts = if effort != Effort::Full { 2 } else { 8 };
            for m in 2..=(u.n * d).min(REP_SEARCH_MAX_M) {
                if let Some((v, _)) = rep_search(u.coeffs(), m, starts, &constraint, p, derive(self.seed, 0x9 + m as u64), effort) {
                    b.raise_lower(v, "quotient-representation", None);
                }
            }
        }
        b
    }

    pub fn to_spec(&self) -> StructureSpec {
        let maps = |ms: &[Matrix]| -> Vec<Vec<Vec<C64>>> {
            ms.iter().map(|m| (0..m.rows()).map(|i| m.row(i).to_vec()).collect()).collect()
        };
        let mut spec = StructureSpec {
            kind: self.kind_name().into(),
            p: self.p.value(),
            space: None,
            maps: None,
            cap_m: None,
            starts: None,
            parent: None,
            q: None,
        };
        match &self.kind {
            StructureKind::Min => spec.space = Some(SpaceSpec::from_space(&self.space)),
            StructureKind::Concrete { maps: ms } => spec.maps = Some(maps(ms)),
            StructureKind::MaxLp { cap_m, starts } => {
                spec.space = Some(SpaceSpec::from_space(&self.space));
                spec.cap_m = *cap_m;
                spec.starts = Some(*starts);
            }
            StructureKind::Quotient { parent, q } => {
                spec.space = Some(SpaceSpec::from_space(&self.space));
                spec.parent = Some(Box::new(parent.to_spec()));
                spec.q = Some(maps(std::slice::from_ref(q)).remove(0));
            }
            StructureKind::Dual { parent } => spec.parent = Some(Box::new(parent.to_spec())),
        }
        spec
    }
}

/// `sum_k v_k A_k`.
fn combine(a: &[Matrix], v: &[C64]) -> Matrix {
    let mut m = Matrix::zeros(a[0].rows(), a[0].cols());
    for (ak, &vk) in a.iter().zip(v) {
        if vk != ZERO {
            m.add_scaled(ak, vk);
        }
    }
    m
}

/// Minimum-norm preimage of `u` under `q^{(n)}`.
fn lift_through(q: &Matrix, u: &MatrixOverSpace) -> MatrixOverSpace {
    let pinv: Vec<Vector> = (0..q.rows()).map(|k| least_squares(q, &Vector::basis(q.rows(), k))).collect();
    let coeffs = (0..q.cols())
        .map(|c| {
            let mut m = Matrix::zeros(u.n, u.n);
            for (k, col) in pinv.iter().enumerate() {
                if col[c] != ZERO {
                    m.add_scaled(&u.coeffs[k], col[c]);
                }
            }
            m
        })
        .collect();
    MatrixOverSpace { n: u.n, coeffs }
}

/// Lower bound `sup_φ ||[φ(u_ij)]||` over certified dual-ball functionals,
/// valid for every structure since min is the smallest one.
fn functional_lower(space: &Space, p: PExponent, u: &MatrixOverSpace, effort: Effort, seed: u64) -> Bounds {
    let d = space.dim();
    let count = if effort != Effort::Full { d + 2 } else { 4 * d + 8 };
    let mut cands = space.dual_ball_sample(count, seed);
    let mut best = (0.0, Vector::zeros(d));
    for phi in &cands {
        let v = op_estimate(&u.apply(phi), p, seed);
        if v > best.0 {
            best = (v, phi.clone());
        }
    }
    if effort == Effort::Full {
        let (_, refined) = crate::spaces::maximize_ratio(
            d,
            vec![best.1.clone()],
            |phi| op_estimate(&u.apply(phi), p, seed),
            |phi| space.dual_norm_b(phi).upper,
            300,
        );
        let dn = space.dual_norm_b(&refined).upper;
        if dn > 0.0 && dn.is_finite() {
            cands.push(refined.scale_real(1.0 / dn));
        }
    }
    // certify the best few candidates with the full bracket
    let mut scored: Vec<(f64, Vector)> = cands.into_iter().map(|phi| (op_estimate(&u.apply(&phi), p, seed), phi)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = Bounds::new(0.0, f64::INFINITY, "none", "none");
    for (_, phi) in scored.into_iter().take(3) {
        let v = op_bounds(&u.apply(&phi), p, effort, seed).lower;
        out.raise_lower(v, "functional", Some(phi));
    }
    out
}

/// `sup_φ` over the dual ball; exact up to opnorm brackets when the space has
/// a finite norming set.
pub fn min_norm(space: &Space, p: PExponent, u: &MatrixOverSpace, effort: Effort, seed: u64) -> Bounds {
    if u.n == 1 {
        return space.norm_b(&u.entry(0, 0));
    }
    if let Some(omega) = space.norming_set_of() {
        let mut out: Option<Bounds> = None;
        for w in &omega {
            let b = op_bounds(&u.apply(w), p, effort, seed);
            out = Some(match out {
                None => b,
                Some(prev) => Bounds::max_of(&prev, &b),
            });
        }
        return out.expect("nonempty norming set");
    }
    let mut b = functional_lower(space, p, u, effort, seed);
    let (upper, method) = generic_upper(space, p, u, effort, seed);
    b.lower_upper(upper, method);
    b
}

/// Upper bounds valid for every structure on `space` (they use only the
/// axioms and level-one norms): the triangle bound `sum_k ||U_k|| ||e_k||`
/// and the factorization `u = α diag(e_k/||e_k||) β`.
pub(crate) fn generic_upper(space: &Space, p: PExponent, u: &MatrixOverSpace, effort: Effort, seed: u64) -> (f64, &'static str) {
    let d = space.dim();
    let w: Vec<f64> = (0..d).map(|k| space.norm_upper(&Vector::basis(d, k))).collect();
    let tri: f64 = u.coeffs.iter().zip(&w).map(|(c, wk)| wk * op_upper(c, p, effort, seed)).sum();
    let weighted: Vec<Matrix> = u.coeffs.iter().zip(&w).map(|(c, wk)| c.scale_real(*wk)).collect();
    let fac = factorization_upper(&weighted, p, effort, seed);
    if fac < tri {
        (fac, "factorization")
    } else {
        (tri, "triangle")
    }
}

/// `inf ||α|| ||β||` over `U_k = α_k β_k`, `α = [α_1 .. α_d]`,
/// `β = [β_1; ..; β_d]`. Starts from the balanced singular value split
/// `α_k = P_k S_k^{1/2}`, `β_k = S_k^{1/2} Q_k^*` and searches over
/// `α_k M_k`, `M_k^{-1} β_k` for invertible `M_k`. Certified: the returned
/// value is a product of operator-norm upper bounds of explicit `α`, `β`.
pub fn factorization_upper(us: &[Matrix], p: PExponent, effort: Effort, seed: u64) -> f64 {
    let n = us[0].rows();
    let mut blocks: Vec<(Matrix, Matrix)> = Vec::new();
    for u in us {
        if u.is_zero() {
            continue;
        }
        let terms = svd(u);
        let r = terms.len();
        let mut a = Matrix::zeros(n, r);
        let mut b = Matrix::zeros(r, n);
        for (l, (s, uu, ww)) in terms.iter().enumerate() {
            for i in 0..n {
                a[(i, l)] = uu[i] * s.sqrt();
                b[(l, i)] = ww[i].conj() * s.sqrt();
            }
        }
        blocks.push((a, b));
    }
    let total: usize = blocks.iter().map(|(a, _)| a.cols()).sum();
    if total == 0 {
        return 0.0;
    }
    let nparams: usize = blocks.iter().map(|(a, _)| 2 * a.cols() * a.cols()).sum();
    let build = |x: &[f64]| -> Option<(Matrix, Matrix)> {
        let mut alpha = Matrix::zeros(n, total);
        let mut beta = Matrix::zeros(total, n);
        let (mut off, mut col) = (0, 0);
        for (a, b) in &blocks {
            let r = a.cols();
            let mut m = Matrix::identity(r);
            if !x.is_empty() {
                for i in 0..r {
                    for j in 0..r {
                        m[(i, j)] += crate::linalg::c(x[off], x[off + 1]);
                        off += 2;
                    }
                }
            }
            let minv = crate::linalg::inverse(&m)?;
            alpha.set_block(0, col, &a.matmul(&m));
            beta.set_block(col, 0, &minv.matmul(b));
            col += r;
        }
        Some((alpha, beta))
    };
    let cert = |x: &[f64]| -> f64 {
        match build(x) {
            Some((a, b)) => op_upper(&a, p, effort, seed) * op_upper(&b, p, effort, seed),
            None => f64::INFINITY,
        }
    };
    let mut best = cert(&[]);
    if effort == Effort::Full && !p.is_two() || (effort == Effort::Full && blocks.len() > 1) {
        let est = |x: &[f64]| -> f64 {
            match build(x) {
                Some((a, b)) => op_estimate(&a, p, seed) * op_estimate(&b, p, seed),
                None => f64::INFINITY,
            }
        };
        let (x, _) = nelder_mead(est, &vec![0.0; nparams], 0.3, 80 * nparams, 1e-10);
        best = best.min(cert(&x));
    }
    best
}

/// Largest `||sum_k U_k ⊗ A_k||` found over tuples `A_k` of `m x m` matrices
/// with `constraint(A) <= 1`, by alternating between a norming vector of the
/// amplified matrix and the polar part of the induced linear functional in
/// each `A_k`. The returned value is certified: the full operator-norm lower
/// bound divided by the full `constraint` upper bound.
pub(crate) fn rep_search(
    us: &[Matrix],
    m: usize,
    starts: usize,
    constraint: &dyn Fn(&[Matrix], Effort) -> f64,
    p: PExponent,
    seed: u64,
    effort: Effort,
) -> Option<(f64, Vec<Matrix>)> {
    let n = us[0].rows();
    let d = us.len();
    let iters = if effort != Effort::Full { 4 } else { 10 };
    let fast = OpnormConfig { starts: 3, max_iter: 100, ..OpnormConfig::fast(seed) };
    let normalized = |a: &mut Vec<Matrix>| -> bool {
        let c = constraint(a, Effort::Estimate);
        if !(c > 0.0 && c.is_finite()) {
            return false;
        }
        for ak in a.iter_mut() {
            *ak = ak.scale_real(1.0 / c);
        }
        true
    };
    let mut best: Option<(f64, Vec<Matrix>)> = None;
    for s in 0..starts {
        let mut rng = rng_for(seed, s as u64);
        let mut a: Vec<Matrix> = if s == 0 && m == n {
            us.iter().map(|u| Matrix::from_vec(n, n, u.data().iter().map(|z| z.conj()).collect()).expect("square")).collect()
        } else {
            (0..d).map(|_| Matrix::random(m, m, &mut rng)).collect()
        };
        for _ in 0..iters {
            if !normalized(&mut a) {
                break;
            }
            let big = amplify(us, &a);
            let bl = boyd_lower_cfg(&big, p, &fast);
            if best.as_ref().map_or(true, |b| bl.lower > b.0) {
                best = Some((bl.lower, a.clone()));
            }
            let x = match bl.witness {
                Some(x) => x,
                None => break,
            };
            let phi = duality_map(&big.matvec(&x), p.value());
            let mut next = Vec::with_capacity(d);
            for u in us {
                // G_ab = sum_ij conj(phi_(i,a)) U_ij x_(j,b)
                let mut g = Matrix::zeros(m, m);
                for i in 0..n {
                    for j in 0..n {
                        let uij = u[(i, j)];
                        if uij == ZERO {
                            continue;
                        }
                        for aa in 0..m {
                            let f = phi[i * m + aa].conj() * uij;
                            for bb in 0..m {
                                g[(aa, bb)] += f * x[j * m + bb];
                            }
                        }
                    }
                }
                let mut polar = Matrix::zeros(m, m);
                for (_, uu, ww) in svd(&g) {
                    for aa in 0..m {
                        for bb in 0..m {
                            polar[(aa, bb)] += uu[aa].conj() * ww[bb];
                        }
                    }
                }
                next.push(polar);
            }
            // bring each term to its own unit ball before the joint normalisation
            for k in 0..d {
                let mut single = vec![Matrix::zeros(m, m); d];
                single[k] = next[k].clone();
                let c = constraint(&single, Effort::Estimate);
                if c > 0.0 && c.is_finite() {
                    next[k] = next[k].scale_real(1.0 / c);
                }
            }
            a = next;
        }
    }
    let (_, a) = best?;
    let c = constraint(&a, effort);
    if !(c > 0.0 && c.is_finite()) {
        return None;
    }
    let a: Vec<Matrix> = a.iter().map(|x| x.scale_real(1.0 / c)).collect();
    let v = op_bounds(&amplify(us, &a), p, effort, seed).lower;
    Some((v, a))
}

/// Randomized checks of the direct-sum and bimodule axioms at bracket level.
pub fn check_axioms(s: &POStructure, samples: usize, seed: u64, tol: f64) -> Vec<Check> {
    let d = s.dim();
    let per_sample = |t: usize| -> Vec<Check> {
        let mut out = Vec::with_capacity(3);
        let mut rng = rng_for(derive(seed, 0xa1), t as u64);
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        let u = MatrixOverSpace::random(n, d, &mut rng);
        let v = MatrixOverSpace::random(m, d, &mut rng).scale(crate::linalg::c(rng.gen_range(0.2..2.0), 0.0));
        let w = u.direct_sum(&v).expect("same dimension");
        let bu = s.norm_with(&u, Effort::Full);
        let bv = s.norm_with(&v, Effort::Full);
        let bw = s.norm_with(&w, Effort::Full);
        let mx = Bounds::max_of(&bu, &bv);
        out.push(Check::at_most(format!("d_inf/{t:03}/sum<=max"), &bw, &mx, tol));
        out.push(Check::at_most(format!("d_inf/{t:03}/max<=sum"), &mx, &bw, tol));
        let k = rng.gen_range(1..=2);
        let (alpha, beta) = if t == 0 {
            (Matrix::identity(n), Matrix::identity(n))
        } else {
            (Matrix::random(k, n, &mut rng), Matrix::random(n, k, &mut rng))
        };
        let sw = u.sandwich(&alpha, &beta).expect("conformal");
        let lhs = s.norm_with(&sw, Effort::Full);
        let na = op_bounds(&alpha, s.p, Effort::Full, seed);
        let nb = op_bounds(&beta, s.p, Effort::Full, seed);
        let rhs = Bounds::new(na.lower * bu.lower * nb.lower, na.upper * bu.upper * nb.upper, "product", "product");
        out.push(Check::at_most(format!("m_p/{t:03}"), &lhs, &rhs, tol));
        out
    };
    (0..samples).into_par_iter().flat_map_iter(per_sample).collect()
}

/// Structure JSON: `{"kind": "min"|"concrete"|"maxlp"|"quotient"|"dual", "p": ..,
/// "space": <space>, ...}`. Concrete takes `maps` (list of square matrices as
/// rows of `[re, im]`); maxlp optional `cap_m`, `starts`; quotient takes
/// `parent`, `q` (a `dim Z x dim V` matrix) and the quotient `space`; dual takes `parent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub kind: String,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<Vec<Vec<C64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Box<StructureSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<C64>>>,
}

impl StructureSpec {
    pub fn build(&self) -> Result<POStructure> {
        let p = PExponent::new(self.p)?;
        let space = || -> Result<Space> {
            self.space.as_ref().ok_or_else(|| Error::Malformed(format!("{} structure needs `space`", self.kind)))?.build()
        };
        let parent = || -> Result<POStructure> {
            let ps = self.parent.as_ref().ok_or_else(|| Error::Malformed(format!("{} structure needs `parent`", self.kind)))?;
            let built = ps.build()?;
            if built.p != p {
                return Err(Error::Malformed("parent exponent differs".into()));
            }
            Ok(built)
        };
        match self.kind.as_str() {
            "min" => Ok(POStructure::min(space()?, p)),
            "maxlp" => {
                let mut s = POStructure::maxlp(space()?, p);
                if let Some(c) = self.cap_m {
                    if c == 0 {
                        return Err(Error::CapExceeded("cap_m must be >= 1".into()));
                    }
                    s = s.with_cap(c);
                }
                if let Some(st) = self.starts {
                    s = s.with_starts(st.max(1));
                }
                Ok(s)
            }
            "concrete" => {
                let maps = self.maps.as_ref().ok_or_else(|| Error::Malformed("concrete structure needs `maps`".into()))?;
                let maps = maps.iter().map(|m| Matrix::from_rows(m.clone())).collect::<Result<Vec<_>>>()?;
                POStructure::concrete(p, maps)
            }
            "quotient" => {
                let q = self.q.as_ref().ok_or_else(|| Error::Malformed("quotient structure needs `q`".into()))?;
                POStructure::quotient(parent()?, Matrix::from_rows(q.clone())?, space()?)
            }
            "dual" => Ok(POStructure::dual(parent()?)),
            other => Err(Error::Malformed(format!("unknown structure kind `{other}`"))),
        }
    }

    pub fn from_json(s: &str) -> Result<POStructure> {
        let spec: StructureSpec = serde_json::from_str(s)?;
        spec.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::check::Status;
    use crate::linalg::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64) -> PExponent {
        PExponent::new(x).unwrap()
    }

    #[test]
    fn min_linf_is_max_of_point_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = MatrixOverSpace::random(2, 2, &mut rng);
        let s = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let b = s.matrix_norm(&u).unwrap();
        let cfg = OpnormConfig::default();
        let a = opnorm_bounds(&u.coeffs()[0], p(3.0), &cfg).unwrap();
        let bb = opnorm_bounds(&u.coeffs()[1], p(3.0), &cfg).unwrap();
        let want = Bounds::max_of(&a, &bb);
        assert!(b.overlaps(&want, 1e-9));
        assert!(b.rel_width() < 1e-5);
    }

    #[test]
    fn level_one_is_banach_norm() {
        let x = Vector(vec![c(1.0, 1.0), c(-2.0, 0.5)]);
        let u = MatrixOverSpace::from_entries(&[vec![x.clone()]]).unwrap();
        for s in [
            POStructure::min(Space::l1(2).unwrap(), p(3.0)),
            POStructure::maxlp(Space::l1(2).unwrap(), p(3.0)),
            POStructure::min(Space::lp(2.5, 2).unwrap(), p(3.0)),
        ] {
            let want = s.space.norm(&x).unwrap();
            let got = s.matrix_norm(&u).unwrap();
            assert!(got.overlaps(&want, 1e-9), "{}: {got:?} vs {want:?}", s.kind_name());
            assert!(got.width() < 1e-6);
        }
    }

    #[test]
    fn scalar_matrix_is_cross() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = Matrix::random(2, 2, &mut rng);
        let v = Vector::random(3, &mut rng);
        let u = MatrixOverSpace::scalar(&alpha, &v);
        let na = op_bounds(&alpha, p(3.0), Effort::Full, 0);
        for space in [Space::linf(3).unwrap(), Space::lp(1.5, 3).unwrap()] {
            let nv = space.norm(&v).unwrap().upper;
            let s = POStructure::min(space, p(3.0));
            let b = s.matrix_norm(&u).unwrap();
            assert!(b.contains(na.lower * nv, 1e-4 * nv) || b.contains(na.upper * nv, 1e-4 * nv), "{b:?}");
        }
    }

    #[test]
    fn concrete_diagonal_scalar() {
        let maps = (0..3).map(|k| Matrix::unit(3, 3, k, k)).collect();
        let s = POStructure::concrete(p(3.0), maps).unwrap();
        let u = MatrixOverSpace::from_entries(&[vec![Vector(vec![c(0.5, 0.0), c(0.0, -2.0), c(1.0, 0.0)])]]).unwrap();
        let b = s.matrix_norm(&u).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
    }

    // Exhaustive two-sided oracle for U_1 = E_11, U_2 = E_22 on max_{L^p} l^1(2):
    // u = E_11 ⊗ e_1 + E_22 ⊗ e_2 = diag(e_1, e_2), so ||u|| <= max ||e_k|| = 1
    // by the direct-sum axiom, and >= 1 from the scalar functional (1, 1)
    // applied entrywise (giving the identity). The value is exactly 1.
    #[test]
    fn maxlp_diagonal_units() {
        let u = MatrixOverSpace::new(vec![Matrix::unit(2, 2, 0, 0), Matrix::unit(2, 2, 1, 1)]).unwrap();
        let s = POStructure::maxlp(Space::l1(2).unwrap(), p(3.0));
        let b = s.matrix_norm(&u).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-6 && (b.upper - 1.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn maxlp_dominates_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let space = Space::l1(2).unwrap();
        for _ in 0..3 {
            let u = MatrixOverSpace::random(2, 2, &mut rng);
            let mn = POStructure::min(space.clone(), p(3.0)).matrix_norm(&u).unwrap();
            let mx = POStructure::maxlp(space.clone(), p(3.0)).matrix_norm(&u).unwrap();
            assert!(mn.lower <= mx.upper + 1e-9);
            assert!(mx.lower >= mn.lower - 1e-9);
            assert!(mx.lower <= mx.upper);
        }
    }

    #[test]
    fn nuclear_quotient_unit_vector() {
        let s = POStructure::nuclear_diagonal_quotient(p(3.0), 2);
        let u = MatrixOverSpace::from_entries(&[vec![Vector::basis(2, 0)]]).unwrap();
        let b = s.matrix_norm(&u).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-6 && (b.upper - 1.0).abs() < 1e-6, "{b:?}");
        assert_eq!(s.matrix_norm(&MatrixOverSpace::zeros(2, 2)).unwrap().upper, 0.0);
    }

    #[test]
    fn quotient_by_identity_matches_parent() {
        let parent = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let s = POStructure::quotient(parent.clone(), Matrix::identity(2), Space::linf(2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = MatrixOverSpace::random(2, 2, &mut rng);
        let a = parent.matrix_norm(&u).unwrap();
        let b = s.matrix_norm(&u).unwrap();
        assert!(a.overlaps(&b, 1e-9), "{a:?} {b:?}");
        assert!(b.rel_width() < 1e-5);
    }

    #[test]
    fn axioms_on_min_linf() {
        let s = POStructure::min(Space::linf(2).unwrap(), p(3.0));
        let checks = check_axioms(&s, 6, 3, 1e-6);
        assert!(checks.iter().all(|c| c.status == Status::Pass), "{checks:?}");
    }

    #[test]
    fn structure_json_roundtrip() {
        let json = r#"{"kind":"maxlp","p":3.0,"space":{"kind":"l1","dim":2},"cap_m":2}"#;
        let s = StructureSpec::from_json(json).unwrap();
        assert_eq!(s.kind_name(), "maxlp");
        let again = s.to_spec().build().unwrap();
        assert_eq!(again, s);
        let q = POStructure::nuclear_diagonal_quotient(p(3.0), 2);
        let text = serde_json::to_string(&q.to_spec()).unwrap();
        assert_eq!(StructureSpec::from_json(&text).unwrap(), q);
        assert!(StructureSpec::from_json(r#"{"kind":"nope","p":3.0}"#).is_err());
        assert!(StructureSpec::from_json(r#"{"kind":"min","p":3.0}"#).is_err());
    }

    #[test]
    fn sandwich_and_sum_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = MatrixOverSpace::random(2, 3, &mut rng);
        let v = MatrixOverSpace::random(1, 3, &mut rng);
        assert_eq!(u.direct_sum(&v).unwrap().n(), 3);
        let a = Matrix::random(1, 2, &mut rng);
        let b = Matrix::random(2, 1, &mut rng);
        assert_eq!(u.sandwich(&a, &b).unwrap().n(), 1);
        assert!(u.sandwich(&b, &a).is_err());
        assert!(u.direct_sum(&MatrixOverSpace::zeros(1, 2)).is_err());
    }
}
