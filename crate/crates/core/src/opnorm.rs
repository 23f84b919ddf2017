//! Two-sided bounds for the operator norm of a matrix on `l^p(n)`, `1 < p < inf`.
//!
//! The lower side comes from a multi-start fixed-point iteration and always
//! carries a witness vector. The upper side is the minimum of several
//! independently certified bounds: Riesz-Thorin interpolation, a Schur test on
//! the entrywise modulus, a net over the unit sphere (small domains only) and
//! the exact closed form at `p = 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::linalg::{
    c, opnorm_closed, phase, top_singular, ClosedNorm, Matrix, PExponent, Vector, C64, EIGEN_TOL,
    ONE, ZERO,
};
use crate::seeding::rng_for;

/// Largest real dimension the sphere net may enumerate.
pub const GRID_REAL_DIM_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpnormConfig {
    pub starts: usize,
    pub max_iter: usize,
    pub stall_tol: f64,
    pub seed: u64,
    /// Relative target width of the adaptive sphere subdivision used for
    /// 2- and 3-column matrices; `None` disables it.
    pub refine_tol: Option<f64>,
    /// Cell budget of the subdivision.
    pub refine_cells: usize,
    /// Split permutation-block-diagonal matrices into their blocks.
    pub split_blocks: bool,
}

impl Default for OpnormConfig {
    fn default() -> Self {
        OpnormConfig {
            starts: 32,
            max_iter: 500,
            stall_tol: 1e-12,
            seed: 0,
            refine_tol: Some(1e-6),
            refine_cells: 200_000,
            split_blocks: true,
        }
    }
}

impl OpnormConfig {
    /// Lower-side only: no nets, fewer starts. For inner loops of searches.
    pub fn fast(seed: u64) -> Self {
        OpnormConfig {
            starts: 6,
            max_iter: 200,
            stall_tol: 1e-10,
            seed,
            refine_tol: None,
            refine_cells: 0,
            split_blocks: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `Phi_p(y)_i = |y_i|^(p-1) * y_i / |y_i|` (zero where `y_i = 0`).
pub fn duality_map(y: &[C64], p: f64) -> Vector {
    Vector(
        y.iter()
            .map(|&z| {
                let r = z.norm();
                if r == 0.0 {
                    ZERO
                } else {
                    z * (r.powf(p - 2.0))
                }
            })
            .collect(),
    )
}

fn quotient(a: &Matrix, x: &[C64], p: f64) -> f64 {
    let nx = crate::linalg::lp_norm_unchecked(x, p, None);
    if nx == 0.0 {
        return 0.0;
    }
    crate::linalg::lp_norm_unchecked(&a.matvec(x), p, None) / nx
}

fn normalize(x: &mut Vector, p: f64) -> bool {
    let n = x.norm_p(p);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    for z in x.iter_mut() {
        *z /= n;
    }
    true
}

/// One run of the fixed-point iteration `x <- Phi_p'(A^* Phi_p(A x))` from `x0`.
/// Returns the best quotient seen over all iterates with its vector.
fn boyd_run(a: &Matrix, p: PExponent, x0: Vector, max_iter: usize, stall_tol: f64) -> (f64, Vector) {
    let (pv, pc) = (p.value(), p.conjugate());
    let mut x = x0;
    if !normalize(&mut x, pv) {
        return (0.0, x);
    }
    let mut best = quotient(a, &x, pv);
    let mut best_x = x.clone();
    let mut prev = best;
    for _ in 0..max_iter {
        let y = a.matvec(&x);
        let z = duality_map(&y, pv);
        let w = a.adjoint_matvec(&z);
        let mut next = duality_map(&w, pc);
        if !normalize(&mut next, pv) {
            break;
        }
        x = next;
        let q = quotient(a, &x, pv);
        if q > best {
            best = q;
            best_x = x.clone();
        }
        if (q - prev).abs() <= stall_tol * q.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = q;
    }
    (best, best_x)
}

fn starting_points(a: &Matrix, count: usize, seed: u64) -> Vec<Vector> {
    let n = a.cols();
    let mut out = Vec::with_capacity(count.max(n + 2));
    for j in 0..n {
        out.push(Vector::basis(n, j));
    }
    if n > 1 {
        out.push(top_singular(a, EIGEN_TOL).1);
        out.push(Vector(vec![ONE; n]));
    }
    let mut s = 0u64;
    while out.len() < count.max(n + 2) {
        let mut rng = rng_for(seed, s);
        out.push(Vector::random(n, &mut rng));
        s += 1;
    }
    out
}

/// Multi-start lower bound on `||A||_{B(l^p)}`. The upper side is `+inf`.
pub fn boyd_lower(a: &Matrix, p: PExponent, starts: usize, seed: u64) -> Result<Bounds> {
    if starts == 0 {
        return Err(Error::InvalidParameter("starts must be >= 1".into()));
    }
    let cfg = OpnormConfig { starts, seed, ..OpnormConfig::default() };
    Ok(boyd_lower_cfg(a, p, &cfg))
}

pub fn boyd_lower_cfg(a: &Matrix, p: PExponent, cfg: &OpnormConfig) -> Bounds {
    let n = a.cols();
    if a.is_zero() || n == 0 {
        return Bounds::new(0.0, f64::INFINITY, "zero", "unbounded")
            .with_witness(Vector::zeros(n));
    }
    let starts = starting_points(a, cfg.starts, cfg.seed);
    let runs: Vec<(f64, Vector)> = starts
        .into_par_iter()
        .map(|x0| boyd_run(a, p, x0, cfg.max_iter, cfg.stall_tol))
        .collect();
    // deterministic merge: strict improvement only, so ties keep the lowest start index
    let mut best = (f64::NEG_INFINITY, Vector::zeros(n));
    for (q, x) in runs {
        if q > best.0 {
            best = (q, x);
        }
    }
    Bounds::new(best.0, f64::INFINITY, "boyd", "unbounded").with_witness(best.1)
}

/// Riesz-Thorin bound `||A||_1^(1/p) * ||A||_inf^(1/p')`.
pub fn interp_upper(a: &Matrix, p: PExponent) -> f64 {
    let n1 = opnorm_closed(a, ClosedNorm::One);
    let ninf = opnorm_closed(a, ClosedNorm::Inf);
    if n1 == 0.0 || ninf == 0.0 {
        return 0.0;
    }
    n1.powf(1.0 / p.value()) * ninf.powf(1.0 / p.conjugate())
}

/// Schur test on `K = |A|`: for positive `u, v`, with
/// `C1 = max_i (K v^{p'})_i / u_i^{p'}` and `C2 = max_j (K^T u^p)_j / v_j^p`,
/// `||A|| <= ||K|| <= C1^{1/p'} C2^{1/p}`. Weights come from the fixed point
/// of `K` (`v = x^{1/p'}`, `u = (Kx)^{1/p'}`), where the test is sharp.
pub fn schur_upper(a: &Matrix, p: PExponent) -> f64 {
    let k = a.abs();
    if k.is_zero() {
        return 0.0;
    }
    let (pv, pc) = (p.value(), p.conjugate());
    let (_, x0) = boyd_run(&k, p, Vector(vec![ONE; k.cols()]), 400, 1e-14);
    let floor_x = 1e-9 * x0.max_abs();
    let x: Vec<f64> = x0.iter().map(|z| z.norm().max(floor_x)).collect();
    let y: Vec<f64> = k.matvec(&x.iter().map(|&t| c(t, 0.0)).collect::<Vec<_>>()).iter().map(|z| z.re).collect();
    let floor_y = 1e-9 * y.iter().cloned().fold(0.0, f64::max);
    let v: Vec<f64> = x.iter().map(|&t| t.powf(1.0 / pc)).collect();
    let u: Vec<f64> = y.iter().map(|&t| t.max(floor_y).powf(1.0 / pc)).collect();
    let mut c1 = 0.0f64;
    for i in 0..k.rows() {
        let s: f64 = (0..k.cols()).map(|j| k[(i, j)].re * v[j].powf(pc)).sum();
        c1 = c1.max(s / u[i].powf(pc));
    }
    let mut c2 = 0.0f64;
    for j in 0..k.cols() {
        let s: f64 = (0..k.rows()).map(|i| k[(i, j)].re * u[i].powf(pv)).sum();
        c2 = c2.max(s / v[j].powf(pv));
    }
    let b = c1.powf(1.0 / pc) * c2.powf(1.0 / pv);
    if b.is_finite() {
        b
    } else {
        f64::INFINITY
    }
}

/// Brute-force bracket from a net over the unit `l^p` sphere of `C^n`, `n = cols <= 3`.
///
/// Construction: by phase invariance it suffices to cover vectors with `x_1`
/// real and nonnegative, a set of real dimension `2n - 1`. Each such `x`,
/// rescaled by its largest real coordinate, lands on the boundary of the cube
/// `[0,1] x [-1,1]^{2n-2}`; rounding every real coordinate to the grid `δ Z`
/// moves it by at most `δ/2` per coordinate, i.e. `δ/√2` per complex entry,
/// so `||x̃ - y||_p <= n^{1/p} δ/√2`. Since `||x̃||_p >= 1`, renormalising both
/// points at most doubles this:
///
/// ```text
/// η = √2 · n^{1/p} · δ   (every unit x is within η of a normalised net point)
/// ```
///
/// For the maximiser `x*`, `||A|| = ||A x*|| <= max_net + ||A|| η`, giving
/// `||A|| <= max_net / (1 - η)` when `η < 1`, and also `||A|| <= max_net + U η`
/// with `U` = [`interp_upper`]. Equivalently `upper = lower (1 + L δ)` with
/// slack `L = min(√2 n^{1/p} / (1 - η), U √2 n^{1/p} / lower)`.
pub fn grid_oracle(a: &Matrix, p: PExponent, mesh: f64) -> Result<Bounds> {
    let n = a.cols();
    if 2 * n > GRID_REAL_DIM_CAP {
        return Err(Error::DimensionCap { cap: GRID_REAL_DIM_CAP, requested: 2 * n });
    }
    if !(mesh > 0.0) {
        return Err(Error::InvalidParameter(format!("mesh must be positive, got {mesh}")));
    }
    if a.is_zero() || n == 0 {
        return Ok(Bounds::exact(0.0, "grid").with_witness(Vector::zeros(n)));
    }
    let pv = p.value();
    if n == 1 {
        let v = a.column(0).norm_p(pv);
        return Ok(Bounds::exact(v, "grid").with_witness(Vector::basis(1, 0)));
    }
    let k = (1.0 / mesh).ceil() as i64;
    let delta = 1.0 / k as f64;
    let dims = 2 * n - 1;
    let lo = |d: usize| if d == 0 { 0 } else { -k };

    let mut best = 0.0f64;
    let mut best_x = Vector::zeros(n);
    let mut coords = vec![0i64; dims];
    let mut x = vec![ZERO; n];
    let mut ax = vec![ZERO; a.rows()];
    let pow_sum = |v: &[C64]| -> f64 { v.iter().map(|z| z.norm().powf(pv)).sum() };

    let faces: Vec<(usize, i64)> = std::iter::once((0usize, k))
        .chain((1..dims).flat_map(|d| [(d, -k), (d, k)]))
        .collect();
    for (fd, fv) in faces {
        for d in 0..dims {
            coords[d] = if d == fd { fv } else { lo(d) };
        }
        loop {
            x[0] = c(coords[0] as f64 * delta, 0.0);
            for i in 1..n {
                x[i] = c(coords[2 * i - 1] as f64 * delta, coords[2 * i] as f64 * delta);
            }
            a.matvec_into(&x, &mut ax);
            let r = pow_sum(&ax) / pow_sum(&x);
            if r > best {
                best = r;
                best_x = Vector(x.clone());
            }
            // odometer over the free coordinates
            let mut d = 0;
            loop {
                if d == dims {
                    break;
                }
                if d == fd {
                    d += 1;
                    continue;
                }
                if coords[d] < k {
                    coords[d] += 1;
                    break;
                }
                coords[d] = lo(d);
                d += 1;
            }
            if d == dims {
                break;
            }
        }
    }
    let lower = best.powf(1.0 / pv);
    let eta = std::f64::consts::SQRT_2 * (n as f64).powf(1.0 / pv) * delta;
    let mut upper = lower + interp_upper(a, p) * eta;
    if eta < 1.0 {
        upper = upper.min(lower / (1.0 - eta));
    }
    normalize(&mut best_x, pv);
    Ok(Bounds::new(lower, upper, "grid", "grid").with_witness(best_x))
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Adaptive version of the [`grid_oracle`] covering, `n = cols` in `{2, 3}`.
///
/// Cells are boxes on the faces of the cube used by the grid oracle. With
/// `N(y) = ||A y||_p^p` and `D(y) = ||y||_p^p`, `||A|| <= λ` on a cell iff
/// `N - λ^p D <= 0` there. `N` is convex and `D` lies above its tangent plane
/// `T` at the centre, so `N - λ^p T` is a convex upper bound whose maximum over
/// the box sits at a vertex. A cell is discharged when that vertex maximum is
/// `<= 0` for `λ = best (1 + rel_tol)`; otherwise it is halved. The gap
/// `λ^p (D - T)` is second order in the cell size, so cells near the maximiser
/// are discharged without shrinking to the target width.
///
/// Cells left when the budget runs out fall back to the net estimate: every
/// point is within `η = √2 n^{1/p} s` of the normalised centre `x̂`, giving
/// `min(||A x̂|| + U η, ||A x̂|| / (1 - η))` with `U` any upper bound for `||A||`.
pub fn refine_upper(a: &Matrix, p: PExponent, lower: f64, upper: f64, rel_tol: f64, max_cells: usize) -> Bounds {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = a.cols();
    let pv = p.value();
    let dims = 2 * n - 1;
    let u0 = upper.min(interp_upper(a, p)).min(schur_upper(a, p));
    let cn = std::f64::consts::SQRT_2 * (n as f64).powf(1.0 / pv);
    let mut ax = vec![ZERO; a.rows()];
    let mut x = vec![ZERO; n];
    let load = |coords: &[f64], x: &mut [C64]| {
        x[0] = c(coords[0], 0.0);
        for i in 1..n {
            x[i] = c(coords[2 * i - 1], coords[2 * i]);
        }
    };
    let mut best = lower;
    let mut best_x: Option<Vector> = None;
    let mut evals = 0usize;
    // returns (||A x̂||, passes the vertex test for lam)
    let mut examine = |centre: &[f64], side: f64, fd: usize, lam: f64, best: &mut f64, best_x: &mut Option<Vector>| {
        load(centre, &mut x);
        a.matvec_into(&x, &mut ax);
        let num: f64 = ax.iter().map(|z| z.norm().powf(pv)).sum();
        let den: f64 = x.iter().map(|z| z.norm().powf(pv)).sum();
        let v = (num / den).powf(1.0 / pv);
        if v > *best {
            *best = v;
            *best_x = Some(Vector(x.to_vec()));
        }
        // gradient of D in real coordinates
        let mut grad = vec![0.0; dims];
        grad[0] = pv * x[0].re.abs().powf(pv - 1.0) * x[0].re.signum();
        for i in 1..n {
            let m = x[i].norm();
            let f = if m > 0.0 { pv * m.powf(pv - 2.0) } else { 0.0 };
            grad[2 * i - 1] = f * x[i].re;
            grad[2 * i] = f * x[i].im;
        }
        let lp = lam.powf(pv);
        let free: Vec<usize> = (0..dims).filter(|&d| d != fd).collect();
        let mut ok = true;
        let mut vert = centre.to_vec();
        let mut xv = vec![ZERO; n];
        let mut av = vec![ZERO; a.rows()];
        for mask in 0..(1u32 << free.len()) {
            let mut lin = den;
            for (k, &d) in free.iter().enumerate() {
                let h = if mask >> k & 1 == 1 { side / 2.0 } else { -side / 2.0 };
                vert[d] = centre[d] + h;
                lin += grad[d] * h;
            }
            load(&vert, &mut xv);
            a.matvec_into(&xv, &mut av);
            let nv: f64 = av.iter().map(|z| z.norm().powf(pv)).sum();
            if nv - lp * lin > 0.0 {
                ok = false;
                break;
            }
        }
        (v, ok)
    };
    let fallback = |v: f64, side: f64| -> f64 {
        let eta = cn * side;
        let mut b = v + u0 * eta;
        if eta < 1.0 {
            b = b.min(v / (1.0 - eta));
        }
        b
    };
    let mut lam = best * (1.0 + rel_tol);
    let mut heap: BinaryHeap<(Key, Reverse<usize>)> = BinaryHeap::new();
    let mut cells: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    // faces: x_1 = 1, or another real coordinate at +-1 with x_1 in [0, 1];
    // tiled with side 0.5 (side 2 on the first face)
    let mut initial: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    initial.push((0, {
        let mut v = vec![0.0; dims];
        v[0] = 1.0;
        v
    }, 2.0));
    for fd in 1..dims {
        for fv in [-1.0, 1.0] {
            let free: Vec<usize> = (0..dims).filter(|&d| d != fd).collect();
            let counts: Vec<usize> = free.iter().map(|&d| if d == 0 { 2 } else { 4 }).collect();
            let mut idx = vec![0usize; free.len()];
            loop {
                let mut cc = vec![0.0; dims];
                cc[fd] = fv;
                for (k, &d) in free.iter().enumerate() {
                    let start = if d == 0 { 0.25 } else { -0.75 };
                    cc[d] = start + 0.5 * idx[k] as f64;
                }
                initial.push((fd, cc, 0.5));
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < counts[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
    }
    let mut pending = initial;
    let mut up = 0.0f64;
    loop {
        for (fd, centre, side) in pending.drain(..) {
            let (v, ok) = examine(&centre, side, fd, lam, &mut best, &mut best_x);
            evals += 1;
            if !ok {
                heap.push((Key(fallback(v, side)), Reverse(cells.len())));
                cells.push((fd, centre, side));
            }
        }
        if best * (1.0 + rel_tol) > lam {
            // earlier discharges stay valid for a larger λ
            lam = best * (1.0 + rel_tol);
        }
        let Some((Key(b), Reverse(id))) = heap.pop() else {
            break;
        };
        if evals >= max_cells {
            up = up.max(b);
            break;
        }
        let (fd, centre, side) = cells[id].clone();
        // retry with the current λ before splitting
        let (_, ok) = examine(&centre, side, fd, lam, &mut best, &mut best_x);
        evals += 1;
        if ok {
            continue;
        }
        let half = side / 2.0;
        let free: Vec<usize> = (0..dims).filter(|&d| d != fd).collect();
        for mask in 0..(1u32 << free.len()) {
            let mut cc = centre.clone();
            for (k, &d) in free.iter().enumerate() {
                cc[d] += if mask >> k & 1 == 1 { half / 2.0 } else { -half / 2.0 };
            }
            pending.push((fd, cc, half));
        }
    }
    let up = up.max(lam).min(u0.max(best));
    let mut out = Bounds::new(best, up, "subdivision", "subdivision");
    if let Some(mut w) = best_x {
        normalize(&mut w, pv);
        out.witness = Some(w);
    }
    out
}

/// Groups rows and columns into connected blocks of the nonzero pattern.
/// Returns `(rows, cols)` index lists, one pair per block with at least one nonzero.
pub fn nonzero_blocks(a: &Matrix) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, cn) = (a.rows(), a.cols());
    let mut parent: Vec<usize> = (0..r + cn).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut active = vec![false; r + cn];
    for i in 0..r {
        for j in 0..cn {
            if a[(i, j)] != ZERO {
                active[i] = true;
                active[r + j] = true;
                let (x, y) = (find(&mut parent, i), find(&mut parent, r + j));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for node in 0..r + cn {
        if !active[node] {
            continue;
        }
        let root = find(&mut parent, node);
        let e = groups.entry(root).or_default();
        if node < r {
            e.0.push(node);
        } else {
            e.1.push(node - r);
        }
    }
    groups.into_values().collect()
}

/// Certified bracket for `||A||_{B(l^p)}`.
pub fn opnorm_bounds(a: &Matrix, p: PExponent, cfg: &OpnormConfig) -> Result<Bounds> {
    let n = a.cols();
    if a.is_zero() || n == 0 || a.rows() == 0 {
        return Ok(Bounds::zero().with_witness(Vector::zeros(n)));
    }
    if cfg.split_blocks {
        let blocks = nonzero_blocks(a);
        if blocks.len() > 1 {
            // permutations are isometries and l^p direct sums take the max
            let mut out: Option<Bounds> = None;
            for (rows, cols) in &blocks {
                let sub = a.submatrix(rows, cols);
                let mut b = opnorm_bounds(&sub, p, cfg)?;
                if let Some(w) = b.witness.take() {
                    let mut full = Vector::zeros(n);
                    for (k, &j) in cols.iter().enumerate() {
                        full[j] = w[k];
                    }
                    b.witness = Some(full);
                }
                out = Some(match out {
                    None => b,
                    Some(prev) => Bounds::max_of(&prev, &b),
                });
            }
            return Ok(out.expect("at least two blocks"));
        }
    }
    let pv = p.value();
    if n == 1 {
        let v = a.column(0).norm_p(pv);
        return Ok(Bounds::exact(v, "column").with_witness(Vector::basis(1, 0)));
    }
    if a.rows() == 1 {
        let row = Vector(a.row(0).to_vec());
        let v = row.norm_p(p.conjugate());
        // x_j = conj(a_j) |a_j|^{p'-2} attains |<a, x>| = ||a||_{p'} ||x||_p
        let mut w = Vector(duality_map(&row, p.conjugate()).iter().map(|z| z.conj()).collect());
        normalize(&mut w, pv);
        return Ok(Bounds::exact(v, "row").with_witness(w));
    }
    if p.is_two() {
        let (s, v) = top_singular(a, EIGEN_TOL);
        let q = quotient(a, &v, 2.0);
        return Ok(Bounds::new(q, s * (1.0 + 1e-12), "singular-vector", "eigen").with_witness(v));
    }
    let mut b = boyd_lower_cfg(a, p, cfg);
    b.upper = f64::INFINITY;
    b.lower_upper(interp_upper(a, p), "interp");
    b.lower_upper(schur_upper(a, p), "schur");
    if let (Some(tol), 2..=3) = (cfg.refine_tol, n) {
        let r = refine_upper(a, p, b.lower, b.upper, tol, cfg.refine_cells);
        b.lower_upper(r.upper, "subdivision");
        if r.lower > b.lower {
            b.raise_lower(r.lower, "subdivision", r.witness);
        }
    }
    Ok(b)
}

/// `||T||` on `L^p(μ)` for a discrete measure with weights `w`, computed on
/// unweighted `l^p` after conjugating by `D_w^{1/p}`.
pub fn opnorm_bounds_weighted(t: &Matrix, p: PExponent, weights: &[f64], cfg: &OpnormConfig) -> Result<Bounds> {
    let conj = conjugate_by_weights(t, weights, p)?;
    let mut b = opnorm_bounds(&conj, p, cfg)?;
    if let Some(w) = b.witness.take() {
        // map the unweighted witness back: x = D^{-1/p} y
        b.witness = Some(Vector(
            w.iter().zip(weights).map(|(z, &wi)| z / wi.powf(1.0 / p.value())).collect(),
        ));
    }
    Ok(b)
}

/// `D^{1/p} T D^{-1/p}` with `D = diag(w)`.
pub fn conjugate_by_weights(t: &Matrix, weights: &[f64], p: PExponent) -> Result<Matrix> {
    if !t.is_square() || t.rows() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: t.rows() });
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let s: Vec<f64> = weights.iter().map(|w| w.powf(1.0 / p.value())).collect();
    let mut m = t.clone();
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            m[(i, j)] *= s[i] / s[j];
        }
    }
    Ok(m)
}

/// Quotient `||A x||_p / ||x||_p`, exposed for witness checks.
pub fn rayleigh(a: &Matrix, x: &[C64], p: PExponent) -> f64 {
    quotient(a, x, p.value())
}

/// Unit-modulus scaling that aligns `z` with the positive real axis.
pub fn align_phase(z: C64) -> C64 {
    let ph = phase(z);
    if ph == ZERO {
        ONE
    } else {
        ph.conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> PExponent {
        PExponent::new(x).unwrap()
    }

    #[test]
    fn diagonal_lower_and_witness() {
        let a = Matrix::real(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let b = boyd_lower(&a, p(3.0), 4, 1).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12);
        let w = b.witness.unwrap();
        assert!((w[0].norm() - 1.0).abs() < 1e-9 && w[1].norm() < 1e-9);
    }

    #[test]
    fn identity_everywhere() {
        for n in 1..4 {
            let i = Matrix::identity(n);
            for q in [1.5, 3.0, 7.0] {
                assert!((boyd_lower(&i, p(q), 3, 0).unwrap().lower - 1.0).abs() < 1e-12);
                assert!((interp_upper(&i, p(q)) - 1.0).abs() < 1e-12);
                let b = opnorm_bounds(&i, p(q), &OpnormConfig::default()).unwrap();
                assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interp_examples() {
        let shear = Matrix::real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((interp_upper(&shear, p(3.0)) - 2.0).abs() < 1e-12);
        let d = Matrix::real(&[&[2.0, 0.0], &[0.0, 1.0]]);
        for q in [1.2, 2.0, 5.0] {
            assert!((interp_upper(&d, p(q)) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_gives_zero_witness() {
        let z = Matrix::zeros(2, 2);
        let b = boyd_lower(&z, p(3.0), 2, 0).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.witness.unwrap().is_zero());
        assert_eq!(opnorm_bounds(&z, p(3.0), &OpnormConfig::default()).unwrap().upper, 0.0);
    }

    #[test]
    fn starts_must_be_positive() {
        assert!(boyd_lower(&Matrix::identity(2), p(3.0), 0, 0).is_err());
    }

    #[test]
    fn grid_identity_and_diagonal() {
        let g = grid_oracle(&Matrix::identity(2), p(3.0), 0.05).unwrap();
        assert!((g.lower - 1.0).abs() < 1e-12);
        let eta = std::f64::consts::SQRT_2 * 2f64.powf(1.0 / 3.0) * 0.05;
        assert!(g.upper <= 1.0 / (1.0 - eta) + 1e-12);
        let d = grid_oracle(&Matrix::real(&[&[2.0, 0.0], &[0.0, 1.0]]), p(3.0), 0.05).unwrap();
        assert!((d.lower - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_dimension_cap() {
        assert!(matches!(
            grid_oracle(&Matrix::identity(4), p(3.0), 0.1),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn p2_collapses() {
        let a = Matrix::real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let b = opnorm_bounds(&a, p(2.0), &OpnormConfig::default()).unwrap();
        assert!(b.width() < 1e-9);
        assert!((b.lower - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn diag_3_1_1() {
        let a = Matrix::real(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let b = opnorm_bounds(&a, p(2.5), &OpnormConfig::default()).unwrap();
        assert!((b.lower - 3.0).abs() < 1e-9 && (b.upper - 3.0).abs() < 1e-9);
    }

    #[test]
    fn schur_is_sharp_on_nonnegative() {
        let a = Matrix::real(&[&[1.0, 2.0], &[0.5, 1.0]]);
        let q = p(3.0);
        let lo = boyd_lower(&a, q, 8, 0).unwrap().lower;
        let s = schur_upper(&a, q);
        assert!(s >= lo - 1e-12);
        assert!(s - lo < 1e-6 * lo, "schur {s} vs {lo}");
    }

    #[test]
    fn blocks_found() {
        let mut a = Matrix::zeros(4, 4);
        a[(0, 2)] = ONE;
        a[(2, 0)] = ONE;
        a[(1, 1)] = c(2.0, 0.0);
        a[(3, 3)] = c(0.5, 0.0);
        assert_eq!(nonzero_blocks(&a).len(), 4);
        let b = opnorm_bounds(&a, p(3.0), &OpnormConfig::default()).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_conjugation_identity() {
        let w = [2.0, 0.5, 3.0];
        let d = Matrix::diag(&[c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 0.5)]);
        // diagonal operators commute with the weight map
        let b = opnorm_bounds_weighted(&d, p(3.0), &w, &OpnormConfig::default()).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn subdivision_agrees_with_net() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for n in [2, 3] {
            let a = Matrix::random(n, n, &mut rng);
            let b = opnorm_bounds(&a, p(3.0), &OpnormConfig::default()).unwrap();
            let g = grid_oracle(&a, p(3.0), if n == 2 { 0.01 } else { 0.2 }).unwrap();
            assert!(b.overlaps(&g, 0.0), "{b:?} {g:?}");
            assert!(b.rel_width() < 1e-5, "{b:?}");
        }
    }
}
