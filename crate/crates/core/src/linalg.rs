//! Dense complex vectors and matrices, weighted `l^p` norms and the closed-form
//! operator norms (`p = 1, 2, inf`) that anchor every other computation.

use std::fmt;
use std::ops::{Add, Deref, DerefMut, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default convergence tolerance of the Hermitian eigensolver.
pub const EIGEN_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `z / |z|`, or zero at the origin.
#[inline]
pub fn phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        ZERO
    } else {
        z / r
    }
}

/// A complex coordinate vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Vector(pub Vec<C64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![ZERO; n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = ONE;
        v
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Vector(xs.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scale(&self, s: C64) -> Self {
        Vector(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Vector(self.0.iter().map(|&z| z * s).collect())
    }

    /// Bilinear pairing `sum_i a_i b_i` (no conjugation).
    pub fn pair(&self, other: &Vector) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == ZERO)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Vector((0..n).map(|_| random_c64(rng)).collect())
    }

    pub fn norm_p(&self, p: f64) -> f64 {
        lp_norm_unchecked(&self.0, p, None)
    }
}

impl Deref for Vector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Standard complex Gaussian sample.
pub fn random_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: row.len() });
            }
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols, data })
    }

    /// Real matrix from nested rows; panics on ragged input (test and example helper).
    pub fn real(rows: &[&[f64]]) -> Self {
        let data: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| c(x, 0.0)).collect()).collect();
        Self::from_rows(data).expect("ragged rows")
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix { rows, cols, data: (0..rows * cols).map(|_| random_c64(rng)).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn adjoint(&self) -> Matrix {
        let mut m = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Matrix {
        let mut m = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Matrix {
        self.scale(c(s, 0.0))
    }

    pub fn matvec(&self, x: &[C64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![ZERO; self.rows];
        self.matvec_into(x, &mut out);
        Vector(out)
    }

    pub fn matvec_into(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `A^* y` (conjugate transpose applied to `y`).
    pub fn adjoint_matvec(&self, y: &[C64]) -> Vector {
        let mut out = vec![ZERO; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.data[i * self.cols + j].conj() * yi;
            }
        }
        Vector(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut m = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        m
    }

    /// Kronecker product; block `(i, j)` of the result is `self[(i, j)] * other`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (r, cc) = (self.rows * other.rows, self.cols * other.cols);
        let mut m = Matrix::zeros(r, cc);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn add_scaled(&mut self, other: &Matrix, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Entrywise modulus.
    pub fn abs(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| c(z.norm(), 0.0)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let r: Vec<usize> = (r0..r0 + rows).collect();
        let cl: Vec<usize> = (c0..c0 + cols).collect();
        self.submatrix(&r, &cl)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        let mut m = self.clone();
        m.add_scaled(rhs, ONE);
        m
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut m = self.clone();
        m.add_scaled(rhs, c(-1.0, 0.0));
        m
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

/// Block-diagonal matrix `a ⊕ b`.
pub fn direct_sum(a: &Matrix, b: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(a.rows + b.rows, a.cols + b.cols);
    m.set_block(0, 0, a);
    m.set_block(a.rows, a.cols, b);
    m
}

/// Exponent `1 < p < inf` together with its conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent {
    p: f64,
    conj: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(PExponent { p, conj: p / (p - 1.0) })
    }

    pub fn value(self) -> f64 {
        self.p
    }

    /// `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> f64 {
        self.conj
    }

    pub fn conjugate_exponent(self) -> PExponent {
        PExponent { p: self.conj, conj: self.p }
    }

    pub fn is_two(self) -> bool {
        (self.p - 2.0).abs() < 1e-15
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.p
    }
}

/// `(sum_i w_i |v_i|^p)^(1/p)`; `p = inf` gives the max modulus (weights ignored).
///
/// `p` ranges over `[1, inf]`, so the `l^1` and `l^inf` endpoints are accepted here
/// even though [`PExponent`] excludes them.
pub fn lp_norm(v: &[C64], p: f64, weights: Option<&[f64]>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if let Some(w) = weights {
        if w.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), got: w.len() });
        }
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    Ok(lp_norm_unchecked(v, p, weights))
}

pub(crate) fn lp_norm_unchecked(v: &[C64], p: f64, weights: Option<&[f64]>) -> f64 {
    if p.is_infinite() {
        return v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    // scale by the max modulus so large exponents do not overflow
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = match weights {
        Some(w) => v.iter().zip(w).map(|(z, &wi)| wi * (z.norm() / m).powf(p)).sum(),
        None if p == 1.0 => v.iter().map(|z| z.norm() / m).sum(),
        None if p == 2.0 => v.iter().map(|z| (z.norm() / m).powi(2)).sum(),
        None => v.iter().map(|z| (z.norm() / m).powf(p)).sum(),
    };
    m * s.powf(1.0 / p)
}

/// Exponents with closed-form operator norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedNorm {
    One,
    Two,
    Inf,
}

impl ClosedNorm {
    pub fn from_p(p: f64) -> Option<ClosedNorm> {
        if p == 1.0 {
            Some(ClosedNorm::One)
        } else if p == 2.0 {
            Some(ClosedNorm::Two)
        } else if p.is_infinite() {
            Some(ClosedNorm::Inf)
        } else {
            None
        }
    }
}

/// Operator norm of `a` on `l^p` for `p` in `{1, 2, inf}`.
pub fn opnorm_closed(a: &Matrix, p: ClosedNorm) -> f64 {
    match p {
        ClosedNorm::One => (0..a.cols)
            .map(|j| (0..a.rows).map(|i| a[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max),
        ClosedNorm::Inf => (0..a.rows)
            .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max),
        ClosedNorm::Two => top_singular(a, EIGEN_TOL).0,
    }
}

/// Largest singular value and a right singular vector (unit `l^2` norm).
pub fn top_singular(a: &Matrix, tol: f64) -> (f64, Vector) {
    if a.cols == 0 || a.rows == 0 {
        return (0.0, Vector::zeros(a.cols));
    }
    let gram = a.adjoint().matmul(a);
    let (vals, vecs) = hermitian_eigen(&gram, tol);
    let (k, &top) = vals
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    (top.max(0.0).sqrt(), vecs.column(k))
}

/// Cyclic Jacobi eigensolver for a Hermitian matrix.
///
/// Returns eigenvalues and the unitary matrix whose columns are eigenvectors.
/// Sweeps stop once the off-diagonal Frobenius mass drops below `tol` times the
/// total Frobenius norm.
pub fn hermitian_eigen(h: &Matrix, tol: f64) -> (Vec<f64>, Matrix) {
    assert!(h.is_square(), "hermitian_eigen needs a square matrix");
    let n = h.rows;
    let mut a = h.clone();
    let mut v = Matrix::identity(n);
    let total = a.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol * total * 1e-3 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let hpq = a[(p, q)];
                let r = hpq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let e = hpq / r; // e^{i theta}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let ec = e.conj();
                // G = [[c, s], [-s e^{-i theta}, c e^{-i theta}]] on coordinates (p, q)
                let gpp = c(cs, 0.0);
                let gpq = c(sn, 0.0);
                let gqp = -ec * sn;
                let gqq = ec * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Row-reduced echelon form of `m` with pivot detection at `tol` (relative to max entry).
/// Returns the reduced matrix and pivot columns.
pub fn rref(m: &Matrix, tol: f64) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let scale = m.max_abs().max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row == a.rows {
            break;
        }
        let (best, mag) = (row..a.rows)
            .map(|i| (i, a[(i, col)].norm()))
            .fold((row, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if mag <= tol * scale {
            for i in row..a.rows {
                a[(i, col)] = ZERO;
            }
            continue;
        }
        if best != row {
            for j in 0..a.cols {
                let t = a[(row, j)];
                a[(row, j)] = a[(best, j)];
                a[(best, j)] = t;
            }
        }
        let inv = ONE / a[(row, col)];
        for j in 0..a.cols {
            a[(row, j)] *= inv;
        }
        for i in 0..a.rows {
            if i != row {
                let f = a[(i, col)];
                if f != ZERO {
                    for j in 0..a.cols {
                        let t = a[(row, j)];
                        a[(i, j)] -= f * t;
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

pub fn rank(m: &Matrix, tol: f64) -> usize {
    rref(m, tol).1.len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace(m: &Matrix, tol: f64) -> Vec<Vector> {
    let (r, pivots) = rref(m, tol);
    let free: Vec<usize> = (0..m.cols).filter(|j| !pivots.contains(j)).collect();
    free.iter()
        .map(|&f| {
            let mut x = Vector::zeros(m.cols);
            x[f] = ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = -r[(row, f)];
            }
            x
        })
        .collect()
}

/// Solves `m x = b` when consistent (free variables set to zero).
/// Returns `None` if the residual exceeds `tol` relative to `b`.
pub fn solve_consistent(m: &Matrix, b: &[C64], tol: f64) -> Option<Vector> {
    let mut aug = Matrix::zeros(m.rows, m.cols + 1);
    aug.set_block(0, 0, m);
    for (i, &bi) in b.iter().enumerate() {
        aug[(i, m.cols)] = bi;
    }
    let (r, pivots) = rref(&aug, tol);
    if pivots.contains(&m.cols) {
        return None;
    }
    let mut x = Vector::zeros(m.cols);
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = r[(row, m.cols)];
    }
    let res = &m.matvec(&x) - &Vector(b.to_vec());
    let bn = Vector(b.to_vec()).max_abs().max(1.0);
    (res.max_abs() <= 1e3 * tol * bn).then_some(x)
}

/// Inverse of a square matrix, `None` when it is numerically singular.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.rows;
    if n != m.cols {
        return None;
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return None;
    }
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_consistent(m, &Vector::basis(n, j), 1e-13 * scale)?;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Some(out)
}

/// Least-squares solution of minimum `l^2` norm via the normal equations
/// restricted to the row space.
pub fn least_squares(m: &Matrix, b: &[C64]) -> Vector {
    // x = m^* y with (m m^*) y = b projected; use eigen-decomposition of m m^*.
    let mm = m.matmul(&m.adjoint());
    let (vals, vecs) = hermitian_eigen(&mm, 1e-13);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let bv = Vector(b.to_vec());
    let mut y = Vector::zeros(m.rows);
    for (k, &lam) in vals.iter().enumerate() {
        if lam > 1e-12 * top.max(f64::MIN_POSITIVE) {
            let u = vecs.column(k);
            let coef: C64 = u.iter().zip(bv.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / lam;
            for i in 0..m.rows {
                y[i] += u[i] * coef;
            }
        }
    }
    m.adjoint_matvec(&y)
}

/// Thin singular value decomposition `a = sum_k s_k u_k w_k^*`, largest first,
/// dropping singular values below `1e-13` of the largest.
pub fn svd(a: &Matrix) -> Vec<(f64, Vector, Vector)> {
    let gram = a.adjoint().matmul(a);
    let (vals, vecs) = hermitian_eigen(&gram, 1e-13);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let top = vals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt();
    let mut out = Vec::new();
    for k in order {
        let s = vals[k].max(0.0).sqrt();
        if s <= 1e-13 * top || s == 0.0 {
            continue;
        }
        let w = vecs.column(k);
        let u = a.matvec(&w).scale_real(1.0 / s);
        out.push((s, u, w));
    }
    out
}
