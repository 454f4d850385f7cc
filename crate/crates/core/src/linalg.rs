//! Dense linear algebra for the feature pipeline.
//!
//! Only what the classwise PCA and the discriminant step need: a row-major
//! matrix, a symmetric eigen-solver returning all eigenvalues plus the leading
//! eigenvectors, and Cholesky factorization with triangular solves.
//!
//! The eigen-solver reduces to tridiagonal form with Householder reflections,
//! finds eigenvalues with implicit-shift QL, then recovers the requested
//! eigenvectors by inverse iteration on the tridiagonal matrix and maps them
//! back through the reflections. For a 480x480 covariance and 30 vectors this
//! is several times cheaper than a full Jacobi sweep.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Relative tolerance used by the eigen-solver and its sign convention.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

const QL_MAX_ITERATIONS: usize = 60;
const INVERSE_ITERATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix whose rows are the given equal-length vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Copies the lower triangle onto the upper one.
    pub fn symmetrize_from_lower(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                let v = self.data[i * n + j];
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm(v: &[f64]) -> f64 {
    math::sqrt(dot(v, v))
}

/// Scales `v` to unit length. Returns the original norm; zero vectors are left alone.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Flips `v` so that its first non-negligible component is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > EIGEN_TOLERANCE * scale) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// All eigenvalues, largest first.
    pub values: Vec<f64>,
    /// Unit eigenvectors for the leading `values`, in the same order, with
    /// the canonical sign applied.
    pub vectors: Vec<Vec<f64>>,
}

/// Eigenvalues of `a` and the eigenvectors of its `k` largest eigenvalues.
///
/// Only the lower triangle of `a` is assumed meaningful if the input is
/// exactly symmetric; no symmetry check is performed beyond shape.
pub fn symmetric_eigen(a: &Matrix, k: usize) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: a.cols,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows;
    let k = k.min(n);
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }

    // Work on a copy scaled to unit max-norm so squares of tiny entries
    // cannot underflow.
    let amax = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let unit = if amax > 0.0 && (1.0 / amax).is_finite() { 1.0 / amax } else { 1.0 };
    let mut scaled = a.clone();
    scaled.data.iter_mut().for_each(|v| *v *= unit);
    let tri = tridiagonalize(&scaled);
    let mut values = tri.diag.clone();
    let mut off = tri.off.clone();
    tridiagonal_ql(&mut values, &mut off)?;
    values.sort_by(|x, y| y.total_cmp(x));

    let mut scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        scale = 1.0;
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (idx, &lambda) in values.iter().take(k).enumerate() {
        let y = tridiagonal_eigenvector(&tri.diag, &tri.off, lambda, scale, idx, &vectors)?;
        vectors.push(y);
    }
    // `vectors` holds eigenvectors of the tridiagonal matrix until here.
    let mut out = Vec::with_capacity(k);
    for mut y in vectors {
        tri.apply_q(&mut y);
        normalize(&mut y);
        canonical_sign(&mut y);
        out.push(y);
    }
    values.iter_mut().for_each(|v| *v /= unit);
    Ok(SymmetricEigen {
        values,
        vectors: out,
    })
}

struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    /// `off[i]` couples rows i and i+1; the last entry is zero.
    off: Vec<f64>,
    /// Householder vectors and their factors, one per reduction step.
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl Tridiagonal {
    /// Maps an eigenvector of the tridiagonal matrix back to the original basis.
    fn apply_q(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let tail = &mut y[k + 1..];
            let s = beta * dot(v, tail);
            axpy(-s, v, tail);
        }
        debug_assert_eq!(y.len(), self.n);
    }
}

fn tridiagonalize(a: &Matrix) -> Tridiagonal {
    let n = a.rows;
    let mut w = a.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        diag[k] = w[k * n + k];
        let m = n - k - 1;
        let x: Vec<f64> = w[k * n + k + 1..k * n + n].to_vec();
        let tail_sq: f64 = dot(&x[1..], &x[1..]);
        // Below MIN_POSITIVE the tail is negligible against the unit-norm input.
        if tail_sq < f64::MIN_POSITIVE {
            off[k] = x[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let xnorm = math::sqrt(x[0] * x[0] + tail_sq);
        let alpha = if x[0] > 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / dot(&v, &v);
        off[k] = alpha;

        // Trailing block S occupies rows/cols k+1..n.
        let base = k + 1;
        for i in 0..m {
            let row = &w[(base + i) * n + base..(base + i) * n + n];
            p[i] = beta * dot(row, &v);
        }
        let kappa = 0.5 * beta * dot(&p[..m], &v);
        for i in 0..m {
            p[i] -= kappa * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let pi = p[i];
            let row = &mut w[(base + i) * n + base..(base + i) * n + n];
            for j in 0..m {
                row[j] -= vi * p[j] + pi * v[j];
            }
        }
        reflectors.push((v, beta));
    }
    diag[n - 1] = w[(n - 1) * n + n - 1];
    off[n - 1] = 0.0;
    Tridiagonal {
        n,
        diag,
        off,
        reflectors,
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; eigenvalues only.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    // Off-diagonals below eps * ||T|| are negligible; a purely relative test
    // stalls on the long runs of near-zero eigenvalues of low-rank covariances.
    let anorm = (0..n).fold(0.0f64, |acc, i| acc.max(d[i].abs() + e[i].abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITERATIONS {
                return Err(Error::Numerical("QL iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Inverse iteration for one eigenvector of the tridiagonal matrix (diag, off)
/// near `lambda`, kept orthogonal to the vectors already found.
fn tridiagonal_eigenvector(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    scale: f64,
    index: usize,
    previous: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let tiny = f64::EPSILON * scale;
    let lu = TridiagonalLu::factor(diag, off, lambda, tiny);

    // Deterministic, structure-free start vector.
    let mut state = 0x2545_F491_4F6C_DD1Du64 ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    orthogonalize(&mut x, previous);
    normalize(&mut x);

    for _ in 0..INVERSE_ITERATIONS {
        lu.solve(&mut x);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("inverse iteration overflow".into()));
        }
        orthogonalize(&mut x, previous);
        if normalize(&mut x) == 0.0 {
            return Err(Error::Numerical("inverse iteration collapsed".into()));
        }
    }
    Ok(x)
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of modified Gram-Schmidt keep clustered eigenvectors orthogonal.
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            axpy(-c, b, x);
        }
    }
}

/// LU factorization with partial pivoting of `T - lambda I`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], lambda: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut dl: Vec<f64> = off[..n - 1].to_vec();
        let mut d: Vec<f64> = diag.iter().map(|x| x - lambda).collect();
        let mut du: Vec<f64> = off[..n - 1].to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`, or `None` if `a` is
/// not numerically positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    if !a.is_square() {
        return None;
    }
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a.get(j, j);
        for k in 0..j {
            s -= l.get(j, k) * l.get(j, k);
        }
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let ljj = math::sqrt(s);
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Some(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &mut [f64]) {
    let n = l.rows;
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &b[..i]);
        b[i] = (b[i] - s) / l.get(i, i);
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: &mut [f64]) {
    let n = l.rows;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l.get(k, i) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}
