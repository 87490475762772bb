//! Spectral utilities over evidence matrices.
//!
//! The minimal singular value comes from a cyclic Jacobi eigen-decomposition
//! of the Gram matrix `A^T A`. Rather than taking square roots of possibly
//! tiny eigenvalues, `sigma_i = |A v_i|` is evaluated on each eigenvector,
//! which stays accurate near zero.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::loglik::norm2;

/// `A` is injective iff `sigma_min(A)` exceeds this.
pub const INJECTIVITY_TOL: f64 = 1e-10;
/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this.
pub const JACOBI_TOL: f64 = 1e-12;
/// Pivot threshold for the elimination used in the kernel search.
pub const PIVOT_TOL: f64 = 1e-10;
/// A kernel vector has "nonzero sum" when `|sum z| >= KERNEL_SUM_RATIO * |z|_2`.
pub const KERNEL_SUM_RATIO: f64 = 0.1;

const MAX_SWEEPS: usize = 100;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T A`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    g[(i, j)] += row[i] * row[j];
                }
            }
        }
        g
    }

    /// Column sums, i.e. `1^T M`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: DenseMatrix,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations on a symmetric matrix.
pub fn jacobi_eigen(sym: &DenseMatrix) -> SymmetricEigen {
    let n = sym.rows;
    assert_eq!(n, sym.cols, "jacobi_eigen needs a square matrix");
    let mut a = sym.clone();
    let mut v = DenseMatrix::identity(n);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off_diagonal_norm(&a) > JACOBI_TOL {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    SymmetricEigen {
        values: (0..n).map(|i| a[(i, i)]).collect(),
        vectors: v,
        sweeps,
    }
}

/// Smallest singular value over the column space of `a` (0 for an empty matrix).
pub fn min_singular_value(a: &DenseMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// All `m` singular values (ascending), evaluated as `|A v|` on the
/// eigenvectors of `A^T A`.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let eig = jacobi_eigen(&a.gram());
    let m = a.cols();
    let mut out: Vec<f64> = (0..m)
        .map(|k| {
            let col: Vec<f64> = (0..m).map(|i| eig.vectors[(i, k)]).collect();
            norm2(&a.mul_vec(&col)) / norm2(&col)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn invert(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Dimension {
            expected: n,
            got: m.cols(),
        });
    }
    let mut a = m.clone();
    let mut inv = DenseMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .expect("nonempty range");
        if a[(pivot, col)].abs() < 1e-14 {
            return Err(Error::InvalidMatrix("singular matrix".into()));
        }
        if pivot != col {
            for j in 0..n {
                a.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(i, j)] -= f * a[(col, j)];
                inv[(i, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// `(A^T A)^{-1} A^T`, an `m x n` matrix.
pub fn left_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let sigma_min = min_singular_value(a);
    if sigma_min <= INJECTIVITY_TOL {
        return Err(Error::NotInjective { sigma_min });
    }
    Ok(invert(&a.gram())?.matmul(&a.transpose()))
}

/// `h* = 1_m^T A_l^{-1}`, the weights that recover the full-information log-odds.
pub fn optimal_hypothesis(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(left_inverse(a)?.column_sums())
}

/// Basis of `ker(a)` from reduced row echelon form (pivots below [`PIVOT_TOL`] count as zero).
pub fn kernel_basis(a: &DenseMatrix) -> Vec<Vec<f64>> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let best = (row..rows)
            .max_by(|&i, &j| r[(i, col)].abs().total_cmp(&r[(j, col)].abs()))
            .expect("nonempty range");
        if r[(best, col)].abs() <= PIVOT_TOL {
            continue;
        }
        for j in 0..cols {
            r.data.swap(best * cols + j, row * cols + j);
        }
        let d = r[(row, col)];
        for j in 0..cols {
            r[(row, j)] /= d;
        }
        for i in 0..rows {
            if i != row {
                let f = r[(i, col)];
                if f != 0.0 {
                    for j in 0..cols {
                        r[(i, j)] -= f * r[(row, j)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }

    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0.0; cols];
            v[free] = 1.0;
            for (prow, &pcol) in pivots.iter().enumerate() {
                v[pcol] = -r[(prow, free)];
            }
            v
        })
        .collect()
}

/// A kernel vector whose coordinates do not sum to zero, if one exists.
///
/// Maximizes `|sum z| / |z|_2` over `ker(a)` by projecting `1_m` onto the
/// kernel. The result is scaled to `|z|_inf = 1` with a positive sum.
/// Returns `None` when the kernel is trivial or lies inside `{sum z = 0}`.
pub fn kernel_vector_nonzero_sum(a: &DenseMatrix) -> Option<Vec<f64>> {
    let basis = kernel_basis(a);
    let m = a.cols();
    // Gram-Schmidt
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for mut v in basis {
        for q in &ortho {
            let proj: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
        }
        let len = norm2(&v);
        if len > PIVOT_TOL {
            v.iter_mut().for_each(|x| *x /= len);
            ortho.push(v);
        }
    }
    let mut z = vec![0.0; m];
    for q in &ortho {
        let coef: f64 = q.iter().sum();
        z.iter_mut().zip(q).for_each(|(x, y)| *x += coef * y);
    }
    let len = norm2(&z);
    let sum: f64 = z.iter().sum();
    if len <= PIVOT_TOL || sum.abs() < KERNEL_SUM_RATIO * len {
        return None;
    }
    let inf = z.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let scale = sum.signum() / inf;
    z.iter_mut().for_each(|x| *x *= scale);
    Some(z)
}

/// Summary printed by the `spectral` CLI command.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub rows: usize,
    pub cols: usize,
    pub sigma_min: f64,
    pub injective: bool,
    pub h_star: Option<Vec<f64>>,
    pub h_star_norm: Option<f64>,
    /// Set when `A` is not injective and a kernel vector with nonzero sum exists.
    pub kernel_vector: Option<Vec<f64>>,
}

impl SpectralReport {
    pub fn of(a: &DenseMatrix) -> Self {
        let sigma_min = min_singular_value(a);
        let injective = sigma_min > INJECTIVITY_TOL;
        let h_star = if injective { optimal_hypothesis(a).ok() } else { None };
        let h_star_norm = h_star.as_deref().map(norm2);
        let kernel_vector = if injective {
            None
        } else {
            kernel_vector_nonzero_sum(a)
        };
        Self {
            rows: a.rows(),
            cols: a.cols(),
            sigma_min,
            injective,
            h_star,
            h_star_norm,
            kernel_vector,
        }
    }
}

impl fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "shape = {}x{}", self.rows, self.cols)?;
        writeln!(f, "sigma_min = {:.12}", self.sigma_min)?;
        writeln!(f, "injective = {}", self.injective)?;
        if let (Some(h), Some(norm)) = (&self.h_star, self.h_star_norm) {
            let joined: Vec<String> = h.iter().map(|x| format!("{x:.12}")).collect();
            writeln!(f, "h_star = {}", joined.join(", "))?;
            writeln!(f, "h_star_norm = {norm:.12}")?;
            writeln!(
                f,
                "h_star_norm_bound = {:.12}",
                (self.cols as f64).sqrt() / self.sigma_min
            )?;
        }
        if !self.injective {
            match &self.kernel_vector {
                Some(z) => {
                    let joined: Vec<String> = z.iter().map(|x| format!("{x:.12}")).collect();
                    writeln!(f, "kernel_vector = {}", joined.join(", "))?;
                }
                None => writeln!(
                    f,
                    "kernel_vector = none (kernel lies in the zero-sum subspace; learnability undetermined)"
                )?,
            }
        }
        Ok(())
    }
}

/// `sigma_min / sqrt(n)` for random `n x m` Bernoulli(1/2) matrices.
pub fn bernoulli_sigma_ratios<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..samples)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect())
                .collect();
            let a = DenseMatrix::from_rows(&rows).expect("rectangular");
            min_singular_value(&a) / (n as f64).sqrt()
        })
        .collect()
}
