//! Real dense linear algebra used by the slice and version-space solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Thin singular value decomposition `a = u diag(s) v_t`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        (&self.u * DMatrix::from_diagonal(&self.s) * &self.v_t - a).norm()
    }
}

fn raw_svd(a: &DMatrix<f64>) -> Svd {
    let svd = a.clone().svd(true, true);
    Svd { u: svd.u.expect("requested U"), s: svd.singular_values, v_t: svd.v_t.expect("requested V^T") }
}

fn fixed_rotation(n: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}

/// SVD checked by reconstruction. The implicit-shift iteration in nalgebra
/// occasionally returns an inaccurate factorization (seen on triangular
/// inputs); the transpose and a fixed orthogonal rotation of the input are
/// tried in turn, and the most accurate result is kept.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let limit = 1e-11 * a.norm().max(1.0);
    let first = raw_svd(a);
    let mut best_err = first.reconstruction_error(a);
    if best_err <= limit {
        return first;
    }
    let mut best = first;
    let t = raw_svd(&a.transpose());
    let flipped = Svd { u: t.v_t.transpose(), s: t.s, v_t: t.u.transpose() };
    let err = flipped.reconstruction_error(a);
    if err <= limit {
        return flipped;
    }
    if err < best_err {
        best = flipped;
        best_err = err;
    }
    let q = fixed_rotation(a.nrows());
    let r = raw_svd(&(&q * a));
    let rotated = Svd { u: q.transpose() * r.u, s: r.s, v_t: r.v_t };
    if rotated.reconstruction_error(a) < best_err {
        best = rotated;
    }
    best
}

/// Orthonormal basis (as columns) of the column space of `a`; singular
/// values at or below `tol * max(1, s_max)` are treated as zero.
pub fn orthonormal_columns(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let d = svd(a);
    let smax = d.s.max();
    let keep: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] > tol * smax.max(1.0)).collect();
    select_columns(&d.u, &keep)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `R^dim`.
pub fn complement(q: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    let p = DMatrix::identity(dim, dim) - q * q.transpose();
    let eig = SymmetricEigen::new(p);
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    select_columns(&eig.eigenvectors, &keep)
}

/// Orthonormal basis of `{y : A y = 0}`, with singular values at or below
/// `tol` (absolute) counted as zero. Returns the singular values as well.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.ncols();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DVector::zeros(0));
    }
    let square = if a.nrows() < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let d = svd(&square);
    let keep: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] <= tol).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &d.v_t.row(i).transpose());
    }
    (out, d.s)
}

fn select_columns(m: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &m.column(i));
    }
    out
}

/// Least squares `min ||A y - b||` accumulated row-block by row-block, so
/// that only a `(p+1) x (p+1)` triangular factor is ever stored.
#[derive(Debug, Clone)]
pub struct StreamingLeastSquares {
    cols: usize,
    /// Upper-triangular factor of the augmented matrix `[A | b]`.
    r: DMatrix<f64>,
    rows_seen: usize,
}

/// Minimum-norm least-squares solution with its residual and the kernel of `A`.
#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    pub y: DVector<f64>,
    pub residual: f64,
    pub kernel: DMatrix<f64>,
    pub singular_values: DVector<f64>,
}

impl StreamingLeastSquares {
    pub fn new(cols: usize) -> Self {
        StreamingLeastSquares { cols, r: DMatrix::zeros(0, cols + 1), rows_seen: 0 }
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Appends rows `[a | b]`.
    pub fn push(&mut self, a: &DMatrix<f64>, b: &DVector<f64>) {
        assert_eq!(a.ncols(), self.cols);
        assert_eq!(a.nrows(), b.len());
        if a.nrows() == 0 {
            return;
        }
        self.rows_seen += a.nrows();
        let m = self.r.nrows() + a.nrows();
        let mut stacked = DMatrix::zeros(m, self.cols + 1);
        stacked.view_mut((0, 0), (self.r.nrows(), self.cols + 1)).copy_from(&self.r);
        stacked.view_mut((self.r.nrows(), 0), (a.nrows(), self.cols)).copy_from(a);
        stacked.view_mut((self.r.nrows(), self.cols), (a.nrows(), 1)).copy_from(b);
        self.r = stacked.qr().r();
    }

    /// Singular values of the coefficient factor at or below
    /// `kernel_tol * max(1, s_max)` span the kernel.
    pub fn solve(&self, kernel_tol: f64) -> LeastSquaresSolution {
        let p = self.cols;
        let mut full = DMatrix::zeros(p + 1, p + 1);
        full.view_mut((0, 0), (self.r.nrows(), p + 1)).copy_from(&self.r);
        let rp = full.view((0, 0), (p, p)).into_owned();
        let c = full.view((0, p), (p, 1)).column(0).into_owned();
        let tail = full[(p, p)];

        let d = svd(&rp);
        let (u, vt, s) = (&d.u, &d.v_t, &d.s);
        let smax = if s.is_empty() { 0.0 } else { s.max() };
        let cut = kernel_tol * smax.max(1.0);
        let mut y = DVector::zeros(p);
        let mut unexplained = tail * tail;
        let mut kernel_idx = Vec::new();
        for i in 0..s.len() {
            let proj = u.column(i).dot(&c);
            if s[i] > cut {
                y += vt.row(i).transpose() * (proj / s[i]);
            } else {
                unexplained += proj * proj;
                kernel_idx.push(i);
            }
        }
        let mut kernel = DMatrix::zeros(p, kernel_idx.len());
        for (col, &i) in kernel_idx.iter().enumerate() {
            kernel.set_column(col, &vt.row(i).transpose());
        }
        LeastSquaresSolution { y, residual: unexplained.sqrt(), kernel, singular_values: s.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_svd_reconstructs_triangular_inputs() {
        for p in [12usize, 40, 90] {
            let a = DMatrix::from_fn(p, p, |i, j| if j >= i { (((i * 31 + j * 17) % 13) as f64 - 6.0) / 7.0 } else { 0.0 });
            let d = svd(&a);
            assert!(d.reconstruction_error(&a) < 1e-10 * a.norm().max(1.0));
            assert!((d.u.transpose() * &d.u - DMatrix::identity(p, p)).norm() < 1e-10);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        let q = orthonormal_columns(&a, 1e-12);
        let c = complement(&q, 3);
        assert_eq!(c.ncols(), 2);
        assert!((q.transpose() * &c).norm() < 1e-14);
    }

    #[test]
    fn streaming_matches_direct_solution() {
        let a = DMatrix::from_fn(40, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let y0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = &a * &y0;
        let mut ls = StreamingLeastSquares::new(3);
        for k in 0..4 {
            ls.push(&a.rows(k * 10, 10).into_owned(), &b.rows(k * 10, 10).into_owned());
        }
        let sol = ls.solve(1e-10);
        assert!((sol.y - y0).norm() < 1e-10);
        assert!(sol.residual < 1e-10);
        assert_eq!(sol.kernel.ncols(), 0);
    }

    #[test]
    fn inconsistent_system_has_residual() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let mut ls = StreamingLeastSquares::new(1);
        ls.push(&a, &b);
        let sol = ls.solve(1e-10);
        assert!((sol.y[0] - 0.5).abs() < 1e-12);
        assert!((sol.residual - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_kernel() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let mut ls = StreamingLeastSquares::new(2);
        ls.push(&a, &DVector::from_vec(vec![1.0, 2.0]));
        let sol = ls.solve(1e-10);
        assert_eq!(sol.kernel.ncols(), 1);
        assert!(sol.residual < 1e-12);
        let (k, _) = null_space(&a, 1e-10);
        assert_eq!(k.ncols(), 1);
    }
}
