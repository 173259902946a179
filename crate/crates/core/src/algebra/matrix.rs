//! Complex matrices, Hermitian elements and events (orthogonal projections).

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Sorted (ascending) eigenvalues and matching eigenvector columns of a
/// Hermitian matrix.
pub(crate) fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// A square complex matrix: unitaries and intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        Ok(Operator(m))
    }

    pub fn identity(n: usize) -> Self {
        Operator(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    /// `||U^dagger U - 1||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (self.0.adjoint() * &self.0 - CMatrix::identity(n, n)).norm()
    }

    /// `U X U^dagger`.
    pub fn conjugate(&self, x: &Hermitian) -> Hermitian {
        Hermitian::symmetrized(&self.0 * x.matrix() * self.0.adjoint())
    }

    /// Frobenius norm of the commutator with `other`.
    pub fn commutator_norm(&self, other: &CMatrix) -> f64 {
        (&self.0 * other - other * &self.0).norm()
    }
}

/// A Hermitian `n x n` complex matrix. The stored matrix is exactly
/// Hermitian: inputs are replaced by `(A + A^dagger)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, &Tolerances::DEFAULT)
    }

    pub fn with_tolerance(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m)?;
        let defect = (&m - m.adjoint()).norm();
        if defect > tol.herm * m.norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Hermitian((m + adj) * C64::new(0.5, 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(CMatrix::identity(n, n))
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Hermitian(CMatrix::identity(n, n) * C64::new(c, 0.0))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&d| C64::new(d, 0.0)));
        Hermitian(CMatrix::from_diagonal(&v))
    }

    /// Real symmetric matrix from row-major entries.
    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        same_dim(n * n, entries.len())?;
        Self::new(CMatrix::from_row_iterator(n, n, entries.iter().map(|&x| C64::new(x, 0.0))))
    }

    /// Rank-one `|v><v|` (not normalized).
    pub fn outer(v: &DVector<C64>) -> Self {
        Hermitian::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> f64 {
        match eigh(&self.0) {
            Ok((v, _)) => v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())),
            Err(_) => f64::NAN,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.0).map(|(v, _)| v).unwrap_or_default()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    /// Real trace inner product `tr(AB)` (real for Hermitian arguments).
    pub fn inner(&self, other: &Hermitian) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }

    pub fn scale(&self, c: f64) -> Hermitian {
        Hermitian(&self.0 * C64::new(c, 0.0))
    }

    /// `X - tr(X)/n`.
    pub fn traceless_part(&self) -> Hermitian {
        let n = self.dim();
        self - &Hermitian::scalar(n, self.trace() / n as f64)
    }

    /// `E X E`.
    pub fn compress(&self, e: &Event) -> Hermitian {
        let em = e.matrix();
        Hermitian::symmetrized(em * &self.0 * em)
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &Hermitian) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Frobenius norm of `XY - YX`.
    pub fn commutator_norm(&self, other: &Hermitian) -> f64 {
        (&self.0 * &other.0 - &other.0 * &self.0).norm()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Coordinates in the orthonormal basis `{e_aa, (e_ab+e_ba)/sqrt2, i(e_ab-e_ba)/sqrt2}`;
    /// the map is a Frobenius isometry onto `R^(n^2)`.
    pub fn to_real_coords(&self) -> DVector<f64> {
        let n = self.dim();
        let mut v = DVector::zeros(n * n);
        let s = std::f64::consts::SQRT_2;
        let mut k = 0;
        for a in 0..n {
            v[k] = self.0[(a, a)].re;
            k += 1;
        }
        for a in 0..n {
            for b in a + 1..n {
                v[k] = s * self.0[(a, b)].re;
                v[k + 1] = s * self.0[(a, b)].im;
                k += 2;
            }
        }
        v
    }

    pub fn from_real_coords(n: usize, v: &DVector<f64>) -> Hermitian {
        debug_assert_eq!(v.len(), n * n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMatrix::zeros(n, n);
        let mut k = 0;
        for a in 0..n {
            m[(a, a)] = C64::new(v[k], 0.0);
            k += 1;
        }
        for a in 0..n {
            for b in a + 1..n {
                let z = C64::new(s * v[k], s * v[k + 1]);
                m[(a, b)] = z;
                m[(b, a)] = z.conj();
                k += 2;
            }
        }
        Hermitian(m)
    }

    /// Orthonormal basis of all `n x n` Hermitian matrices.
    pub fn standard_basis(n: usize) -> Vec<Hermitian> {
        (0..n * n)
            .map(|k| {
                let mut v = DVector::zeros(n * n);
                v[k] = 1.0;
                Hermitian::from_real_coords(n, &v)
            })
            .collect()
    }
}

impl Serialize for Hermitian {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let mut rows = serializer.serialize_seq(Some(n))?;
        for r in 0..n {
            let row: Vec<[f64; 2]> = (0..n).map(|c| [self.0[(r, c)].re, self.0[(r, c)].im]).collect();
            rows.serialize_element(&row)?;
        }
        rows.end()
    }
}

impl Add for &Hermitian {
    type Output = Hermitian;
    fn add(self, rhs: &Hermitian) -> Hermitian {
        Hermitian(&self.0 + &rhs.0)
    }
}

impl Sub for &Hermitian {
    type Output = Hermitian;
    fn sub(self, rhs: &Hermitian) -> Hermitian {
        Hermitian(&self.0 - &rhs.0)
    }
}

impl Neg for &Hermitian {
    type Output = Hermitian;
    fn neg(self) -> Hermitian {
        Hermitian(-&self.0)
    }
}

impl Mul<f64> for &Hermitian {
    type Output = Hermitian;
    fn mul(self, rhs: f64) -> Hermitian {
        self.scale(rhs)
    }
}

/// `X o Y = (XY + YX)/2`.
pub fn jordan_product(x: &Hermitian, y: &Hermitian) -> Result<Hermitian> {
    same_dim(x.dim(), y.dim())?;
    Ok(jordan(x.matrix(), y.matrix()))
}

pub(crate) fn jordan(x: &CMatrix, y: &CMatrix) -> Hermitian {
    Hermitian::symmetrized((x * y + y * x) * C64::new(0.5, 0.0))
}

/// `{X, Y, Z} = (XYZ + ZYX)/2`; equals `XYX` when `X = Z`.
pub fn triple_product(x: &Hermitian, y: &Hermitian, z: &Hermitian) -> Result<Hermitian> {
    same_dim(x.dim(), y.dim())?;
    same_dim(x.dim(), z.dim())?;
    Ok(triple(x.matrix(), y.matrix(), z.matrix()))
}

pub(crate) fn triple(x: &CMatrix, y: &CMatrix, z: &CMatrix) -> Hermitian {
    let xyz = x * y * z;
    let zyx = xyz.adjoint();
    Hermitian::symmetrized((xyz + zyx) * C64::new(0.5, 0.0))
}

/// An orthogonal projection. Besides the matrix it keeps an orthonormal
/// basis of its range, which fixes a deterministic coordinate system for
/// block computations.
#[derive(Debug, Clone)]
pub struct Event {
    elem: Hermitian,
    range: CMatrix,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.elem == other.elem
    }
}

impl Event {
    pub fn new(h: Hermitian) -> Result<Self> {
        Self::with_tolerance(h, &Tolerances::DEFAULT)
    }

    pub fn with_tolerance(h: Hermitian, tol: &Tolerances) -> Result<Self> {
        let m = h.matrix();
        let scale = m.norm().max(1.0);
        let defect = (m * m - m).norm();
        if defect > tol.idem * scale {
            return Err(Error::NotIdempotent { defect });
        }
        let (values, vectors) = eigh(m)?;
        let spectral_defect = values.iter().map(|&l| l.abs().min((l - 1.0).abs())).fold(0.0, f64::max);
        if spectral_defect > tol.idem * scale {
            return Err(Error::NotIdempotent { defect: spectral_defect });
        }
        let cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
        let n = h.dim();
        let mut range = CMatrix::zeros(n, cols.len());
        for (dst, &src) in cols.iter().enumerate() {
            range.set_column(dst, &vectors.column(src));
        }
        Ok(Self::from_orthonormal_columns(range, n))
    }

    /// Projection onto the span of orthonormal columns `v` (n x r).
    pub(crate) fn from_orthonormal_columns(v: CMatrix, n: usize) -> Event {
        let elem = if v.ncols() == 0 { Hermitian::zeros(n) } else { Hermitian::symmetrized(&v * v.adjoint()) };
        Event { elem, range: v }
    }

    pub fn zero(n: usize) -> Event {
        Event::from_orthonormal_columns(CMatrix::zeros(n, 0), n)
    }

    pub fn identity(n: usize) -> Event {
        Event::from_orthonormal_columns(CMatrix::identity(n, n), n)
    }

    /// Diagonal projection onto the listed coordinate axes.
    pub fn diagonal(n: usize, axes: &[usize]) -> Event {
        let mut v = CMatrix::zeros(n, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            assert!(a < n, "axis {a} out of range for dimension {n}");
            v[(a, c)] = ONE;
        }
        Event::from_orthonormal_columns(v, n)
    }

    /// `|v><v| / <v|v>`.
    pub fn ket(v: &[C64]) -> Result<Event> {
        let v = DVector::from_column_slice(v);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let n = v.len();
        Ok(Event::from_orthonormal_columns(CMatrix::from_column_slice(n, 1, (v / C64::new(norm, 0.0)).as_slice()), n))
    }

    /// Projection onto the span of arbitrary (linearly independent) columns.
    pub fn span(columns: &CMatrix) -> Result<Event> {
        let n = columns.nrows();
        if columns.ncols() == 0 {
            return Ok(Event::zero(n));
        }
        let qr = nalgebra::QR::new(columns.clone());
        let r = qr.r();
        if (0..r.ncols().min(r.nrows())).any(|i| r[(i, i)].norm() < 1e-12) {
            return Err(Error::ZeroVector);
        }
        Ok(Event::from_orthonormal_columns(qr.q(), n))
    }

    pub fn dim(&self) -> usize {
        self.elem.dim()
    }

    pub fn rank(&self) -> usize {
        self.range.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn as_hermitian(&self) -> &Hermitian {
        &self.elem
    }

    pub fn matrix(&self) -> &CMatrix {
        self.elem.matrix()
    }

    /// Orthonormal basis of the range (n x rank).
    pub fn range_basis(&self) -> &CMatrix {
        &self.range
    }

    /// `1 - E`.
    pub fn complement(&self) -> Event {
        let n = self.dim();
        if self.rank() == n {
            return Event::zero(n);
        }
        if self.rank() == 0 {
            return Event::identity(n);
        }
        let c = Hermitian::symmetrized(CMatrix::identity(n, n) - self.matrix());
        Event::new(c).expect("complement of a projection is a projection")
    }

    /// Sum of mutually orthogonal events.
    pub fn orthogonal_sum(events: &[&Event]) -> Result<Event> {
        let n = events.first().map(|e| e.dim()).ok_or(Error::Empty)?;
        let total: usize = events.iter().map(|e| e.rank()).sum();
        let mut v = CMatrix::zeros(n, total);
        let mut c = 0;
        for e in events {
            same_dim(n, e.dim())?;
            for k in 0..e.rank() {
                v.set_column(c, &e.range.column(k));
                c += 1;
            }
        }
        let gram_defect = (v.adjoint() * &v - CMatrix::identity(total, total)).norm();
        if gram_defect > 1e-9 * (total.max(1) as f64) {
            return Err(Error::InvalidAtoms(format!("events are not mutually orthogonal (defect {gram_defect:.3e})")));
        }
        Ok(Event::from_orthonormal_columns(v, n))
    }
}

/// `S = E - E' = 2E - 1`.
pub fn symmetry_from(e: &Event) -> Hermitian {
    let n = e.dim();
    &e.as_hermitian().scale(2.0) - &Hermitian::identity(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> Hermitian {
        Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn sigma_z() -> Hermitian {
        Hermitian::from_real_diagonal(&[1.0, -1.0])
    }

    fn plus() -> Hermitian {
        Hermitian::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]).unwrap()
    }

    #[test]
    fn jordan_unit_and_anticommuting_paulis() {
        let x = sigma_x();
        let one = Hermitian::identity(2);
        assert!(jordan_product(&one, &x).unwrap().distance(&x) < 1e-15);
        assert!(jordan_product(&x, &sigma_z()).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn jordan_of_projection_with_plus_state() {
        let e0 = Hermitian::from_real_diagonal(&[1.0, 0.0]);
        let got = jordan_product(&e0, &plus()).unwrap();
        let want = Hermitian::from_real_rows(2, &[0.5, 0.25, 0.25, 0.0]).unwrap();
        assert!(got.distance(&want) < 1e-15);
    }

    #[test]
    fn triple_examples() {
        let one = Hermitian::identity(2);
        let y = sigma_x();
        assert!(triple_product(&one, &y, &one).unwrap().distance(&y) < 1e-15);
        let e0 = Hermitian::from_real_diagonal(&[1.0, 0.0]);
        let got = triple_product(&e0, &plus(), &e0).unwrap();
        assert!(got.distance(&Hermitian::from_real_diagonal(&[0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Hermitian::identity(2);
        let b = Hermitian::identity(3);
        assert!(matches!(jordan_product(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(triple_product(&a, &a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_rejects_and_symmetrizes() {
        let bad = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(Hermitian::new(bad), Err(Error::NotHermitian { .. })));
        let nearly = CMatrix::from_row_slice(2, 2, &[ONE, C64::new(1.0, 1e-12), C64::new(1.0, 0.0), ONE]);
        let h = Hermitian::new(nearly).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        assert!(matches!(Hermitian::new(CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
        assert!(matches!(Hermitian::new(CMatrix::zeros(0, 0)), Err(Error::Empty)));
        let nan = CMatrix::from_element(2, 2, C64::new(f64::NAN, 0.0));
        assert!(matches!(Hermitian::new(nan), Err(Error::NonFinite)));
    }

    #[test]
    fn event_validation() {
        assert!(Event::new(plus()).is_ok());
        assert_eq!(Event::new(plus()).unwrap().rank(), 1);
        assert!(matches!(Event::new(sigma_x()), Err(Error::NotIdempotent { .. })));
        let half = Hermitian::scalar(2, 0.5);
        assert!(Event::new(half).is_err());
    }

    #[test]
    fn symmetry_examples() {
        assert!(symmetry_from(&Event::identity(2)).distance(&Hermitian::identity(2)) < 1e-15);
        assert!(symmetry_from(&Event::diagonal(2, &[0])).distance(&sigma_z()) < 1e-15);
    }

    #[test]
    fn real_coordinates_are_an_isometry() {
        let h = Hermitian::new(CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(2.0, -3.0), C64::new(2.0, 3.0), C64::new(-4.0, 0.0)],
        ))
        .unwrap();
        let v = h.to_real_coords();
        assert!((v.norm() - h.frobenius_norm()).abs() < 1e-14);
        assert!(Hermitian::from_real_coords(2, &v).distance(&h) < 1e-14);
        let basis = Hermitian::standard_basis(3);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - want).abs() < 1e-14);
            }
        }
    }
}
