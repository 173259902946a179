use crate::algebra::matrix::{eigh, CMatrix, Event, Hermitian};
use crate::error::Result;
use crate::tol::Tolerances;

/// Distinct eigenvalues (ascending) with their spectral projections.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projections: Vec<Event>,
}

impl SpectralDecomposition {
    /// `sum_m lambda_m P_m`.
    pub fn reconstruct(&self) -> Hermitian {
        let n = self.projections[0].dim();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(Hermitian::zeros(n), |acc, (l, p)| &acc + &p.as_hermitian().scale(*l))
    }

    /// `sum_m f(lambda_m) P_m`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Hermitian {
        let n = self.projections[0].dim();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(Hermitian::zeros(n), |acc, (l, p)| &acc + &p.as_hermitian().scale(f(*l)))
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.projections.iter().all(|p| p.rank() == 1)
    }
}

/// Eigenvalues closer than `tol.cluster * ||X||` are merged into a single
/// projection; the merged eigenvalue is the mean of the cluster.
pub fn spectral(x: &Hermitian, tol: &Tolerances) -> Result<SpectralDecomposition> {
    let (values, vectors) = eigh(x.matrix())?;
    let n = x.dim();
    let norm = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let gap = tol.cluster * norm;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters.last_mut() {
            Some(c) if values[i] - values[*c.last().unwrap()] <= gap => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projections = Vec::with_capacity(clusters.len());
    for c in clusters {
        eigenvalues.push(c.iter().map(|&i| values[i]).sum::<f64>() / c.len() as f64);
        let mut v = CMatrix::zeros(n, c.len());
        for (dst, &src) in c.iter().enumerate() {
            v.set_column(dst, &vectors.column(src));
        }
        projections.push(Event::from_orthonormal_columns(v, n));
    }
    Ok(SpectralDecomposition { eigenvalues, projections })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_diagonal() {
        let d = spectral(&Hermitian::from_real_diagonal(&[3.0, 3.0, 5.0]), &Tolerances::DEFAULT).unwrap();
        assert_eq!(d.eigenvalues.len(), 2);
        assert!((d.eigenvalues[0] - 3.0).abs() < 1e-14 && (d.eigenvalues[1] - 5.0).abs() < 1e-14);
        assert!(d.projections[0].as_hermitian().distance(&Hermitian::from_real_diagonal(&[1.0, 1.0, 0.0])) < 1e-14);
        assert!(d.projections[1].as_hermitian().distance(&Hermitian::from_real_diagonal(&[0.0, 0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn pauli_x() {
        let x = Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let d = spectral(&x, &Tolerances::DEFAULT).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14 && (d.eigenvalues[1] - 1.0).abs() < 1e-14);
        let minus = Hermitian::from_real_rows(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let plus = Hermitian::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(d.projections[0].as_hermitian().distance(&minus) < 1e-14);
        assert!(d.projections[1].as_hermitian().distance(&plus) < 1e-14);
        assert!(d.reconstruct().distance(&x) < 1e-14);
    }

    #[test]
    fn identity_has_one_projection() {
        let d = spectral(&Hermitian::identity(4), &Tolerances::DEFAULT).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0]);
        assert_eq!(d.projections[0].rank(), 4);
    }

    #[test]
    fn zero_matrix_is_one_cluster() {
        let d = spectral(&Hermitian::zeros(3), &Tolerances::DEFAULT).unwrap();
        assert_eq!(d.projections.len(), 1);
    }
}
