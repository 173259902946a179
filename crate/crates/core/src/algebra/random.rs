//! Seeded random matrices. Every generator takes an explicit RNG so that
//! results depend only on the seed.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::matrix::{CMatrix, Event, Hermitian, C64};
use crate::algebra::subalgebra::AtomicAbelian;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed, stable across platforms.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| C64::new(s * normal(rng), s * normal(rng)))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// GUE-like random Hermitian matrix.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Hermitian {
    Hermitian::symmetrized(ginibre(n, n, rng))
}

/// Random Hermitian matrix rescaled to operator norm one.
pub fn unit_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Hermitian {
    let h = hermitian(n, rng);
    let norm = h.norm();
    if norm > 0.0 {
        h.scale(1.0 / norm)
    } else {
        Hermitian::identity(n)
    }
}

/// Random positive semidefinite matrix of the given rank.
pub fn psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Hermitian {
    let g = ginibre(n, rank, rng);
    Hermitian::symmetrized(&g * g.adjoint())
}

/// Random density matrix of the given rank (induced measure).
pub fn density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Hermitian {
    let p = psd(n, rank, rng);
    let t = p.trace();
    p.scale(1.0 / t)
}

/// Haar-random rank-`r` projection.
pub fn projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Event {
    let u = haar_unitary(n, rng);
    Event::from_orthonormal_columns(u.columns(0, rank).into_owned(), n)
}

/// Haar-random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_iterator(n, ginibre(n, 1, rng).iter().copied());
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Random composition of `n` into `parts` positive sizes.
pub fn composition<R: Rng + ?Sized>(n: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    assert!(parts >= 1 && parts <= n, "cannot split {n} into {parts} positive parts");
    let mut cuts: Vec<usize> = (1..n).collect();
    for i in 0..parts - 1 {
        let j = rng.random_range(i..cuts.len());
        cuts.swap(i, j);
    }
    let mut chosen: Vec<usize> = cuts[..parts - 1].to_vec();
    chosen.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in chosen.into_iter().chain(std::iter::once(n)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
}

/// Atomic abelian algebra with atoms of the given ranks in a Haar-random
/// orthonormal basis.
pub fn atomic<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> AtomicAbelian {
    let n: usize = sizes.iter().sum();
    let u = haar_unitary(n, rng);
    let mut start = 0;
    let atoms = sizes
        .iter()
        .map(|&s| {
            let e = Event::from_orthonormal_columns(u.columns(start, s).into_owned(), n);
            start += s;
            e
        })
        .collect();
    AtomicAbelian::new(atoms).expect("columns of a unitary give a partition of unity")
}

/// Maximal abelian algebra: rank-one atoms in a Haar-random basis.
pub fn maximal_abelian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AtomicAbelian {
    atomic(&vec![1; n], rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(1);
        for n in [1, 2, 5, 9] {
            let u = haar_unitary(n, &mut r);
            assert!((u.adjoint() * &u - CMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn seeds_reproduce() {
        let a = hermitian(4, &mut rng(9));
        let b = hermitian(4, &mut rng(9));
        assert_eq!(a, b);
        assert_ne!(sub_seed(9, 0), sub_seed(9, 1));
    }

    #[test]
    fn densities_are_states() {
        let mut r = rng(3);
        let d = density(5, 2, &mut r);
        assert!((d.trace() - 1.0).abs() < 1e-12);
        assert!(d.min_eigenvalue() > -1e-12);
        let ev = d.eigenvalues();
        assert!(ev[2].abs() < 1e-12 && ev[3] > 1e-6);
    }

    #[test]
    fn compositions_sum() {
        let mut r = rng(5);
        for _ in 0..50 {
            let parts = r.random_range(1..=6);
            let c = composition(6, parts, &mut r);
            assert_eq!(c.len(), parts);
            assert_eq!(c.iter().sum::<usize>(), 6);
            assert!(c.iter().all(|&s| s > 0));
        }
    }
}
