use rand::Rng;
use serde::Serialize;

use crate::algebra::matrix::{CMatrix, Hermitian, C64};
use crate::algebra::random::{self, SeededRng};
use crate::algebra::subalgebra::Subalgebra;
use crate::error::Result;
use crate::states::{compatible_slice_with, invariant_slice_with, CompatibleSlice, State};
use crate::tol::Tolerances;

/// Bumped whenever a generator changes what it draws for a given seed.
pub const GENERATOR_VERSION: u32 = 1;

/// How the state of an instance was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// From the slice of the unitary relation, which lies inside the slice
    /// of the Jordan relation: every condition holds.
    CompatibleByConstruction,
    /// From the Jordan slice: event conditions hold, the unitary one may not.
    JordanOnly,
    /// A Jordan-slice state plus a bump of Frobenius norm 0.1 orthogonal to
    /// the slice: every condition fails.
    PerturbedIncompatible,
}

/// Which kind of subalgebra an instance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraChoice {
    Any,
    Atomic,
    Block,
}

#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    pub seed: u64,
    pub dim: usize,
    #[serde(skip)]
    pub algebra: Subalgebra,
    pub algebra_kind: &'static str,
    pub ranks: Vec<usize>,
    pub state: State,
    pub element: Hermitian,
    pub construction: Construction,
    pub generator_version: u32,
}

/// Random Hermitian `X` of operator norm one; a third of the time some
/// cross blocks are zeroed or some diagonal blocks made scalar.
fn draw_element(m: &Subalgebra, rng: &mut SeededRng) -> Hermitian {
    let n = m.dim();
    let x = random::unit_hermitian(n, rng);
    if rng.random_range(0..3) != 0 {
        return x;
    }
    let projections = m.projections();
    let k = projections.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..k {
        let vi = projections[i].range_basis();
        for j in i..k {
            let vj = projections[j].range_basis();
            let mut block = vi.adjoint() * x.matrix() * vj;
            if i == j {
                if rng.random_bool(0.5) {
                    let r = block.nrows();
                    let t = block.trace() / C64::new(r as f64, 0.0);
                    block = CMatrix::identity(r, r) * t;
                }
                out += vi * block * vi.adjoint();
            } else if rng.random_bool(0.5) {
                let piece = vi * block * vj.adjoint();
                out += &piece + piece.adjoint();
            }
        }
    }
    let h = Hermitian::symmetrized(out);
    let norm = h.norm();
    if norm > 1e-6 {
        h.scale(1.0 / norm)
    } else {
        Hermitian::identity(n)
    }
}

/// `1/n + t D_0` for a random traceless direction `D_0` of the slice, with
/// `t = u / (n |lambda_min(D_0)|)`, so that `lambda_min >= (1 - u)/n`.
fn slice_state(slice: &CompatibleSlice, u: f64, rng: &mut SeededRng) -> Result<State> {
    let n = slice.dim;
    let mut d = Hermitian::zeros(n);
    for b in &slice.basis {
        let c: f64 = rng.sample(rand_distr::StandardNormal);
        d = &d + &b.scale(c);
    }
    let d0 = d.traceless_part();
    let base = Hermitian::scalar(n, 1.0 / n as f64);
    if d0.frobenius_norm() < 1e-9 {
        return State::new(base);
    }
    let t = u / n as f64 / d0.min_eigenvalue().abs();
    State::new(&base + &d0.scale(t))
}

/// Seeded instance: `n` in `{4, 6, 8}`, 2 to 4 atoms of random ranks in a
/// Haar-random basis, the atomic algebra or its commutant, and a state of
/// the requested construction.
pub fn generate_instance(seed: u64, construction: Construction, choice: AlgebraChoice, tol: &Tolerances) -> Result<Instance> {
    let mut rng = random::rng(seed);
    let n = [4, 6, 8][rng.random_range(0..3)];
    let k = rng.random_range(2..=4);
    let sizes = random::composition(n, k, &mut rng);
    let b = random::atomic(&sizes, &mut rng);
    let block = match choice {
        AlgebraChoice::Any => rng.random_bool(0.5),
        AlgebraChoice::Atomic => false,
        AlgebraChoice::Block => true,
    };
    let m: Subalgebra = if block { b.commutant().into() } else { b.into() };

    let (state, element) = loop {
        let x = draw_element(&m, &mut rng);
        match construction {
            Construction::CompatibleByConstruction => {
                let slice = invariant_slice_with(&m, &x, tol)?;
                let u = rng.random_range(0.2..1.0);
                break (slice_state(&slice, u, &mut rng)?, x);
            }
            Construction::JordanOnly => {
                let slice = compatible_slice_with(&m, &x, tol)?;
                let u = rng.random_range(0.2..1.0);
                break (slice_state(&slice, u, &mut rng)?, x);
            }
            Construction::PerturbedIncompatible => {
                let slice = compatible_slice_with(&m, &x, tol)?;
                if slice.real_dimension() == n * n {
                    continue;
                }
                let center = slice_state(&slice, 0.1, &mut rng)?;
                let g = random::hermitian(n, &mut rng);
                let perp = &g - &slice.project(&g);
                let norm = perp.frobenius_norm();
                if norm < 1e-9 {
                    continue;
                }
                let rho = center.density() + &perp.scale(0.1 / norm);
                break (State::new(rho)?, x);
            }
        }
    };

    Ok(Instance {
        seed,
        dim: n,
        algebra_kind: m.kind(),
        ranks: m.projections().iter().map(|e| e.rank()).collect(),
        algebra: m,
        state,
        element,
        construction,
        generator_version: GENERATOR_VERSION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{algebra_compatible, unitarily_compatible};

    #[test]
    fn polarity_classes() {
        let tol = Tolerances::DEFAULT;
        for seed in 0..20 {
            let c = generate_instance(seed, Construction::CompatibleByConstruction, AlgebraChoice::Any, &tol).unwrap();
            assert!(algebra_compatible(&c.state, &c.algebra, &c.element).unwrap());
            assert!(unitarily_compatible(&c.state, &c.algebra, &c.element).unwrap());
            let j = generate_instance(seed, Construction::JordanOnly, AlgebraChoice::Block, &tol).unwrap();
            assert!(algebra_compatible(&j.state, &j.algebra, &j.element).unwrap());
            let p = generate_instance(seed, Construction::PerturbedIncompatible, AlgebraChoice::Any, &tol).unwrap();
            assert!(!algebra_compatible(&p.state, &p.algebra, &p.element).unwrap());
        }
    }

    #[test]
    fn reproducible() {
        let tol = Tolerances::DEFAULT;
        let a = generate_instance(5, Construction::PerturbedIncompatible, AlgebraChoice::Any, &tol).unwrap();
        let b = generate_instance(5, Construction::PerturbedIncompatible, AlgebraChoice::Any, &tol).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.element, b.element);
    }
}
