//! Conditional expectations: the state-dependent `mu(X|M)`, the objective
//! (state-independent) `E(X|M)`, and the global map `pi(X) = sum_i E_i X E_i`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::algebra::linalg::{self, StreamingLeastSquares};
use crate::algebra::matrix::{jordan, same_dim, Hermitian};
use crate::algebra::random;
use crate::algebra::subalgebra::{pinch, random_unitary_with, AtomicAbelian, Subalgebra};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::states::{compatibility_defect, compatibility_witness, compatible_slice_with, Relation, State};
use crate::tol::Tolerances;

/// A version of `mu(X|M)` together with the space of all corrections that
/// yield other versions.
#[derive(Debug, Clone, Serialize)]
pub struct CondExp {
    pub canonical: Hermitian,
    /// Basis of `{Z in M : mu(E o Z) = 0 for all events E of M}`.
    pub version_space: Vec<Hermitian>,
    pub unique: bool,
    /// Atoms (or blocks) on which the state vanishes; the canonical version
    /// is zero there by convention.
    pub null_projections: Vec<usize>,
}

/// `mu(X|M)`: an element `Y` of `m` with `mu({E,X,E}) = mu(E o Y)` for
/// every event `E` of `m`. Fails with [`Error::Incompatible`] (carrying a
/// violating event) when no such element exists.
///
/// The canonical version is `sum_i mu(E_i X E_i)/mu(E_i) E_i` for an
/// abelian algebra (coefficient 0 on null atoms) and `sum_i E_i X E_i` for
/// a block algebra.
pub fn cond_exp(mu: &State, x: &Hermitian, m: &Subalgebra) -> Result<CondExp> {
    cond_exp_with(mu, x, m, &Tolerances::DEFAULT)
}

pub fn cond_exp_with(mu: &State, x: &Hermitian, m: &Subalgebra, tol: &Tolerances) -> Result<CondExp> {
    same_dim(m.dim(), x.dim())?;
    same_dim(m.dim(), mu.dim())?;
    if compatibility_defect(mu, m, x, Relation::Jordan)? > tol.compat {
        let witness = compatibility_witness(mu, m, x)?;
        return Err(Error::Incompatible { witness: Box::new(witness) });
    }
    let rho = mu.density();
    let n = m.dim();
    let mut null_projections = Vec::new();
    let canonical = match m {
        Subalgebra::Atomic(b) => {
            let mut y = Hermitian::zeros(n);
            for (i, e) in b.atoms().iter().enumerate() {
                let p = rho.inner(e.as_hermitian());
                if p <= tol.cond {
                    null_projections.push(i);
                    continue;
                }
                let c = rho.inner(&x.compress(e)) / p;
                y = &y + &e.as_hermitian().scale(c);
            }
            y
        }
        Subalgebra::Block(b) => {
            for (i, e) in b.blocks().iter().enumerate() {
                let v = e.range_basis();
                if Hermitian::symmetrized(v.adjoint() * rho.matrix() * v).min_eigenvalue() <= tol.cond {
                    null_projections.push(i);
                }
            }
            pinch(b.blocks(), x)
        }
    };
    let version_space = version_space(mu, m, tol);
    Ok(CondExp { unique: version_space.is_empty(), canonical, version_space, null_projections })
}

/// Kernel of `Z -> P_M(rho o Z)` on `m`, singular values at or below
/// `tol.cond` counted as zero.
pub fn version_space(mu: &State, m: &Subalgebra, tol: &Tolerances) -> Vec<Hermitian> {
    let basis = m.basis();
    let d = basis.len();
    let rho = mu.density().matrix();
    let mut k = DMatrix::zeros(d, d);
    for (c, b) in basis.iter().enumerate() {
        k.set_column(c, &m.coords(&jordan(rho, b.matrix())));
    }
    let (kernel, _) = linalg::null_space(&k, tol.cond);
    kernel.column_iter().map(|c| m.from_coords(&c.into_owned())).collect()
}

/// Largest `|mu({E,X,E}) - mu(E o Y)|` over the given events.
pub fn defining_residual(mu: &State, x: &Hermitian, y: &Hermitian, events: &[crate::algebra::Event]) -> f64 {
    let rho = mu.density();
    events
        .iter()
        .map(|e| (rho.inner(&x.compress(e)) - rho.inner(&jordan(e.matrix(), y.matrix()))).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ObjectiveStatus {
    Nonexistent,
    Unique,
    Nonunique,
}

/// Outcome of the objective conditional expectation solve.
#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveCondExp {
    pub status: ObjectiveStatus,
    /// The (minimum-norm) solution, absent when nonexistent.
    pub value: Option<Hermitian>,
    /// Directions along which the solution may move (NONUNIQUE only).
    pub kernel: Vec<Hermitian>,
    /// Two compatible states whose conditional expectations differ.
    pub witness_states: Option<(State, State)>,
    /// Canonical versions of `mu(X|M)` in the two witness states.
    pub witness_canonicals: Option<(Hermitian, Hermitian)>,
    /// Least-squares residual of the linear system.
    pub residual: f64,
    pub equations: usize,
    pub slice_dimension: usize,
}

/// `E(X|M)`: a single `Y` in `m` with `mu({E,X,E}) = mu(E o Y)` for every
/// compatible state and every event of a spanning family of `m`.
///
/// Compatible states span the compatible slice, so the conditions are the
/// linear equations `tr(rho_b ({E,X,E} - E o Y)) = 0` over a slice basis
/// `rho_b` and spanning events `E`, solved by least squares in coordinates
/// of `m`.
pub fn objective_cond_exp(x: &Hermitian, m: &Subalgebra) -> Result<ObjectiveCondExp> {
    objective_cond_exp_with(x, m, &Tolerances::DEFAULT)
}

pub fn objective_cond_exp_with(x: &Hermitian, m: &Subalgebra, tol: &Tolerances) -> Result<ObjectiveCondExp> {
    same_dim(m.dim(), x.dim())?;
    let slice = compatible_slice_with(m, x, tol)?;
    let events = m.spanning_events();
    let compressed: Vec<Hermitian> = events.iter().map(|e| x.compress(e)).collect();
    let d = m.real_dimension();
    let mut ls = StreamingLeastSquares::new(d);
    for rho in &slice.basis {
        let mut a = DMatrix::zeros(events.len(), d);
        let mut b = DVector::zeros(events.len());
        for (r, (e, exe)) in events.iter().zip(&compressed).enumerate() {
            a.set_row(r, &m.coords(&jordan(rho.matrix(), e.matrix())).transpose());
            b[r] = rho.inner(exe);
        }
        ls.push(&a, &b);
    }
    let sol = ls.solve(tol.obj);
    let feasible = sol.residual <= tol.feasible * x.norm().max(1.0);
    let mut out = ObjectiveCondExp {
        status: ObjectiveStatus::Nonexistent,
        value: None,
        kernel: Vec::new(),
        witness_states: None,
        witness_canonicals: None,
        residual: sol.residual,
        equations: ls.rows_seen(),
        slice_dimension: slice.real_dimension(),
    };
    if feasible {
        out.value = Some(m.from_coords(&sol.y));
        out.kernel = sol.kernel.column_iter().map(|c| m.from_coords(&c.into_owned())).collect();
        out.status = if out.kernel.is_empty() { ObjectiveStatus::Unique } else { ObjectiveStatus::Nonunique };
        return Ok(out);
    }

    let n = m.dim();
    let base = State::trace_state(n);
    let base_y = cond_exp_with(&base, x, m, tol)?.canonical;
    let mut best: Option<(f64, State, Hermitian)> = None;
    for b in &slice.basis {
        let d0 = b.traceless_part();
        if d0.frobenius_norm() < 1e-12 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let dir = d0.scale(sign);
            let lmin = dir.min_eigenvalue();
            let t = 0.5 / n as f64 / lmin.abs();
            let candidate = &base.density().clone() + &dir.scale(t);
            let Ok(state) = State::new(candidate) else { continue };
            let Ok(ce) = cond_exp_with(&state, x, m, tol) else { continue };
            let gap = (&ce.canonical - &base_y).norm();
            if best.as_ref().is_none_or(|(g, _, _)| gap > *g) {
                best = Some((gap, state, ce.canonical));
            }
        }
    }
    if let Some((_, state, y)) = best {
        out.witness_states = Some((base, state));
        out.witness_canonicals = Some((base_y, y));
    }
    Ok(out)
}

/// The global conditional expectation `pi(X) = sum_i E_i X E_i` onto the
/// commutant of an atomic abelian algebra.
#[derive(Debug, Clone)]
pub struct GlobalConditionalExpectation {
    base: AtomicAbelian,
}

pub fn global_ce(b: &AtomicAbelian) -> GlobalConditionalExpectation {
    GlobalConditionalExpectation { base: b.clone() }
}

impl GlobalConditionalExpectation {
    pub fn base(&self) -> &AtomicAbelian {
        &self.base
    }

    pub fn apply(&self, x: &Hermitian) -> Result<Hermitian> {
        same_dim(self.base.dim(), x.dim())?;
        Ok(pinch(self.base.atoms(), x))
    }

    /// Linearity, positivity, unitality, idempotence, the fixed points
    /// (the commutant) and the module property `pi(Y o X) = Y o pi(X)` for
    /// `Y` in the commutant, on `samples` seeded random inputs.
    pub fn verify(&self, seed: u64, samples: usize) -> Report {
        let n = self.base.dim();
        let mut rng = random::rng(seed);
        let mut report = Report::new("global-ce");
        let commutant: Subalgebra = self.base.commutant().into();
        let thr = 1e-9;
        let pi = |x: &Hermitian| pinch(self.base.atoms(), x);
        report.residual("unitality", pi(&Hermitian::identity(n)).distance(&Hermitian::identity(n)), thr);
        for _ in 0..samples {
            let x = random::hermitian(n, &mut rng);
            let z = random::hermitian(n, &mut rng);
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let lin = pi(&(&x.scale(a) + &z.scale(b))).distance(&(&pi(&x).scale(a) + &pi(&z).scale(b)));
            report.residual("linearity", lin / (x.frobenius_norm() + z.frobenius_norm()).max(1.0), thr);

            let p = random::psd(n, 1 + rng.random_range(0..n), &mut rng);
            report.residual("positivity", (-pi(&p).min_eigenvalue()).max(0.0) / p.norm().max(1.0), thr);

            let px = pi(&x);
            report.residual("idempotence", pi(&px).distance(&px) / x.frobenius_norm().max(1.0), 1e-10);

            let y = commutant.project(&random::hermitian(n, &mut rng));
            report.residual("fixes_commutant", pi(&y).distance(&y) / y.frobenius_norm().max(1.0), thr);

            let lhs = pi(&jordan(y.matrix(), x.matrix()));
            let rhs = jordan(y.matrix(), px.matrix());
            let scale = (y.frobenius_norm() * x.frobenius_norm()).max(1.0);
            report.residual("module_property", lhs.distance(&rhs) / scale, thr);

            let u = random_unitary_with(&Subalgebra::Atomic(self.base.clone()), &mut rng);
            let moved = pi(&u.conjugate(&x));
            report.residual("inner_covariance", moved.distance(&u.conjugate(&px)) / x.frobenius_norm().max(1.0), thr);
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::{CMatrix, Event, C64};
    use crate::algebra::subalgebra::BlockAlgebra;

    fn sigma_x() -> Hermitian {
        Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn diagonal() -> Subalgebra {
        AtomicAbelian::diagonal(2).into()
    }

    fn tensor_case() -> (Hermitian, Subalgebra) {
        let x = Hermitian::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0]);
        let b = AtomicAbelian::from_block_sizes(&[2, 2]).unwrap();
        (x, b.into())
    }

    #[test]
    fn trace_state_example() {
        let ce = cond_exp(&State::trace_state(2), &sigma_x(), &diagonal()).unwrap();
        assert!(ce.canonical.frobenius_norm() < 1e-15);
        assert!(ce.unique);
    }

    #[test]
    fn null_atom_example() {
        let mu = State::new(Hermitian::from_real_diagonal(&[1.0, 0.0])).unwrap();
        let ce = cond_exp(&mu, &Hermitian::from_real_diagonal(&[1.0, -1.0]), &diagonal()).unwrap();
        assert!(ce.canonical.distance(&Hermitian::from_real_diagonal(&[1.0, 0.0])) < 1e-15);
        assert!(!ce.unique);
        assert_eq!(ce.version_space.len(), 1);
        assert!(ce.version_space[0].matrix()[(1, 1)].norm() > 0.99);
        assert_eq!(ce.null_projections, vec![1]);
    }

    #[test]
    fn incompatible_example() {
        let mu = State::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        match cond_exp(&mu, &sigma_x(), &diagonal()) {
            Err(Error::Incompatible { witness }) => assert!((witness.violation.abs() - 0.5).abs() < 1e-12),
            other => panic!("expected incompatibility, got {other:?}"),
        }
    }

    #[test]
    fn objective_of_member_is_itself() {
        let m: Subalgebra = AtomicAbelian::from_block_sizes(&[1, 2]).unwrap().commutant().into();
        let x = Hermitian::from_real_rows(3, &[5.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, -3.0]).unwrap();
        let r = objective_cond_exp(&x, &m).unwrap();
        assert_eq!(r.status, ObjectiveStatus::Unique);
        assert!(r.value.unwrap().distance(&x) < 1e-10);
        let b: Subalgebra = AtomicAbelian::diagonal(2).into();
        let z = Hermitian::from_real_diagonal(&[1.0, -1.0]);
        let r = objective_cond_exp(&z, &b).unwrap();
        assert_eq!(r.status, ObjectiveStatus::Unique);
        assert!(r.value.unwrap().distance(&z) < 1e-10);
    }

    #[test]
    fn tensor_no_go() {
        let (x, b) = tensor_case();
        let r = objective_cond_exp(&x, &b).unwrap();
        assert_eq!(r.status, ObjectiveStatus::Nonexistent);
        let (y0, y1) = r.witness_canonicals.unwrap();
        assert!((&y0 - &y1).norm() >= 0.5);
        let (s0, s1) = r.witness_states.unwrap();
        assert!(cond_exp(&s0, &x, &b).is_ok() && cond_exp(&s1, &x, &b).is_ok());
    }

    #[test]
    fn objective_on_commutant_is_pinching() {
        let mut rng = random::rng(11);
        let b = random::atomic(&[2, 1, 3], &mut rng);
        let m: Subalgebra = b.commutant().into();
        let x = random::hermitian(6, &mut rng);
        let r = objective_cond_exp(&x, &m).unwrap();
        assert_eq!(r.status, ObjectiveStatus::Unique);
        let want = global_ce(&b).apply(&x).unwrap();
        assert!(r.value.unwrap().distance(&want) < 1e-9);
    }

    #[test]
    fn global_ce_examples() {
        let trivial = global_ce(&AtomicAbelian::trivial(3));
        let x = random::hermitian(3, &mut random::rng(1));
        assert!(trivial.apply(&x).unwrap().distance(&x) < 1e-15);
        let pi = global_ce(&AtomicAbelian::diagonal(2));
        assert!(pi.apply(&sigma_x()).unwrap().frobenius_norm() < 1e-15);
        let b = random::atomic(&[1, 2, 2], &mut random::rng(5));
        let report = global_ce(&b).verify(3, 20);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn block_versions_and_uniqueness() {
        let m: Subalgebra = BlockAlgebra::full(2).into();
        let mu = State::new(Hermitian::from_real_diagonal(&[1.0, 0.0])).unwrap();
        let ce = cond_exp(&mu, &Hermitian::identity(2), &m).unwrap();
        assert!(!ce.unique);
        assert_eq!(ce.version_space.len(), 1);
        let ce = cond_exp(&State::trace_state(2), &sigma_x(), &m).unwrap();
        assert!(ce.unique);
        assert!(ce.canonical.distance(&sigma_x()) < 1e-15);
        let ev = Event::new(Hermitian::new(CMatrix::identity(2, 2)).unwrap()).unwrap();
        assert!(defining_residual(&State::trace_state(2), &sigma_x(), &ce.canonical, &[ev]) < 1e-15);
    }
}
