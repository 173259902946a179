//! States as density matrices, conditional probabilities, and the
//! compatibility relation between a subalgebra, a state and an element.
//!
//! Two relations are decided exactly:
//!
//! * the Jordan relation ([`algebra_compatible`]): `mu({E,X,E}) = mu(E o X)`
//!   for every event `E` of the subalgebra, equivalently
//!   `mu({E,X,F}) = 0` for every orthogonal pair of events;
//! * the unitary relation ([`unitarily_compatible`]): `mu(U X U*) = mu(X)`
//!   for every unitary `U` of the generated von Neumann algebra.
//!
//! The unitary relation implies the Jordan relation. For a single element
//! the converse fails: with `rho = 1/2 - b sigma_y`, `X = sigma_x` and the
//! diagonal algebra, every event condition holds while
//! `tr(rho U X U*) = 2 b sin(theta)` for `U = diag(1, e^{i theta})`.

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::algebra::linalg;
use crate::algebra::matrix::{eigh, jordan, same_dim, triple, CMatrix, Event, Hermitian, C64, I};
use crate::algebra::random;
use crate::algebra::spectral::spectral;
use crate::algebra::subalgebra::{block_hermitian_basis, block_spanning_projections, Subalgebra};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::tol::Tolerances;

/// A density matrix: positive semidefinite with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    rho: Hermitian,
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rho.serialize(serializer)
    }
}

impl State {
    pub fn new(rho: Hermitian) -> Result<Self> {
        Self::with_tolerance(rho, &Tolerances::DEFAULT)
    }

    /// Eigenvalues in `[-tol.psd, 0)` are clamped to zero; anything more
    /// negative is rejected.
    pub fn with_tolerance(rho: Hermitian, tol: &Tolerances) -> Result<Self> {
        let trace = rho.trace();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace { trace });
        }
        let (values, vectors) = eigh(rho.matrix())?;
        let min = values[0];
        if min < -tol.psd {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        if min >= 0.0 {
            return Ok(State { rho });
        }
        let clamped = DVector::from_iterator(values.len(), values.iter().map(|&l| C64::new(l.max(0.0), 0.0)));
        let m = &vectors * CMatrix::from_diagonal(&clamped) * vectors.adjoint();
        let h = Hermitian::symmetrized(m);
        let t = h.trace();
        Ok(State { rho: h.scale(1.0 / t) })
    }

    /// Normalizes a positive semidefinite matrix by its trace.
    pub fn from_unnormalized(h: &Hermitian) -> Result<Self> {
        let t = h.trace();
        if !(t > 0.0) {
            return Err(Error::BadTrace { trace: t });
        }
        State::new(h.scale(1.0 / t))
    }

    /// `1/n`.
    pub fn trace_state(n: usize) -> Self {
        State { rho: Hermitian::scalar(n, 1.0 / n as f64) }
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let e = Event::ket(v)?;
        Ok(State { rho: e.as_hermitian().clone() })
    }

    pub fn density(&self) -> &Hermitian {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn evaluate(&self, x: &Hermitian) -> Result<f64> {
        evaluate(self, x)
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.rho.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    /// `mu(Y) > 0` for every nonzero positive `Y` of `m`: every atom has
    /// probability above `tol.cond` (abelian case), or every diagonal block
    /// of `rho` has smallest eigenvalue above `tol.cond` (block case).
    pub fn is_faithful_on(&self, m: &Subalgebra, tol: &Tolerances) -> bool {
        match m {
            Subalgebra::Atomic(b) => b.atoms().iter().all(|e| self.rho.inner(e.as_hermitian()) > tol.cond),
            Subalgebra::Block(b) => b.blocks().iter().all(|e| {
                let v = e.range_basis();
                let block = Hermitian::symmetrized(v.adjoint() * self.rho.matrix() * v);
                block.min_eigenvalue() > tol.cond
            }),
        }
    }
}

/// `mu(X) = tr(rho X)`.
pub fn evaluate(mu: &State, x: &Hermitian) -> Result<f64> {
    same_dim(mu.dim(), x.dim())?;
    Ok(mu.rho.inner(x))
}

/// `Re tr(rho E X F)`, which equals `mu({E, X, F})`.
pub(crate) fn sandwich(rho: &CMatrix, e: &CMatrix, x: &CMatrix, f: &CMatrix) -> f64 {
    let left = f * rho * e;
    left.iter().zip(x.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

/// `mu({E, X, E'})` with `E' = 1 - E`.
pub fn event_violation(mu: &State, e: &Event, x: &Hermitian) -> Result<f64> {
    same_dim(mu.dim(), e.dim())?;
    same_dim(mu.dim(), x.dim())?;
    let n = mu.dim();
    let comp = CMatrix::identity(n, n) - e.matrix();
    Ok(sandwich(mu.rho.matrix(), e.matrix(), x.matrix(), &comp))
}

/// `mu({E,F,E}) / mu(E)`, clamped to `[0, 1]`.
pub fn cond_prob(mu: &State, f: &Event, e: &Event) -> Result<f64> {
    cond_prob_with(mu, f, e, &Tolerances::DEFAULT)
}

pub fn cond_prob_with(mu: &State, f: &Event, e: &Event, tol: &Tolerances) -> Result<f64> {
    same_dim(mu.dim(), f.dim())?;
    same_dim(mu.dim(), e.dim())?;
    let pe = mu.rho.inner(e.as_hermitian());
    if pe <= tol.cond {
        return Err(Error::ConditioningOnNull { probability: pe });
    }
    let num = sandwich(mu.rho.matrix(), e.matrix(), f.matrix(), e.matrix());
    Ok((num / pe).clamp(0.0, 1.0))
}

/// Result of asking whether `{E,F,E} = lambda E` for some real `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveProbability {
    pub exists: bool,
    pub lambda: Option<f64>,
    /// `||{E,F,E} - lambda E||_F` for the best `lambda`.
    pub defect: f64,
}

/// State-independent conditional probability of `F` given `E`.
pub fn objective_prob(f: &Event, e: &Event) -> Result<ObjectiveProbability> {
    objective_prob_with(f, e, &Tolerances::DEFAULT)
}

pub fn objective_prob_with(f: &Event, e: &Event, tol: &Tolerances) -> Result<ObjectiveProbability> {
    same_dim(e.dim(), f.dim())?;
    if e.is_zero() {
        return Err(Error::ZeroEvent);
    }
    let efe = triple(e.matrix(), f.matrix(), e.matrix());
    let lambda = efe.trace() / e.rank() as f64;
    let defect = efe.distance(&e.as_hermitian().scale(lambda));
    let exists = defect <= tol.obj;
    Ok(ObjectiveProbability { exists, lambda: exists.then_some(lambda), defect })
}

fn compat_scale(x: &Hermitian) -> f64 {
    x.norm().max(1.0)
}

/// `|mu({E,X,E}) - mu(E o X)| <= tol.compat * max(1, ||X||)`.
pub fn event_compatible(mu: &State, e: &Event, x: &Hermitian) -> Result<bool> {
    event_compatible_with(mu, e, x, &Tolerances::DEFAULT)
}

pub fn event_compatible_with(mu: &State, e: &Event, x: &Hermitian, tol: &Tolerances) -> Result<bool> {
    Ok(event_violation(mu, e, x)?.abs() <= tol.compat * compat_scale(x))
}

/// Which compatibility relation is being decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// Event form: `mu({E,X,E'}) = 0` for all events `E` of the subalgebra.
    Jordan,
    /// Unitary form: `mu(U X U*) = mu(X)` for all unitaries of the
    /// generated von Neumann algebra.
    Unitary,
}

/// Compressions `V_i^dagger A V_j` between all pairs of projections.
struct Blocks {
    bases: Vec<CMatrix>,
    x: Vec<Vec<CMatrix>>,
    rho: Vec<Vec<CMatrix>>,
}

impl Blocks {
    fn new(projections: &[Event], rho: &CMatrix, x: &CMatrix) -> Self {
        let bases: Vec<CMatrix> = projections.iter().map(|e| e.range_basis().clone()).collect();
        let k = bases.len();
        let xv: Vec<CMatrix> = bases.iter().map(|v| x * v).collect();
        let rv: Vec<CMatrix> = bases.iter().map(|v| rho * v).collect();
        let mut xb = vec![Vec::with_capacity(k); k];
        let mut rb = vec![Vec::with_capacity(k); k];
        for i in 0..k {
            let vi = bases[i].adjoint();
            for j in 0..k {
                xb[i].push(&vi * &xv[j]);
                rb[i].push(&vi * &rv[j]);
            }
        }
        Blocks { bases, x: xb, rho: rb }
    }

    fn len(&self) -> usize {
        self.bases.len()
    }
}

fn traceless(m: &CMatrix) -> CMatrix {
    let r = m.nrows();
    let t = m.trace() / C64::new(r as f64, 0.0);
    m - CMatrix::identity(r, r) * t
}

/// `rho_ij - i beta X_ij` for the real `beta` minimizing its norm.
fn off_imaginary_line(rho_ij: &CMatrix, x_ij: &CMatrix) -> CMatrix {
    let nx = x_ij.norm_squared();
    if nx == 0.0 {
        return rho_ij.clone();
    }
    let beta = x_ij.dotc(rho_ij).im / nx;
    rho_ij - x_ij * (I * beta)
}

/// Defect of the relation, already divided by `max(1, ||X||)`; the relation
/// holds iff the defect is at most `tol.compat`.
///
/// Abelian subalgebra with atoms `E_i`: the largest `|Re tr(rho E_i X E_j)|`
/// (Jordan) or `|tr(rho E_i X E_j)|` (unitary) over `i != j`, together with
/// the atom conditions. Block subalgebra: `||rho_ii^0|| ||X_ii^0||` for each
/// block, and for each pair `||X_ij|| ||rho_ij - i beta X_ij||` (Jordan) or
/// `||X_ij|| ||rho_ij||` (unitary).
pub fn compatibility_defect(mu: &State, m: &Subalgebra, x: &Hermitian, relation: Relation) -> Result<f64> {
    same_dim(m.dim(), x.dim())?;
    same_dim(m.dim(), mu.dim())?;
    let blocks = Blocks::new(m.projections(), mu.rho.matrix(), x.matrix());
    let k = blocks.len();
    let mut defect = 0.0_f64;
    match m {
        Subalgebra::Atomic(_) => {
            let mut row_sums = vec![0.0; k];
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    let z = (&blocks.rho[j][i] * &blocks.x[i][j]).trace();
                    row_sums[i] += z.re;
                    if i < j {
                        defect = defect.max(match relation {
                            Relation::Jordan => z.re.abs(),
                            Relation::Unitary => z.norm(),
                        });
                    }
                }
            }
            defect = row_sums.iter().fold(defect, |d, s| d.max(s.abs()));
        }
        Subalgebra::Block(_) => {
            for i in 0..k {
                defect = defect.max(traceless(&blocks.rho[i][i]).norm() * traceless(&blocks.x[i][i]).norm());
                for j in i + 1..k {
                    let xij = &blocks.x[i][j];
                    let rest = match relation {
                        Relation::Jordan => off_imaginary_line(&blocks.rho[i][j], xij).norm(),
                        Relation::Unitary => blocks.rho[i][j].norm(),
                    };
                    defect = defect.max(xij.norm() * rest);
                }
            }
        }
    }
    Ok(defect / compat_scale(x))
}

/// Exact decision of the Jordan relation: `mu({E,X,E}) = mu(E o X)` for
/// every event `E` of `m`.
pub fn algebra_compatible(mu: &State, m: &Subalgebra, x: &Hermitian) -> Result<bool> {
    algebra_compatible_with(mu, m, x, &Tolerances::DEFAULT)
}

pub fn algebra_compatible_with(mu: &State, m: &Subalgebra, x: &Hermitian, tol: &Tolerances) -> Result<bool> {
    Ok(compatibility_defect(mu, m, x, Relation::Jordan)? <= tol.compat)
}

/// Exact decision of the unitary relation: `mu(U X U*) = mu(X)` for every
/// unitary `U` of the von Neumann algebra generated by `m`.
pub fn unitarily_compatible(mu: &State, m: &Subalgebra, x: &Hermitian) -> Result<bool> {
    unitarily_compatible_with(mu, m, x, &Tolerances::DEFAULT)
}

pub fn unitarily_compatible_with(mu: &State, m: &Subalgebra, x: &Hermitian, tol: &Tolerances) -> Result<bool> {
    Ok(compatibility_defect(mu, m, x, Relation::Unitary)? <= tol.compat)
}

/// An event `E` of the subalgebra together with `mu({E,X,E'})`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessEvent {
    pub event: Event,
    pub violation: f64,
}

impl Serialize for WitnessEvent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("WitnessEvent", 2)?;
        s.serialize_field("event", self.event.as_hermitian())?;
        s.serialize_field("violation", &self.violation)?;
        s.end()
    }
}

fn rank_one(v: &CMatrix, a: &DVector<C64>) -> (DVector<C64>, Event) {
    let n = v.nrows();
    let w = v * a;
    let w = &w / C64::new(w.norm(), 0.0);
    let e = Event::from_orthonormal_columns(CMatrix::from_column_slice(n, 1, w.as_slice()), n);
    (w, e)
}

fn pair_sum(p: &DVector<C64>, q: &DVector<C64>) -> Event {
    let n = p.len();
    let mut cols = CMatrix::zeros(n, 2);
    cols.set_column(0, p);
    cols.set_column(1, q);
    Event::from_orthonormal_columns(cols, n)
}

/// The candidate event of `m` with the largest `|mu({E,X,E'})|`.
///
/// Candidates come in triples `P, Q, P + Q` for orthogonal `P, Q`; since
/// `f(P) + f(Q) - f(P+Q) = 2 mu({P,X,Q})`, the best candidate violates by at
/// least two thirds of the largest `|mu({P,X,Q})|` among the pairs tried.
/// The pairs are atoms (abelian case); rank-one projections in an adapted
/// basis of each block; and, between two blocks, a spanning vector of one
/// block paired with the optimal vector of the other.
pub fn compatibility_witness(mu: &State, m: &Subalgebra, x: &Hermitian) -> Result<WitnessEvent> {
    same_dim(m.dim(), x.dim())?;
    same_dim(m.dim(), mu.dim())?;
    let projections = m.projections();
    let mut candidates: Vec<Event> = Vec::new();
    match m {
        Subalgebra::Atomic(_) => {
            for (i, e) in projections.iter().enumerate() {
                candidates.push(e.clone());
                for f in &projections[i + 1..] {
                    candidates.push(Event::orthogonal_sum(&[e, f])?);
                }
            }
        }
        Subalgebra::Block(_) => {
            let blocks = Blocks::new(projections, mu.rho.matrix(), x.matrix());
            for i in 0..blocks.len() {
                candidates.push(projections[i].clone());
                if let Some(a) = best_within_block(&blocks.rho[i][i], &blocks.x[i][i])? {
                    let (_, p) = rank_one(&blocks.bases[i], &a);
                    let q = Hermitian::symmetrized(projections[i].matrix() - p.matrix());
                    candidates.push(Event::new(q)?);
                    candidates.push(p);
                }
                for j in 0..blocks.len() {
                    if i == j {
                        continue;
                    }
                    if let Some((a, b)) = best_across_blocks(&blocks.rho[j][i], &blocks.x[i][j])? {
                        let (wa, p) = rank_one(&blocks.bases[i], &a);
                        let (wb, q) = rank_one(&blocks.bases[j], &b);
                        candidates.push(pair_sum(&wa, &wb));
                        candidates.push(p);
                        candidates.push(q);
                    }
                }
            }
        }
    }
    let mut best: Option<WitnessEvent> = None;
    for e in candidates {
        let v = event_violation(mu, &e, x)?;
        if best.as_ref().is_none_or(|b| v.abs() > b.violation.abs()) {
            best = Some(WitnessEvent { event: e, violation: v });
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Unit vector `a` of the block maximizing
/// `|<a| rho o X |a> - <a|X|a><a|rho|a>|`, searched over
/// `cos t e_k + sin t e^{i phi} e_l` in a basis that diagonalizes `X` and,
/// inside each eigenspace of `X`, also `rho`.
fn best_within_block(rho: &CMatrix, x: &CMatrix) -> Result<Option<DVector<C64>>> {
    let r = x.nrows();
    if r < 2 {
        return Ok(None);
    }
    let xh = Hermitian::symmetrized(x.clone());
    let spec = spectral(&xh, &Tolerances::DEFAULT)?;
    if spec.projections.len() < 2 {
        return Ok(None);
    }
    let mut basis = CMatrix::zeros(r, r);
    let mut cluster = Vec::with_capacity(r);
    let mut col = 0;
    for (c, p) in spec.projections.iter().enumerate() {
        let w = p.range_basis();
        let local = w.adjoint() * rho * w;
        let (_, vecs) = eigh(&Hermitian::symmetrized(local).into_matrix())?;
        let adapted = w * vecs;
        for k in 0..adapted.ncols() {
            basis.set_column(col, &adapted.column(k));
            cluster.push(c);
            col += 1;
        }
    }
    let rho_a = basis.adjoint() * rho * &basis;
    let x_a = basis.adjoint() * x * &basis;
    let jr = jordan(&rho_a, &x_a).into_matrix();
    let score = |a: &DVector<C64>| -> f64 {
        let q = |m: &CMatrix| (a.adjoint() * m * a)[(0, 0)].re;
        q(&jr) - q(&x_a) * q(&rho_a)
    };
    let angles = [std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_3];
    let mut best: Option<(f64, DVector<C64>)> = None;
    for k in 0..r {
        for l in k + 1..r {
            if cluster[k] == cluster[l] {
                continue;
            }
            for &t in &angles {
                for q in 0..4 {
                    let phase = C64::from_polar(1.0, q as f64 * std::f64::consts::FRAC_PI_2);
                    let mut a = DVector::zeros(r);
                    a[k] = C64::new(t.cos(), 0.0);
                    a[l] = phase * t.sin();
                    let s = score(&a).abs();
                    if best.as_ref().is_none_or(|(b, _)| s > *b) {
                        best = Some((s, a));
                    }
                }
            }
        }
    }
    Ok(best.map(|(_, a)| &basis * a))
}

/// Vectors `a` (block `i`) and `b` (block `j`) maximizing
/// `|Re <a|X_ij|b><b|rho_ji|a>|`: `b` ranges over a spanning family of
/// block `j` and `a` is the top eigenvector of the Hermitian part of
/// `X_ij |b><b| rho_ji`.
fn best_across_blocks(rho_ji: &CMatrix, x_ij: &CMatrix) -> Result<Option<(DVector<C64>, DVector<C64>)>> {
    let rj = x_ij.ncols();
    if x_ij.norm() == 0.0 || rho_ji.norm() == 0.0 {
        return Ok(None);
    }
    let ident = CMatrix::identity(rj, rj);
    let mut best: Option<(f64, DVector<C64>, DVector<C64>)> = None;
    for e in block_spanning_projections(&ident) {
        let b: DVector<C64> = e.range_basis().column(0).into_owned();
        let k = x_ij * &b * (b.adjoint() * rho_ji);
        let (values, vectors) = eigh(&Hermitian::symmetrized(k).into_matrix())?;
        let (idx, val) = if values[0].abs() > values[values.len() - 1].abs() {
            (0, values[0])
        } else {
            (values.len() - 1, values[values.len() - 1])
        };
        if best.as_ref().is_none_or(|(s, _, _)| val.abs() > *s) {
            best = Some((val.abs(), vectors.column(idx).into_owned(), b));
        }
    }
    Ok(best.map(|(_, a, b)| (a, b)))
}

/// Which relation a slice encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceKind {
    Jordan,
    Invariant,
    Custom,
}

/// The real linear space of Hermitian `rho` satisfying the (linear in `rho`
/// once `X` is fixed) compatibility constraints, with an orthonormal basis.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibleSlice {
    pub dim: usize,
    pub kind: SliceKind,
    pub basis: Vec<Hermitian>,
    pub constraints: Vec<String>,
}

impl CompatibleSlice {
    /// Slice spanned by arbitrary Hermitian matrices (orthonormalized).
    pub fn from_spanning(n: usize, spanning: &[Hermitian]) -> Result<Self> {
        for h in spanning {
            same_dim(n, h.dim())?;
        }
        let mut a = DMatrix::zeros(n * n, spanning.len());
        for (c, h) in spanning.iter().enumerate() {
            a.set_column(c, &h.to_real_coords());
        }
        let q = linalg::orthonormal_columns(&a, 1e-12);
        let basis = q.column_iter().map(|c| Hermitian::from_real_coords(n, &c.into_owned())).collect();
        Ok(CompatibleSlice { dim: n, kind: SliceKind::Custom, basis, constraints: vec!["spanned by the given elements".into()] })
    }

    pub fn real_dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, h: &Hermitian) -> Hermitian {
        self.basis.iter().fold(Hermitian::zeros(self.dim), |acc, b| &acc + &b.scale(b.inner(h)))
    }

    /// Frobenius distance from `h` to the slice, relative to `max(1, ||h||_F)`.
    pub fn distance(&self, h: &Hermitian) -> f64 {
        self.project(h).distance(h) / h.frobenius_norm().max(1.0)
    }

    pub fn contains(&self, h: &Hermitian, tol: &Tolerances) -> bool {
        self.distance(h) <= tol.slice.max(1e-12) * 10.0
    }

    pub fn contains_trace_state(&self) -> bool {
        let t = Hermitian::scalar(self.dim, 1.0 / (self.dim as f64).sqrt());
        self.project(&t).distance(&t) <= 1e-9
    }
}

fn atomic_constraint_slice(m: &Subalgebra, x: &Hermitian, kind: SliceKind) -> CompatibleSlice {
    let n = x.dim();
    let atoms = m.projections();
    let mut functionals: Vec<Hermitian> = Vec::new();
    let mut constraints = Vec::new();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let exy = atoms[i].matrix() * x.matrix() * atoms[j].matrix();
            let sym = Hermitian::symmetrized(exy.clone());
            constraints.push(format!("Re tr(rho E{i} X E{j}) = 0"));
            functionals.push(sym);
            if kind == SliceKind::Invariant {
                functionals.push(Hermitian::symmetrized(exy * I));
                constraints.push(format!("Im tr(rho E{i} X E{j}) = 0"));
            }
        }
    }
    let mut a = DMatrix::zeros(n * n, functionals.len());
    for (c, h) in functionals.iter().enumerate() {
        a.set_column(c, &h.to_real_coords());
    }
    let q = linalg::orthonormal_columns(&a, Tolerances::DEFAULT.slice);
    let comp = linalg::complement(&q, n * n);
    let basis = comp.column_iter().map(|c| Hermitian::from_real_coords(n, &c.into_owned())).collect();
    CompatibleSlice { dim: n, kind, basis, constraints }
}

fn block_constraint_slice(m: &Subalgebra, x: &Hermitian, kind: SliceKind, tol: &Tolerances) -> CompatibleSlice {
    let n = x.dim();
    let blocks = m.projections();
    let bases: Vec<&CMatrix> = blocks.iter().map(|e| e.range_basis()).collect();
    let cut = tol.compat * compat_scale(x);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    let mut constraints = Vec::new();
    for (i, v) in bases.iter().enumerate() {
        let xii = v.adjoint() * x.matrix() * *v;
        if traceless(&xii).norm() <= cut {
            basis.extend(block_hermitian_basis(v));
        } else {
            constraints.push(format!("traceless part of E{i} rho E{i} vanishes"));
            basis.push(blocks[i].as_hermitian().scale(1.0 / (blocks[i].rank() as f64).sqrt()));
        }
    }
    for i in 0..bases.len() {
        for j in i + 1..bases.len() {
            let (vi, vj) = (bases[i], bases[j]);
            let xij = vi.adjoint() * x.matrix() * vj;
            if xij.norm() <= cut {
                for a in 0..vi.ncols() {
                    for b in 0..vj.ncols() {
                        let ab = vi.column(a) * vj.column(b).adjoint();
                        let ba = ab.adjoint();
                        basis.push(Hermitian::symmetrized((&ab + &ba) * C64::new(s, 0.0)));
                        basis.push(Hermitian::symmetrized((ab - ba) * (I * s)));
                    }
                }
            } else if kind == SliceKind::Jordan {
                constraints.push(format!("E{i} rho E{j} is an imaginary multiple of E{i} X E{j}"));
                let w = vi * (&xij * I) * vj.adjoint();
                let h = Hermitian::symmetrized(&w + w.adjoint());
                let norm = h.frobenius_norm();
                basis.push(h.scale(1.0 / norm));
            } else {
                constraints.push(format!("E{i} rho E{j} = 0"));
            }
        }
    }
    CompatibleSlice { dim: n, kind, basis, constraints }
}

/// States (up to positivity) satisfying the Jordan relation with `(m, x)`.
pub fn compatible_slice(m: &Subalgebra, x: &Hermitian) -> Result<CompatibleSlice> {
    compatible_slice_with(m, x, &Tolerances::DEFAULT)
}

pub fn compatible_slice_with(m: &Subalgebra, x: &Hermitian, tol: &Tolerances) -> Result<CompatibleSlice> {
    same_dim(m.dim(), x.dim())?;
    Ok(match m {
        Subalgebra::Atomic(_) => atomic_constraint_slice(m, x, SliceKind::Jordan),
        Subalgebra::Block(_) => block_constraint_slice(m, x, SliceKind::Jordan, tol),
    })
}

/// States (up to positivity) satisfying the unitary relation with `(m, x)`.
pub fn invariant_slice(m: &Subalgebra, x: &Hermitian) -> Result<CompatibleSlice> {
    invariant_slice_with(m, x, &Tolerances::DEFAULT)
}

pub fn invariant_slice_with(m: &Subalgebra, x: &Hermitian, tol: &Tolerances) -> Result<CompatibleSlice> {
    same_dim(m.dim(), x.dim())?;
    Ok(match m {
        Subalgebra::Atomic(_) => atomic_constraint_slice(m, x, SliceKind::Invariant),
        Subalgebra::Block(_) => block_constraint_slice(m, x, SliceKind::Invariant, tol),
    })
}

/// Outcome of the faithfulness test of a family of states on a subalgebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Faithfulness {
    pub faithful: bool,
    /// The family contains the (faithful) trace state.
    pub via_trace_state: bool,
}

/// Whether the positive members of `slice` separate the positive elements
/// of `m`. True immediately when the trace state lies in the slice;
/// otherwise the positive (or negative) basis elements are summed and their
/// joint support is tested on every atom or block. The second test is
/// sufficient for a positive answer.
pub fn is_faithful_on(slice: &CompatibleSlice, m: &Subalgebra) -> Faithfulness {
    if slice.dim != m.dim() {
        return Faithfulness { faithful: false, via_trace_state: false };
    }
    if slice.contains_trace_state() {
        return Faithfulness { faithful: true, via_trace_state: true };
    }
    let mut support = Hermitian::zeros(slice.dim);
    for b in &slice.basis {
        let ev = b.eigenvalues();
        if ev[0] >= -1e-12 {
            support = &support + b;
        } else if ev[ev.len() - 1] <= 1e-12 {
            support = &support - b;
        }
    }
    let faithful = match m {
        Subalgebra::Atomic(b) => b.atoms().iter().all(|e| support.inner(e.as_hermitian()) > 1e-9),
        Subalgebra::Block(b) => b.blocks().iter().all(|e| {
            let v = e.range_basis();
            Hermitian::symmetrized(v.adjoint() * support.matrix() * v).min_eigenvalue() > 1e-9
        }),
    };
    Faithfulness { faithful, via_trace_state: false }
}

/// Checks, on seeded random Hermitian triples of size `n`, the trace
/// identities of the Jordan product: `tr(X o {Z,Y,Z}) = tr({Z,X,Z} o Y)`,
/// `tr(X o (Y o Z)) = tr((X o Y) o Z)`, `tr(X o Y) >= 0` for positive `X, Y`,
/// and `tr(S X S) = tr(X)` for symmetries `S`.
pub fn check_trace_identities(seed: u64, n: usize, triples: usize) -> Report {
    let mut report = Report::new(format!("traces/n{n}/seed{seed}"));
    let mut rng = random::rng(seed);
    let thr = 1e-9;
    for _ in 0..triples {
        let x = random::hermitian(n, &mut rng);
        let y = random::hermitian(n, &mut rng);
        let z = random::hermitian(n, &mut rng);
        let (xm, ym, zm) = (x.matrix(), y.matrix(), z.matrix());
        let scale = (x.frobenius_norm() * y.frobenius_norm() * z.frobenius_norm() * z.frobenius_norm()).max(1.0);

        let lhs = jordan(xm, triple(zm, ym, zm).matrix()).trace();
        let rhs = jordan(triple(zm, xm, zm).matrix(), ym).trace();
        report.residual("triple_symmetry", (lhs - rhs).abs() / scale, thr);

        let scale3 = (x.frobenius_norm() * y.frobenius_norm() * z.frobenius_norm()).max(1.0);
        let lhs = jordan(xm, jordan(ym, zm).matrix()).trace();
        let rhs = jordan(jordan(xm, ym).matrix(), zm).trace();
        report.residual("associativity_under_trace", (lhs - rhs).abs() / scale3, thr);

        let rank = 1 + (n - 1) / 2;
        let p = random::psd(n, rank, &mut rng);
        let q = random::psd(n, n, &mut rng);
        let t = jordan(p.matrix(), q.matrix()).trace();
        let scale2 = (p.frobenius_norm() * q.frobenius_norm()).max(1.0);
        report.residual("positivity", (-t).max(0.0) / scale2, thr);

        let e = random::projection(n, 1 + rank / 2, &mut rng);
        let s = crate::algebra::matrix::symmetry_from(&e);
        let sxs = triple(s.matrix(), xm, s.matrix());
        report.residual("symmetry_invariance", (sxs.trace() - x.trace()).abs() / x.frobenius_norm().max(1.0), thr);
    }
    report.value("n", n as f64).value("triples", triples as f64);
    report
}
