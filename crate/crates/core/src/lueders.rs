//! Partitions of an atomic abelian algebra, the measurement sums
//! `sum_{E in P} {E,X,E}`, their limit `M(X|B)`, and post-measurement states.

use rand::Rng;
use serde::Serialize;

use crate::algebra::matrix::{jordan, same_dim, CMatrix, Event, Hermitian, Operator};
use crate::algebra::random;
use crate::algebra::subalgebra::{pinch, AtomicAbelian, Subalgebra};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::states::{cond_prob, State};

/// Default cap on the number of partitions enumerated exhaustively.
pub const DEFAULT_PARTITION_CAP: u64 = 1_000_000;

/// Partitions are enumerated exhaustively by [`lueders_properties`] only up
/// to this many; beyond that a fixed sample is used.
pub const PROPERTY_ENUMERATION_CAP: u64 = 1_000;

/// Mutually orthogonal nonzero events of `base` summing to 1, stored as
/// sorted sets of atom indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<'a> {
    base: &'a AtomicAbelian,
    cells: Vec<Vec<usize>>,
}

impl Serialize for Partition<'_> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.cells.serialize(serializer)
    }
}

impl<'a> Partition<'a> {
    /// Cells must be nonempty, disjoint and cover every atom.
    pub fn new(base: &'a AtomicAbelian, cells: Vec<Vec<usize>>) -> Result<Self> {
        let k = base.len();
        let mut seen = vec![false; k];
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::InvalidPartition("empty cell".into()));
            }
            for &a in cell {
                if a >= k {
                    return Err(Error::InvalidPartition(format!("atom index {a} out of range (k = {k})")));
                }
                if seen[a] {
                    return Err(Error::InvalidPartition(format!("atom {a} appears twice")));
                }
                seen[a] = true;
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("atom {a} is not covered")));
        }
        Ok(Self::normalized(base, cells))
    }

    fn normalized(base: &'a AtomicAbelian, mut cells: Vec<Vec<usize>>) -> Self {
        for c in &mut cells {
            c.sort_unstable();
        }
        cells.sort();
        Partition { base, cells }
    }

    /// One cell per atom: the finest partition.
    pub fn atomic(base: &'a AtomicAbelian) -> Self {
        Partition { base, cells: (0..base.len()).map(|i| vec![i]).collect() }
    }

    /// The single cell `{1}`.
    pub fn coarsest(base: &'a AtomicAbelian) -> Self {
        Partition { base, cells: vec![(0..base.len()).collect()] }
    }

    fn from_labels(base: &'a AtomicAbelian, labels: &[usize]) -> Self {
        let blocks = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut cells = vec![Vec::new(); blocks];
        for (atom, &l) in labels.iter().enumerate() {
            cells[l].push(atom);
        }
        Partition { base, cells }
    }

    pub fn base(&self) -> &'a AtomicAbelian {
        self.base
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn events(&self) -> Vec<Event> {
        self.cells.iter().map(|c| self.base.event(c)).collect()
    }
}

/// `p` is finer than `q`: every cell of `p` lies inside a cell of `q`.
pub fn refines(p: &Partition, q: &Partition) -> Result<bool> {
    if p.base != q.base {
        return Err(Error::DifferentBase);
    }
    let k = q.base.len();
    let mut owner = vec![usize::MAX; k];
    for (ci, cell) in q.cells.iter().enumerate() {
        for &a in cell {
            owner[a] = ci;
        }
    }
    Ok(p.cells.iter().all(|cell| cell.iter().all(|&a| owner[a] == owner[cell[0]])))
}

/// The Bell number `B(k)` (number of set partitions of `k` elements);
/// saturates at `u128::MAX`.
pub fn bell(k: usize) -> u128 {
    let mut row: Vec<u128> = vec![1];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty"));
        for v in &row {
            let prev = *next.last().expect("nonempty");
            next.push(prev.saturating_add(*v));
        }
        row = next;
    }
    row[0]
}

/// Iterator over all partitions, in the order of restricted growth strings.
pub struct PartitionIter<'a> {
    base: &'a AtomicAbelian,
    labels: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl<'a> Iterator for PartitionIter<'a> {
    type Item = Partition<'a>;

    fn next(&mut self) -> Option<Partition<'a>> {
        if self.done {
            return None;
        }
        let out = Partition::from_labels(self.base, &self.labels);
        // Advance to the next restricted growth string: a[0] = 0 and
        // a[i] <= 1 + max(a[0..i]).
        let k = self.labels.len();
        let mut i = k;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxes[i - 1] {
                self.labels[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.labels[i]);
                for j in i + 1..k {
                    self.labels[j] = 0;
                    self.maxes[j] = self.maxes[i];
                }
                break;
            }
        }
        Some(out)
    }
}

/// All partitions of the atoms of `base`, provided `Bell(k) <= cap`.
pub fn partitions_of(base: &AtomicAbelian, cap: u64) -> Result<PartitionIter<'_>> {
    let k = base.len();
    let b = bell(k);
    if b > cap as u128 {
        return Err(Error::TooManyPartitions { atoms: k, bell: b as f64, cap });
    }
    Ok(PartitionIter { base, labels: vec![0; k], maxes: vec![0; k], done: k == 0 })
}

/// A seeded chain from the coarsest to the atomic partition, each step
/// splitting one cell in two; its length is the number of atoms.
pub fn refinement_chain(base: &AtomicAbelian, seed: u64) -> Vec<Partition<'_>> {
    let mut rng = random::rng(seed);
    let mut cells: Vec<Vec<usize>> = vec![(0..base.len()).collect()];
    let mut chain = vec![Partition::normalized(base, cells.clone())];
    loop {
        let splittable: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].len() > 1).collect();
        if splittable.is_empty() {
            break;
        }
        let ci = splittable[rng.random_range(0..splittable.len())];
        let cell = cells.swap_remove(ci);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (pos, &a) in cell.iter().enumerate() {
            let to_left = match pos {
                0 => true,
                1 => false,
                _ => rng.random_bool(0.5),
            };
            if to_left {
                left.push(a);
            } else {
                right.push(a);
            }
        }
        cells.push(left);
        cells.push(right);
        chain.push(Partition::normalized(base, cells.clone()));
    }
    chain
}

/// A uniformly random labelling turned into a partition (not uniform over
/// partitions; used for sampling when enumeration is capped).
pub fn random_partition<'a, R: Rng + ?Sized>(base: &'a AtomicAbelian, rng: &mut R) -> Partition<'a> {
    let k = base.len();
    let groups = rng.random_range(1..=k);
    let labels: Vec<usize> = (0..k).map(|_| rng.random_range(0..groups)).collect();
    let mut relabel = vec![usize::MAX; groups];
    let mut next = 0;
    let labels: Vec<usize> = labels
        .iter()
        .map(|&l| {
            if relabel[l] == usize::MAX {
                relabel[l] = next;
                next += 1;
            }
            relabel[l]
        })
        .collect();
    Partition::from_labels(base, &labels)
}

/// `sum_{E in P} {E, X, E}`.
pub fn measurement_sum(p: &Partition, x: &Hermitian) -> Result<Hermitian> {
    same_dim(p.base.dim(), x.dim())?;
    Ok(pinch(&p.events(), x))
}

/// `M(X|B)`: in finite dimension the refinement net has the atomic
/// partition as its maximum, so the limit is `sum_i E_i X E_i`.
pub fn m_of(x: &Hermitian, b: &AtomicAbelian) -> Result<Hermitian> {
    same_dim(b.dim(), x.dim())?;
    Ok(pinch(b.atoms(), x))
}

/// `rho_P = sum_{E in P} E rho E`.
pub fn post_measurement_state(mu: &State, p: &Partition) -> Result<State> {
    same_dim(p.base.dim(), mu.dim())?;
    let rho = pinch(&p.events(), mu.density());
    let t = rho.trace();
    State::new(rho.scale(1.0 / t))
}

/// `sum_{E in P} mu(F|E) mu(E)`, with the product taken as 0 when
/// `mu(E) = 0`.
pub fn mixture_value(mu: &State, p: &Partition, f: &Event) -> Result<f64> {
    let mut total = 0.0;
    for e in p.events() {
        let pe = mu.density().inner(e.as_hermitian());
        match cond_prob(mu, f, &e) {
            Ok(c) => total += c * pe,
            Err(Error::ConditioningOnNull { .. }) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(total)
}

/// Checks of the measurement map for `(B, X)` with a unitary `U` commuting
/// with `B`: the norm bound over partitions, membership of `M(X|B)` in the
/// commutant, the module identity, idempotence, the chain limit, and the
/// behavior under `U`.
///
/// `M(U X U*|B) = M(X|B)` is asserted when `U` lies in the algebra generated
/// by `B` (`U = sum_i lambda_i E_i`); for a unitary that merely commutes
/// with `B` the identity that holds is `M(U X U*|B) = U M(X|B) U*`, which
/// is asserted in every case.
pub fn lueders_properties(b: &AtomicAbelian, x: &Hermitian, u: &Operator, seed: u64) -> Result<Report> {
    same_dim(b.dim(), x.dim())?;
    same_dim(b.dim(), u.dim())?;
    let defect = u.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::NotUnitary { defect });
    }
    let comm = b.atoms().iter().map(|e| u.commutator_norm(e.matrix())).fold(0.0, f64::max);
    if comm > 1e-9 {
        return Err(Error::NonCommutingUnitary { defect: comm });
    }
    let n = b.dim();
    let k = b.len();
    let xnorm = x.norm();
    let scale = xnorm.max(1.0);
    let thr = 1e-9;
    let mut report = Report::new(format!("lemma3.1/k{k}/n{n}/seed{seed}"));
    let mut rng = random::rng(seed);
    let mx = m_of(x, b)?;

    let mut checked = 0usize;
    let mut check_norm = |p: &Partition, report: &mut Report| -> Result<()> {
        let v = measurement_sum(p, x)?;
        report.residual("norm_bound", (v.norm() - xnorm).max(0.0) / scale, thr);
        checked += 1;
        Ok(())
    };
    match partitions_of(b, PROPERTY_ENUMERATION_CAP) {
        Ok(iter) => {
            for p in iter {
                check_norm(&p, &mut report)?;
            }
            report.note("norm bound checked over every partition");
        }
        Err(Error::TooManyPartitions { .. }) => {
            for _ in 0..50 {
                let p = random_partition(b, &mut rng);
                check_norm(&p, &mut report)?;
            }
            report.note("norm bound checked on 50 sampled partitions");
        }
        Err(e) => return Err(e),
    }
    report.value("partitions_checked", checked as f64);

    let atomic = Partition::atomic(b);
    report.residual("atomic_sum_equals_limit", measurement_sum(&atomic, x)?.distance(&mx) / scale, 1e-12);
    let commutant: Subalgebra = b.commutant().into();
    report.residual("commutant_membership", commutant.project(&mx).distance(&mx) / scale, thr);

    let y = commutant.project(&random::hermitian(n, &mut rng));
    let lhs = m_of(&jordan(y.matrix(), x.matrix()), b)?;
    let rhs = jordan(y.matrix(), mx.matrix());
    report.residual("module_identity", lhs.distance(&rhs) / (y.frobenius_norm() * scale).max(1.0), thr);

    report.residual("idempotence", m_of(&mx, b)?.distance(&mx) / scale, thr);

    let chain = refinement_chain(b, random::sub_seed(seed, 1));
    let last = measurement_sum(chain.last().expect("chain is nonempty"), x)?;
    report.residual("chain_limit", last.distance(&mx) / scale, thr);
    report.value("chain_length", chain.len() as f64);

    let moved = m_of(&u.conjugate(x), b)?;
    report.residual("unitary_covariance", moved.distance(&u.conjugate(&mx)) / scale, thr);
    if in_generated_algebra(b, u) {
        report.residual("unitary_invariance", moved.distance(&mx) / scale, thr);
    } else {
        report.note("U commutes with B but is not in the algebra generated by B; invariance replaced by covariance U M(X|B) U*");
    }
    Ok(report)
}

/// `E_i U E_i` is a multiple of `E_i` for every atom.
fn in_generated_algebra(b: &AtomicAbelian, u: &Operator) -> bool {
    b.atoms().iter().all(|e| {
        let v = e.range_basis();
        let block = v.adjoint() * u.matrix() * v;
        let r = block.nrows();
        let lambda = block.trace() / num_complex::Complex64::new(r as f64, 0.0);
        (block - CMatrix::identity(r, r) * lambda).norm() <= 1e-9
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::C64;
    use crate::algebra::subalgebra::random_unitary_in;

    fn four() -> AtomicAbelian {
        AtomicAbelian::diagonal(4)
    }

    fn sigma_x() -> Hermitian {
        Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn bell_numbers() {
        let want = [1u128, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(bell(k), *w);
        }
        assert_eq!(bell(13), 27_644_437);
    }

    #[test]
    fn enumeration_counts() {
        for k in 1..=7 {
            let b = AtomicAbelian::diagonal(k);
            let all: Vec<_> = partitions_of(&b, DEFAULT_PARTITION_CAP).unwrap().collect();
            assert_eq!(all.len() as u128, bell(k));
            let mut cells: Vec<_> = all.iter().map(|p| p.cells().to_vec()).collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), all.len());
        }
        let big = AtomicAbelian::diagonal(13);
        assert!(matches!(partitions_of(&big, 1_000_000), Err(Error::TooManyPartitions { .. })));
    }

    #[test]
    fn refinement_examples() {
        let b = four();
        let atomic = Partition::atomic(&b);
        let coarse = Partition::coarsest(&b);
        let p = Partition::new(&b, vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let q = Partition::new(&b, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(refines(&atomic, &p).unwrap());
        assert!(refines(&p, &coarse).unwrap());
        assert!(refines(&p, &q).unwrap());
        assert!(!refines(&q, &p).unwrap());
        let other = AtomicAbelian::diagonal(3);
        assert!(matches!(refines(&Partition::atomic(&other), &p), Err(Error::DifferentBase)));
        assert!(Partition::new(&b, vec![vec![0, 1], vec![1, 2, 3]]).is_err());
        assert!(Partition::new(&b, vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn measurement_examples() {
        let b = AtomicAbelian::diagonal(2);
        let x = sigma_x();
        assert!(measurement_sum(&Partition::coarsest(&b), &x).unwrap().distance(&x) < 1e-15);
        assert!(measurement_sum(&Partition::atomic(&b), &x).unwrap().frobenius_norm() < 1e-15);
        let z = Hermitian::from_real_diagonal(&[1.0, -1.0]);
        assert!(measurement_sum(&Partition::atomic(&b), &z).unwrap().distance(&z) < 1e-15);
        let ones = Hermitian::from_real_rows(3, &[1.0; 9]).unwrap();
        let b3 = AtomicAbelian::from_block_sizes(&[1, 2]).unwrap();
        let want = Hermitian::from_real_rows(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(m_of(&ones, &b3).unwrap().distance(&want) < 1e-15);
    }

    #[test]
    fn post_measurement_examples() {
        let b = AtomicAbelian::diagonal(2);
        let plus = State::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let after = post_measurement_state(&plus, &Partition::atomic(&b)).unwrap();
        assert!(after.density().distance(&Hermitian::scalar(2, 0.5)) < 1e-15);
        let same = post_measurement_state(&plus, &Partition::coarsest(&b)).unwrap();
        assert!(same.density().distance(plus.density()) < 1e-15);
        let diag = State::new(Hermitian::from_real_diagonal(&[0.3, 0.7])).unwrap();
        let same = post_measurement_state(&diag, &Partition::atomic(&b)).unwrap();
        assert!(same.density().distance(diag.density()) < 1e-15);

        let mut rng = random::rng(8);
        let b4 = random::atomic(&[1, 2, 1], &mut rng);
        let mu = State::new(random::density(4, 2, &mut rng)).unwrap();
        for p in partitions_of(&b4, 100).unwrap() {
            let after = post_measurement_state(&mu, &p).unwrap();
            for _ in 0..5 {
                let f = random::projection(4, 2, &mut rng);
                let lhs = after.evaluate(f.as_hermitian()).unwrap();
                assert!((lhs - mixture_value(&mu, &p, &f).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn chains_end_at_the_atomic_partition() {
        let b = AtomicAbelian::diagonal(6);
        let chain = refinement_chain(&b, 3);
        assert_eq!(chain.len(), 6);
        for w in chain.windows(2) {
            assert!(refines(&w[1], &w[0]).unwrap());
        }
        assert_eq!(chain.last().unwrap(), &Partition::atomic(&b));
    }

    #[test]
    fn properties_examples() {
        let b = AtomicAbelian::diagonal(2);
        let u = random_unitary_in(&b.clone().into(), 4);
        let r = lueders_properties(&b, &sigma_x(), &u, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.residuals.contains_key("unitary_invariance"));

        let t = AtomicAbelian::trivial(3);
        let x = random::hermitian(3, &mut random::rng(2));
        let u = Operator::new(random::haar_unitary(3, &mut random::rng(3))).unwrap();
        let r = lueders_properties(&t, &x, &u, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(!r.residuals.contains_key("unitary_invariance"));

        let h = Operator::new(random::haar_unitary(2, &mut random::rng(5))).unwrap();
        assert!(matches!(lueders_properties(&b, &sigma_x(), &h, 1), Err(Error::NonCommutingUnitary { .. })));
    }
}
