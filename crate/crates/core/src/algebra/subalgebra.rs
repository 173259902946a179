//! Atomic abelian subalgebras, their commutants (block algebras), membership
//! and trace-orthogonal projection.

use nalgebra::DVector;
use rand::Rng;

use crate::algebra::matrix::{CMatrix, Event, Hermitian, Operator, C64, I};
use crate::algebra::random;
use crate::algebra::spectral::spectral;
use crate::error::{Error, Result};
use crate::tol::Tolerances;

fn validate_partition_of_unity(events: &[Event], tol: &Tolerances) -> Result<usize> {
    let n = events.first().map(Event::dim).ok_or_else(|| Error::InvalidAtoms("no atoms given".into()))?;
    for (i, e) in events.iter().enumerate() {
        if e.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: e.dim() });
        }
        if e.is_zero() {
            return Err(Error::InvalidAtoms(format!("atom {i} is zero")));
        }
    }
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            let overlap = (events[i].matrix() * events[j].matrix()).norm();
            if overlap > tol.idem {
                return Err(Error::InvalidAtoms(format!("atoms {i} and {j} overlap ({overlap:.3e})")));
            }
        }
    }
    let sum = events.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e.matrix());
    let defect = (sum - CMatrix::identity(n, n)).norm();
    if defect > tol.idem * (n as f64).sqrt() {
        return Err(Error::InvalidAtoms(format!("atoms do not sum to the identity ({defect:.3e})")));
    }
    Ok(n)
}

/// An abelian subalgebra containing 1, given by its atoms `E_1..E_k`
/// (mutually orthogonal, nonzero, summing to 1). Its events are the sums
/// of subsets of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicAbelian {
    dim: usize,
    atoms: Vec<Event>,
}

impl AtomicAbelian {
    pub fn new(atoms: Vec<Event>) -> Result<Self> {
        Self::with_tolerance(atoms, &Tolerances::DEFAULT)
    }

    pub fn with_tolerance(atoms: Vec<Event>, tol: &Tolerances) -> Result<Self> {
        let dim = validate_partition_of_unity(&atoms, tol)?;
        Ok(AtomicAbelian { dim, atoms })
    }

    /// `{R 1}`.
    pub fn trivial(n: usize) -> Self {
        AtomicAbelian { dim: n, atoms: vec![Event::identity(n)] }
    }

    /// Diagonal matrices: rank-one atoms on the coordinate axes.
    pub fn diagonal(n: usize) -> Self {
        AtomicAbelian { dim: n, atoms: (0..n).map(|a| Event::diagonal(n, &[a])).collect() }
    }

    /// Consecutive coordinate blocks of the given sizes.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut start = 0;
        let mut atoms = Vec::with_capacity(sizes.len());
        for &s in sizes {
            if s == 0 {
                return Err(Error::InvalidAtoms("block of size zero".into()));
            }
            atoms.push(Event::diagonal(n, &(start..start + s).collect::<Vec<_>>()));
            start += s;
        }
        Ok(AtomicAbelian { dim: n, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Event] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.atoms.iter().map(Event::rank).collect()
    }

    /// Every atom has rank one, so the algebra equals its own commutant.
    pub fn is_maximal(&self) -> bool {
        self.atoms.iter().all(|a| a.rank() == 1)
    }

    /// Sum of the atoms with the given indices.
    pub fn event(&self, indices: &[usize]) -> Event {
        if indices.is_empty() {
            return Event::zero(self.dim);
        }
        let parts: Vec<&Event> = indices.iter().map(|&i| &self.atoms[i]).collect();
        Event::orthogonal_sum(&parts).expect("atoms are orthogonal")
    }

    pub fn commutant(&self) -> BlockAlgebra {
        commutant(self)
    }
}

/// The algebra `sum_i E_i A E_i` of block-diagonal Hermitian matrices with
/// respect to mutually orthogonal blocks `E_i` summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAlgebra {
    dim: usize,
    blocks: Vec<Event>,
}

impl BlockAlgebra {
    pub fn new(blocks: Vec<Event>) -> Result<Self> {
        Self::with_tolerance(blocks, &Tolerances::DEFAULT)
    }

    pub fn with_tolerance(blocks: Vec<Event>, tol: &Tolerances) -> Result<Self> {
        let dim = validate_partition_of_unity(&blocks, tol)?;
        Ok(BlockAlgebra { dim, blocks })
    }

    /// The whole algebra as a single block.
    pub fn full(n: usize) -> Self {
        BlockAlgebra { dim: n, blocks: vec![Event::identity(n)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Event] {
        &self.blocks
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(Event::rank).collect()
    }

    /// Real dimension of the Hermitian part, `sum_i r_i^2`.
    pub fn real_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.rank() * b.rank()).sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.blocks.iter().all(|b| b.rank() == 1)
    }

    /// The atomic abelian algebra generated by the block projections; its
    /// commutant is `self`.
    pub fn center(&self) -> AtomicAbelian {
        AtomicAbelian { dim: self.dim, atoms: self.blocks.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Subalgebra {
    Atomic(AtomicAbelian),
    Block(BlockAlgebra),
}

impl From<AtomicAbelian> for Subalgebra {
    fn from(b: AtomicAbelian) -> Self {
        Subalgebra::Atomic(b)
    }
}

impl From<BlockAlgebra> for Subalgebra {
    fn from(b: BlockAlgebra) -> Self {
        Subalgebra::Block(b)
    }
}

/// Hermitian basis of the block spanned by `v` (orthonormal columns), in
/// the order diagonal, symmetric, antisymmetric.
pub(crate) fn block_hermitian_basis(v: &CMatrix) -> Vec<Hermitian> {
    let r = v.ncols();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(r * r);
    let col = |a: usize| -> DVector<C64> { v.column(a).into_owned() };
    for a in 0..r {
        out.push(Hermitian::outer(&col(a)));
    }
    for a in 0..r {
        for b in a + 1..r {
            let ab = col(a) * col(b).adjoint();
            let ba = ab.adjoint();
            out.push(Hermitian::symmetrized((&ab + &ba) * C64::new(s, 0.0)));
            out.push(Hermitian::symmetrized((ab - ba) * (I * s)));
        }
    }
    out
}

/// Rank-one projections whose real span is the Hermitian part of the block
/// spanned by `v`.
pub(crate) fn block_spanning_projections(v: &CMatrix) -> Vec<Event> {
    let r = v.ncols();
    let n = v.nrows();
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut out = Vec::with_capacity(r * r);
    let unit = |w: DVector<C64>| Event::from_orthonormal_columns(CMatrix::from_column_slice(n, 1, w.as_slice()), n);
    for a in 0..r {
        out.push(unit(v.column(a).into_owned()));
    }
    for a in 0..r {
        for b in a + 1..r {
            out.push(unit((v.column(a) + v.column(b)) * s));
            out.push(unit((v.column(a) + v.column(b) * I) * s));
        }
    }
    out
}

impl Subalgebra {
    pub fn dim(&self) -> usize {
        match self {
            Subalgebra::Atomic(b) => b.dim,
            Subalgebra::Block(b) => b.dim,
        }
    }

    /// Atoms of an abelian algebra, or blocks of a block algebra.
    pub fn projections(&self) -> &[Event] {
        match self {
            Subalgebra::Atomic(b) => &b.atoms,
            Subalgebra::Block(b) => &b.blocks,
        }
    }

    pub fn real_dimension(&self) -> usize {
        match self {
            Subalgebra::Atomic(b) => b.len(),
            Subalgebra::Block(b) => b.real_dimension(),
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            Subalgebra::Atomic(_) => true,
            Subalgebra::Block(b) => b.is_abelian(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Subalgebra::Atomic(_) => "atomic-abelian",
            Subalgebra::Block(_) => "block",
        }
    }

    /// Trace-orthonormal basis of the Hermitian part.
    pub fn basis(&self) -> Vec<Hermitian> {
        match self {
            Subalgebra::Atomic(b) => b.atoms.iter().map(|e| e.as_hermitian().scale(1.0 / (e.rank() as f64).sqrt())).collect(),
            Subalgebra::Block(b) => b.blocks.iter().flat_map(|e| block_hermitian_basis(e.range_basis())).collect(),
        }
    }

    /// Coordinates of the trace-orthogonal projection of `h` in the basis
    /// returned by [`Subalgebra::basis`].
    pub fn coords(&self, h: &Hermitian) -> DVector<f64> {
        match self {
            Subalgebra::Atomic(b) => DVector::from_iterator(
                b.len(),
                b.atoms.iter().map(|e| e.as_hermitian().inner(h) / (e.rank() as f64).sqrt()),
            ),
            Subalgebra::Block(b) => {
                let mut out = Vec::with_capacity(b.real_dimension());
                for e in &b.blocks {
                    let v = e.range_basis();
                    let c = Hermitian::symmetrized(v.adjoint() * h.matrix() * v);
                    out.extend(c.to_real_coords().iter().copied());
                }
                DVector::from_vec(out)
            }
        }
    }

    /// Inverse of [`Subalgebra::coords`] on the subalgebra.
    pub fn from_coords(&self, y: &DVector<f64>) -> Hermitian {
        let n = self.dim();
        match self {
            Subalgebra::Atomic(b) => b.atoms.iter().zip(y.iter()).fold(Hermitian::zeros(n), |acc, (e, c)| {
                &acc + &e.as_hermitian().scale(c / (e.rank() as f64).sqrt())
            }),
            Subalgebra::Block(b) => {
                let mut out = CMatrix::zeros(n, n);
                let mut k = 0;
                for e in &b.blocks {
                    let r = e.rank();
                    let block = Hermitian::from_real_coords(r, &y.rows(k, r * r).into_owned());
                    let v = e.range_basis();
                    out += v * block.matrix() * v.adjoint();
                    k += r * r;
                }
                Hermitian::symmetrized(out)
            }
        }
    }

    /// A finite family of events whose real span is the whole subalgebra.
    pub fn spanning_events(&self) -> Vec<Event> {
        match self {
            Subalgebra::Atomic(b) => b.atoms.clone(),
            Subalgebra::Block(b) => b.blocks.iter().flat_map(|e| block_spanning_projections(e.range_basis())).collect(),
        }
    }

    pub fn contains(&self, y: &Hermitian, tol: &Tolerances) -> bool {
        member(self, y, tol)
    }

    pub fn project(&self, y: &Hermitian) -> Hermitian {
        project_onto(self, y)
    }

    /// A random event of the subalgebra (random subset of atoms, or a
    /// Haar-random projection of random rank inside every block).
    pub fn random_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Event {
        let n = self.dim();
        match self {
            Subalgebra::Atomic(b) => {
                let chosen: Vec<usize> = (0..b.len()).filter(|_| rng.random_bool(0.5)).collect();
                b.event(&chosen)
            }
            Subalgebra::Block(b) => {
                let mut cols: Vec<DVector<C64>> = Vec::new();
                for blk in &b.blocks {
                    let r = blk.rank();
                    let k = rng.random_range(0..=r);
                    if k == 0 {
                        continue;
                    }
                    let w = blk.range_basis() * random::haar_unitary(r, rng);
                    cols.extend((0..k).map(|c| w.column(c).into_owned()));
                }
                let mut v = CMatrix::zeros(n, cols.len());
                for (c, col) in cols.iter().enumerate() {
                    v.set_column(c, col);
                }
                Event::from_orthonormal_columns(v, n)
            }
        }
    }
}

/// Atoms are the spectral projections of `x`, in ascending eigenvalue order.
pub fn generated_abelian(x: &Hermitian, tol: &Tolerances) -> Result<AtomicAbelian> {
    let d = spectral(x, tol)?;
    Ok(AtomicAbelian { dim: x.dim(), atoms: d.projections })
}

/// The commutant of an atomic abelian algebra: block-diagonal matrices with
/// the atoms as blocks.
pub fn commutant(b: &AtomicAbelian) -> BlockAlgebra {
    BlockAlgebra { dim: b.dim, blocks: b.atoms.clone() }
}

/// Membership within `tol.member * max(1, ||Y||_F)` of the Frobenius
/// distance to the subalgebra.
///
/// # Panics
/// If the dimensions differ.
pub fn member(m: &Subalgebra, y: &Hermitian, tol: &Tolerances) -> bool {
    assert_eq!(m.dim(), y.dim(), "dimension mismatch");
    let defect = project_onto(m, y).distance(y);
    defect <= tol.member * y.frobenius_norm().max(1.0)
}

/// Nearest member in Frobenius norm. For an abelian algebra this is
/// `sum_i tr(E_i Y)/tr(E_i) E_i`, for a block algebra `sum_i E_i Y E_i`.
///
/// # Panics
/// If the dimensions differ.
pub fn project_onto(m: &Subalgebra, y: &Hermitian) -> Hermitian {
    assert_eq!(m.dim(), y.dim(), "dimension mismatch");
    let n = m.dim();
    match m {
        Subalgebra::Atomic(b) => b.atoms.iter().fold(Hermitian::zeros(n), |acc, e| {
            let c = e.as_hermitian().inner(y) / e.rank() as f64;
            &acc + &e.as_hermitian().scale(c)
        }),
        Subalgebra::Block(b) => pinch(&b.blocks, y),
    }
}

/// `sum_i E_i Y E_i`.
pub(crate) fn pinch(blocks: &[Event], y: &Hermitian) -> Hermitian {
    let n = y.dim();
    let mut out = CMatrix::zeros(n, n);
    for e in blocks {
        let v = e.range_basis();
        out += v * (v.adjoint() * y.matrix() * v) * v.adjoint();
    }
    Hermitian::symmetrized(out)
}

/// A seeded random unitary in the von Neumann algebra generated by `m`:
/// `sum_k exp(i theta_k) E_k` for an abelian algebra, a direct sum of
/// Haar unitaries for a block algebra.
pub fn random_unitary_in(m: &Subalgebra, seed: u64) -> Operator {
    let mut rng = random::rng(seed);
    random_unitary_with(m, &mut rng)
}

pub(crate) fn random_unitary_with<R: Rng + ?Sized>(m: &Subalgebra, rng: &mut R) -> Operator {
    let n = m.dim();
    let mut u = CMatrix::zeros(n, n);
    match m {
        Subalgebra::Atomic(b) => {
            for e in &b.atoms {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                u += e.matrix() * C64::from_polar(1.0, theta);
            }
        }
        Subalgebra::Block(b) => {
            for e in &b.blocks {
                let v = e.range_basis();
                u += v * random::haar_unitary(e.rank(), rng) * v.adjoint();
            }
        }
    }
    Operator::new(u).expect("square by construction")
}

/// Number of real parameters of Hermitian matrices commuting with every atom,
/// computed as the null space of the commutator map. Test oracle for
/// [`commutant`].
pub fn commutant_dimension_by_nullspace(b: &AtomicAbelian) -> usize {
    let n = b.dim();
    let basis = Hermitian::standard_basis(n);
    let rows = b.len() * 2 * n * n;
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, n * n);
    for (c, h) in basis.iter().enumerate() {
        let mut r = 0;
        for e in &b.atoms {
            let comm = h.matrix() * e.matrix() - e.matrix() * h.matrix();
            for z in comm.iter() {
                a[(r, c)] = z.re;
                a[(r + 1, c)] = z.im;
                r += 2;
            }
        }
    }
    let svd = a.svd(false, false);
    let smax = svd.singular_values.max();
    n * n - svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax.max(1.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> Hermitian {
        Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn generated_algebras() {
        let t = Tolerances::DEFAULT;
        let b = generated_abelian(&Hermitian::from_real_diagonal(&[1.0, 2.0, 3.0]), &t).unwrap();
        assert_eq!(b.ranks(), vec![1, 1, 1]);
        assert!(b.is_maximal());
        let b = generated_abelian(&Hermitian::from_real_diagonal(&[1.0, 1.0, 2.0]), &t).unwrap();
        assert_eq!(b.ranks(), vec![2, 1]);
        assert!(b.atoms()[0].as_hermitian().distance(&Hermitian::from_real_diagonal(&[1.0, 1.0, 0.0])) < 1e-14);
        let b = generated_abelian(&sigma_x(), &t).unwrap();
        let plus = Hermitian::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(b.atoms()[1].as_hermitian().distance(&plus) < 1e-14);
    }

    #[test]
    fn commutant_shapes() {
        let b = AtomicAbelian::from_block_sizes(&[1, 2]).unwrap();
        let c = commutant(&b);
        assert_eq!(c.real_dimension(), 5);
        assert_eq!(commutant_dimension_by_nullspace(&b), 5);
        assert_eq!(commutant(&AtomicAbelian::trivial(3)).real_dimension(), 9);
        assert_eq!(commutant(&AtomicAbelian::diagonal(2)).real_dimension(), 2);
    }

    #[test]
    fn membership_examples() {
        let t = Tolerances::DEFAULT;
        let diag: Subalgebra = AtomicAbelian::diagonal(2).into();
        assert!(member(&diag, &Hermitian::from_real_diagonal(&[1.0, -1.0]), &t));
        assert!(!member(&diag, &sigma_x(), &t));
        let blocks: Subalgebra = AtomicAbelian::from_block_sizes(&[1, 2]).unwrap().commutant().into();
        let y = Hermitian::from_real_rows(3, &[5.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, -3.0]).unwrap();
        assert!(member(&blocks, &y, &t));
    }

    #[test]
    fn projection_examples() {
        let diag: Subalgebra = AtomicAbelian::diagonal(2).into();
        assert!(project_onto(&diag, &sigma_x()).frobenius_norm() < 1e-15);
        let blocks: Subalgebra = AtomicAbelian::from_block_sizes(&[1, 2]).unwrap().commutant().into();
        let ones = Hermitian::from_real_rows(3, &[1.0; 9]).unwrap();
        let want = Hermitian::from_real_rows(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(project_onto(&blocks, &ones).distance(&want) < 1e-14);
    }

    #[test]
    fn rejects_bad_atoms() {
        let e = Event::diagonal(2, &[0]);
        assert!(AtomicAbelian::new(vec![e.clone()]).is_err());
        assert!(AtomicAbelian::new(vec![e.clone(), e.clone()]).is_err());
        assert!(AtomicAbelian::new(vec![Event::identity(2), Event::zero(2)]).is_err());
        assert!(AtomicAbelian::new(vec![]).is_err());
    }

    #[test]
    fn unitaries_have_the_right_shape() {
        let diag: Subalgebra = AtomicAbelian::diagonal(3).into();
        let u = random_unitary_in(&diag, 7);
        for r in 0..3 {
            for c in 0..3 {
                let z = u.matrix()[(r, c)];
                if r == c {
                    assert!((z.norm() - 1.0).abs() < 1e-14);
                } else {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
        let full: Subalgebra = BlockAlgebra::full(5).into();
        assert!(random_unitary_in(&full, 3).unitarity_defect() < 1e-12);
        let trivial: Subalgebra = AtomicAbelian::trivial(3).into();
        let u = random_unitary_in(&trivial, 11);
        let phase = u.matrix()[(0, 0)];
        assert!((u.matrix() - CMatrix::identity(3, 3) * phase).norm() < 1e-14);
    }

    #[test]
    fn spanning_events_span_the_algebra() {
        let b = AtomicAbelian::from_block_sizes(&[2, 3]).unwrap().commutant();
        let m: Subalgebra = b.into();
        let events = m.spanning_events();
        assert_eq!(events.len(), m.real_dimension());
        let n = m.dim();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n * n, events.len());
        for (c, e) in events.iter().enumerate() {
            a.set_column(c, &e.as_hermitian().to_real_coords());
        }
        assert_eq!(a.rank(1e-10), m.real_dimension());
    }
}
