pub mod linalg;
pub mod matrix;
pub mod random;
pub mod spectral;
pub mod subalgebra;

pub use matrix::{jordan_product, symmetry_from, triple_product, CMatrix, Event, Hermitian, Operator, C64};
pub use spectral::{spectral, SpectralDecomposition};
pub use subalgebra::{
    commutant, generated_abelian, member, project_onto, random_unitary_in, AtomicAbelian, BlockAlgebra, Subalgebra,
};
