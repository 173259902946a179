//! Seeded verification of the structural results: random instance
//! generators, per-result checks returning [`Report`](crate::Report)s, scripted
//! demos, and named suites.

mod checks;
mod demo;
mod instance;
mod suite;

pub use checks::{
    tensor_no_go, verify_block_criterion, verify_lemma_2_1, verify_lemma_2_2, verify_lemma_3_1, verify_lemma_5_1,
    verify_thm_4_1, verify_thm_4_2,
};
pub use demo::{demo, DEMO_CASES};
pub use instance::{generate_instance, AlgebraChoice, Construction, Instance, GENERATOR_VERSION};
pub use suite::{run_suite, CONDITION_SAMPLES, ORACLE_SAMPLES, SUITES};
