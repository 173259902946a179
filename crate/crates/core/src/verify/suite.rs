use rayon::prelude::*;

use crate::algebra::random::{self, sub_seed};
use crate::algebra::subalgebra::AtomicAbelian;
use crate::error::{Error, Result};
use crate::report::Report;
use crate::states::check_trace_identities;
use crate::tol::Tolerances;
use crate::verify::checks::{
    verify_block_criterion, verify_lemma_2_1, verify_lemma_2_2, verify_lemma_3_1, verify_lemma_5_1, verify_thm_4_1,
    verify_thm_4_2,
};
use crate::verify::demo::{demo, DEMO_CASES};
use crate::verify::instance::{generate_instance, AlgebraChoice, Construction};

pub const SUITES: [&str; 8] = ["lemma2.1", "block-criterion", "lemma2.2", "lemma3.1", "thm4.1", "thm4.2", "lemma5.1", "traces"];

/// Samples per sampled condition in the five-condition check.
pub const CONDITION_SAMPLES: usize = 50;
/// Samples per randomized oracle in the block-criterion check.
pub const ORACLE_SAMPLES: usize = 500;

fn parallel<F>(seed: u64, count: usize, f: F) -> Result<Vec<Report>>
where
    F: Fn(usize, u64) -> Result<Report> + Sync,
{
    (0..count).into_par_iter().map(|i| f(i, sub_seed(seed, i as u64))).collect()
}

fn suite_seed(seed: u64, suite: &str) -> u64 {
    let tag = suite.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    sub_seed(seed, tag)
}

/// Runs one named suite (or `all`, which also runs the demos). Reports come
/// back in a fixed order independent of thread scheduling.
pub fn run_suite(suite: &str, seed: u64, trials: usize, tol: &Tolerances) -> Result<Vec<Report>> {
    if suite == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, seed, trials, tol)?);
        }
        for case in DEMO_CASES {
            out.push(demo(case)?);
        }
        return Ok(out);
    }
    let s = suite_seed(seed, suite);
    match suite {
        "lemma2.1" => parallel(s, trials, |i, seed| {
            let construction =
                if i % 2 == 0 { Construction::CompatibleByConstruction } else { Construction::PerturbedIncompatible };
            let inst = generate_instance(seed, construction, AlgebraChoice::Any, tol)?;
            verify_lemma_2_1(&inst, CONDITION_SAMPLES, tol)
        }),
        "block-criterion" => parallel(s, trials, |i, seed| {
            let construction = [
                Construction::CompatibleByConstruction,
                Construction::JordanOnly,
                Construction::PerturbedIncompatible,
            ][i % 3];
            let inst = generate_instance(seed, construction, AlgebraChoice::Block, tol)?;
            verify_block_criterion(&inst, ORACLE_SAMPLES, tol)
        }),
        "lemma2.2" => Ok(vec![verify_lemma_2_2(s, (trials / 2).max(1), tol)?]),
        "lemma3.1" => parallel(s, trials, |i, seed| verify_lemma_3_1(seed, 1 + i % 6)),
        "thm4.1" => parallel(s, trials, |i, seed| verify_thm_4_1(seed, [4, 6, 8, 12, 16][i % 5], tol)),
        "thm4.2" => {
            let count = (trials / 5).max(1);
            let mut out = parallel(s, count, |i, seed| {
                let mut rng = random::rng(seed);
                let n = 2 + i % 7;
                let b = random::maximal_abelian(n, &mut rng);
                verify_thm_4_2(&b, sub_seed(seed, 1), 20, true, tol)
            })?;
            let trivial = AtomicAbelian::trivial(3);
            out.push(verify_thm_4_2(&trivial, sub_seed(s, u64::MAX), 20, false, tol)?);
            let tensor = AtomicAbelian::from_block_sizes(&[2, 2])?;
            let mut r = verify_thm_4_2(&tensor, sub_seed(s, u64::MAX - 1), 20, false, tol)?;
            let refused = matches!(verify_thm_4_2(&tensor, 0, 1, true, tol), Err(Error::CommutantNotAbelian));
            r.expect("triple_identity_refused", refused);
            r.note("B = {P_0 (x) 1, P_1 (x) 1} has a non-abelian commutant, so the triple identity is not asserted");
            out.push(r);
            Ok(out)
        }
        "lemma5.1" => parallel(s, 3, |i, seed| {
            let mut rng = random::rng(seed);
            let n = [4, 6, 8][i];
            let k = 2 + i;
            let b = random::atomic(&random::composition(n, k, &mut rng), &mut rng);
            verify_lemma_5_1(sub_seed(seed, 1), &b, trials, 20, tol)
        }),
        "traces" => parallel(s, trials, |i, seed| {
            let n = 2 + i % 11;
            let mut r = check_trace_identities(seed, n, 1);
            r.id = format!("traces/n{n}/{i}");
            Ok(r)
        }),
        other => Err(Error::UnknownCase(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_unknown() {
        let tol = Tolerances::DEFAULT;
        let r = run_suite("lemma2.1", 7, 10, &tol).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|r| r.passed), "{r:?}");
        assert!(matches!(run_suite("lemma9", 1, 1, &tol), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn order_is_deterministic() {
        let tol = Tolerances::DEFAULT;
        let a = run_suite("traces", 3, 12, &tol).unwrap();
        let b = run_suite("traces", 3, 12, &tol).unwrap();
        let ids: Vec<_> = a.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, b.iter().map(|r| r.id.clone()).collect::<Vec<_>>());
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
