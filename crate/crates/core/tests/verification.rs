use jbwcond::algebra::random;
use jbwcond::algebra::subalgebra::commutant_dimension_by_nullspace;
use jbwcond::states::State;
use jbwcond::verify::{
    verify_lemma_2_1, verify_lemma_5_1, verify_thm_4_1, verify_thm_4_2, Construction, Instance, GENERATOR_VERSION,
};
use jbwcond::{generated_abelian, AtomicAbelian, Error, Hermitian, Subalgebra, Tolerances, C64};

fn qubit_instance(state: State, x: Hermitian) -> Instance {
    let algebra: Subalgebra = AtomicAbelian::diagonal(2).into();
    Instance {
        seed: 0,
        dim: 2,
        algebra_kind: algebra.kind(),
        ranks: vec![1, 1],
        algebra,
        state,
        element: x,
        construction: Construction::PerturbedIncompatible,
        generator_version: GENERATOR_VERSION,
    }
}

fn plus() -> State {
    State::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap()
}

#[test]
fn five_conditions_fail_together_on_the_plus_state() {
    let sigma_x = Hermitian::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let r = verify_lemma_2_1(&qubit_instance(plus(), sigma_x), 50, &Tolerances::DEFAULT).unwrap();
    assert!(r.passed, "{r:?}");
    for c in ["i_all_events", "ii_complement_sampled", "iii_symmetry_sampled", "iv_orthogonal_pairs", "v_unitary_sampled"] {
        assert_eq!(r.values[c], 0.0, "{c}");
    }
    assert!((r.values["witness_violation"].abs() - 0.5).abs() < 1e-12);
    let w = &r.witnesses["witness_event"];
    let rank_one_diagonal = w.distance(&Hermitian::from_real_diagonal(&[1.0, 0.0])) < 1e-12
        || w.distance(&Hermitian::from_real_diagonal(&[0.0, 1.0])) < 1e-12;
    assert!(rank_one_diagonal, "{w:?}");
}

#[test]
fn identity_is_compatible_with_every_state() {
    let mut inst = qubit_instance(plus(), Hermitian::identity(2));
    inst.construction = Construction::CompatibleByConstruction;
    let r = verify_lemma_2_1(&inst, 50, &Tolerances::DEFAULT).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.values["v_unitary_sampled"], 1.0);
}

#[test]
fn commutant_dimension_matches_nullspace_oracle() {
    let mut rng = random::rng(4);
    for sizes in [vec![1, 1, 1], vec![2, 2], vec![1, 3], vec![2, 1, 2], vec![4]] {
        let b = random::atomic(&sizes, &mut rng);
        let want: usize = sizes.iter().map(|r| r * r).sum();
        assert_eq!(b.commutant().real_dimension(), want);
        assert_eq!(commutant_dimension_by_nullspace(&b), want);
    }
}

#[test]
fn commutant_identity_examples() {
    let tol = Tolerances::DEFAULT;
    for (seed, n) in [(1, 6), (2, 4), (3, 8)] {
        let r = verify_thm_4_1(seed, n, &tol).unwrap();
        assert!(r.passed, "{r:?}");
    }
    let b = generated_abelian(&Hermitian::from_real_diagonal(&[1.0, 2.0, 3.0]), &tol).unwrap();
    assert!(verify_thm_4_2(&b, 1, 20, true, &tol).unwrap().passed);
    let trivial = AtomicAbelian::trivial(3);
    assert!(verify_thm_4_2(&trivial, 1, 20, false, &tol).unwrap().passed);
    let tensor = AtomicAbelian::from_block_sizes(&[2, 2]).unwrap();
    assert!(verify_thm_4_2(&tensor, 1, 20, false, &tol).unwrap().passed);
    assert!(matches!(verify_thm_4_2(&tensor, 1, 20, true, &tol), Err(Error::CommutantNotAbelian)));
}

#[test]
fn state_membership_decides_compatibility_with_everything() {
    let tol = Tolerances::DEFAULT;
    let b = random::atomic(&[1, 2, 2], &mut random::rng(9));
    let r = verify_lemma_5_1(5, &b, 30, 20, &tol).unwrap();
    assert!(r.passed, "{r:?}");
    let members = r.values["members"];
    assert!(members > 0.0 && members < 30.0);
}
