use crate::algebra::matrix::{Event, Hermitian, C64};
use crate::algebra::subalgebra::{generated_abelian, AtomicAbelian, Subalgebra};
use crate::condexp::{objective_cond_exp_with, ObjectiveStatus};
use crate::error::{Error, Result};
use crate::lueders::{post_measurement_state, Partition};
use crate::report::Report;
use crate::states::State;
use crate::tol::Tolerances;
use crate::verify::checks::tensor_no_go;

pub const DEMO_CASES: [&str; 4] = ["interference", "repeatability", "tensor-nogo", "p-given-y"];

fn plus() -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(s, 0.0), C64::new(s, 0.0)]
}

/// Scripted examples: `interference`, `repeatability`, `tensor-nogo`,
/// `p-given-y`.
pub fn demo(case: &str) -> Result<Report> {
    let tol = Tolerances::DEFAULT;
    match case {
        "interference" => {
            let mu = State::pure(&plus())?;
            let f = Event::ket(&plus())?;
            let b = AtomicAbelian::diagonal(2);
            let after = post_measurement_state(&mu, &Partition::atomic(&b))?;
            let before = mu.evaluate(f.as_hermitian())?;
            let measured = after.evaluate(f.as_hermitian())?;
            let mut r = Report::new("demo/interference");
            r.value("mu_F", before).value("mu_P_F", measured);
            r.residual("mu_F_error", (before - 1.0).abs(), 1e-12);
            r.residual("mu_P_F_error", (measured - 0.5).abs(), 1e-12);
            r.witness("rho_P", after.density().clone());
            r.note("measuring the diagonal atoms destroys the off-diagonal coherence of |+>: the post-measurement state differs from the original");
            Ok(r)
        }
        "repeatability" => {
            let mu = State::pure(&plus())?;
            let b = AtomicAbelian::diagonal(2);
            let p = Partition::atomic(&b);
            let once = post_measurement_state(&mu, &p)?;
            let twice = post_measurement_state(&once, &p)?;
            let mut r = Report::new("demo/repeatability");
            r.residual("repeat_residual", twice.density().distance(once.density()), 1e-12);
            r.note("a repetition of the same measurement reproduces the result");
            Ok(r)
        }
        "tensor-nogo" => {
            let mut r = tensor_no_go(&tol)?;
            r.id = "demo/tensor-nogo".into();
            r.note("X = 1 (x) sigma_z commutes with B = {P_0 (x) 1, P_1 (x) 1} but does not lie in it, so no objective conditional expectation exists");
            Ok(r)
        }
        "p-given-y" => {
            let y = Hermitian::from_real_diagonal(&[1.0, 2.0]);
            let e = Event::ket(&plus())?;
            let b = generated_abelian(&y, &tol)?;
            let spectrum = y.eigenvalues();
            let mut r = Report::new("demo/p-given-y");
            let mut f_of_y = Hermitian::zeros(2);
            for atom in b.atoms() {
                let lambda = y.inner(atom.as_hermitian()) / atom.rank() as f64;
                let p = e.as_hermitian().compress(atom).trace() / atom.rank() as f64;
                r.value(format!("f({lambda})"), p);
                r.residual(format!("f({lambda})_error"), (p - 0.5).abs(), 1e-12);
                f_of_y = &f_of_y + &atom.as_hermitian().scale(p);
            }
            let m: Subalgebra = b.into();
            let obj = objective_cond_exp_with(e.as_hermitian(), &m, &tol)?;
            r.expect("objective_exists", obj.status == ObjectiveStatus::Unique);
            let diff = obj.value.map_or(f64::INFINITY, |v| v.distance(&f_of_y));
            r.residual("objective_equals_f_of_Y", diff, 1e-9);
            r.value("spectrum_min", spectrum[0]).value("spectrum_max", spectrum[spectrum.len() - 1]);
            r.witness("f_of_Y", f_of_y);
            Ok(r)
        }
        other => Err(Error::UnknownCase(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_passes() {
        for case in DEMO_CASES {
            let r = demo(case).unwrap();
            assert!(r.passed, "{case}: {r:?}");
        }
        assert!(matches!(demo("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn interference_values() {
        let r = demo("interference").unwrap();
        assert!((r.values["mu_F"] - 1.0).abs() < 1e-12);
        assert!((r.values["mu_P_F"] - 0.5).abs() < 1e-12);
    }
}
