use jbwcond::condexp::{cond_exp_with, defining_residual, global_ce, objective_cond_exp_with, ObjectiveStatus};
use jbwcond::lueders::{m_of, post_measurement_state, Partition};
use jbwcond::states::{cond_prob_with, objective_prob_with};
use jbwcond::{Error, Report, Subalgebra, Tolerances};

use crate::error::CliError;
use crate::problem::{Problem, Task};

/// A task report and whether its result is a mathematical nonexistence.
pub struct Outcome {
    pub report: Report,
    pub nonexistent: bool,
}

fn exists(report: Report) -> Outcome {
    Outcome { report, nonexistent: false }
}

fn absent(mut report: Report) -> Outcome {
    report.expect("exists", false);
    Outcome { report, nonexistent: true }
}

pub fn run_task(p: &Problem, index: usize, task: &Task, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let at = |field: &str| format!("/tasks/{index}/{field}");
    let mut r = Report::new(format!("{}/{index}", task.op()));
    match task {
        Task::Condprob { state, event, given } => {
            let mu = p.state(state, &at("state"))?;
            let f = p.event(event, &at("event"))?;
            let e = p.event(given, &at("given"))?;
            match cond_prob_with(mu, f, e, tol) {
                Ok(v) => {
                    r.value("probability", v);
                    Ok(exists(r))
                }
                Err(Error::ConditioningOnNull { probability }) => {
                    r.value("given_probability", probability);
                    r.note("conditioning event has probability zero");
                    Ok(absent(r))
                }
                Err(e) => Err(e.into()),
            }
        }
        Task::Objprob { event, given } => {
            let f = p.event(event, &at("event"))?;
            let e = p.event(given, &at("given"))?;
            let o = objective_prob_with(f, e, tol)?;
            r.value("defect", o.defect);
            match o.lambda {
                Some(l) => {
                    r.value("probability", l);
                    Ok(exists(r))
                }
                None => {
                    r.note("{E,F,E} is not a multiple of E");
                    Ok(absent(r))
                }
            }
        }
        Task::Condexp { state, element, algebra, commutant } => {
            let mu = p.state(state, &at("state"))?;
            let x = p.element(element, &at("element"))?;
            let b = p.algebra(algebra, &at("algebra"))?;
            let m: Subalgebra = if *commutant { b.commutant().into() } else { b.clone().into() };
            match cond_exp_with(mu, &x, &m, tol) {
                Ok(ce) => {
                    let res = defining_residual(mu, &x, &ce.canonical, &m.spanning_events());
                    r.residual("defining_residual", res / x.norm().max(1.0), 1e-9);
                    r.value("unique", if ce.unique { 1.0 } else { 0.0 });
                    r.value("version_space_dimension", ce.version_space.len() as f64);
                    r.witness("canonical", ce.canonical);
                    for (i, z) in ce.version_space.into_iter().enumerate() {
                        r.witness(format!("version_direction_{i}"), z);
                    }
                    Ok(exists(r))
                }
                Err(Error::Incompatible { witness }) => {
                    r.value("violation", witness.violation);
                    r.witness("violating_event", witness.event.as_hermitian().clone());
                    r.note("state is not compatible with the element on this algebra");
                    Ok(absent(r))
                }
                Err(e) => Err(e.into()),
            }
        }
        Task::Objexp { element, algebra, commutant } => {
            let x = p.element(element, &at("element"))?;
            let b = p.algebra(algebra, &at("algebra"))?;
            let m: Subalgebra = if *commutant { b.commutant().into() } else { b.clone().into() };
            let o = objective_cond_exp_with(&x, &m, tol)?;
            r.value("residual", o.residual);
            r.value("slice_dimension", o.slice_dimension as f64);
            r.value("equations", o.equations as f64);
            r.note(format!("status {}", serde_json::to_string(&o.status).unwrap_or_default().trim_matches('"')));
            if let Some(v) = o.value {
                r.witness("value", v);
            }
            for (i, k) in o.kernel.into_iter().enumerate() {
                r.witness(format!("kernel_{i}"), k);
            }
            if let (Some((s0, s1)), Some((y0, y1))) = (o.witness_states, o.witness_canonicals) {
                r.value("canonical_gap", (&y0 - &y1).norm());
                r.witness("witness_state_a", s0.density().clone()).witness("witness_state_b", s1.density().clone());
                r.witness("witness_canonical_a", y0).witness("witness_canonical_b", y1);
            }
            match o.status {
                ObjectiveStatus::Nonexistent => Ok(absent(r)),
                _ => Ok(exists(r)),
            }
        }
        Task::Globalce { element, algebra } => {
            let x = p.element(element, &at("element"))?;
            let b = p.algebra(algebra, &at("algebra"))?;
            let pi = global_ce(b);
            r.witness("value", pi.apply(&x)?);
            r.absorb("checks", &pi.verify(seed, 20));
            Ok(exists(r))
        }
        Task::Measure { state, algebra, cells } => {
            let mu = p.state(state, &at("state"))?;
            let b = p.algebra(algebra, &at("algebra"))?;
            let partition = match cells {
                Some(c) => Partition::new(b, c.clone()).map_err(|e| CliError::Schema { pointer: at("cells"), message: e.to_string() })?,
                None => Partition::atomic(b),
            };
            let after = post_measurement_state(mu, &partition)?;
            r.value("cells", partition.len() as f64);
            r.witness("state", after.density().clone());
            Ok(exists(r))
        }
        Task::Mofx { element, algebra } => {
            let x = p.element(element, &at("element"))?;
            let b = p.algebra(algebra, &at("algebra"))?;
            r.witness("value", m_of(&x, b)?);
            Ok(exists(r))
        }
    }
}
