use std::time::Instant;

use jbwcond::verify::{demo, run_suite};
use jbwcond::{Report, Tolerances};
use serde::Serialize;

use crate::error::{CliError, EXIT_FAILED, EXIT_NONEXISTENT, EXIT_PASS};
use crate::problem::{parse, Problem};
use crate::tasks::run_task;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything one invocation produced.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub generator_version: u32,
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub reports: Vec<Report>,
    pub wall_time_ms: u64,
}

impl RunReport {
    fn new(command: String, seed: u64, reports: Vec<Report>, started: Instant) -> RunReport {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            generator_version: jbwcond::verify::GENERATOR_VERSION,
            command,
            seed,
            passed: reports.iter().all(|r| r.passed),
            reports,
            wall_time_ms: started.elapsed().as_millis() as u64,
        }
    }

    /// One line per report, then a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            let worst = r
                .residuals
                .iter()
                .filter(|(_, v)| !v.ok())
                .map(|(k, v)| format!(" {k}={:.3e} (limit {:.1e})", v.value, v.threshold))
                .collect::<String>();
            out.push_str(&format!("{} {}{}\n", if r.passed { "PASS" } else { "FAIL" }, r.id, worst));
            for (k, v) in &r.values {
                out.push_str(&format!("    {k} = {v}\n"));
            }
            for n in &r.notes {
                out.push_str(&format!("    note: {n}\n"));
            }
        }
        let failed = self.reports.iter().filter(|r| !r.passed).count();
        out.push_str(&format!(
            "{}: {} reports, {} failed, seed {}, {} ms\n",
            self.command,
            self.reports.len(),
            failed,
            self.seed,
            self.wall_time_ms
        ));
        out
    }
}

/// A run report and the process exit code it implies.
pub struct Finished {
    pub report: RunReport,
    pub exit: u8,
}

fn read(path: &std::path::Path, tol: &Tolerances) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Problem::validate(&parse(&text)?, tol)
}

pub fn inspect(path: &std::path::Path, seed: u64, tol: &Tolerances) -> Result<Finished, CliError> {
    let started = Instant::now();
    let p = read(path, tol)?;
    let mut reports = Vec::new();
    let mut summary = Report::new("dimension");
    summary.value("n", p.dimension as f64);
    summary.value("elements", p.elements.len() as f64).value("events", p.events.len() as f64);
    summary.value("states", p.states.len() as f64).value("tasks", p.tasks.len() as f64);
    reports.push(summary);
    for (name, b) in &p.algebras {
        let mut r = Report::new(format!("atoms/{name}"));
        for (i, rank) in b.ranks().into_iter().enumerate() {
            r.value(format!("atom_rank_{i}"), rank as f64);
        }
        let c = b.commutant();
        for (i, rank) in c.ranks().into_iter().enumerate() {
            r.value(format!("commutant_block_{i}"), rank as f64);
        }
        r.value("commutant_real_dimension", c.real_dimension() as f64);
        r.value("commutant_abelian", if c.is_abelian() { 1.0 } else { 0.0 });
        r.value("maximal_abelian", if b.is_maximal() { 1.0 } else { 0.0 });
        reports.push(r);
    }
    for (name, s) in &p.states {
        let mut r = Report::new(format!("state/{name}"));
        r.value("rank", s.rank(tol.psd.max(1e-12)) as f64);
        reports.push(r);
    }
    for (name, e) in &p.events {
        let mut r = Report::new(format!("event/{name}"));
        r.value("rank", e.rank() as f64);
        reports.push(r);
    }
    Ok(Finished { report: RunReport::new(format!("inspect {}", path.display()), seed, reports, started), exit: EXIT_PASS })
}

pub fn compute(path: &std::path::Path, task: Option<usize>, seed: u64, tol: &Tolerances) -> Result<Finished, CliError> {
    let started = Instant::now();
    let p = read(path, tol)?;
    let selected: Vec<usize> = match task {
        Some(i) if i < p.tasks.len() => vec![i],
        Some(i) => {
            return Err(CliError::Schema { pointer: format!("/tasks/{i}"), message: "no such task".into() });
        }
        None => (0..p.tasks.len()).collect(),
    };
    let mut reports = Vec::new();
    let mut nonexistent = false;
    for i in selected {
        let o = run_task(&p, i, &p.tasks[i], seed, tol)?;
        nonexistent |= o.nonexistent;
        reports.push(o.report);
    }
    let report = RunReport::new(format!("compute {}", path.display()), seed, reports, started);
    let exit = if nonexistent {
        EXIT_NONEXISTENT
    } else if report.passed {
        EXIT_PASS
    } else {
        EXIT_FAILED
    };
    Ok(Finished { report, exit })
}

pub fn verify(suite: &str, seed: u64, trials: usize, tol: &Tolerances) -> Result<Finished, CliError> {
    let started = Instant::now();
    let reports = run_suite(suite, seed, trials, tol)?;
    let report = RunReport::new(format!("verify {suite}"), seed, reports, started);
    let exit = if report.passed { EXIT_PASS } else { EXIT_FAILED };
    Ok(Finished { report, exit })
}

pub fn run_demo(case: &str, seed: u64) -> Result<Finished, CliError> {
    let started = Instant::now();
    let report = RunReport::new(format!("demo {case}"), seed, vec![demo(case)?], started);
    let exit = if report.passed { EXIT_PASS } else { EXIT_FAILED };
    Ok(Finished { report, exit })
}
