use serde::Serialize;

/// Numerical thresholds shared by every decision procedure in the crate.
///
/// Relative thresholds are multiplied by `max(1, norm)` of the operand they
/// guard; see the individual call sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Hermiticity defect accepted (and symmetrized away) on construction.
    pub herm: f64,
    /// Idempotence and orthogonality of events.
    pub idem: f64,
    /// Membership in a subalgebra.
    pub member: f64,
    /// Spectral reconstruction.
    pub spec: f64,
    /// Eigenvalue clustering gap, relative to the operator norm.
    pub cluster: f64,
    /// Negative eigenvalues of a density matrix above `-psd` are clamped to zero.
    pub psd: f64,
    /// Trace normalization of a density matrix.
    pub trace: f64,
    /// Probability below which an event counts as null for conditioning.
    pub cond: f64,
    /// Objective (state-independent) conditional probability.
    pub obj: f64,
    /// Compatibility relation, relative to `max(1, ||X||)`.
    pub compat: f64,
    /// Membership in a compatible slice.
    pub slice: f64,
    /// Feasibility of the objective conditional expectation system.
    pub feasible: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        herm: 1e-9,
        idem: 1e-9,
        member: 1e-9,
        spec: 1e-8,
        cluster: 1e-7,
        psd: 1e-10,
        trace: 1e-10,
        cond: 1e-9,
        obj: 1e-9,
        compat: 1e-9,
        slice: 1e-10,
        feasible: 1e-8,
    };

    /// Every threshold multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            herm: self.herm * factor,
            idem: self.idem * factor,
            member: self.member * factor,
            spec: self.spec * factor,
            cluster: self.cluster * factor,
            psd: self.psd * factor,
            trace: self.trace * factor,
            cond: self.cond * factor,
            obj: self.obj * factor,
            compat: self.compat * factor,
            slice: self.slice * factor,
            feasible: self.feasible * factor,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}
