//! Passage maps near the regularized two-fold and what is built on them.

mod dip;
mod local_map;
mod orbits;
mod poincare;
mod twist;

pub use dip::{case_b_dip_depth, dip_depth, DipReport};
pub use local_map::{
    local_map_jacobian_fd, local_map_jacobian_tangent, local_map_l, local_map_point, local_map_sweep,
    local_map_trajectory, GridFailure, SectionMapResult,
};
pub use orbits::{
    canard_arrival, distinguished_orbit, first_return_minus, first_return_minus_trajectory, funnel_starts, line_angle,
    strong_canard_start, CanardArrival,
};
pub use poincare::{find_limit_cycle, poincare_map, GlobalReturn, LimitCycle, NewtonOptions};
pub use twist::{variational_twist, weak_canard_coefficients, TwistResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{Rect, SolverError};
use crate::normal_form::{NormalFormError, NormalFormParams, DEFAULT_TAU_INT};
use crate::regularization::{critical_manifold_h, RegularizationError, RegularizationFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("orbit reached y = nu at (x, z) = ({0}, {1}), outside R_out")]
    EscapeOutOfRout(f64, f64),
    #[error("orbit did not reach the exit section")]
    NoSectionHit,
    #[error("tangent vector underflowed during normalization")]
    NonConvergedNormalization,
    #[error("global return sends the point to (y, z) = ({0}, {1}), outside the entry section")]
    GlobalReturnOutOfRange(f64, f64),
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("geometry is not case (b)")]
    NotCaseB,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Regularization(#[from] RegularizationError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

impl AnalysisError {
    /// Short machine-readable code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::AssumptionViolated(_) => "AssumptionViolated",
            AnalysisError::InvalidGeometry(_) => "InvalidGeometry",
            AnalysisError::EscapeOutOfRout(..) => "EscapeOutOfRout",
            AnalysisError::NoSectionHit => "NoSectionHit",
            AnalysisError::NonConvergedNormalization => "NonConvergedNormalization",
            AnalysisError::GlobalReturnOutOfRange(..) => "GlobalReturnOutOfRange",
            AnalysisError::NewtonDiverged { .. } => "NewtonDiverged",
            AnalysisError::NotCaseB => "NotCaseB",
            AnalysisError::Solver(SolverError::StepSizeUnderflow { .. }) => "StepSizeUnderflow",
            AnalysisError::Solver(SolverError::MaxStepsExceeded { .. }) => "MaxStepsExceeded",
            AnalysisError::Solver(SolverError::NonFiniteState { .. }) => "NonFiniteState",
            AnalysisError::Solver(_) => "SolverError",
            AnalysisError::Regularization(_) => "RegularizationError",
            AnalysisError::NormalForm(_) => "NormalFormError",
        }
    }
}

/// Entry plane `x = −δ` and exit plane `y = ν` around the two-fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionGeometry {
    pub delta: f64,
    pub nu: f64,
    /// Upper y-extent of the entry section.
    pub zeta_w: f64,
    pub i_in: (f64, f64),
    /// Admissible exit window in `(x, z)`.
    pub r_out: Rect,
    /// Offset of the lower lip below the critical manifold, in units of ε.
    pub varsigma: f64,
}

impl SectionGeometry {
    /// Findings that make the geometry unusable; empty when it is valid.
    pub fn findings(&self, params: &NormalFormParams) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("delta", self.delta), ("nu", self.nu), ("zeta_w", self.zeta_w), ("varsigma", self.varsigma)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.i_in.0 < self.i_in.1 && self.i_in.1 < 0.0) {
            out.push(format!("I_in must be a nonempty interval of negative z, got {:?}", self.i_in));
        }
        if out.is_empty() {
            if let Err(e) = params.classify_case(self.i_in, self.delta) {
                out.push(match e {
                    NormalFormError::StraddlesWeakCanard(..) => format!("StraddlesWeakCanard: {e}"),
                    NormalFormError::OutsideFunnel(..) => format!("OutsideFunnel: {e}"),
                    other => other.to_string(),
                });
            }
            let u = params.u_out(self.nu);
            if !self.r_out.contains(u[0], u[2]) {
                out.push(format!("R_out does not contain u_out = ({:.6}, {:.6})", u[0], u[2]));
            }
        }
        out
    }

    pub fn validate(&self, params: &NormalFormParams) -> Result<(), AnalysisError> {
        let f = self.findings(params);
        if f.is_empty() {
            Ok(())
        } else {
            Err(AnalysisError::InvalidGeometry(f.join("; ")))
        }
    }

    /// Admissible y-range `[ε(h(−z/δ) − ς), ζ_w]` of the entry section at height `z`.
    pub fn y_range(
        &self,
        params: &NormalFormParams,
        phi: &RegularizationFn,
        eps: f64,
        z: f64,
    ) -> Result<(f64, f64), AnalysisError> {
        let h = critical_manifold_h(params, phi, -z / self.delta)?;
        Ok((eps * (h - self.varsigma), self.zeta_w))
    }

    pub fn contains_entry(
        &self,
        params: &NormalFormParams,
        phi: &RegularizationFn,
        eps: f64,
        y: f64,
        z: f64,
    ) -> Result<bool, AnalysisError> {
        if !(self.i_in.0 <= z && z <= self.i_in.1) {
            return Ok(false);
        }
        let (lo, hi) = self.y_range(params, phi, eps, z)?;
        Ok(lo <= y && y <= hi)
    }
}

/// Tensor grid on the entry section: `nz` heights, `ny` points in y at each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub ny: usize,
    pub nz: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { ny: 5, nz: 5 }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
}

impl GridSpec {
    /// Grid points `(y, z)` of the entry section at this ε.
    pub fn points(
        &self,
        params: &NormalFormParams,
        phi: &RegularizationFn,
        eps: f64,
        geom: &SectionGeometry,
    ) -> Result<Vec<(f64, f64)>, AnalysisError> {
        let mut pts = Vec::with_capacity(self.ny * self.nz);
        for z in linspace(geom.i_in.0, geom.i_in.1, self.nz) {
            let (lo, hi) = geom.y_range(params, phi, eps, z)?;
            pts.extend(linspace(lo, hi, self.ny).map(|y| (y, z)));
        }
        Ok(pts)
    }
}

fn check_assumptions(params: &NormalFormParams) -> Result<(), AnalysisError> {
    let a = params.check_assumption_a();
    if !a.holds {
        return Err(AnalysisError::AssumptionViolated(format!("(A): {}", a.failures.join("; "))));
    }
    if !params.check_assumption_b(DEFAULT_TAU_INT) {
        return Err(AnalysisError::AssumptionViolated("(B): xi is too close to an integer".into()));
    }
    Ok(())
}
