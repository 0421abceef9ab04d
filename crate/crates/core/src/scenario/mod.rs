//! Config-driven scenarios behind the `twofold-lab` binary.
//!
//! A scenario is one JSON document. `run` writes `summary.json`, CSV tables
//! and SVG plots into an output directory; `validate` only checks the config.

pub mod output;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{GlobalReturn, GridSpec, NewtonOptions, SectionGeometry};
use crate::integrator::{HybridConfig, IntegratorConfig};
use crate::normal_form::{NormalFormParams, DEFAULT_TAU_INT};
use crate::regularization::PhiFamily;

pub use run::{run, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VarthetaCheck,
    EigenReport,
    CanardPortrait,
    HybridSim,
    LocalMapSweep,
    Twist,
    LimitCycle,
    CaseDip,
    ChartRoundtrip,
}

impl Scenario {
    fn needs_geometry(self) -> bool {
        matches!(self, Scenario::LocalMapSweep | Scenario::LimitCycle | Scenario::CaseDip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub family: PhiFamily,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self { family: PhiFamily::Arctan }
    }
}

/// Grid of starting points `(x, 0, z)` with `x ∈ (0, x_max]`, `z ∈ [z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarthetaGrid {
    pub nx: usize,
    pub nz: usize,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for VarthetaGrid {
    fn default() -> Self {
        Self { nx: 50, nz: 50, x_max: 2.0, z_min: -3.0, z_max: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanardConfig {
    /// Number of funnel starts on the circle of radius `radius`.
    pub n_funnel: usize,
    pub radius: f64,
    pub t_max: f64,
}

impl Default for CanardConfig {
    fn default() -> Self {
        Self { n_funnel: 20, radius: 1.0, t_max: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridScenario {
    pub starts: Vec<[f64; 3]>,
    pub t_max: f64,
    pub settings: HybridConfig,
}

impl Default for HybridScenario {
    fn default() -> Self {
        Self { starts: Vec::new(), t_max: 20.0, settings: HybridConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwistConfig {
    pub mu: Vec<f64>,
}

impl Default for TwistConfig {
    fn default() -> Self {
        Self { mu: vec![0.1, 0.05] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: NormalFormParams,
    #[serde(default)]
    pub phi: PhiConfig,
    /// Strictly decreasing when more than one is given.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub geometry: Option<SectionGeometry>,
    #[serde(default)]
    pub solver: IntegratorConfig,
    /// Entry-section grid for local-map and dip scenarios.
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub vartheta: VarthetaGrid,
    #[serde(default)]
    pub canard: CanardConfig,
    #[serde(default)]
    pub hybrid: HybridScenario,
    #[serde(default)]
    pub twist: TwistConfig,
    #[serde(default)]
    pub global_return: Option<GlobalReturn>,
    #[serde(default)]
    pub newton: NewtonOptions,
    /// Random draws for the property checks of eigen-report and chart-roundtrip.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_draws() -> usize {
    1000
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("config has findings: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl ScenarioError {
    /// Process exit code: 2 for config problems, 3 for anything that failed
    /// after the config was accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Read { .. } | ScenarioError::Parse(_) | ScenarioError::Invalid(_) => 2,
            ScenarioError::Io(_) => 3,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Read { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    /// Everything that would stop the scenario from running. Never integrates.
    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.params.validate() {
            out.push(e.to_string());
            return out;
        }
        if self.scenario != Scenario::ChartRoundtrip && self.scenario != Scenario::VarthetaCheck {
            let a = self.params.check_assumption_a();
            if !a.holds {
                out.extend(a.failures.iter().map(|f| format!("assumption (A) fails: {f}")));
            } else if !self.params.check_assumption_b(DEFAULT_TAU_INT) {
                let xi = self.params.eigen_data().map(|e| e.xi).unwrap_or(f64::NAN);
                out.push(format!("assumption (B) fails: xi = {xi} is within {DEFAULT_TAU_INT} of an integer"));
            }
        }
        if let Err(e) = self.solver.validate() {
            out.push(e.to_string());
        }
        let assumptions_ok = out.is_empty();

        if self.scenario.needs_geometry() {
            match &self.geometry {
                None => out.push(format!("scenario {:?} needs a geometry block", self.scenario)),
                Some(g) if assumptions_ok => out.extend(g.findings(&self.params)),
                Some(_) => {}
            }
            if self.epsilons.is_empty() {
                out.push("epsilons must not be empty".into());
            }
            if self.grid.ny == 0 || self.grid.nz == 0 {
                out.push("grid.ny and grid.nz must be positive".into());
            }
        } else if let (Some(g), true) = (&self.geometry, assumptions_ok) {
            if self.scenario == Scenario::EigenReport {
                out.extend(g.findings(&self.params));
            }
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            out.push(format!("epsilons must lie in (0, 1), got {:?}", self.epsilons));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            out.push(format!("epsilons must be strictly decreasing, got {:?}", self.epsilons));
        }

        match self.scenario {
            Scenario::VarthetaCheck => {
                let v = &self.vartheta;
                if v.nx == 0 || v.nz == 0 || !(v.x_max > 0.0) || !(v.z_min <= v.z_max) {
                    out.push("vartheta grid needs nx, nz > 0, x_max > 0 and z_min <= z_max".into());
                }
            }
            Scenario::CanardPortrait => {
                let c = &self.canard;
                if c.n_funnel == 0 || !(c.radius > 0.0) || !(c.t_max > 0.0) {
                    out.push("canard needs n_funnel > 0, radius > 0 and t_max > 0".into());
                }
            }
            Scenario::HybridSim => {
                if self.hybrid.starts.is_empty() {
                    out.push("hybrid.starts must not be empty".into());
                }
                if !(self.hybrid.t_max > 0.0) {
                    out.push("hybrid.t_max must be positive".into());
                }
            }
            Scenario::Twist => {
                if self.twist.mu.is_empty() || self.twist.mu.iter().any(|m| !(*m > 0.0 && *m <= 0.2)) {
                    out.push(format!("twist.mu must be a nonempty list in (0, 0.2], got {:?}", self.twist.mu));
                }
            }
            Scenario::LimitCycle => {
                if self.global_return.is_none() {
                    out.push("limit-cycle needs a global_return block".into());
                }
            }
            Scenario::EigenReport | Scenario::ChartRoundtrip => {
                if self.draws > 1_000_000 {
                    out.push("draws must be at most 1000000".into());
                }
            }
            Scenario::LocalMapSweep | Scenario::CaseDip => {}
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scenario: Scenario,
    pub findings: Vec<String>,
}

/// Loads and checks a config; the report carries the findings.
pub fn validate(path: &Path) -> Result<ValidationReport, ScenarioError> {
    let cfg = ScenarioConfig::load(path)?;
    Ok(ValidationReport { scenario: cfg.scenario, findings: cfg.findings() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(scenario: &str, params: &str) -> String {
        format!(r#"{{"scenario": "{scenario}", "params": {params}}}"#)
    }

    const P1: &str = r#"{"b": 1, "beta": 1, "c": 4, "gamma": 1}"#;
    const GEOM: &str = r#""geometry": {"delta": 0.5, "nu": 0.1, "zeta_w": 0.02, "i_in": [-1.0, -0.5],
        "r_out": {"x": [0.5, 3.5], "z": [-0.5, 1.5]}, "varsigma": 0.1}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ScenarioConfig::from_json(&base("eigen-report", P1)).unwrap();
        assert_eq!(c.scenario, Scenario::EigenReport);
        assert_eq!(c.phi.family, PhiFamily::Arctan);
        assert_eq!(c.draws, 1000);
        assert!(c.findings().is_empty());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ScenarioConfig::from_json(r#"{"scenario": "twist", "params": {"b": 1, "beta": 1, "c": 4, "gamma": 1}, "bogus": 1}"#);
        assert!(matches!(e, Err(ScenarioError::Parse(_))));
        assert_eq!(e.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn degenerate_discriminant_is_reported() {
        let c = ScenarioConfig::from_json(&base("eigen-report", r#"{"b": 1, "beta": 1, "c": 4, "gamma": 2}"#)).unwrap();
        let f = c.findings();
        assert_eq!(f.len(), 1);
        assert!(f[0].contains("assumption (A)") && f[0].contains("discriminant = 0"));
    }

    #[test]
    fn straddling_interval_is_reported() {
        let text = format!(
            r#"{{"scenario": "local-map-sweep", "params": {P1}, "epsilons": [1e-2],
            "geometry": {{"delta": 0.5, "nu": 0.1, "zeta_w": 0.02, "i_in": [-1.5, -1.0],
            "r_out": {{"x": [0.5, 3.5], "z": [-0.5, 1.5]}}, "varsigma": 0.1}}}}"#
        );
        let f = ScenarioConfig::from_json(&text).unwrap().findings();
        assert!(f.iter().any(|m| m.contains("StraddlesWeakCanard")), "{f:?}");
    }

    #[test]
    fn sweep_rules() {
        let ok = format!(r#"{{"scenario": "local-map-sweep", "params": {P1}, "epsilons": [1e-2, 1e-3], {GEOM}}}"#);
        assert!(ScenarioConfig::from_json(&ok).unwrap().findings().is_empty());
        let bad = format!(r#"{{"scenario": "local-map-sweep", "params": {P1}, "epsilons": [1e-3, 1e-2], {GEOM}}}"#);
        assert!(ScenarioConfig::from_json(&bad).unwrap().findings()[0].contains("strictly decreasing"));
        let missing = format!(r#"{{"scenario": "case-dip", "params": {P1}, "epsilons": [1e-3]}}"#);
        assert!(ScenarioConfig::from_json(&missing).unwrap().findings()[0].contains("geometry"));
        let no_return = format!(r#"{{"scenario": "limit-cycle", "params": {P1}, "epsilons": [1e-3], {GEOM}}}"#);
        assert!(ScenarioConfig::from_json(&no_return).unwrap().findings()[0].contains("global_return"));
    }
}
