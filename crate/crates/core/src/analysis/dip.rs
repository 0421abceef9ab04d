//! How far passage orbits dip below the switching plane.

use rayon::prelude::*;
use serde::Serialize;

use super::local_map::local_map_trajectory;
use super::{check_assumptions, AnalysisError, GridSpec, SectionGeometry};
use crate::integrator::{IntegratorConfig, Trajectory};
use crate::normal_form::{Case, NormalFormParams};
use crate::regularization::RegularizationFn;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DipReport {
    pub case: Case,
    pub epsilon: f64,
    /// Minimum of y over all passage orbits.
    pub dip: f64,
    /// Per grid point `(y, z, min y)`.
    pub per_point: Vec<(f64, f64, f64)>,
}

/// Minimum of the y-component along a trajectory, refined on the dense output
/// around the lowest sample.
fn min_y(tr: &Trajectory) -> f64 {
    let (i, s) = tr
        .samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1[1].total_cmp(&b.1 .1[1]))
        .expect("nonempty trajectory");
    let mut best = s.1[1];
    let lo = tr.samples[i.saturating_sub(1)].0;
    let hi = tr.samples[(i + 1).min(tr.samples.len() - 1)].0;
    const PIECES: usize = 64;
    for k in 0..=PIECES {
        let t = lo + (hi - lo) * k as f64 / PIECES as f64;
        if let Some(p) = tr.state_at(t) {
            best = best.min(p[1]);
        }
    }
    best
}

/// Deepest excursion into `y < 0` over the passage orbits of the entry grid.
pub fn dip_depth(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<DipReport, AnalysisError> {
    check_assumptions(params)?;
    geom.validate(params)?;
    let case = params.classify_case(geom.i_in, geom.delta)?;
    let points = grid.points(params, phi, eps, geom)?;
    let per_point = points
        .par_iter()
        .map(|&(y, z)| Ok((y, z, min_y(&local_map_trajectory(params, phi, eps, geom, (y, z), cfg)?))))
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let dip = per_point.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    Ok(DipReport { case, epsilon: eps, dip, per_point })
}

/// [`dip_depth`] restricted to case (b) geometries.
pub fn case_b_dip_depth(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<f64, AnalysisError> {
    if params.classify_case(geom.i_in, geom.delta)? != Case::CaseB {
        return Err(AnalysisError::NotCaseB);
    }
    Ok(dip_depth(params, phi, eps, geom, grid, cfg)?.dip)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn case_a_geometry_is_rejected() {
        let r = case_b_dip_depth(&p1(), &RegularizationFn::ARCTAN, 1e-2, &geometry(), &GridSpec { ny: 1, nz: 1 }, &IntegratorConfig::default());
        assert_eq!(r.unwrap_err(), AnalysisError::NotCaseB);
    }

    #[test]
    fn case_b_dips_deeper_than_case_a() {
        let phi = RegularizationFn::ARCTAN;
        let grid = GridSpec { ny: 2, nz: 2 };
        let cfg = IntegratorConfig::default();
        let a = dip_depth(&p1(), &phi, 1e-3, &geometry(), &grid, &cfg).unwrap();
        let b = dip_depth(&p2(), &phi, 1e-3, &geometry(), &grid, &cfg).unwrap();
        assert_eq!(a.case, Case::CaseA);
        assert_eq!(b.case, Case::CaseB);
        assert!(b.dip < a.dip);
    }
}
