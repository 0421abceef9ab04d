//! The passage map `L_ε` from the entry section `x = −δ` to the exit section `y = ν`.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_assumptions, AnalysisError, GridSpec, SectionGeometry};
use crate::integrator::{
    integrate_n, integrate_regularized, Direction, EventFn, EventKind, IntegratorConfig, Section, SectionKind,
    Termination, Trajectory,
};
use crate::normal_form::NormalFormParams;
use crate::pws::Point;
use crate::regularization::{regularized_field, regularized_jacobian, RegularizationFn};

/// Upper bound on the passage time.
const T_PASSAGE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFailure {
    pub y: f64,
    pub z: f64,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionMapResult {
    pub epsilon: f64,
    pub grid: Vec<(f64, f64)>,
    /// Images `(x, z)` on the exit section of the grid points that succeeded.
    pub images: Vec<(f64, f64)>,
    pub jacobians: Vec<[[f64; 2]; 2]>,
    /// Index into `grid` of each image.
    pub image_index: Vec<usize>,
    pub diam_image: f64,
    pub max_dist_to_u_out: f64,
    pub max_op_norm_jac: f64,
    pub failures: Vec<GridFailure>,
}

fn start(geom: &SectionGeometry, y: f64, z: f64) -> Point {
    [-geom.delta, y, z]
}

/// Full `X_ε` trajectory from `(−δ, y, z)` to its first upward hit of `y = ν`.
pub fn local_map_trajectory(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    (y, z): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory, AnalysisError> {
    let exit = Section::new(SectionKind::PlaneY(geom.nu), Direction::Increasing).terminal();
    let tr = integrate_regularized(params, phi, eps, start(geom, y, z), (0.0, T_PASSAGE), cfg, &[exit])?;
    if tr.termination != Termination::TerminalEvent(EventKind::SectionHit(0)) {
        return Err(AnalysisError::NoSectionHit);
    }
    Ok(tr)
}

/// `L_ε(y, z)` as `(x, z)` on the exit section; misses of `R_out` are errors.
pub fn local_map_point(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    entry: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(f64, f64), AnalysisError> {
    let p = local_map_trajectory(params, phi, eps, geom, entry, cfg)?.final_state();
    if !geom.r_out.contains(p[0], p[2]) {
        return Err(AnalysisError::EscapeOutOfRout(p[0], p[2]));
    }
    Ok((p[0], p[2]))
}

fn fd_step(cfg: &IntegratorConfig, coord: f64) -> f64 {
    (cfg.rel_tol.sqrt() * coord.abs().max(1.0)).max(1e-6)
}

/// Central finite-difference Jacobian of `L_ε` with respect to `(y, z)`.
pub fn local_map_jacobian_fd(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    (y, z): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Matrix2<f64>, AnalysisError> {
    let eval = |q: (f64, f64)| -> Result<(f64, f64), AnalysisError> {
        let p = local_map_trajectory(params, phi, eps, geom, q, cfg)?.final_state();
        Ok((p[0], p[2]))
    };
    let (hy, hz) = (fd_step(cfg, y), fd_step(cfg, z));
    let (yp, ym) = (eval((y + hy, z))?, eval((y - hy, z))?);
    let (zp, zm) = (eval((y, z + hz))?, eval((y, z - hz))?);
    Ok(Matrix2::new(
        (yp.0 - ym.0) / (2.0 * hy),
        (zp.0 - zm.0) / (2.0 * hz),
        (yp.1 - ym.1) / (2.0 * hy),
        (zp.1 - zm.1) / (2.0 * hz),
    ))
}

/// Jacobian of `L_ε` from the variational equations along the same orbit,
/// projected onto the exit plane along the flow.
pub fn local_map_jacobian_tangent(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    (y, z): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Matrix2<f64>, AnalysisError> {
    regularized_field(params, phi, eps, &[0.0; 3])?;
    let (params, phi) = (*params, *phi);
    let rhs = move |_t: f64, s: &[f64; 9]| -> [f64; 9] {
        let p = [s[0], s[1], s[2]];
        let f = regularized_field(&params, &phi, eps, &p).expect("epsilon checked");
        let j = regularized_jacobian(&params, &phi, eps, &p).expect("epsilon checked");
        let mut out = [0.0; 9];
        out[..3].copy_from_slice(&f);
        for col in 0..2 {
            for row in 0..3 {
                out[3 + 3 * col + row] = (0..3).map(|k| j[row][k] * s[3 + 3 * col + k]).sum();
            }
        }
        out
    };
    let nu = geom.nu;
    let exit = EventFn::new(EventKind::SectionHit(0), Direction::Increasing, true, move |_t, s: &[f64; 9]| s[1] - nu);
    let s0 = [-geom.delta, y, z, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let cfg = IntegratorConfig { h_min: cfg.h_min.min(eps * 1e-4), ..*cfg };
    let cfg = IntegratorConfig { h_init: cfg.h_init.max(cfg.h_min), ..cfg };
    let tr = integrate_n(rhs, s0, (0.0, T_PASSAGE), &cfg, &[exit])?;
    if tr.termination != Termination::TerminalEvent(EventKind::SectionHit(0)) {
        return Err(AnalysisError::NoSectionHit);
    }
    let s = tr.final_state();
    let p = [s[0], s[1], s[2]];
    let f = regularized_field(&params, &phi, eps, &p)?;
    let mut m = Matrix2::zeros();
    for col in 0..2 {
        let c = [s[3 + 3 * col], s[4 + 3 * col], s[5 + 3 * col]];
        let dt = -c[1] / f[1];
        m[(0, col)] = c[0] + f[0] * dt;
        m[(1, col)] = c[2] + f[2] * dt;
    }
    Ok(m)
}

type PointOutcome = Result<((f64, f64), Matrix2<f64>), AnalysisError>;

fn op_norm(m: &Matrix2<f64>) -> f64 {
    m.singular_values().max()
}

/// Evaluates `L_ε` and its Jacobian over the entry grid, in parallel.
pub fn local_map_l(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<SectionMapResult, AnalysisError> {
    check_assumptions(params)?;
    geom.validate(params)?;
    let points = grid.points(params, phi, eps, geom)?;
    evaluate_points(params, phi, eps, geom, points, cfg)
}

pub(crate) fn evaluate_points(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    points: Vec<(f64, f64)>,
    cfg: &IntegratorConfig,
) -> Result<SectionMapResult, AnalysisError> {
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|&q| {
            let img = local_map_point(params, phi, eps, geom, q, cfg)?;
            let jac = local_map_jacobian_fd(params, phi, eps, geom, q, cfg)?;
            Ok((img, jac))
        })
        .collect();

    let u = params.u_out(geom.nu);
    let mut res = SectionMapResult {
        epsilon: eps,
        grid: points.clone(),
        images: Vec::new(),
        jacobians: Vec::new(),
        image_index: Vec::new(),
        diam_image: 0.0,
        max_dist_to_u_out: 0.0,
        max_op_norm_jac: 0.0,
        failures: Vec::new(),
    };
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok((img, jac)) => {
                res.max_dist_to_u_out = res.max_dist_to_u_out.max((img.0 - u[0]).hypot(img.1 - u[2]));
                res.max_op_norm_jac = res.max_op_norm_jac.max(op_norm(&jac));
                res.images.push(img);
                res.jacobians.push([[jac[(0, 0)], jac[(0, 1)]], [jac[(1, 0)], jac[(1, 1)]]]);
                res.image_index.push(i);
            }
            Err(e) => {
                log::debug!("grid point {:?} failed: {e}", points[i]);
                res.failures.push(GridFailure { y: points[i].0, z: points[i].1, code: e.code().into(), message: e.to_string() });
            }
        }
    }
    for (i, a) in res.images.iter().enumerate() {
        for b in &res.images[i + 1..] {
            res.diam_image = res.diam_image.max((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    Ok(res)
}

/// [`local_map_l`] over a list of ε values.
pub fn local_map_sweep(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    epsilons: &[f64],
    geom: &SectionGeometry,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<Vec<SectionMapResult>, AnalysisError> {
    epsilons.iter().map(|&e| local_map_l(params, phi, e, geom, grid, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn image_is_on_exit_plane_and_approaches_u_out() {
        let phi = RegularizationFn::ARCTAN;
        let g = geometry();
        let u = p1().u_out(g.nu);
        let dist = |eps: f64| {
            let tr = local_map_trajectory(&p1(), &phi, eps, &g, (0.01, -0.75), &IntegratorConfig::default()).unwrap();
            let p = tr.final_state();
            assert!((p[1] - g.nu).abs() < 1e-9);
            (p[0] - u[0]).hypot(p[2] - u[2])
        };
        let d = [dist(1e-2), dist(1e-3), dist(1e-4)];
        assert!(d[0] > d[1] && d[1] > d[2]);
        // slow algebraic rate: roughly halves per decade of ε
        assert!(d[2] < 0.6 * d[1]);
    }

    #[test]
    fn repeated_point_has_zero_diameter() {
        let phi = RegularizationFn::ARCTAN;
        let pts = vec![(0.01, -0.75); 3];
        let r = evaluate_points(&p1(), &phi, 1e-2, &geometry(), pts, &IntegratorConfig::default()).unwrap();
        assert_eq!(r.images.len(), 3);
        assert_eq!(r.diam_image, 0.0);
    }

    #[test]
    fn escape_is_reported_per_point() {
        let phi = RegularizationFn::ARCTAN;
        let g = SectionGeometry { r_out: crate::integrator::Rect::new((0.0, 0.1), (0.0, 0.1)).unwrap(), ..geometry() };
        let r = evaluate_points(&p1(), &phi, 1e-2, &g, vec![(0.01, -0.75)], &IntegratorConfig::default()).unwrap();
        assert!(r.images.is_empty());
        assert_eq!(r.failures[0].code, "EscapeOutOfRout");
    }

    #[test]
    fn tangent_and_fd_jacobians_agree() {
        let phi = RegularizationFn::ARCTAN;
        let cfg = IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
        let q = (0.005, -0.8);
        let fd = local_map_jacobian_fd(&p1(), &phi, 1e-2, &geometry(), q, &cfg).unwrap();
        let tg = local_map_jacobian_tangent(&p1(), &phi, 1e-2, &geometry(), q, &cfg).unwrap();
        assert!((fd - tg).norm() <= 1e-3 * tg.norm(), "fd = {fd}, tangent = {tg}");
    }

    #[test]
    fn rejects_violated_assumptions() {
        let bad = NormalFormParams::new(1.0, 1.0, 4.0, 2.0).unwrap();
        let err = local_map_l(&bad, &RegularizationFn::ARCTAN, 1e-2, &geometry(), &GridSpec::default(), &IntegratorConfig::default());
        assert!(matches!(err, Err(AnalysisError::AssumptionViolated(_))));
    }
}
