//! Return maps `P_ε = L_ε ∘ G` with an affine global part, and their fixed points.

use nalgebra::{Complex, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::local_map::{local_map_jacobian_fd, local_map_point, local_map_trajectory};
use super::{check_assumptions, AnalysisError, SectionGeometry};
use crate::integrator::{IntegratorConfig, Trajectory};
use crate::normal_form::NormalFormParams;
use crate::regularization::RegularizationFn;

/// Affine map from the exit section `(x, z)` to the entry section `(y, z)`:
/// `G(p) = offset + matrix (p − anchor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalReturn {
    pub offset: [f64; 2],
    pub matrix: [[f64; 2]; 2],
    /// Defaults to the exit point of the distinguished orbit.
    #[serde(default)]
    pub anchor: Option<[f64; 2]>,
}

impl GlobalReturn {
    pub fn constant(target: [f64; 2]) -> Self {
        Self { offset: target, matrix: [[0.0; 2]; 2], anchor: Some([0.0; 2]) }
    }

    fn anchor_for(&self, params: &NormalFormParams, geom: &SectionGeometry) -> [f64; 2] {
        self.anchor.unwrap_or_else(|| {
            let u = params.u_out(geom.nu);
            [u[0], u[2]]
        })
    }

    pub fn matrix2(&self) -> Matrix2<f64> {
        Matrix2::new(self.matrix[0][0], self.matrix[0][1], self.matrix[1][0], self.matrix[1][1])
    }

    pub fn apply(&self, params: &NormalFormParams, geom: &SectionGeometry, p: [f64; 2]) -> [f64; 2] {
        let a = self.anchor_for(params, geom);
        let d = self.matrix2() * Vector2::new(p[0] - a[0], p[1] - a[1]);
        [self.offset[0] + d[0], self.offset[1] + d[1]]
    }
}

fn entry_point(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    g: &GlobalReturn,
    p: [f64; 2],
) -> Result<(f64, f64), AnalysisError> {
    let [y, z] = g.apply(params, geom, p);
    if !geom.contains_entry(params, phi, eps, y, z)? {
        return Err(AnalysisError::GlobalReturnOutOfRange(y, z));
    }
    Ok((y, z))
}

/// One return `p ↦ L_ε(G(p))` on the exit section and its Jacobian.
pub fn poincare_map(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    g: &GlobalReturn,
    p0: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<([f64; 2], Matrix2<f64>), AnalysisError> {
    let q = entry_point(params, phi, eps, geom, g, p0)?;
    let (x, z) = local_map_point(params, phi, eps, geom, q, cfg)?;
    let dl = local_map_jacobian_fd(params, phi, eps, geom, q, cfg)?;
    Ok(([x, z], dl * g.matrix2()))
}

fn image_only(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    g: &GlobalReturn,
    p: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<[f64; 2], AnalysisError> {
    let q = entry_point(params, phi, eps, geom, g, p)?;
    let (x, z) = local_map_point(params, phi, eps, geom, q, cfg)?;
    Ok([x, z])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iterations: 20, tolerance: 1e-9, max_halvings: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct LimitCycle {
    pub fixed_point: [f64; 2],
    pub floquet: [Complex<f64>; 2],
    pub dp: Matrix2<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Passage of the cycle through the two-fold region, from `G(p*)` to `p*`.
    pub cycle: Trajectory,
}

impl LimitCycle {
    pub fn max_floquet_modulus(&self) -> f64 {
        self.floquet.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Fixed point of `P_ε` by damped Newton on `p − P_ε(p)`, seeded at the exit
/// point of the distinguished orbit. A step that fails to reduce the residual
/// after `max_halvings` halvings is replaced by a plain iterate `p ← P_ε(p)`.
pub fn find_limit_cycle(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    geom: &SectionGeometry,
    g: &GlobalReturn,
    cfg: &IntegratorConfig,
    opts: &NewtonOptions,
) -> Result<LimitCycle, AnalysisError> {
    check_assumptions(params)?;
    geom.validate(params)?;
    let u = params.u_out(geom.nu);
    let mut p = Vector2::new(u[0], u[2]);
    let residual_at = |p: &Vector2<f64>| -> Result<Vector2<f64>, AnalysisError> {
        let img = image_only(params, phi, eps, geom, g, [p[0], p[1]], cfg)?;
        Ok(p - Vector2::new(img[0], img[1]))
    };

    let mut iterations = 0;
    loop {
        let (img, dp) = poincare_map(params, phi, eps, geom, g, [p[0], p[1]], cfg)?;
        let f = p - Vector2::new(img[0], img[1]);
        let fnorm = f.norm();
        log::debug!("newton iteration {iterations}: |F| = {fnorm:e}");
        if fnorm <= opts.tolerance {
            let floquet = dp.complex_eigenvalues();
            let q = entry_point(params, phi, eps, geom, g, [p[0], p[1]])?;
            let cycle = local_map_trajectory(params, phi, eps, geom, q, cfg)?;
            return Ok(LimitCycle {
                fixed_point: [p[0], p[1]],
                floquet: [floquet[0], floquet[1]],
                dp,
                iterations,
                residual: fnorm,
                cycle,
            });
        }
        if iterations >= opts.max_iterations {
            return Err(AnalysisError::NewtonDiverged { iterations, residual: fnorm });
        }
        iterations += 1;

        let jac = Matrix2::identity() - dp;
        let mut next = None;
        if let Some(step) = jac.lu().solve(&(-f)) {
            let mut lambda = 1.0;
            for _ in 0..=opts.max_halvings {
                let cand = p + lambda * step;
                if let Ok(fc) = residual_at(&cand) {
                    if fc.norm() < fnorm {
                        next = Some(cand);
                        break;
                    }
                }
                lambda *= 0.5;
            }
        }
        p = match next {
            Some(c) => c,
            None => {
                log::debug!("newton step rejected, falling back to a direct iterate");
                Vector2::new(img[0], img[1])
            }
        };
    }
}
