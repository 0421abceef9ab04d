//! Reference orbits of the piecewise-linear system: the `X⁻` first return,
//! the distinguished orbit and Filippov orbits ending at the two-fold.

use nalgebra::Vector2;
use serde::Serialize;

use super::AnalysisError;
use crate::integrator::{
    integrate, integrate_hybrid_filippov, Direction, EventKind, HybridConfig, IntegratorConfig, Section, SectionKind,
    Termination, Trajectory,
};
use crate::normal_form::NormalFormParams;
use crate::pws::{Point, Side};

/// Trajectory of `X⁻` from `(x, 0, z)`, `x > 0`, to its next upward crossing of Σ.
pub fn first_return_minus_trajectory(
    params: &NormalFormParams,
    x: f64,
    z: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, AnalysisError> {
    if !(x > 0.0) {
        return Err(AnalysisError::InvalidGeometry(format!("first return needs x > 0, got {x}")));
    }
    let p = *params;
    let sigma = Section::new(SectionKind::PlaneY(0.0), Direction::Increasing).terminal();
    let tr = integrate(move |q: &Point| p.field(Side::Minus, q), [x, 0.0, z], (0.0, 4.0 * x + 1.0), cfg, &[sigma])?;
    if tr.termination != Termination::TerminalEvent(EventKind::SectionHit(0)) {
        return Err(AnalysisError::NoSectionHit);
    }
    Ok(tr)
}

/// Numerically integrated first return of `X⁻` to Σ, as `(x, z)`.
pub fn first_return_minus(
    params: &NormalFormParams,
    x: f64,
    z: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64), AnalysisError> {
    let p = first_return_minus_trajectory(params, x, z, cfg)?.final_state();
    Ok((p[0], p[2]))
}

/// `X⁺` orbit from the two-fold up to `{y = ν}`.
pub fn distinguished_orbit(params: &NormalFormParams, nu: f64, cfg: &IntegratorConfig) -> Result<Trajectory, AnalysisError> {
    if !(nu > 0.0) {
        return Err(AnalysisError::InvalidGeometry(format!("nu must be positive, got {nu}")));
    }
    let p = *params;
    let exit = Section::new(SectionKind::PlaneY(nu), Direction::Increasing).terminal();
    let t_max = 2.0 * (2.0 * nu / p.b).sqrt() + 1.0;
    let tr = integrate(move |q: &Point| p.field(Side::Plus, q), [0.0; 3], (0.0, t_max), cfg, &[exit])?;
    if tr.termination != Termination::TerminalEvent(EventKind::SectionHit(0)) {
        return Err(AnalysisError::NoSectionHit);
    }
    Ok(tr)
}

/// Unsigned angle between the lines spanned by `a` and `b`.
pub fn line_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (a, b) = (Vector2::from(a), Vector2::from(b));
    let c = (a.dot(&b).abs() / (a.norm() * b.norm())).min(1.0);
    let s = (a.perp(&b).abs() / (a.norm() * b.norm())).min(1.0);
    s.atan2(c)
}

/// `n` points on the circle of radius `r` in Σ inside the funnel, evenly
/// spaced in angle between `l⁻` and the strong canard, endpoints excluded.
pub fn funnel_starts(params: &NormalFormParams, r: f64, n: usize) -> Result<Vec<Point>, AnalysisError> {
    let e = params.eigen_data()?;
    // polar angles measured from the negative x-axis towards negative z
    let strong = (-e.chi_minus).atan();
    let top = std::f64::consts::FRAC_PI_2;
    let pts = (1..=n)
        .map(|k| {
            let th = strong + (top - strong) * k as f64 / (n + 1) as f64;
            [-r * th.cos(), 0.0, -r * th.sin()]
        })
        .collect::<Vec<_>>();
    debug_assert!(pts.iter().all(|p| params.in_funnel(p[0], p[2]).unwrap_or(false)));
    Ok(pts)
}

/// Start on the strong canard `γˢ` at distance `r` from the two-fold.
pub fn strong_canard_start(params: &NormalFormParams, r: f64) -> Result<Point, AnalysisError> {
    let e = params.eigen_data()?;
    let v = Vector2::from(e.v_minus).normalize();
    Ok([-r * v[0], 0.0, -r * v[1]])
}

#[derive(Debug, Clone, Serialize)]
pub struct CanardArrival {
    pub start: Point,
    pub reached_two_fold: bool,
    pub arrival_time: f64,
    /// Angle between the last approach direction and `v₊`.
    pub angle_weak: f64,
    /// Angle between the last approach direction and `v₋`.
    pub angle_strong: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Runs the Filippov flow from `start` and measures the direction in which it
/// arrives at the two-fold.
pub fn canard_arrival(
    params: &NormalFormParams,
    start: Point,
    t_max: f64,
    cfg: &IntegratorConfig,
    hcfg: &HybridConfig,
) -> Result<CanardArrival, AnalysisError> {
    let e = params.eigen_data()?;
    let tr = integrate_hybrid_filippov(&params.pws_system(), start, t_max, cfg, hcfg)?;
    let last = tr.final_state();
    let d = [last[0], last[2]];
    Ok(CanardArrival {
        start,
        reached_two_fold: tr.termination == Termination::TerminalEvent(EventKind::TwoFoldHit),
        arrival_time: tr.final_time(),
        angle_weak: line_angle(d, e.v_plus),
        angle_strong: line_angle(d, e.v_minus),
        trajectory: tr,
    })
}
