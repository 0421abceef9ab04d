//! Twisting of the attracting slow manifold's tangent along the weak canard.
//!
//! In the scaled variables `(x₂, ŷ, z₂)` the weak canard is the straight orbit
//! `ŷ = h(−χ₊)`, `z₂ = −χ₊ x₂`. Using `x₂` as time and linearizing about it
//! gives the planar system
//!
//! ```text
//! u' = −β/λ₊ (ψ x₂ u + b v)
//! v' = −λ₋/(b λ₊) ψ u
//! ```
//!
//! with `ψ = ½ β (1 − a)² φ'(h(−χ₊))`, `a = b χ₊ / β`. Eliminating `u` and
//! rescaling `x̄ = k x₂`, `k² = −ψβ/λ₊`, gives the Weber equation
//! `v'' − x̄ v' + ξ v = 0`, which is integrated as an independent check.

use serde::Serialize;

use super::{check_assumptions, AnalysisError};
use crate::integrator::{integrate_n, IntegratorConfig};
use crate::normal_form::NormalFormParams;
use crate::regularization::{critical_manifold_h, RegularizationFn};

/// Coefficients of the linearization along the weak canard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakCanardCoefficients {
    pub psi: f64,
    /// Height `h(−χ₊)` of the weak canard in `ŷ`.
    pub h_weak: f64,
    /// Weber rescaling factor `k`.
    pub k: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub xi: f64,
    pub chi_plus: f64,
    b: f64,
    beta: f64,
}

impl WeakCanardCoefficients {
    /// Matrix `A(x₂)` with `(u, v)' = A(x₂) (u, v)`.
    pub fn matrix(&self, x2: f64) -> [[f64; 2]; 2] {
        let lp = self.lambda_plus;
        [
            [-self.beta / lp * self.psi * x2, -self.beta / lp * self.b],
            [-self.lambda_minus / (self.b * lp) * self.psi, 0.0],
        ]
    }

    /// `dv/dx₂ = gain · u`.
    fn gain(&self) -> f64 {
        -self.lambda_minus / (self.b * self.lambda_plus) * self.psi
    }
}

pub fn weak_canard_coefficients(
    params: &NormalFormParams,
    phi: &RegularizationFn,
) -> Result<WeakCanardCoefficients, AnalysisError> {
    let e = params.eigen_data()?;
    let h_weak = critical_manifold_h(params, phi, -e.chi_plus)?;
    let a = params.b * e.chi_plus / params.beta;
    let psi = 0.5 * params.beta * (1.0 - a).powi(2) * phi.deriv(h_weak);
    let k = (-psi * params.beta / e.lambda_plus).sqrt();
    Ok(WeakCanardCoefficients {
        psi,
        h_weak,
        k,
        lambda_plus: e.lambda_plus,
        lambda_minus: e.lambda_minus,
        xi: e.xi,
        chi_plus: e.chi_plus,
        b: params.b,
        beta: params.beta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistResult {
    pub xi: f64,
    pub n: i64,
    pub mu: f64,
    pub psi: f64,
    /// Tangent `(δx₂, δŷ, δz₂)` of the attracting slow manifold at `x₂ = −1/μ`.
    pub varpi_in: [f64; 3],
    /// Transported tangent at `x₂ = 1/μ`, equal to this mantissa times
    /// `exp(varpi_out_ln_scale)`.
    pub varpi_out: [f64; 3],
    pub varpi_out_ln_scale: f64,
    pub varpi_out_normalized: [f64; 3],
    pub zeta_sign: i32,
    /// Largest relative mismatch between the direct and Weber integrations.
    pub weber_residual: f64,
}

/// A vector stored as unit-scale mantissa times `exp(ln_scale)`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    m: [f64; 2],
    ln_scale: f64,
}

impl Scaled {
    fn renormalize(m: [f64; 2], ln_scale: f64) -> Result<Self, AnalysisError> {
        let n = m[0].hypot(m[1]);
        if !(n >= 1e-30) || !n.is_finite() {
            return Err(AnalysisError::NonConvergedNormalization);
        }
        Ok(Self { m: [m[0] / n, m[1] / n], ln_scale: ln_scale + n.ln() })
    }

    fn relative_mismatch(&self, other: &Scaled) -> f64 {
        let f = (other.ln_scale - self.ln_scale).exp();
        let d = (self.m[0] - f * other.m[0]).hypot(self.m[1] - f * other.m[1]);
        d / self.m[0].hypot(self.m[1])
    }
}

/// Integrates a linear planar system over `[a, b]` in `chunks` pieces, with
/// renormalization after each piece. Returns the state at the midpoint and end.
fn transport(
    rhs: impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy,
    init: [f64; 2],
    (a, b): (f64, f64),
    half_chunks: usize,
    cfg: &IntegratorConfig,
) -> Result<(Scaled, Scaled), AnalysisError> {
    let chunks = 2 * half_chunks;
    let width = (b - a) / chunks as f64;
    let mut s = Scaled::renormalize(init, 0.0)?;
    let mut mid = s;
    for i in 0..chunks {
        let t0 = a + i as f64 * width;
        let t1 = if i + 1 == chunks { b } else { t0 + width };
        let tr = integrate_n(rhs, s.m, (t0, t1), cfg, &[])?;
        s = Scaled::renormalize(tr.final_state(), s.ln_scale)?;
        if i + 1 == half_chunks {
            mid = s;
        }
    }
    Ok((mid, s))
}

/// Transports the slow-manifold tangent along the weak canard from
/// `x₂ = −1/μ` to `x₂ = 1/μ`.
pub fn variational_twist(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    mu: f64,
    cfg: &IntegratorConfig,
) -> Result<TwistResult, AnalysisError> {
    check_assumptions(params)?;
    if !(mu > 0.0 && mu <= 0.2) {
        return Err(AnalysisError::InvalidGeometry(format!("mu must lie in (0, 0.2], got {mu}")));
    }
    let co = weak_canard_coefficients(params, phi)?;
    let e = params.eigen_data()?;
    let a = params.b * co.chi_plus / params.beta;
    let u0 = 2.0 * params.b / params.beta * mu / ((1.0 - a).powi(2) * phi.deriv(co.h_weak));
    let varpi_in = [0.0, u0, 1.0];
    let len = 1.0 / mu;
    let half_chunks = (co.k * len).ceil().max(1.0) as usize;

    let direct = move |x2: f64, s: &[f64; 2]| {
        let m = co.matrix(x2);
        [m[0][0] * s[0] + m[0][1] * s[1], m[1][0] * s[0]]
    };
    let (mid1, end1) = transport(direct, [u0, 1.0], (-len, len), half_chunks, cfg)?;

    // Weber route on (v, dv/dx̄); dv/dx̄ = gain·u / k
    let xi = co.xi;
    let weber = move |xb: f64, s: &[f64; 2]| [s[1], xb * s[1] - xi * s[0]];
    let to_weber = |s: &Scaled| Scaled { m: [s.m[1], co.gain() * s.m[0] / co.k], ln_scale: s.ln_scale };
    let w0 = to_weber(&Scaled { m: [u0, 1.0], ln_scale: 0.0 });
    let (mid2, end2) = transport(weber, w0.m, (-co.k * len, co.k * len), half_chunks, cfg)?;
    let weber_residual = to_weber(&mid1)
        .relative_mismatch(&mid2)
        .max(to_weber(&end1).relative_mismatch(&end2));

    let varpi_out = [0.0, end1.m[0], end1.m[1]];
    let norm = end1.m[0].hypot(end1.m[1]);
    let varpi_out_normalized = [0.0, end1.m[0] / norm, end1.m[1] / norm];
    Ok(TwistResult {
        xi: e.xi,
        n: e.n,
        mu,
        psi: co.psi,
        varpi_in,
        varpi_out,
        varpi_out_ln_scale: end1.ln_scale,
        varpi_out_normalized,
        zeta_sign: if varpi_out_normalized[1] >= 0.0 { 1 } else { -1 },
        weber_residual,
    })
}
