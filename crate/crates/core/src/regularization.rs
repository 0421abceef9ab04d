//! Regularization functions, the regularized field `X_ε` and its slow-fast form.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_form::NormalFormParams;
use crate::pws::{Mat3, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularizationError {
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("argument {0} is outside the open range of phi")]
    OutOfRange(f64),
    #[error("(x, z) = ({0}, {1}) is not in a sliding quadrant")]
    NotSliding(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhiFamily {
    #[serde(rename = "arctan")]
    Arctan,
    /// Clamped cubic `(3s − s³)/2`, equal to ±1 for `|s| ≥ 1`.
    #[serde(rename = "st-cubic")]
    SotomayorTeixeira,
}

impl fmt::Display for PhiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiFamily::Arctan => write!(f, "arctan"),
            PhiFamily::SotomayorTeixeira => write!(f, "st-cubic"),
        }
    }
}

pub fn phi_arctan(s: f64) -> f64 {
    FRAC_2_PI * s.atan()
}

pub fn phi_st(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else if s <= -1.0 {
        -1.0
    } else {
        0.5 * (3.0 * s - s * s * s)
    }
}

/// `atan(√q)/√q − 1`, the correction in the large-argument expansion of
/// [`phi_arctan`].
pub fn arctan_tail_phi2(q: f64) -> f64 {
    if q < 1e-4 {
        // alternating series −q/3 + q²/5 − q³/7 + q⁴/9
        q * (-1.0 / 3.0 + q * (1.0 / 5.0 + q * (-1.0 / 7.0 + q / 9.0)))
    } else {
        let r = q.sqrt();
        r.atan() / r - 1.0
    }
}

/// A monotone smooth step `φ: ℝ → [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularizationFn {
    pub family: PhiFamily,
}

impl RegularizationFn {
    pub const ARCTAN: Self = Self { family: PhiFamily::Arctan };
    pub const ST_CUBIC: Self = Self { family: PhiFamily::SotomayorTeixeira };

    pub fn new(family: PhiFamily) -> Self {
        Self { family }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self.family {
            PhiFamily::Arctan => phi_arctan(s),
            PhiFamily::SotomayorTeixeira => phi_st(s),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match self.family {
            PhiFamily::Arctan => FRAC_2_PI / (1.0 + s * s),
            PhiFamily::SotomayorTeixeira => {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    1.5 * (1.0 - s * s)
                }
            }
        }
    }

    /// Inverse on the open range `(−1, 1)`.
    pub fn inverse(&self, u: f64) -> Result<f64, RegularizationError> {
        if !(u > -1.0 && u < 1.0) {
            return Err(RegularizationError::OutOfRange(u));
        }
        Ok(match self.family {
            PhiFamily::Arctan => (0.5 * PI * u).tan(),
            // trigonometric root of s³ − 3s + 2u = 0 lying in (−1, 1)
            PhiFamily::SotomayorTeixeira => 2.0 * (u.asin() / 3.0).sin(),
        })
    }

    /// The tail correction `φ₂`; only the arctan family has one.
    pub fn tail_phi2(&self, q: f64) -> Option<f64> {
        match self.family {
            PhiFamily::Arctan => Some(arctan_tail_phi2(q)),
            PhiFamily::SotomayorTeixeira => None,
        }
    }

    /// `φ(1/ε̂)` written through the tail (arctan) for `ε̂ > 0`.
    pub fn phi_plus(&self, eps_hat: f64) -> f64 {
        match self.family {
            PhiFamily::Arctan => 1.0 - FRAC_2_PI * eps_hat * (1.0 + arctan_tail_phi2(eps_hat * eps_hat)),
            PhiFamily::SotomayorTeixeira => self.eval(1.0 / eps_hat),
        }
    }

    /// `φ(−1/ε̂)` for `ε̂ > 0`.
    pub fn phi_minus(&self, eps_hat: f64) -> f64 {
        -self.phi_plus(eps_hat)
    }
}

impl Default for RegularizationFn {
    fn default() -> Self {
        Self::ARCTAN
    }
}

/// The three components of `X_ε` as functions of the blend value `φ`.
#[inline]
fn blend(params: &NormalFormParams, x: f64, z: f64, phi: f64) -> Point {
    let NormalFormParams { b, beta, c, gamma } = *params;
    let (p, m) = (1.0 + phi, 1.0 - phi);
    [c / beta * p - m, b * z * p - beta * x * m, p + gamma / b * m]
}

fn check_eps(eps: f64) -> Result<(), RegularizationError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(RegularizationError::NonpositiveEpsilon(eps))
    }
}

/// `X_ε = (1 + φ) X⁺ + (1 − φ) X⁻` with `φ = φ(y/ε)` (time already doubled).
pub fn regularized_field(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    p: &Point,
) -> Result<Point, RegularizationError> {
    check_eps(eps)?;
    Ok(blend(params, p[0], p[2], phi.eval(p[1] / eps)))
}

/// Jacobian of [`regularized_field`] with respect to `(x, y, z)`.
pub fn regularized_jacobian(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    p: &Point,
) -> Result<Mat3, RegularizationError> {
    check_eps(eps)?;
    let NormalFormParams { b, beta, c, gamma } = *params;
    let s = p[1] / eps;
    let f = phi.eval(s);
    let fy = phi.deriv(s) / eps;
    Ok([
        [0.0, (c / beta + 1.0) * fy, 0.0],
        [-beta * (1.0 - f), (b * p[2] + beta * p[0]) * fy, b * (1.0 + f)],
        [0.0, (1.0 - gamma / b) * fy, 0.0],
    ])
}

/// `R(x, y, z) = (−x, y, −z)`.
pub fn reversibility_conjugate(p: &Point) -> Point {
    [-p[0], p[1], -p[2]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timescale {
    Fast,
    Slow,
}

/// Right-hand side in the `(x, ŷ, z)` chart with `y = ε ŷ`.
///
/// The fast form is `(ε G, F, ε H)`; the slow form divides it by `ε`.
pub fn slow_fast_rhs(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    p: &Point,
    eps: f64,
    timescale: Timescale,
) -> Result<Point, RegularizationError> {
    let [x, yhat, z] = *p;
    let v = blend(params, x, z, phi.eval(yhat));
    match timescale {
        Timescale::Fast => {
            if !(eps >= 0.0) {
                return Err(RegularizationError::NonpositiveEpsilon(eps));
            }
            Ok([eps * v[0], v[1], eps * v[2]])
        }
        Timescale::Slow => {
            check_eps(eps)?;
            Ok([v[0], v[1] / eps, v[2]])
        }
    }
}

/// The ε-free system obtained with `x = √ε x₂`, `z = √ε z₂` and time divided
/// by `√ε`; the state is `(x₂, ŷ, z₂)`.
pub fn scaled_rhs(params: &NormalFormParams, phi: &RegularizationFn, p: &Point) -> Point {
    blend(params, p[0], p[2], phi.eval(p[1]))
}

/// Height `ŷ = h(s)` of the critical manifold over the ray `z = s x`.
pub fn critical_manifold_h(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    s: f64,
) -> Result<f64, RegularizationError> {
    let k = params.b * s / params.beta;
    let u = (1.0 - k) / (1.0 + k);
    if !(s > 0.0) {
        return Err(RegularizationError::OutOfRange(u));
    }
    phi.inverse(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Attracting,
    Repelling,
}

/// Normal rate `φ'(h) (b z + β x)` of the layer problem on the critical
/// manifold above `(x, z)`.
pub fn layer_stability(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    x: f64,
    z: f64,
) -> Result<(Stability, f64), RegularizationError> {
    if !(x * z > 0.0) {
        return Err(RegularizationError::NotSliding(x, z));
    }
    let h = critical_manifold_h(params, phi, z / x)?;
    let rate = phi.deriv(h) * (params.b * z + params.beta * x);
    let kind = if rate < 0.0 { Stability::Attracting } else { Stability::Repelling };
    Ok((kind, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p1() -> NormalFormParams {
        NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap()
    }

    const FAMILIES: [RegularizationFn; 2] = [RegularizationFn::ARCTAN, RegularizationFn::ST_CUBIC];

    #[test]
    fn phi_examples() {
        assert_eq!(phi_arctan(0.0), 0.0);
        assert_relative_eq!(phi_arctan(1.0), 0.5, epsilon = 1e-15);
        assert_eq!(phi_st(1.0), 1.0);
        assert_eq!(phi_st(2.0), 1.0);
        assert_eq!(phi_st(-3.0), -1.0);
    }

    #[test]
    fn monotone_on_active_region() {
        for phi in FAMILIES {
            let (lo, hi) = match phi.family {
                PhiFamily::Arctan => (-50.0, 50.0),
                PhiFamily::SotomayorTeixeira => (-0.9999, 0.9999),
            };
            let mut prev = f64::NEG_INFINITY;
            for k in 0..10_000 {
                let s = lo + (hi - lo) * k as f64 / 9_999.0;
                assert!(phi.deriv(s) > 0.0);
                let v = phi.eval(s);
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for phi in FAMILIES {
            for s in [-0.7, -0.1, 0.0, 0.3, 0.95] {
                let h = 1e-6;
                let fd = (phi.eval(s + h) - phi.eval(s - h)) / (2.0 * h);
                assert_relative_eq!(phi.deriv(s), fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for phi in FAMILIES {
            for u in [-0.99, -0.5, 0.0, 0.3, 0.97] {
                assert_relative_eq!(phi.eval(phi.inverse(u).unwrap()), u, epsilon = 1e-14);
            }
            assert!(phi.inverse(1.0).is_err());
        }
    }

    #[test]
    fn arctan_tail_identity() {
        let phi = RegularizationFn::ARCTAN;
        for k in 0..2000 {
            let s = 10.0 * 1.01_f64.powi(k);
            let tail = 1.0 - FRAC_2_PI / s * (1.0 + phi.tail_phi2(1.0 / (s * s)).unwrap());
            assert!((phi.eval(s) - tail).abs() <= 1e-10);
            assert!((phi.eval(-s) + tail).abs() <= 1e-10);
        }
        assert_eq!(arctan_tail_phi2(0.0), 0.0);
        // both branches of the tail agree where they meet
        let q = 1e-4_f64;
        let direct = q.sqrt().atan() / q.sqrt() - 1.0;
        assert_relative_eq!(arctan_tail_phi2(q * (1.0 - 1e-12)), direct, epsilon = 1e-13);
        assert!(RegularizationFn::ST_CUBIC.tail_phi2(0.1).is_none());
    }

    #[test]
    fn phi_pm_forms_agree() {
        for phi in FAMILIES {
            for k in 1..=1000 {
                let e = 0.1 * k as f64 / 1000.0;
                assert!((phi.phi_plus(e) - phi.eval(1.0 / e)).abs() <= 1e-12);
                assert!((phi.phi_minus(e) - phi.eval(-1.0 / e)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn regularized_field_examples() {
        let params = p1();
        let eps = 1e-4;
        let p = [0.3, 1e6 * eps, -0.7];
        let v = regularized_field(&params, &RegularizationFn::ARCTAN, eps, &p).unwrap();
        let xp = params.field(crate::pws::Side::Plus, &p);
        for i in 0..3 {
            assert!((v[i] - 2.0 * xp[i]).abs() <= 1e-5 * (2.0 * xp[i]).abs().max(1.0));
        }
        let p = [0.3, 2.0 * eps, -0.7];
        let v = regularized_field(&params, &RegularizationFn::ST_CUBIC, eps, &p).unwrap();
        let xp = params.field(crate::pws::Side::Plus, &p);
        assert_eq!(v, [2.0 * xp[0], 2.0 * xp[1], 2.0 * xp[2]]);
        let v = regularized_field(&params, &RegularizationFn::ARCTAN, eps, &[0.5, 0.0, 2.0]).unwrap();
        assert_eq!(v, [3.0, 1.5, 2.0]);
        assert!(matches!(
            regularized_field(&params, &RegularizationFn::ARCTAN, 0.0, &p),
            Err(RegularizationError::NonpositiveEpsilon(_))
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let params = NormalFormParams::new(1.3, 0.7, 4.0, 1.1).unwrap();
        let eps = 0.05;
        for phi in FAMILIES {
            let p = [0.3, 0.01, -0.4];
            let j = regularized_jacobian(&params, &phi, eps, &p).unwrap();
            let f = |q: &Point| regularized_field(&params, &phi, eps, q).unwrap();
            let fd = crate::pws::finite_difference_jacobian(&f, &p);
            for r in 0..3 {
                for c in 0..3 {
                    assert!((j[r][c] - fd[r][c]).abs() < 1e-6 * (1.0 + j[r][c].abs()));
                }
            }
        }
    }

    #[test]
    fn reversibility_identity() {
        assert_eq!(reversibility_conjugate(&[1.0, 2.0, 3.0]), [-1.0, 2.0, -3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = p1();
        for phi in FAMILIES {
            for eps in [1.0, 1e-2] {
                for _ in 0..100 {
                    let p: Point = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                    assert_eq!(reversibility_conjugate(&reversibility_conjugate(&p)), p);
                    let lhs = regularized_field(&params, &phi, eps, &reversibility_conjugate(&p)).unwrap();
                    let rp = reversibility_conjugate(&regularized_field(&params, &phi, eps, &p).unwrap());
                    for i in 0..3 {
                        assert!((lhs[i] + rp[i]).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn slow_fast_examples() {
        let params = p1();
        let phi = RegularizationFn::ARCTAN;
        let p = [0.4, 0.2, -1.5];
        let layer = slow_fast_rhs(&params, &phi, &p, 0.0, Timescale::Fast).unwrap();
        let f = phi.eval(0.2);
        assert_eq!(layer[0], 0.0);
        assert_eq!(layer[2], 0.0);
        assert_relative_eq!(layer[1], -1.5 * (1.0 + f) - 0.4 * (1.0 - f), epsilon = 1e-15);
        // ε = 1: identical to the regularized field with y = ŷ
        let a = slow_fast_rhs(&params, &phi, &p, 1.0, Timescale::Fast).unwrap();
        assert_eq!(a, regularized_field(&params, &phi, 1.0, &p).unwrap());
        let s = slow_fast_rhs(&params, &phi, &p, 0.01, Timescale::Slow).unwrap();
        let fast = slow_fast_rhs(&params, &phi, &p, 0.01, Timescale::Fast).unwrap();
        for i in 0..3 {
            assert_relative_eq!(s[i], fast[i] / 0.01, epsilon = 1e-12);
        }
        assert!(slow_fast_rhs(&params, &phi, &p, 0.0, Timescale::Slow).is_err());
    }

    #[test]
    fn scaled_rhs_is_epsilon_free() {
        // x = √ε x₂, z = √ε z₂, fast time: (εG, F, εH) → divide by √ε after scaling
        let params = p1();
        let phi = RegularizationFn::ARCTAN;
        let q = [-2.0, -0.3, 5.0];
        let reference = scaled_rhs(&params, &phi, &q);
        for eps in [1e-2_f64, 1e-4, 1e-6] {
            let r = eps.sqrt();
            let v = slow_fast_rhs(&params, &phi, &[r * q[0], q[1], r * q[2]], eps, Timescale::Fast).unwrap();
            let back = [v[0] / (r * r), v[1] / r, v[2] / (r * r)];
            for i in 0..3 {
                assert_relative_eq!(back[i], reference[i], epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn critical_manifold_examples() {
        let params = p1();
        let phi = RegularizationFn::ARCTAN;
        assert_eq!(critical_manifold_h(&params, &phi, 1.0).unwrap(), 0.0);
        let s = 2.618034;
        let h = critical_manifold_h(&params, &phi, s).unwrap();
        let u: f64 = (1.0 - s) / (1.0 + s);
        assert_relative_eq!(h, (u * std::f64::consts::FRAC_PI_2).tan(), epsilon = 1e-12);
        assert_relative_eq!(h, -0.84654, epsilon = 1e-5);
        assert!(critical_manifold_h(&params, &phi, 1e-12).unwrap() > 1e10);
        let st = critical_manifold_h(&params, &RegularizationFn::ST_CUBIC, 1e-9).unwrap();
        assert_relative_eq!(st, 1.0, epsilon = 1e-4);
        assert!(critical_manifold_h(&params, &phi, -1.0).is_err());
    }

    #[test]
    fn critical_graph_residual() {
        let params = NormalFormParams::new(0.8, 1.7, 5.0, 1.0).unwrap();
        for phi in FAMILIES {
            for (x, z) in [(-1.0, -0.5), (-0.2, -3.0), (1.0, 0.4), (2.0, 2.0), (-0.7, -0.7)] {
                let h = critical_manifold_h(&params, &phi, z / x).unwrap();
                let v = slow_fast_rhs(&params, &phi, &[x, h, z], 0.0, Timescale::Fast).unwrap();
                assert!(v[1].abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn layer_stability_examples() {
        let params = p1();
        let phi = RegularizationFn::ARCTAN;
        let (k, rate) = layer_stability(&params, &phi, -1.0, -1.0).unwrap();
        assert_eq!(k, Stability::Attracting);
        assert_relative_eq!(rate, -1.2732, epsilon = 1e-4);
        assert_eq!(layer_stability(&params, &phi, 1.0, 1.0).unwrap().0, Stability::Repelling);
        assert!(matches!(layer_stability(&params, &phi, 1.0, -1.0), Err(RegularizationError::NotSliding(..))));
        // ST rate vanishes towards the fold line z = 0 along S_a
        let st = RegularizationFn::ST_CUBIC;
        let near = layer_stability(&params, &st, -1.0, -1e-6).unwrap().1.abs();
        let far = layer_stability(&params, &st, -1.0, -1.0).unwrap().1.abs();
        assert!(near < 1e-2 * far);
    }

    proptest! {
        #[test]
        fn odd_and_bounded(s in -1e3..1e3f64) {
            for phi in FAMILIES {
                prop_assert_eq!(phi.eval(-s), -phi.eval(s));
                prop_assert!(phi.eval(s).abs() <= 1.0);
            }
        }

        #[test]
        fn attracting_iff_third_quadrant(x in 0.01..3.0f64, z in 0.01..3.0f64) {
            let params = p1();
            for phi in FAMILIES {
                prop_assert_eq!(layer_stability(&params, &phi, -x, -z).unwrap().0, Stability::Attracting);
                prop_assert_eq!(layer_stability(&params, &phi, x, z).unwrap().0, Stability::Repelling);
            }
        }
    }
}
