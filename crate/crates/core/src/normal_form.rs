//! The piecewise-linear visible-invisible two-fold
//!
//! ```text
//! X⁺ = (c/β, b z, 1)      for y > 0
//! X⁻ = (−1, −β x, γ/b)    for y < 0
//! ```
//!
//! with closed-form eigenstructure of the sliding node, canards, exact flows
//! and the return map `ϑ` of `X⁻` back to the switching plane.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pws::{BoundingBox, FieldFn, JacobianFn, Mat3, Point, PwsSystem, Side};

/// Default margin keeping `ξ` away from the integers.
pub const DEFAULT_TAU_INT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("assumption (A) violated: {0}")]
    AssumptionAViolated(String),
    #[error("return map needs x ≥ 0, got {0}")]
    NegativeX(f64),
    #[error("entry interval [{0}, {1}] straddles the weak canard")]
    StraddlesWeakCanard(f64, f64),
    #[error("entry interval [{0}, {1}] is not inside the funnel")]
    OutsideFunnel(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub b: f64,
    pub beta: f64,
    pub c: f64,
    pub gamma: f64,
}

/// Outcome of checking assumption (A) on the sliding node.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub holds: bool,
    pub discriminant: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenData {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub v_plus: [f64; 2],
    pub v_minus: [f64; 2],
    pub xi: f64,
    pub n: i64,
    pub z1_star: f64,
    pub discriminant: f64,
}

/// A line `z = slope · x` in the (x, z) plane of Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanardLine {
    pub slope: f64,
}

impl CanardLine {
    pub fn z_at(&self, x: f64) -> f64 {
        self.slope * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanardLines {
    pub strong: CanardLine,
    pub weak: CanardLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[serde(rename = "a")]
    CaseA,
    #[serde(rename = "b")]
    CaseB,
}

impl NormalFormParams {
    pub fn new(b: f64, beta: f64, c: f64, gamma: f64) -> Result<Self, NormalFormError> {
        let p = Self { b, beta, c, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NormalFormError> {
        if ![self.b, self.beta, self.c, self.gamma].iter().all(|v| v.is_finite()) {
            return Err(NormalFormError::InvalidParams("all of b, beta, c, gamma must be finite".into()));
        }
        if self.b <= 0.0 || self.beta <= 0.0 {
            return Err(NormalFormError::InvalidParams(format!(
                "need b > 0 and beta > 0, got b = {}, beta = {}",
                self.b, self.beta
            )));
        }
        Ok(())
    }

    pub fn discriminant(&self) -> f64 {
        (self.c - self.gamma).powi(2) - 4.0 * self.b * self.beta
    }

    pub fn check_assumption_a(&self) -> AssumptionReport {
        let d = self.discriminant();
        let mut failures = Vec::new();
        if d > 0.0 {
            let root = d.sqrt();
            if self.c + self.gamma <= root {
                failures.push(format!("c + gamma = {} is not > sqrt(D) = {}", self.c + self.gamma, root));
            }
            if self.c - self.gamma <= root {
                failures.push(format!("c - gamma = {} is not > sqrt(D) = {}", self.c - self.gamma, root));
            }
        } else {
            failures.push(format!("discriminant = {d}: (c - gamma)^2 - 4 b beta must be > 0"));
        }
        AssumptionReport { holds: failures.is_empty(), discriminant: d, failures }
    }

    /// True iff (A) holds and `ξ` is farther than `tau_int` from every integer.
    pub fn check_assumption_b(&self, tau_int: f64) -> bool {
        match self.eigen_data() {
            Ok(e) => (e.xi - e.xi.round()).abs() > tau_int,
            Err(_) => false,
        }
    }

    fn require_a(&self) -> Result<(), NormalFormError> {
        let report = self.check_assumption_a();
        if report.holds {
            Ok(())
        } else {
            Err(NormalFormError::AssumptionAViolated(report.failures.join("; ")))
        }
    }

    pub fn eigen_data(&self) -> Result<EigenData, NormalFormError> {
        self.require_a()?;
        let Self { b, c, gamma, .. } = *self;
        let d = self.discriminant();
        let root = d.sqrt();
        let lambda_plus = -(c + gamma) / 2.0 + root / 2.0;
        let lambda_minus = -(c + gamma) / 2.0 - root / 2.0;
        let chi_plus = -((c - gamma) + root) / (2.0 * b);
        let chi_minus = -((c - gamma) - root) / (2.0 * b);
        let xi = lambda_minus / lambda_plus;
        Ok(EigenData {
            lambda_plus,
            lambda_minus,
            chi_plus,
            chi_minus,
            v_plus: [1.0, -chi_plus],
            v_minus: [1.0, -chi_minus],
            xi,
            n: xi.floor() as i64,
            z1_star: -chi_plus + 2.0 * gamma / b,
            discriminant: d,
        })
    }

    pub fn field(&self, side: Side, p: &Point) -> Point {
        let Self { b, beta, c, gamma } = *self;
        match side {
            Side::Plus => [c / beta, b * p[2], 1.0],
            Side::Minus => [-1.0, -beta * p[0], gamma / b],
        }
    }

    pub fn jacobian(&self, side: Side) -> Mat3 {
        let mut j = [[0.0; 3]; 3];
        match side {
            Side::Plus => j[1][2] = self.b,
            Side::Minus => j[1][0] = -self.beta,
        }
        j
    }

    /// The normal form as a general [`PwsSystem`] on the box `[-10, 10]³`.
    pub fn pws_system(&self) -> PwsSystem {
        let (p1, p2, p3, p4) = (*self, *self, *self, *self);
        let plus: FieldFn = Arc::new(move |p: &Point| p1.field(Side::Plus, p));
        let minus: FieldFn = Arc::new(move |p: &Point| p2.field(Side::Minus, p));
        let jp: JacobianFn = Arc::new(move |_: &Point| p3.jacobian(Side::Plus));
        let jm: JacobianFn = Arc::new(move |_: &Point| p4.jacobian(Side::Minus));
        let bbox = BoundingBox::cube(10.0).expect("static box");
        PwsSystem::new(plus, jp, minus, jm, bbox).expect("linear fields pass the self check")
    }

    pub fn flow_exact(&self, side: Side, p0: &Point, t: f64) -> Point {
        let Self { b, beta, c, gamma } = *self;
        let [x0, y0, z0] = *p0;
        match side {
            Side::Plus => [x0 + c * t / beta, y0 + b * (z0 * t + t * t / 2.0), z0 + t],
            Side::Minus => [x0 - t, y0 - beta * (x0 * t - t * t / 2.0), z0 + gamma * t / b],
        }
    }

    /// First return `ϑ(x, z) = (−x, z + 2γx/b)` of `X⁻` from `(x, 0, z)` to Σ.
    pub fn return_map_vartheta(&self, x: f64, z: f64) -> Result<(f64, f64), NormalFormError> {
        if x < 0.0 {
            return Err(NormalFormError::NegativeX(x));
        }
        Ok((-x, z + 2.0 * self.gamma * x / self.b))
    }

    /// Point of the `X⁺` orbit from the two-fold parametrised by its x-coordinate.
    pub fn segment_u(&self, r: f64) -> Point {
        let Self { b, beta, c, .. } = *self;
        [r, 0.5 * r * r * b * beta * beta / (c * c), r * beta / c]
    }

    /// Intersection of the distinguished orbit with `{y = nu}`.
    pub fn u_out(&self, nu: f64) -> Point {
        let r = (self.c / self.beta) * (2.0 * nu / self.b).sqrt();
        let mut p = self.segment_u(r);
        p[1] = nu;
        p
    }

    pub fn canard_lines(&self) -> Result<CanardLines, NormalFormError> {
        let e = self.eigen_data()?;
        Ok(CanardLines { strong: CanardLine { slope: -e.chi_minus }, weak: CanardLine { slope: -e.chi_plus } })
    }

    /// Open sector of Σ_sl⁻ between the strong canard and `l⁻`.
    pub fn in_funnel(&self, x: f64, z: f64) -> Result<bool, NormalFormError> {
        let e = self.eigen_data()?;
        Ok(x < 0.0 && z < -e.chi_minus * x)
    }

    /// Case (a)/(b) from the position of `{x = −δ, z ∈ I_in}` relative to the
    /// canards and the parity of `n = ⌊ξ⌋`.
    pub fn classify_case(&self, i_in: (f64, f64), delta: f64) -> Result<Case, NormalFormError> {
        let e = self.eigen_data()?;
        let (lo, hi) = if i_in.0 <= i_in.1 { i_in } else { (i_in.1, i_in.0) };
        if !(delta > 0.0) || !self.in_funnel(-delta, hi)? {
            return Err(NormalFormError::OutsideFunnel(lo, hi));
        }
        let weak_z = e.chi_plus * delta;
        if lo <= weak_z && weak_z <= hi {
            return Err(NormalFormError::StraddlesWeakCanard(lo, hi));
        }
        let between_canards = lo > weak_z;
        let n_even = e.n % 2 == 0;
        Ok(if between_canards == n_even { Case::CaseA } else { Case::CaseB })
    }
}

/// Draws parameters uniformly from `b, β ∈ [0.2, 3)`, `c, γ ∈ [−2, 6)` until
/// assumption (A) holds.
pub fn sample_valid_params<R: rand::Rng + ?Sized>(rng: &mut R) -> NormalFormParams {
    loop {
        let p = NormalFormParams {
            b: rng.random_range(0.2..3.0),
            beta: rng.random_range(0.2..3.0),
            c: rng.random_range(-2.0..6.0),
            gamma: rng.random_range(-2.0..6.0),
        };
        if p.check_assumption_a().holds {
            return p;
        }
    }
}

/// Largest residual of `λ±` in `λ² + (c+γ)λ + cγ + bβ` and of `χ±` in
/// `bχ² + (c−γ)χ + β`.
pub fn characteristic_residual(params: &NormalFormParams, e: &EigenData) -> f64 {
    let NormalFormParams { b, beta, c, gamma } = *params;
    let lam = |l: f64| (l * l + (c + gamma) * l + c * gamma + b * beta).abs();
    let chi = |x: f64| (b * x * x + (c - gamma) * x + beta).abs();
    lam(e.lambda_plus).max(lam(e.lambda_minus)).max(chi(e.chi_plus)).max(chi(e.chi_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix2;
    use proptest::prelude::*;

    fn p1() -> NormalFormParams {
        NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(NormalFormParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(NormalFormParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(NormalFormParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn assumption_a_examples() {
        let r = p1().check_assumption_a();
        assert!(r.holds);
        assert_relative_eq!(r.discriminant, 5.0);
        let r = NormalFormParams::new(1.0, 1.0, 4.0, 2.0).unwrap().check_assumption_a();
        assert!(!r.holds);
        assert_eq!(r.failures.len(), 1);
        assert!(NormalFormParams::new(1.0, 0.9005, 1.0, -0.9).unwrap().check_assumption_a().holds);
    }

    #[test]
    fn assumption_b_examples() {
        assert!(p1().check_assumption_b(DEFAULT_TAU_INT));
        let p2 = NormalFormParams::new(1.0, 1.0, 5.0, 2.0).unwrap();
        assert!(p2.check_assumption_b(DEFAULT_TAU_INT));
        assert_eq!(p2.eigen_data().unwrap().n, 1);
        // ξ = 2 needs √D = (c+γ)/3; with b = β = 1, γ = 1: (c−1)² − 4 = (c+1)²/9
        // → 8c² − 20c − 28 = 0 → c = (20 + √(400 + 896)) / 16
        let c = (20.0 + 1296.0_f64.sqrt()) / 16.0;
        let tuned = NormalFormParams::new(1.0, 1.0, c, 1.0).unwrap();
        assert_relative_eq!(tuned.eigen_data().unwrap().xi, 2.0, epsilon = 1e-12);
        assert!(!tuned.check_assumption_b(DEFAULT_TAU_INT));
    }

    #[test]
    fn sampler_is_seeded_and_valid() {
        use rand::SeedableRng;
        let draw = |seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_valid_params(&mut rng)).collect::<Vec<_>>()
        };
        let a = draw(3);
        assert_eq!(a, draw(3));
        assert_ne!(a, draw(4));
        assert!(a.iter().all(|p| p.check_assumption_a().holds));
    }

    #[test]
    fn eigen_examples() {
        let e = p1().eigen_data().unwrap();
        assert_relative_eq!(e.lambda_plus, -1.381966, epsilon = 1e-6);
        assert_relative_eq!(e.lambda_minus, -3.618034, epsilon = 1e-6);
        assert_relative_eq!(e.chi_plus, -2.618034, epsilon = 1e-6);
        assert_relative_eq!(e.chi_minus, -0.381966, epsilon = 1e-6);
        assert_relative_eq!(e.xi, 2.618034, epsilon = 1e-6);
        assert_eq!(e.n, 2);
        assert_relative_eq!(e.z1_star, 4.618034, epsilon = 1e-6);

        let e = NormalFormParams::new(1.0, 1.0, 5.0, 2.0).unwrap().eigen_data().unwrap();
        assert_eq!(e.n, 1);
        assert_relative_eq!(e.z1_star, 6.618034, epsilon = 1e-6);

        let e = NormalFormParams::new(1.0, 0.9005, 1.0, -0.9).unwrap().eigen_data().unwrap();
        assert_relative_eq!(e.chi_plus, -0.99472, epsilon = 1e-5);
        assert_relative_eq!(e.z1_star, -0.80528, epsilon = 1e-5);
        assert_eq!(e.n, 17);

        assert!(matches!(
            NormalFormParams::new(1.0, 1.0, 4.0, 2.0).unwrap().eigen_data(),
            Err(NormalFormError::AssumptionAViolated(_))
        ));
    }

    #[test]
    fn eigen_matches_numerical_decomposition() {
        let p = p1();
        let e = p.eigen_data().unwrap();
        let m = Matrix2::new(-p.c, p.b, -p.beta, -p.gamma);
        let mut eig: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(eig[0], e.lambda_minus, epsilon = 1e-12);
        assert_relative_eq!(eig[1], e.lambda_plus, epsilon = 1e-12);
    }

    #[test]
    fn field_and_flow_examples() {
        let p = p1();
        assert_eq!(p.field(Side::Plus, &[3.0, 2.0, 0.0]), [4.0, 0.0, 1.0]);
        assert_eq!(p.field(Side::Minus, &[0.0, -1.0, 7.0]), [-1.0, 0.0, 1.0]);
        let j = p.jacobian(Side::Plus);
        let nonzero: Vec<_> = j.iter().flatten().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero, vec![&1.0]);
        assert_eq!(j[1][2], 1.0);
        assert_eq!(p.flow_exact(Side::Plus, &[0.0; 3], 1.0), [4.0, 0.5, 1.0]);
        let x0 = 0.7;
        let q = p.flow_exact(Side::Minus, &[x0, 0.0, -0.3], 2.0 * x0);
        assert_relative_eq!(q[0], -x0);
        assert!(q[1].abs() < 1e-15);
        assert_relative_eq!(q[2], -0.3 + 2.0 * x0);
        assert_eq!(p.flow_exact(Side::Minus, &[1.0, 2.0, 3.0], 0.0), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn vartheta_examples() {
        let p = p1();
        assert_eq!(p.return_map_vartheta(1.0, -3.0).unwrap(), (-1.0, -1.0));
        assert_eq!(p.return_map_vartheta(0.0, -2.5).unwrap(), (-0.0, -2.5));
        assert_eq!(p.return_map_vartheta(-0.1, 0.0).unwrap_err(), NormalFormError::NegativeX(-0.1));
        // the differential of ϑ maps the weak direction to (−1, z1*)
        let e = p.eigen_data().unwrap();
        let h = 1e-6;
        let (a, bz) = p.return_map_vartheta(h * e.v_plus[0], h * e.v_plus[1]).unwrap();
        assert_relative_eq!(a / h, -1.0, epsilon = 1e-9);
        assert_relative_eq!(bz / h, e.z1_star, epsilon = 1e-9);
    }

    #[test]
    fn segment_u_examples() {
        let p = p1();
        assert_eq!(p.segment_u(1.0), [1.0, 1.0 / 32.0, 0.25]);
        assert_eq!(p.segment_u(0.0), [0.0, 0.0, 0.0]);
        let u = p.u_out(0.1);
        assert_relative_eq!(u[0], 1.78885, epsilon = 1e-5);
        assert_eq!(u[1], 0.1);
        assert_relative_eq!(u[2], 0.44721, epsilon = 1e-5);
        // X⁺ from the origin reaches u_out at t = z
        let q = p.flow_exact(Side::Plus, &[0.0; 3], u[2]);
        for i in 0..3 {
            assert_relative_eq!(q[i], u[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn funnel_examples() {
        let p = p1();
        assert!(p.in_funnel(-1.0, -2.618).unwrap());
        assert!(!p.in_funnel(-1.0, -0.1).unwrap());
        assert!(!p.in_funnel(0.0, -1.0).unwrap());
        let lines = p.canard_lines().unwrap();
        assert_relative_eq!(lines.weak.z_at(-1.0), -2.618034, epsilon = 1e-6);
        assert_relative_eq!(lines.strong.z_at(-1.0), -0.381966, epsilon = 1e-6);
    }

    #[test]
    fn case_examples() {
        let p = p1();
        assert_eq!(p.classify_case((-2.0, -1.0), 1.0).unwrap(), Case::CaseA);
        assert_eq!(p.classify_case((-4.0, -3.0), 1.0).unwrap(), Case::CaseB);
        let p2 = NormalFormParams::new(1.0, 1.0, 5.0, 2.0).unwrap();
        let e2 = p2.eigen_data().unwrap();
        let mid = 0.5 * (e2.chi_plus + e2.chi_minus);
        assert_eq!(p2.classify_case((mid - 0.01, mid + 0.01), 1.0).unwrap(), Case::CaseB);
        assert_eq!(p2.classify_case((-9.0, -8.0), 1.0).unwrap(), Case::CaseA);
        assert!(matches!(p.classify_case((-3.0, -2.0), 1.0), Err(NormalFormError::StraddlesWeakCanard(..))));
        assert!(matches!(p.classify_case((-0.3, -0.1), 1.0), Err(NormalFormError::OutsideFunnel(..))));
    }

    #[test]
    fn desingularized_flow_approaches_along_weak_direction() {
        let p = p1();
        let e = p.eigen_data().unwrap();
        let v = nalgebra::Vector2::new(e.v_plus[0], e.v_plus[1]).normalize();
        let mut s = nalgebra::Vector2::new(-1.0, -0.5);
        let dt = 1e-3;
        let f = |s: &nalgebra::Vector2<f64>| {
            let d = crate::pws::desingularized_sliding_field(&p, s[0], s[1]);
            nalgebra::Vector2::new(d[0], d[1])
        };
        let mut aligned_before_small = false;
        while s.norm() > 1e-6 {
            let k1 = f(&s);
            let k2 = f(&(s + 0.5 * dt * k1));
            let k3 = f(&(s + 0.5 * dt * k2));
            let k4 = f(&(s + dt * k3));
            s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            assert!(p.in_funnel(s[0], s[1]).unwrap());
            let angle = (s.normalize().dot(&v)).abs().min(1.0).acos();
            if angle < 1e-3 {
                aligned_before_small = true;
            }
        }
        assert!(aligned_before_small);
    }

    fn valid_params() -> impl Strategy<Value = NormalFormParams> {
        (0.2..3.0f64, 0.2..3.0f64, -2.0..6.0f64, -2.0..6.0f64)
            .prop_map(|(b, beta, c, gamma)| NormalFormParams { b, beta, c, gamma })
            .prop_filter("assumption (A)", |p| p.check_assumption_a().holds)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eigen_invariants(p in valid_params()) {
            let e = p.eigen_data().unwrap();
            prop_assert!(characteristic_residual(&p, &e) <= 1e-10 * (1.0 + e.lambda_minus * e.lambda_minus + e.chi_plus * e.chi_plus));
            let (tr, det) = (p.c + p.gamma, p.c * p.gamma + p.b * p.beta);
            for l in [e.lambda_plus, e.lambda_minus] {
                let scale = 1.0 + l * l + tr.abs() * l.abs() + det.abs();
                prop_assert!((l * l + tr * l + det).abs() <= 1e-10 * scale);
            }
            prop_assert!(e.lambda_minus < e.lambda_plus && e.lambda_plus < 0.0);
            prop_assert!(e.chi_plus < e.chi_minus && e.chi_minus < 0.0);
            prop_assert!(e.xi > 1.0);
            prop_assert!(e.z1_star > e.chi_minus);
            let m = Matrix2::new(-p.c, p.b, -p.beta, -p.gamma);
            for (l, v) in [(e.lambda_plus, e.v_plus), (e.lambda_minus, e.v_minus)] {
                let v = nalgebra::Vector2::new(v[0], v[1]);
                let r = m * v - l * v;
                prop_assert!(r.norm() <= 1e-10 * (1.0 + v.norm() * l.abs()));
            }
        }

        #[test]
        fn segment_u_is_invariant(p in valid_params(), r in 0.0..5.0f64) {
            let dr = [1.0, r * p.b * p.beta * p.beta / (p.c * p.c), p.beta / p.c];
            let f = p.field(Side::Plus, &p.segment_u(r));
            let cross = [
                f[1] * dr[2] - f[2] * dr[1],
                f[2] * dr[0] - f[0] * dr[2],
                f[0] * dr[1] - f[1] * dr[0],
            ];
            let scale = 1.0 + f.iter().map(|v| v.abs()).sum::<f64>() * dr.iter().map(|v| v.abs()).sum::<f64>();
            prop_assert!(cross.iter().all(|c| c.abs() <= 1e-10 * scale));
        }

        #[test]
        fn vartheta_fixes_invisible_fold(p in valid_params(), z in -5.0..5.0f64) {
            prop_assert_eq!(p.return_map_vartheta(0.0, z).unwrap(), (-0.0, z));
        }
    }
}
