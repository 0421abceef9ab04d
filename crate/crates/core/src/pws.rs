//! Filippov machinery for piecewise-smooth systems in R³ switching on `{y = 0}`.
//!
//! The switching function is `f(x, y, z) = y`, so every Lie derivative `X±f`
//! is just the y-component of the corresponding field. Zero tests on Lie
//! derivatives use an absolute tangency band `tau_tan` (states are assumed
//! to be O(1)).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::normal_form::NormalFormParams;

pub type Point = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Default absolute band inside which a Lie derivative counts as zero.
pub const DEFAULT_TAU_TAN: f64 = 1e-9;

/// Relative tolerance used when checking a supplied Jacobian against central
/// finite differences at construction time.
pub const JACOBIAN_CHECK_TOL: f64 = 1e-6;

pub type FieldFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Point) -> Mat3 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Plus => write!(f, "plus"),
            Side::Minus => write!(f, "minus"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwsError {
    #[error("{side} field is not finite at {point:?}")]
    NonFiniteField { side: Side, point: Point },
    #[error("{side} jacobian entry ({row},{col}) disagrees with finite differences at {point:?}: {supplied} vs {finite_difference}")]
    JacobianMismatch {
        side: Side,
        point: Point,
        row: usize,
        col: usize,
        supplied: f64,
        finite_difference: f64,
    },
    #[error("bounding box is empty or not finite")]
    InvalidBoundingBox,
    #[error("point is off the switching manifold (|y| = {0:e})")]
    PointOffSigma(f64),
    #[error("point is not in a sliding region (classified as {0:?})")]
    NotSliding(SigmaKind),
    #[error("sliding denominator X⁻f − X⁺f is degenerate ({0:e})")]
    DegenerateDenominator(f64),
    #[error("point is not a fold of the {0} field")]
    NotAFold(Side),
}

/// Axis-aligned box on which a [`PwsSystem`] is declared valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lo: Point,
    pub hi: Point,
}

impl BoundingBox {
    pub fn new(lo: Point, hi: Point) -> Result<Self, PwsError> {
        let ok = (0..3).all(|i| lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]);
        if ok {
            Ok(Self { lo, hi })
        } else {
            Err(PwsError::InvalidBoundingBox)
        }
    }

    pub fn cube(half_width: f64) -> Result<Self, PwsError> {
        Self::new([-half_width; 3], [half_width; 3])
    }

    fn samples(&self, per_axis: usize) -> impl Iterator<Item = Point> + '_ {
        let lerp = move |i: usize, k: usize| {
            let s = k as f64 / (per_axis - 1) as f64;
            self.lo[i] + s * (self.hi[i] - self.lo[i])
        };
        (0..per_axis).flat_map(move |i| {
            (0..per_axis)
                .flat_map(move |j| (0..per_axis).map(move |k| [lerp(0, i), lerp(1, j), lerp(2, k)]))
        })
    }
}

/// Central finite-difference Jacobian of `f` at `p`.
pub fn finite_difference_jacobian(f: &dyn Fn(&Point) -> Point, p: &Point) -> Mat3 {
    let mut jac = [[0.0; 3]; 3];
    for col in 0..3 {
        let h = 1e-6 * p[col].abs().max(1.0);
        let mut fwd = *p;
        let mut bwd = *p;
        fwd[col] += h;
        bwd[col] -= h;
        let (ff, fb) = (f(&fwd), f(&bwd));
        for row in 0..3 {
            jac[row][col] = (ff[row] - fb[row]) / (2.0 * h);
        }
    }
    jac
}

#[derive(Clone)]
struct SmoothField {
    field: FieldFn,
    jacobian: JacobianFn,
}

/// A pair of smooth vector fields `X⁺` (on `y > 0`) and `X⁻` (on `y < 0`).
///
/// Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct PwsSystem {
    plus: SmoothField,
    minus: SmoothField,
    bbox: BoundingBox,
}

impl fmt::Debug for PwsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PwsSystem").field("bbox", &self.bbox).finish_non_exhaustive()
    }
}

impl PwsSystem {
    /// Builds a system from fields and their Jacobians, checking finiteness and
    /// Jacobian consistency on a 5×5×5 lattice of the bounding box.
    pub fn new(
        plus: FieldFn,
        plus_jacobian: JacobianFn,
        minus: FieldFn,
        minus_jacobian: JacobianFn,
        bbox: BoundingBox,
    ) -> Result<Self, PwsError> {
        let sys = Self {
            plus: SmoothField { field: plus, jacobian: plus_jacobian },
            minus: SmoothField { field: minus, jacobian: minus_jacobian },
            bbox,
        };
        sys.self_check()?;
        Ok(sys)
    }

    /// Builds a system whose Jacobians are central finite differences of the fields.
    pub fn with_fd_jacobians(plus: FieldFn, minus: FieldFn, bbox: BoundingBox) -> Result<Self, PwsError> {
        let jac_of = |f: FieldFn| -> JacobianFn { Arc::new(move |p: &Point| finite_difference_jacobian(&*f, p)) };
        let (jp, jm) = (jac_of(plus.clone()), jac_of(minus.clone()));
        Self::new(plus, jp, minus, jm, bbox)
    }

    fn self_check(&self) -> Result<(), PwsError> {
        for side in [Side::Plus, Side::Minus] {
            let sf = self.smooth(side);
            for p in self.bbox.samples(5) {
                let v = (sf.field)(&p);
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(PwsError::NonFiniteField { side, point: p });
                }
                let supplied = (sf.jacobian)(&p);
                let fd = finite_difference_jacobian(&*sf.field, &p);
                let scale = supplied.iter().flatten().fold(1.0_f64, |m, c| m.max(c.abs()));
                for row in 0..3 {
                    for col in 0..3 {
                        if (supplied[row][col] - fd[row][col]).abs() > JACOBIAN_CHECK_TOL * scale {
                            return Err(PwsError::JacobianMismatch {
                                side,
                                point: p,
                                row,
                                col,
                                supplied: supplied[row][col],
                                finite_difference: fd[row][col],
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn smooth(&self, side: Side) -> &SmoothField {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn field(&self, side: Side, p: &Point) -> Point {
        (self.smooth(side).field)(p)
    }

    pub fn jacobian(&self, side: Side, p: &Point) -> Mat3 {
        (self.smooth(side).jacobian)(p)
    }

    /// `X±f` at `p`; with `f = y` this is the y-component of the field.
    pub fn lie_derivative(&self, side: Side, p: &Point) -> f64 {
        self.field(side, p)[1]
    }

    /// Second Lie derivative `X±(X±f)` = ∇(X±₂) · X±.
    pub fn second_lie_derivative(&self, side: Side, p: &Point) -> f64 {
        let v = self.field(side, p);
        let j = self.jacobian(side, p);
        (0..3).map(|k| j[1][k] * v[k]).sum()
    }

    pub fn classify_sigma_point(&self, p: &Point, tau_tan: f64) -> Result<SigmaClassification, PwsError> {
        if p[1].abs() > tau_tan {
            return Err(PwsError::PointOffSigma(p[1]));
        }
        let lie_plus = self.lie_derivative(Side::Plus, p);
        let lie_minus = self.lie_derivative(Side::Minus, p);
        Ok(SigmaClassification::from_lie_derivatives(lie_plus, lie_minus, tau_tan))
    }

    /// Convex weight `σ = X⁻f / (X⁻f − X⁺f)` of the Filippov sliding field.
    pub fn sliding_coefficient(&self, p: &Point, tau_tan: f64) -> Result<f64, PwsError> {
        let cls = self.classify_sigma_point(p, tau_tan)?;
        if !cls.kind.is_sliding() {
            return Err(PwsError::NotSliding(cls.kind));
        }
        let denom = cls.lie_minus - cls.lie_plus;
        if denom.abs() < tau_tan {
            return Err(PwsError::DegenerateDenominator(denom));
        }
        Ok(cls.lie_minus / denom)
    }

    pub fn filippov_sliding_field(&self, p: &Point, tau_tan: f64) -> Result<Point, PwsError> {
        let sigma = self.sliding_coefficient(p, tau_tan)?;
        let (xp, xm) = (self.field(Side::Plus, p), self.field(Side::Minus, p));
        Ok(std::array::from_fn(|i| sigma * xp[i] + (1.0 - sigma) * xm[i]))
    }

    /// `(X⁻f) X⁺ − (X⁺f) X⁻`: the Filippov field multiplied by `X⁻f − X⁺f`.
    ///
    /// Regular at two-folds; its y-component vanishes identically. For the
    /// piecewise-linear normal form its (x, z) part is
    /// [`desingularized_sliding_field`].
    pub fn desingularized_field(&self, p: &Point) -> Point {
        let (xp, xm) = (self.field(Side::Plus, p), self.field(Side::Minus, p));
        let (lp, lm) = (xp[1], xm[1]);
        [lm * xp[0] - lp * xm[0], 0.0, lm * xp[2] - lp * xm[2]]
    }

    pub fn classify_fold(&self, q: &Point, side: Side, tau_tan: f64) -> Result<FoldKind, PwsError> {
        let cls = self.classify_sigma_point(q, tau_tan).map_err(|_| PwsError::NotAFold(side))?;
        let (own, other) = match side {
            Side::Plus => (cls.lie_plus, cls.lie_minus),
            Side::Minus => (cls.lie_minus, cls.lie_plus),
        };
        if own.abs() > tau_tan || other.abs() <= tau_tan {
            return Err(PwsError::NotAFold(side));
        }
        let second = self.second_lie_derivative(side, q);
        if second.abs() <= tau_tan {
            return Err(PwsError::NotAFold(side));
        }
        let visible = match side {
            Side::Plus => second > 0.0,
            Side::Minus => second < 0.0,
        };
        Ok(if visible { FoldKind::Visible } else { FoldKind::Invisible })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaKind {
    CrossingUp,
    CrossingDown,
    SlidingStable,
    SlidingUnstable,
    TangencyPlus,
    TangencyMinus,
    TwoFold,
}

impl SigmaKind {
    pub fn is_sliding(self) -> bool {
        matches!(self, SigmaKind::SlidingStable | SigmaKind::SlidingUnstable)
    }

    pub fn is_crossing(self) -> bool {
        matches!(self, SigmaKind::CrossingUp | SigmaKind::CrossingDown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaClassification {
    pub kind: SigmaKind,
    pub lie_plus: f64,
    pub lie_minus: f64,
}

impl SigmaClassification {
    /// Sign table for a point of Σ. Tangency wins inside the `tau_tan` band.
    pub fn from_lie_derivatives(lie_plus: f64, lie_minus: f64, tau_tan: f64) -> Self {
        let plus_zero = lie_plus.abs() <= tau_tan;
        let minus_zero = lie_minus.abs() <= tau_tan;
        let kind = match (plus_zero, minus_zero) {
            (true, true) => SigmaKind::TwoFold,
            (true, false) => SigmaKind::TangencyPlus,
            (false, true) => SigmaKind::TangencyMinus,
            (false, false) if lie_plus * lie_minus > 0.0 => {
                if lie_plus > 0.0 {
                    SigmaKind::CrossingUp
                } else {
                    SigmaKind::CrossingDown
                }
            }
            (false, false) => {
                if lie_minus > 0.0 {
                    SigmaKind::SlidingStable
                } else {
                    SigmaKind::SlidingUnstable
                }
            }
        };
        Self { kind, lie_plus, lie_minus }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldKind {
    Visible,
    Invisible,
}

/// Desingularized sliding field `(−c x + b z, −β x − γ z)` of the
/// piecewise-linear normal form.
///
/// On the stable sliding region this is a positive multiple of the projected
/// Filippov field; on the unstable one a negative multiple.
pub fn desingularized_sliding_field(params: &NormalFormParams, x: f64, z: f64) -> [f64; 2] {
    let NormalFormParams { b, beta, c, gamma } = *params;
    [-c * x + b * z, -beta * x - gamma * z]
}
