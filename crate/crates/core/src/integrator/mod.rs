//! Adaptive integration with dense output, sections and hybrid Filippov runs.

mod dopri;
mod hybrid;

pub use dopri::{integrate_n, EventFn};
pub use hybrid::{integrate_hybrid_filippov, HybridConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_form::NormalFormParams;
use crate::pws::Point;
use crate::regularization::{regularized_field, RegularizationError, RegularizationFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("step size {h:e} fell below h_min at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("more than {steps} steps attempted (t = {t})")]
    MaxStepsExceeded { t: f64, steps: usize },
    #[error("state became non-finite near t = {t}")]
    NonFiniteState { t: f64 },
    #[error("more than {0} regime changes in a hybrid run")]
    ChatteringLimit(usize),
    #[error("the initial point is the two-fold")]
    StartsAtTwoFold,
    #[error(transparent)]
    Regularization(#[from] RegularizationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Root localization tolerance in time.
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, h_init: 1e-3, h_min: 1e-14, h_max: 0.1, max_steps: 5_000_000, event_tol: 1e-12 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be positive");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad("need 0 < h_min <= h_init <= h_max");
        }
        if !(self.event_tol > 0.0) {
            return bad("event_tol must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }

    /// The same configuration with both tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    SectionHit(usize),
    SigmaEntry,
    SlidingEntry,
    SlidingExit,
    CrossUp,
    CrossDown,
    TwoFoldHit,
    Blowout,
}

impl EventKind {
    /// Snake-case name used in output files.
    pub fn label(&self) -> String {
        match self {
            EventKind::SectionHit(i) => format!("section_{i}"),
            EventKind::SigmaEntry => "sigma_entry".into(),
            EventKind::SlidingEntry => "sliding_entry".into(),
            EventKind::SlidingExit => "sliding_exit".into(),
            EventKind::CrossUp => "cross_up".into(),
            EventKind::CrossDown => "cross_down".into(),
            EventKind::TwoFoldHit => "two_fold_hit".into(),
            EventKind::Blowout => "blowout".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<const N: usize = 3> {
    pub t: f64,
    pub kind: EventKind,
    pub state: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    EndOfSpan,
    TerminalEvent(EventKind),
}

/// One accepted step of the continuous extension,
/// `y(θ) = r0 + θ(r1 + (1−θ)(r2 + θ(r3 + (1−θ) r4)))` with `t = t0 + θ h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub r: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    /// Cubic Hermite segment between two states with known derivatives.
    pub fn hermite(t0: f64, t1: f64, y0: &[f64; N], y1: &[f64; N], f0: &[f64; N], f1: &[f64; N]) -> Self {
        let h = t1 - t0;
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let r1 = y1[i] - y0[i];
            let r2 = h * f0[i] - r1;
            r[0][i] = y0[i];
            r[1][i] = r1;
            r[2][i] = r2;
            r[3][i] = r1 - h * f1[i] - r2;
        }
        Self { t0, h, r }
    }

    pub fn eval(&self, theta: f64) -> [f64; N] {
        let s = 1.0 - theta;
        let r = &self.r;
        std::array::from_fn(|i| r[0][i] + theta * (r[1][i] + s * (r[2][i] + theta * (r[3][i] + s * r[4][i]))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOutput<const N: usize> {
    pub segments: Vec<DenseSegment<N>>,
    pub t_end: f64,
}

impl<const N: usize> Default for DenseOutput<N> {
    fn default() -> Self {
        Self { segments: Vec::new(), t_end: f64::NEG_INFINITY }
    }
}

impl<const N: usize> DenseOutput<N> {
    pub fn state_at(&self, t: f64) -> Option<[f64; N]> {
        let first = self.segments.first()?;
        if t < first.t0 || t > self.t_end {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t0 <= t).saturating_sub(1);
        let seg = &self.segments[idx];
        Some(seg.eval(((t - seg.t0) / seg.h).clamp(0.0, 1.0)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize = 3> {
    pub samples: Vec<(f64, [f64; N])>,
    pub events: Vec<Event<N>>,
    pub dense: DenseOutput<N>,
    pub termination: Termination,
    /// Set when a hybrid run stopped at a point of forward nonuniqueness.
    pub nonunique: bool,
}

impl<const N: usize> Trajectory<N> {
    pub fn final_state(&self) -> [f64; N] {
        self.samples.last().expect("trajectories are never empty").1
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().expect("trajectories are never empty").0
    }

    pub fn state_at(&self, t: f64) -> Option<[f64; N]> {
        if self.samples.len() == 1 && t == self.samples[0].0 {
            return Some(self.samples[0].1);
        }
        self.dense.state_at(t)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event<N>> {
        self.events.iter().find(|e| e.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "value")]
pub enum SectionKind {
    PlaneX(f64),
    PlaneY(f64),
    PlaneZ(f64),
}

impl SectionKind {
    fn axis(&self) -> (usize, f64) {
        match *self {
            SectionKind::PlaneX(c) => (0, c),
            SectionKind::PlaneY(c) => (1, c),
            SectionKind::PlaneZ(c) => (2, c),
        }
    }

    pub fn residual(&self, p: &Point) -> f64 {
        let (i, c) = self.axis();
        p[i] - c
    }

    /// The two in-plane coordinates, in increasing axis order.
    pub fn in_plane(&self, p: &Point) -> (f64, f64) {
        match self.axis().0 {
            0 => (p[1], p[2]),
            1 => (p[0], p[2]),
            _ => (p[0], p[1]),
        }
    }
}

/// Closed rectangle `[u.0, u.1] × [v.0, v.1]` in the in-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    #[serde(alias = "x")]
    pub u: (f64, f64),
    #[serde(alias = "z")]
    pub v: (f64, f64),
}

impl Rect {
    pub fn new(u: (f64, f64), v: (f64, f64)) -> Option<Self> {
        (u.0 < u.1 && v.0 < v.1).then_some(Self { u, v })
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        self.u.0 <= u && u <= self.u.1 && self.v.0 <= v && v <= self.v.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub kind: SectionKind,
    pub direction: Direction,
    pub bounds: Option<Rect>,
    pub terminal: bool,
}

impl Section {
    pub fn new(kind: SectionKind, direction: Direction) -> Self {
        Self { kind, direction, bounds: None, terminal: false }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn bounded(mut self, bounds: Rect) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn to_event(self, id: usize) -> EventFn<'static, 3> {
        let kind = self.kind;
        let ev = EventFn::new(EventKind::SectionHit(id), self.direction, self.terminal, move |_t, p: &Point| {
            kind.residual(p)
        });
        match self.bounds {
            Some(rect) => ev.with_filter(move |p: &Point| {
                let (u, v) = kind.in_plane(p);
                rect.contains(u, v)
            }),
            None => ev,
        }
    }
}

/// Integrates an autonomous field in R³, reporting section crossings as
/// `SectionHit(index)` events.
pub fn integrate<F>(
    field: F,
    p0: Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    sections: &[Section],
) -> Result<Trajectory, SolverError>
where
    F: Fn(&Point) -> Point,
{
    let events: Vec<EventFn<'static, 3>> = sections.iter().enumerate().map(|(i, s)| s.to_event(i)).collect();
    integrate_n(|_t, p: &Point| field(p), p0, t_span, cfg, &events)
}

/// [`integrate`] over `X_ε`, with `h_min` lowered to at most `ε · 10⁻⁴`.
pub fn integrate_regularized(
    params: &NormalFormParams,
    phi: &RegularizationFn,
    eps: f64,
    p0: Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    sections: &[Section],
) -> Result<Trajectory, SolverError> {
    regularized_field(params, phi, eps, &p0)?;
    let floor = eps * 1e-4;
    let cfg = IntegratorConfig { h_min: cfg.h_min.min(floor), ..*cfg };
    let cfg = IntegratorConfig { h_init: cfg.h_init.max(cfg.h_min), ..cfg };
    let (params, phi) = (*params, *phi);
    integrate(
        move |p: &Point| regularized_field(&params, &phi, eps, p).expect("epsilon checked above"),
        p0,
        t_span,
        &cfg,
        sections,
    )
}
