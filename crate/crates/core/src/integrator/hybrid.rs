//! Hybrid Filippov trajectories: smooth arcs of `X±`, crossings, and sliding
//! arcs integrated through the desingularized field.

use serde::{Deserialize, Serialize};

use super::{
    integrate_n, DenseOutput, DenseSegment, Direction, Event, EventFn, EventKind, IntegratorConfig, SolverError,
    Termination, Trajectory,
};
use crate::pws::{Point, PwsSystem, Side, SigmaKind};

/// Marks the internal "real time reached `t_max`" stop of a sliding arc.
const TIME_LIMIT: EventKind = EventKind::SectionHit(usize::MAX);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    /// Band inside which Lie derivatives count as zero on Σ.
    pub tau_tan: f64,
    /// A sliding arc stops once both Lie derivatives are below this.
    pub tau_q: f64,
    pub max_switches: usize,
    pub blowout_radius: f64,
    /// Cap on the desingularized time of a single sliding arc.
    pub max_sliding_time: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { tau_tan: 1e-9, tau_q: 1e-8, max_switches: 100_000, blowout_radius: 1e6, max_sliding_time: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Smooth(Side),
    /// `+1` on the stable sliding region, `−1` (time reversed) on the unstable one.
    Sliding(i8),
}

enum Next {
    Go(Mode),
    TwoFold,
}

fn decide_on_sigma(sys: &PwsSystem, p: &Point, tau: f64) -> (SigmaKind, Next) {
    let lp = sys.lie_derivative(Side::Plus, p);
    let lm = sys.lie_derivative(Side::Minus, p);
    let kind = crate::pws::SigmaClassification::from_lie_derivatives(lp, lm, tau).kind;
    let next = match kind {
        SigmaKind::CrossingUp => Next::Go(Mode::Smooth(Side::Plus)),
        SigmaKind::CrossingDown => Next::Go(Mode::Smooth(Side::Minus)),
        SigmaKind::SlidingStable => Next::Go(Mode::Sliding(1)),
        SigmaKind::SlidingUnstable => Next::Go(Mode::Sliding(-1)),
        SigmaKind::TwoFold => Next::TwoFold,
        SigmaKind::TangencyPlus => {
            if sys.second_lie_derivative(Side::Plus, p) > 0.0 {
                Next::Go(Mode::Smooth(Side::Plus))
            } else if lm < 0.0 {
                Next::Go(Mode::Smooth(Side::Minus))
            } else {
                Next::Go(Mode::Sliding(1))
            }
        }
        SigmaKind::TangencyMinus => {
            if sys.second_lie_derivative(Side::Minus, p) < 0.0 {
                Next::Go(Mode::Smooth(Side::Minus))
            } else if lp > 0.0 {
                Next::Go(Mode::Smooth(Side::Plus))
            } else {
                Next::Go(Mode::Sliding(1))
            }
        }
    };
    (kind, next)
}

fn norm(p: &Point) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Integrates a Filippov trajectory of `sys` from `p0` up to time `t_max`.
///
/// The run stops with `nonunique = true` and a `TwoFoldHit` event when a
/// sliding arc comes within `tau_q` of a two-fold; no continuation is chosen.
pub fn integrate_hybrid_filippov(
    sys: &PwsSystem,
    p0: Point,
    t_max: f64,
    cfg: &IntegratorConfig,
    hcfg: &HybridConfig,
) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    if !(t_max > 0.0) {
        return Err(SolverError::InvalidConfig(format!("t_max must be positive, got {t_max}")));
    }
    let tau = hcfg.tau_tan;
    let mut traj = Trajectory {
        samples: vec![(0.0, p0)],
        events: Vec::new(),
        dense: DenseOutput { segments: Vec::new(), t_end: 0.0 },
        termination: Termination::EndOfSpan,
        nonunique: false,
    };

    let mut p = p0;
    let mut mode = if p[1] > tau {
        Mode::Smooth(Side::Plus)
    } else if p[1] < -tau {
        Mode::Smooth(Side::Minus)
    } else {
        p[1] = 0.0;
        match decide_on_sigma(sys, &p, tau).1 {
            Next::Go(m) => m,
            Next::TwoFold => return Err(SolverError::StartsAtTwoFold),
        }
    };
    let mut t = 0.0;
    let mut switches = 0usize;

    loop {
        match mode {
            Mode::Smooth(side) => {
                let dir = match side {
                    Side::Plus => Direction::Decreasing,
                    Side::Minus => Direction::Increasing,
                };
                let radius = hcfg.blowout_radius;
                let events = [
                    EventFn::new(EventKind::SigmaEntry, dir, true, |_t, q: &Point| q[1]),
                    EventFn::new(EventKind::Blowout, Direction::Increasing, true, move |_t, q: &Point| norm(q) - radius),
                ];
                let arc = integrate_n(|_t, q: &Point| sys.field(side, q), p, (t, t_max), cfg, &events)?;
                append_arc(&mut traj, &arc, |s| s.0, |s| s.1);
                traj.dense.segments.extend_from_slice(&arc.dense.segments);
                traj.dense.t_end = arc.final_time();
                t = arc.final_time();
                p = arc.final_state();
                match arc.termination {
                    Termination::EndOfSpan => return Ok(traj),
                    Termination::TerminalEvent(EventKind::SigmaEntry) => {
                        p[1] = 0.0;
                        if let Some(last) = traj.samples.last_mut() {
                            last.1[1] = 0.0;
                        }
                        traj.events.push(Event { t, kind: EventKind::SigmaEntry, state: p });
                        let (_, next) = decide_on_sigma(sys, &p, tau);
                        match next {
                            Next::TwoFold => {
                                traj.events.push(Event { t, kind: EventKind::TwoFoldHit, state: p });
                                traj.termination = Termination::TerminalEvent(EventKind::TwoFoldHit);
                                traj.nonunique = true;
                                return Ok(traj);
                            }
                            Next::Go(m) => {
                                let kind = match m {
                                    Mode::Sliding(_) => Some(EventKind::SlidingEntry),
                                    Mode::Smooth(s) if s == side => None,
                                    Mode::Smooth(Side::Plus) => Some(EventKind::CrossUp),
                                    Mode::Smooth(Side::Minus) => Some(EventKind::CrossDown),
                                };
                                if let Some(kind) = kind {
                                    traj.events.push(Event { t, kind, state: p });
                                }
                                mode = m;
                            }
                        }
                    }
                    Termination::TerminalEvent(kind) => {
                        traj.events.push(Event { t, kind, state: p });
                        traj.termination = Termination::TerminalEvent(kind);
                        return Ok(traj);
                    }
                }
            }
            Mode::Sliding(sign) => {
                let s = f64::from(sign);
                let rhs = |_tau: f64, q: &[f64; 4]| -> [f64; 4] {
                    let pt = [q[0], 0.0, q[2]];
                    let d = sys.desingularized_field(&pt);
                    let m = (sys.lie_derivative(Side::Minus, &pt) - sys.lie_derivative(Side::Plus, &pt)).abs();
                    [s * d[0], 0.0, s * d[2], m]
                };
                let pt = |q: &[f64; 4]| [q[0], 0.0, q[2]];
                let (tau_q, radius) = (hcfg.tau_q, hcfg.blowout_radius);
                let events = [
                    EventFn::new(EventKind::SlidingExit, Direction::Either, true, move |_t, q: &[f64; 4]| {
                        sys.lie_derivative(Side::Plus, &pt(q))
                    }),
                    EventFn::new(EventKind::SlidingExit, Direction::Either, true, move |_t, q: &[f64; 4]| {
                        sys.lie_derivative(Side::Minus, &pt(q))
                    }),
                    EventFn::new(EventKind::TwoFoldHit, Direction::Decreasing, true, move |_t, q: &[f64; 4]| {
                        let p = pt(q);
                        sys.lie_derivative(Side::Plus, &p).abs().max(sys.lie_derivative(Side::Minus, &p).abs()) - tau_q
                    }),
                    EventFn::new(TIME_LIMIT, Direction::Increasing, true, move |_t, q: &[f64; 4]| q[3] - t_max),
                    EventFn::new(EventKind::Blowout, Direction::Increasing, true, move |_t, q: &[f64; 4]| {
                        norm(&pt(q)) - radius
                    }),
                ];
                let q0 = [p[0], 0.0, p[2], t];
                let arc = integrate_n(rhs, q0, (0.0, hcfg.max_sliding_time), cfg, &events)?;
                let start = traj.samples.len();
                append_arc(&mut traj, &arc, |s| s.1[3], |s| pt(&s.1));
                // Hermite pieces in real time, derivative = Filippov field
                let filippov = |q: &Point| -> Point {
                    let d = sys.desingularized_field(q);
                    let m = sys.lie_derivative(Side::Minus, q) - sys.lie_derivative(Side::Plus, q);
                    if m.abs() > 0.0 {
                        [d[0] / m, 0.0, d[2] / m]
                    } else {
                        [0.0; 3]
                    }
                };
                let from = start.saturating_sub(1);
                for w in traj.samples[from..].windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let seg = DenseSegment::hermite(a.0, b.0, &a.1, &b.1, &filippov(&a.1), &filippov(&b.1));
                    traj.dense.segments.push(seg);
                }
                let last = arc.final_state();
                t = last[3];
                p = pt(&last);
                traj.dense.t_end = t;
                match arc.termination {
                    Termination::TerminalEvent(EventKind::SlidingExit) => {
                        traj.events.push(Event { t, kind: EventKind::SlidingExit, state: p });
                        let plus_fold = sys.lie_derivative(Side::Plus, &p).abs() <= sys.lie_derivative(Side::Minus, &p).abs();
                        let side = match (sign > 0, plus_fold) {
                            (true, true) | (false, false) => Side::Plus,
                            (true, false) | (false, true) => Side::Minus,
                        };
                        mode = Mode::Smooth(side);
                    }
                    Termination::TerminalEvent(EventKind::TwoFoldHit) => {
                        traj.events.push(Event { t, kind: EventKind::TwoFoldHit, state: p });
                        traj.termination = Termination::TerminalEvent(EventKind::TwoFoldHit);
                        traj.nonunique = true;
                        return Ok(traj);
                    }
                    Termination::TerminalEvent(EventKind::Blowout) => {
                        traj.events.push(Event { t, kind: EventKind::Blowout, state: p });
                        traj.termination = Termination::TerminalEvent(EventKind::Blowout);
                        return Ok(traj);
                    }
                    _ => return Ok(traj),
                }
            }
        }
        switches += 1;
        if switches > hcfg.max_switches {
            return Err(SolverError::ChatteringLimit(hcfg.max_switches));
        }
    }
}

/// Appends the samples of an arc, skipping its first (already present) one.
fn append_arc<const N: usize>(
    traj: &mut Trajectory,
    arc: &Trajectory<N>,
    time: impl Fn(&(f64, [f64; N])) -> f64,
    state: impl Fn(&(f64, [f64; N])) -> Point,
) {
    let t_last = traj.final_time();
    for s in arc.samples.iter().skip(1) {
        let ts = time(s);
        if ts > t_last && ts > traj.final_time() {
            traj.samples.push((ts, state(s)));
        }
    }
}
