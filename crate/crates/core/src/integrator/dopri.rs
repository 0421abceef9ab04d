//! Dormand–Prince 5(4) with Hairer's continuous extension and event location.

use super::{DenseOutput, DenseSegment, Direction, Event, EventKind, IntegratorConfig, SolverError, Termination, Trajectory};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

type Residual<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a>;
type Filter<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> bool + Send + Sync + 'a>;

/// A scalar event function `g(t, y)` together with how its zeros are used.
pub struct EventFn<'a, const N: usize> {
    pub residual: Residual<'a, N>,
    pub direction: Direction,
    pub terminal: bool,
    pub kind: EventKind,
    /// Hits failing this filter are ignored entirely.
    pub accept: Option<Filter<'a, N>>,
}

impl<'a, const N: usize> EventFn<'a, N> {
    pub fn new(
        kind: EventKind,
        direction: Direction,
        terminal: bool,
        residual: impl Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a,
    ) -> Self {
        Self { residual: Box::new(residual), direction, terminal, kind, accept: None }
    }

    pub fn with_filter(mut self, accept: impl Fn(&[f64; N]) -> bool + Send + Sync + 'a) -> Self {
        self.accept = Some(Box::new(accept));
        self
    }

    fn triggers(&self, g0: f64, g1: f64) -> bool {
        // a residual that is exactly zero at the start of a step is not an event
        if g0 == 0.0 {
            return false;
        }
        let up = g0 < 0.0 && g1 >= 0.0;
        let down = g0 > 0.0 && g1 <= 0.0;
        match self.direction {
            Direction::Increasing => up,
            Direction::Decreasing => down,
            Direction::Either => up || down,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Illinois variant of regula falsi for `g(θ)` on `[0, 1]` with a sign change.
fn locate_root(g: impl Fn(f64) -> f64, g0: f64, g1: f64, theta_tol: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (0.0, 1.0, g0, g1);
    if fb == 0.0 {
        return 1.0;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a) <= theta_tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = g(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    // the upper end keeps the crossing strictly inside the step
    b
}

/// Integrates `y' = f(t, y)` on `t_span` with adaptive Dormand–Prince steps.
pub fn integrate_n<const N: usize, F>(
    mut f: F,
    y0: [f64; N],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    events: &[EventFn<'_, N>],
) -> Result<Trajectory<N>, SolverError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    let (t0, t_end) = t_span;
    if !(t0 < t_end) || !t0.is_finite() || !t_end.is_finite() {
        return Err(SolverError::InvalidConfig(format!("t_span must satisfy t0 < t1, got ({t0}, {t_end})")));
    }
    if !finite(&y0) {
        return Err(SolverError::NonFiniteState { t: t0 });
    }

    let mut traj = Trajectory {
        samples: vec![(t0, y0)],
        events: Vec::new(),
        dense: DenseOutput::default(),
        termination: Termination::EndOfSpan,
        nonunique: false,
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !finite(&k1) {
        return Err(SolverError::NonFiniteState { t });
    }
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.residual)(t, &y)).collect();
    let mut h = cfg.h_init.min(cfg.h_max).min(t_end - t0);
    let mut attempts = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(SolverError::MaxStepsExceeded { t, steps: cfg.max_steps });
        }
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);

        if !finite(&y1) || !finite(&k7) {
            h *= FAC_MIN;
            last_rejected = true;
            if h < cfg.h_min {
                return Err(SolverError::NonFiniteState { t });
            }
            continue;
        }

        let mut err = 0.0_f64;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            err = err.max(e.abs() / sc);
        }

        if err > 1.0 {
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            last_rejected = true;
            if h < cfg.h_min {
                return Err(SolverError::StepSizeUnderflow { t, h });
            }
            continue;
        }

        // accepted step: build the continuous extension
        let mut seg = DenseSegment { t0: t, h, r: [[0.0; N]; 5] };
        for i in 0..N {
            let r2 = y1[i] - y[i];
            let r3 = h * k1[i] - r2;
            seg.r[0][i] = y[i];
            seg.r[1][i] = r2;
            seg.r[2][i] = r3;
            seg.r[3][i] = r2 - h * k7[i] - r3;
            seg.r[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let t_new = if last { t_end } else { t + h };

        // events inside (t, t_new]
        let mut found: Vec<(f64, usize, [f64; N])> = Vec::new();
        let mut g_new = Vec::with_capacity(events.len());
        for (idx, ev) in events.iter().enumerate() {
            let g1 = (ev.residual)(t_new, &y1);
            g_new.push(g1);
            if !ev.triggers(g_prev[idx], g1) {
                continue;
            }
            let g_at = |theta: f64| (ev.residual)(t + theta * h, &seg.eval(theta));
            let theta_tol = (cfg.event_tol / h).min(1e-3);
            let theta = locate_root(g_at, g_prev[idx], g1, theta_tol);
            let state = if theta >= 1.0 { y1 } else { seg.eval(theta) };
            if ev.accept.as_ref().is_none_or(|acc| acc(&state)) {
                found.push((t + theta * h, idx, state));
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut stop: Option<(f64, [f64; N], EventKind)> = None;
        for (te, idx, state) in found {
            traj.events.push(Event { t: te, kind: events[idx].kind, state });
            if events[idx].terminal {
                stop = Some((te, state, events[idx].kind));
                break;
            }
        }

        traj.dense.segments.push(seg);
        if let Some((te, state, kind)) = stop {
            if te > t {
                traj.samples.push((te, state));
            }
            traj.dense.t_end = te;
            traj.termination = Termination::TerminalEvent(kind);
            return Ok(traj);
        }

        t = t_new;
        y = y1;
        k1 = k7;
        g_prev = g_new;
        traj.samples.push((t, y));
        traj.dense.t_end = t;

        let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = (h * fac).min(cfg.h_max).max(cfg.h_min);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_is_accurate() {
        let cfg = IntegratorConfig::default();
        let tr = integrate_n(|_t, y: &[f64; 1]| [-y[0]], [1.0], (0.0, 5.0), &cfg, &[]).unwrap();
        assert_relative_eq!(tr.final_state()[0], (-5.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let cfg = IntegratorConfig { rel_tol: 1e-9, abs_tol: 1e-12, h_max: 0.5, ..Default::default() };
        let tr = integrate_n(|_t, y: &[f64; 2]| [y[1], -y[0]], [0.0, 1.0], (0.0, 10.0), &cfg, &[]).unwrap();
        for k in 0..1000 {
            let t = 10.0 * k as f64 / 1000.0;
            let s = tr.state_at(t).unwrap();
            assert!((s[0] - t.sin()).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn locates_sign_changes() {
        let cfg = IntegratorConfig::default();
        let ev = EventFn::new(EventKind::SectionHit(0), Direction::Decreasing, false, |_t, y: &[f64; 2]| y[0]);
        let tr = integrate_n(|_t, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], (0.0, 10.0), &cfg, &[ev]).unwrap();
        let times: Vec<f64> = tr.events.iter().map(|e| e.t).collect();
        assert_eq!(times.len(), 2);
        assert_relative_eq!(times[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_relative_eq!(times[1], 2.5 * std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn zero_start_residual_is_skipped() {
        let cfg = IntegratorConfig::default();
        let ev = EventFn::new(EventKind::SectionHit(0), Direction::Either, true, |_t, y: &[f64; 1]| y[0]);
        let tr = integrate_n(|_t, _y: &[f64; 1]| [1.0], [0.0], (0.0, 1.0), &cfg, &[ev]).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.termination, Termination::EndOfSpan);
    }

    #[test]
    fn rejects_invalid_span() {
        let cfg = IntegratorConfig::default();
        assert!(integrate_n(|_t, _y: &[f64; 1]| [1.0], [0.0], (1.0, 0.0), &cfg, &[]).is_err());
    }

    #[test]
    fn reports_max_steps() {
        let cfg = IntegratorConfig { max_steps: 10, h_max: 1e-3, h_init: 1e-3, ..Default::default() };
        let err = integrate_n(|_t, _y: &[f64; 1]| [1.0], [0.0], (0.0, 1.0), &cfg, &[]).unwrap_err();
        assert!(matches!(err, SolverError::MaxStepsExceeded { .. }));
    }

    #[test]
    fn reports_blowup() {
        let cfg = IntegratorConfig { h_min: 1e-10, ..Default::default() };
        let err = integrate_n(|_t, y: &[f64; 1]| [y[0] * y[0]], [1.0], (0.0, 2.0), &cfg, &[]).unwrap_err();
        assert!(matches!(err, SolverError::StepSizeUnderflow { .. } | SolverError::NonFiniteState { .. }));
    }
}
