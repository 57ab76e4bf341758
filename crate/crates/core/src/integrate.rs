//! Adaptive Dormand-Prince 5(4) integration of the piecewise-smooth flow.
//!
//! The switching line `x = 0` always splits integration: each accepted step
//! is taken with a frozen one-sided vector field, crossings are localized on
//! the dense output and the state is snapped onto the line before the side
//! flips. No committed step straddles `x = 0`.
//!
//! Backward time is integrated by negating the vector field, so the step
//! controller and reported event times behave identically in both
//! directions; `Trajectory` times are elapsed integration time.

use crate::error::{Error, Result};
use crate::math;
use crate::model::{vector_field_sided, Chart, Params, PhasePoint};
use alloc::vec::Vec;

/// Tangency marker threshold on `|x|` for steps that approach the switching
/// line without crossing it.
pub const GRAZE_TOL: f64 = 1e-9;

/// What to watch for while flowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// `x = 0`.
    SwitchingLine,
    /// `y = 0` with `x > 0`.
    PositiveXAxis,
    /// `y = 0` with `x < 0`.
    NegativeXAxis,
    /// Hyperplane through `point` with the given `normal`.
    CustomSection { point: (f64, f64), normal: (f64, f64) },
    /// Synthesized marker: dense output came within [`GRAZE_TOL`] of `x = 0`
    /// without a sign change. Never matched against `stop` specs.
    Graze,
}

/// Crossing direction filter, in terms of the event function's sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDirection {
    /// Event function passes from positive to negative.
    UpDown,
    /// Negative to positive.
    DownUp,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    pub direction: EventDirection,
    pub terminal: bool,
}

impl EventSpec {
    pub fn terminal_positive_x_axis() -> Self {
        EventSpec {
            kind: EventKind::PositiveXAxis,
            direction: EventDirection::Any,
            terminal: true,
        }
    }

    pub fn terminal_negative_x_axis() -> Self {
        EventSpec {
            kind: EventKind::NegativeXAxis,
            direction: EventDirection::Any,
            terminal: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// Step-size, tolerance and termination control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorCtrl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_time_tol: f64,
    pub max_step: f64,
    pub t_max: f64,
    pub escape_radius: f64,
}

impl IntegratorCtrl {
    /// Defaults sized for the oscillator at the given parameters.
    pub fn for_params(params: &Params) -> Self {
        let scale = params.a() + 1.0 + math::sqrt(f64::max(1.0, -params.b()));
        IntegratorCtrl {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            event_time_tol: 1e-12,
            max_step: 0.1,
            t_max: 400.0,
            escape_radius: 1e3 * scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.event_time_tol > 0.0
            && self.max_step > 0.0
            && self.t_max > 0.0
            && self.escape_radius > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("integrator controls must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    HitTerminal,
    TMaxReached,
    Escaped,
    EquilibriumTrapped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub p: PhasePoint,
    pub kind: EventKind,
}

/// Time-stamped integration output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(elapsed time, state)` at the start and at every accepted step end.
    pub samples: Vec<(f64, PhasePoint)>,
    pub events: Vec<EventRecord>,
    pub outcome: Outcome,
    pub direction: TimeDirection,
}

impl Trajectory {
    /// Terminal event, when the outcome is [`Outcome::HitTerminal`].
    pub fn terminal_event(&self) -> Option<&EventRecord> {
        if self.outcome == Outcome::HitTerminal {
            self.events.last()
        } else {
            None
        }
    }

    pub fn end(&self) -> (f64, PhasePoint) {
        *self.samples.last().expect("trajectory has at least the start sample")
    }
}

// Dormand-Prince 5(4) tableau (autonomous field, stage times unused).
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const BHAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type V2 = (f64, f64);

#[inline(always)]
fn axpy(p: V2, h: f64, k: V2) -> V2 {
    (p.0 + h * k.0, p.1 + h * k.1)
}

/// Cubic Hermite dense output for one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseSegment {
    #[allow(dead_code)]
    pub t0: f64,
    pub h: f64,
    p0: V2,
    p1: V2,
    f0: V2,
    f1: V2,
}

impl DenseSegment {
    pub(crate) fn new(t0: f64, h: f64, p0: V2, f0: V2, p1: V2, f1: V2) -> Self {
        DenseSegment { t0, h, p0, p1, f0, f1 }
    }

    /// State at fraction `theta` of the step.
    pub(crate) fn eval(&self, theta: f64) -> V2 {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (
            h00 * self.p0.0 + h10 * self.h * self.f0.0 + h01 * self.p1.0 + h11 * self.h * self.f1.0,
            h00 * self.p0.1 + h10 * self.h * self.f0.1 + h01 * self.p1.1 + h11 * self.h * self.f1.1,
        )
    }

    /// Coefficients of `w . p(theta) + off` as a cubic in `theta`.
    fn functional_cubic(&self, w: V2, off: f64) -> [f64; 4] {
        let u0 = w.0 * self.p0.0 + w.1 * self.p0.1 + off;
        let u1 = w.0 * self.p1.0 + w.1 * self.p1.1 + off;
        let d0 = self.h * (w.0 * self.f0.0 + w.1 * self.f0.1);
        let d1 = self.h * (w.0 * self.f1.0 + w.1 * self.f1.1);
        // Hermite basis regrouped by powers of theta
        let c0 = u0;
        let c1 = d0;
        let c2 = -3.0 * u0 + 3.0 * u1 - 2.0 * d0 - d1;
        let c3 = 2.0 * u0 - 2.0 * u1 + d0 + d1;
        [c0, c1, c2, c3]
    }
}

#[inline(always)]
fn cubic_eval(c: &[f64; 4], t: f64) -> f64 {
    c[0] + t * (c[1] + t * (c[2] + t * c[3]))
}

/// Critical points of the cubic strictly inside `(lo, hi)`, ascending.
fn cubic_critical_points(c: &[f64; 4], lo: f64, hi: f64) -> ([f64; 2], usize) {
    let mut out = [0.0; 2];
    let mut n = 0;
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            let sq = math::sqrt(disc);
            let q = -0.5 * (qb + if qb >= 0.0 { sq } else { -sq });
            for r in [q / qa, if q != 0.0 { qc / q } else { f64::INFINITY }] {
                if r > lo && r < hi {
                    out[n] = r;
                    n += 1;
                }
            }
            if n == 2 && out[0] > out[1] {
                out.swap(0, 1);
            }
        }
    } else if qb != 0.0 {
        let r = -qc / qb;
        if r > lo && r < hi {
            out[n] = r;
            n += 1;
        }
    }
    (out, n)
}

/// Earliest sign change of the cubic in `(theta_min, 1]`, splitting at the
/// critical points and bisecting each monotone piece. An even contact at an
/// interior critical point is not a crossing and is skipped. `theta_tol` is
/// the localization tolerance in `theta`.
fn cubic_first_root(c: &[f64; 4], theta_min: f64, theta_tol: f64) -> Option<f64> {
    let (crit, ncrit) = cubic_critical_points(c, theta_min, 1.0);
    let mut knots = [theta_min, 1.0, 1.0, 1.0];
    knots[1..1 + ncrit].copy_from_slice(&crit[..ncrit]);
    knots[1 + ncrit] = 1.0;
    let n = 2 + ncrit;

    let mut prev = cubic_eval(c, theta_min);
    if prev == 0.0 {
        // departure point sits on the section; take the leaving sign
        prev = cubic_eval(c, theta_min + 1e-3 * (knots[1] - theta_min));
        if prev == 0.0 {
            return None; // flat on the section: nothing to report
        }
    }
    for w in 0..n - 1 {
        let (mut lo, hi0) = (knots[w], knots[w + 1]);
        let fhi = cubic_eval(c, hi0);
        if fhi == 0.0 {
            if hi0 >= 1.0 {
                return Some(hi0); // lands exactly on the section at step end
            }
            continue; // tangency at a critical point: even contact
        }
        if (fhi > 0.0) == (prev > 0.0) {
            prev = fhi;
            continue;
        }
        let mut flo = prev;
        let mut hi = hi0;
        while hi - lo > theta_tol {
            let mid = 0.5 * (lo + hi);
            let fm = cubic_eval(c, mid);
            if fm == 0.0 {
                return Some(mid);
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return Some(0.5 * (lo + hi));
    }
    None
}

/// Event function as `(weight, offset, snap)` so that the value is
/// `w . p + off`; `snap` tells which coordinate to pin to an exact value at
/// the located event.
fn event_functional(kind: &EventKind) -> (V2, f64, Snap) {
    match kind {
        EventKind::SwitchingLine | EventKind::Graze => ((1.0, 0.0), 0.0, Snap::X(0.0)),
        EventKind::PositiveXAxis | EventKind::NegativeXAxis => ((0.0, 1.0), 0.0, Snap::Y(0.0)),
        EventKind::CustomSection { point, normal } => {
            (*normal, -(normal.0 * point.0 + normal.1 * point.1), Snap::None)
        }
    }
}

#[derive(Clone, Copy)]
enum Snap {
    X(f64),
    Y(f64),
    None,
}

fn constraint_ok(kind: &EventKind, p: V2) -> bool {
    match kind {
        EventKind::PositiveXAxis => p.0 > 0.0,
        EventKind::NegativeXAxis => p.0 < 0.0,
        _ => true,
    }
}

fn direction_ok(dir: EventDirection, slope: f64) -> bool {
    match dir {
        EventDirection::Any => true,
        EventDirection::UpDown => slope < 0.0,
        EventDirection::DownUp => slope > 0.0,
    }
}

/// Searches one dense segment for the earliest match of `spec`.
/// Returns `(theta, snapped point)`.
fn first_event_on_segment(
    seg: &DenseSegment,
    spec: &EventSpec,
    theta_tol: f64,
) -> Option<(f64, V2)> {
    let (w, off, snap) = event_functional(&spec.kind);
    let cubic = seg.functional_cubic(w, off);
    let mut theta_min = 1e-9;
    loop {
        let theta = cubic_first_root(&cubic, theta_min, theta_tol)?;
        let p = seg.eval(theta);
        // slope of the event function at the root
        let slope = cubic_eval(&[cubic[1], 2.0 * cubic[2], 3.0 * cubic[3], 0.0], theta);
        if direction_ok(spec.direction, slope) && constraint_ok(&spec.kind, p) {
            let snapped = match snap {
                Snap::X(v) => (v, p.1),
                Snap::Y(v) => (p.0, v),
                Snap::None => p,
            };
            return Some((theta, snapped));
        }
        // skip past this root and keep looking in the remainder of the step
        theta_min = theta + theta_tol.max(1e-12);
        if theta_min >= 1.0 {
            return None;
        }
    }
}

/// Localizes an event between two bracketing states of one flow segment.
///
/// The dense model is the cubic Hermite through the states and the one-sided
/// field there; the returned point has its section coordinate snapped
/// exactly onto the section.
pub fn locate_event(
    t_lo: f64,
    p_lo: &PhasePoint,
    t_hi: f64,
    p_hi: &PhasePoint,
    event: &EventSpec,
    params: &Params,
    ctrl: &IntegratorCtrl,
) -> Result<(f64, PhasePoint)> {
    if !(t_hi > t_lo) || p_lo.chart != p_hi.chart {
        return Err(Error::Domain("locate_event needs t_lo < t_hi in one chart"));
    }
    let side = if p_lo.x != 0.0 { math::sgn(p_lo.x) } else { math::sgn(p_hi.x) };
    let f_lo = vector_field_sided(p_lo.x, p_lo.y, p_lo.chart, side, params);
    let f_hi = vector_field_sided(p_hi.x, p_hi.y, p_hi.chart, side, params);
    let h = t_hi - t_lo;
    let seg = DenseSegment::new(t_lo, h, (p_lo.x, p_lo.y), f_lo, (p_hi.x, p_hi.y), f_hi);
    let theta_tol = (ctrl.event_time_tol / h).clamp(1e-15, 0.25);
    match first_event_on_segment(&seg, event, theta_tol) {
        Some((theta, p)) => Ok((
            t_lo + theta * h,
            PhasePoint { x: p.0, y: p.1, chart: p_lo.chart },
        )),
        None => Err(Error::Bracket("no sign change of the event function on the segment")),
    }
}

struct SidedField<'a> {
    params: &'a Params,
    chart: Chart,
    sigma: f64, // +1 forward, -1 backward
}

impl SidedField<'_> {
    #[inline(always)]
    fn eval(&self, p: V2, side: f64) -> V2 {
        let (dx, dy) = vector_field_sided(p.0, p.1, self.chart, side, self.params);
        (self.sigma * dx, self.sigma * dy)
    }
}

/// One trial DOPRI5 step; returns `(p_new, f_new, error_norm)`.
fn dopri5_step(
    field: &SidedField<'_>,
    p: V2,
    f0: V2,
    side: f64,
    h: f64,
    ctrl: &IntegratorCtrl,
) -> (V2, V2, f64) {
    let mut k = [(0.0, 0.0); 7];
    k[0] = f0;
    for s in 1..6 {
        let mut q = p;
        for (j, kj) in k.iter().enumerate().take(s) {
            q = axpy(q, h * A[s - 1][j], *kj);
        }
        k[s] = field.eval(q, side);
    }
    let mut p1 = p;
    for (j, kj) in k.iter().enumerate().take(6) {
        p1 = axpy(p1, h * A[5][j], *kj);
    }
    k[6] = field.eval(p1, side);
    let mut err = (0.0, 0.0);
    for j in 0..7 {
        let d = B[j] - BHAT[j];
        err = axpy(err, h * d, k[j]);
    }
    let sc0 = ctrl.abs_tol + ctrl.rel_tol * math::abs(p.0).max(math::abs(p1.0));
    let sc1 = ctrl.abs_tol + ctrl.rel_tol * math::abs(p.1).max(math::abs(p1.1));
    let e0 = err.0 / sc0;
    let e1 = err.1 / sc1;
    let norm = math::sqrt(0.5 * (e0 * e0 + e1 * e1));
    (p1, k[6], norm)
}

/// Side the orbit departs into from a point on the switching line.
///
/// `x' = y` in the Lienard chart and `y - F(0) = y` in the SD chart, so the
/// departure side is the sign of `sigma * y`; from the origin itself the
/// acceleration pushes into `x > 0` in both time directions (`a > 1`).
#[inline]
fn departure_side(sigma_y: f64) -> f64 {
    if sigma_y != 0.0 {
        math::sgn(sigma_y)
    } else {
        1.0
    }
}

fn initial_side(p: V2, sigma: f64) -> f64 {
    let s = math::sgn(p.0);
    if s != 0.0 {
        s
    } else {
        departure_side(sigma * p.1)
    }
}

/// Integrates the flow from `start` until a terminal event, escape, the time
/// horizon or an equilibrium trap.
///
/// Switching-line crossings are always localized and recorded; the one-sided
/// field is frozen between them.
pub fn flow(
    start: &PhasePoint,
    params: &Params,
    stop: &[EventSpec],
    ctrl: &IntegratorCtrl,
    direction: TimeDirection,
) -> Result<Trajectory> {
    if !start.is_finite() {
        return Err(Error::NonFinite("flow start"));
    }
    ctrl.validate()?;
    let sigma = match direction {
        TimeDirection::Forward => 1.0,
        TimeDirection::Backward => -1.0,
    };
    let field = SidedField { params, chart: start.chart, sigma };

    let mut t = 0.0;
    let mut p = (start.x, start.y);
    let mut side = initial_side(p, sigma);
    let mut f0 = field.eval(p, side);

    let mut samples = Vec::with_capacity(256);
    let mut events = Vec::new();
    samples.push((t, PhasePoint { x: p.0, y: p.1, chart: start.chart }));

    let speed0 = math::hypot(f0.0, f0.1);
    if speed0 < 1e-13 {
        return Ok(Trajectory {
            samples,
            events,
            outcome: Outcome::EquilibriumTrapped,
            direction,
        });
    }

    let mut h = (ctrl.max_step).min(1e-2 * (1.0 + math::hypot(p.0, p.1)) / speed0).min(ctrl.t_max);
    let mut slow_steps = 0u32;
    let theta_floor = 1e-15;

    loop {
        if t >= ctrl.t_max {
            return Ok(Trajectory { samples, events, outcome: Outcome::TMaxReached, direction });
        }
        h = h.min(ctrl.max_step).min(ctrl.t_max - t);
        if h < 1e-14 * (1.0 + math::abs(t)) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let (p1, f1, err) = dopri5_step(&field, p, f0, side, h, ctrl);
        if !(p1.0.is_finite() && p1.1.is_finite()) {
            // blow-up inside the step: treat as escape if already huge
            if math::hypot(p.0, p.1) > 0.5 * ctrl.escape_radius {
                return Ok(Trajectory { samples, events, outcome: Outcome::Escaped, direction });
            }
            return Err(Error::NonFinite("state during step"));
        }
        if err > 1.0 {
            let fac = (0.9 * math::powf(err, -0.2)).max(0.2);
            h *= fac;
            continue;
        }

        let seg = DenseSegment::new(t, h, p, f0, p1, f1);
        let theta_tol = (ctrl.event_time_tol / h).min(0.25).max(theta_floor);

        // earliest event among: switching line, then the stop list
        let mut best: Option<(f64, V2, EventKind, bool)> = None; // theta, point, kind, terminal

        // switching: the frozen side makes the event function side * x with
        // a crossing whenever it reaches zero from above
        let switch_spec = EventSpec {
            kind: EventKind::SwitchingLine,
            direction: EventDirection::Any,
            terminal: false,
        };
        if let Some((theta, q)) = first_event_on_segment(&seg, &switch_spec, theta_tol) {
            best = Some((theta, q, EventKind::SwitchingLine, false));
        }

        for spec in stop {
            if matches!(spec.kind, EventKind::Graze) {
                continue;
            }
            if let Some((theta, q)) = first_event_on_segment(&seg, spec, theta_tol) {
                let better = match &best {
                    Some((bt, ..)) => theta < *bt,
                    None => true,
                };
                if better {
                    best = Some((theta, q, spec.kind, spec.terminal));
                }
            }
        }

        match best {
            Some((theta, q, EventKind::SwitchingLine, _)) => {
                let te = t + theta * h;
                let pe = PhasePoint { x: 0.0, y: q.1, chart: start.chart };
                events.push(EventRecord { t: te, p: pe, kind: EventKind::SwitchingLine });
                samples.push((te, pe));
                // terminal switching-line spec?
                let wants_stop = stop.iter().any(|s| {
                    s.terminal
                        && s.kind == EventKind::SwitchingLine
                        && direction_ok(s.direction, {
                            // slope of x along the segment at the crossing
                            let c = seg.functional_cubic((1.0, 0.0), 0.0);
                            cubic_eval(&[c[1], 2.0 * c[2], 3.0 * c[3], 0.0], theta)
                        })
                });
                if wants_stop {
                    return Ok(Trajectory {
                        samples,
                        events,
                        outcome: Outcome::HitTerminal,
                        direction,
                    });
                }
                t = te;
                p = (0.0, q.1);
                side = departure_side(sigma * q.1);
                f0 = field.eval(p, side);
                continue;
            }
            Some((theta, q, kind, terminal)) => {
                let te = t + theta * h;
                let pe = PhasePoint { x: q.0, y: q.1, chart: start.chart };
                events.push(EventRecord { t: te, p: pe, kind });
                samples.push((te, pe));
                if terminal {
                    return Ok(Trajectory {
                        samples,
                        events,
                        outcome: Outcome::HitTerminal,
                        direction,
                    });
                }
                t = te;
                p = (q.0, q.1);
                f0 = field.eval(p, side);
                continue;
            }
            None => {}
        }

        // graze marker: dense output close to the line without crossing
        if math::abs(p.0).min(math::abs(p1.0)) < 1e-3 {
            let c = seg.functional_cubic((side, 0.0), 0.0); // side * x >= 0 on the segment
            // minimum of the cubic over [0,1] at its interior critical points
            let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
            let mut candidates = [f64::NAN; 2];
            let mut nc = 0;
            if qa != 0.0 {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc > 0.0 {
                    let sq = math::sqrt(disc);
                    let qq = -0.5 * (qb + if qb >= 0.0 { sq } else { -sq });
                    for r in [qq / qa, qc / qq] {
                        if r > 0.0 && r < 1.0 {
                            candidates[nc] = r;
                            nc += 1;
                        }
                    }
                }
            } else if qb != 0.0 {
                let r = -qc / qb;
                if r > 0.0 && r < 1.0 {
                    candidates[nc] = r;
                    nc += 1;
                }
            }
            for &theta in candidates.iter().take(nc) {
                let v = cubic_eval(&c, theta);
                if (0.0..GRAZE_TOL).contains(&v) {
                    let q = seg.eval(theta);
                    events.push(EventRecord {
                        t: t + theta * h,
                        p: PhasePoint { x: q.0, y: q.1, chart: start.chart },
                        kind: EventKind::Graze,
                    });
                    break;
                }
            }
        }

        // commit the step
        t += h;
        p = p1;
        f0 = f1;
        samples.push((t, PhasePoint { x: p.0, y: p.1, chart: start.chart }));

        if math::hypot(p.0, p.1) > ctrl.escape_radius {
            return Ok(Trajectory { samples, events, outcome: Outcome::Escaped, direction });
        }
        if math::hypot(f0.0, f0.1) < 1e-13 {
            slow_steps += 1;
            if slow_steps >= 10 {
                return Ok(Trajectory {
                    samples,
                    events,
                    outcome: Outcome::EquilibriumTrapped,
                    direction,
                });
            }
        } else {
            slow_steps = 0;
        }

        let fac = if err == 0.0 { 5.0 } else { (0.9 * math::powf(err, -0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{equilibrium_report, Params};

    fn p(a: f64, b: f64, delta: f64) -> Params {
        Params::new(a, b, delta).unwrap()
    }

    #[test]
    fn trapped_at_equilibrium() {
        let pr = p(4.0, -24.9, 0.1);
        let er = equilibrium_report(&pr).location;
        let tr = flow(&er, &pr, &[], &IntegratorCtrl::for_params(&pr), TimeDirection::Forward)
            .unwrap();
        assert_eq!(tr.outcome, Outcome::EquilibriumTrapped);
    }

    #[test]
    fn spiral_hits_positive_axis() {
        let pr = p(4.0, -24.9, 0.1);
        let ctrl = IntegratorCtrl::for_params(&pr);
        let start = PhasePoint::lienard(-1.0, 0.0);
        let tr = flow(
            &start,
            &pr,
            &[EventSpec::terminal_positive_x_axis()],
            &ctrl,
            TimeDirection::Forward,
        )
        .unwrap();
        assert_eq!(tr.outcome, Outcome::HitTerminal);
        let hit = tr.terminal_event().unwrap();
        assert_eq!(hit.p.y, 0.0);
        assert!(hit.p.x > 0.0 && hit.p.x < 4.0 + 1.0 + (24.9f64).sqrt());
        // the orbit crossed x = 0 on the way and the crossing was recorded
        assert!(tr.events.iter().any(|e| e.kind == EventKind::SwitchingLine));
        // times strictly increasing
        for w in tr.samples.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
    }

    #[test]
    fn sign_constant_between_switching_events() {
        let pr = p(1.3, -6.5, 0.1);
        let ctrl = IntegratorCtrl { t_max: 30.0, ..IntegratorCtrl::for_params(&pr) };
        let tr = flow(
            &PhasePoint::lienard(-2.0, 0.0),
            &pr,
            &[],
            &ctrl,
            TimeDirection::Forward,
        )
        .unwrap();
        let mut switch_times: Vec<f64> = tr
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SwitchingLine)
            .map(|e| e.t)
            .collect();
        assert!(switch_times.len() >= 2, "orbit should cross the line repeatedly");
        switch_times.push(f64::INFINITY);
        let mut seg = 0usize;
        let mut sign = -1.0;
        for &(t, q) in &tr.samples {
            while t > switch_times[seg] {
                seg += 1;
                sign = -sign;
            }
            if t < switch_times[seg.min(switch_times.len() - 1)] && q.x != 0.0 {
                assert_eq!(crate::math::sgn(q.x), sign, "t = {t}");
            }
        }
    }

    #[test]
    fn locate_event_contract() {
        let pr = p(2.0, -10.0, 0.1);
        let ctrl = IntegratorCtrl::for_params(&pr);
        // bracket the terminal y = 0 crossing with the samples around it;
        // the bracket stays on one side of the switching line
        let tr = flow(
            &PhasePoint::lienard(-0.5, 1.0),
            &pr,
            &[EventSpec::terminal_positive_x_axis()],
            &ctrl,
            TimeDirection::Forward,
        )
        .unwrap();
        let (t_ev, p_ev) = tr.end();
        let before = tr
            .samples
            .iter()
            .rev()
            .find(|(t, q)| *t < t_ev - 1e-9 && q.x > 0.0 && q.y > 0.0)
            .copied()
            .unwrap();
        // continue a little past the event to get an upper bracket state
        let cont = flow(
            &p_ev,
            &pr,
            &[],
            &IntegratorCtrl { t_max: 0.05, ..ctrl },
            TimeDirection::Forward,
        )
        .unwrap();
        let after = (t_ev + cont.end().0, cont.end().1);
        let spec = EventSpec::terminal_positive_x_axis();
        let (t_star, p_star) =
            locate_event(before.0, &before.1, after.0, &after.1, &spec, &pr, &ctrl).unwrap();
        assert_eq!(p_star.y, 0.0, "section coordinate snapped exactly");
        assert!((t_star - t_ev).abs() < 1e-6, "t* = {t_star} vs event t = {t_ev}");
        assert!((p_star.x - p_ev.x).abs() < 1e-6);
        // no sign change -> Bracket error
        let err = locate_event(
            0.0,
            &PhasePoint::lienard(-1.0, 0.1),
            0.1,
            &PhasePoint::lienard(-0.9, 0.2),
            &EventSpec {
                kind: EventKind::SwitchingLine,
                direction: EventDirection::Any,
                terminal: false,
            },
            &pr,
            &ctrl,
        );
        assert!(matches!(err, Err(Error::Bracket(_))));
    }

    #[test]
    fn planted_cubic_root_recovered() {
        // dense cubic x(theta) = (theta - 0.3)(theta^2 + 1) has one root
        let c = [-0.3, 1.0 - 0.0, -0.3, 1.0]; // expand: t^3 - 0.3 t^2 + t - 0.3
        let r = cubic_first_root(&c, 1e-9, 1e-14).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
        // even-multiplicity contact is not reported as a crossing
        // ((t - 0.25)^2 evaluates to exactly zero at the critical point)
        let tangent = [0.0625, -0.5, 1.0, 0.0];
        assert!(cubic_first_root(&tangent, 1e-9, 1e-14).is_none());
    }

    #[test]
    fn custom_section_event() {
        let pr = p(2.0, -10.0, 0.1);
        let ctrl = IntegratorCtrl::for_params(&pr);
        // vertical section through (2, 0): crossing when x reaches 2
        let spec = EventSpec {
            kind: EventKind::CustomSection { point: (2.0, 0.0), normal: (1.0, 0.0) },
            direction: EventDirection::DownUp,
            terminal: true,
        };
        let tr = flow(
            &PhasePoint::lienard(-1.0, 0.0),
            &pr,
            &[spec],
            &ctrl,
            TimeDirection::Forward,
        )
        .unwrap();
        assert_eq!(tr.outcome, Outcome::HitTerminal);
        let hit = tr.end().1;
        assert!((hit.x - 2.0).abs() < 1e-9, "section hit at x = {}", hit.x);
        assert!(hit.y > 0.0, "crossing rightward happens above the axis");
    }

    #[test]
    fn reversibility() {
        let pr = p(1.5, -7.0, 0.1);
        let ctrl = IntegratorCtrl::for_params(&pr);
        for start in [
            PhasePoint::lienard(-1.2, 0.0),
            PhasePoint::lienard(-0.4, 0.0),
            PhasePoint::lienard(-2.5, 0.0),
        ] {
            let fwd = flow(
                &start,
                &pr,
                &[EventSpec::terminal_positive_x_axis()],
                &ctrl,
                TimeDirection::Forward,
            )
            .unwrap();
            assert_eq!(fwd.outcome, Outcome::HitTerminal);
            let (t_hit, p_hit) = fwd.end();
            let back = flow(
                &p_hit,
                &pr,
                &[],
                &IntegratorCtrl { t_max: t_hit, ..ctrl },
                TimeDirection::Backward,
            )
            .unwrap();
            assert_eq!(back.outcome, Outcome::TMaxReached);
            let (_, p_back) = back.end();
            assert!(
                (p_back.x - start.x).abs() < 1e-6 && (p_back.y - start.y).abs() < 1e-6,
                "round trip drifted: {p_back:?} vs {start:?}"
            );
        }
    }

    #[test]
    fn deterministic() {
        let pr = p(1.5, -7.0, 0.1);
        let ctrl = IntegratorCtrl::for_params(&pr);
        let run = || {
            flow(
                &PhasePoint::lienard(-1.0, 0.0),
                &pr,
                &[EventSpec::terminal_positive_x_axis()],
                &ctrl,
                TimeDirection::Forward,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.samples.len(), b.samples.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!(sa.0.to_bits() == sb.0.to_bits());
            assert!(sa.1.x.to_bits() == sb.1.x.to_bits());
            assert!(sa.1.y.to_bits() == sb.1.y.to_bits());
        }
    }

    #[test]
    fn convergence_under_tolerance_refinement() {
        let pr = p(1.5, -7.0, 0.1);
        let base = IntegratorCtrl::for_params(&pr);
        let hit = |rel: f64| {
            flow(
                &PhasePoint::lienard(-1.0, 0.0),
                &pr,
                &[EventSpec::terminal_positive_x_axis()],
                &IntegratorCtrl { rel_tol: rel, abs_tol: rel * 1e-2, ..base },
                TimeDirection::Forward,
            )
            .unwrap()
            .end()
            .1
            .x
        };
        let coarse = hit(1e-8);
        let fine = hit(1e-10);
        let finest = hit(1e-12);
        assert!((coarse - finest).abs() < 1e-6);
        assert!((fine - finest).abs() < (coarse - finest).abs().max(1e-11));
    }

    #[test]
    fn bounded_orbits_do_not_escape() {
        // positively bounded: far-out starts come back in
        let pr = p(2.0, -12.0, 0.1);
        let ctrl = IntegratorCtrl { t_max: 200.0, ..IntegratorCtrl::for_params(&pr) };
        let r0 = 10.0 * (pr.a() + 1.0 + (12.0f64).sqrt());
        for k in 0..8 {
            let ang = core::f64::consts::FRAC_PI_4 * k as f64;
            let start = PhasePoint::lienard(r0 * ang.cos(), r0 * ang.sin());
            let tr = flow(&start, &pr, &[], &ctrl, TimeDirection::Forward).unwrap();
            assert_ne!(tr.outcome, Outcome::Escaped);
        }
    }
}
