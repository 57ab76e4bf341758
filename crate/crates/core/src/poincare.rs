//! Shooting maps on the x-axis of the Lienard chart and detection of
//! crossing, small and grazing limit cycles.
//!
//! From a start `(c, 0)` with `c <= 0` the positive and negative orbits both
//! first meet the positive x-axis; the displacement `d(c) = x_plus - x_minus`
//! vanishes exactly on crossing limit cycles. Small cycles are found with a
//! one-sided return map on the ray `{y = 0, 0 < x < a + 1}`.

use crate::error::{Error, Result};
use crate::integrate::{
    flow, EventDirection, EventKind, EventSpec, IntegratorCtrl, Outcome, TimeDirection,
    Trajectory,
};
use crate::math;
use crate::model::{lienard_data, Chart, Params, PhasePoint};
use alloc::vec::Vec;

/// One shot from `(c, 0)`: first forward and backward hits on the positive
/// x-axis. A missing field means that orbit escaped or timed out before
/// returning (for a backward orbit this reads as "returns at infinity").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootResult {
    pub c: f64,
    pub x_plus: Option<f64>,
    pub x_minus: Option<f64>,
}

impl ShootResult {
    /// `x_plus - x_minus` when both returns exist.
    pub fn displacement(&self) -> Option<f64> {
        match (self.x_plus, self.x_minus) {
            (Some(p), Some(m)) => Some(p - m),
            _ => None,
        }
    }
}

/// Cycle flavour per its relation to the switching line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    /// Crosses `x = 0`.
    Crossing,
    /// Entirely in `x > 0`.
    Small,
    /// Touches `x = 0` at one point.
    Grazing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Internally unstable, externally stable (fold of the outer pair).
    SemiStableExtStable,
    /// Internally stable, externally unstable (fold of the inner pair).
    SemiStableExtUnstable,
}

/// A detected periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub kind: CycleKind,
    /// Negative-axis crossing abscissa; absent for small cycles.
    pub c_left: Option<f64>,
    /// Positive-axis crossing (the outermost one, `x_D`).
    pub x_right: f64,
    pub period: f64,
    /// `\oint -f(x) dt` along the orbit (the divergence integral; identical
    /// in both charts).
    pub div_integral: f64,
    pub stability: Stability,
    /// Sampled closed orbit in the Lienard chart.
    pub points: Vec<PhasePoint>,
}

impl CycleRecord {
    /// Smallest `x` over the sampled orbit.
    pub fn min_x(&self) -> f64 {
        self.points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min)
    }

    /// Largest `x` over the sampled orbit.
    pub fn max_x(&self) -> f64 {
        self.points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Grid and tolerance knobs for the displacement scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCtrl {
    /// Points in the coarse `c` grid.
    pub grid_points: usize,
    /// `c` spans `[-factor * max(sqrt(-3b), a + 1 + sqrt(-b)), 0]`.
    pub c_span_factor: f64,
    /// Root brackets are refined to this width in `c`.
    pub bracket_tol: f64,
    /// An extremum with `|d|` below this is a double root (semi-stable).
    pub double_root_tol: f64,
    /// `|d(0)|` below this reports a grazing cycle.
    pub graze_tol: f64,
}

impl Default for ScanCtrl {
    fn default() -> Self {
        ScanCtrl {
            grid_points: 400,
            c_span_factor: 3.0,
            bracket_tol: 1e-8,
            double_root_tol: 1e-7,
            graze_tol: 1e-6,
        }
    }
}

fn shoot_one(c: f64, params: &Params, ctrl: &IntegratorCtrl, dir: TimeDirection) -> Option<f64> {
    let start = PhasePoint::lienard(c, 0.0);
    let tr = flow(&start, params, &[EventSpec::terminal_positive_x_axis()], ctrl, dir).ok()?;
    match tr.outcome {
        Outcome::HitTerminal => Some(tr.end().1.x),
        _ => None,
    }
}

/// First forward/backward returns to the positive x-axis from `(c, 0)`.
pub fn shoot(c: f64, params: &Params, ctrl: &IntegratorCtrl) -> Result<ShootResult> {
    if !c.is_finite() {
        return Err(Error::NonFinite("shoot abscissa"));
    }
    if c > 0.0 {
        return Err(Error::Domain("shoot start must have c <= 0"));
    }
    Ok(ShootResult {
        c,
        x_plus: shoot_one(c, params, ctrl, TimeDirection::Forward),
        x_minus: shoot_one(c, params, ctrl, TimeDirection::Backward),
    })
}

/// Per-entry shots over a grid; failed returns stay in place as `None`s.
pub fn displacement_profile(
    params: &Params,
    c_grid: &[f64],
    ctrl: &IntegratorCtrl,
) -> Vec<ShootResult> {
    c_grid
        .iter()
        .map(|&c| {
            shoot(c, params, ctrl).unwrap_or(ShootResult { c, x_plus: None, x_minus: None })
        })
        .collect()
}

/// Displacement with the escape convention: a lost backward orbit returns
/// "at infinity", so the displacement is minus infinity.
pub(crate) fn signed_displacement(c: f64, params: &Params, ctrl: &IntegratorCtrl) -> Option<f64> {
    let s = shoot(c, params, ctrl).ok()?;
    match (s.x_plus, s.x_minus) {
        (Some(p), Some(m)) => Some(p - m),
        (Some(_), None) => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

/// Scanned displacement profile with refined roots and extrema.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    pub cs: Vec<f64>,
    /// NaN where the shot failed entirely; -inf where only the backward
    /// orbit was lost (escape convention).
    #[allow(dead_code)]
    pub ds: Vec<f64>,
    /// Simple roots as `(c, slope_sign)`, ascending in `c`.
    pub roots: Vec<(f64, f64)>,
    /// Double roots (refined extrema with `|d| < double_root_tol`) as
    /// `(c, surrounding sign)`.
    pub double_roots: Vec<(f64, f64)>,
    /// Refined interior local maxima `(c, d)`, ascending in `c`.
    pub maxima: Vec<(f64, f64)>,
    /// Refined interior local minima `(c, d)`, ascending in `c`.
    pub minima: Vec<(f64, f64)>,
}

fn bisect_displacement(
    mut lo: f64,
    mut dlo: f64,
    mut hi: f64,
    params: &Params,
    ctrl: &IntegratorCtrl,
    tol: f64,
) -> Option<(f64, f64)> {
    // returns (root, slope sign across the final bracket)
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let dm = signed_displacement(mid, params, ctrl)?;
        if dm == 0.0 {
            return Some((mid, 1.0));
        }
        if (dm > 0.0) == (dlo > 0.0) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi), if dlo < 0.0 { 1.0 } else { -1.0 }))
}

/// Golden-section refinement of a local extremum bracketed by three grid
/// points; `maximize` flips the sense.
fn refine_extremum(
    mut a: f64,
    mut b: f64,
    params: &Params,
    ctrl: &IntegratorCtrl,
    maximize: bool,
    iters: usize,
) -> Option<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let val = |c: f64| -> Option<f64> {
        let d = signed_displacement(c, params, ctrl)?;
        Some(if maximize { -d } else { d })
    };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = val(x1)?;
    let mut f2 = val(x2)?;
    for _ in 0..iters {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = val(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = val(x2)?;
        }
    }
    let (c, f) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Some((c, if maximize { -f } else { f }))
}

pub(crate) fn scan_profile(
    params: &Params,
    ctrl: &IntegratorCtrl,
    scan: &ScanCtrl,
) -> Result<Profile> {
    let a = params.a();
    let b = params.b();
    let reach = math::sqrt(f64::max(0.0, -3.0 * b))
        .max(a + 1.0 + math::sqrt(f64::max(0.0, -b)));
    let span = scan.c_span_factor * reach;
    let n = scan.grid_points.max(8);
    let mut cs = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    for i in 0..n {
        // from -span up to 0 inclusive
        let c = -span * (1.0 - i as f64 / (n - 1) as f64);
        cs.push(c);
        ds.push(signed_displacement(c, params, ctrl).unwrap_or(f64::NAN));
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut double_roots: Vec<(f64, f64)> = Vec::new();
    let mut maxima: Vec<(f64, f64)> = Vec::new();
    let mut minima: Vec<(f64, f64)> = Vec::new();

    // sign changes between defined neighbours (escapes carry a sign)
    for i in 0..n - 1 {
        let (d0, d1) = (ds[i], ds[i + 1]);
        if d0.is_nan() || d1.is_nan() {
            continue;
        }
        if d0 == 0.0 {
            continue; // grid point exactly on a root: the bisection below owns it
        }
        if (d0 > 0.0) != (d1 > 0.0) {
            if let Some(r) =
                bisect_displacement(cs[i], d0, cs[i + 1], params, ctrl, scan.bracket_tol)
            {
                roots.push(r);
            }
        }
    }

    // refine interior extrema; an extremum that dips across zero yields a
    // close pair of roots the coarse grid missed
    for i in 1..n - 1 {
        let (dm, d0, dp) = (ds[i - 1], ds[i], ds[i + 1]);
        if !(dm.is_finite() && d0.is_finite() && dp.is_finite()) {
            continue; // extrema only matter where the profile is finite
        }
        let is_max = d0 >= dm && d0 >= dp && (d0 > dm || d0 > dp);
        let is_min = d0 <= dm && d0 <= dp && (d0 < dm || d0 < dp);
        if !(is_max || is_min) {
            continue;
        }
        let refined = refine_extremum(cs[i - 1], cs[i + 1], params, ctrl, is_max, 40);
        let Some((ce, de)) = refined else { continue };
        if is_max {
            maxima.push((ce, de));
        } else {
            minima.push((ce, de));
        }
        let surrounding = if is_max { -1.0 } else { 1.0 };
        if math::abs(de) < scan.double_root_tol {
            // extremum pinned at zero within tolerance: a fold of cycles
            if (surrounding > 0.0) == (dm > 0.0) {
                double_roots.push((ce, surrounding));
            }
            continue;
        }
        // the refinement may expose a close pair the grid stepped over
        if (de > 0.0) != (dm > 0.0) {
            if let Some(r) =
                bisect_displacement(cs[i - 1], dm, ce, params, ctrl, scan.bracket_tol)
            {
                roots.push(r);
            }
            if let Some((r, _)) =
                bisect_displacement(ce, de, cs[i + 1], params, ctrl, scan.bracket_tol)
            {
                roots.push((r, if de < 0.0 { 1.0 } else { -1.0 }));
            }
        }
    }

    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    roots.dedup_by(|x, y| math::abs(x.0 - y.0) < 10.0 * scan.bracket_tol);
    double_roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    maxima.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    minima.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // a double root adjacent to a pair of simple roots is the same structure
    double_roots.retain(|(c, _)| roots.iter().all(|(r, _)| math::abs(r - c) > 1e-4));

    Ok(Profile { cs, ds, roots, double_roots, maxima, minima })
}

/// Closed orbit through `(start_x, start_y)`, its period and samples.
fn close_orbit(
    start: PhasePoint,
    params: &Params,
    ctrl: &IntegratorCtrl,
    section: EventSpec,
) -> Option<(Trajectory, f64)> {
    let tr = flow(&start, params, &[section], ctrl, TimeDirection::Forward).ok()?;
    if tr.outcome != Outcome::HitTerminal {
        return None;
    }
    let (t_end, _) = tr.end();
    Some((tr, t_end))
}

fn trapezoid_div_integral(tr: &Trajectory, params: &Params) -> f64 {
    let mut acc = 0.0;
    for w in tr.samples.windows(2) {
        let (t0, p0) = w[0];
        let (t1, p1) = w[1];
        let f0 = lienard_data(p0.x, params).f;
        let f1 = lienard_data(p1.x, params).f;
        acc += 0.5 * (t1 - t0) * (-(f0) - f1);
    }
    acc
}

/// Builds the record for a crossing (or grazing) cycle through `(c, 0)`.
fn crossing_record(c: f64, params: &Params, ctrl: &IntegratorCtrl) -> Option<CycleRecord> {
    let section = EventSpec {
        kind: EventKind::NegativeXAxis,
        direction: EventDirection::Any,
        terminal: true,
    };
    let start = PhasePoint::lienard(c, 0.0);
    let (tr, period) = close_orbit(start, params, ctrl, section)?;
    let end = tr.end().1;
    if math::abs(end.x - c) > 1e-4 * (1.0 + math::abs(c)) {
        return None; // did not close onto itself: not a cycle through c
    }
    let x_right = tr.samples.iter().map(|(_, p)| p.x).fold(f64::NEG_INFINITY, f64::max);
    Some(CycleRecord {
        kind: CycleKind::Crossing,
        c_left: Some(c),
        x_right,
        period,
        div_integral: trapezoid_div_integral(&tr, params),
        stability: Stability::Stable, // placeholder, filled by the caller
        points: tr.samples.iter().map(|(_, p)| *p).collect(),
    })
}

/// Return-map displacement on the ray `{y = 0, 0 < x < a + 1}`; also reports
/// the orbit's minimum `x` over the revolution.
fn small_return(x0: f64, params: &Params, ctrl: &IntegratorCtrl) -> Option<(f64, f64)> {
    let section = EventSpec {
        kind: EventKind::PositiveXAxis,
        direction: EventDirection::DownUp,
        terminal: true,
    };
    let start = PhasePoint::lienard(x0, 0.0);
    let tr = flow(&start, params, &[section], ctrl, TimeDirection::Forward).ok()?;
    if tr.outcome != Outcome::HitTerminal {
        return None;
    }
    let min_x = tr.samples.iter().map(|(_, p)| p.x).fold(f64::INFINITY, f64::min);
    Some((tr.end().1.x - x0, min_x))
}

fn small_cycle_record(x0: f64, params: &Params, ctrl: &IntegratorCtrl) -> Option<CycleRecord> {
    let section = EventSpec {
        kind: EventKind::PositiveXAxis,
        direction: EventDirection::DownUp,
        terminal: true,
    };
    let (tr, period) = close_orbit(PhasePoint::lienard(x0, 0.0), params, ctrl, section)?;
    let min_x = tr.samples.iter().map(|(_, p)| p.x).fold(f64::INFINITY, f64::min);
    if min_x <= 0.0 {
        return None;
    }
    Some(CycleRecord {
        kind: CycleKind::Small,
        c_left: None,
        x_right: tr.samples.iter().map(|(_, p)| p.x).fold(f64::NEG_INFINITY, f64::max),
        period,
        div_integral: trapezoid_div_integral(&tr, params),
        stability: Stability::Stable,
        points: tr.samples.iter().map(|(_, p)| *p).collect(),
    })
}

/// Detects small cycles by the sign changes of the one-sided return map.
fn find_small_cycles(
    params: &Params,
    ctrl: &IntegratorCtrl,
) -> Result<Vec<f64>> {
    let a1 = params.a() + 1.0;
    // near grazing the small cycle meets the section arbitrarily close to
    // the origin, so the lower part of the grid is log-spaced
    let mut grid: Vec<f64> = Vec::with_capacity(220);
    let (x_lo, x_knee) = (1e-6 * a1, 0.1 * a1);
    let n_log = 60;
    for i in 0..n_log {
        let t = i as f64 / (n_log - 1) as f64;
        grid.push(x_lo * math::powf(x_knee / x_lo, t));
    }
    let n_lin = 140;
    for i in 1..n_lin {
        grid.push(x_knee + (a1 * (1.0 - 1e-3) - x_knee) * i as f64 / (n_lin - 1) as f64);
    }
    let mut prev: Option<(f64, f64)> = None;
    let mut found: Vec<f64> = Vec::new();
    for &x in &grid {
        let Some((r, min_x)) = small_return(x, params, ctrl) else {
            prev = None;
            continue;
        };
        if min_x <= 0.0 {
            prev = None;
            continue;
        }
        if let Some((xp, rp)) = prev {
            if rp != 0.0 && r != 0.0 && (rp > 0.0) != (r > 0.0) {
                // bisect the return map
                let (mut lo, mut hi, mut rlo) = (xp, x, rp);
                while hi - lo > 1e-10 {
                    let mid = 0.5 * (lo + hi);
                    let Some((rm, mmin)) = small_return(mid, params, ctrl) else { break };
                    if mmin <= 0.0 {
                        break;
                    }
                    if (rm > 0.0) == (rlo > 0.0) {
                        lo = mid;
                        rlo = rm;
                    } else {
                        hi = mid;
                    }
                }
                found.push(0.5 * (lo + hi));
            }
        }
        prev = Some((x, r));
    }
    found.dedup_by(|x, y| math::abs(*x - *y) < 1e-6);
    if found.len() > 1 {
        return Err(Error::ScanInsufficient(
            "more than one small-cycle root; refine the return-map grid",
        ));
    }
    Ok(found)
}

/// Classifies an already detected cycle: the divergence integral decides
/// hyperbolic stability, displacement slopes resolve the semi-stable cases.
pub fn classify_cycle(
    mut cycle: CycleRecord,
    params: &Params,
    ctrl: &IntegratorCtrl,
) -> CycleRecord {
    let stab_tol = 1e-6 * cycle.period;
    // the trapezoid divergence integral carries O(h^2) error; only trust its
    // sign well clear of zero
    let div_err = 1e-3 * cycle.period;
    if math::abs(cycle.div_integral) > stab_tol.max(div_err) {
        cycle.stability = if cycle.div_integral < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        return cycle;
    }
    if let Some(c_left) = cycle.c_left {
        // one-sided displacement values; widen the offset until the values
        // rise above the shooting noise floor
        let mut offset = 1e-5;
        for _ in 0..6 {
            let dm = signed_displacement(c_left - offset, params, ctrl);
            let dp = signed_displacement((c_left + offset).min(0.0), params, ctrl);
            if let (Some(dm), Some(dp)) = (dm, dp) {
                let noise = 5e-8;
                if math::abs(dm) > noise && math::abs(dp) > noise {
                    cycle.stability = match (dm > 0.0, dp > 0.0) {
                        (false, true) => Stability::Stable,
                        (true, false) => Stability::Unstable,
                        (false, false) => Stability::SemiStableExtStable,
                        (true, true) => Stability::SemiStableExtUnstable,
                    };
                    return cycle;
                }
            }
            offset *= 10.0;
        }
    }
    // fall back to the raw sign
    cycle.stability = if cycle.div_integral < 0.0 { Stability::Stable } else { Stability::Unstable };
    cycle
}

/// Detects every limit cycle at the given parameters, innermost first.
pub fn find_cycles(
    params: &Params,
    ctrl: &IntegratorCtrl,
    scan: &ScanCtrl,
) -> Result<Vec<CycleRecord>> {
    let mut out: Vec<CycleRecord> = Vec::new();

    // small cycles first (innermost)
    for x0 in find_small_cycles(params, ctrl)? {
        if let Some(rec) = small_cycle_record(x0, params, ctrl) {
            let mut rec = classify_cycle(rec, params, ctrl);
            if rec.min_x() < 1e-7 {
                rec.kind = CycleKind::Grazing;
            }
            out.push(rec);
        }
    }

    // grazing orbit through the origin
    let d0 = signed_displacement(0.0, params, ctrl);
    if let Some(d0) = d0 {
        if math::abs(d0) < scan.graze_tol {
            if let Some(mut rec) = crossing_record(0.0, params, ctrl) {
                rec.kind = CycleKind::Grazing;
                rec = classify_cycle(rec, params, ctrl);
                out.push(rec);
            }
        }
    }

    // crossing cycles from the displacement scan
    let profile = scan_profile(params, ctrl, scan)?;
    for &(c, slope) in &profile.roots {
        if math::abs(c) < 1e-7 {
            continue; // the grazing orbit, already handled
        }
        if let Some(mut rec) = crossing_record(c, params, ctrl) {
            rec.stability = if slope > 0.0 { Stability::Stable } else { Stability::Unstable };
            if math::abs(rec.div_integral) > 1e-3 * rec.period {
                // strong hyperbolicity: let the divergence integral confirm
                let by_div = if rec.div_integral < 0.0 {
                    Stability::Stable
                } else {
                    Stability::Unstable
                };
                rec.stability = by_div;
            }
            if rec.min_x() > -1e-7 && rec.min_x() < 1e-7 {
                rec.kind = CycleKind::Grazing;
            }
            out.push(rec);
        }
    }
    for &(c, surrounding) in &profile.double_roots {
        if math::abs(c) < 1e-7 {
            continue;
        }
        if let Some(mut rec) = crossing_record(c, params, ctrl) {
            rec.stability = if surrounding < 0.0 {
                Stability::SemiStableExtStable
            } else {
                Stability::SemiStableExtUnstable
            };
            out.push(rec);
        }
    }

    // innermost -> outermost: small cycles first, then by |c_left|
    out.sort_by(|u, v| {
        let ku = u.c_left.map(math::abs).unwrap_or(0.0);
        let kv = v.c_left.map(math::abs).unwrap_or(0.0);
        ku.partial_cmp(&kv).unwrap()
    });
    Ok(out)
}

/// True when the point `(sqrt(-3 b), 0)` (SD chart) lies strictly inside the
/// closed orbit. Defined for crossing cycles with `b < -(a+1)^2`.
pub fn verify_surround(cycle: &CycleRecord, params: &Params) -> Result<bool> {
    if cycle.kind != CycleKind::Crossing {
        return Err(Error::Domain("verify_surround needs a crossing cycle"));
    }
    let a1 = params.a() + 1.0;
    if params.b() >= -a1 * a1 {
        return Err(Error::Domain("verify_surround needs b < -(a+1)^2"));
    }
    let xt = math::sqrt(-3.0 * params.b());
    // work in the Lienard chart: the chart shear preserves containment
    let yt = -lienard_data(xt, params).f_int;
    let mut inside = false;
    let pts = &cycle.points;
    let n = pts.len();
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let (p, q) = ((p.x, p.y - 0.0), (q.x, q.y));
        debug_assert_eq!(pts[i].chart, Chart::Lienard);
        if (p.1 > yt) != (q.1 > yt) {
            let t = (yt - p.1) / (q.1 - p.1);
            let xi = p.0 + t * (q.0 - p.0);
            if xi > xt {
                inside = !inside;
            }
        }
    }
    Ok(inside)
}
