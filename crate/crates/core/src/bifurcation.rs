//! Global bifurcation surfaces at fixed `delta`: the analytic Hopf locus,
//! the grazing curve `phi1` traced by shooting from the origin, the two
//! double-crossing-limit-cycle folds `rho1` (outer pair) and `rho2` (inner
//! pair) traced through extremal values of the displacement profile, the
//! region classification of the `(a, b)` slice, and the window-closing
//! abscissa `a0`.
//!
//! Fold objectives: the displacement profile `d(c)` develops a hump (local
//! maximum) between the outer pair of crossing cycles and a valley (local
//! minimum) between the inner pair. The hump's value crosses zero exactly at
//! `b = rho1` and the valley's at `b = rho2`, both decreasing in `b`, which
//! makes them clean bisection targets.
//!
//! The grazing bisection brackets `b` by `[-4/3 (a+1)^2, -(a+1)^2]`: above
//! the Hopf locus no closed orbit exists (origin displacement negative),
//! and at `-4/3 (a+1)^2` no small cycle survives (origin displacement
//! positive). A sometimes-quoted lower bound of `-3/4 (a+1)^2` is vacuous,
//! since it lies above the Hopf locus.

use crate::error::{Error, Result};
use crate::integrate::IntegratorCtrl;
use crate::math::abs;
use crate::model::Params;
use crate::poincare::{scan_profile, signed_displacement, ScanCtrl};
use alloc::vec::Vec;

/// Which bifurcation curve a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Hopf,
    Grazing,
    Dl1,
    Dl2,
    B1,
    B2,
    B3,
}

/// One `(a, b)` sample of a bifurcation curve at fixed `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub kind: CurveKind,
    /// Defining-function residual at the sample (|d(0)| for grazing,
    /// |extremal displacement| for the folds, |M'(h2)| etc. for b1/b2/b3).
    pub residual: f64,
    pub valid: bool,
}

fn invalid_sample(a: f64, delta: f64, kind: CurveKind) -> CurveSample {
    CurveSample { a, b: f64::NAN, delta, kind, residual: f64::NAN, valid: false }
}

/// Hopf locus: `b = -(a+1)^2`.
pub fn hopf_b(a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::Domain("hopf_b needs a > 1"));
    }
    Ok(-(a + 1.0) * (a + 1.0))
}

fn graze_displacement(b: f64, a: f64, delta: f64) -> f64 {
    let params = match Params::new(a, b, delta) {
        Ok(p) => p,
        Err(_) => return f64::NAN,
    };
    let ctrl = IntegratorCtrl::for_params(&params);
    signed_displacement(0.0, &params, &ctrl).unwrap_or(f64::NAN)
}

/// `phi1(a, delta)` by bisection of `d(0)` on the bracket
/// `[-4/3 (a+1)^2, -(a+1)^2]`; a lost backward orbit counts as `d < 0`.
///
/// `tol` bounds the residual `|d(0)|` at the returned `b`; the bisection
/// also stops at a width floor of `1e-12 (a+1)^2`.
pub fn trace_grazing_at(a: f64, delta: f64, tol: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !(a > 1.0) {
        return Err(Error::Domain("grazing trace needs a > 1, delta > 0"));
    }
    let a1 = a + 1.0;
    let (mut lo, mut hi) = (-4.0 / 3.0 * a1 * a1, -a1 * a1);
    let dlo = graze_displacement(lo, a, delta);
    let dhi = graze_displacement(hi, a, delta);
    if !(dlo > 0.0) || !(dhi < 0.0) {
        return Err(Error::Bracket("grazing endpoints do not bracket d(0) = 0"));
    }
    let width_floor = 1e-12 * a1 * a1;
    let mut best = (0.5 * (lo + hi), f64::INFINITY);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let dm = graze_displacement(mid, a, delta);
        if dm.is_nan() {
            return Err(Error::NonFinite("displacement during grazing bisection"));
        }
        let r = if dm.is_finite() { abs(dm) } else { f64::INFINITY };
        if r < best.1 {
            best = (mid, r);
        }
        if r <= tol || hi - lo <= width_floor {
            return Ok(best);
        }
        if dm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Grazing curve over a grid.
pub fn trace_grazing(a_grid: &[f64], delta: f64, tol: f64) -> Vec<CurveSample> {
    a_grid
        .iter()
        .map(|&a| match trace_grazing_at(a, delta, tol) {
            Ok((b, residual)) => {
                CurveSample { a, b, delta, kind: CurveKind::Grazing, residual, valid: true }
            }
            Err(_) => invalid_sample(a, delta, CurveKind::Grazing),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleCycleKind {
    /// Outer-pair fold (`rho1`): zero of the hump maximum.
    Dl1,
    /// Inner-pair fold (`rho2`): zero of the valley minimum.
    Dl2,
}

/// Tracks the `c`-location of the extremum between objective evaluations,
/// so bisection steps refine locally instead of rescanning the profile.
#[derive(Debug, Clone, Copy)]
struct ExtremumTracker {
    c: f64,
    width: f64,
}

fn golden_extremum(
    lo: f64,
    hi: f64,
    params: &Params,
    ctrl: &IntegratorCtrl,
    maximize: bool,
) -> Option<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let val = |c: f64| -> Option<f64> {
        let d = signed_displacement(c.min(0.0), params, ctrl)?;
        if !d.is_finite() {
            return None;
        }
        Some(if maximize { -d } else { d })
    };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = val(x1)?;
    let mut f2 = val(x2)?;
    for _ in 0..36 {
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

/// Extremal displacement objective: hump maximum (outermost interior local
/// max) for `Dl1`, valley minimum (innermost interior local min) for `Dl2`.
/// Updates the tracker for the next call. `None` means the extremum does not
/// exist at this `b` (no fold structure).
fn fold_objective(
    kind: DoubleCycleKind,
    b: f64,
    a: f64,
    delta: f64,
    tracker: &mut Option<ExtremumTracker>,
) -> Option<f64> {
    let params = Params::new(a, b, delta).ok()?;
    let ctrl = IntegratorCtrl::for_params(&params);
    let maximize = kind == DoubleCycleKind::Dl1;

    if let Some(t) = *tracker {
        let (lo, hi) = (t.c - t.width, (t.c + t.width).min(-1e-9));
        if let Some((c, v)) = golden_extremum(lo, hi, &params, &ctrl, maximize) {
            // reject hits pinned at the window edge: the extremum moved
            let edge = 0.02 * (hi - lo);
            if c - lo > edge && hi - c > edge {
                *tracker = Some(ExtremumTracker { c, width: t.width });
                return Some(v);
            }
        }
        *tracker = None; // fall through to a full rescan
    }

    let scan = ScanCtrl { grid_points: 320, ..ScanCtrl::default() };
    let profile = scan_profile(&params, &ctrl, &scan).ok()?;
    // the fold structure always sits inside the outermost crossing root
    let root_floor = profile.roots.first().map(|r| r.0).unwrap_or(f64::NEG_INFINITY);
    let pick = if maximize {
        // outermost interior local maximum
        profile.maxima.iter().find(|(c, _)| *c > root_floor).copied()
    } else {
        // innermost interior local minimum
        profile.minima.iter().rev().find(|(c, _)| *c > root_floor).copied()
    }?;
    let spacing = if profile.cs.len() > 1 { profile.cs[1] - profile.cs[0] } else { 0.1 };
    *tracker = Some(ExtremumTracker { c: pick.0, width: 3.0 * spacing.max(0.02) });
    Some(pick.1)
}

/// Traces one fold point: bisects the extremal displacement in `b`.
///
/// Marching starts at the grazing value and walks down with geometric steps
/// until the objective changes sign; reaching the floor without a bracket
/// reports `RootNotBracketed` (the window has closed: `a >= a0`).
pub fn trace_double_cycle_at(
    kind: DoubleCycleKind,
    a: f64,
    delta: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let a1 = a + 1.0;
    let (phi1, _) = trace_grazing_at(a, delta, 1e-6)?;
    let hopf = -a1 * a1;

    let mut tracker: Option<ExtremumTracker> = None;
    let obj = |b: f64, tr: &mut Option<ExtremumTracker>| -> f64 {
        fold_objective(kind, b, a, delta, tr).unwrap_or(f64::NEG_INFINITY)
    };

    // establish a sign bracket [b_lo, b_hi] with obj(b_lo) > 0 > obj(b_hi)
    let v_phi = obj(phi1, &mut tracker);
    let (mut b_lo, mut b_hi, mut v_lo) = if v_phi > 0.0 {
        // fold sits above the grazing curve (rho > phi1)
        let pad = 1e-7 * a1 * a1;
        let hi = hopf - pad;
        let mut tr = None;
        let v_hi = obj(hi, &mut tr);
        if !(v_hi < 0.0) {
            return Err(Error::RootNotBracketed("fold objective positive up to the Hopf locus"));
        }
        (phi1, hi, v_phi)
    } else {
        // march down from the grazing curve
        let floor = phi1 - 0.35 * a1 * a1;
        let mut step = 2e-5 * a1 * a1;
        let mut prev_b = phi1;
        loop {
            let b = (prev_b - step).max(floor);
            let v = obj(b, &mut tracker);
            if v > 0.0 {
                break (b, prev_b, v);
            }
            if b <= floor {
                return Err(Error::RootNotBracketed(
                    "fold objective stays negative down to the floor",
                ));
            }
            prev_b = b;
            step *= 1.7;
        }
    };

    // bisect on the extremal-displacement sign until the residual meets tol
    let width_floor = 1e-12 * a1 * a1;
    let mut best = (0.5 * (b_lo + b_hi), f64::INFINITY);
    for _ in 0..200 {
        let mid = 0.5 * (b_lo + b_hi);
        let v = obj(mid, &mut tracker);
        let r = if v.is_finite() { abs(v) } else { f64::INFINITY };
        if r < best.1 {
            best = (mid, r);
        }
        if r <= tol || b_hi - b_lo <= width_floor {
            break;
        }
        if v > 0.0 {
            b_lo = mid;
            v_lo = v;
        } else {
            b_hi = mid;
        }
    }
    let _ = v_lo;
    if best.1 > 10.0 * tol {
        // the objective jumps across zero without passing near it: the
        // extremum was born away from zero, not a fold of cycles (the
        // window has closed and this is its ghost)
        return Err(Error::RootNotBracketed("fold residual did not converge"));
    }
    Ok(best)
}

/// Fold curves over a grid; grid points past the window's end come back
/// invalid (used by [`estimate_a0`]).
pub fn trace_double_cycle(
    kind: DoubleCycleKind,
    a_grid: &[f64],
    delta: f64,
    tol: f64,
) -> Vec<CurveSample> {
    let curve_kind = match kind {
        DoubleCycleKind::Dl1 => CurveKind::Dl1,
        DoubleCycleKind::Dl2 => CurveKind::Dl2,
    };
    a_grid
        .iter()
        .map(|&a| match trace_double_cycle_at(kind, a, delta, tol) {
            Ok((b, residual)) => {
                CurveSample { a, b, delta, kind: curve_kind, residual, valid: true }
            }
            Err(_) => invalid_sample(a, delta, curve_kind),
        })
        .collect()
}

/// Largest `a` for which the three-crossing-cycle window (and hence the fold
/// pair) still exists, bisected on the validity of the `Dl1` trace.
pub fn estimate_a0(delta: f64, tol: f64) -> Result<f64> {
    if !(delta > 0.0 && tol > 0.0) {
        return Err(Error::Domain("estimate_a0 needs delta > 0, tol > 0"));
    }
    let probe = |a: f64| trace_double_cycle_at(DoubleCycleKind::Dl1, a, delta, 1e-4).is_ok();
    let ladder = [1.1, 1.25, 1.45, 1.8, 2.4, 3.2, 4.2, 5.5];
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for &a in &ladder {
        if probe(a) {
            lo = Some(a);
        } else if lo.is_some() {
            hi = Some(a);
            break;
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        (Some(l), None) => return Ok(l), // window open across the whole ladder
        (None, _) => return Err(Error::RootNotBracketed("no valid fold on the probe ladder")),
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Region labels of the fixed-`delta` slice (Hopf `H`, grazing `G1`/`G2`,
/// folds `DL11`/`DL12`/`DL2`, their meeting points `P`, `Q`, and the open
/// regions `I`-`V`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::upper_case_acronyms)]
pub enum GlobalRegionLabel {
    I,
    II,
    III,
    IV,
    V,
    H,
    G1,
    G2,
    DL11,
    DL12,
    DL2,
    P,
    Q,
}

/// A traced slice of the bifurcation diagram at fixed `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSlice {
    pub delta: f64,
    pub hopf: Vec<CurveSample>,
    pub grazing: Vec<CurveSample>,
    pub dl1: Vec<CurveSample>,
    pub dl2: Vec<CurveSample>,
    pub a0_estimate: f64,
    /// Crossings of the grazing and `rho1` curves (`b = phi1 = rho1`); the
    /// slice records every sign change of `phi1 - rho1`.
    pub p_points: Vec<(f64, f64)>,
    /// Merge point of `rho1` and `rho2`, when the two folds collapse within
    /// coverage.
    pub q_point: Option<(f64, f64)>,
}

fn interp(samples: &[CurveSample], a: f64) -> Option<f64> {
    let valid: Vec<&CurveSample> = samples.iter().filter(|s| s.valid).collect();
    if valid.len() < 2 {
        return valid.first().filter(|s| s.a == a).map(|s| s.b);
    }
    if a < valid[0].a || a > valid[valid.len() - 1].a {
        return None;
    }
    for w in valid.windows(2) {
        if a >= w[0].a && a <= w[1].a {
            let t = if w[1].a > w[0].a { (a - w[0].a) / (w[1].a - w[0].a) } else { 0.0 };
            return Some(w[0].b + t * (w[1].b - w[0].b));
        }
    }
    None
}

/// Assembles a slice from already traced curves: locates `P`, `Q` and the
/// window end.
pub fn assemble_slice(
    delta: f64,
    hopf: Vec<CurveSample>,
    grazing: Vec<CurveSample>,
    dl1: Vec<CurveSample>,
    dl2: Vec<CurveSample>,
    a0_estimate: f64,
) -> DiagramSlice {
    // P: sign changes of phi1 - rho1 on the overlap, solved on the linear
    // interpolants segment by segment
    let mut p_points = Vec::new();
    let overlap: Vec<(f64, f64, f64)> = grazing
        .iter()
        .filter(|s| s.valid)
        .filter_map(|g| interp(&dl1, g.a).map(|r| (g.a, g.b, r)))
        .collect();
    for w in overlap.windows(2) {
        let (a0, g0, r0) = w[0];
        let (a1, g1, r1) = w[1];
        let (d0, d1) = (g0 - r0, g1 - r1);
        if d0 == 0.0 {
            p_points.push((a0, g0));
        } else if (d0 > 0.0) != (d1 > 0.0) {
            let t = d0 / (d0 - d1);
            p_points.push((a0 + t * (a1 - a0), g0 + t * (g1 - g0)));
        }
    }

    // Q: the folds merge where rho1 - rho2 collapses; report the tightest
    // valid approach when it dips under tolerance, else the coverage end
    let mut q_point = None;
    let mut best_gap = f64::INFINITY;
    for s in dl1.iter().filter(|s| s.valid) {
        if let Some(r2) = interp(&dl2, s.a) {
            let gap = abs(s.b - r2);
            if gap < best_gap {
                best_gap = gap;
                q_point = Some((s.a, 0.5 * (s.b + r2)));
            }
        }
    }
    let q_tol = 5e-3 * delta.max(1.0);
    if best_gap > q_tol {
        // no merge within coverage: the window closes at a0 instead
        q_point = None;
    }

    DiagramSlice { delta, hopf, grazing, dl1, dl2, a0_estimate, p_points, q_point }
}

/// Traces all four curves of the slice and assembles it.
pub fn diagram_slice(delta: f64, a_grid: &[f64], tol: f64) -> Result<DiagramSlice> {
    if !(delta > 0.0) {
        return Err(Error::Domain("diagram_slice needs delta > 0"));
    }
    let hopf = a_grid
        .iter()
        .map(|&a| CurveSample {
            a,
            b: -(a + 1.0) * (a + 1.0),
            delta,
            kind: CurveKind::Hopf,
            residual: 0.0,
            valid: a > 1.0,
        })
        .collect();
    let grazing = trace_grazing(a_grid, delta, tol);
    let dl1 = trace_double_cycle(DoubleCycleKind::Dl1, a_grid, delta, tol);
    let dl2 = trace_double_cycle(DoubleCycleKind::Dl2, a_grid, delta, tol);
    let a0_estimate = {
        let last_valid = dl1.iter().rev().find(|s| s.valid).map(|s| s.a);
        let first_invalid = dl1.iter().find(|s| !s.valid && last_valid.is_some_and(|l| s.a > l));
        match (last_valid, first_invalid) {
            (Some(lo), Some(hi)) => {
                let mut lo = lo;
                let mut hi = hi.a;
                while hi - lo > 0.02 * lo {
                    let mid = 0.5 * (lo + hi);
                    if trace_double_cycle_at(DoubleCycleKind::Dl1, mid, delta, 1e-4).is_ok() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            (Some(lo), None) => lo,
            _ => f64::NAN,
        }
    };
    Ok(assemble_slice(delta, hopf, grazing, dl1, dl2, a0_estimate))
}

/// Classifies `(a, b)` against the slice's interpolated curves per the
/// region definitions, with boundary snapping.
pub fn classify_global(
    a: f64,
    b: f64,
    delta: f64,
    slice: &DiagramSlice,
) -> Result<GlobalRegionLabel> {
    if slice.delta != delta {
        return Err(Error::Domain("slice delta mismatch"));
    }
    if !(a > 1.0) {
        return Err(Error::Domain("classification needs a > 1"));
    }
    let hopf = -(a + 1.0) * (a + 1.0);
    let snap = 1e-6;
    let phi1 = interp(&slice.grazing, a).ok_or(Error::OutOfCoverage { a })?;
    if abs(b - hopf) <= snap {
        return Ok(GlobalRegionLabel::H);
    }
    if b > hopf {
        return Ok(GlobalRegionLabel::I);
    }
    let rho1 = interp(&slice.dl1, a);
    let rho2 = interp(&slice.dl2, a);

    match (rho1, rho2) {
        (Some(r1), r2) => {
            if let Some(r2) = r2 {
                if abs(b - r1) <= snap && abs(r1 - r2) <= snap {
                    return Ok(GlobalRegionLabel::Q);
                }
                if abs(b - r2) <= snap {
                    return Ok(GlobalRegionLabel::DL2);
                }
            }
            if abs(b - phi1) <= snap && abs(b - r1) <= snap {
                return Ok(GlobalRegionLabel::P);
            }
            if abs(b - r1) <= snap {
                // DL11 is the branch with phi1 > rho1
                return Ok(if phi1 > r1 {
                    GlobalRegionLabel::DL11
                } else {
                    GlobalRegionLabel::DL12
                });
            }
            if abs(b - phi1) <= snap {
                return Ok(if phi1 < r1 { GlobalRegionLabel::G1 } else { GlobalRegionLabel::G2 });
            }
            if b > phi1.max(r1) {
                return Ok(GlobalRegionLabel::II);
            }
            if r1 > phi1 && b > phi1 && b < r1 {
                return Ok(GlobalRegionLabel::III);
            }
            // the three-cycle window needs the inner fold; with no rho2
            // sample the point below it cannot be separated from V
            if let Some(r2) = r2 {
                if b > r2 && b < phi1.min(r1) {
                    return Ok(GlobalRegionLabel::IV);
                }
            }
            Ok(GlobalRegionLabel::V)
        }
        _ => {
            // past the window: only Hopf and grazing remain
            if abs(b - phi1) <= snap {
                return Ok(GlobalRegionLabel::G2);
            }
            Ok(if b > phi1 { GlobalRegionLabel::II } else { GlobalRegionLabel::V })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_values() {
        assert_eq!(hopf_b(4.0).unwrap(), -25.0);
        assert!((hopf_b(1.2).unwrap() - (-4.84)).abs() < 1e-12);
        assert_eq!(hopf_b(2.0).unwrap(), -9.0);
        assert!(hopf_b(1.0).is_err());
    }

    #[test]
    fn grazing_example_values() {
        let (b, res) = trace_grazing_at(4.0, 0.1, 1e-4).unwrap();
        assert!((b - (-26.083)).abs() < 0.02, "phi1(4, 0.1) = {b}");
        assert!(res < 1e-3);
        let (b, _) = trace_grazing_at(1.2, 0.1, 1e-4).unwrap();
        assert!((b - (-5.93)).abs() < 0.01, "phi1(1.2, 0.1) = {b}");
        let (b, _) = trace_grazing_at(1.4, 0.1, 1e-4).unwrap();
        assert!((b - (-7.0)).abs() < 0.01, "phi1(1.4, 0.1) = {b}");
    }

    #[test]
    fn window_closes_between_example_two_and_four() {
        // the fold pair exists at a = 1.3 and is gone at a = 1.4
        assert!(trace_double_cycle_at(DoubleCycleKind::Dl1, 1.3, 0.1, 1e-6).is_ok());
        assert!(matches!(
            trace_double_cycle_at(DoubleCycleKind::Dl1, 1.4, 0.1, 1e-6),
            Err(Error::RootNotBracketed(_))
        ));
        let a0 = estimate_a0(0.1, 0.02).unwrap();
        assert!(a0 > 1.30 && a0 < 1.42, "a0(0.1) = {a0}");
    }

    #[test]
    fn double_cycle_folds_at_example_two() {
        let (r1, res1) = trace_double_cycle_at(DoubleCycleKind::Dl1, 1.2, 0.1, 1e-5).unwrap();
        assert!((r1 - (-5.908)).abs() < 0.01, "rho1(1.2, 0.1) = {r1}");
        assert!(res1 < 1e-4, "residual {res1}");
        let (r2, res2) = trace_double_cycle_at(DoubleCycleKind::Dl2, 1.2, 0.1, 1e-5).unwrap();
        assert!((r2 - (-5.9337)).abs() < 0.01, "rho2(1.2, 0.1) = {r2}");
        assert!(res2 < 1e-4, "residual {res2}");
        // ordering: rho2 < phi1 < rho1 < hopf at a = 1.2
        let (phi1, _) = trace_grazing_at(1.2, 0.1, 1e-6).unwrap();
        assert!(r2 < phi1 && phi1 < r1 && r1 < hopf_b(1.2).unwrap());
        assert!(r2 > -3.0 * 2.2 * 2.2);
    }
}
