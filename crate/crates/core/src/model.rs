//! The oscillator itself: parameters, the two charts, the scalar pieces
//! `F`, `f`, `g`, the energy function and the finite equilibrium.
//!
//! The system is
//!
//! ```text
//!   x' = y - F(x),   y' = -g(x)          (SD chart)
//!   x' = y,          y' = -g(x) - delta x^2 y - b_tilde y   (Lienard chart)
//! ```
//!
//! with `F(x) = delta (x^3/3 + b x)`, `f(x) = delta (x^2 + b)` and
//! `g(x) = x - sgn(x) - a`. The charts are related by
//! `y_lienard = y_sd - F(x)`.

use crate::error::{Error, Result};
use crate::math;
use core::f64::consts::PI;

/// Parameter triple `(a, b, delta)` with the derived `b_tilde = delta * b`.
///
/// Only `a > 1`, `delta > 0` is admissible; `b` is free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    a: f64,
    b: f64,
    delta: f64,
    b_tilde: f64,
}

impl Params {
    /// Validates and builds the parameter set.
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && delta.is_finite()) {
            return Err(Error::NonFinite("params must be finite"));
        }
        if a <= 1.0 {
            return Err(Error::Domain("a must be > 1"));
        }
        if delta <= 0.0 {
            return Err(Error::Domain("delta must be > 0"));
        }
        Ok(Params { a, b, delta, b_tilde: delta * b })
    }

    #[inline(always)]
    pub fn a(&self) -> f64 {
        self.a
    }
    #[inline(always)]
    pub fn b(&self) -> f64 {
        self.b
    }
    #[inline(always)]
    pub fn delta(&self) -> f64 {
        self.delta
    }
    #[inline(always)]
    pub fn b_tilde(&self) -> f64 {
        self.b_tilde
    }

    /// Same `(a, delta)` with a different `b`.
    pub fn with_b(&self, b: f64) -> Result<Self> {
        Params::new(self.a, b, self.delta)
    }

    /// Abscissa of the unique finite equilibrium.
    #[inline]
    pub fn equilibrium_x(&self) -> f64 {
        self.a + 1.0
    }
}

/// Which coordinates a phase point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `(x, y)` with `x' = y - F(x)`.
    Sd,
    /// `(x, x')`; obtained from the SD chart by `y -> y - F(x)`.
    Lienard,
}

/// A phase point tagged with its chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub chart: Chart,
}

impl PhasePoint {
    pub fn sd(x: f64, y: f64) -> Self {
        PhasePoint { x, y, chart: Chart::Sd }
    }

    pub fn lienard(x: f64, y: f64) -> Self {
        PhasePoint { x, y, chart: Chart::Lienard }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Converts to the requested chart; the map is the identity on `x`
    /// and shifts `y` by `F(x)`.
    pub fn to_chart(&self, chart: Chart, params: &Params) -> PhasePoint {
        if self.chart == chart {
            return *self;
        }
        let big_f = lienard_data(self.x, params).f_int;
        let y = match chart {
            Chart::Sd => self.y + big_f,
            Chart::Lienard => self.y - big_f,
        };
        PhasePoint { x: self.x, y, chart }
    }
}

/// The scalar constituents of the Lienard form at a given `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LienardData {
    /// `F(x) = delta (x^3/3 + b x)`, the integral of `f`.
    pub f_int: f64,
    /// `f(x) = delta (x^2 + b)`, the damping coefficient.
    pub f: f64,
    /// `g(x) = x - sgn(x) - a`, the discontinuous restoring force.
    pub g: f64,
}

/// Evaluates `F`, `f`, `g` at `x` with the convention `sgn(0) = 0`.
#[inline]
pub fn lienard_data(x: f64, params: &Params) -> LienardData {
    let (a, b, delta) = (params.a, params.b, params.delta);
    LienardData {
        f_int: delta * (x * x * x / 3.0 + b * x),
        f: delta * (x * x + b),
        g: x - math::sgn(x) - a,
    }
}

/// `g` evaluated with a frozen side of the switching line.
///
/// `side` should be `-1.0`, `0.0` or `1.0`; the integrator uses this to keep
/// one one-sided vector field per segment.
#[inline(always)]
pub(crate) fn g_sided(x: f64, side: f64, params: &Params) -> f64 {
    x - side - params.a
}

/// Vector field in the point's own chart.
pub fn vector_field(p: &PhasePoint, params: &Params) -> Result<(f64, f64)> {
    if !p.is_finite() {
        return Err(Error::NonFinite("phase point"));
    }
    Ok(vector_field_sided(p.x, p.y, p.chart, math::sgn(p.x), params))
}

/// Vector field with a frozen switching-line side.
#[inline(always)]
pub(crate) fn vector_field_sided(
    x: f64,
    y: f64,
    chart: Chart,
    side: f64,
    params: &Params,
) -> (f64, f64) {
    let g = g_sided(x, side, params);
    match chart {
        Chart::Sd => {
            let big_f = params.delta * (x * x * x / 3.0 + params.b * x);
            (y - big_f, -g)
        }
        Chart::Lienard => (y, -g - params.delta * x * x * y - params.b_tilde * y),
    }
}

/// Classification of the finite equilibrium `E_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumClass {
    Source,
    Sink,
    /// Trace zero: stable weak focus of order one.
    WeakFocusStableOrder1,
}

/// Everything there is to know about `E_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    /// Location in the SD chart: `(a + 1, F(a + 1))`.
    pub location: PhasePoint,
    pub jacobian_trace: f64,
    pub jacobian_det: f64,
    pub classification: EquilibriumClass,
    /// First focal value `pi * delta / 4`, reported for the weak focus.
    pub focal_value: Option<f64>,
}

/// Classifies `E_r` by the trace `-delta ((a+1)^2 + b)`; the determinant is 1.
pub fn equilibrium_report(params: &Params) -> EquilibriumReport {
    let a1 = params.a + 1.0;
    let trace = -params.delta * (a1 * a1 + params.b);
    // Tie tolerance relative to the natural scale of the trace formula.
    let tie = 1e-12 * params.delta * a1 * a1;
    let (classification, focal_value) = if math::abs(trace) <= tie {
        (EquilibriumClass::WeakFocusStableOrder1, Some(PI * params.delta / 4.0))
    } else if trace > 0.0 {
        (EquilibriumClass::Source, None)
    } else {
        (EquilibriumClass::Sink, None)
    };
    EquilibriumReport {
        location: PhasePoint::sd(a1, lienard_data(a1, params).f_int),
        jacobian_trace: trace,
        jacobian_det: 1.0,
        classification,
        focal_value,
    }
}

/// Energy `E(x, y) = x^2/2 - (sgn(x) + a) x + y^2/2` on SD coordinates.
///
/// Along the flow `dE/dt = -F(x) g(x)`. A point in the Lienard chart is
/// converted first.
pub fn energy(p: &PhasePoint, params: &Params) -> f64 {
    let q = p.to_chart(Chart::Sd, params);
    0.5 * q.x * q.x - (math::sgn(q.x) + params.a) * q.x + 0.5 * q.y * q.y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, b: f64, delta: f64) -> Params {
        Params::new(a, b, delta).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!((p(4.0, -24.9, 0.1).b_tilde() - (-2.49)).abs() < 1e-15);
        assert!(matches!(Params::new(1.0, -5.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(Params::new(2.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(Params::new(f64::NAN, 0.0, 1.0), Err(Error::NonFinite(_))));
        assert_eq!(p(2.0, 0.0, 1.0).b_tilde(), 0.0);
    }

    #[test]
    fn lienard_data_values() {
        let pr = p(4.0, -6.0, 0.1);
        let d0 = lienard_data(0.0, &pr);
        assert_eq!(d0.f_int, 0.0);
        assert_eq!(d0.f, 0.1 * -6.0);
        assert_eq!(d0.g, -4.0);
        // equilibrium abscissa zeroes g
        assert_eq!(lienard_data(5.0, &pr).g, 0.0);
        // hand evaluation of the cubic
        let d1 = lienard_data(1.0, &pr);
        assert!((d1.f_int - 0.1 * (1.0 / 3.0 - 6.0)).abs() < 1e-15);
    }

    #[test]
    fn field_vanishes_at_equilibrium() {
        let pr = p(4.0, -24.9, 0.1);
        let er = equilibrium_report(&pr).location;
        let (dx, dy) = vector_field(&er, &pr).unwrap();
        assert!(dx.abs() < 1e-13 && dy.abs() < 1e-13);
        let el = er.to_chart(Chart::Lienard, &pr);
        let (dx, dy) = vector_field(&el, &pr).unwrap();
        assert!(dx.abs() < 1e-13 && dy.abs() < 1e-13);
    }

    #[test]
    fn field_at_origin_uses_sgn_zero() {
        let pr = p(4.0, -5.0, 0.1);
        let o = PhasePoint::lienard(0.0, 0.0);
        let (dx, dy) = vector_field(&o, &pr).unwrap();
        assert_eq!((dx, dy), (0.0, 4.0));
        // one-sided limits of y' at the origin are a -+ 1
        let minus = vector_field_sided(0.0, 0.0, Chart::Lienard, -1.0, &pr).1;
        let plus = vector_field_sided(0.0, 0.0, Chart::Lienard, 1.0, &pr).1;
        assert_eq!(minus, 3.0);
        assert_eq!(plus, 5.0);
        assert!(minus > 0.0 && plus > 0.0, "x = 0 is a crossing region near the origin");
    }

    #[test]
    fn chart_pushforward_identity() {
        // dy_lienard = dy_sd - f(x) dx_sd at random points
        let pr = p(1.7, -8.3, 0.23);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let x = rng.gen_range(-5.0..5.0);
            let y = rng.gen_range(-5.0..5.0);
            let sd = PhasePoint::sd(x, y);
            let (dx_sd, dy_sd) = vector_field(&sd, &pr).unwrap();
            let li = sd.to_chart(Chart::Lienard, &pr);
            let (_, dy_li) = vector_field(&li, &pr).unwrap();
            let expect = dy_sd - lienard_data(x, &pr).f * dx_sd;
            assert!((dy_li - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn chart_round_trip() {
        let pr = p(2.4, -11.0, 0.37);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = rng.gen_range(-20.0..20.0);
            let y = rng.gen_range(-20.0..20.0);
            let q = PhasePoint::lienard(x, y);
            let back = q.to_chart(Chart::Sd, &pr).to_chart(Chart::Lienard, &pr);
            assert!((back.x - x).abs() <= 1e-14 * (1.0 + x.abs()));
            assert!((back.y - y).abs() <= 1e-14 * (1.0 + y.abs()).max(lienard_data(x, &pr).f_int.abs()));
        }
    }

    #[test]
    fn equilibrium_classification_examples() {
        let r = equilibrium_report(&p(4.0, -24.9, 0.1));
        assert!((r.jacobian_trace - (-0.01)).abs() < 1e-12);
        assert_eq!(r.classification, EquilibriumClass::Sink);
        assert_eq!(r.jacobian_det, 1.0);

        let r = equilibrium_report(&p(4.0, -25.7, 0.1));
        assert!((r.jacobian_trace - 0.07).abs() < 1e-12);
        assert_eq!(r.classification, EquilibriumClass::Source);

        let r = equilibrium_report(&p(4.0, -25.0, 0.1));
        assert_eq!(r.jacobian_trace, 0.0);
        assert_eq!(r.classification, EquilibriumClass::WeakFocusStableOrder1);
        assert_eq!(r.focal_value, Some(PI * 0.1 / 4.0));
        // location in both charts
        assert_eq!(r.location.x, 5.0);
        assert_eq!(r.location.to_chart(Chart::Lienard, &p(4.0, -25.0, 0.1)).y, 0.0);
    }

    #[test]
    fn energy_values() {
        let pr = p(4.0, -25.0, 0.1);
        assert_eq!(energy(&PhasePoint::sd(0.0, 0.0), &pr), 0.0);
        let x = 2.5;
        let e = energy(&PhasePoint::sd(x, 0.0), &pr);
        assert!((e - (x * x / 2.0 - (1.0 + 4.0) * x)).abs() < 1e-14);
    }

    #[test]
    fn energy_derivative_identity_pointwise() {
        // dE/dt == -F(x) g(x): compare a two-sided flow difference quotient
        // (tiny RK4 steps) against the closed form, away from x = 0.
        let pr = p(1.6, -9.0, 0.15);
        let rk4 = |p0: PhasePoint, h: f64| -> PhasePoint {
            let f = |q: &PhasePoint| vector_field(q, &pr).unwrap();
            let k1 = f(&p0);
            let q2 = PhasePoint::sd(p0.x + 0.5 * h * k1.0, p0.y + 0.5 * h * k1.1);
            let k2 = f(&q2);
            let q3 = PhasePoint::sd(p0.x + 0.5 * h * k2.0, p0.y + 0.5 * h * k2.1);
            let k3 = f(&q3);
            let q4 = PhasePoint::sd(p0.x + h * k3.0, p0.y + h * k3.1);
            let k4 = f(&q4);
            PhasePoint::sd(
                p0.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                p0.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            )
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x: f64 = rng.gen_range(0.4..6.0) * if rng.gen_bool(0.3) { -1.0 } else { 1.0 };
            let y = rng.gen_range(-4.0..4.0);
            let q = PhasePoint::sd(x, y);
            let h = 1e-5;
            let de = (energy(&rk4(q, h), &pr) - energy(&rk4(q, -h), &pr)) / (2.0 * h);
            let d = lienard_data(x, &pr);
            let expect = -d.f_int * d.g;
            assert!(
                (de - expect).abs() <= 1e-8 * (1.0 + expect.abs()),
                "x={x} y={y}: {de} vs {expect}"
            );
        }
    }
}
