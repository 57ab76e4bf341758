//! Closed-form first-order Melnikov function `M(h)` of the unperturbed
//! piecewise-harmonic ovals, its derivatives and parameter partials, the
//! zero diagram in the `(a, b)` half-plane `b < -(a+1)^2`, and the curves
//! `b1`, `b2`, `b3` with the special points `A`, `B`, `C`.
//!
//! The unperturbed ovals `Gamma_h` are glued from two circle arcs centered
//! at `(a - 1, 0)` (left of the switching line) and `(a + 1, 0)` (right),
//! meeting the `y`-axis at `y = +-sqrt(2h)`. Simple zeros of `M` over
//! `h > 0` predict crossing limit cycles for small `delta`; `M(0)` and
//! `M'(0)` control the grazing and the inner fold.

use crate::bifurcation::{CurveKind, CurveSample};
use crate::error::{Error, Result};
use crate::math::{abs, asin, atan, sqrt};
use alloc::vec::Vec;
use core::f64::consts::PI;

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Below this `h` the closed form is replaced by its `h -> 0` limit
/// (the square-root terms cancel only in exact arithmetic).
const H_LIMIT_SWITCH: f64 = 1e-12;

/// Multiplicity tolerance on `|M|` at a critical point.
pub const MULT_TOL: f64 = 1e-8;

/// Stand-in for `h = +infinity`; `M` is dominated by `-pi h^2` there.
pub fn h_cap(a: f64) -> f64 {
    100.0 * (a + 1.0) * (a + 1.0)
}

fn require_params(h: f64, a: f64) -> Result<()> {
    if !(h.is_finite() && a.is_finite()) {
        return Err(Error::NonFinite("melnikov arguments"));
    }
    if a <= 1.0 {
        return Err(Error::Domain("melnikov needs a > 1"));
    }
    if h < 0.0 {
        return Err(Error::Domain("melnikov needs h >= 0"));
    }
    Ok(())
}

/// `M(0) = -pi/4 (a+1)^2 (5a^2 + 10a + 4b + 5)`; vanishes at
/// `b = -5/4 (a+1)^2`.
pub fn m_at_zero(a: f64, b: f64) -> f64 {
    let a1 = a + 1.0;
    -0.25 * PI * a1 * a1 * (5.0 * a * a + 10.0 * a + 4.0 * b + 5.0)
}

/// `M'(0) = -(3 + 6a + 3a^2 + 2b) pi`; vanishes at `b = -3/2 (a+1)^2`.
pub fn m1_at_zero(a: f64, b: f64) -> f64 {
    -(3.0 + 6.0 * a + 3.0 * a * a + 2.0 * b) * PI
}

#[inline]
fn arctans(h: f64, a: f64) -> (f64, f64) {
    let s2h = sqrt(2.0 * h);
    (atan(s2h / (a - 1.0)), atan(s2h / (a + 1.0)))
}

/// The full closed form of the first-order Melnikov function.
pub fn melnikov(h: f64, a: f64, b: f64) -> Result<f64> {
    require_params(h, a)?;
    if h < H_LIMIT_SWITCH {
        return Ok(m_at_zero(a, b));
    }
    let (at1, at2) = arctans(h, a);
    let sh = sqrt(h);
    let a2 = a * a;
    let v = -0.25 * PI * (a + 1.0) * (a + 1.0) * (5.0 * a2 + 10.0 * a + 4.0 * b + 5.0)
        - (15.0 * a2 + 4.0 * b + 5.0) * sh / SQRT2
        - (3.0 * a2 + 6.0 * a + 2.0 * b + 3.0) * PI * h
        - 13.0 / 3.0 * SQRT2 * h * sh
        - PI * h * h
        - 0.25 * (a2 - 2.0 * a + 2.0 * h + 1.0) * (5.0 * a2 - 10.0 * a + 4.0 * b + 2.0 * h + 5.0)
            * at1
        + 0.25 * (a2 + 2.0 * a + 2.0 * h + 1.0) * (5.0 * a2 + 10.0 * a + 4.0 * b + 2.0 * h + 5.0)
            * at2;
    Ok(v)
}

fn m_prime(h: f64, a: f64, b: f64) -> f64 {
    if h < H_LIMIT_SWITCH {
        return m1_at_zero(a, b);
    }
    let (at1, at2) = arctans(h, a);
    let sh = sqrt(h);
    let s2h = SQRT2 * sh;
    let a2 = a * a;
    let p = -0.25 * (a2 - 2.0 * a + 2.0 * h + 1.0) * (5.0 * a2 - 10.0 * a + 4.0 * b + 2.0 * h + 5.0);
    let q = 0.25 * (a2 + 2.0 * a + 2.0 * h + 1.0) * (5.0 * a2 + 10.0 * a + 4.0 * b + 2.0 * h + 5.0);
    let dp = -(3.0 * a2 - 6.0 * a + 2.0 * b + 2.0 * h + 3.0);
    let dq = 3.0 * a2 + 6.0 * a + 2.0 * b + 2.0 * h + 3.0;
    -(15.0 * a2 + 4.0 * b + 5.0) / (2.0 * SQRT2 * sh)
        - (3.0 * a2 + 6.0 * a + 2.0 * b + 3.0) * PI
        - 6.5 * SQRT2 * sh
        - 2.0 * PI * h
        + p * (a - 1.0) / (s2h * ((a - 1.0) * (a - 1.0) + 2.0 * h))
        + q * (a + 1.0) / (s2h * ((a + 1.0) * (a + 1.0) + 2.0 * h))
        + dp * at1
        + dq * at2
}

fn m_second(h: f64, a: f64, b: f64) -> f64 {
    let (at1, at2) = arctans(h, a);
    let sh = sqrt(h);
    let a2 = a * a;
    let dl = a2 - 2.0 * a + 2.0 * h + 1.0;
    let dr = a2 + 2.0 * a + 2.0 * h + 1.0;
    let m20 = 2.0 * SQRT2 * b * (2.0 * h - a2 + 1.0) / (sh * dl * dr);
    let t = a2 - SQRT2 * sh - 1.0;
    let m21 = -2.0
        * (t * t
            + (4.0 * PI * (a2 + 1.0) - 2.0) * h
            + (PI - 1.0) * (a2 - 1.0) * (a2 - 1.0)
            + 4.0 * SQRT2 * h * sh
            + 4.0 * PI * h * h)
        / (dl * dr)
        - 2.0 * at1
        + 2.0 * at2;
    m20 + m21
}

fn m_third(h: f64, a: f64, b: f64) -> f64 {
    let sh = sqrt(h);
    let a2 = a * a;
    let dl = a2 - 2.0 * a + 2.0 * h + 1.0;
    let dr = a2 + 2.0 * a + 2.0 * h + 1.0;
    let den = dl * dl * dr * dr;
    let u = -a2 + 2.0 * h + 1.0;
    let m30 = 8.0 * SQRT2 * sh * (u * u - 4.0 * a2 * (a2 - 1.0)) / den;
    let a21 = a2 - 1.0;
    let poly = -(a21 * a21 * a21)
        + (-14.0 * a2 * a2 + 4.0 * a2 + 10.0) * h
        + (28.0 - 12.0 * a2) * h * h
        + 24.0 * h * h * h;
    let m31 = -SQRT2 * b * poly / (h * sh * den);
    m30 + m31
}

/// Derivatives of `M` in `h`: the analytic first derivative and the paper's
/// split forms for the second and third.
pub fn melnikov_deriv(h: f64, a: f64, b: f64, order: u8) -> Result<f64> {
    require_params(h, a)?;
    match order {
        1 => Ok(m_prime(h, a, b)),
        2 | 3 => {
            if h <= 0.0 {
                return Err(Error::Domain("higher derivatives need h > 0"));
            }
            Ok(if order == 2 { m_second(h, a, b) } else { m_third(h, a, b) })
        }
        _ => Err(Error::Domain("derivative order must be 1, 2 or 3")),
    }
}

/// Parameter partials of `M` and `M'`, plus the Wronskian-like `S1`
/// (evaluated along `b = -5/4 (a+1)^2` regardless of the supplied `b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelnikovPartials {
    pub dm_db: f64,
    pub dm_da: f64,
    pub dm1_db: f64,
    pub dm1_da: f64,
    pub s1: f64,
}

fn dm_db_at(h: f64, a: f64) -> f64 {
    let (at1, at2) = arctans(h, a);
    let a2 = a * a;
    -PI * (a + 1.0) * (a + 1.0) - 2.0 * SQRT2 * sqrt(h) - 2.0 * PI * h
        - (a2 - 2.0 * a + 2.0 * h + 1.0) * at1
        + (a2 + 2.0 * a + 2.0 * h + 1.0) * at2
}

fn dm1_db_at(h: f64, a: f64) -> f64 {
    let (at1, at2) = arctans(h, a);
    -2.0 * (at1 - at2 + PI)
}

fn dm_da_at(h: f64, a: f64, b: f64) -> f64 {
    let (at1, at2) = arctans(h, a);
    let sh = sqrt(h);
    let a2 = a * a;
    let w1 = (a - 1.0) * at1 - (a + 1.0) * at2 + PI * (a + 1.0);
    -2.0 * b * w1 - 5.0 * PI * a2 * a - 15.0 * PI * a2
        - a * (6.0 * PI * h + 20.0 * SQRT2 * sh + 15.0 * PI)
        - PI * (6.0 * h + 5.0)
        - (a - 1.0) * (5.0 * a2 - 10.0 * a + 6.0 * h + 5.0) * at1
        + (a + 1.0) * (5.0 * a2 + 10.0 * a + 6.0 * h + 5.0) * at2
}

fn dm1_da_at(h: f64, a: f64, b: f64) -> f64 {
    let (at1, at2) = arctans(h, a);
    let a2 = a * a;
    8.0 * SQRT2 * sqrt(h) * a * (b - 2.0 * h)
        / ((a2 - 2.0 * a + 2.0 * h + 1.0) * (a2 + 2.0 * a + 2.0 * h + 1.0))
        + 6.0 * (a + 1.0) * at2
        + 6.0 * (1.0 - a) * at1
        - 6.0 * PI * (a + 1.0)
}

pub fn melnikov_partials(h: f64, a: f64, b: f64) -> Result<MelnikovPartials> {
    require_params(h, a)?;
    if h <= 0.0 {
        return Err(Error::Domain("partials need h > 0"));
    }
    let b54 = -1.25 * (a + 1.0) * (a + 1.0);
    let s1 = dm_da_at(h, a, b54) * dm1_db_at(h, a) - dm_db_at(h, a) * dm1_da_at(h, a, b54);
    Ok(MelnikovPartials {
        dm_db: dm_db_at(h, a),
        dm_da: dm_da_at(h, a, b),
        dm1_db: dm1_db_at(h, a),
        dm1_da: dm1_da_at(h, a, b),
        s1,
    })
}

/// `S1(h, a)` alone (along `b = -5/4 (a+1)^2`).
pub fn s1(h: f64, a: f64) -> Result<f64> {
    Ok(melnikov_partials(h, a, 0.0)?.s1)
}

/// Line integral of `(x^3/3 + b x) dy` over the two clockwise arcs of
/// `Gamma_h`, by adaptive quadrature on the angle parametrization of the
/// four `y`-branches. Independent of the closed form.
pub fn melnikov_oracle(h: f64, a: f64, b: f64) -> Result<f64> {
    require_params(h, a)?;
    if h == 0.0 {
        return Ok(m_at_zero(a, b));
    }
    let phi = |x: f64| x * x * x / 3.0 + b * x;
    let s2h = sqrt(2.0 * h);
    let rl = sqrt(2.0 * h + (a - 1.0) * (a - 1.0));
    let rr = sqrt(2.0 * h + (a + 1.0) * (a + 1.0));
    let th_l = asin((s2h / rl).min(1.0));
    let th_r = asin((s2h / rr).min(1.0));
    // left circle, left branch, y from -sqrt(2h) to sqrt(2h)
    let f_left = |th: f64| phi((a - 1.0) - rl * libcos(th)) * rl * libcos(th);
    // right circle, left branch
    let f_right_inner = |th: f64| phi((a + 1.0) - rr * libcos(th)) * rr * libcos(th);
    // right circle, right branch (descending y: sign flips)
    let f_right_outer = |th: f64| phi((a + 1.0) + rr * libcos(th)) * rr * libcos(th);

    let tol = 1e-12 * (1.0 + abs(m_at_zero(a, b)) + h * h);
    let i1 = adaptive_simpson(&f_left, -th_l, th_l, tol)?;
    let i2 = adaptive_simpson(&f_right_inner, th_r, PI / 2.0, tol)?;
    let i3 = -adaptive_simpson(&f_right_outer, -PI / 2.0, PI / 2.0, tol)?;
    let i4 = adaptive_simpson(&f_right_inner, -PI / 2.0, -th_r, tol)?;
    Ok(i1 + i2 + i3 + i4)
}

#[inline]
fn libcos(x: f64) -> f64 {
    // cos via sqrt-free shim:ads no dependency; sin/cos are only needed here
    #[cfg(feature = "std")]
    {
        x.cos()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::cos(x)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = left + right - whole;
        if abs(err) <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure { estimate: left + right, error: abs(err) });
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Critical-point skeleton of `M` at fixed `(a, b)`.
///
/// `h2` is the unique zero of `M''`; `h11 < h2 < h12` are the zeros of `M'`
/// and exist exactly when `M'(h2) > 0` (with the convention `h11 = 0` when
/// `M'(0) >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelnikovShape {
    pub h2: f64,
    pub h11: Option<f64>,
    pub h12: Option<f64>,
    pub m_at_h2: f64,
    pub m1_at_h2: f64,
    pub m_at_h11: Option<f64>,
    pub m_at_h12: Option<f64>,
}

fn bisect(
    f: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    tol: f64,
) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn require_region(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("melnikov parameters"));
    }
    if a <= 1.0 {
        return Err(Error::Domain("zero diagram needs a > 1"));
    }
    if b >= -(a + 1.0) * (a + 1.0) {
        return Err(Error::Domain("zero diagram needs b < -(a+1)^2"));
    }
    Ok(())
}

pub fn melnikov_shape(a: f64, b: f64) -> Result<MelnikovShape> {
    require_region(a, b)?;
    let h_top = 0.5 * (a * a - 1.0);
    // M'' -> +inf as h -> 0+ (b < 0) and M''(h_top) < 0
    let mpp = |h: f64| m_second(h, a, b);
    let mut lo = 1e-12 * h_top;
    let mut flo = mpp(lo);
    while flo <= 0.0 {
        lo *= 0.25;
        if lo < 1e-300 {
            return Err(Error::RootNotBracketed("M'' positive end not found"));
        }
        flo = mpp(lo);
    }
    if mpp(h_top) >= 0.0 {
        return Err(Error::RootNotBracketed("M''((a^2-1)/2) should be negative"));
    }
    let h2 = bisect(&mpp, lo, h_top, flo, 1e-10 * (1.0 + h_top).min(1.0));

    let m1_h2 = m_prime(h2, a, b);
    let (mut h11, mut h12) = (None, None);
    if m1_h2 > 0.0 {
        let mp = |h: f64| m_prime(h, a, b);
        let m1_0 = m1_at_zero(a, b);
        let lo11 = 1e-9 * h2;
        if m1_0 >= -1e-12 * (a + 1.0) * (a + 1.0) || mp(lo11) >= 0.0 {
            // degenerate anchor at b <= -3/2 (a+1)^2 (or a zero of M' below
            // numerically resolvable h)
            h11 = Some(0.0);
        } else {
            h11 = Some(bisect(&mp, lo11, h2, mp(lo11), 1e-10));
        }
        let mut cap = h_cap(a);
        let mut fcap = mp(cap);
        let mut grow = 0;
        while fcap >= 0.0 && grow < 20 {
            cap *= 2.0;
            fcap = mp(cap);
            grow += 1;
        }
        if fcap >= 0.0 {
            return Err(Error::RootNotBracketed("M' stays positive out to the cap"));
        }
        h12 = Some(bisect(&mp, h2, cap, m1_h2, 1e-10 * (1.0 + cap / h_cap(a))));
    }
    Ok(MelnikovShape {
        h2,
        h11,
        h12,
        m_at_h2: melnikov(h2, a, b)?,
        m1_at_h2: m1_h2,
        m_at_h11: match h11 {
            Some(h) => Some(melnikov(h, a, b)?),
            None => None,
        },
        m_at_h12: match h12 {
            Some(h) => Some(melnikov(h, a, b)?),
            None => None,
        },
    })
}

/// One zero of `M` with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub h: f64,
    pub multiplicity: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    /// Ascending in `h`.
    pub zeros: Vec<Zero>,
    pub total_with_multiplicity: u32,
}

/// All zeros of `M` on `(0, h_cap)` with multiplicities, by sign-bracketing
/// between the critical points.
pub fn melnikov_zeros(a: f64, b: f64) -> Result<ZeroReport> {
    require_region(a, b)?;
    let shape = melnikov_shape(a, b)?;
    let cap = h_cap(a);
    let m = |h: f64| melnikov(h, a, b).unwrap_or(f64::NAN);
    let mut zeros: Vec<Zero> = Vec::new();

    let m0 = m_at_zero(a, b);
    let m_cap = m(cap);
    if m_cap >= 0.0 {
        return Err(Error::RootNotBracketed("M(h_cap) should be negative"));
    }

    match (shape.h11, shape.h12) {
        (Some(h11), Some(h12)) => {
            let m11 = shape.m_at_h11.unwrap();
            let m12 = shape.m_at_h12.unwrap();
            let triple = abs(shape.m_at_h2) < MULT_TOL && abs(shape.m1_at_h2) < MULT_TOL;
            if triple {
                zeros.push(Zero { h: shape.h2, multiplicity: 3 });
            } else if abs(m11) < MULT_TOL && h11 > 0.0 {
                // double at the local minimum plus the simple tail zero
                zeros.push(Zero { h: h11, multiplicity: 2 });
                zeros.push(Zero {
                    h: bisect(&m, h12, cap, m12, 1e-10),
                    multiplicity: 1,
                });
            } else if abs(m12) < MULT_TOL {
                // double at the local maximum; a simple zero before it when
                // M(0) > 0 dips through the negative minimum
                if m0 > MULT_TOL && m11 < 0.0 {
                    zeros.push(Zero {
                        h: bisect(&m, 1e-12, h11.max(1e-11), m0, 1e-10),
                        multiplicity: 1,
                    });
                }
                zeros.push(Zero { h: h12, multiplicity: 2 });
            } else {
                // simple zeros between sign changes of the skeleton
                // (0, h11], [h11, h12], [h12, cap)
                if h11 > 0.0 && (m0 > 0.0) != (m11 > 0.0) {
                    zeros.push(Zero {
                        h: bisect(&m, 1e-12, h11, m0, 1e-10),
                        multiplicity: 1,
                    });
                }
                if (m11 > 0.0) != (m12 > 0.0) {
                    zeros.push(Zero {
                        h: bisect(&m, h11.max(1e-12), h12, m11, 1e-10),
                        multiplicity: 1,
                    });
                }
                if (m12 > 0.0) != (m_cap > 0.0) {
                    zeros.push(Zero {
                        h: bisect(&m, h12, cap, m12, 1e-10),
                        multiplicity: 1,
                    });
                }
            }
        }
        _ => {
            // M' <= 0 everywhere: M monotone decreasing from M(0)
            if m0 > MULT_TOL {
                zeros.push(Zero { h: bisect(&m, 1e-12, cap, m0, 1e-10), multiplicity: 1 });
            }
        }
    }

    zeros.sort_by(|u, v| u.h.partial_cmp(&v.h).unwrap());
    let total = zeros.iter().map(|z| z.multiplicity as u32).sum();
    Ok(ZeroReport { zeros, total_with_multiplicity: total })
}

/// Labels of the zero-count diagram in `(a, b)`, `b < -(a+1)^2`:
/// the open regions `D1..D8`, the separating curves, and the three special
/// points where curves meet. `BelowThreeHalves` is the zone
/// `b < -3/2 (a+1)^2` under the chart (always one simple zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionD {
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
    D7,
    D8,
    OnB1,
    OnB2,
    OnB3,
    OnFiveQuarters,
    OnThreeHalves,
    PointA,
    PointB,
    PointC,
    BelowThreeHalves,
}

impl RegionD {
    /// Zero count (with multiplicity) prescribed by the diagram, when the
    /// label alone pins it down.
    pub fn prescribed_zeros(&self) -> Option<u32> {
        match self {
            RegionD::D1 | RegionD::D3 | RegionD::PointA => Some(0),
            RegionD::D2
            | RegionD::D6
            | RegionD::D7
            | RegionD::D8
            | RegionD::BelowThreeHalves
            | RegionD::OnThreeHalves => Some(1),
            RegionD::D5 | RegionD::PointC => Some(2),
            RegionD::D4 | RegionD::OnB2 | RegionD::PointB => Some(3),
            // counts on b1 and b3 depend on which arc of the curve
            RegionD::OnB1 | RegionD::OnB3 | RegionD::OnFiveQuarters => None,
        }
    }
}

/// Classifies `(a, b)` in the zero-count diagram by the signs of `M(0)`,
/// `M'(h2)`, `M(h11)`, `M(h12)`, snapping to boundaries at [`MULT_TOL`].
pub fn classify_region_d(a: f64, b: f64) -> Result<RegionD> {
    require_region(a, b)?;
    let a1 = a + 1.0;
    let b32 = -1.5 * a1 * a1;
    let snap_b = 1e-9 * a1 * a1;
    if abs(b - b32) <= snap_b {
        return Ok(RegionD::OnThreeHalves);
    }
    if b < b32 {
        return Ok(RegionD::BelowThreeHalves);
    }

    let shape = melnikov_shape(a, b)?;
    let m0 = m_at_zero(a, b);
    let tau = MULT_TOL;

    if abs(shape.m1_at_h2) <= tau {
        if abs(shape.m_at_h2) <= tau {
            return Ok(RegionD::PointB);
        }
        if abs(m0) <= tau {
            return Ok(RegionD::PointA);
        }
        return Ok(RegionD::OnB1);
    }
    if shape.m1_at_h2 < 0.0 {
        // M monotone decreasing
        if abs(m0) <= tau {
            return Ok(RegionD::OnFiveQuarters);
        }
        return Ok(if m0 < 0.0 { RegionD::D1 } else { RegionD::D2 });
    }
    let m11 = shape.m_at_h11.unwrap();
    let m12 = shape.m_at_h12.unwrap();
    if abs(m12) <= tau {
        if abs(m0) <= tau {
            return Ok(RegionD::PointC);
        }
        return Ok(RegionD::OnB3);
    }
    if abs(m11) <= tau {
        return Ok(RegionD::OnB2);
    }
    if abs(m0) <= tau {
        return Ok(RegionD::OnFiveQuarters);
    }
    if m0 > 0.0 {
        if m11 > 0.0 {
            // one simple zero past h12; D6 and D7 differ by a vs a**
            let sp = special_points(1e-6)?;
            return Ok(if a > sp.a_double_star { RegionD::D6 } else { RegionD::D7 });
        }
        return Ok(if m12 > 0.0 { RegionD::D4 } else { RegionD::D8 });
    }
    // m0 < 0, hence m11 < 0 as well
    Ok(if m12 > 0.0 { RegionD::D5 } else { RegionD::D3 })
}

/// `b1(a)`: the unique `b` in `(-3/2 (a+1)^2, -(a+1)^2)` with `M'(h2) = 0`.
pub fn b1_of_a(a: f64, tol: f64) -> Result<f64> {
    if a <= 1.0 {
        return Err(Error::Domain("b1 needs a > 1"));
    }
    let a1 = a + 1.0;
    let pad = 1e-9 * a1 * a1;
    let lo = -1.5 * a1 * a1 + pad;
    let hi = -a1 * a1 - pad;
    let f = |b: f64| melnikov_shape(a, b).map(|s| s.m1_at_h2).unwrap_or(f64::NAN);
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::RootNotBracketed("M'(h2) endpoints for b1"));
    }
    Ok(bisect(&f, lo, hi, flo, tol))
}

/// `b2(a)`: `M(h11) = 0`; exists for `1 < a < a**`.
pub fn b2_of_a(a: f64, tol: f64) -> Result<f64> {
    let a1 = a + 1.0;
    let pad = 1e-7 * a1 * a1;
    let lo = -1.5 * a1 * a1 + pad;
    let hi = b1_of_a(a, 1e-12 * a1 * a1)? - pad;
    let f = |b: f64| -> f64 {
        match melnikov_shape(a, b) {
            Ok(s) => match s.h11 {
                Some(0.0) => m_at_zero(a, b),
                Some(_) => s.m_at_h11.unwrap(),
                None => s.m_at_h2, // past b1: fall back to the merged value
            },
            Err(_) => f64::NAN,
        }
    };
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::RootNotBracketed("M(h11) endpoints for b2 (a past a**?)"));
    }
    Ok(bisect(&f, lo, hi, flo, tol))
}

/// `b3(a)`: `M(h12) = 0`; lives between `b2` and `b1`, for `1 < a < a**`.
pub fn b3_of_a(a: f64, tol: f64) -> Result<f64> {
    let a1 = a + 1.0;
    let pad = 1e-7 * a1 * a1;
    let lo = b2_of_a(a, 1e-12 * a1 * a1)? + pad;
    let hi = b1_of_a(a, 1e-12 * a1 * a1)? - pad;
    let f = |b: f64| -> f64 {
        match melnikov_shape(a, b) {
            Ok(s) => match s.h12 {
                Some(_) => s.m_at_h12.unwrap(),
                None => s.m_at_h2,
            },
            Err(_) => f64::NAN,
        }
    };
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::RootNotBracketed("M(h12) endpoints for b3"));
    }
    Ok(bisect(&f, lo, hi, flo, tol))
}

/// The organizing points of the diagram: `A = (a*, -5/4 (a*+1)^2)` where
/// `b1` meets the `M(0) = 0` line, `B = (a**, b1(a**))` where `b1`, `b2`,
/// `b3` merge (triple zero), `C = (a3, -5/4 (a3+1)^2)` where `b3` crosses
/// the `M(0) = 0` line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialPoints {
    pub a_star: f64,
    pub a_double_star: f64,
    pub a3: f64,
    pub point_a: (f64, f64),
    pub point_b: (f64, f64),
    pub point_c: (f64, f64),
}

fn b54(a: f64) -> f64 {
    -1.25 * (a + 1.0) * (a + 1.0)
}

pub fn special_points(tol: f64) -> Result<SpecialPoints> {
    if !(tol > 0.0) {
        return Err(Error::Domain("special_points needs tol > 0"));
    }
    // a*: M'(h2) = 0 along b = -5/4 (a+1)^2, bracketed on (7/5, 2)
    let f_star = |a: f64| melnikov_shape(a, b54(a)).map(|s| s.m1_at_h2).unwrap_or(f64::NAN);
    let (lo, hi) = (1.4, 2.0);
    let flo = f_star(lo);
    if !(flo > 0.0 && f_star(hi) < 0.0) {
        return Err(Error::RootNotBracketed("a* bracket (7/5, 2)"));
    }
    let a_star = bisect(&f_star, lo, hi, flo, tol);

    // a3: M(h12) = 0 along b = -5/4 (a+1)^2, on (6/5, a*)
    let f_a3 = |a: f64| -> f64 {
        match melnikov_shape(a, b54(a)) {
            Ok(s) => s.m_at_h12.unwrap_or(s.m_at_h2),
            Err(_) => f64::NAN,
        }
    };
    let (lo3, hi3) = (1.2, a_star - 1e-9);
    let flo3 = f_a3(lo3);
    if !(flo3 > 0.0 && f_a3(hi3) < 0.0) {
        return Err(Error::RootNotBracketed("a3 bracket (6/5, a*)"));
    }
    let a3 = bisect(&f_a3, lo3, hi3, flo3, tol);

    // a**: M(h2) = 0 along b = b1(a), on (a*, 3)
    let f_bb = |a: f64| -> f64 {
        match b1_of_a(a, 1e-12 * (a + 1.0) * (a + 1.0)) {
            Ok(b1) => melnikov_shape(a, b1).map(|s| s.m_at_h2).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    let (lob, hib) = (a_star + 1e-7, 3.0);
    let flob = f_bb(lob);
    if !(flob < 0.0 && f_bb(hib) > 0.0) {
        return Err(Error::RootNotBracketed("a** bracket (a*, 3)"));
    }
    let a_double_star = bisect(&f_bb, lob, hib, flob, tol);
    let b_at_bb = b1_of_a(a_double_star, 1e-12)?;

    Ok(SpecialPoints {
        a_star,
        a_double_star,
        a3,
        point_a: (a_star, b54(a_star)),
        point_b: (a_double_star, b_at_bb),
        point_c: (a3, b54(a3)),
    })
}

/// Traces `b1`, `b2` or `b3` over an `a` grid; grid points outside a curve's
/// domain yield invalid samples instead of failing the whole trace.
pub fn trace_melnikov_curve(kind: CurveKind, a_grid: &[f64], tol: f64) -> Vec<CurveSample> {
    a_grid
        .iter()
        .map(|&a| {
            let b = match kind {
                CurveKind::B1 => b1_of_a(a, tol),
                CurveKind::B2 => b2_of_a(a, tol),
                CurveKind::B3 => b3_of_a(a, tol),
                _ => Err(Error::Domain("trace_melnikov_curve handles b1/b2/b3")),
            };
            match b {
                Ok(b) => {
                    let residual = match kind {
                        CurveKind::B1 => melnikov_shape(a, b).map(|s| s.m1_at_h2),
                        CurveKind::B2 => {
                            melnikov_shape(a, b).map(|s| s.m_at_h11.unwrap_or(s.m_at_h2))
                        }
                        CurveKind::B3 => {
                            melnikov_shape(a, b).map(|s| s.m_at_h12.unwrap_or(s.m_at_h2))
                        }
                        _ => unreachable!(),
                    }
                    .unwrap_or(f64::NAN);
                    CurveSample { a, b, delta: 0.0, kind, residual: abs(residual), valid: true }
                }
                Err(_) => CurveSample {
                    a,
                    b: f64::NAN,
                    delta: 0.0,
                    kind,
                    residual: f64::NAN,
                    valid: false,
                },
            }
        })
        .collect()
}

/// Sign structure of `dS1/dh` on a grid in `(0, 4/5)`: the appendix shows at
/// most one sign change (`S1` either decreases, or dips once and rises).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct S1SignStructure {
    pub sign_changes_of_ds1: usize,
}

pub fn s1_sign_structure(a: f64, h_grid: &[f64]) -> Result<S1SignStructure> {
    if a <= 1.4 {
        return Err(Error::Domain("S1 structure needs a > 7/5"));
    }
    let mut values = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        if !(h > 0.0 && h < 0.8) {
            return Err(Error::Domain("h grid must lie in (0, 4/5)"));
        }
        values.push(s1(h, a)?);
    }
    let mut changes = 0usize;
    let mut prev_slope = 0.0;
    for w in values.windows(2) {
        let slope = w[1] - w[0];
        if slope != 0.0 {
            if prev_slope != 0.0 && (slope > 0.0) != (prev_slope > 0.0) {
                changes += 1;
            }
            prev_slope = slope;
        }
    }
    Ok(S1SignStructure { sign_changes_of_ds1: changes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REL: f64 = 1e-10;

    fn close(x: f64, y: f64, rel: f64) -> bool {
        abs(x - y) <= rel * (1.0 + abs(y))
    }

    #[test]
    fn golden_values_match_paper() {
        // M(1/2, 6/5, -6.05) ~ 0.882421 (exact closed-form value frozen from
        // 50-digit evaluation)
        let m = melnikov(0.5, 1.2, -6.05).unwrap();
        assert!(close(m, 0.8824207853886691, REL), "{m}");
        // M'(1/5, 7/5, -7.2) ~ 0.358647
        let m1 = melnikov_deriv(0.2, 1.4, -7.2, 1).unwrap();
        assert!(close(m1, 0.3586468238810701, REL), "{m1}");
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn frozen_derivative_battery() {
        // frozen from 25-digit symbolic evaluation
        let cases: [(f64, f64, f64, [f64; 4]); 4] = [
            (
                0.5,
                1.2,
                -7.26,
                [
                    24.21573812040743,
                    9.688605116600295,
                    -11.22309644912567,
                    -1.300649233123214,
                ],
            ),
            (
                2.0,
                3.0,
                -22.0,
                [
                    84.75653247331979,
                    -11.43241178158334,
                    -5.626686415972871,
                    -1.38,
                ],
            ),
            (
                5.0,
                4.0,
                -30.0,
                [
                    -353.8544950490744,
                    -64.74521556359002,
                    -6.398327879344163,
                    -0.2424847881877093,
                ],
            ),
            (
                0.1,
                2.0,
                -13.5,
                [
                    64.09384587835953,
                    6.726713368190421,
                    24.24981315276887,
                    -233.8736421079175,
                ],
            ),
        ];
        for (h, a, b, expect) in cases {
            assert!(close(melnikov(h, a, b).unwrap(), expect[0], REL));
            assert!(close(melnikov_deriv(h, a, b, 1).unwrap(), expect[1], REL));
            assert!(close(melnikov_deriv(h, a, b, 2).unwrap(), expect[2], REL));
            assert!(close(melnikov_deriv(h, a, b, 3).unwrap(), expect[3], REL));
        }
    }

    #[test]
    fn limits_at_zero() {
        for (a, b) in [(1.3, -8.0), (2.5, -20.0), (4.0, -30.0)] {
            assert!(close(melnikov(0.0, a, b).unwrap(), m_at_zero(a, b), 1e-14));
            // M(0) = 0 exactly at b = -5/4 (a+1)^2
            let b5 = -1.25 * (a + 1.0) * (a + 1.0);
            assert!(abs(m_at_zero(a, b5)) < 1e-12);
            let b3 = -1.5 * (a + 1.0) * (a + 1.0);
            assert!(abs(m1_at_zero(a, b3)) < 1e-12);
        }
    }

    #[test]
    fn oracle_matches_closed_form() {
        for &a in &[1.2, 2.0, 4.0] {
            for &bf in &[-1.25, -2.0] {
                let b = bf * (a + 1.0) * (a + 1.0);
                for &h in &[0.1, 1.0, 5.0] {
                    let mc = melnikov(h, a, b).unwrap();
                    let mq = melnikov_oracle(h, a, b).unwrap();
                    assert!(
                        abs(mc - mq) <= 1e-9 * (1.0 + abs(mc)),
                        "a={a} b={b} h={h}: {mc} vs {mq}"
                    );
                }
            }
        }
    }

    #[test]
    fn oracle_oval_geometry() {
        // right arc reaches x = a + 1 + sqrt(2h + (a+1)^2)
        let (h, a) = (0.5, 1.5);
        let reach = a + 1.0 + sqrt(2.0 * h + (a + 1.0) * (a + 1.0));
        assert!(close(reach, 2.5 + sqrt(7.25), 1e-15));
    }

    #[test]
    fn partials_match_finite_differences() {
        let eps = 1e-6;
        for (h, a, b) in [(0.5, 1.5, -10.0), (1.5, 2.5, -20.0), (0.3, 3.0, -25.0)] {
            let p = melnikov_partials(h, a, b).unwrap();
            let fd_db = (melnikov(h, a, b + eps).unwrap() - melnikov(h, a, b - eps).unwrap())
                / (2.0 * eps);
            let fd_da = (melnikov(h, a + eps, b).unwrap() - melnikov(h, a - eps, b).unwrap())
                / (2.0 * eps);
            let fd1_db = (melnikov_deriv(h, a, b + eps, 1).unwrap()
                - melnikov_deriv(h, a, b - eps, 1).unwrap())
                / (2.0 * eps);
            let fd1_da = (melnikov_deriv(h, a + eps, b, 1).unwrap()
                - melnikov_deriv(h, a - eps, b, 1).unwrap())
                / (2.0 * eps);
            assert!(close(p.dm_db, fd_db, 1e-6));
            assert!(close(p.dm_da, fd_da, 1e-6));
            assert!(close(p.dm1_db, fd1_db, 1e-6));
            assert!(close(p.dm1_da, fd1_da, 1e-6));
            assert!(p.dm1_db < 0.0);
        }
        // S1(0+, a) -> -pi^2 (a+1)^3
        for a in [1.5, 2.0, 3.0] {
            let v = s1(1e-9, a).unwrap();
            let lim = -PI * PI * (a + 1.0) * (a + 1.0) * (a + 1.0);
            assert!(close(v, lim, 1e-3), "{v} vs {lim}");
        }
    }

    #[test]
    fn shape_cases() {
        // generic region: 0 < h2 < (a^2-1)/2
        let s = melnikov_shape(2.0, -11.0).unwrap();
        assert!(s.h2 > 0.0 && s.h2 < 0.5 * (4.0 - 1.0));
        // b = -3/2 (a+1)^2: M'(0) = 0, h11 degenerates to 0, h12 > h2
        let a = 1.8;
        let s = melnikov_shape(a, -1.5 * 2.8 * 2.8).unwrap();
        assert_eq!(s.h11, Some(0.0));
        assert!(s.h12.unwrap() > s.h2);
        // (3, -22): M'(h2) < 0, no h11/h12
        let s = melnikov_shape(3.0, -22.0).unwrap();
        assert!(s.m1_at_h2 < 0.0);
        assert!(s.h11.is_none() && s.h12.is_none());
        // -3/2 (a+1)^2 < b < -5/4 (a+1)^2 implies h2 < 4/5
        for a in [1.7, 2.0, 3.0, 5.0] {
            let a1 = a + 1.0;
            let b = -1.375 * a1 * a1;
            let s = melnikov_shape(a, b).unwrap();
            assert!(s.h2 < 0.8, "a={a}: h2={}", s.h2);
        }
    }

    #[test]
    fn zero_counts_in_named_regions() {
        // below -3/2 (a+1)^2: unique simple zero
        let r = melnikov_zeros(1.5, -1.6 * 6.25).unwrap();
        assert_eq!(r.total_with_multiplicity, 1);
        // (3, -22) sits in D2: one simple zero
        let r = melnikov_zeros(3.0, -22.0).unwrap();
        assert_eq!(r.total_with_multiplicity, 1);
        assert_eq!(classify_region_d(3.0, -22.0).unwrap(), RegionD::D2);
        // (2, -9.05): D1, no zeros
        let r = melnikov_zeros(2.0, -9.05).unwrap();
        assert_eq!(r.total_with_multiplicity, 0);
        assert_eq!(classify_region_d(2.0, -9.05).unwrap(), RegionD::D1);
        // just below -3/2 (a+1)^2 at a = 1.5
        assert_eq!(
            classify_region_d(1.5, -1.5 * 6.25 - 0.1).unwrap(),
            RegionD::BelowThreeHalves
        );
    }

    #[test]
    fn special_points_and_curves() {
        let sp = special_points(1e-12).unwrap();
        assert!(sp.a_star > 1.4 && sp.a_star < 2.0, "a* = {}", sp.a_star);
        assert!(sp.a3 > 1.2 && sp.a3 < sp.a_star, "a3 = {}", sp.a3);
        assert!(sp.a_double_star > sp.a_star, "a** = {}", sp.a_double_star);
        // b1 in its proven window, decreasing
        let grid = [1.5, 1.8, 2.2, 3.0];
        let b1s = trace_melnikov_curve(CurveKind::B1, &grid, 1e-10);
        let mut prev = f64::INFINITY;
        for s in &b1s {
            assert!(s.valid);
            let a1 = s.a + 1.0;
            assert!(s.b > -1.5 * a1 * a1 && s.b < -a1 * a1);
            assert!(s.b < prev);
            assert!(s.residual < 1e-8);
            prev = s.b;
        }
        // ordering b2 < b3 < b1 on a shared domain point
        let a = 1.3;
        let b1 = b1_of_a(a, 1e-10).unwrap();
        let b2 = b2_of_a(a, 1e-10).unwrap();
        let b3 = b3_of_a(a, 1e-10).unwrap();
        assert!(b2 < b3 && b3 < b1, "{b2} {b3} {b1}");
        // triple zero at B
        let r = melnikov_zeros(sp.a_double_star, sp.point_b.1).unwrap();
        assert_eq!(r.total_with_multiplicity, 3, "{r:?}");
        assert!(r.zeros.iter().any(|z| z.multiplicity == 3));
    }

    #[test]
    fn curve_traces_mark_out_of_domain_points_invalid() {
        // b2 exists only up to a**; past it the bracket degenerates
        let samples = trace_melnikov_curve(CurveKind::B2, &[1.3, 3.0], 1e-9);
        assert!(samples[0].valid && samples[0].residual < 1e-8);
        assert!(!samples[1].valid && samples[1].b.is_nan());
        let samples = trace_melnikov_curve(CurveKind::B3, &[1.3, 3.0], 1e-9);
        assert!(samples[0].valid);
        assert!(!samples[1].valid);
    }

    #[test]
    fn double_zeros_on_b2_and_b3() {
        let a = 1.3;
        let b2 = b2_of_a(a, 1e-12).unwrap();
        let r = melnikov_zeros(a, b2).unwrap();
        assert!(r.zeros.iter().any(|z| z.multiplicity == 2), "{r:?}");
        assert_eq!(r.total_with_multiplicity, 3);
        let b3 = b3_of_a(a, 1e-12).unwrap();
        let r = melnikov_zeros(a, b3).unwrap();
        assert!(r.zeros.iter().any(|z| z.multiplicity == 2), "{r:?}");
    }

    #[test]
    fn d4_has_three_simple_zeros() {
        // pick a in (1, a3), b in (b2, -5/4 (a+1)^2)
        let a = 1.25;
        let b2 = b2_of_a(a, 1e-10).unwrap();
        let top = f64::min(-1.25 * 2.25 * 2.25, b3_of_a(a, 1e-10).unwrap());
        let b = 0.5 * (b2 + top);
        let r = melnikov_zeros(a, b).unwrap();
        assert_eq!(r.total_with_multiplicity, 3, "{r:?}");
        assert!(r.zeros.iter().all(|z| z.multiplicity == 1));
        assert_eq!(classify_region_d(a, b).unwrap(), RegionD::D4);
    }

    #[test]
    fn concavity_properties() {
        // M'' < 0 on [(a^2-1)/2, inf) and M''' < 0 on (0, (a^2-1)/2), b < 0
        for &a in &[1.2, 1.4, 2.0, 3.0, 4.0] {
            for &bf in &[-1.25, -1.5, -2.0] {
                let b = bf * (a + 1.0) * (a + 1.0);
                let htop = 0.5 * (a * a - 1.0);
                for k in 1..=5 {
                    let h = htop * k as f64 / 5.5;
                    assert!(melnikov_deriv(h, a, b, 3).unwrap() < 0.0);
                }
                for k in 1..=5 {
                    let h = htop * (1.0 + k as f64);
                    assert!(melnikov_deriv(h, a, b, 2).unwrap() < 0.0);
                }
                // M -> -inf realized at the cap
                assert!(melnikov(h_cap(a), a, b).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn zero_count_matches_region_label() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 60 {
            let a = rng.gen_range(1.05..4.0);
            let a1: f64 = a + 1.0;
            let b = rng.gen_range(-2.2..-1.001) * a1 * a1;
            let label = classify_region_d(a, b).unwrap();
            let Some(expect) = label.prescribed_zeros() else { continue };
            let got = melnikov_zeros(a, b).unwrap().total_with_multiplicity;
            assert_eq!(got, expect, "label {label:?} at (a={a:.4}, b={b:.4})");
            checked += 1;
        }
    }

    #[test]
    fn s1_structure_examples() {
        let grid: Vec<f64> = (1..=60).map(|i| 0.8 * i as f64 / 61.0).collect();
        let s = s1_sign_structure(12.0, &grid).unwrap();
        assert_eq!(s.sign_changes_of_ds1, 0);
        let s = s1_sign_structure(1.5, &grid).unwrap();
        assert!(s.sign_changes_of_ds1 <= 1);
        for a in [1.5, 3.0, 8.0] {
            for &h in &grid {
                assert!(s1(h, a).unwrap() < 0.0, "S1({h}, {a})");
            }
        }
    }
}
