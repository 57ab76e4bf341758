//! Float math shims: `std` intrinsics when available, `libm` otherwise.

#[cfg(feature = "std")]
mod imp {
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline(always)]
    pub fn atan(x: f64) -> f64 {
        x.atan()
    }
    #[inline(always)]
    pub fn asin(x: f64) -> f64 {
        x.asin()
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
    #[inline(always)]
    pub fn powf(x: f64, p: f64) -> f64 {
        x.powf(p)
    }
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
mod imp {
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline(always)]
    pub fn atan(x: f64) -> f64 {
        libm::atan(x)
    }
    #[inline(always)]
    pub fn asin(x: f64) -> f64 {
        libm::asin(x)
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    #[inline(always)]
    pub fn powf(x: f64, p: f64) -> f64 {
        libm::pow(x, p)
    }
}

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

pub use imp::{asin, atan, hypot, powf, sqrt};

/// `sgn` with the convention `sgn(0) = 0`.
#[inline(always)]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    f64::abs(x)
}
