//! `f64` transcendental functions routed through `libm` so the crate builds
//! without `std`.

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_tau(x: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let r = x - tau * floor(x / tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

/// Unsigned angle between two vectors in radians, in `[0, pi]`.
pub fn angle_between(a: &crate::se3::Vec3, b: &crate::se3::Vec3) -> f64 {
    atan2(a.cross(b).norm(), a.dot(b))
}
