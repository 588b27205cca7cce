//! Dispersion relation `ω_k = σk²/2` of the linear packet and the velocities
//! derived from it.

use crate::error::{Error, Result};

#[inline]
pub fn omega(sigma: f64, k: f64) -> f64 {
    0.5 * sigma * k * k
}

/// Phase velocity `ω_k / k = σk/2`. Undefined for `k = 0`.
pub fn phase_velocity(sigma: f64, k: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::domain("phase velocity", "undefined for k = 0"));
    }
    Ok(omega(sigma, k) / k)
}

/// Group velocity `dω_k/dk = σk`.
#[inline]
pub fn group_velocity(sigma: f64, k: f64) -> f64 {
    sigma * k
}

/// Packet center (point of maximum amplitude) `s = t · dω_k/dk`.
#[inline]
pub fn packet_center(sigma: f64, k: f64, t: f64) -> f64 {
    t * group_velocity(sigma, k)
}
