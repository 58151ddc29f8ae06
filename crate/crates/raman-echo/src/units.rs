//! Unit conventions. All model inputs are plain kHz; all internal dynamics
//! run in angular units (rad/us) on a time axis in microseconds.
//!
//! Two distinct conversions exist on purpose:
//!
//! * Rabi frequencies, detunings, ensemble shifts, and population transfer
//!   rates are ordinary frequencies: `x` kHz becomes `2 pi 1e-3 x` rad/us.
//! * Coherence dephasing linewidths `gamma_ij` are FWHM-like: the decay
//!   constant of `rho_ij` is `pi 1e-3 gamma_ij` per us, so that
//!   `gamma_21 = 1 kHz` gives a spin phase lifetime of `1/(pi 1e-3)`,
//!   i.e. 318.31 us.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in kHz to angular rad/us. Use for Rabi frequencies,
/// detunings, inhomogeneous shifts, and population rates.
pub fn to_angular(khz: f64) -> f64 {
    TWO_PI * 1.0e-3 * khz
}

/// Inverse of [`to_angular`].
pub fn from_angular(rad_per_us: f64) -> f64 {
    rad_per_us / (TWO_PI * 1.0e-3)
}

/// Dephasing linewidth in kHz to a coherence decay constant in 1/us.
pub fn to_decay(khz: f64) -> f64 {
    PI * 1.0e-3 * khz
}

/// Inverse of [`to_decay`].
pub fn from_decay(per_us: f64) -> f64 {
    per_us / (PI * 1.0e-3)
}

/// Spin phase lifetime implied by a gamma_21 linewidth: `1/(pi 1e-3 g21)`.
pub fn t2_spin_us(gamma21_khz: f64) -> f64 {
    1.0 / to_decay(gamma21_khz)
}
