//! Gamma-function constants.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Euler beta function `B(a, b)` for `a, b > 0`.
///
/// When `a + b = 1` the reflection formula `π / sin(πa)` is exact and used
/// directly.
pub fn beta(a: f64, b: f64) -> f64 {
    if (a + b - 1.0).abs() < 1e-15 {
        PI / (PI * a).sin()
    } else {
        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
    }
}

/// `E|Z|^q` for a standard normal `Z`: `2^{q/2} Γ((q+1)/2) / √π`.
pub fn abs_normal_moment(q: f64) -> f64 {
    2f64.powf(q / 2.0) * gamma((q + 1.0) / 2.0) / PI.sqrt()
}
