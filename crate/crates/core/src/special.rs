//! Small special-function helpers shared by the Coulomb integrals.

use std::f64::consts::PI;

/// λ₀² = 2√2·π, the coupling normalization of the Fröhlich Hamiltonian.
pub const LAMBDA0_SQ: f64 = 2.0 * std::f64::consts::SQRT_2 * PI;

/// (2π)^{-3/2}, the Fourier normalization in three dimensions.
pub const FOURIER_NORM: f64 = 0.063_493_635_934_240_97;

pub fn lambda0() -> f64 {
    LAMBDA0_SQ.sqrt()
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Mean of 1/|z| for a three-dimensional isotropic Gaussian vector z with
/// mean of length `mean` and per-component variance `var`.
///
/// Equals erf(|μ|/√(2σ²))/|μ|, with the |μ| → 0 limit √(2/π)/σ.
pub fn inverse_distance_mean(mean: f64, var: f64) -> f64 {
    let mean = mean.abs();
    let sigma = var.sqrt();
    let x = mean / (std::f64::consts::SQRT_2 * sigma);
    if x < 1e-3 {
        let x2 = x * x;
        // erf(x)/x series, error O(x^6)
        let ratio = 2.0 / PI.sqrt() * (1.0 - x2 / 3.0 + x2 * x2 / 10.0);
        ratio / (std::f64::consts::SQRT_2 * sigma)
    } else {
        erf(x) / mean
    }
}

/// sin(x)/x, evaluated by its Taylor series near the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
