//! Scalar constants of the Gross transformation with infrared split K and
//! ultraviolet cutoff κ.
//!
//! The transformation shifts phonon modes with |k| > K by
//!
//! ```text
//! β_K(k) = −√α λ₀ / ((2π)^{3/2} |k| (1 + k²/2))     for |k| > K
//! ```
//!
//! and leaves the bound constants below. Every integrand is radial, so all
//! integrals are one-dimensional with the 4π angular factor pulled out.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
use crate::special::{lambda0, FOURIER_NORM, LAMBDA0_SQ};

const QUAD_TOL: f64 = 1e-13;

/// (2π)^{-3}, the density of states factor.
const INV_TWO_PI_CUBED: f64 = FOURIER_NORM * FOURIER_NORM;

/// Tolerance of [`admissible_threshold`] in K.
pub const THRESHOLD_TOL: f64 = 1e-6;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be positive, got {alpha}")))
    }
}

pub fn beta(k_mag: f64, alpha: f64, k_split: f64) -> Result<f64> {
    if !(k_mag > 0.0) {
        return Err(Error::Domain(format!("|k| must be positive, got {k_mag}")));
    }
    check_alpha(alpha)?;
    if k_mag <= k_split {
        return Ok(0.0);
    }
    Ok(-alpha.sqrt() * lambda0() * FOURIER_NORM / (k_mag * (1.0 + 0.5 * k_mag * k_mag)))
}

/// 4π∫_a^b f(k) dk with b possibly infinite.
fn radial(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: QUAD_TOL,
        max_intervals: 4000,
    };
    if b <= a {
        return Ok(0.0);
    }
    let value = if b.is_infinite() {
        integrate_to_infinity(f, a, opts)?.value
    } else {
        integrate(f, a, b, opts)?.value
    };
    Ok(4.0 * PI * value)
}

/// C(K)² = ∫ k² β_K(k)² dk.
pub fn c_squared(alpha: f64, k_split: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let shape = radial(|k| (k / (1.0 + 0.5 * k * k)).powi(2), k_split, f64::INFINITY)?;
    Ok(alpha * LAMBDA0_SQ * INV_TWO_PI_CUBED * shape)
}

/// C₂(K) = αλ₀² ∫_{|k|≤K} dk / ((2π)³ k²).
pub fn c2(alpha: f64, k_split: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * LAMBDA0_SQ * INV_TWO_PI_CUBED * radial(|_| 1.0, 0.0, k_split)?)
}

/// C₃ = ∫_{K<|k|≤κ} (β_K² + 2√αλ₀(2π)^{-3/2}|β_K|/|k|) dk.
pub fn c3(alpha: f64, k_split: f64, kappa: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let shape = radial(
        |k| {
            let d = 1.0 + 0.5 * k * k;
            1.0 / (d * d) + 2.0 / d
        },
        k_split,
        kappa,
    )?;
    Ok(alpha * LAMBDA0_SQ * INV_TWO_PI_CUBED * shape)
}

/// E_{κ,K} = −2αλ₀² ∫_{K≤|k|≤κ} dk / ((2π)³(1 + k²/2)k²).
pub fn e_cut(alpha: f64, k_split: f64, kappa: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let shape = radial(|k| 1.0 / (1.0 + 0.5 * k * k), k_split, kappa)?;
    Ok(-2.0 * alpha * LAMBDA0_SQ * INV_TWO_PI_CUBED * shape)
}

/// −(4α/π)(arctan(κ/√2) − arctan(K/√2)), the closed form of [`e_cut`].
pub fn e_cut_closed_form(alpha: f64, k_split: f64, kappa: f64) -> f64 {
    if kappa <= k_split {
        return 0.0;
    }
    let upper = if kappa.is_infinite() {
        PI / 2.0
    } else {
        (kappa / SQRT_2).atan()
    };
    -4.0 * alpha / PI * (upper - (k_split / SQRT_2).atan())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrossConstants {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k_split: f64,
    pub kappa: f64,
    #[serde(rename = "C_K")]
    pub c_k: f64,
    #[serde(rename = "C2_K")]
    pub c2_k: f64,
    #[serde(rename = "C3_K")]
    pub c3_k: f64,
    #[serde(rename = "E_cut")]
    pub e_cut: f64,
    /// Closed form of E_cut for comparison.
    pub e_cut_reference: f64,
    pub admissible: bool,
    /// Set when κ ≤ K: the shell K < |k| ≤ κ is empty.
    pub empty_shell: bool,
}

impl GrossConstants {
    pub fn tsv_header() -> &'static str {
        "alpha\tK\tkappa\tC_K\tC2_K\tC3_K\tE_cut\tadmissible\n"
    }

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.15e}\t{}\n",
            self.alpha, self.k_split, self.kappa, self.c_k, self.c2_k, self.c3_k, self.e_cut, self.admissible
        )
    }
}

fn admissible_value(c: f64) -> f64 {
    4.0 * c * c + 4.0 * c
}

pub fn constants(alpha: f64, k_split: f64, kappa: f64) -> Result<GrossConstants> {
    check_alpha(alpha)?;
    if !(k_split >= 0.0 && k_split.is_finite()) {
        return Err(Error::Domain(format!("K must be finite and nonnegative, got {k_split}")));
    }
    if !(kappa >= 0.0) {
        return Err(Error::Domain(format!("kappa must be nonnegative, got {kappa}")));
    }
    let c_k = c_squared(alpha, k_split)?.sqrt();
    Ok(GrossConstants {
        alpha,
        k_split,
        kappa,
        c_k,
        c2_k: c2(alpha, k_split)?,
        c3_k: c3(alpha, k_split, kappa)?,
        e_cut: e_cut(alpha, k_split, kappa)?,
        e_cut_reference: e_cut_closed_form(alpha, k_split, kappa),
        admissible: admissible_value(c_k) < 1.0,
        empty_shell: kappa <= k_split,
    })
}

/// Smallest K (to [`THRESHOLD_TOL`]) with 4C(K)² + 4C(K) < 1.
pub fn admissible_threshold(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let holds = |k: f64| -> Result<bool> { Ok(admissible_value(c_squared(alpha, k)?.sqrt()) < 1.0) };
    if holds(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !holds(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Internal("admissible K not found below 1e12".into()));
        }
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_at_zero_is_root_alpha() {
        // ∫ k²/(1+k²/2)² over (0,∞) is π/√2, which makes C(0)² = α exactly
        assert!((c_squared(1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((c_squared(0.3, 0.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn c2_closed_form() {
        let v = c2(1.0, 3.0).unwrap();
        assert!((v - SQRT_2 * 3.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn beta_vanishes_inside_split() {
        assert_eq!(beta(0.5, 1.0, 1.0).unwrap(), 0.0);
        assert!(beta(2.0, 1.0, 1.0).unwrap() < 0.0);
        assert!(beta(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_shell_is_flagged() {
        let g = constants(1.0, 5.0, 5.0).unwrap();
        assert!(g.empty_shell);
        assert_eq!(g.e_cut, 0.0);
        assert_eq!(g.c3_k, 0.0);
    }
}
