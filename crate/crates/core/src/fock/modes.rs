//! Discrete phonon modes: a symmetric quadrature of the ball |k| ≤ κ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: [f64; 3],
    /// Volume of k-space represented by the mode.
    pub weight: f64,
}

impl Mode {
    pub fn norm(&self) -> f64 {
        self.k.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    pub kappa: f64,
}

/// Unit directions for one hemisphere: the coordinate axes when at most three
/// are requested, otherwise a golden-angle spiral over z > 0.
fn hemisphere(count: usize) -> Vec<[f64; 3]> {
    if count <= 3 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]][..count].to_vec();
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Radial shells of equal thickness, each carrying `per_shell` directions in
/// antipodal pairs. Each mode's weight is its shell's volume over `per_shell`.
pub fn build_modes(kappa: f64, shells: usize, per_shell: usize) -> Result<ModeSet> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidConfig(format!("kappa must be positive and finite, got {kappa}")));
    }
    if shells == 0 || per_shell == 0 {
        return Err(Error::InvalidConfig("need at least one shell and one mode per shell".into()));
    }
    if !per_shell.is_multiple_of(2) {
        return Err(Error::Symmetry(format!("per_shell = {per_shell} cannot be split into antipodal pairs")));
    }
    let dirs = hemisphere(per_shell / 2);
    let mut modes = Vec::with_capacity(shells * per_shell);
    for s in 0..shells {
        let lo = kappa * s as f64 / shells as f64;
        let hi = kappa * (s + 1) as f64 / shells as f64;
        let radius = 0.5 * (lo + hi);
        let weight = 4.0 * PI / 3.0 * (hi.powi(3) - lo.powi(3)) / per_shell as f64;
        for d in &dirs {
            let k = [radius * d[0], radius * d[1], radius * d[2]];
            modes.push(Mode { k, weight });
            modes.push(Mode { k: [-k[0], -k[1], -k[2]], weight });
        }
    }
    Ok(ModeSet { modes, kappa })
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Index of the mode at −k, if present with the same weight.
    pub fn partner(&self, j: usize) -> Option<usize> {
        let m = self.modes[j];
        self.modes
            .iter()
            .position(|o| o.weight == m.weight && (0..3).all(|c| o.k[c] == -m.k[c]))
    }

    pub fn validate(&self) -> Result<()> {
        for (j, m) in self.modes.iter().enumerate() {
            if !(m.weight > 0.0 && m.weight.is_finite()) {
                return Err(Error::InvalidConfig(format!("mode {j} has weight {}", m.weight)));
            }
            let n = m.norm();
            if n == 0.0 {
                return Err(Error::InvalidConfig(format!("mode {j} is the zero vector")));
            }
            if n > self.kappa * (1.0 + 1e-12) {
                return Err(Error::InvalidConfig(format!("mode {j} has |k| = {n} > kappa = {}", self.kappa)));
            }
            if self.partner(j).is_none() {
                return Err(Error::Symmetry(format!("mode {j} has no partner at -k")));
            }
        }
        Ok(())
    }
}
