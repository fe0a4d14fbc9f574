//! The truncated fiber Hamiltonian at total momentum P:
//!
//! ```text
//! H(P) = ¼(P − P_f)² − Δ + αU₀/|x| + N
//!      + 2√α λ₀ Σ_j √w_j (2π)^{-3/2} |k_j|^{-1} cos(k_j·x/2) (a_j + a_j†)
//! ```
//!
//! with x the relative coordinate on a Dirichlet lattice, finitely many modes
//! and Σ n_j ≤ n_max.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lanczos::{ground_energy, GroundStateResult, LanczosOptions};
use super::modes::{build_modes, ModeSet};
use super::occupation::{occupation_count, OccupationSpace};
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::special::{lambda0, FOURIER_NORM};

/// Cubic lattice with an even number of points per axis at (j + ½ − L/2)·h,
/// symmetric under x ↦ −x and avoiding the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub points_per_axis: usize,
    pub spacing: f64,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            points_per_axis: 8,
            spacing: 0.5,
        }
    }
}

impl Lattice {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis == 0 || !self.points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "points per axis must be even and positive, got {}",
                self.points_per_axis
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!("lattice spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 + 0.5 - 0.5 * self.points_per_axis as f64) * self.spacing
    }

    pub fn position(&self, site: usize) -> [f64; 3] {
        let l = self.points_per_axis;
        [self.coordinate(site / (l * l)), self.coordinate((site / l) % l), self.coordinate(site % l)]
    }

    /// Lowest eigenvalue of the Dirichlet 7-point −Δ.
    pub fn ground_kinetic(&self) -> f64 {
        let l = self.points_per_axis as f64;
        3.0 * (2.0 - 2.0 * (std::f64::consts::PI / (l + 1.0)).cos()) / (self.spacing * self.spacing)
    }
}

/// Mode set and truncation shared by the polaron and bipolaron toys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub lattice: Lattice,
    pub modes: ModeSet,
    pub n_max: usize,
    pub max_dimension: usize,
}

impl Discretization {
    /// Lattice 8³ with spacing 0.5, two shells of six modes up to κ = 2 and
    /// at most two phonons.
    pub fn desk_default() -> Self {
        Self {
            lattice: Lattice::default(),
            modes: build_modes(2.0, 2, 6).expect("valid defaults"),
            n_max: 2,
            max_dimension: 200_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.modes.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedFockModel {
    pub discretization: Discretization,
    pub alpha: f64,
    pub u0: f64,
    pub p: [f64; 3],
}

/// 2√α λ₀ √w (2π)^{-3/2} / |k|: the bipolaron coupling of one mode before the
/// cos(k·x/2) form factor.
fn bipolaron_coupling(alpha: f64, weight: f64, k_norm: f64) -> f64 {
    2.0 * alpha.sqrt() * lambda0() * weight.sqrt() * FOURIER_NORM / k_norm
}

fn field_momentum(modes: &ModeSet, n: &[u8]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (m, &c) in modes.modes.iter().zip(n) {
        for (pd, kd) in p.iter_mut().zip(m.k) {
            *pd += c as f64 * kd;
        }
    }
    p
}

fn squared_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|d| (a[d] - b[d]).powi(2)).sum()
}

impl TruncatedFockModel {
    pub fn validate(&self) -> Result<()> {
        self.discretization.validate()?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) || !(self.u0 >= 0.0 && self.u0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha and U0 must be finite and nonnegative, got {} and {}",
                self.alpha, self.u0
            )));
        }
        if self.p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("total momentum must be finite".into()));
        }
        Ok(())
    }

    pub fn with_momentum(&self, p: [f64; 3]) -> Self {
        Self { p, ..self.clone() }
    }

    pub fn dimension(&self) -> usize {
        let d = &self.discretization;
        d.lattice.sites().saturating_mul(occupation_count(d.modes.len(), d.n_max))
    }

    /// ε₀(lattice) − Σ_j g_j², a rigorous floor under the spectrum: every
    /// other diagonal term is nonnegative and n_j + g(a_j + a_j†) ≥ −g².
    pub fn lower_bound(&self) -> f64 {
        let d = &self.discretization;
        let field: f64 = d
            .modes
            .modes
            .iter()
            .map(|m| bipolaron_coupling(self.alpha, m.weight, m.norm()).powi(2))
            .sum();
        d.lattice.ground_kinetic() - field
    }

    /// Exact ground energy when α = 0: the sectors decouple.
    pub fn decoupled_energy(&self) -> f64 {
        let d = &self.discretization;
        let space = OccupationSpace::new(d.modes.len(), d.n_max);
        let phonons = space
            .states()
            .iter()
            .map(|n| {
                let pf = field_momentum(&d.modes, n);
                0.25 * squared_distance(self.p, pf) + n.iter().map(|&c| c as f64).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        d.lattice.ground_kinetic() + phonons
    }

    pub fn assemble(&self) -> Result<SparseOperator> {
        self.validate()?;
        let d = &self.discretization;
        let dim = self.dimension();
        if dim > d.max_dimension {
            return Err(Error::DimensionCap {
                dimension: dim,
                cap: d.max_dimension,
            });
        }
        let lattice = d.lattice;
        let l = lattice.points_per_axis;
        let sites = lattice.sites();
        let space = OccupationSpace::new(d.modes.len(), d.n_max);
        let h2 = 1.0 / (lattice.spacing * lattice.spacing);
        let coupling: Vec<f64> = d
            .modes
            .modes
            .iter()
            .map(|m| bipolaron_coupling(self.alpha, m.weight, m.norm()))
            .collect();
        // cos(k_j·x/2) per (mode, site)
        let form: Vec<Vec<f64>> = d
            .modes
            .modes
            .iter()
            .map(|m| {
                (0..sites)
                    .map(|s| {
                        let x = lattice.position(s);
                        (0.5 * (m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2])).cos()
                    })
                    .collect()
            })
            .collect();
        let coulomb: Vec<f64> = (0..sites)
            .map(|s| {
                let r = squared_distance(lattice.position(s), [0.0; 3]).sqrt();
                self.alpha * self.u0 / r
            })
            .collect();
        let rows: Vec<Vec<(usize, f64)>> = (0..space.len())
            .into_par_iter()
            .flat_map_iter(|o| {
                let n = space.state(o);
                let pf = field_momentum(&d.modes, n);
                let sector = 0.25 * squared_distance(self.p, pf) + space.total(o) as f64;
                let ladder: Vec<(usize, usize, f64)> = (0..d.modes.len())
                    .flat_map(|j| {
                        let down = space.lowered(o, j).map(|t| (j, t, (n[j] as f64).sqrt()));
                        let up = space.raised(o, j).map(|t| (j, t, (n[j] as f64 + 1.0).sqrt()));
                        down.into_iter().chain(up)
                    })
                    .collect();
                let form = &form;
                let coupling = &coupling;
                let coulomb = &coulomb;
                (0..sites).map(move |s| {
                    let mut row = Vec::with_capacity(7 + ladder.len());
                    let base = o * sites;
                    row.push((base + s, 6.0 * h2 + sector + coulomb[s]));
                    let (ix, iy, iz) = (s / (l * l), (s / l) % l, s % l);
                    for (coord, stride) in [(ix, l * l), (iy, l), (iz, 1)] {
                        if coord > 0 {
                            row.push((base + s - stride, -h2));
                        }
                        if coord + 1 < l {
                            row.push((base + s + stride, -h2));
                        }
                    }
                    for &(j, target, amp) in &ladder {
                        let v = coupling[j] * form[j][s] * amp;
                        if v != 0.0 {
                            row.push((target * sites + s, v));
                        }
                    }
                    row
                })
            })
            .collect();
        Ok(SparseOperator::from_rows(rows))
    }

    pub fn ground_energy(&self, opts: &LanczosOptions) -> Result<GroundStateResult> {
        ground_energy(&self.assemble()?, opts)
    }
}

/// Phonon-only operator of one polaron at total momentum zero:
/// ½P_f² + N + √α λ₀ Σ_j √w_j (2π)^{-3/2} |k_j|^{-1} (a_j + a_j†).
pub fn polaron_operator(alpha: f64, modes: &ModeSet, n_max: usize) -> Result<SparseOperator> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    modes.validate()?;
    let space = OccupationSpace::new(modes.len(), n_max);
    let coupling: Vec<f64> = modes
        .modes
        .iter()
        .map(|m| 0.5 * bipolaron_coupling(alpha, m.weight, m.norm()))
        .collect();
    let rows = (0..space.len())
        .map(|o| {
            let n = space.state(o);
            let pf = field_momentum(modes, n);
            let mut row = vec![(o, 0.5 * squared_distance(pf, [0.0; 3]) + space.total(o) as f64)];
            for j in 0..modes.len() {
                if let Some(t) = space.lowered(o, j) {
                    row.push((t, coupling[j] * (n[j] as f64).sqrt()));
                }
                if let Some(t) = space.raised(o, j) {
                    row.push((t, coupling[j] * (n[j] as f64 + 1.0).sqrt()));
                }
            }
            row.retain(|e| e.0 == o || e.1 != 0.0);
            row
        })
        .collect();
    Ok(SparseOperator::from_rows(rows))
}

pub fn polaron_toy_energy(alpha: f64, modes: &ModeSet, n_max: usize, opts: &LanczosOptions) -> Result<GroundStateResult> {
    ground_energy(&polaron_operator(alpha, modes, n_max)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyBinding {
    pub polaron: f64,
    pub bipolaron: f64,
    /// 2E_p − E_bp.
    pub binding: f64,
}

/// 2E_p − E_bp(P = 0) with both energies on the same modes and truncation.
pub fn toy_binding(alpha: f64, u0: f64, discretization: &Discretization, opts: &LanczosOptions) -> Result<ToyBinding> {
    let model = TruncatedFockModel {
        discretization: discretization.clone(),
        alpha,
        u0,
        p: [0.0; 3],
    };
    let bp = model.ground_energy(opts)?.energy;
    let p = polaron_toy_energy(alpha, &discretization.modes, discretization.n_max, opts)?.energy;
    Ok(ToyBinding {
        polaron: p,
        bipolaron: bp,
        binding: 2.0 * p - bp,
    })
}

/// Whether |P| < 2·min{1, √E_bin} with E_bin > 0, and the gap bound
/// min{1, E_bin} − P²/4.
pub fn existence_criterion(e_bin: f64, p: [f64; 3]) -> (bool, f64) {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let gap_bound = e_bin.min(1.0) - p2 / 4.0;
    let holds = e_bin > 0.0 && p2.sqrt() < 2.0 * e_bin.sqrt().min(1.0);
    (holds, gap_bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub p: [f64; 3],
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub rows: Vec<DispersionRow>,
    pub e0: f64,
    /// max |E(P) − E(−P)| over the table.
    pub symmetry_defect: f64,
    /// E(0) ≤ E(P) for every row.
    pub lower_holds: bool,
    /// E(P) ≤ E(0) + P²/4 + tolerance for every row.
    pub upper_holds: bool,
    pub upper_tolerance: f64,
    /// max over rows of E(P) − P²/4 − E(0); at most zero when E(P) − P²/4
    /// peaks at P = 0.
    pub concavity_excess: f64,
    pub lower_bound: f64,
}

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const DISPERSION_TOL: f64 = 1e-9;

impl DispersionReport {
    pub fn passed(&self) -> bool {
        self.symmetry_defect < SYMMETRY_TOL && self.lower_holds && self.upper_holds
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Px\tPy\tPz\tE\tresidual\tchecks_passed\n");
        for r in &self.rows {
            let ok = match r.energy {
                Some(e) => {
                    let p2 = squared_distance(r.p, [0.0; 3]);
                    self.e0 <= e && e <= self.e0 + p2 / 4.0 + self.upper_tolerance
                }
                None => false,
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.p[0],
                r.p[1],
                r.p[2],
                r.energy.map_or("nan".into(), |e| format!("{e:.15e}")),
                r.residual.map_or("nan".into(), |e| format!("{e:.3e}")),
                ok
            ));
        }
        out
    }
}

/// E(P) on a set of momenta closed under negation and containing 0, with the
/// dispersion inequalities checked.
pub fn dispersion_scan(template: &TruncatedFockModel, p_values: &[[f64; 3]], opts: &LanczosOptions) -> Result<DispersionReport> {
    template.validate()?;
    let has = |q: [f64; 3]| p_values.contains(&q);
    if !has([0.0; 3]) {
        return Err(Error::InvalidConfig("momentum list must contain 0".into()));
    }
    if let Some(p) = p_values.iter().find(|p| !has([-p[0], -p[1], -p[2]])) {
        return Err(Error::InvalidConfig(format!("momentum list lacks -{p:?}")));
    }
    let rows: Vec<DispersionRow> = p_values
        .par_iter()
        .map(|&p| match template.with_momentum(p).ground_energy(opts) {
            Ok(r) => DispersionRow {
                p,
                energy: Some(r.energy),
                residual: Some(r.residual),
                iterations: r.iterations,
                error: None,
            },
            Err(e) => DispersionRow {
                p,
                energy: None,
                residual: None,
                iterations: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let energy_at = |q: [f64; 3]| rows.iter().find(|r| r.p == q).and_then(|r| r.energy);
    let e0 = energy_at([0.0; 3]).ok_or_else(|| Error::Internal("E(0) failed".into()))?;
    let mut symmetry_defect: f64 = 0.0;
    let mut lower_holds = true;
    let mut upper_holds = true;
    let mut concavity_excess = f64::NEG_INFINITY;
    for r in &rows {
        let Some(e) = r.energy else {
            lower_holds = false;
            upper_holds = false;
            continue;
        };
        if let Some(m) = energy_at([-r.p[0], -r.p[1], -r.p[2]]) {
            symmetry_defect = symmetry_defect.max((e - m).abs());
        }
        let p2 = squared_distance(r.p, [0.0; 3]);
        lower_holds &= e0 <= e;
        upper_holds &= e <= e0 + p2 / 4.0 + DISPERSION_TOL;
        concavity_excess = concavity_excess.max(e - p2 / 4.0 - e0);
    }
    Ok(DispersionReport {
        rows,
        e0,
        symmetry_defect,
        lower_holds,
        upper_holds,
        upper_tolerance: DISPERSION_TOL,
        concavity_excess,
        lower_bound: template.lower_bound(),
    })
}
