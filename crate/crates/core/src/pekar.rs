//! The single-polaron Pekar problem: energy functional, self-consistent
//! solver and the extrapolated constant c_p.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::radial::{coulomb_energy, newton_potential, RadialFunction, RadialGrid};

/// Second-derivative weights of the 7-point central stencil (times h²).
const D2: [f64; 4] = [-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0];

/// Normalization tolerance accepted by the energy functionals.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PekarBreakdown {
    pub kinetic: f64,
    pub attraction: f64,
    pub total: f64,
}

impl PekarBreakdown {
    fn new(kinetic: f64, attraction: f64) -> Self {
        Self { kinetic, attraction, total: kinetic - attraction }
    }

    /// |2T − W| / |W|
    pub fn virial_defect(&self) -> f64 {
        (2.0 * self.kinetic - self.attraction).abs() / self.attraction.abs()
    }
}

/// −½ d²/dr² acting on u = rφ at the interior nodes `0..N-1`.
///
/// u(0) = 0 is imposed by odd reflection, which keeps the matrix symmetric;
/// u vanishes at and beyond the box edge.
pub(crate) fn kinetic_matrix(grid: &RadialGrid) -> SymBanded {
    let n = grid.node_count() - 1;
    let scale = -0.5 / grid.spacing().powi(2);
    let mut m = SymBanded::zeros(n, 3);
    for i in 0..n {
        for (k, c) in D2.iter().enumerate() {
            let j = i + k;
            if j < n {
                m.add(i, j, scale * c);
            }
            // mirror image of node i - k across the origin; the (mirror, i)
            // entry is produced by row `mirror`, so only the upper half is added
            if k > i + 1 {
                let mirror = k - i - 2;
                if mirror >= i && mirror < n {
                    m.add(i, mirror, -scale * c);
                }
            }
        }
    }
    m
}

fn interior_u(phi: &RadialFunction) -> Vec<f64> {
    let grid = phi.grid();
    let n = grid.node_count() - 1;
    (0..n).map(|i| grid.node(i) * phi.values()[i]).collect()
}

/// ½∫|∇φ|² = 2π∫ (u')² dr with the Dirichlet stencil.
pub fn kinetic_energy(phi: &RadialFunction) -> f64 {
    let grid = phi.grid();
    let u = interior_u(phi);
    let ku = kinetic_matrix(grid).matvec(&u);
    4.0 * PI * grid.spacing() * u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>()
}

/// D[|φ|²] = ∬ |φ(x)|²|φ(y)|²/|x − y|.
pub fn self_coulomb(phi: &RadialFunction) -> Result<f64> {
    let n = phi.density();
    let v = newton_potential(&n)?;
    coulomb_energy(&n, &v)
}

/// Both terms of the functional without the normalization check.
pub(crate) fn breakdown_unchecked(phi: &RadialFunction) -> Result<PekarBreakdown> {
    let t = kinetic_energy(phi);
    let w = self_coulomb(phi)? / SQRT_2;
    Ok(PekarBreakdown::new(t, w))
}

/// T − W with T = ½∫|∇φ|² and W = (1/√2)∬|φ|²|φ|²/|x − y|.
pub fn pekar_energy(phi: &RadialFunction) -> Result<PekarBreakdown> {
    phi.check_normalized(NORM_TOL)?;
    breakdown_unchecked(phi)
}

/// Minimizer of λ²T − λW over λ ≥ 0: returns (λ*, E*).
pub fn optimal_rescale(kinetic: f64, linear_term: f64) -> Result<(f64, f64)> {
    if !(kinetic > 0.0) {
        return Err(Error::Domain(format!("kinetic term must be positive, got {kinetic}")));
    }
    if linear_term <= 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((linear_term / (2.0 * kinetic), -linear_term * linear_term / (4.0 * kinetic)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// φ ∝ e^{−r}
    Exponential,
    /// φ ∝ e^{−r²/2}
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SCFConfig {
    pub spacing: f64,
    pub box_radius: f64,
    pub mixing: f64,
    pub max_iter: usize,
    pub energy_tol: f64,
    /// Bound on ‖n_out − n_in‖ (weighted L²) also required for convergence.
    pub density_tol: f64,
    pub initial: InitialGuess,
}

impl Default for SCFConfig {
    fn default() -> Self {
        Self {
            spacing: 0.02,
            box_radius: 20.0,
            mixing: 0.3,
            max_iter: 500,
            energy_tol: 1e-10,
            density_tol: 1e-11,
            initial: InitialGuess::Exponential,
        }
    }
}

impl SCFConfig {
    pub fn validate(&self) -> Result<RadialGrid> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidConfig(format!("mixing must lie in (0, 1], got {}", self.mixing)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.density_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("density_tol must be positive, got {}", self.density_tol)));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("energy_tol must be positive, got {}", self.energy_tol)));
        }
        RadialGrid::with_box(self.spacing, self.box_radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PekarSolution {
    pub phi: RadialFunction,
    pub energy: f64,
    pub breakdown: PekarBreakdown,
    pub multiplier: f64,
    pub iterations: usize,
    pub virial_defect: f64,
    /// Energy after each iteration.
    pub trace: Vec<f64>,
}

/// Self-consistent minimization of the Pekar functional on a radial grid.
///
/// Each step solves the lowest eigenpair of −½u″ − √2·V u, where V is the
/// potential of the current (mixed) density, then mixes the new density in
/// linearly. Stops once successive energies differ by less than the energy
/// tolerance and the output density matches the input density to within
/// the density tolerance. The energy is stationary at the fixed point, so the
/// second condition is what makes the virial identity hold to the same
/// precision.
pub fn solve_choquard(config: &SCFConfig) -> Result<PekarSolution> {
    let grid = config.validate()?;
    let guess = match config.initial {
        InitialGuess::Exponential => RadialFunction::from_fn(grid, |r| (-r).exp())?,
        InitialGuess::Gaussian => RadialFunction::gaussian(grid),
    };
    let mut density = guess.normalized()?.density();
    let kinetic = kinetic_matrix(&grid);
    let n_inner = grid.node_count() - 1;
    let norm = (4.0 * PI * grid.spacing()).sqrt();

    let mut trace: Vec<f64> = Vec::new();
    let mut last: Option<PekarSolution> = None;
    let mut change = f64::INFINITY;
    for iter in 1..=config.max_iter {
        let v = newton_potential(&density)?;
        let mut op = kinetic.clone();
        let shift: Vec<f64> = v.values()[..n_inner].iter().map(|x| -SQRT_2 * x).collect();
        op.add_diagonal(&shift);
        let (mu, mut u) = op.lowest_eigenpair();
        if u.iter().sum::<f64>() < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
        check_nodeless(&u)?;
        let mut values: Vec<f64> = (0..n_inner).map(|i| u[i] / (norm * grid.node(i))).collect();
        values.push(0.0);
        let phi = RadialFunction::new(grid, values)?;
        let breakdown = breakdown_unchecked(&phi)?;
        let energy = breakdown.total;
        if let Some(prev) = trace.last() {
            change = (energy - prev).abs();
        }
        trace.push(energy);

        let fresh = phi.density();
        let residual: Vec<f64> =
            fresh.values().iter().zip(density.values()).map(|(a, b)| (a - b).powi(2)).collect();
        let residual = grid.integrate_r2(&residual).sqrt();
        let mixed: Vec<f64> = density
            .values()
            .iter()
            .zip(fresh.values())
            .map(|(old, new)| (1.0 - config.mixing) * old + config.mixing * new)
            .collect();
        density = RadialFunction::new(grid, mixed)?;

        let solution = PekarSolution {
            phi,
            energy,
            breakdown,
            multiplier: mu,
            iterations: iter,
            virial_defect: breakdown.virial_defect(),
            trace: trace.clone(),
        };
        if change < config.energy_tol && residual < config.density_tol {
            return Ok(solution);
        }
        last = Some(solution);
    }
    Err(Error::ScfNotConverged {
        iterations: config.max_iter,
        last_change: change,
        last: Box::new(last.expect("at least one iteration")),
    })
}

fn check_nodeless(u: &[f64]) -> Result<()> {
    let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-8 * peak;
    if let Some(i) = u.iter().position(|&x| x < -floor) {
        return Err(Error::Internal(format!(
            "ground profile changes sign at node {i} (value {:e}, peak {peak:e})",
            u[i]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    /// Refinement ladder, coarse to fine.
    pub spacings: Vec<f64>,
    pub box_radius: f64,
    /// Leading error exponent in the spacing.
    pub order: f64,
    /// Fraction of the box used for the truncation check (at the coarsest spacing).
    pub box_check_fraction: f64,
    /// Warn when the box check moves the energy by more than this.
    pub box_warn_threshold: f64,
    pub mixing: f64,
    pub max_iter: usize,
    pub energy_tol: f64,
    pub density_tol: f64,
    pub parallel: bool,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        let scf = SCFConfig::default();
        Self {
            spacings: vec![0.04, 0.02, 0.01],
            box_radius: 24.0,
            order: 4.0,
            box_check_fraction: 0.75,
            box_warn_threshold: 1e-8,
            mixing: scf.mixing,
            max_iter: scf.max_iter,
            energy_tol: scf.energy_tol,
            density_tol: scf.density_tol,
            parallel: true,
        }
    }
}

impl ExtrapolationConfig {
    fn scf(&self, spacing: f64, box_radius: f64) -> SCFConfig {
        SCFConfig {
            spacing,
            box_radius,
            mixing: self.mixing,
            max_iter: self.max_iter,
            energy_tol: self.energy_tol,
            density_tol: self.density_tol,
            initial: InitialGuess::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub spacing: f64,
    pub box_radius: f64,
    pub energy: f64,
    pub iterations: usize,
    pub virial_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpEstimate {
    pub c_p: f64,
    /// Extrapolation spread plus box sensitivity; `None` for a single level.
    pub error_estimate: Option<f64>,
    pub levels: Vec<LevelResult>,
    pub box_check: Option<LevelResult>,
    pub box_sensitivity: f64,
    pub warnings: Vec<String>,
}

/// Runs the refinement ladder and Richardson-extrapolates to zero spacing.
pub fn compute_cp(config: &ExtrapolationConfig) -> Result<CpEstimate> {
    if config.spacings.is_empty() {
        return Err(Error::InvalidConfig("empty spacing ladder".into()));
    }
    if !(config.box_check_fraction > 0.0 && config.box_check_fraction < 1.0) {
        return Err(Error::InvalidConfig("box_check_fraction must lie in (0, 1)".into()));
    }
    let mut jobs: Vec<(usize, f64, f64)> =
        config.spacings.iter().enumerate().map(|(i, &h)| (i, h, config.box_radius)).collect();
    let coarse = config.spacings.iter().cloned().fold(0.0, f64::max);
    // snap the reduced box to the coarse grid
    let small_box = (config.box_radius * config.box_check_fraction / coarse).round() * coarse;
    jobs.push((config.spacings.len(), coarse, small_box));

    let run = |&(level, h, r): &(usize, f64, f64)| -> Result<LevelResult> {
        let wrap = |source| Error::LevelFailed { level, spacing: h, source: Box::new(source) };
        let sol = solve_choquard(&config.scf(h, r)).map_err(wrap)?;
        Ok(LevelResult {
            spacing: h,
            box_radius: r,
            energy: sol.energy,
            iterations: sol.iterations,
            virial_defect: sol.virial_defect,
        })
    };
    let results: Vec<Result<LevelResult>> = if config.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let box_check = results.pop();
    let levels = results;

    let mut warnings = Vec::new();
    let full_coarse = levels
        .iter()
        .find(|l| l.spacing == coarse)
        .expect("coarsest level present");
    let box_sensitivity = box_check.as_ref().map_or(0.0, |b| (b.energy - full_coarse.energy).abs());
    if box_sensitivity > config.box_warn_threshold {
        warnings.push(format!(
            "box radius {} may be too small: shrinking it to {:.4} changes the energy by {:.3e}",
            config.box_radius, small_box, box_sensitivity
        ));
    }

    let (c_p, error_estimate) = if levels.len() == 1 {
        warnings.push("single level: extrapolation skipped, no error estimate".into());
        (levels[0].energy, None)
    } else {
        let hs: Vec<f64> = levels.iter().map(|l| l.spacing).collect();
        let es: Vec<f64> = levels.iter().map(|l| l.energy).collect();
        let e0 = richardson(&hs, &es, config.order)?;
        let finest = levels
            .iter()
            .min_by(|a, b| a.spacing.total_cmp(&b.spacing))
            .expect("nonempty");
        (e0, Some((e0 - finest.energy).abs() + box_sensitivity))
    };
    Ok(CpEstimate { c_p, error_estimate, levels, box_check, box_sensitivity, warnings })
}

/// Value at h = 0 of E(h) = E₀ + Σ_m a_m h^{p + 2m} through the given points.
pub fn richardson(spacings: &[f64], values: &[f64], order: f64) -> Result<f64> {
    let n = spacings.len();
    if n != values.len() || n < 2 {
        return Err(Error::InvalidConfig("need at least two (spacing, value) pairs".into()));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if j == 0 {
            1.0
        } else {
            spacings[i].powf(order + 2.0 * (j - 1) as f64)
        }
    });
    let rhs = nalgebra::DVector::from_column_slice(values);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidConfig("repeated spacings in the ladder".into()))?;
    Ok(sol[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_grid() -> RadialGrid {
        RadialGrid::with_box(0.02, 20.0).unwrap()
    }

    #[test]
    fn gaussian_terms_match_closed_forms() {
        let b = pekar_energy(&RadialFunction::gaussian(gaussian_grid())).unwrap();
        assert!((b.kinetic - 0.75).abs() < 1e-10, "T = {}", b.kinetic);
        assert!((b.attraction - 1.0 / PI.sqrt()).abs() < 1e-10, "W = {}", b.attraction);
    }

    #[test]
    fn kinetic_matrix_is_symmetric_with_reflected_corner() {
        let grid = RadialGrid::new(10, 0.1).unwrap();
        let m = kinetic_matrix(&grid);
        let s = -0.5 / 0.01;
        assert!((m.get(0, 0) - s * (D2[0] - D2[2])).abs() < 1e-12);
        assert!((m.get(0, 1) - s * (D2[1] - D2[3])).abs() < 1e-12);
        assert!((m.get(1, 1) - s * D2[0]).abs() < 1e-12);
        assert!((m.get(1, 0) - s * (D2[1] - D2[3])).abs() < 1e-12);
        assert!((m.get(2, 5) - s * D2[3]).abs() < 1e-12);
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(optimal_rescale(1.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(optimal_rescale(1.0, 2.0).unwrap(), (1.0, -1.0));
        assert!(matches!(optimal_rescale(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_mixing_is_rejected() {
        let cfg = SCFConfig { mixing: 0.0, ..Default::default() };
        assert!(matches!(solve_choquard(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn richardson_recovers_polynomial() {
        let hs = [0.4, 0.2, 0.1];
        let es: Vec<f64> = hs.iter().map(|h: &f64| -1.0 + 3.0 * h.powi(4) - 2.0 * h.powi(6)).collect();
        assert!((richardson(&hs, &es, 4.0).unwrap() + 1.0).abs() < 1e-13);
    }
}
