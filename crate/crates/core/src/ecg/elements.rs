//! Closed-form matrix elements between symmetrized correlated Gaussians.
//!
//! A product of two terms is again a Gaussian exp(−xᵀMx + 2uᵀx − c). Under
//! its normalized weight the coordinates are Gaussian with mean M⁻¹u
//! (along ẑ) and covariance M⁻¹/2 per Cartesian direction, so every
//! Coulomb element reduces to the mean of 1/|z| for an isotropic Gaussian
//! vector z, which is an error function.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::term::{CorrelatedGaussianTerm, Quadratic};
use crate::special::inverse_distance_mean;

/// One-particle density piece: `weight` times an isotropic Gaussian centred
/// at `mean`·ẑ with per-direction variance `var`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Component {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

/// Elements between two unsymmetrized terms.
#[derive(Debug, Clone, Copy)]
pub struct PieceElements {
    pub log_overlap: f64,
    pub overlap: f64,
    /// ⟨p, −½(Δ₁ + Δ₂) q⟩ / ⟨p, q⟩
    pub kinetic_ratio: f64,
    /// ⟨p, |x₁ − x₂|⁻¹ q⟩ / ⟨p, q⟩
    pub repulsion_ratio: f64,
    /// z-means of the two particles under the product weight.
    pub mean: [f64; 2],
    /// Per-direction variances of the two particles.
    pub var: [f64; 2],
    /// Per-direction covariance of (x₁, x₂).
    pub cov: [[f64; 2]; 2],
}

type Piece = PieceElements;

pub fn piece_elements(p: &CorrelatedGaussianTerm, q: &CorrelatedGaussianTerm) -> PieceElements {
    piece(&p.quadratic(), &q.quadratic())
}

/// Matrix elements between the unsymmetrized Gaussians `p` and `q`.
pub(crate) fn piece(p: &Quadratic, q: &Quadratic) -> Piece {
    let m = [
        [p.a[0][0] + q.a[0][0], p.a[0][1] + q.a[0][1]],
        [p.a[1][0] + q.a[1][0], p.a[1][1] + q.a[1][1]],
    ];
    let u = [p.v[0] + q.v[0], p.v[1] + q.v[1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let mean = [inv[0][0] * u[0] + inv[0][1] * u[1], inv[1][0] * u[0] + inv[1][1] * u[1]];
    let exponent = (u[0] * mean[0] + u[1] * mean[1] - p.c - q.c).min(0.0);
    let log_overlap = 1.5 * (PI * PI / det).ln() + exponent;
    let overlap = log_overlap.exp();

    // ∇ of each factor is (2v − 2Ax)·factor; average over the product weight
    let grad = |g: &Quadratic| {
        [
            2.0 * g.v[0] - 2.0 * (g.a[0][0] * mean[0] + g.a[0][1] * mean[1]),
            2.0 * g.v[1] - 2.0 * (g.a[1][0] * mean[0] + g.a[1][1] * mean[1]),
        ]
    };
    let fp = grad(p);
    let fq = grad(q);
    let mut trace = 0.0;
    for k in 0..2 {
        for (row, p_kl) in inv.iter().zip(p.a[k]) {
            trace += p_kl * (row[0] * q.a[0][k] + row[1] * q.a[1][k]);
        }
    }
    let kinetic_ratio = 0.5 * (fp[0] * fq[0] + fp[1] * fq[1] + 6.0 * trace);

    let rel_var = 0.5 * (inv[0][0] + inv[1][1] - 2.0 * inv[0][1]);
    let repulsion_ratio = inverse_distance_mean(mean[0] - mean[1], rel_var);
    Piece {
        log_overlap,
        overlap,
        kinetic_ratio,
        repulsion_ratio,
        mean,
        var: [0.5 * inv[0][0], 0.5 * inv[1][1]],
        cov: [[0.5 * inv[0][0], 0.5 * inv[0][1]], [0.5 * inv[1][0], 0.5 * inv[1][1]]],
    }
}

/// Matrix elements of a whole basis, for the unit-norm functions
/// g_i / ‖g_i‖. Working with normalized functions keeps every element O(1)
/// even when a term's raw norm under- or overflows.
#[derive(Debug, Clone)]
pub(crate) struct Elements {
    pub size: usize,
    /// ln ⟨g_i, g_i⟩ of the raw symmetrized terms.
    pub log_norms: Vec<f64>,
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    pub repulsion: DMatrix<f64>,
    /// Density-density Coulomb integrals between unordered pairs (i ≤ j).
    pub coulomb: DMatrix<f64>,
}

pub(crate) fn pair_count(size: usize) -> usize {
    size * (size + 1) / 2
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Elements {
    pub fn build(terms: &[CorrelatedGaussianTerm]) -> Self {
        let size = terms.len();
        let quads: Vec<Quadratic> = terms.iter().map(|t| t.canonical().quadratic()).collect();
        let swapped: Vec<Quadratic> = terms.iter().map(|t| t.canonical().swapped().quadratic()).collect();
        let pieces: Vec<(Piece, Piece)> = (0..size)
            .flat_map(|i| (i..size).map(move |j| (i, j)))
            .map(|(i, j)| (piece(&quads[i], &quads[j]), piece(&quads[i], &swapped[j])))
            .collect();
        // ⟨t_i + t_i', t_j + t_j'⟩ = 2(⟨t_i, t_j⟩ + ⟨t_i, t_j'⟩) by exchange symmetry
        let mut log_norms = Vec::with_capacity(size);
        let mut idx = 0;
        for i in 0..size {
            let (d, x) = &pieces[idx];
            log_norms.push(std::f64::consts::LN_2 + log_sum_exp(d.log_overlap, x.log_overlap));
            idx += size - i;
        }
        let mut overlap = DMatrix::zeros(size, size);
        let mut kinetic = DMatrix::zeros(size, size);
        let mut repulsion = DMatrix::zeros(size, size);
        let mut densities: Vec<[Component; 4]> = Vec::with_capacity(pieces.len());
        let mut idx = 0;
        for i in 0..size {
            for j in i..size {
                let (d, x) = &pieces[idx];
                idx += 1;
                let shift = 0.5 * (log_norms[i] + log_norms[j]);
                let wd = 2.0 * (d.log_overlap - shift).exp();
                let wx = 2.0 * (x.log_overlap - shift).exp();
                let s = wd + wx;
                let t = wd * d.kinetic_ratio + wx * x.kinetic_ratio;
                let c = wd * d.repulsion_ratio + wx * x.repulsion_ratio;
                overlap[(i, j)] = s;
                overlap[(j, i)] = s;
                kinetic[(i, j)] = t;
                kinetic[(j, i)] = t;
                repulsion[(i, j)] = c;
                repulsion[(j, i)] = c;
                let comp = |p: &Piece, w: f64, k: usize| Component { weight: w, mean: p.mean[k], var: p.var[k] };
                densities.push([comp(d, wd, 0), comp(d, wd, 1), comp(x, wx, 0), comp(x, wx, 1)]);
            }
        }
        let np = densities.len();
        let mut coulomb = DMatrix::zeros(np, np);
        for p in 0..np {
            for q in p..np {
                let mut sum = 0.0;
                for x in &densities[p] {
                    for y in &densities[q] {
                        sum += x.weight * y.weight * inverse_distance_mean(x.mean - y.mean, x.var + y.var);
                    }
                }
                coulomb[(p, q)] = sum;
                coulomb[(q, p)] = sum;
            }
        }
        Self { size, log_norms, overlap, kinetic, repulsion, coulomb }
    }

    /// Coefficients of the raw terms → coefficients of the unit-norm terms.
    pub fn to_unit(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.log_norms).map(|(c, l)| c * (0.5 * l).exp()).collect()
    }

    pub fn to_raw(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(&self.log_norms).map(|(c, l)| c * (-0.5 * l).exp()).collect()
    }

    /// p_P = c_i c_j, doubled off the diagonal, so that pᵀJp is the
    /// density-density Coulomb energy of Σ c_i g_i.
    pub fn pair_weights(&self, c: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(pair_count(self.size));
        for i in 0..self.size {
            for j in i..self.size {
                p.push(if i == j { c[i] * c[i] } else { 2.0 * c[i] * c[j] });
            }
        }
        p
    }

    /// G(c) with cᵀG(c)c = pᵀJp; the attraction enters the stationarity
    /// condition through 4G(c)c.
    pub fn attraction_operator(&self, c: &[f64]) -> DMatrix<f64> {
        let p = nalgebra::DVector::from_vec(self.pair_weights(c));
        let jp = &self.coulomb * p;
        let mut g = DMatrix::zeros(self.size, self.size);
        let mut idx = 0;
        for i in 0..self.size {
            for j in i..self.size {
                g[(i, j)] = jp[idx];
                g[(j, i)] = jp[idx];
                idx += 1;
            }
        }
        g
    }
}
