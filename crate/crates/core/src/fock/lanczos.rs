//! Lanczos iteration with full reorthogonalization for the lowest eigenvalue
//! of a real symmetric operator.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::SparseOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Bound on ‖Hv − Ev‖ for a normalized v.
    pub tol: f64,
    /// Krylov space size per cycle.
    pub krylov_dim: usize,
    /// Cycles restarted from the current Ritz vector.
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            krylov_dim: 160,
            max_restarts: 60,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub energy: f64,
    pub residual: f64,
    /// Matrix-vector products used.
    pub iterations: usize,
    pub dimension: usize,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // chunked so the summation order is fixed regardless of threads
    a.par_chunks(4096)
        .zip(b.par_chunks(4096))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.par_iter_mut().for_each(|v| *v *= alpha);
}

fn lowest_of_tridiagonal(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

/// Lowest eigenpair of `op`, certified by the true residual.
pub fn ground_energy(op: &SparseOperator, opts: &LanczosOptions) -> Result<GroundStateResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidConfig("empty operator".into()));
    }
    if !(opts.tol > 0.0) || opts.krylov_dim == 0 {
        return Err(Error::InvalidConfig("Lanczos needs tol > 0 and krylov_dim ≥ 1".into()));
    }
    let (lo, hi) = op.gershgorin();
    let norm_scale = lo.abs().max(hi.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut products = 0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    let m_max = opts.krylov_dim.min(n);
    let mut w = vec![0.0; n];
    for _ in 0..=opts.max_restarts {
        let s = dot(&start, &start).sqrt();
        scale(1.0 / s, &mut start);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas = Vec::with_capacity(m_max);
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            products += 1;
            let a = dot(&basis[j], &w);
            alphas.push(a);
            // two passes of classical Gram–Schmidt against the whole basis
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|v| dot(v, &w)).collect();
                for (v, c) in basis.iter().zip(&coeffs) {
                    axpy(-c, v, &mut w);
                }
            }
            let b = dot(&w, &w).sqrt();
            let invariant = b <= 1e-13 * norm_scale;
            let full = basis.len() == m_max;
            let check = invariant || full || alphas.len() % 10 == 0;
            if check {
                let (theta, y) = lowest_of_tridiagonal(&alphas, &betas);
                let estimate = b * y.last().expect("nonempty").abs();
                if invariant || full || estimate < 0.1 * opts.tol {
                    let _ = theta;
                    break;
                }
            }
            betas.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let (_, y) = lowest_of_tridiagonal(&alphas, &betas);
        let mut x = vec![0.0; n];
        for (v, c) in basis.iter().zip(&y) {
            axpy(*c, v, &mut x);
        }
        let s = dot(&x, &x).sqrt();
        scale(1.0 / s, &mut x);
        op.apply(&x, &mut w);
        products += 1;
        let energy = dot(&x, &w);
        axpy(-energy, &x, &mut w);
        let residual = dot(&w, &w).sqrt();
        if residual < best.1 {
            best = (energy, residual);
        }
        if residual <= opts.tol {
            return Ok(GroundStateResult {
                energy,
                residual,
                iterations: products,
                dimension: n,
                vector: x,
            });
        }
        start = x;
    }
    Err(Error::LanczosNotConverged {
        iterations: products,
        ritz: best.0,
        residual: best.1,
    })
}
