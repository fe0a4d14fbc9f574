use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::elements::Elements;
use super::term::Ansatz;
use crate::error::{Error, Result};
use crate::pekar::{kinetic_energy, self_coulomb, NORM_TOL};
use crate::radial::RadialFunction;

/// Normalized overlaps above this mark a pair of terms as duplicates.
pub const DUPLICATE_OVERLAP: f64 = 1.0 - 1e-10;
/// Smallest admissible eigenvalue of the normalized Gram matrix.
pub const GRAM_FLOOR: f64 = 1e-12;
/// Relative accuracy assumed for each closed-form matrix element.
pub const ELEMENT_EPS: f64 = 1e-14;
/// Normalization tolerance for [`pt_energy`].
pub const ANSATZ_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTBreakdown {
    pub kinetic: f64,
    /// ∬|φ|²/|x₁ − x₂|, without the factor U.
    pub repulsion: f64,
    pub attraction: f64,
    pub u: f64,
    pub total: f64,
}

impl PTBreakdown {
    pub fn new(kinetic: f64, repulsion: f64, attraction: f64, u: f64) -> Self {
        Self { kinetic, repulsion, attraction, u, total: kinetic + u * repulsion - attraction }
    }

    /// The same state evaluated at another repulsion strength.
    pub fn at(&self, u: f64) -> Self {
        Self::new(self.kinetic, self.repulsion, self.attraction, u)
    }

    /// |2K − (W − UC)| / W, zero at a stationary point of dilations.
    pub fn virial_defect(&self) -> f64 {
        (2.0 * self.kinetic - (self.attraction - self.u * self.repulsion)).abs() / self.attraction.abs()
    }
}

/// Σ_ij c_i m_ij c_j in twice-working precision (error-free products and
/// sums). Optimized states mix nearly dependent terms with large
/// coefficients of opposite sign, and plain summation loses the norm to
/// cancellation.
fn quad(m: &DMatrix<f64>, c: &[f64]) -> f64 {
    let mut acc = Compensated::default();
    for (j, cj) in c.iter().enumerate() {
        for (i, ci) in c.iter().enumerate() {
            let (x, ex) = two_prod(*ci, m[(i, j)]);
            let (y, ey) = two_prod(x, *cj);
            acc.add(y);
            acc.add_error(ey + ex * cj);
        }
    }
    acc.value()
}

#[derive(Default)]
struct Compensated {
    sum: f64,
    err: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let s = self.sum + x;
        let bp = s - self.sum;
        self.err += (self.sum - (s - bp)) + (x - bp);
        self.sum = s;
    }

    fn add_error(&mut self, e: f64) {
        self.err += e;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub(crate) fn breakdown(el: &Elements, c: &[f64], u: f64) -> PTBreakdown {
    let norm = quad(&el.overlap, c);
    let w4 = quad(&el.coulomb, &el.pair_weights(c));
    PTBreakdown::new(
        quad(&el.kinetic, c) / norm,
        quad(&el.repulsion, c) / norm,
        w4 / (SQRT_2 * norm * norm),
        u,
    )
}

fn quad_abs(m: &DMatrix<f64>, c: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (j, cj) in c.iter().enumerate() {
        for (i, ci) in c.iter().enumerate() {
            sum += (ci * m[(i, j)] * cj).abs();
        }
    }
    sum
}

/// Bound on the error of the energy at `c` from element round-off.
///
/// With nearly dependent terms the quadratic forms cancel to a ratio r and
/// the quartic attraction to r², so modest element errors can swamp the
/// result; states with a large bound are not trustworthy upper bounds.
pub(crate) fn roundoff_bound(el: &Elements, c: &[f64], u: f64) -> f64 {
    let n = quad(&el.overlap, c);
    let p = el.pair_weights(c);
    let e = breakdown(el, c, u).total;
    let quadratic = quad_abs(&el.kinetic, c) + u * quad_abs(&el.repulsion, c);
    ELEMENT_EPS * (quadratic / n + quad_abs(&el.coulomb, &p) / (SQRT_2 * n * n) + e.abs() * quad_abs(&el.overlap, c) / n)
}

/// Rejects duplicate terms and numerically singular Gram matrices.
pub(crate) fn check_conditioning(el: &Elements) -> Result<()> {
    check_conditioning_with(el, GRAM_FLOOR)
}

pub(crate) fn check_conditioning_with(el: &Elements, floor: f64) -> Result<()> {
    let n = el.size;
    let d: Vec<f64> = (0..n).map(|i| el.overlap[(i, i)].sqrt()).collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| el.overlap[(i, j)] / (d[i] * d[j]));
    let mut worst = (0, 0, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let o = normalized[(i, j)].abs();
            if o > worst.2 {
                worst = (i, j, o);
            }
        }
    }
    if worst.2 > DUPLICATE_OVERLAP {
        return Err(Error::IllConditioned { first: worst.0, second: worst.1, overlap: worst.2 });
    }
    if n > 1 {
        let min = normalized.symmetric_eigenvalues().min();
        if !(min > floor) {
            return Err(Error::IllConditioned { first: worst.0, second: worst.1, overlap: worst.2 });
        }
    }
    Ok(())
}

/// Pekar–Tomasevich energy of a normalized ansatz at repulsion strength U.
pub fn pt_energy(ansatz: &Ansatz, u: f64) -> Result<PTBreakdown> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("U must be a nonnegative number, got {u}")));
    }
    let el = Elements::build(&ansatz.terms);
    check_conditioning(&el)?;
    let c = el.to_unit(&ansatz.coefficients);
    let norm = quad(&el.overlap, &c);
    let deviation = (norm - 1.0).abs();
    if deviation > ANSATZ_NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    Ok(breakdown(&el, &c, u))
}

/// ⟨φ, φ⟩ of the symmetrized combination.
pub fn ansatz_norm(ansatz: &Ansatz) -> f64 {
    let el = Elements::build(&ansatz.terms);
    quad(&el.overlap, &el.to_unit(&ansatz.coefficients))
}

/// Rescales the coefficients to unit norm.
pub fn normalize(ansatz: &Ansatz) -> Result<Ansatz> {
    let n = ansatz_norm(ansatz);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::NotNormalized { deviation: (n - 1.0).abs() });
    }
    let s = n.sqrt().recip();
    Ansatz::new(ansatz.terms.clone(), ansatz.coefficients.iter().map(|c| c * s).collect())
}

/// 2T₁ + (U − 2√2)·D, the functional on the product state ψ ⊗ ψ.
pub fn product_baseline(psi: &RadialFunction, u: f64) -> Result<f64> {
    psi.check_normalized(NORM_TOL)?;
    let t1 = kinetic_energy(psi);
    let d = self_coulomb(psi)?;
    Ok(2.0 * t1 + (u - 2.0 * SQRT_2) * d)
}

/// Lowest eigenpair of F c = μ S c, with cᵀSc = 1.
pub(crate) fn lowest_generalized(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
    let chol = s.clone().cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let reduced = &linv * f * linv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let (k, &mu) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let y = eig.eigenvectors.column(k).into_owned();
    let c = linv.transpose() * y;
    Some((mu, c.iter().cloned().collect()))
}

fn normalized_in(el: &Elements, c: &[f64]) -> Option<Vec<f64>> {
    let n = quad(&el.overlap, c);
    if n > 0.0 && n.is_finite() {
        let s = n.sqrt().recip();
        Some(c.iter().map(|x| x * s).collect())
    } else {
        None
    }
}

/// Minimizes the energy over the (unit-basis) coefficients at fixed terms.
///
/// Each step takes the lowest eigenvector of the Fock-like matrix
/// T + UC − √2·G(c) and moves toward it with a backtracking line search, so
/// the energy never increases from `start`.
pub(crate) fn optimize_coefficients(el: &Elements, u: f64, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let h = &el.kinetic + &el.repulsion * u;
    let mut c = normalized_in(el, start).unwrap_or_else(|| {
        let uniform = vec![1.0; el.size];
        normalized_in(el, &uniform).unwrap_or(uniform)
    });
    let mut e = breakdown(el, &c, u).total;
    for _ in 0..max_iter {
        let fock = &h - el.attraction_operator(&c) * SQRT_2;
        let Some((_, mut next)) = lowest_generalized(&fock, &el.overlap) else { break };
        let align: f64 = {
            let a = DVector::from_column_slice(&c);
            let b = DVector::from_column_slice(&next);
            a.dot(&(&el.overlap * b))
        };
        if align < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = c.iter().zip(&next).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            if let Some(trial) = normalized_in(el, &trial) {
                let et = breakdown(el, &trial, u).total;
                if et < e {
                    accepted = Some((trial, et));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, et)) = accepted else { break };
        let gain = e - et;
        c = trial;
        e = et;
        if gain <= 1e-15 * e.abs().max(1e-300) {
            break;
        }
    }
    (c, e)
}
