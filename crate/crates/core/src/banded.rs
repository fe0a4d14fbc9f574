//! Symmetric banded matrices and their lowest eigenpair.
//!
//! Eigenvalue counts come from the inertia of an unpivoted LDLᵀ
//! factorization of `A - σI` (Sylvester's law), so bisection brackets the
//! lowest eigenvalue to machine precision. The eigenvector follows from
//! inverse iteration with a shift just below it, where `A - σI` is
//! positive definite and the factorization is stable.

#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    /// `bands[k][i] = A[i][i + k]`
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|k| vec![0.0; n.saturating_sub(k)]).collect();
        Self { n, bands }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bandwidth() {
            0.0
        } else {
            self.bands[k][lo]
        }
    }

    /// Adds `value` to A[i][j] (and A[j][i]).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bandwidth(), "entry outside the band");
        self.bands[k][lo] += value;
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        for (a, d) in self.bands[0].iter_mut().zip(diag) {
            *a += d;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(a, v)| a * v).collect();
        for (k, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + k];
                y[i + k] += a * x[i];
            }
        }
        y
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut radius = 0.0;
            for k in 1..=self.bandwidth() {
                if i + k < self.n {
                    radius += self.bands[k][i].abs();
                }
                if i >= k {
                    radius += self.bands[k][i - k].abs();
                }
            }
            let d = self.bands[0][i];
            lo = lo.min(d - radius);
            hi = hi.max(d + radius);
        }
        (lo, hi)
    }

    /// LDLᵀ of `A - σI`; returns the unit-lower factor by columns and D.
    fn ldl(&self, sigma: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.n;
        let bw = self.bandwidth();
        // l[k][i] = L[i + k][i]
        let mut l: Vec<Vec<f64>> = (0..=bw).map(|k| vec![0.0; n.saturating_sub(k)]).collect();
        let mut d = vec![0.0; n];
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..n {
            let mut di = self.bands[0][i] - sigma;
            for k in 1..=bw.min(i) {
                let lik = l[k][i - k];
                di -= lik * lik * d[i - k];
            }
            if di == 0.0 {
                di = tiny;
            }
            d[i] = di;
            for j in 1..=bw {
                if i + j >= n {
                    break;
                }
                // A[i+j][i] - Σ_m L[i+j][m] L[i][m] d[m]
                let mut s = self.bands[j][i];
                for m_off in 1..=bw {
                    if m_off > i {
                        break;
                    }
                    let m = i - m_off;
                    if i + j - m > bw {
                        continue;
                    }
                    s -= l[i + j - m][m] * l[m_off][m] * d[m];
                }
                l[j][i] = s / di;
            }
        }
        (l, d)
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let (_, d) = self.ldl(sigma);
        d.iter().filter(|&&v| v < 0.0).count()
    }

    fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        let (l, d) = self.ldl(sigma);
        let n = self.n;
        let bw = self.bandwidth();
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 1..=bw.min(i) {
                y[i] -= l[k][i - k] * y[i - k];
            }
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n).rev() {
            for k in 1..=bw {
                if i + k < n {
                    y[i] -= l[k][i] * y[i + k];
                }
            }
        }
        y
    }

    /// Lowest eigenvalue and a unit-norm eigenvector.
    pub fn lowest_eigenpair(&self) -> (f64, Vec<f64>) {
        let n = self.n;
        assert!(n > 0, "empty matrix");
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
        }
        // lo is a certified lower bound: A - lo·I has no negative pivots
        let shift = lo - 64.0 * f64::EPSILON * scale;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        for _ in 0..4 {
            let w = self.solve_shifted(shift, &v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.into_iter().map(|x| x / norm).collect();
        }
        let av = self.matvec(&v);
        let rayleigh = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        (rayleigh, v)
    }
}
