//! Uniform radial grids and spherically symmetric functions on them.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `r_i = (i + 1)·spacing`, `i = 0..node_count`; the origin is excluded
/// and the last node sits on the box edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    node_count: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(node_count: usize, spacing: f64) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {node_count}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { node_count, spacing })
    }

    /// Grid with the given spacing whose last node is the box edge.
    /// The box radius must be a whole number of spacings (to 1e-9).
    pub fn with_box(spacing: f64, box_radius: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        let ratio = box_radius / spacing;
        let n = ratio.round();
        if !(n >= 2.0) || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "box radius {box_radius} is not a multiple of spacing {spacing}"
            )));
        }
        Self::new(n as usize, spacing)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn box_radius(&self) -> f64 {
        self.node_count as f64 * self.spacing
    }

    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.node_count).map(move |i| self.node(i))
    }

    /// Trapezoid weight of node `i` (the integrand is taken to vanish at r = 0).
    pub fn weight(&self, i: usize) -> f64 {
        if i + 1 == self.node_count {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// 4π∫ f(r) r² dr by the trapezoid rule.
    pub fn integrate_r2(&self, f: &[f64]) -> f64 {
        4.0 * PI
            * f.iter()
                .enumerate()
                .map(|(i, v)| self.weight(i) * v * self.node(i).powi(2))
                .sum::<f64>()
    }

    fn same_as(&self, other: &RadialGrid) -> bool {
        self.node_count == other.node_count && self.spacing == other.spacing
    }
}

/// Samples of a radial wavefunction φ(r) or density n(r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    /// Normalized Gaussian π^{-3/4} e^{-r²/2}.
    pub fn gaussian(grid: RadialGrid) -> Self {
        let c = PI.powf(-0.75);
        Self::from_fn(grid, |r| c * (-0.5 * r * r).exp()).expect("finite samples")
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 4π∫ φ² r² dr.
    pub fn norm_sq(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        self.grid.integrate_r2(&sq)
    }

    /// 4π∫ n r² dr, treating the values as a density.
    pub fn mass(&self) -> f64 {
        self.grid.integrate_r2(&self.values)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::NotNormalized { deviation: (n - 1.0).abs() });
        }
        let s = n.sqrt().recip();
        Ok(Self { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() })
    }

    /// Errors unless |‖φ‖² − 1| ≤ `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let deviation = (self.norm_sq() - 1.0).abs();
        if deviation <= tol {
            Ok(())
        } else {
            Err(Error::NotNormalized { deviation })
        }
    }

    /// The density |φ|² on the same grid.
    pub fn density(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * v).collect() }
    }

    /// φ_λ(r) = λ^{3/2} φ(λr), realized by shrinking the spacing to h/λ.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        let grid = RadialGrid::new(self.grid.node_count, self.grid.spacing / lambda)?;
        let s = lambda.powf(1.5);
        Ok(Self { grid, values: self.values.iter().map(|v| v * s).collect() })
    }

    pub(crate) fn require_grid(&self, grid: &RadialGrid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "expected {} nodes at spacing {}, got {} at {}",
                grid.node_count, grid.spacing, self.grid.node_count, self.grid.spacing
            )))
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# spacing={} box={}\n", self.grid.spacing, self.grid.box_radius());
        for (r, v) in self.grid.nodes().zip(&self.values) {
            let _ = writeln!(out, "{r}\t{v}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '# spacing=.. box=..' header".into()))?;
        let mut spacing = None;
        let mut box_radius = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("spacing", v)) => spacing = Some(parse_f64(v)?),
                Some(("box", v)) => box_radius = Some(parse_f64(v)?),
                _ => {}
            }
        }
        let spacing = spacing.ok_or_else(|| Error::Parse("header lacks spacing".into()))?;
        let box_radius = box_radius.ok_or_else(|| Error::Parse("header lacks box".into()))?;
        let mut values = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let r = parse_f64(cols.next().unwrap_or(""))?;
            let v = parse_f64(cols.next().ok_or_else(|| Error::Parse(format!("one column: {line}")))?)?;
            let expected = (values.len() + 1) as f64 * spacing;
            if (r - expected).abs() > 1e-9 * expected.max(1.0) {
                return Err(Error::GridMismatch(format!("node {r} where {expected} expected")));
            }
            values.push(v);
        }
        let grid = RadialGrid::new(values.len(), spacing)?;
        if (grid.box_radius() - box_radius).abs() > 1e-9 * box_radius.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "header box {box_radius} but rows end at {}",
                grid.box_radius()
            )));
        }
        Self::new(grid, values)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// V(r) = 4π[(1/r)∫₀^r n s² ds + ∫_r^R n s ds], the potential of the charge
/// density n inside the box.
///
/// Trapezoid sums on the grid. The integrand has a kink at s = r; the two
/// leading Euler–Maclaurin terms of that kink, −(h²/12)·n and
/// (h⁴/240)·Δn, are added back. The result is the gradient of a
/// symmetric quadratic form in n, and every weight is positive, so V is
/// linear and monotone in n.
pub fn newton_potential(density: &RadialFunction) -> Result<RadialFunction> {
    let grid = density.grid;
    let n = &density.values;
    if n.len() != grid.node_count {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", n.len(), grid.node_count)));
    }
    let h = grid.spacing;
    let len = grid.node_count;
    // inner[i] = Σ_{j<i} w_j n_j r_j², outer[i] = Σ_{j>i} w_j n_j r_j
    let mut inner = vec![0.0; len];
    for i in 1..len {
        let j = i - 1;
        inner[i] = inner[j] + grid.weight(j) * n[j] * grid.node(j).powi(2);
    }
    let mut outer = vec![0.0; len];
    for i in (0..len - 1).rev() {
        let j = i + 1;
        outer[i] = outer[j] + grid.weight(j) * n[j] * grid.node(j);
    }
    // conservative (1/r²)(r² n')' at interior nodes; zero flux through r = h/2
    let laplacian = |i: usize| {
        let r = grid.node(i);
        let right = (r + 0.5 * h).powi(2) * (n[i + 1] - n[i]);
        let left = if i == 0 { 0.0 } else { (r - 0.5 * h).powi(2) * (n[i] - n[i - 1]) };
        (right - left) / (r * r * h * h)
    };
    let values = (0..len)
        .map(|i| {
            let r = grid.node(i);
            let mut diag = grid.weight(i) * n[i] * r;
            if i + 1 < len {
                diag += -h * h / 12.0 * n[i] + h.powi(4) / 240.0 * laplacian(i);
            }
            4.0 * PI * (inner[i] / r + diag + outer[i])
        })
        .collect();
    RadialFunction::new(grid, values)
}

/// D(n, m) = ∬ n(x) m(y)/|x − y|, contracted on the grid.
pub fn coulomb_energy(n: &RadialFunction, potential_of_m: &RadialFunction) -> Result<f64> {
    potential_of_m.require_grid(&n.grid)?;
    let prod: Vec<f64> = n.values.iter().zip(&potential_of_m.values).map(|(a, b)| a * b).collect();
    Ok(n.grid.integrate_r2(&prod))
}
