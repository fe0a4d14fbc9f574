use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// exp(−a1|x₁ − s ẑ|² − a2|x₂ + s ẑ|² − b|x₁ − x₂|²), always used together
/// with its image under x₁ ↔ x₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedGaussianTerm {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub s: f64,
}

/// exp(−xᵀAx + 2vᵀx − c) in the z-coordinates (z₁, z₂); the transverse
/// coordinates carry the same A with no linear part.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quadratic {
    pub a: [[f64; 2]; 2],
    pub v: [f64; 2],
    pub c: f64,
}

impl CorrelatedGaussianTerm {
    pub fn new(a1: f64, a2: f64, b: f64, s: f64) -> Result<Self> {
        let t = Self { a1, a2, b, s };
        t.validate()?;
        Ok(t)
    }

    /// Equal single-particle exponents, the pair displaced by ±s.
    pub fn symmetric(a: f64, b: f64, s: f64) -> Result<Self> {
        Self::new(a, a, b, s)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a1, a2, b, s } = *self;
        if ![a1, a2, b, s].iter().all(|x| x.is_finite()) {
            return Err(Error::Domain(format!("non-finite term parameters {self:?}")));
        }
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(Error::Domain(format!("exponents must be positive: a1 = {a1}, a2 = {a2}")));
        }
        if b < 0.0 {
            return Err(Error::Domain(format!("correlation exponent must be nonnegative: b = {b}")));
        }
        Ok(())
    }

    /// The same term with the particle labels exchanged.
    pub fn swapped(&self) -> Self {
        Self { a1: self.a2, a2: self.a1, b: self.b, s: -self.s }
    }

    /// Representative of {term, swapped term}: a1 ≤ a2, and s ≥ 0 on ties.
    pub fn canonical(&self) -> Self {
        if self.a1 > self.a2 || (self.a1 == self.a2 && self.s < 0.0) {
            self.swapped()
        } else {
            *self
        }
    }

    /// x ↦ λx: exponents scale by λ², the displacement by 1/λ.
    pub fn dilate(&self, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        Self { a1: self.a1 * l2, a2: self.a2 * l2, b: self.b * l2, s: self.s / lambda }
    }

    pub(crate) fn quadratic(&self) -> Quadratic {
        let Self { a1, a2, b, s } = *self;
        Quadratic {
            a: [[a1 + b, -b], [-b, a2 + b]],
            v: [a1 * s, -a2 * s],
            c: (a1 + a2) * s * s,
        }
    }
}

/// Linear combination of symmetrized correlated Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub terms: Vec<CorrelatedGaussianTerm>,
    pub coefficients: Vec<f64>,
}

impl Ansatz {
    pub fn new(terms: Vec<CorrelatedGaussianTerm>, coefficients: Vec<f64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidConfig("an ansatz needs at least one term".into()));
        }
        if terms.len() != coefficients.len() {
            return Err(Error::InvalidConfig(format!(
                "{} terms but {} coefficients",
                terms.len(),
                coefficients.len()
            )));
        }
        for t in &terms {
            t.validate()?;
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient {i} is not finite")));
        }
        Ok(Self { terms, coefficients })
    }

    /// One term with unit coefficient (not normalized).
    pub fn single(term: CorrelatedGaussianTerm) -> Result<Self> {
        Self::new(vec![term], vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dilate(&self, lambda: f64) -> Self {
        // ψ_λ(x) = λ³ψ(λx) keeps the norm; each term picks up the same factor
        let c = lambda.powi(3);
        Self {
            terms: self.terms.iter().map(|t| t.dilate(lambda)).collect(),
            coefficients: self.coefficients.iter().map(|x| x * c).collect(),
        }
    }

    /// Appends terms with zero coefficients.
    pub fn extended(&self, extra: &[CorrelatedGaussianTerm]) -> Self {
        let mut out = self.clone();
        out.terms.extend_from_slice(extra);
        out.coefficients.extend(std::iter::repeat_n(0.0, extra.len()));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# ecg-ansatz terms={}\n# a1\ta2\tb\ts\tcoefficient\n", self.len());
        for (t, c) in self.terms.iter().zip(&self.coefficients) {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", t.a1, t.a2, t.b, t.s, c);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut coefficients = Vec::new();
        let mut declared = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.split_whitespace().find_map(|f| f.strip_prefix("terms=")) {
                    declared = Some(n.parse::<usize>().map_err(|_| Error::Parse(format!("bad term count {n:?}")))?);
                }
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse().map_err(|_| Error::Parse(format!("not a number: {f:?}"))))
                .collect::<Result<_>>()?;
            if fields.len() != 5 {
                return Err(Error::Parse(format!("expected 5 columns, got {}: {line}", fields.len())));
            }
            terms.push(CorrelatedGaussianTerm::new(fields[0], fields[1], fields[2], fields[3])?);
            coefficients.push(fields[4]);
        }
        if let Some(n) = declared {
            if n != terms.len() {
                return Err(Error::Parse(format!("header declares {n} terms, found {}", terms.len())));
            }
        }
        Self::new(terms, coefficients)
    }
}
