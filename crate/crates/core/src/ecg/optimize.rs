use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elements::Elements;
use super::energy::{check_conditioning_with, optimize_coefficients, roundoff_bound, pt_energy, PTBreakdown};
use super::term::{Ansatz, CorrelatedGaussianTerm};
use crate::error::{Error, Result};
use crate::pekar::optimal_rescale;
use crate::simplex::{nelder_mead, SimplexOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub basis_size: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Random trial terms drawn each time the basis grows by one.
    pub candidates: usize,
    /// Passes of per-term simplex refinement.
    pub sweeps: usize,
    /// Objective evaluations per term per pass.
    pub simplex_evals: usize,
    pub coefficient_iters: usize,
    /// Keep every b at zero (uncorrelated terms).
    pub freeze_b: bool,
    /// Keep every s at zero (single-centre terms).
    pub freeze_s: bool,
    /// A pass that gains less than this ends the refinement.
    pub sweep_tol: f64,
    /// Smallest normalized-Gram eigenvalue accepted during the search.
    /// Stricter than the evaluation floor so that optimized states keep
    /// well-conditioned coefficients.
    pub gram_floor: f64,
    /// States whose energy round-off bound exceeds this are rejected.
    pub roundoff_tol: f64,
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            basis_size: 4,
            restarts: 4,
            seed: 0x5EED,
            candidates: 24,
            sweeps: 6,
            simplex_evals: 160,
            coefficient_iters: 60,
            freeze_b: false,
            freeze_s: false,
            sweep_tol: 1e-9,
            gram_floor: 1e-8,
            roundoff_tol: 1e-9,
            parallel: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis_size == 0 {
            return Err(Error::InvalidConfig("basis_size must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.coefficient_iters == 0 {
            return Err(Error::InvalidConfig("coefficient_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStatus {
    pub restarts_completed: usize,
    pub restarts_failed: usize,
    pub pruned_terms: usize,
    pub evaluations: usize,
    /// Restart (or warm start) that produced the result.
    pub best_restart: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedAnsatz {
    pub ansatz: Ansatz,
    pub breakdown: PTBreakdown,
    pub status: OptimizerStatus,
}

/// Upper bound on c_bp(U) from an optimized correlated-Gaussian ansatz.
pub fn optimize_ansatz(u: f64, config: &OptimizerConfig) -> Result<(Ansatz, PTBreakdown)> {
    config.validate()?;
    let out = optimize_ansatz_from(u, config, &[])?;
    Ok((out.ansatz, out.breakdown))
}

/// As [`optimize_ansatz`], with extra starting points. Each warm start is
/// refined as one more restart.
/// `config.restarts` may be zero when warm starts are supplied.
pub fn optimize_ansatz_from(u: f64, config: &OptimizerConfig, warm: &[Ansatz]) -> Result<OptimizedAnsatz> {
    let fresh_ok = OptimizerConfig { restarts: config.restarts.max(1), ..config.clone() };
    fresh_ok.validate()?;
    if config.restarts + warm.len() == 0 {
        return Err(Error::InvalidConfig("no restarts and no warm starts".into()));
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("U must be a nonnegative number, got {u}")));
    }
    let jobs: Vec<Start> = (0..config.restarts)
        .map(Start::Fresh)
        .chain(warm.iter().cloned().map(Start::Warm))
        .collect();
    let run = |(k, start): (usize, &Start)| Restart::run(u, config, k, start);
    let results: Vec<Result<Run>> = if config.parallel {
        jobs.par_iter().enumerate().map(run).collect()
    } else {
        jobs.iter().enumerate().map(run).collect()
    };

    let mut status = OptimizerStatus {
        restarts_completed: 0,
        restarts_failed: 0,
        pruned_terms: 0,
        evaluations: 0,
        best_restart: 0,
        notes: Vec::new(),
    };
    let mut best: Option<(usize, Run)> = None;
    let mut best_seen = f64::INFINITY;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(run) => {
                status.restarts_completed += 1;
                status.pruned_terms += run.pruned;
                status.evaluations += run.evaluations;
                best_seen = best_seen.min(run.energy);
                if best.as_ref().is_none_or(|(_, b)| run.energy < b.energy) {
                    best = Some((k, run));
                }
            }
            Err(e) => {
                status.restarts_failed += 1;
                status.notes.push(format!("start {k}: {e}"));
            }
        }
    }
    let (k, run) = best.ok_or(Error::OptimizerFailed { best: best_seen })?;
    status.best_restart = k;
    if run.pruned > 0 {
        status.notes.push(format!("{} near-duplicate terms pruned", status.pruned_terms));
    }
    let raw = Elements::build(&run.terms).to_raw(&run.coefficients);
    let (ansatz, breakdown) = final_rescale(&run.terms, &raw, u)?;
    Ok(OptimizedAnsatz { ansatz, breakdown, status })
}

/// Exact dilation to the minimum of λ²K + λ(UC − W).
pub fn final_rescale(terms: &[CorrelatedGaussianTerm], c: &[f64], u: f64) -> Result<(Ansatz, PTBreakdown)> {
    let ansatz = Ansatz::new(terms.iter().map(|t| t.canonical()).collect(), c.to_vec())?;
    let ansatz = super::energy::normalize(&ansatz)?;
    let b = pt_energy(&ansatz, u)?;
    let linear = b.attraction - u * b.repulsion;
    if linear <= 0.0 {
        return Ok((ansatz, b));
    }
    let (lambda, _) = optimal_rescale(b.kinetic, linear)?;
    let scaled = super::energy::normalize(&ansatz.dilate(lambda))?;
    let bs = pt_energy(&scaled, u)?;
    // keep the unscaled state if rounding made the dilation worse
    if bs.total <= b.total {
        Ok((scaled, bs))
    } else {
        Ok((ansatz, b))
    }
}

enum Start {
    Fresh(usize),
    Warm(Ansatz),
}

struct Run {
    terms: Vec<CorrelatedGaussianTerm>,
    coefficients: Vec<f64>,
    energy: f64,
    pruned: usize,
    evaluations: usize,
}

struct Restart<'a> {
    u: f64,
    config: &'a OptimizerConfig,
    rng: ChaCha8Rng,
    terms: Vec<CorrelatedGaussianTerm>,
    c: Vec<f64>,
    energy: f64,
    evaluations: usize,
    pruned: usize,
}

/// Terms with (a1 + a2)s² beyond this are fully dissociated; larger
/// displacements change nothing but the round-off.
const MAX_DISPLACEMENT_EXPONENT: f64 = 400.0;

/// Exponent of the scale-optimized single Gaussian, 2/(9π).
const BASE_EXPONENT: f64 = 2.0 / (9.0 * std::f64::consts::PI);

impl<'a> Restart<'a> {
    fn run(u: f64, config: &'a OptimizerConfig, index: usize, start: &Start) -> Result<Run> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        let mut me = Restart {
            u,
            config,
            rng,
            terms: Vec::new(),
            c: Vec::new(),
            energy: f64::INFINITY,
            evaluations: 0,
            pruned: 0,
        };
        match start {
            Start::Fresh(k) => me.seed_fresh(*k)?,
            Start::Warm(a) => me.seed_warm(a)?,
        }
        while me.terms.len() < config.basis_size {
            me.grow()?;
            let last = me.terms.len() - 1;
            me.refine_term(last);
        }
        for _ in 0..config.sweeps {
            let before = me.energy;
            for m in 0..me.terms.len() {
                me.refine_term(m);
            }
            if before - me.energy < config.sweep_tol {
                break;
            }
        }
        if !me.energy.is_finite() {
            return Err(Error::OptimizerFailed { best: me.energy });
        }
        Ok(Run {
            terms: me.terms,
            coefficients: me.c,
            energy: me.energy,
            pruned: me.pruned,
            evaluations: me.evaluations,
        })
    }

    fn seed_fresh(&mut self, k: usize) -> Result<()> {
        let a = if k == 0 { BASE_EXPONENT } else { BASE_EXPONENT * self.rng.gen_range(0.5..2.0) };
        // odd restarts begin from a displaced (dissociating) pair
        let s = if k % 2 == 1 && !self.config.freeze_s { self.rng.gen_range(1.0..4.0) } else { 0.0 };
        let first = CorrelatedGaussianTerm::symmetric(a, 0.0, s)?;
        self.terms = vec![first];
        self.c = vec![1.0];
        self.energy = self.evaluate(&self.terms.clone(), &self.c.clone()).map_or(f64::INFINITY, |r| r.1);
        Ok(())
    }

    fn seed_warm(&mut self, a: &Ansatz) -> Result<()> {
        let mut terms = a.terms.clone();
        let mut c = Elements::build(&terms).to_unit(&a.coefficients);
        loop {
            let el = Elements::build(&terms);
            match check_conditioning_with(&el, self.config.gram_floor) {
                Ok(()) => break,
                Err(Error::IllConditioned { second, .. }) if terms.len() > 1 => {
                    terms.remove(second);
                    c.remove(second);
                    self.pruned += 1;
                }
                Err(e) => return Err(e),
            }
        }
        while terms.len() > self.config.basis_size {
            // drop the term with the smallest weight in the state
            let k = (0..terms.len()).min_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs())).expect("nonempty");
            terms.remove(k);
            c.remove(k);
        }
        let (c, e) = self.evaluate(&terms, &c).ok_or(Error::OptimizerFailed { best: f64::INFINITY })?;
        self.terms = terms;
        self.c = c;
        self.energy = e;
        Ok(())
    }

    /// Coefficient-optimized energy, or `None` for an unusable basis.
    fn evaluate(&mut self, terms: &[CorrelatedGaussianTerm], start: &[f64]) -> Option<(Vec<f64>, f64)> {
        self.evaluations += 1;
        if terms.iter().any(|t| t.validate().is_err() || t.s * t.s * (t.a1 + t.a2) > MAX_DISPLACEMENT_EXPONENT) {
            return None;
        }
        let el = Elements::build(terms);
        check_conditioning_with(&el, self.config.gram_floor).ok()?;
        let (c, e) = optimize_coefficients(&el, self.u, start, self.config.coefficient_iters);
        (e.is_finite() && roundoff_bound(&el, &c, self.u) <= self.config.roundoff_tol).then_some((c, e))
    }

    fn reference_exponent(&self) -> f64 {
        let logs: f64 = self.terms.iter().map(|t| 0.5 * (t.a1.ln() + t.a2.ln())).sum();
        (logs / self.terms.len() as f64).exp()
    }

    fn random_term(&mut self) -> CorrelatedGaussianTerm {
        let a = self.reference_exponent();
        let a1 = a * self.rng.gen_range(-2.5f64..1.5).exp();
        let a2 = a * self.rng.gen_range(-2.5f64..1.5).exp();
        let b = if self.config.freeze_b || self.rng.gen_bool(0.3) {
            0.0
        } else {
            a * self.rng.gen_range(-4.0f64..0.5).exp()
        };
        let s = if self.config.freeze_s || self.rng.gen_bool(0.5) {
            0.0
        } else {
            self.rng.gen_range(0.0..3.0) / a.sqrt()
        };
        CorrelatedGaussianTerm { a1, a2, b, s }.canonical()
    }

    fn grow(&mut self) -> Result<()> {
        let mut start = self.c.clone();
        start.push(0.0);
        let mut best: Option<(CorrelatedGaussianTerm, Vec<f64>, f64)> = None;
        for _ in 0..self.config.candidates.max(1) {
            let t = self.random_term();
            let mut terms = self.terms.clone();
            terms.push(t);
            if let Some((c, e)) = self.evaluate(&terms, &start) {
                if best.as_ref().is_none_or(|b| e < b.2) {
                    best = Some((t, c, e));
                }
            } else {
                self.pruned += 1;
            }
        }
        let (t, c, e) = best.ok_or(Error::OptimizerFailed { best: self.energy })?;
        self.terms.push(t);
        self.c = c;
        self.energy = e;
        Ok(())
    }

    /// Simplex search over the parameters of term `m`, others fixed.
    fn refine_term(&mut self, m: usize) {
        let a_ref = self.reference_exponent();
        let freeze_b = self.config.freeze_b;
        let freeze_s = self.config.freeze_s;
        let t0 = self.terms[m];
        let mut x0 = vec![t0.a1.ln(), t0.a2.ln()];
        let mut steps = vec![0.3, 0.3];
        if !freeze_b {
            x0.push(t0.b.sqrt());
            steps.push(0.2 * a_ref.sqrt());
        }
        if !freeze_s {
            x0.push(t0.s);
            steps.push(0.3 / a_ref.sqrt());
        }
        let decode = |x: &[f64]| {
            let mut k = 2;
            let b = if freeze_b {
                0.0
            } else {
                k += 1;
                x[k - 1] * x[k - 1]
            };
            let s = if freeze_s { 0.0 } else { x[k] };
            CorrelatedGaussianTerm { a1: x[0].exp(), a2: x[1].exp(), b, s }
        };
        let terms0 = self.terms.clone();
        let c0 = self.c.clone();
        let mut best = (self.energy, self.c.clone(), t0);
        let opts = SimplexOptions { max_evals: self.config.simplex_evals, f_tol: 1e-13, x_tol: 1e-9 };
        let result = nelder_mead(
            |x| {
                let t = decode(x);
                let mut terms = terms0.clone();
                terms[m] = t;
                match self.evaluate(&terms, &c0) {
                    Some((c, e)) => {
                        if e < best.0 {
                            best = (e, c, t);
                        }
                        e
                    }
                    None => f64::INFINITY,
                }
            },
            &x0,
            &steps,
            opts,
        );
        let _ = result;
        if best.0 < self.energy {
            self.energy = best.0;
            self.c = best.1;
            self.terms[m] = best.2.canonical();
        }
    }
}
