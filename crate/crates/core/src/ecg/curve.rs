use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::PTBreakdown;
use super::optimize::{optimize_ansatz_from, OptimizerConfig};
use super::term::Ansatz;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub optimizer: OptimizerConfig,
    /// Re-optimize every point from its neighbours' states after the first pass.
    pub warm_pass: bool,
    /// Width in U at which the threshold bisection stops.
    pub bisection_tol: f64,
    pub max_bisections: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { optimizer: OptimizerConfig::default(), warm_pass: true, bisection_tol: 1e-3, max_bisections: 40 }
    }
}

/// U ∈ √2·{0, 0.4, 0.8, 1, 1.05, 1.1, 1.15, 1.2, 1.5, 2}.
pub fn default_u_grid() -> Vec<f64> {
    [0.0, 0.4, 0.8, 1.0, 1.05, 1.1, 1.15, 1.2, 1.5, 2.0].iter().map(|x| x * SQRT_2).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointStatus {
    /// The state optimized at this U is the best available.
    Optimized,
    /// A state optimized at another U gives a lower value here.
    Adopted { from_u: f64 },
    /// Optimization failed here; the value comes from another point's state.
    Failed { message: String, from_u: Option<f64> },
}

impl PointStatus {
    pub fn label(&self) -> String {
        match self {
            PointStatus::Optimized => "optimized".into(),
            PointStatus::Adopted { from_u } => format!("adopted@{from_u:.6}"),
            PointStatus::Failed { from_u: Some(u), .. } => format!("failed,adopted@{u:.6}"),
            PointStatus::Failed { .. } => "failed".into(),
        }
    }
}

/// A stored state that certifies upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedState {
    /// U at which the state was optimized.
    pub u: f64,
    pub ansatz: Ansatz,
    /// Breakdown at that U.
    pub breakdown: PTBreakdown,
}

impl CertifiedState {
    /// Energy at `u` of this state after the best dilation, with that dilation.
    pub fn value_at(&self, u: f64) -> (f64, f64) {
        let b = self.breakdown.at(u);
        let linear = b.attraction - u * b.repulsion;
        if linear > 0.0 {
            let lambda = linear / (2.0 * b.kinetic);
            (-linear * linear / (4.0 * b.kinetic), lambda)
        } else {
            (b.total, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingPoint {
    pub u: f64,
    pub c_bp_upper: f64,
    pub binding: f64,
    pub basis_size: usize,
    pub status: PointStatus,
    /// Value of the state optimized at this U, before cross-evaluation.
    pub own_value: Option<f64>,
    /// Index into [`BindingCurve::states`] of the certifying state.
    pub state: usize,
    /// Dilation applied to that state to reach `c_bp_upper`.
    pub dilation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingCurve {
    pub points: Vec<BindingPoint>,
    pub c_p_used: f64,
    pub states: Vec<CertifiedState>,
    pub config: CurveConfig,
}

/// Best certified value at `u` over all states: (value, state index, dilation).
fn best_at(states: &[CertifiedState], u: f64) -> Option<(f64, usize, f64)> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (v, l) = s.value_at(u);
            (v, k, l)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

/// Upper bounds c_bp(U) along a grid and the binding 2c_p − c_bp.
///
/// Every stored state is evaluated (and optimally dilated) at every U, and
/// each point reports the lowest value. Each state's value is nondecreasing
/// in U, so the reported curve is too.
pub fn binding_curve(u_values: &[f64], c_p: f64, config: &CurveConfig) -> Result<BindingCurve> {
    if u_values.is_empty() {
        return Err(Error::InvalidConfig("empty U grid".into()));
    }
    if u_values.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
        return Err(Error::Domain("U values must be nonnegative".into()));
    }
    if u_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("U values must be strictly increasing".into()));
    }
    config.optimizer.validate()?;
    let opt = &config.optimizer;
    let first = run_points(u_values, opt, config.optimizer.parallel, |_| Vec::new());
    let results = if config.warm_pass {
        let seeds: Vec<Option<Ansatz>> = first.iter().map(|r| r.as_ref().ok().map(|s| s.ansatz.clone())).collect();
        let warm_cfg = OptimizerConfig { restarts: 0, ..opt.clone() };
        let second = run_points(u_values, &warm_cfg, config.optimizer.parallel, |k| {
            let lo = k.saturating_sub(1);
            let hi = (k + 1).min(u_values.len() - 1);
            (lo..=hi).filter_map(|j| seeds[j].clone()).collect()
        });
        first
            .into_iter()
            .zip(second)
            .map(|(a, b)| match (a, b) {
                (Ok(a), Ok(b)) => Ok(if b.breakdown.total < a.breakdown.total { b } else { a }),
                (Ok(a), Err(_)) => Ok(a),
                (Err(_), Ok(b)) => Ok(b),
                (Err(e), Err(_)) => Err(e),
            })
            .collect()
    } else {
        first
    };

    let mut states = Vec::new();
    let mut own = Vec::new();
    let mut failures = Vec::new();
    for (&u, r) in u_values.iter().zip(results) {
        match r {
            Ok(s) => {
                own.push(Some((states.len(), s.breakdown.total)));
                failures.push(None);
                states.push(s);
            }
            Err(e) => {
                own.push(None);
                failures.push(Some(format!("U = {u}: {e}")));
            }
        }
    }
    if states.is_empty() {
        let best = f64::INFINITY;
        return Err(Error::OptimizerFailed { best });
    }
    let basis_size = config.optimizer.basis_size;
    let points = u_values
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let (value, idx, dilation) = best_at(&states, u).expect("states nonempty");
            let status = match (&failures[k], own[k]) {
                (Some(message), _) => PointStatus::Failed { message: message.clone(), from_u: Some(states[idx].u) },
                (None, Some((mine, _))) if mine == idx => PointStatus::Optimized,
                _ => PointStatus::Adopted { from_u: states[idx].u },
            };
            BindingPoint {
                u,
                c_bp_upper: value,
                binding: 2.0 * c_p - value,
                basis_size,
                status,
                own_value: own[k].map(|o| o.1),
                state: idx,
                dilation,
            }
        })
        .collect();
    Ok(BindingCurve { points, c_p_used: c_p, states, config: config.clone() })
}

fn run_points(
    u_values: &[f64],
    cfg: &OptimizerConfig,
    parallel: bool,
    warm: impl Fn(usize) -> Vec<Ansatz> + Sync,
) -> Vec<Result<CertifiedState>> {
    let one = |(k, &u): (usize, &f64)| {
        optimize_ansatz_from(u, cfg, &warm(k))
            .map(|o| CertifiedState { u, ansatz: o.ansatz, breakdown: o.breakdown })
    };
    if parallel {
        u_values.par_iter().enumerate().map(one).collect()
    } else {
        u_values.iter().enumerate().map(one).collect()
    }
}

impl BindingCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# c_p_used={}\nU\tc_bp_upper\tbinding\tbasis_size\tstatus\n", self.c_p_used);
        for p in &self.points {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", p.u, p.c_bp_upper, p.binding, p.basis_size, p.status.label());
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Binding at `u` by linear interpolation between grid points.
    pub fn binding_at(&self, u: f64) -> Result<f64> {
        let lo = self.points.first().expect("nonempty curve").u;
        let hi = self.points.last().expect("nonempty curve").u;
        if !(u >= lo && u <= hi) {
            return Err(Error::Extrapolation { u, lo, hi });
        }
        for w in self.points.windows(2) {
            if u >= w[0].u && u <= w[1].u {
                let t = (u - w[0].u) / (w[1].u - w[0].u);
                return Ok(w[0].binding + t * (w[1].binding - w[0].binding));
            }
        }
        Ok(self.points[0].binding)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    /// `None` when no nonpositive binding was found (open to the right).
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcEstimate {
    /// Zero of the computed binding, interpolated in the final bracket.
    /// The computed binding never exceeds the true one, so this estimates
    /// U_c from below.
    pub u_c: Option<f64>,
    pub bracket: Bracket,
    /// Points evaluated during the refinement, in order.
    pub refinements: Vec<BindingPoint>,
}

/// Refines the sign change of the binding by bisection, re-optimizing at
/// each midpoint from the states that bracket it.
pub fn estimate_uc(curve: &BindingCurve) -> Result<UcEstimate> {
    let c_p = curve.c_p_used;
    let cfg = &curve.config;
    let mut states = curve.states.clone();
    let mut us: Vec<f64> = curve.points.iter().map(|p| p.u).collect();
    let mut refinements = Vec::new();
    let binding = |states: &[CertifiedState], u: f64| 2.0 * c_p - best_at(states, u).expect("states").0;

    for _ in 0..=cfg.max_bisections {
        let b: Vec<f64> = us.iter().map(|&u| binding(&states, u)).collect();
        let Some(k) = (0..us.len() - 1).find(|&k| b[k] > 0.0 && b[k + 1] <= 0.0) else {
            break;
        };
        let (lo, hi) = (us[k], us[k + 1]);
        if hi - lo <= cfg.bisection_tol {
            let u_c = lo + (hi - lo) * b[k] / (b[k] - b[k + 1]);
            return Ok(UcEstimate { u_c: Some(u_c), bracket: Bracket { lo, hi: Some(hi) }, refinements });
        }
        let mid = 0.5 * (lo + hi);
        let warm: Vec<Ansatz> = [lo, hi]
            .iter()
            .filter_map(|&u| best_at(&states, u).map(|(_, i, _)| states[i].ansatz.clone()))
            .collect();
        let attempt = optimize_ansatz_from(mid, &cfg.optimizer, &warm);
        let status = match attempt {
            Ok(o) => {
                states.push(CertifiedState { u: mid, ansatz: o.ansatz, breakdown: o.breakdown });
                None
            }
            Err(e) => Some(e.to_string()),
        };
        let (value, idx, dilation) = best_at(&states, mid).expect("states");
        let status = match status {
            Some(message) => PointStatus::Failed { message, from_u: Some(states[idx].u) },
            None if idx == states.len() - 1 => PointStatus::Optimized,
            None => PointStatus::Adopted { from_u: states[idx].u },
        };
        refinements.push(BindingPoint {
            u: mid,
            c_bp_upper: value,
            binding: 2.0 * c_p - value,
            basis_size: cfg.optimizer.basis_size,
            status,
            own_value: None,
            state: idx,
            dilation,
        });
        us.insert(k + 1, mid);
    }

    // no sign change: report the open side
    let b: Vec<f64> = us.iter().map(|&u| binding(&states, u)).collect();
    let bracket = if b.iter().all(|&x| x > 0.0) {
        Bracket { lo: *us.last().expect("nonempty"), hi: None }
    } else if b.iter().all(|&x| x <= 0.0) {
        Bracket { lo: 0.0, hi: Some(us[0]) }
    } else {
        let k = (0..us.len() - 1).find(|&k| b[k] > 0.0 && b[k + 1] <= 0.0).unwrap_or(0);
        Bracket { lo: us[k], hi: Some(us[k + 1]) }
    };
    Ok(UcEstimate { u_c: None, bracket, refinements })
}

/// (2c_p − c_bp(U₀))·α², the leading large-coupling binding energy.
pub fn binding_asymptotic(alpha: f64, u0: f64, curve: &BindingCurve) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(curve.binding_at(u0)? * alpha * alpha)
}
