//! Correlated-Gaussian upper bounds for the two-electron (bipolaron)
//! strong-coupling functional.

mod curve;
mod elements;
mod energy;
mod optimize;
mod term;

pub use curve::{
    binding_asymptotic, binding_curve, default_u_grid, estimate_uc, BindingCurve, BindingPoint, Bracket,
    CertifiedState, CurveConfig, PointStatus, UcEstimate,
};
pub use energy::{
    ansatz_norm, normalize, product_baseline, pt_energy, PTBreakdown, ANSATZ_NORM_TOL, DUPLICATE_OVERLAP,
    GRAM_FLOOR,
};
pub use optimize::{
    final_rescale, optimize_ansatz, optimize_ansatz_from, OptimizedAnsatz, OptimizerConfig, OptimizerStatus,
};
pub use term::{Ansatz, CorrelatedGaussianTerm};

#[doc(hidden)]
pub mod internals {
    //! Matrix-element building blocks, exposed for the oracle tests.
    pub use super::elements::{piece_elements, PieceElements};
}
