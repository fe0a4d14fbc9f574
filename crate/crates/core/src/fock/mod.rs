//! Desk-scale truncated Fock-space models of the fixed-momentum bipolaron
//! and of a single polaron.

mod lanczos;
mod model;
mod modes;
mod occupation;
mod sparse;

pub use lanczos::{ground_energy, GroundStateResult, LanczosOptions};
pub use model::{
    dispersion_scan, existence_criterion, polaron_operator, polaron_toy_energy, toy_binding, Discretization,
    DispersionReport, DispersionRow, Lattice, ToyBinding, TruncatedFockModel, DISPERSION_TOL, SYMMETRY_TOL,
};
pub use modes::{build_modes, Mode, ModeSet};
pub use occupation::{occupation_count, OccupationSpace};
pub use sparse::SparseOperator;
