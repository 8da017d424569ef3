//! Built-in pseudospherical models.
//!
//! Each model turns a solution of its PDE into frame data whose structure
//! equations hold exactly when the PDE does.

pub mod camassa_holm;
pub mod igsge;
pub mod reference;
pub mod sine_gordon;

pub use camassa_holm::{
    ch_evolve, ch_forms, ch_pde_residual, ch_series_frame, CamassaHolmState, ChEvolveParams,
};
pub use igsge::{
    igsge_explicit_solution, igsge_forms, igsge_h_from_v, igsge_residual, IgsgeResiduals,
    IgsgeState,
};
pub use reference::{cosh_frame, flat_frame, hyperbolic_frame};
pub use sine_gordon::{sg_forms, sg_phi_system_check, sg_solution, KinkKind, SineGordonSolution};
