//! Sound-soft scattering in the plane, Dirichlet eigenvalue thresholds and
//! positive supersolutions of the Helmholtz equation.
//!
//! - [`forward`]: Nyström solver for the exterior Dirichlet problem and far fields.
//! - [`eigencalc`]: closed-form and finite-difference Dirichlet eigenvalues.
//! - [`supersolution`]: candidates `v > 0` with `Δv + k²v ≤ 0` and their checks.
//! - [`harness`]: separation sweeps between two obstacles.

pub mod eigencalc;
pub mod forward;
pub mod geometry;
pub mod harness;
pub mod specfun;
pub mod supersolution;

pub use eigencalc::{
    fd_dirichlet_eigs, lambda1_closed_form, uniqueness_threshold, volume_bound, Dimension,
    EigenError, EigenResult, GridDomain, RegionSpec,
};
pub use forward::{
    disk_farfield_series, far_field, solve_exterior_dirichlet, total_field, AngleGrid, Density,
    FarFieldPattern, ForwardError, WaveParams,
};
pub use geometry::{curve_eval, BoundaryCurve, GeometryError, Point};
pub use harness::{
    self_consistency, separation_sweep, HarnessError, SweepConfig, SweepPlan, SweepRow,
};
pub use specfun::{gamma0, ComplexScalar, SpecFunError};
pub use supersolution::{
    decide_admissibility, eval_candidate, liouville_identity_residual, verify_supersolution,
    Admissibility, SupersolutionCandidate, SupersolutionError, VerificationReport,
};

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Supersolution(#[from] SupersolutionError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
