//! Minimum-energy controls for truncations of a damped flexible-structure
//! model, and the numerics to check that they steer the full model.
//!
//! * [`modal_model`]: the block-diagonal system, projections, and the
//!   frequency-gap series.
//! * [`propagator`]: exact block exponentials and the mild solution.
//! * [`synthesis`]: reduced system, controllability Gramian, and the
//!   minimum-energy law.
//! * [`verifier`]: steering reports and convergence sweeps.

pub mod error;
pub mod modal_model;
pub mod propagator;
pub mod quadrature;
pub mod state;
pub mod synthesis;
pub mod verifier;

pub use error::{Error, Result};
pub use modal_model::{
    build_system, gap_series_partial_sum, gap_series_partial_sums, CoefficientRule,
    FrequencyPreset, GapSum, ModalSystem, Mode,
};
pub use propagator::{
    block_expm, propagate, trajectory, transition, BlockKind, BlockMatrix2, PropagationConfig,
};
pub use state::StateVector;
pub use synthesis::{
    gramian, reduced_matrices, synthesize, ControlLaw, Gramian, LawFile, QuadratureSpec,
    ReducedSystem, SynthesisOptions, WeightMatrix,
};
pub use verifier::{
    convergence_sweep, steer_and_verify, tail_bound, ConvergenceReport, SteeringReport,
};
