//! Finite-dimensional pure-state simulation.
//!
//! Strategies are restricted to unitary operators followed by a terminal
//! projective measurement in the computational basis.

mod expm;
mod game;
mod measure;
mod operator;
mod state;

pub use expm::{exp_antihermitian, random_hermitian};
pub use game::{play_game, GameDefinition, GameOutcome, StrategyChoice, StrategySet};
pub(crate) use measure::cumulative;
pub use measure::{born_index, sample_measurement, MeasurementRecord, Sampling};
pub use operator::{apply, apply_factor, expectation, Operator, OperatorKind};
pub use state::{basis_state, superpose, tensor, StateVector};

/// Tolerance for normalization checks on internally produced states.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for normalization checks on externally supplied states.
pub const EXTERNAL_NORM_TOL: f64 = 1e-6;
