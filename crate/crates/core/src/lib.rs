//! Classical simulation of quantum market and auction models.
//!
//! The crate is organised bottom-up:
//!
//! * [`statevec`]: finite-dimensional state vectors, operators, unitary
//!   evolution, Born-rule sampling and a generic quantum game pipeline.
//! * [`gg`]: a two-mode bosonic market where the sellers/buyers
//!   occupations are displaced every trading round and then measured.
//! * [`multifractal`]: MF-DFA, used to analyse the price series that the
//!   bosonic market produces.
//! * [`ps`]: quantum bargaining over log-price wavefunctions: buy/sell
//!   probabilities, the risk inclination observable, and a clearing rule.
//! * [`hp`]: qubit-encoded combinatorial auction with superposed bids and a
//!   simulated adiabatic winner search, plus a brute-force oracle.
//!
//! All stochastic entry points take an explicit seed; see [`rng`].

// NaN-rejecting comparisons such as `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gg;
pub mod hp;
pub mod multifractal;
pub mod ps;
pub mod rng;
pub mod statevec;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use statevec::{MeasurementRecord, Operator, StateVector};
