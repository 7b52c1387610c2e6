//! Collective spin bath (Lipkin-Meshkov-Glick) coupled to a central qubit:
//! spectra, quench dynamics, quantum speed limit and non-Markovianity.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod experiments;
pub mod qsl_metrics;
pub mod quench;
pub mod spectral;
pub mod spin_core;
pub mod tridiagonal;

pub use error::{Error, Result};
pub use quench::{decompose_quench, decoherence_series, ground_state, DecoherenceSeries, QuenchDecomposition};
pub use spin_core::{Branch, CollectiveHamiltonian, Frame, OperatorMatrix, Parity, SpinBasis};
