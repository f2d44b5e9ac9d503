//! Simulation and parameter-estimation toolkit for a coherently driven,
//! lossy Kerr resonator in truncated Fock space.
//!
//! The state is propagated together with its exact derivatives with respect
//! to the Kerr coupling `χ` and the loss rate `γ`. From these the crate
//! builds symmetric logarithmic derivatives, the quantum Fisher information
//! matrix, the Uhlmann curvature, Cramér-Rao bounds, and the classical Fisher
//! information of homodyne detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimation;
pub mod figures;
pub mod fock;
pub mod homodyne;
pub mod linalg;
pub mod ode;
pub mod oracles;
pub mod output;
pub mod parallel;
pub mod propagator;
pub mod runner;

pub use config::{load_config, ScenarioConfig};
pub use error::{Error, Result};
pub use figures::{reproduce_figure, Figure};
pub use fock::{DensityMatrix, FockOperator, ModelParams};
pub use output::emit_csv;
pub use parallel::Execution;
pub use propagator::{propagate_extended, ExtendedState, PropagationConfig, Trajectory};
pub use runner::{run_scenario, ResultRow};
