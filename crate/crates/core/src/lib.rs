//! Soluble-surfactant falling-film simulator.
//!
//! A four-field weighted-residual model (`h`, `q`, `S = χ + φh`, `Γ`) on a
//! periodic domain, with a switchable surface-transport closure
//! ([`Variant::Legacy`] or [`Variant::Corrected`]) and diagnostics that
//! track global surfactant mass, its rate of change and `Γ` extrema.
//!
//! Module map:
//! - [`model`]: parameters, `φ`/`χ` closures, Langmuir flux, uniform base state
//! - [`spatial`]: Fourier collocation derivatives, 2/3 dealiasing, quadrature
//! - [`rhs`]: tendencies and their physical term groups
//! - [`integrator`]: adaptive second-order IMEX stepping
//! - [`diagnostics`]: masses, rates, flux decomposition, linear growth rates
//! - [`config`], [`output`], [`runner`]: run configuration, CSV files, orchestration

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod par;
pub mod rhs;
pub mod runner;
pub mod spatial;

pub use error::{Error, Result};
pub use model::{
    chi_closure, equilibrium_state, langmuir_flux, recover_phi, BulkDiffusion, EquilibriumState,
    ModelParams, Variant,
};
pub use rhs::{eval_rhs, validate_state, RhsBreakdown, State, Tendency};
pub use spatial::Grid;

/// Version string recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
