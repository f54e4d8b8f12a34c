//! Solver and verification toolkit for one-dimensional Burgers-type
//! equations with a bounded dissipation flux,
//!
//! ```text
//! u_t + f(u)_x = Q(u_x)_x,    Q(-inf) < Q(s) < Q(+inf),
//! ```
//!
//! built around the vanishing-viscosity regularisation
//! `u_t + f(u)_x = Q(u_x)_x + eps u_xx`, exact traveling-wave and
//! self-similar oracles, and post-processing that checks computed fields
//! against the generalized-solution conditions (flux limit continuity, weak
//! form, initial trace) and the chord entropy condition.

pub mod error;
pub mod exact_solutions;
pub mod initial_data;
pub mod limit_analysis;
pub mod model;
pub mod numerics;
pub mod solver;

pub use error::{Error, Result};
pub use exact_solutions::{WaveClass, WaveProfile};
pub use initial_data::{InitialDatum, MollifierKernel};
pub use limit_analysis::{QLimProfile, ShockRecord};
pub use model::{builtin_model, BuiltinModel, DissipationFlux, FluxFunction, ModelConstants, ModelSpec};
pub use solver::{Boundary, DiagnosticsReport, Grid, GridField, SolverConfig, Trajectory};
