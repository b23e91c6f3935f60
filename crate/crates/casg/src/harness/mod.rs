//! Test problems, reference derivatives, and the experiment drivers for
//! sensitivity analysis and derivative-free optimization.

pub mod config;
pub mod dfo;
pub mod output;
pub mod problems;
pub mod profile;
pub mod reference;
pub mod sensitivity;
pub mod toy;

pub use config::{DfoConfig, ExperimentConfig, MethodName, OdeCoefficients, SensitivityConfig};
pub use problems::{ackley, builtin_problem, colon_ode, NoisyEvaluator, Problem};
pub use profile::{data_profile, ProfileCurve, ProfileError};
pub use reference::{reference_gradient, reference_hessian};
