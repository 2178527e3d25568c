//! Independent numerical checks of the closed-form model.
//!
//! Nothing here reuses the closed-form integrals of [`crate::kernel`]: the
//! integrator steps the equations of motion on a grid, the sampler draws
//! c-number vacuum noise, and every integral is done by quadrature.

pub mod deficit;
pub mod monte_carlo;
pub mod profile;
pub mod quadrature;
pub mod rk4;
pub mod verify;

pub use deficit::{commutator_deficit, DeficitReport};
pub use monte_carlo::{monte_carlo, MonteCarloConfig, MonteCarloStats};
pub use profile::{profile_checks, ProfileReport, ProfileSpec};
pub use rk4::{integrate_chain, integrate_kernel, ChainIntegration, ChainModes, GridConfig};
pub use verify::{run_checks, Check, VerifyConfig, VerifyReport};
