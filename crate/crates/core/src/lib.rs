//! Linearized quantum noise model of light-pulse matter-wave interferometers.
//!
//! Atomic and optical fields are treated as bosonic modes. Each laser pulse is a
//! kernel acting on linear operator expressions; a Mach-Zehnder sequence composes
//! three of them and reads out the population difference. The [`oracle`] module
//! holds independent numerical checks of the closed-form results.

pub mod budget;
pub mod error;
pub mod exec;
pub mod interferometer;
pub mod kernel;
pub mod mode_algebra;
pub mod oracle;

pub use error::{Error, Result};
pub use num_complex::Complex64;
