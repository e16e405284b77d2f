//! Magic state distillation factories built from block protocols.
//!
//! The crate covers GF(2) linear algebra, block protocols and their
//! undetected-error structure, analytic error tracking for block- and
//! module-checked factories, Monte Carlo simulation of those factories,
//! circuit layouts for the `3k+8` block, and a surface-code resource model.

pub mod codes;
pub mod error;
pub mod gf2;
pub mod math;
pub mod realization;
pub mod resource;
pub mod sim;
pub mod tracking;

pub use codes::{ProtocolCode, ProtocolKind, Species};
pub use error::{Error, Gf2Error, Result};
pub use gf2::{solve_linear, BinaryMatrix, Side};
pub use tracking::{CheckingMode, FactorySpec, Round};
