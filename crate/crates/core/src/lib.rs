//! OAM radio links between two parallel, non-coaxial uniform circular arrays.
//!
//! - [`geometry`]: array layout, element distances and the auxiliary angle `ζ_m`.
//! - [`specfun`]: integer-order Bessel functions `J_l`.
//! - [`channel`]: exact and far-field element gains, Bessel closed-form mode gains.
//! - [`transceiver`]: transmit synthesis, propagation and mode decomposition.
//! - [`metrics`]: spectrum efficiency and sweeps.
//! - [`cli`]: configuration and the experiment drivers behind the binary.

pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod specfun;
pub mod transceiver;

pub use error::{Error, Result};
pub use geometry::{GeometryParams, LinkGeometry, ModeIndexSet};
