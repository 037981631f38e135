//! Elliptical squeezed states of the planar Coulomb problem: construction from
//! physical inputs, eigenstate expansion, time evolution and diagnostics.

pub mod angular;
pub mod classical;
pub mod cli;
pub mod error;
pub mod ess;
pub mod radial;
pub mod specfun;
pub mod sqdt;

mod basis;
mod dd;
mod quad;

pub use error::{Error, Result};
