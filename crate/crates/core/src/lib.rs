//! Virtual micro-tensile bench for spring-bridged freestanding thin films.
//!
//! The crate covers the whole chain from a simulated experiment to reduced
//! material properties:
//!
//! - [`model`]: specimen, material, load-train and sensor types and the 1-D
//!   elastoplastic stress update;
//! - [`mechanics`]: beam and series-spring helpers, quasi-static equilibrium
//!   of the load train and its calibration;
//! - [`protocol`]: monotonic and tension-tension fatigue waveforms;
//! - [`simulator`]: sensor model, bench runs and the stress-life model;
//! - [`analysis`]: stress-strain reduction, modulus / offset yield / UTS,
//!   plastic strain range and S-N fitting;
//! - [`config`] and [`record`]: config files, bundled presets and record I/O.

pub mod analysis;
pub mod config;
pub mod error;
pub mod mechanics;
pub mod model;
pub mod protocol;
pub mod record;
pub mod simulator;
pub mod units;

pub use error::{Error, Result};
