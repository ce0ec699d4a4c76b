//! Deterministic simulator of the differential-phase-shift (DPS) and
//! coherent-one-way (COW) quantum key distribution protocols under a
//! tailored bright-illumination detector-control attack.
//!
//! * [`optics`]: pulse trains, the asymmetric coupler, the delay interferometer.
//! * [`detectors`]: Geiger and blinded linear-mode click models.
//! * [`protocols`]: honest Alice/Bob for DPS and COW, sifting, run statistics.
//! * [`attack`]: Eve's intercepting receiver and faked-state generators.
//! * [`analysis`]: threshold feasibility conditions and the honest-vs-attacked screen.
//! * [`scenario`] / [`sweep`]: JSON-configured runs and parameter sweeps.

pub mod analysis;
pub mod attack;
pub mod cli;
pub mod detectors;
pub mod error;
pub mod optics;
pub mod par;
pub mod protocols;
pub mod scenario;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
