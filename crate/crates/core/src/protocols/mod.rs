//! Honest parties of the DPS and COW protocols.

pub mod cow;
pub mod dps;
pub mod record;
pub mod stats;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::{detect, DetectorConfig, DetectorState};
use crate::error::{Error, Result};

pub use record::{ClickSet, DetectionRecord, DetectorId};
pub use stats::{RunStatistics, Visibility};

/// How Alice picks the phase of the first DPS pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPhase {
    /// Uniform over {0, π}.
    #[default]
    Random,
    Zero,
}

/// Alice's weak coherent source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    /// Mean photon number per pulse.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Photons per µW per slot; pulse power is `mu / kappa`.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub start_phase: StartPhase,
}

fn default_mu() -> f64 {
    0.2
}

fn default_kappa() -> f64 {
    1.0
}

impl Default for Source {
    fn default() -> Self {
        Self {
            mu: default_mu(),
            kappa: default_kappa(),
            start_phase: StartPhase::Random,
        }
    }
}

impl Source {
    pub fn with_mu(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }

    pub fn pulse_power(&self) -> f64 {
        self.mu / self.kappa
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::parameter("mu", self.mu, "must be >= 0"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::parameter("kappa", self.kappa, "must be > 0"));
        }
        Ok(())
    }
}

/// Uniform random key bits.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

/// A detector together with its runtime state for one run.
#[derive(Debug, Clone)]
pub(crate) struct LiveDetector {
    cfg: DetectorConfig,
    state: DetectorState,
}

impl LiveDetector {
    pub(crate) fn new(cfg: DetectorConfig) -> Self {
        Self {
            cfg,
            state: DetectorState::new(),
        }
    }

    /// Slots are always visited in increasing order by the measurement loops.
    pub(crate) fn step<R: Rng + ?Sized>(&mut self, power: f64, slot: usize, rng: &mut R) -> bool {
        detect(power, &self.cfg, &mut self.state, slot, rng)
            .expect("measurement loops visit slots in increasing order")
    }
}

/// Alice's and Bob's sifted bits, with the slot each pair came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub slots: Vec<usize>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.alice
            .iter()
            .zip(&self.bob)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub(crate) fn push(&mut self, slot: usize, alice: bool, bob: bool) {
        self.slots.push(slot);
        self.alice.push(alice);
        self.bob.push(bob);
    }
}
