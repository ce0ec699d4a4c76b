use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::{DetectorConfig, GeigerConfig, Response};
use crate::error::{Error, Result};
use crate::optics::{attenuate, PulseTrain};
use crate::protocols::cow::{self, CowConfig};
use crate::protocols::dps;
use crate::protocols::DetectionRecord;

/// Detectors inside Eve's copy of Bob's receiver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobPrime {
    /// Unit efficiency, no dark counts; deadtime copied from Bob.
    #[default]
    Ideal,
    /// Exactly Bob's single-photon detectors.
    MirrorBob,
    /// The given single-photon model for every detector; deadtime copied from Bob.
    Custom(GeigerConfig),
}

impl BobPrime {
    fn resolve(&self, bob: &DetectorConfig) -> DetectorConfig {
        let kappa = match bob.response {
            Response::Geiger(g) => g.kappa,
            Response::Linear(_) => 1.0,
        };
        let geiger = match self {
            BobPrime::MirrorBob => return *bob,
            BobPrime::Ideal => GeigerConfig { kappa, ..GeigerConfig::ideal() },
            BobPrime::Custom(g) => *g,
        };
        DetectorConfig::geiger(geiger).with_deadtime(bob.deadtime_slots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptConfig {
    /// Transmittance of the line between Alice and Eve.
    #[serde(default = "one")]
    pub position_transmittance: f64,
    #[serde(default)]
    pub bob_prime: BobPrime,
}

fn one() -> f64 {
    1.0
}

impl Default for InterceptConfig {
    fn default() -> Self {
        Self {
            position_transmittance: 1.0,
            bob_prime: BobPrime::Ideal,
        }
    }
}

impl InterceptConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.position_transmittance;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::parameter(
                "position_transmittance",
                t,
                "must lie in (0, 1]",
            ));
        }
        if let BobPrime::Custom(g) = &self.bob_prime {
            g.validate()?;
        }
        Ok(())
    }
}

/// Eve's measurement of Alice's DPS train with Bob′. `bob_d0`/`bob_d1` are
/// Bob's honest detectors, used as the template for Bob′.
pub fn eve_intercept_dps<R: Rng + ?Sized>(
    train: &PulseTrain,
    cfg: &InterceptConfig,
    bob_d0: &DetectorConfig,
    bob_d1: &DetectorConfig,
    rng: &mut R,
) -> Result<DetectionRecord> {
    cfg.validate()?;
    let seen = attenuate(train, cfg.position_transmittance)?;
    let d0 = cfg.bob_prime.resolve(bob_d0);
    let d1 = cfg.bob_prime.resolve(bob_d1);
    Ok(dps::bob_measure(&seen, &d0, &d1, rng))
}

/// Eve's measurement of Alice's COW train with a Bob′ of the same layout as `bob`.
pub fn eve_intercept_cow<R: Rng + ?Sized>(
    train: &PulseTrain,
    cfg: &InterceptConfig,
    bob: &CowConfig,
    rng: &mut R,
) -> Result<DetectionRecord> {
    cfg.validate()?;
    let seen = attenuate(train, cfg.position_transmittance)?;
    let prime = CowConfig {
        db: cfg.bob_prime.resolve(&bob.db),
        dm1: cfg.bob_prime.resolve(&bob.dm1),
        dm2: cfg.bob_prime.resolve(&bob.dm2),
        ..*bob
    };
    cow::bob_measure(&seen, &prime, rng)
}
