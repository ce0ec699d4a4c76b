//! Click models: single-photon (Geiger) operation and blinded linear-mode
//! operation characterised by the `P_never` / `P_always` thresholds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the click probability between `p_never` and `p_always`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RampPolicy {
    #[default]
    Linear,
    /// Logistic curve rescaled to hit exactly 0 and 1 at the thresholds.
    Logistic { steepness: f64 },
}

impl RampPolicy {
    /// Maps the normalised position `u ∈ [0, 1]` between the thresholds to a probability.
    fn forward(self, u: f64) -> f64 {
        match self {
            RampPolicy::Linear => u,
            RampPolicy::Logistic { steepness: k } => {
                let (lo, hi) = logistic_bounds(k);
                (sigmoid(k * (u - 0.5)) - lo) / (hi - lo)
            }
        }
    }

    fn inverse(self, prob: f64) -> f64 {
        match self {
            RampPolicy::Linear => prob,
            RampPolicy::Logistic { steepness: k } => {
                let (lo, hi) = logistic_bounds(k);
                let s = lo + prob * (hi - lo);
                0.5 + (s / (1.0 - s)).ln() / k
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logistic_bounds(k: f64) -> (f64, f64) {
    (sigmoid(-k / 2.0), sigmoid(k / 2.0))
}

/// Linear-mode thresholds of one detector, in µW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModeConfig {
    /// Largest power that never clicks.
    pub p_never: f64,
    /// Smallest power that always clicks.
    pub p_always: f64,
    #[serde(default)]
    pub ramp: RampPolicy,
}

impl LinearModeConfig {
    pub fn new(p_never: f64, p_always: f64) -> Result<Self> {
        let cfg = Self {
            p_never,
            p_always,
            ramp: RampPolicy::Linear,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_ramp(mut self, ramp: RampPolicy) -> Result<Self> {
        self.ramp = ramp;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_never.is_finite() && self.p_never > 0.0) {
            return Err(Error::parameter("p_never", self.p_never, "must be > 0"));
        }
        if !(self.p_always.is_finite() && self.p_always > self.p_never) {
            return Err(Error::parameter(
                "p_always",
                self.p_always,
                "must be finite and > p_never",
            ));
        }
        if let RampPolicy::Logistic { steepness } = self.ramp {
            if !(steepness.is_finite() && steepness > 0.0) {
                return Err(Error::parameter("steepness", steepness, "must be > 0"));
            }
        }
        Ok(())
    }

    /// Multiplies both thresholds by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            p_never: self.p_never * c,
            p_always: self.p_always * c,
            ramp: self.ramp,
        }
    }
}

/// Single-photon operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeigerConfig {
    pub efficiency: f64,
    #[serde(default)]
    pub dark_prob: f64,
    /// Photons per µW per slot.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    1.0
}

impl GeigerConfig {
    pub fn new(efficiency: f64, dark_prob: f64, kappa: f64) -> Result<Self> {
        let cfg = Self {
            efficiency,
            dark_prob,
            kappa,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit efficiency, no dark counts, κ = 1.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
            kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::parameter(
                "efficiency",
                self.efficiency,
                "must lie in [0, 1]",
            ));
        }
        if !(0.0..1.0).contains(&self.dark_prob) {
            return Err(Error::parameter(
                "dark_prob",
                self.dark_prob,
                "must lie in [0, 1)",
            ));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::parameter("kappa", self.kappa, "must be > 0"));
        }
        Ok(())
    }
}

/// Operating regime of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Response {
    Geiger(GeigerConfig),
    Linear(LinearModeConfig),
}

/// Full configuration of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(flatten)]
    pub response: Response,
    #[serde(default)]
    pub deadtime_slots: u64,
}

impl DetectorConfig {
    pub fn geiger(cfg: GeigerConfig) -> Self {
        Self {
            response: Response::Geiger(cfg),
            deadtime_slots: 0,
        }
    }

    pub fn linear(cfg: LinearModeConfig) -> Self {
        Self {
            response: Response::Linear(cfg),
            deadtime_slots: 0,
        }
    }

    pub fn with_deadtime(mut self, slots: u64) -> Self {
        self.deadtime_slots = slots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.response {
            Response::Geiger(g) => g.validate(),
            Response::Linear(l) => l.validate(),
        }
    }

    pub fn click_prob(&self, power: f64) -> f64 {
        match &self.response {
            Response::Geiger(g) => geiger_click_prob(power, g),
            Response::Linear(l) => linear_click_prob(power, l),
        }
    }
}

/// Runtime state of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectorState {
    /// Slots strictly below this index are blind.
    pub dead_until: usize,
    last_slot: Option<usize>,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn linear_click_prob(power: f64, cfg: &LinearModeConfig) -> f64 {
    if power <= cfg.p_never {
        0.0
    } else if power >= cfg.p_always {
        1.0
    } else {
        let u = (power - cfg.p_never) / (cfg.p_always - cfg.p_never);
        cfg.ramp.forward(u).clamp(0.0, 1.0)
    }
}

/// Inverse of [`linear_click_prob`] on `[0, 1]`.
pub fn linear_power_for_prob(prob: f64, cfg: &LinearModeConfig) -> f64 {
    if prob <= 0.0 {
        return cfg.p_never;
    }
    if prob >= 1.0 {
        return cfg.p_always;
    }
    cfg.p_never + cfg.ramp.inverse(prob) * (cfg.p_always - cfg.p_never)
}

pub fn geiger_click_prob(power: f64, cfg: &GeigerConfig) -> f64 {
    let mean_photons = cfg.efficiency * cfg.kappa * power;
    1.0 - (1.0 - cfg.dark_prob) * (-mean_photons).exp()
}

/// One detection attempt at `slot`.
///
/// A dead detector and a detector with a click probability of exactly 0 or 1
/// consume no randomness. Slots must be presented in strictly increasing order.
pub fn detect<R: Rng + ?Sized>(
    power: f64,
    cfg: &DetectorConfig,
    state: &mut DetectorState,
    slot: usize,
    rng: &mut R,
) -> Result<bool> {
    if let Some(last) = state.last_slot {
        if slot <= last {
            return Err(Error::Usage(format!(
                "detector slots out of order: {slot} after {last}"
            )));
        }
    }
    state.last_slot = Some(slot);
    if slot < state.dead_until {
        return Ok(false);
    }
    let p = cfg.click_prob(power);
    let clicked = if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    };
    if clicked {
        let next = slot
            .saturating_add(usize::try_from(cfg.deadtime_slots).unwrap_or(usize::MAX))
            .saturating_add(1);
        state.dead_until = state.dead_until.max(next);
    }
    Ok(clicked)
}
