//! Eve: an intercepting copy of Bob's receiver (Bob′) and a faked-state
//! generator (FSG) that turns Bob′'s record into bright pulse trains which
//! force the same record out of Bob's blinded detectors.

mod cow;
mod dps;
mod intercept;

use serde::{Deserialize, Serialize};

use crate::detectors::{linear_power_for_prob, LinearModeConfig};
use crate::error::{Error, Result};
use crate::optics::PulseTrain;
use crate::protocols::DetectorId;

pub use cow::{build_cow_faked_train, predict_cow_record, reproducible_cow, CowThresholds};
pub use dps::{build_dps_faked_train, predict_dps_record, reproducible_dps};
pub use intercept::{eve_intercept_cow, eve_intercept_dps, BobPrime, InterceptConfig};

/// How the FSG lays out its pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsgMode {
    /// Every slot carries a bright pulse; phases select the outcome.
    #[default]
    Continuous,
    /// Pulses only around intended detection events, which must be separated
    /// by at least two silent slots.
    PulsePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FsgConfig {
    #[serde(default)]
    pub mode: FsgMode,
    /// DPS pulse power in µW; defaults to `P_always` (or the loss-exploit power).
    #[serde(default)]
    pub trigger_power: Option<f64>,
    /// COW baseline pulse power in µW; defaults to `P_always,M / (1 - t_b)`.
    #[serde(default)]
    pub train_power: Option<f64>,
    /// COW data pulse power in µW; defaults to `P_always,B / t_b`.
    #[serde(default)]
    pub data_power: Option<f64>,
    /// Click probability to induce instead of a deterministic click.
    #[serde(default)]
    pub loss_target: Option<f64>,
    /// COW one-monitor variant: the interferometer port with no detector.
    #[serde(default)]
    pub unmonitored_port: Option<DetectorId>,
}

impl FsgConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("trigger_power", self.trigger_power),
            ("train_power", self.train_power),
            ("data_power", self.data_power),
        ] {
            if let Some(p) = v {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::parameter(name, p, "must be >= 0"));
                }
            }
        }
        if let Some(t) = self.loss_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::parameter("loss_target", t, "must lie in [0, 1]"));
            }
        }
        match self.unmonitored_port {
            None | Some(DetectorId::DM1) | Some(DetectorId::DM2) => Ok(()),
            Some(other) => Err(Error::Usage(format!(
                "unmonitored port must be DM1 or DM2, got {other}"
            ))),
        }
    }

    /// Per-detector trigger level for a threshold pair.
    pub(crate) fn target_power(&self, cfg: &LinearModeConfig) -> Result<f64> {
        match self.loss_target {
            Some(t) => loss_exploit_power(t, cfg),
            None => Ok(cfg.p_always),
        }
    }
}

/// Output of a faked-state generator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FakedTrain {
    pub train: PulseTrain,
    /// Slots where the predicted outcome differs from the intended one.
    pub warnings: Vec<String>,
}

/// Trigger power that makes a blinded detector click with `target_prob`.
pub fn loss_exploit_power(target_prob: f64, cfg: &LinearModeConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&target_prob) {
        return Err(Error::parameter(
            "target_prob",
            target_prob,
            "must lie in [0, 1]",
        ));
    }
    Ok(linear_power_for_prob(target_prob, cfg))
}

/// Smallest input power whose `share` (as computed by `share`) reaches `target`.
pub(crate) fn min_power_for_share(target: f64, ratio: f64, share: impl Fn(f64) -> f64) -> f64 {
    let mut p = target / ratio;
    for _ in 0..64 {
        if share(p) >= target {
            break;
        }
        p = p.next_up();
    }
    p
}

/// Compares a predicted record with the intended one and lists mismatches.
pub(crate) fn mismatch_warnings(
    intended: &crate::protocols::DetectionRecord,
    predicted: &[(usize, DetectorId, Prediction)],
) -> Vec<String> {
    let mut spurious = std::collections::BTreeMap::<DetectorId, (usize, usize)>::new();
    let mut missed = std::collections::BTreeMap::<DetectorId, (usize, usize)>::new();
    for &(slot, id, pred) in predicted {
        let want = intended.get(slot).contains(id);
        let bucket = match (want, pred) {
            (true, Prediction::Never) => Some(&mut missed),
            (false, Prediction::Maybe | Prediction::Always) => Some(&mut spurious),
            _ => None,
        };
        if let Some(map) = bucket {
            let e = map.entry(id).or_insert((slot, 0));
            e.1 += 1;
        }
    }
    let mut out = Vec::new();
    for (id, (first, n)) in spurious {
        out.push(format!(
            "{id}: {n} slot(s) may click without an intended event (first at slot {first})"
        ));
    }
    for (id, (first, n)) in missed {
        out.push(format!(
            "{id}: {n} intended click(s) receive too little power (first at slot {first})"
        ));
    }
    out
}

/// Outcome class of a linear-mode detector at a given power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Prediction {
    Never,
    Maybe,
    Always,
}

impl Prediction {
    pub(crate) fn of(power: f64, cfg: &LinearModeConfig) -> Self {
        match crate::detectors::linear_click_prob(power, cfg) {
            p if p <= 0.0 => Prediction::Never,
            p if p >= 1.0 => Prediction::Always,
            _ => Prediction::Maybe,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_exploit_inverts_ramp() {
        let th = LinearModeConfig::new(400.0, 500.0).unwrap();
        assert_eq!(loss_exploit_power(0.0, &th).unwrap(), 400.0);
        assert_eq!(loss_exploit_power(1.0, &th).unwrap(), 500.0);
        assert_eq!(loss_exploit_power(0.25, &th).unwrap(), 425.0);
        assert!(loss_exploit_power(1.5, &th).is_err());
    }

    #[test]
    fn min_power_reaches_share() {
        let t = 0.9;
        let p = min_power_for_share(500.0, 1.0 - t, |p| p - p * t);
        assert!(p - p * t >= 500.0);
        assert!(p.next_down() - p.next_down() * t < 500.0 || p == 500.0 / (1.0 - t));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = FsgConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.loss_target = Some(2.0);
        assert!(cfg.validate().is_err());
        cfg.loss_target = None;
        cfg.unmonitored_port = Some(DetectorId::DB);
        assert!(cfg.validate().is_err());
    }
}
