use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{min_power_for_share, mismatch_warnings, FakedTrain, FsgConfig, FsgMode, Prediction};
use crate::detectors::LinearModeConfig;
use crate::error::{Error, Result};
use crate::optics::{canonical_phase, coupler_split, Pulse, PulseTrain};
use crate::protocols::cow::bob_port_powers;
use crate::protocols::{ClickSet, DetectionRecord, DetectorId};

/// Blinded thresholds of Bob's COW detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CowThresholds {
    pub monitor: LinearModeConfig,
    pub data: LinearModeConfig,
}

impl CowThresholds {
    pub fn validate(&self) -> Result<()> {
        self.monitor.validate()?;
        self.data.validate()
    }
}

fn is_monitor(id: DetectorId) -> bool {
    matches!(id, DetectorId::DM1 | DetectorId::DM2)
}

fn has_monitor(set: ClickSet) -> bool {
    set.iter().any(is_monitor)
}

/// Phase step for interference slot `k`; idle slots steer light away from
/// the monitors (quadrature with two monitors, the open port with one).
fn phase_step(set: ClickSet, unmonitored: Option<DetectorId>) -> f64 {
    if set.contains(DetectorId::DM2) {
        0.0
    } else if set.contains(DetectorId::DM1) {
        PI
    } else {
        match unmonitored {
            None => FRAC_PI_2,
            Some(DetectorId::DM2) => 0.0,
            Some(_) => PI,
        }
    }
}

fn check_cow_intended(intended: &DetectionRecord, unmonitored: Option<DetectorId>) -> Result<()> {
    let len = intended.len();
    for (slot, set) in intended.iter() {
        for id in set.iter() {
            if !matches!(id, DetectorId::DB | DetectorId::DM1 | DetectorId::DM2) {
                return Err(Error::Unsupported {
                    slot,
                    reason: format!("{id} is not a COW detector"),
                });
            }
            if Some(id) == unmonitored {
                return Err(Error::Unsupported {
                    slot,
                    reason: format!("{id} is not installed"),
                });
            }
        }
        if set.contains(DetectorId::DB) && slot == len {
            return Err(Error::Unsupported {
                slot,
                reason: "no pulse slot behind the last interference slot".into(),
            });
        }
        if has_monitor(set) && (slot == 1 || slot == len) {
            return Err(Error::Unsupported {
                slot,
                reason: "edge slot sees a single interferometer arm".into(),
            });
        }
        if set.contains(DetectorId::DM1) && set.contains(DetectorId::DM2) {
            return Err(Error::Unsupported {
                slot,
                reason: "DM1 and DM2 cannot be forced together".into(),
            });
        }
    }
    Ok(())
}

/// Bright COW train that reproduces `intended` in Bob's blinded detectors.
///
/// Baseline pulses carry just enough power for the monitor branch to reach
/// `P_always,M`; pulses behind an intended DB click carry just enough for the
/// data branch to reach `P_always,B`. Violated thresholds do not stop the
/// build; the mismatches are listed in [`FakedTrain::warnings`].
pub fn build_cow_faked_train(
    intended: &DetectionRecord,
    cfg: &FsgConfig,
    thresholds: &CowThresholds,
    t_b: f64,
) -> Result<FakedTrain> {
    cfg.validate()?;
    thresholds.validate()?;
    if !(t_b > 0.0 && t_b < 1.0) {
        return Err(Error::parameter("t_b", t_b, "must lie in (0, 1)"));
    }
    if intended.is_empty() {
        return Ok(FakedTrain::default());
    }
    if intended.len() < 2 {
        return Err(Error::Usage("a record needs at least two slots".into()));
    }
    let unmonitored = cfg.unmonitored_port;
    check_cow_intended(intended, unmonitored)?;

    let train_power = match cfg.train_power {
        Some(p) => p,
        None => {
            let target = cfg.target_power(&thresholds.monitor)?;
            min_power_for_share(target, 1.0 - t_b, |p| tapped(p, t_b))
        }
    };
    let data_power = match cfg.data_power {
        Some(p) => p,
        None => {
            let target = cfg.target_power(&thresholds.data)?;
            min_power_for_share(target, t_b, |p| kept(p, t_b))
        }
    };
    let power_at = |k: usize| {
        if intended.get(k).contains(DetectorId::DB) {
            data_power
        } else {
            train_power
        }
    };

    let n = intended.len() - 1;
    let train = match cfg.mode {
        FsgMode::Continuous => {
            let mut phase = 0.0;
            let mut slots = Vec::with_capacity(n);
            for k in 1..=n {
                if k > 1 {
                    phase = canonical_phase(phase + phase_step(intended.get(k), unmonitored));
                }
                slots.push(Pulse::new(power_at(k), phase)?);
            }
            PulseTrain::new(slots)
        }
        FsgMode::PulsePair => {
            let mut prev: Option<usize> = None;
            let mut slots = vec![Pulse::VACUUM; n];
            for (k, set) in intended.iter() {
                if let Some(p) = prev {
                    if k - p < 3 {
                        return Err(Error::Usage(format!(
                            "pulse-pair mode needs two silent slots between events, got {p} and {k}"
                        )));
                    }
                }
                prev = Some(k);
                if has_monitor(set) {
                    slots[k - 2] = Pulse::new(train_power, 0.0)?;
                    slots[k - 1] = Pulse::new(power_at(k), phase_step(set, unmonitored))?;
                } else {
                    slots[k - 1] = Pulse::new(data_power, 0.0)?;
                }
            }
            PulseTrain::new(slots)
        }
    };

    let predicted = predict(&train, thresholds, t_b, unmonitored)?;
    Ok(FakedTrain {
        warnings: mismatch_warnings(intended, &predicted),
        train,
    })
}

fn kept(p: f64, t_b: f64) -> f64 {
    coupler_split(Pulse::new(p, 0.0).expect("finite power"), t_b)
        .map(|(k, _)| k.power())
        .unwrap_or(0.0)
}

fn tapped(p: f64, t_b: f64) -> f64 {
    coupler_split(Pulse::new(p, 0.0).expect("finite power"), t_b)
        .map(|(_, t)| t.power())
        .unwrap_or(0.0)
}

fn predict(
    train: &PulseTrain,
    th: &CowThresholds,
    t_b: f64,
    unmonitored: Option<DetectorId>,
) -> Result<Vec<(usize, DetectorId, Prediction)>> {
    let ports = bob_port_powers(train, t_b)?;
    let mut out = Vec::with_capacity(3 * ports.monitor.len());
    for (i, &p) in ports.data.iter().enumerate() {
        out.push((i + 1, DetectorId::DB, Prediction::of(p, &th.data)));
    }
    for i in 0..ports.monitor.len() {
        if unmonitored != Some(DetectorId::DM2) {
            out.push((i + 1, DetectorId::DM2, Prediction::of(ports.monitor.constructive[i], &th.monitor)));
        }
        if unmonitored != Some(DetectorId::DM1) {
            out.push((i + 1, DetectorId::DM1, Prediction::of(ports.monitor.destructive[i], &th.monitor)));
        }
    }
    Ok(out)
}

/// Detectors of Bob's COW receiver that click with certainty.
pub fn predict_cow_record(
    train: &PulseTrain,
    thresholds: &CowThresholds,
    t_b: f64,
    unmonitored: Option<DetectorId>,
) -> Result<DetectionRecord> {
    let len = if train.is_empty() { 0 } else { train.len() + 1 };
    let mut rec = DetectionRecord::new(len);
    for (slot, id, p) in predict(train, thresholds, t_b, unmonitored)? {
        if p == Prediction::Always {
            rec.insert(slot, id)?;
        }
    }
    Ok(rec)
}

/// Strips events the COW FSG cannot reproduce; returns the cleaned record and
/// the number of dropped clicks.
pub fn reproducible_cow(
    record: &DetectionRecord,
    mode: FsgMode,
    unmonitored: Option<DetectorId>,
) -> (DetectionRecord, usize) {
    let len = record.len();
    let mut out = DetectionRecord::new(len);
    let mut dropped = 0;
    let mut last_kept: Option<usize> = None;
    for (slot, set) in record.iter() {
        let mut keep = ClickSet::EMPTY;
        let both_monitors = set.contains(DetectorId::DM1) && set.contains(DetectorId::DM2);
        for id in set.iter() {
            let ok = match id {
                DetectorId::DB => slot < len,
                DetectorId::DM1 | DetectorId::DM2 => {
                    slot > 1 && slot < len && !both_monitors && Some(id) != unmonitored
                }
                _ => false,
            };
            if ok {
                keep.insert(id);
            }
        }
        if mode == FsgMode::PulsePair && last_kept.is_some_and(|p| slot - p < 3) {
            keep = ClickSet::EMPTY;
        }
        dropped += set.len() - keep.len();
        if !keep.is_empty() {
            for id in keep.iter() {
                out.insert(slot, id).expect("slot in range");
            }
            last_kept = Some(slot);
        }
    }
    (out, dropped)
}
