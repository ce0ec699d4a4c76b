use std::f64::consts::{FRAC_PI_2, PI};

use super::{mismatch_warnings, FakedTrain, FsgConfig, FsgMode, Prediction};
use crate::detectors::LinearModeConfig;
use crate::error::{Error, Result};
use crate::optics::{canonical_phase, mzi_port_powers, Pulse, PulseTrain};
use crate::protocols::{ClickSet, DetectionRecord, DetectorId};

/// Phase step that steers a DPS interference slot.
fn phase_step(set: ClickSet) -> f64 {
    if set.contains(DetectorId::D0) {
        0.0
    } else if set.contains(DetectorId::D1) {
        PI
    } else {
        FRAC_PI_2
    }
}

fn check_dps_intended(intended: &DetectionRecord) -> Result<()> {
    let len = intended.len();
    for (slot, set) in intended.iter() {
        if let Some(id) = set
            .iter()
            .find(|id| !matches!(id, DetectorId::D0 | DetectorId::D1))
        {
            return Err(Error::Unsupported {
                slot,
                reason: format!("{id} is not a DPS detector"),
            });
        }
        if set.len() > 1 {
            return Err(Error::Unsupported {
                slot,
                reason: "D0 and D1 cannot be forced together".into(),
            });
        }
        if slot == 1 || slot == len {
            return Err(Error::Unsupported {
                slot,
                reason: "edge slot sees a single interferometer arm".into(),
            });
        }
    }
    Ok(())
}

fn check_spacing(intended: &DetectionRecord) -> Result<()> {
    let mut prev: Option<usize> = None;
    for (slot, _) in intended.iter() {
        if let Some(p) = prev {
            if slot - p < 3 {
                return Err(Error::Usage(format!(
                    "pulse-pair mode needs two silent slots between events, got {p} and {slot}"
                )));
            }
        }
        prev = Some(slot);
    }
    Ok(())
}

/// Bright DPS train that makes Bob's blinded detectors reproduce `intended`.
///
/// `intended` spans interference slots, so the train has `intended.len() - 1`
/// pulses. Slot 1 and the last slot can never be targeted.
pub fn build_dps_faked_train(
    intended: &DetectionRecord,
    cfg: &FsgConfig,
    thresholds: &LinearModeConfig,
) -> Result<FakedTrain> {
    cfg.validate()?;
    thresholds.validate()?;
    if intended.is_empty() {
        return Ok(FakedTrain::default());
    }
    if intended.len() < 2 {
        return Err(Error::Usage("a record needs at least two slots".into()));
    }
    check_dps_intended(intended)?;
    let power = match cfg.trigger_power {
        Some(p) => p,
        None => cfg.target_power(thresholds)?,
    };
    let n = intended.len() - 1;
    let train = match cfg.mode {
        FsgMode::Continuous => {
            let mut phase = 0.0;
            let mut slots = Vec::with_capacity(n);
            for k in 1..=n {
                if k > 1 {
                    phase = canonical_phase(phase + phase_step(intended.get(k)));
                }
                slots.push(Pulse::new(power, phase)?);
            }
            PulseTrain::new(slots)
        }
        FsgMode::PulsePair => {
            check_spacing(intended)?;
            let mut slots = vec![Pulse::VACUUM; n];
            for (k, set) in intended.iter() {
                slots[k - 2] = Pulse::new(power, 0.0)?;
                slots[k - 1] = Pulse::new(power, phase_step(set))?;
            }
            PulseTrain::new(slots)
        }
    };
    let predicted = predict(&train, thresholds);
    Ok(FakedTrain {
        warnings: mismatch_warnings(intended, &predicted),
        train,
    })
}

fn predict(train: &PulseTrain, th: &LinearModeConfig) -> Vec<(usize, DetectorId, Prediction)> {
    let ports = mzi_port_powers(train);
    let mut out = Vec::with_capacity(2 * ports.len());
    for (i, (&c, &d)) in ports.constructive.iter().zip(&ports.destructive).enumerate() {
        out.push((i + 1, DetectorId::D0, Prediction::of(c, th)));
        out.push((i + 1, DetectorId::D1, Prediction::of(d, th)));
    }
    out
}

/// Deterministic part of Bob's response: detectors whose click probability is exactly 1.
pub fn predict_dps_record(train: &PulseTrain, thresholds: &LinearModeConfig) -> DetectionRecord {
    let ports = mzi_port_powers(train);
    let mut rec = DetectionRecord::new(ports.len());
    for (slot, id, p) in predict(train, thresholds) {
        if p == Prediction::Always {
            rec.insert(slot, id).expect("slot in range");
        }
    }
    rec
}

/// Strips events the FSG cannot reproduce. Returns the cleaned record and
/// the number of dropped clicks.
///
/// Edge-slot clicks and D0+D1 double clicks are dropped; in pulse-pair mode
/// events closer than three slots to the previous kept event are dropped too.
pub fn reproducible_dps(record: &DetectionRecord, mode: FsgMode) -> (DetectionRecord, usize) {
    let len = record.len();
    let mut out = DetectionRecord::new(len);
    let mut dropped = 0;
    let mut last_kept: Option<usize> = None;
    for (slot, set) in record.iter() {
        let drop = slot == 1
            || slot == len
            || set.len() != 1
            || (mode == FsgMode::PulsePair && last_kept.is_some_and(|p| slot - p < 3));
        if drop {
            dropped += set.len();
            continue;
        }
        for id in set.iter() {
            out.insert(slot, id).expect("slot in range");
        }
        last_kept = Some(slot);
    }
    (out, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::dps::bob_measure;
    use crate::detectors::DetectorConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn th() -> LinearModeConfig {
        LinearModeConfig::new(400.0, 500.0).unwrap()
    }

    fn record(len: usize, clicks: &[(usize, DetectorId)]) -> DetectionRecord {
        let mut r = DetectionRecord::new(len);
        for &(k, id) in clicks {
            r.insert(k, id).unwrap();
        }
        r
    }

    fn pair_cfg() -> FsgConfig {
        FsgConfig {
            mode: FsgMode::PulsePair,
            trigger_power: Some(500.0),
            ..FsgConfig::default()
        }
    }

    #[test]
    fn pulse_pair_layout_and_powers() {
        let intended = record(6, &[(3, DetectorId::D0)]);
        let fake = build_dps_faked_train(&intended, &pair_cfg(), &th()).unwrap();
        let powers: Vec<f64> = fake.train.slots().iter().map(|p| p.power()).collect();
        assert_eq!(powers, vec![0.0, 500.0, 500.0, 0.0, 0.0]);
        let ports = mzi_port_powers(&fake.train);
        assert_eq!(ports.constructive[2], 500.0);
        assert_eq!(ports.destructive[2], 0.0);
        assert_eq!((ports.constructive[1], ports.destructive[1]), (125.0, 125.0));
        assert_eq!((ports.constructive[3], ports.destructive[3]), (125.0, 125.0));
        assert!(fake.warnings.is_empty());

        let intended = record(6, &[(3, DetectorId::D1)]);
        let fake = build_dps_faked_train(&intended, &pair_cfg(), &th()).unwrap();
        let ports = mzi_port_powers(&fake.train);
        assert_eq!(ports.destructive[2], 500.0);
        assert!(ports.constructive[2] < 1e-9);
    }

    #[test]
    fn empty_intent_gives_vacuum() {
        let fake = build_dps_faked_train(&DetectionRecord::new(5), &pair_cfg(), &th()).unwrap();
        assert!(fake.train.slots().iter().all(Pulse::is_vacuum));
        assert_eq!(fake.train.len(), 4);
    }

    #[test]
    fn unsupported_intents() {
        let cfg = FsgConfig::default();
        assert!(matches!(
            build_dps_faked_train(&record(5, &[(1, DetectorId::D0)]), &cfg, &th()),
            Err(Error::Unsupported { slot: 1, .. })
        ));
        assert!(build_dps_faked_train(&record(5, &[(5, DetectorId::D0)]), &cfg, &th()).is_err());
        assert!(build_dps_faked_train(&record(5, &[(3, DetectorId::DB)]), &cfg, &th()).is_err());
        assert!(build_dps_faked_train(
            &record(5, &[(3, DetectorId::D0), (3, DetectorId::D1)]),
            &cfg,
            &th()
        )
        .is_err());
        let close = record(9, &[(3, DetectorId::D0), (5, DetectorId::D1)]);
        assert!(build_dps_faked_train(&close, &cfg, &th()).is_ok());
        assert!(build_dps_faked_train(&close, &pair_cfg(), &th()).is_err());
    }

    #[test]
    fn continuous_round_trip() {
        let intended = record(
            8,
            &[(2, DetectorId::D0), (3, DetectorId::D1), (4, DetectorId::D1), (6, DetectorId::D0)],
        );
        let fake = build_dps_faked_train(&intended, &FsgConfig::default(), &th()).unwrap();
        assert!(fake.warnings.is_empty());
        let det = DetectorConfig::linear(th());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(bob_measure(&fake.train, &det, &det, &mut rng), intended);
        assert_eq!(predict_dps_record(&fake.train, &th()), intended);
    }

    #[test]
    fn infeasible_thresholds_warn() {
        let th = LinearModeConfig::new(400.0, 880.0).unwrap();
        let intended = record(6, &[(3, DetectorId::D0)]);
        let fake = build_dps_faked_train(&intended, &FsgConfig::default(), &th).unwrap();
        assert!(!fake.warnings.is_empty());
    }

    #[test]
    fn sanitizer_drops_unreproducible_events() {
        let r = record(
            10,
            &[
                (1, DetectorId::D0),
                (3, DetectorId::D0),
                (4, DetectorId::D1),
                (6, DetectorId::D0),
                (6, DetectorId::D1),
                (8, DetectorId::D1),
                (10, DetectorId::D0),
            ],
        );
        let (c, dropped) = reproducible_dps(&r, FsgMode::Continuous);
        assert_eq!(dropped, 4);
        assert_eq!(c.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![3, 4, 8]);
        let (p, dropped) = reproducible_dps(&r, FsgMode::PulsePair);
        assert_eq!(dropped, 5);
        assert_eq!(p.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![3, 8]);
    }
}
