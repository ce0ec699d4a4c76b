//! Differential-phase-shift QKD: bit 0 is a 0 phase step between adjacent
//! pulses, bit 1 a π step. Bob uses one delay interferometer with D0 on the
//! constructive port and D1 on the destructive port.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DetectionRecord, DetectorId, LiveDetector, RunStatistics, SiftedKey, Source, StartPhase};
use crate::detectors::{DetectorConfig, GeigerConfig};
use crate::error::{Error, Result};
use crate::optics::{canonical_phase, mzi_port_powers, PortPowers, Pulse, PulseTrain};

pub const DETECTORS: [DetectorId; 2] = [DetectorId::D0, DetectorId::D1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpsConfig {
    #[serde(flatten)]
    pub source: Source,
    pub n_bits: usize,
    pub d0: DetectorConfig,
    pub d1: DetectorConfig,
}

impl DpsConfig {
    /// Both detectors in single-photon mode with the given efficiency.
    pub fn honest(mu: f64, n_bits: usize, efficiency: f64) -> Result<Self> {
        let det = DetectorConfig::geiger(GeigerConfig::new(efficiency, 0.0, 1.0)?);
        Ok(Self {
            source: Source::with_mu(mu),
            n_bits,
            d0: det,
            d1: det,
        })
    }

    pub fn detector(&self, id: DetectorId) -> Option<&DetectorConfig> {
        match id {
            DetectorId::D0 => Some(&self.d0),
            DetectorId::D1 => Some(&self.d1),
            _ => None,
        }
    }
}

/// What Alice sent.
#[derive(Debug, Clone, PartialEq)]
pub struct DpsEmission {
    pub bits: Vec<bool>,
    pub phases: Vec<f64>,
    pub train: PulseTrain,
}

impl DpsEmission {
    /// Interference slots in Bob's record (`pulses + 1`).
    pub fn record_len(&self) -> usize {
        if self.train.is_empty() {
            0
        } else {
            self.train.len() + 1
        }
    }
}

pub fn alice_emit<R: Rng + ?Sized>(bits: &[bool], source: &Source, rng: &mut R) -> Result<DpsEmission> {
    source.validate()?;
    let power = source.pulse_power();
    let mut phase = match source.start_phase {
        StartPhase::Random if rng.gen::<bool>() => PI,
        _ => 0.0,
    };
    let mut phases = Vec::with_capacity(bits.len() + 1);
    phases.push(phase);
    for &b in bits {
        if b {
            phase = canonical_phase(phase + PI);
        }
        phases.push(phase);
    }
    let train = phases
        .iter()
        .map(|&ph| Pulse::new(power, ph))
        .collect::<Result<Vec<_>>>()?;
    Ok(DpsEmission {
        bits: bits.to_vec(),
        phases,
        train: PulseTrain::new(train),
    })
}

/// Optical power reaching D0 (constructive) and D1 (destructive).
pub fn bob_port_powers(train: &PulseTrain) -> PortPowers {
    mzi_port_powers(train)
}

pub fn bob_measure<R: Rng + ?Sized>(
    train: &PulseTrain,
    d0: &DetectorConfig,
    d1: &DetectorConfig,
    rng: &mut R,
) -> DetectionRecord {
    let ports = bob_port_powers(train);
    let mut record = DetectionRecord::new(ports.len());
    let mut det0 = LiveDetector::new(*d0);
    let mut det1 = LiveDetector::new(*d1);
    for (i, (&c, &d)) in ports.constructive.iter().zip(&ports.destructive).enumerate() {
        let slot = i + 1;
        if det0.step(c, slot, rng) {
            record.insert(slot, DetectorId::D0).expect("slot in range");
        }
        if det1.step(d, slot, rng) {
            record.insert(slot, DetectorId::D1).expect("slot in range");
        }
    }
    record
}

/// Keeps singly-clicked interior slots; D0 reads as bit 0, D1 as bit 1.
pub fn sift(alice: &DpsEmission, record: &DetectionRecord) -> Result<(SiftedKey, RunStatistics)> {
    if record.len() != alice.record_len() {
        return Err(Error::Usage(format!(
            "record length {} does not match {} pulses",
            record.len(),
            alice.train.len()
        )));
    }
    let mut key = SiftedKey::default();
    // interior slots 2..=n_pulses carry bit k-1
    for (slot, set) in record.iter() {
        if slot < 2 || slot > alice.train.len() || set.len() != 1 {
            continue;
        }
        let bob_bit = if set.contains(DetectorId::D0) {
            false
        } else if set.contains(DetectorId::D1) {
            true
        } else {
            continue;
        };
        key.push(slot, alice.bits[slot - 2], bob_bit);
    }
    let stats = RunStatistics::collect(
        record,
        &DETECTORS,
        (DetectorId::D0, DetectorId::D1),
        key.len() as u64,
        key.errors() as u64,
        None,
    );
    Ok((key, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_start(mu: f64) -> Source {
        Source {
            mu,
            kappa: 1.0,
            start_phase: StartPhase::Zero,
        }
    }

    #[test]
    fn encoding_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = alice_emit(&[false], &zero_start(0.2), &mut rng).unwrap();
        assert_eq!(e.phases, vec![0.0, 0.0]);
        let e = alice_emit(&[true, true], &zero_start(0.2), &mut rng).unwrap();
        assert_eq!(e.phases, vec![0.0, PI, 0.0]);
        let e = alice_emit(&[], &zero_start(0.2), &mut rng).unwrap();
        assert_eq!(e.train.len(), 1);
        assert_eq!(e.record_len(), 2);
        assert!(e.train.slots().iter().all(|p| p.power() == 0.2));
    }

    #[test]
    fn vacuum_gives_empty_record() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = DpsConfig::honest(0.2, 10, 1.0).unwrap();
        let rec = bob_measure(&PulseTrain::vacuum(10), &cfg.d0, &cfg.d1, &mut rng);
        assert_eq!(rec.len(), 11);
        assert_eq!(rec.total_clicks(), 0);
    }

    #[test]
    fn noiseless_run_has_zero_qber() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = DpsConfig::honest(2.0, 5000, 1.0).unwrap();
        let bits = super::super::random_bits(cfg.n_bits, &mut rng);
        let e = alice_emit(&bits, &cfg.source, &mut rng).unwrap();
        let rec = bob_measure(&e.train, &cfg.d0, &cfg.d1, &mut rng);
        let (key, stats) = sift(&e, &rec).unwrap();
        assert!(key.len() > 1000);
        assert_eq!(stats.qber, Some(0.0));
        assert_eq!(stats.errors, 0);
    }

    #[test]
    fn single_wrong_click_is_full_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = alice_emit(&[false, false], &zero_start(0.2), &mut rng).unwrap();
        let mut rec = DetectionRecord::new(4);
        rec.insert(2, DetectorId::D1).unwrap();
        let (key, stats) = sift(&e, &rec).unwrap();
        assert_eq!(key.len(), 1);
        assert_eq!(stats.qber, Some(1.0));
    }

    #[test]
    fn edges_and_double_clicks_are_discarded() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = alice_emit(&[false, true], &zero_start(0.2), &mut rng).unwrap();
        let mut rec = DetectionRecord::new(4);
        rec.insert(1, DetectorId::D0).unwrap();
        rec.insert(4, DetectorId::D1).unwrap();
        rec.insert(3, DetectorId::D0).unwrap();
        rec.insert(3, DetectorId::D1).unwrap();
        let (key, stats) = sift(&e, &rec).unwrap();
        assert!(key.is_empty());
        assert_eq!(stats.qber, None);
        assert_eq!(stats.double_clicks, 1);
        assert_eq!(stats.raw_detections, 3);
    }

    #[test]
    fn empty_record_and_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = alice_emit(&[true], &zero_start(0.2), &mut rng).unwrap();
        let (key, stats) = sift(&e, &DetectionRecord::new(3)).unwrap();
        assert!(key.is_empty());
        assert_eq!(stats.qber, None);
        assert!(sift(&e, &DetectionRecord::new(5)).is_err());
    }

    #[test]
    fn poisson_click_rate() {
        // every interior slot routes all of one pulse's power to a single port
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let cfg = DpsConfig::honest(0.2, n, 0.1).unwrap();
        let bits = super::super::random_bits(n, &mut rng);
        let e = alice_emit(&bits, &cfg.source, &mut rng).unwrap();
        let rec = bob_measure(&e.train, &cfg.d0, &cfg.d1, &mut rng);
        let interior = (2..=e.train.len()).filter(|&k| !rec.get(k).is_empty()).count();
        let p = 1.0 - (-0.02f64).exp();
        let freq = interior as f64 / (e.train.len() - 1) as f64;
        let sigma = (p * (1.0 - p) / (e.train.len() - 1) as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "{freq} vs {p}");
    }
}
