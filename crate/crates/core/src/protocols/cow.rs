//! Coherent-one-way QKD.
//!
//! Each bit occupies a two-slot frame and is carried by the position of the
//! empty slot: bit 0 is (pulse, vacuum), bit 1 is (vacuum, pulse). Decoy
//! frames are (pulse, pulse). Bob taps `1 - t_b` of the light into a delay
//! interferometer watched by DM2 (constructive) and DM1 (destructive); the
//! remaining `t_b` goes to the data detector DB.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DetectionRecord, DetectorId, LiveDetector, RunStatistics, SiftedKey, Source, Visibility};
use crate::detectors::{DetectorConfig, GeigerConfig};
use crate::error::{Error, Result};
use crate::optics::{coupler_split, mzi_port_powers, PortPowers, Pulse, PulseTrain};

/// Which monitor detectors Bob has installed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorLayout {
    #[default]
    Both,
    /// Only DM1 is installed; the constructive port is an open output.
    Dm1Only,
    /// Only DM2 is installed; the destructive port is an open output.
    Dm2Only,
}

impl MonitorLayout {
    pub fn one_monitor(self) -> bool {
        self != MonitorLayout::Both
    }

    pub fn has(self, id: DetectorId) -> bool {
        matches!(
            (self, id),
            (MonitorLayout::Both, DetectorId::DM1 | DetectorId::DM2)
                | (MonitorLayout::Dm1Only, DetectorId::DM1)
                | (MonitorLayout::Dm2Only, DetectorId::DM2)
        )
    }

    /// The interferometer port left without a detector, if any.
    pub fn unmonitored(self) -> Option<DetectorId> {
        match self {
            MonitorLayout::Both => None,
            MonitorLayout::Dm1Only => Some(DetectorId::DM2),
            MonitorLayout::Dm2Only => Some(DetectorId::DM1),
        }
    }

    pub fn detectors(self) -> Vec<DetectorId> {
        [DetectorId::DB, DetectorId::DM1, DetectorId::DM2]
            .into_iter()
            .filter(|&id| id == DetectorId::DB || self.has(id))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CowConfig {
    #[serde(flatten)]
    pub source: Source,
    pub n_bits: usize,
    /// Fraction of the light sent to the data detector.
    pub t_b: f64,
    #[serde(default)]
    pub decoy_prob: f64,
    #[serde(default)]
    pub monitors: MonitorLayout,
    pub db: DetectorConfig,
    pub dm1: DetectorConfig,
    pub dm2: DetectorConfig,
}

impl CowConfig {
    pub fn honest(mu: f64, n_bits: usize, t_b: f64, efficiency: f64) -> Result<Self> {
        let det = DetectorConfig::geiger(GeigerConfig::new(efficiency, 0.0, 1.0)?);
        let cfg = Self {
            source: Source::with_mu(mu),
            n_bits,
            t_b,
            decoy_prob: 0.0,
            monitors: MonitorLayout::Both,
            db: det,
            dm1: det,
            dm2: det,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        if !(self.t_b > 0.0 && self.t_b < 1.0) {
            return Err(Error::parameter("t_b", self.t_b, "must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.decoy_prob) {
            return Err(Error::parameter(
                "decoy_prob",
                self.decoy_prob,
                "must lie in [0, 1)",
            ));
        }
        for d in [&self.db, &self.dm1, &self.dm2] {
            d.validate()?;
        }
        Ok(())
    }

    pub fn detector(&self, id: DetectorId) -> Option<&DetectorConfig> {
        match id {
            DetectorId::DB => Some(&self.db),
            DetectorId::DM1 => Some(&self.dm1),
            DetectorId::DM2 => Some(&self.dm2),
            _ => None,
        }
    }

    /// Same optical layout with every detector replaced by `det`.
    pub fn with_detectors(&self, db: DetectorConfig, monitor: DetectorConfig) -> Self {
        Self {
            db,
            dm1: monitor,
            dm2: monitor,
            ..*self
        }
    }
}

/// Content of one two-slot frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Data(bool),
    Decoy,
}

impl Frame {
    /// Pulse occupancy of the (first, second) slot.
    pub fn occupancy(self) -> (bool, bool) {
        match self {
            Frame::Data(false) => (true, false),
            Frame::Data(true) => (false, true),
            Frame::Decoy => (true, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CowEmission {
    pub frames: Vec<Frame>,
    pub train: PulseTrain,
}

impl CowEmission {
    pub fn record_len(&self) -> usize {
        if self.train.is_empty() {
            0
        } else {
            self.train.len() + 1
        }
    }

    /// Interference slots whose two contributing pulses are both present.
    pub fn coherent_boundaries(&self) -> Vec<usize> {
        let occupied: Vec<bool> = self
            .frames
            .iter()
            .flat_map(|f| {
                let (a, b) = f.occupancy();
                [a, b]
            })
            .collect();
        (2..=occupied.len())
            .filter(|&j| occupied[j - 2] && occupied[j - 1])
            .collect()
    }
}

pub fn alice_emit<R: Rng + ?Sized>(
    bits: &[bool],
    source: &Source,
    decoy_prob: f64,
    rng: &mut R,
) -> Result<CowEmission> {
    source.validate()?;
    if !(0.0..1.0).contains(&decoy_prob) {
        return Err(Error::parameter("decoy_prob", decoy_prob, "must lie in [0, 1)"));
    }
    let pulse = Pulse::new(source.pulse_power(), 0.0)?;
    let frames: Vec<Frame> = bits
        .iter()
        .map(|&b| {
            if decoy_prob > 0.0 && rng.gen_bool(decoy_prob) {
                Frame::Decoy
            } else {
                Frame::Data(b)
            }
        })
        .collect();
    let train = frames
        .iter()
        .flat_map(|f| {
            let (a, b) = f.occupancy();
            [a, b]
        })
        .map(|on| if on { pulse } else { Pulse::VACUUM })
        .collect();
    Ok(CowEmission { frames, train })
}

/// Optical power at Bob's detectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CowPorts {
    /// Data detector, one entry per pulse slot.
    pub data: Vec<f64>,
    /// Monitor line; constructive feeds DM2, destructive feeds DM1.
    pub monitor: PortPowers,
}

pub fn bob_port_powers(train: &PulseTrain, t_b: f64) -> Result<CowPorts> {
    let mut data = Vec::with_capacity(train.len());
    let mut tapped = Vec::with_capacity(train.len());
    for &p in train.slots() {
        let (kept, tap) = coupler_split(p, t_b)?;
        data.push(kept.power());
        tapped.push(tap);
    }
    Ok(CowPorts {
        data,
        monitor: mzi_port_powers(&PulseTrain::new(tapped)),
    })
}

pub fn bob_measure<R: Rng + ?Sized>(
    train: &PulseTrain,
    cfg: &CowConfig,
    rng: &mut R,
) -> Result<DetectionRecord> {
    let ports = bob_port_powers(train, cfg.t_b)?;
    let mut record = DetectionRecord::new(ports.monitor.len());
    let mut db = LiveDetector::new(cfg.db);
    let mut dm2 = cfg.monitors.has(DetectorId::DM2).then(|| LiveDetector::new(cfg.dm2));
    let mut dm1 = cfg.monitors.has(DetectorId::DM1).then(|| LiveDetector::new(cfg.dm1));
    for i in 0..ports.monitor.len() {
        let slot = i + 1;
        if let Some(&p) = ports.data.get(i) {
            if db.step(p, slot, rng) {
                record.insert(slot, DetectorId::DB)?;
            }
        }
        if let Some(d) = dm2.as_mut() {
            if d.step(ports.monitor.constructive[i], slot, rng) {
                record.insert(slot, DetectorId::DM2)?;
            }
        }
        if let Some(d) = dm1.as_mut() {
            if d.step(ports.monitor.destructive[i], slot, rng) {
                record.insert(slot, DetectorId::DM1)?;
            }
        }
    }
    Ok(record)
}

/// Sifts data frames and estimates the monitor visibility.
///
/// A DB click in exactly one slot of a data frame yields a key bit; decoy
/// frames and frames with DB clicks in both slots are discarded. Visibility
/// counts monitor clicks only at coherent pulse-pulse boundaries.
pub fn sift(
    alice: &CowEmission,
    record: &DetectionRecord,
    monitors: MonitorLayout,
) -> Result<(SiftedKey, RunStatistics)> {
    if record.len() != alice.record_len() {
        return Err(Error::Usage(format!(
            "record length {} does not match {} frames",
            record.len(),
            alice.frames.len()
        )));
    }
    let mut key = SiftedKey::default();
    for (f, frame) in alice.frames.iter().enumerate() {
        let Frame::Data(bit) = *frame else { continue };
        let first = 2 * f + 1;
        let c1 = record.get(first).contains(DetectorId::DB);
        let c2 = record.get(first + 1).contains(DetectorId::DB);
        if c1 != c2 {
            key.push(if c1 { first } else { first + 1 }, bit, c2);
        }
    }
    let (mut constructive, mut destructive) = (0, 0);
    for j in alice.coherent_boundaries() {
        let s = record.get(j);
        constructive += u64::from(s.contains(DetectorId::DM2));
        destructive += u64::from(s.contains(DetectorId::DM1));
    }
    let stats = RunStatistics::collect(
        record,
        &monitors.detectors(),
        (DetectorId::DM1, DetectorId::DM2),
        key.len() as u64,
        key.errors() as u64,
        Some(Visibility::from_counts(constructive, destructive)),
    );
    Ok((key, stats))
}
