use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{DetectionRecord, DetectorId};

/// Click-ratio visibility of the monitor line at coherent pulse-pulse boundaries.
///
/// This is a click-counting stand-in for an analog fringe visibility:
/// `V = (n_DM2 - n_DM1) / (n_DM2 + n_DM1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub constructive_clicks: u64,
    pub destructive_clicks: u64,
    /// Absent when no monitor clicked at a coherent boundary.
    pub value: Option<f64>,
}

impl Visibility {
    pub fn from_counts(constructive: u64, destructive: u64) -> Self {
        let total = constructive + destructive;
        let value = (total > 0)
            .then(|| (constructive as f64 - destructive as f64) / total as f64);
        Self {
            constructive_clicks: constructive,
            destructive_clicks: destructive,
            value,
        }
    }
}

/// Summary statistics of one measurement run as Bob observes it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStatistics {
    /// Number of detection slots (record length).
    pub slots: u64,
    pub detector_clicks: BTreeMap<DetectorId, u64>,
    pub detector_rates: BTreeMap<DetectorId, f64>,
    /// Slots with at least one click.
    pub raw_detections: u64,
    pub raw_detection_rate: f64,
    /// Slots where both detectors of the same interferometer clicked.
    pub double_clicks: u64,
    pub double_click_rate: f64,
    pub sifted_len: u64,
    pub errors: u64,
    /// Absent when the sifted key is empty.
    pub qber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<Visibility>,
}

impl RunStatistics {
    pub(crate) fn collect(
        record: &DetectionRecord,
        detectors: &[DetectorId],
        pair: (DetectorId, DetectorId),
        sifted_len: u64,
        errors: u64,
        visibility: Option<Visibility>,
    ) -> Self {
        let slots = record.len() as u64;
        let rate = |count: u64| if slots == 0 { 0.0 } else { count as f64 / slots as f64 };
        let detector_clicks: BTreeMap<_, _> = detectors
            .iter()
            .map(|&id| (id, record.count(id) as u64))
            .collect();
        let detector_rates = detector_clicks.iter().map(|(&id, &c)| (id, rate(c))).collect();
        let raw_detections = record.iter().count() as u64;
        let double_clicks = record
            .iter()
            .filter(|(_, s)| s.contains(pair.0) && s.contains(pair.1))
            .count() as u64;
        Self {
            slots,
            detector_clicks,
            detector_rates,
            raw_detections,
            raw_detection_rate: rate(raw_detections),
            double_clicks,
            double_click_rate: rate(double_clicks),
            sifted_len,
            errors,
            qber: (sifted_len > 0).then(|| errors as f64 / sifted_len as f64),
            visibility,
        }
    }
}
