use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detector identity. `D0`/`DM2` sit on the constructive interferometer
/// port, `D1`/`DM1` on the destructive port, `DB` is the COW data detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DetectorId {
    D0,
    D1,
    DB,
    DM1,
    DM2,
}

impl DetectorId {
    pub const ALL: [DetectorId; 5] = [
        DetectorId::D0,
        DetectorId::D1,
        DetectorId::DB,
        DetectorId::DM1,
        DetectorId::DM2,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectorId::D0 => "D0",
            DetectorId::D1 => "D1",
            DetectorId::DB => "DB",
            DetectorId::DM1 => "DM1",
            DetectorId::DM2 => "DM2",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of detectors that clicked in one slot.
#[derive(Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ClickSet(u8);

impl ClickSet {
    pub const EMPTY: ClickSet = ClickSet(0);

    pub fn contains(self, id: DetectorId) -> bool {
        self.0 & id.bit() != 0
    }

    pub fn insert(&mut self, id: DetectorId) {
        self.0 |= id.bit();
    }

    pub fn remove(&mut self, id: DetectorId) {
        self.0 &= !id.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = DetectorId> {
        DetectorId::ALL.into_iter().filter(move |id| self.contains(*id))
    }
}

impl FromIterator<DetectorId> for ClickSet {
    fn from_iter<I: IntoIterator<Item = DetectorId>>(iter: I) -> Self {
        let mut s = ClickSet::EMPTY;
        for id in iter {
            s.insert(id);
        }
        s
    }
}

impl fmt::Debug for ClickSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Per-slot clicks of one measurement run. Slots are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "RecordRepr", try_from = "RecordRepr")]
pub struct DetectionRecord {
    slots: Vec<ClickSet>,
}

impl DetectionRecord {
    pub fn new(length: usize) -> Self {
        Self {
            slots: vec![ClickSet::EMPTY; length],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Clicks at 1-based `slot`; empty outside the record.
    pub fn get(&self, slot: usize) -> ClickSet {
        slot.checked_sub(1)
            .and_then(|i| self.slots.get(i).copied())
            .unwrap_or_default()
    }

    pub fn insert(&mut self, slot: usize, id: DetectorId) -> Result<()> {
        let len = self.len();
        let cell = slot
            .checked_sub(1)
            .and_then(|i| self.slots.get_mut(i))
            .ok_or_else(|| Error::Usage(format!("slot {slot} outside record 1..={len}")))?;
        cell.insert(id);
        Ok(())
    }

    pub fn remove(&mut self, slot: usize, id: DetectorId) {
        if let Some(cell) = slot.checked_sub(1).and_then(|i| self.slots.get_mut(i)) {
            cell.remove(id);
        }
    }

    /// Nonempty slots in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, ClickSet)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(i, s)| (i + 1, *s))
    }

    pub fn count(&self, id: DetectorId) -> usize {
        self.slots.iter().filter(|s| s.contains(id)).count()
    }

    pub fn total_clicks(&self) -> usize {
        self.slots.iter().map(|s| s.len()).sum()
    }

    pub fn detectors(&self) -> ClickSet {
        self.slots.iter().fold(ClickSet::EMPTY, |acc, s| ClickSet(acc.0 | s.0))
    }
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    length: usize,
    clicks: Vec<SlotRepr>,
}

#[derive(Serialize, Deserialize)]
struct SlotRepr {
    slot: usize,
    detectors: Vec<DetectorId>,
}

impl From<DetectionRecord> for RecordRepr {
    fn from(r: DetectionRecord) -> Self {
        RecordRepr {
            length: r.len(),
            clicks: r
                .iter()
                .map(|(slot, s)| SlotRepr {
                    slot,
                    detectors: s.iter().collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<RecordRepr> for DetectionRecord {
    type Error = Error;

    fn try_from(r: RecordRepr) -> Result<Self> {
        let mut rec = DetectionRecord::new(r.length);
        for s in r.clicks {
            if s.detectors.is_empty() {
                return Err(Error::Usage(format!("empty click set at slot {}", s.slot)));
            }
            for id in s.detectors {
                rec.insert(s.slot, id)?;
            }
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_query() {
        let mut r = DetectionRecord::new(4);
        r.insert(2, DetectorId::D0).unwrap();
        r.insert(2, DetectorId::D1).unwrap();
        r.insert(4, DetectorId::D1).unwrap();
        assert!(r.insert(5, DetectorId::D0).is_err());
        assert!(r.insert(0, DetectorId::D0).is_err());
        assert_eq!(r.get(2).len(), 2);
        assert!(r.get(1).is_empty());
        assert!(r.get(99).is_empty());
        assert_eq!(r.count(DetectorId::D1), 2);
        assert_eq!(r.total_clicks(), 3);
        let slots: Vec<_> = r.iter().map(|(k, _)| k).collect();
        assert_eq!(slots, vec![2, 4]);
    }

    #[test]
    fn json_lists_only_nonempty_slots() {
        let mut r = DetectionRecord::new(3);
        r.insert(3, DetectorId::DM2).unwrap();
        r.insert(3, DetectorId::DB).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"length": 3, "clicks": [{"slot": 3, "detectors": ["DB", "DM2"]}]})
        );
        let back: DetectionRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let bad = serde_json::json!({"length": 2, "clicks": [{"slot": 3, "detectors": ["DB"]}]});
        assert!(serde_json::from_value::<DetectionRecord>(bad).is_err());
    }
}
