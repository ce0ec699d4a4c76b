//! Coherent pulse trains, the asymmetric coupler and the one-slot-delay
//! unbalanced Mach-Zehnder interferometer.
//!
//! Magnitudes are stored as optical power in µW. The complex field of a slot
//! is `sqrt(power) * exp(i * phase)`.
//!
//! Edge convention of the interferometer: a train of `n` pulses produces
//! `n + 1` interference slots. Slot `k` combines pulse `k` (short arm) with
//! pulse `k - 1` (long arm); the non-existent pulses `0` and `n + 1` are
//! vacuum. The first and last interference slots therefore see a single arm
//! only and receive a quarter of the neighbouring pulse power on each port.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single time slot of the optical field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    power: f64,
    phase: f64,
}

/// Reduces a phase to its representative in `[0, 2π)`.
pub fn canonical_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Pulse {
    pub const VACUUM: Pulse = Pulse {
        power: 0.0,
        phase: 0.0,
    };

    pub fn new(power: f64, phase: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::parameter("power", power, "must be finite and >= 0"));
        }
        if !phase.is_finite() {
            return Err(Error::parameter("phase", phase, "must be finite"));
        }
        if power == 0.0 {
            return Ok(Self::VACUUM);
        }
        Ok(Self {
            power,
            phase: canonical_phase(phase),
        })
    }

    /// Power in µW.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Phase in radians, in `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn is_vacuum(&self) -> bool {
        self.power == 0.0
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.power.sqrt(), self.phase)
    }
}

/// Fixed-length sequence of pulses. Slot `k` (1-based) is `slots()[k - 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseTrain {
    slots: Vec<Pulse>,
}

impl PulseTrain {
    pub fn new(slots: Vec<Pulse>) -> Self {
        Self { slots }
    }

    pub fn vacuum(len: usize) -> Self {
        Self {
            slots: vec![Pulse::VACUUM; len],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Pulse] {
        &self.slots
    }

    /// 1-based access.
    pub fn slot(&self, k: usize) -> Option<&Pulse> {
        k.checked_sub(1).and_then(|i| self.slots.get(i))
    }

    pub fn total_power(&self) -> f64 {
        self.slots.iter().map(|p| p.power).sum()
    }

    pub fn into_slots(self) -> Vec<Pulse> {
        self.slots
    }
}

impl FromIterator<Pulse> for PulseTrain {
    fn from_iter<I: IntoIterator<Item = Pulse>>(iter: I) -> Self {
        Self {
            slots: iter.into_iter().collect(),
        }
    }
}

/// Interferometer output powers, one entry per interference slot.
///
/// Index `i` holds interference slot `i + 1`; both vectors have length `n + 1`
/// for an input train of `n` pulses (length 0 for an empty train).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PortPowers {
    pub constructive: Vec<f64>,
    pub destructive: Vec<f64>,
}

impl PortPowers {
    pub fn len(&self) -> usize {
        self.constructive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructive.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.constructive.iter().sum::<f64>() + self.destructive.iter().sum::<f64>()
    }
}

fn check_ratio(name: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::parameter(name, t, "must lie in [0, 1]"))
    }
}

/// Splits a pulse on a `t : (1 - t)` coupler. Returns `(kept, tapped)`.
pub fn coupler_split(p: Pulse, t: f64) -> Result<(Pulse, Pulse)> {
    check_ratio("t", t)?;
    let kept = p.power * t;
    // tapped is the exact remainder so that kept + tapped == p.power
    let tapped = (p.power - kept).max(0.0);
    Ok((
        Pulse::new(kept, p.phase)?,
        Pulse::new(tapped, p.phase)?,
    ))
}

/// Port powers of a 50/50 lossless interferometer whose long arm delays by one slot.
///
/// `constructive[k] = |A_k + A_{k-1}|^2 / 4` and
/// `destructive[k] = |A_k - A_{k-1}|^2 / 4`.
pub fn mzi_port_powers(train: &PulseTrain) -> PortPowers {
    let n = train.len();
    if n == 0 {
        return PortPowers::default();
    }
    let mut constructive = Vec::with_capacity(n + 1);
    let mut destructive = Vec::with_capacity(n + 1);
    let mut prev = Pulse::VACUUM;
    for &cur in train.slots.iter().chain(std::iter::once(&Pulse::VACUUM)) {
        let (c, d) = interfere(cur, prev);
        constructive.push(c);
        destructive.push(d);
        prev = cur;
    }
    PortPowers {
        constructive,
        destructive,
    }
}

/// Interference of two pulses; returns `(constructive, destructive)` power.
#[inline]
pub fn interfere(a: Pulse, b: Pulse) -> (f64, f64) {
    let sum = a.power + b.power;
    if a.power == 0.0 || b.power == 0.0 {
        return (sum / 4.0, sum / 4.0);
    }
    let cross = 2.0 * (a.power * b.power).sqrt() * (a.phase - b.phase).cos();
    (
        ((sum + cross) / 4.0).max(0.0),
        ((sum - cross) / 4.0).max(0.0),
    )
}

/// Scales every slot by the line transmittance.
pub fn attenuate(train: &PulseTrain, transmittance: f64) -> Result<PulseTrain> {
    check_ratio("transmittance", transmittance)?;
    train
        .slots
        .iter()
        .map(|p| Pulse::new(p.power * transmittance, p.phase))
        .collect::<Result<Vec<_>>>()
        .map(PulseTrain::new)
}
