//! End-to-end runs: Alice → channel (or Eve) → Bob → sifting.
//!
//! Each run derives independent ChaCha8 streams from one 64-bit seed:
//! stream 0 drives Alice (key bits, start phase, decoys), stream 1 drives
//! Bob's detectors and stream 2 drives Eve's Bob′. Alice's stream is shared
//! between an honest and an attacked run with the same seed, so both see
//! the same transmitted bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{
    build_cow_faked_train, build_dps_faked_train, eve_intercept_cow, eve_intercept_dps,
    reproducible_cow, reproducible_dps, CowThresholds, FsgConfig, InterceptConfig,
};
use crate::detectors::{DetectorConfig, LinearModeConfig};
use crate::error::Result;
use crate::optics::attenuate;
use crate::protocols::cow::{self, CowConfig};
use crate::protocols::dps::{self, DpsConfig};
use crate::protocols::{random_bits, DetectionRecord, RunStatistics, SiftedKey};

const ALICE_STREAM: u64 = 0;
const BOB_STREAM: u64 = 1;
const EVE_STREAM: u64 = 2;

/// XOR-ed into a scenario seed to obtain the seed of its honest baseline run.
pub const HONEST_BASELINE_SEED_XOR: u64 = 0x5EED_BA5E_11E5_0001;

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// What Eve did during an attacked run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackLog {
    /// Clicks in Bob′'s record.
    pub intercepted_clicks: u64,
    /// Clicks the faked-state generator could not reproduce and skipped.
    pub dropped_clicks: u64,
    /// Bob's record equals the record Eve intended to induce.
    pub reproduced_exactly: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: DetectionRecord,
    pub key: SiftedKey,
    pub statistics: RunStatistics,
    pub attack: Option<AttackLog>,
}

pub struct DpsAttack<'a> {
    pub intercept: &'a InterceptConfig,
    pub fsg: &'a FsgConfig,
    pub thresholds: &'a LinearModeConfig,
}

pub struct CowAttack<'a> {
    pub intercept: &'a InterceptConfig,
    pub fsg: &'a FsgConfig,
    pub thresholds: &'a CowThresholds,
}

fn blinded(th: &LinearModeConfig, like: &DetectorConfig) -> DetectorConfig {
    DetectorConfig::linear(*th).with_deadtime(like.deadtime_slots)
}

pub fn run_dps_honest(cfg: &DpsConfig, transmittance: f64, seed: u64) -> Result<RunOutcome> {
    let mut alice_rng = rng_stream(seed, ALICE_STREAM);
    let bits = random_bits(cfg.n_bits, &mut alice_rng);
    let emission = dps::alice_emit(&bits, &cfg.source, &mut alice_rng)?;
    let received = attenuate(&emission.train, transmittance)?;
    let record = dps::bob_measure(&received, &cfg.d0, &cfg.d1, &mut rng_stream(seed, BOB_STREAM));
    let (key, statistics) = dps::sift(&emission, &record)?;
    Ok(RunOutcome {
        record,
        key,
        statistics,
        attack: None,
    })
}

/// Eve intercepts Alice's train, resends a faked train, Bob measures it with
/// detectors blinded to `attack.thresholds`.
pub fn run_dps_attack(cfg: &DpsConfig, attack: &DpsAttack<'_>, seed: u64) -> Result<RunOutcome> {
    let mut alice_rng = rng_stream(seed, ALICE_STREAM);
    let bits = random_bits(cfg.n_bits, &mut alice_rng);
    let emission = dps::alice_emit(&bits, &cfg.source, &mut alice_rng)?;
    let eve_record = eve_intercept_dps(
        &emission.train,
        attack.intercept,
        &cfg.d0,
        &cfg.d1,
        &mut rng_stream(seed, EVE_STREAM),
    )?;
    let (intended, dropped) = reproducible_dps(&eve_record, attack.fsg.mode);
    let fake = build_dps_faked_train(&intended, attack.fsg, attack.thresholds)?;
    let d0 = blinded(attack.thresholds, &cfg.d0);
    let d1 = blinded(attack.thresholds, &cfg.d1);
    let record = dps::bob_measure(&fake.train, &d0, &d1, &mut rng_stream(seed, BOB_STREAM));
    let (key, statistics) = dps::sift(&emission, &record)?;
    Ok(RunOutcome {
        attack: Some(AttackLog {
            intercepted_clicks: eve_record.total_clicks() as u64,
            dropped_clicks: dropped as u64,
            reproduced_exactly: record == intended,
            warnings: fake.warnings,
        }),
        record,
        key,
        statistics,
    })
}

pub fn run_cow_honest(cfg: &CowConfig, transmittance: f64, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut alice_rng = rng_stream(seed, ALICE_STREAM);
    let bits = random_bits(cfg.n_bits, &mut alice_rng);
    let emission = cow::alice_emit(&bits, &cfg.source, cfg.decoy_prob, &mut alice_rng)?;
    let received = attenuate(&emission.train, transmittance)?;
    let record = cow::bob_measure(&received, cfg, &mut rng_stream(seed, BOB_STREAM))?;
    let (key, statistics) = cow::sift(&emission, &record, cfg.monitors)?;
    Ok(RunOutcome {
        record,
        key,
        statistics,
        attack: None,
    })
}

pub fn run_cow_attack(cfg: &CowConfig, attack: &CowAttack<'_>, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut alice_rng = rng_stream(seed, ALICE_STREAM);
    let bits = random_bits(cfg.n_bits, &mut alice_rng);
    let emission = cow::alice_emit(&bits, &cfg.source, cfg.decoy_prob, &mut alice_rng)?;
    let eve_record = eve_intercept_cow(
        &emission.train,
        attack.intercept,
        cfg,
        &mut rng_stream(seed, EVE_STREAM),
    )?;
    let mut fsg = *attack.fsg;
    if fsg.unmonitored_port.is_none() {
        fsg.unmonitored_port = cfg.monitors.unmonitored();
    }
    let (intended, dropped) = reproducible_cow(&eve_record, fsg.mode, fsg.unmonitored_port);
    let fake = build_cow_faked_train(&intended, &fsg, attack.thresholds, cfg.t_b)?;
    let bob = CowConfig {
        db: blinded(&attack.thresholds.data, &cfg.db),
        dm1: blinded(&attack.thresholds.monitor, &cfg.dm1),
        dm2: blinded(&attack.thresholds.monitor, &cfg.dm2),
        ..*cfg
    };
    let record = cow::bob_measure(&fake.train, &bob, &mut rng_stream(seed, BOB_STREAM))?;
    let (key, statistics) = cow::sift(&emission, &record, cfg.monitors)?;
    Ok(RunOutcome {
        attack: Some(AttackLog {
            intercepted_clicks: eve_record.total_clicks() as u64,
            dropped_clicks: dropped as u64,
            reproduced_exactly: record == intended,
            warnings: fake.warnings,
        }),
        record,
        key,
        statistics,
    })
}
