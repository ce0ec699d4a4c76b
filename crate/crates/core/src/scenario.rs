//! Declarative scenarios: one JSON document fully describes a run.
//!
//! A scenario names the protocol, the mode (honest or attack), a 64-bit seed,
//! the channel, the protocol configuration and, in attack mode, Eve's
//! intercept and faked-state settings together with the blinded thresholds.
//! [`simulate`] turns it into a [`ResultDocument`]; the same scenario always
//! yields a byte-identical document.
//!
//! In attack mode the document also carries an honest baseline run on seed
//! `seed ^ HONEST_BASELINE_SEED_XOR` and the comparison between the two.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_cow_feasibility, check_dps_feasibility, compare_statistics, DivergenceReport,
    FeasibilityReport, DEFAULT_Z_STAR,
};
use crate::attack::{CowThresholds, FsgConfig, InterceptConfig};
use crate::detectors::LinearModeConfig;
use crate::error::{Error, Result};
use crate::protocols::cow::CowConfig;
use crate::protocols::dps::DpsConfig;
use crate::protocols::{DetectionRecord, RunStatistics};
use crate::sim::{
    run_cow_attack, run_cow_honest, run_dps_attack, run_dps_honest, AttackLog, CowAttack,
    DpsAttack, RunOutcome, HONEST_BASELINE_SEED_XOR,
};

/// Version of the result document layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Dps,
    Cow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Honest,
    Attack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    /// Alice-to-Bob power transmittance.
    #[serde(default = "one")]
    pub transmittance: f64,
}

impl Default for Channel {
    fn default() -> Self {
        Self { transmittance: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn default_z_star() -> f64 {
    DEFAULT_Z_STAR
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub intercept: InterceptConfig,
    #[serde(default)]
    pub fsg: FsgConfig,
    /// Use the relaxed factor 4 in the feasibility report.
    #[serde(default)]
    pub relaxed: bool,
    /// DPS: blinded thresholds of D0 and D1.
    #[serde(default)]
    pub detector: Option<LinearModeConfig>,
    /// COW: blinded thresholds of DM1 and DM2.
    #[serde(default)]
    pub monitor: Option<LinearModeConfig>,
    /// COW: blinded thresholds of DB.
    #[serde(default)]
    pub data: Option<LinearModeConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Where the result document is written; standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub include_record: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub protocol: Protocol,
    pub mode: RunMode,
    pub seed: u64,
    #[serde(default)]
    pub channel: Channel,
    #[serde(default)]
    pub dps: Option<DpsConfig>,
    #[serde(default)]
    pub cow: Option<CowConfig>,
    #[serde(default)]
    pub attack: Option<AttackConfig>,
    #[serde(default = "default_z_star")]
    pub z_star: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<RunMode>,
    pub n_bits: Option<usize>,
    pub mu: Option<f64>,
    pub transmittance: Option<f64>,
    pub out: Option<PathBuf>,
    pub include_record: bool,
}

/// Tags a validation failure with the config path it came from.
fn at(path: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Parameter { name, .. } => Error::config(format!("{path}.{name}"), e.to_string()),
        other => Error::config(path, other.to_string()),
    })
}

fn require<'a, T>(v: &'a Option<T>, path: &str, why: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::config(path, why))
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(mode) = o.mode {
            self.mode = mode;
        }
        if let Some(t) = o.transmittance {
            self.channel.transmittance = t;
        }
        if let Some(d) = self.dps.as_mut() {
            if let Some(n) = o.n_bits {
                d.n_bits = n;
            }
            if let Some(mu) = o.mu {
                d.source.mu = mu;
            }
        }
        if let Some(c) = self.cow.as_mut() {
            if let Some(n) = o.n_bits {
                c.n_bits = n;
            }
            if let Some(mu) = o.mu {
                c.source.mu = mu;
            }
        }
        if let Some(out) = &o.out {
            self.output.path = Some(out.clone());
        }
        if o.include_record {
            self.output.include_record = true;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.channel.transmittance;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::config("channel.transmittance", format!("{t} must lie in [0, 1]")));
        }
        if !(self.z_star.is_finite() && self.z_star > 0.0) {
            return Err(Error::config("z_star", format!("{} must be > 0", self.z_star)));
        }
        match self.protocol {
            Protocol::Dps => {
                let d = require(&self.dps, "dps", "required for protocol dps")?;
                at("dps", d.source.validate())?;
                if d.n_bits == 0 {
                    return Err(Error::config("dps.n_bits", "must be >= 1"));
                }
                at("dps.d0", d.d0.validate())?;
                at("dps.d1", d.d1.validate())?;
            }
            Protocol::Cow => {
                let c = require(&self.cow, "cow", "required for protocol cow")?;
                if c.n_bits == 0 {
                    return Err(Error::config("cow.n_bits", "must be >= 1"));
                }
                at("cow.db", c.db.validate())?;
                at("cow.dm1", c.dm1.validate())?;
                at("cow.dm2", c.dm2.validate())?;
                at("cow", c.validate())?;
            }
        }
        if self.mode == RunMode::Attack {
            let a = require(&self.attack, "attack", "required in attack mode")?;
            at("attack.intercept", a.intercept.validate())?;
            at("attack.fsg", a.fsg.validate())?;
            match self.protocol {
                Protocol::Dps => {
                    let th = require(&a.detector, "attack.detector", "required for protocol dps")?;
                    at("attack.detector", th.validate())?;
                }
                Protocol::Cow => {
                    let m = require(&a.monitor, "attack.monitor", "required for protocol cow")?;
                    at("attack.monitor", m.validate())?;
                    let d = require(&a.data, "attack.data", "required for protocol cow")?;
                    at("attack.data", d.validate())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HonestBaseline {
    pub seed: u64,
    pub statistics: RunStatistics,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub generator: String,
    pub scenario: ScenarioConfig,
    pub statistics: RunStatistics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honest_baseline: Option<HonestBaseline>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_log: Option<AttackLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<DetectionRecord>,
}

impl ResultDocument {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn generator() -> String {
    concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string()
}

/// Feasibility report for the thresholds of an attack scenario.
pub fn scenario_feasibility(cfg: &ScenarioConfig) -> Result<Option<FeasibilityReport>> {
    let Some(a) = cfg.attack.as_ref() else {
        return Ok(None);
    };
    let report = match cfg.protocol {
        Protocol::Dps => a.detector.map(|th| check_dps_feasibility(&th, a.relaxed)),
        Protocol::Cow => match (a.monitor, a.data, cfg.cow.as_ref()) {
            (Some(m), Some(d), Some(c)) => Some(check_cow_feasibility(
                &m,
                &d,
                c.t_b,
                a.relaxed,
                c.monitors.one_monitor(),
            )?),
            _ => None,
        },
    };
    Ok(report)
}

fn run_honest(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutcome> {
    let t = cfg.channel.transmittance;
    match cfg.protocol {
        Protocol::Dps => run_dps_honest(require(&cfg.dps, "dps", "missing")?, t, seed),
        Protocol::Cow => run_cow_honest(require(&cfg.cow, "cow", "missing")?, t, seed),
    }
}

fn run_attack(cfg: &ScenarioConfig, a: &AttackConfig) -> Result<RunOutcome> {
    match cfg.protocol {
        Protocol::Dps => {
            let attack = DpsAttack {
                intercept: &a.intercept,
                fsg: &a.fsg,
                thresholds: require(&a.detector, "attack.detector", "missing")?,
            };
            run_dps_attack(require(&cfg.dps, "dps", "missing")?, &attack, cfg.seed)
        }
        Protocol::Cow => {
            let thresholds = CowThresholds {
                monitor: *require(&a.monitor, "attack.monitor", "missing")?,
                data: *require(&a.data, "attack.data", "missing")?,
            };
            let attack = CowAttack {
                intercept: &a.intercept,
                fsg: &a.fsg,
                thresholds: &thresholds,
            };
            run_cow_attack(require(&cfg.cow, "cow", "missing")?, &attack, cfg.seed)
        }
    }
}

/// Runs a scenario. Single-threaded and deterministic.
pub fn simulate(cfg: &ScenarioConfig) -> Result<ResultDocument> {
    cfg.validate()?;
    let mut doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        generator: generator(),
        scenario: cfg.clone(),
        statistics: RunStatistics::default(),
        feasibility: None,
        divergence: None,
        honest_baseline: None,
        attack_log: None,
        record: None,
    };
    let outcome = match cfg.mode {
        RunMode::Honest => run_honest(cfg, cfg.seed)?,
        RunMode::Attack => {
            let a = require(&cfg.attack, "attack", "required in attack mode")?;
            let attacked = run_attack(cfg, a)?;
            let baseline_seed = cfg.seed ^ HONEST_BASELINE_SEED_XOR;
            let honest = run_honest(cfg, baseline_seed)?;
            doc.feasibility = scenario_feasibility(cfg)?;
            doc.divergence = Some(compare_statistics(
                &honest.statistics,
                &attacked.statistics,
                cfg.z_star,
            )?);
            doc.honest_baseline = Some(HonestBaseline {
                seed: baseline_seed,
                statistics: honest.statistics,
            });
            attacked
        }
    };
    doc.attack_log = outcome.attack;
    doc.statistics = outcome.statistics;
    if cfg.output.include_record {
        doc.record = Some(outcome.record);
    }
    Ok(doc)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DPS_HONEST: &str = r#"{
        "protocol": "dps", "mode": "honest", "seed": 7,
        "channel": {"transmittance": 0.5},
        "dps": {"mu": 0.2, "n_bits": 2000,
                "d0": {"mode": "geiger", "efficiency": 0.1},
                "d1": {"mode": "geiger", "efficiency": 0.1}}
    }"#;

    #[test]
    fn parses_and_runs() {
        let cfg = ScenarioConfig::from_json_str(DPS_HONEST).unwrap();
        let doc = simulate(&cfg).unwrap();
        assert_eq!(doc.statistics.qber.unwrap_or(0.0), 0.0);
        assert!(doc.divergence.is_none());
        assert_eq!(doc.to_json().unwrap(), simulate(&cfg).unwrap().to_json().unwrap());
    }

    #[test]
    fn parse_errors_carry_the_field_path() {
        let bad = DPS_HONEST.replace("\"mu\": 0.2", "\"mu\": \"x\"");
        match ScenarioConfig::from_json_str(&bad) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("dps"), "{path}"),
            other => panic!("{other:?}"),
        }
        let bad = DPS_HONEST.replace("\"seed\": 7", "\"seeed\": 7");
        assert!(matches!(ScenarioConfig::from_json_str(&bad), Err(Error::Config { .. })));
    }

    #[test]
    fn validation_errors_carry_the_field_path() {
        let mut cfg = ScenarioConfig::from_json_str(DPS_HONEST).unwrap();
        cfg.dps.as_mut().unwrap().source.mu = -1.0;
        match cfg.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "dps.mu"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ScenarioConfig::from_json_str(DPS_HONEST).unwrap();
        cfg.mode = RunMode::Attack;
        match cfg.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "attack"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ScenarioConfig::from_json_str(DPS_HONEST).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            n_bits: Some(10),
            transmittance: Some(0.25),
            include_record: true,
            ..Overrides::default()
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dps.unwrap().n_bits, 10);
        assert_eq!(cfg.channel.transmittance, 0.25);
        assert!(cfg.output.include_record);
    }
}
