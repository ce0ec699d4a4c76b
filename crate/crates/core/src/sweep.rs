//! Parameter sweeps over a base scenario.
//!
//! Axes name scenario fields by dotted JSON path (`cow.t_b`,
//! `attack.data.p_always`, ...). The grid is the cartesian product of the
//! axes in lexicographic order, first axis slowest; every grid point is run
//! `replicates` times.
//!
//! Seed of the run with flat index `i = point * replicates + replicate`:
//!
//! ```text
//! seed_i = master_seed ^ fmix64(i)
//! ```
//!
//! where `fmix64` is the MurmurHash3 64-bit finalizer. `fmix64(0) = 0`, so
//! the first run of a sweep uses the master seed itself.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::feasibility::{
    COW_DATA_SILENT, COW_MONITORS_SILENT, COW_MONITOR_CONTROL, DPS_TRIGGER,
};
use crate::analysis::{FeasibilityReport, Verdict};
use crate::error::{Error, Result};
use crate::par::{map_ordered, Execution};
use crate::protocols::DetectorId;
use crate::scenario::{scenario_feasibility, simulate, ResultDocument, ScenarioConfig};

/// MurmurHash3 64-bit finalizer.
pub fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

pub fn point_seed(master: u64, index: u64) -> u64 {
    master ^ fmix64(index)
}

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path of a scenario field.
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl Axis {
    pub fn points(&self) -> Vec<Value> {
        let mut out = self.values.clone();
        if let Some(r) = self.range {
            out.extend((0..r.steps).map(|i| {
                let x = if i + 1 == r.steps {
                    r.stop
                } else if i == 0 {
                    r.start
                } else {
                    r.start + (r.stop - r.start) * i as f64 / (r.steps - 1) as f64
                };
                Value::from(x)
            }));
        }
        out
    }
}

fn default_replicates() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Defaults to the seed of the base scenario.
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// When false only the feasibility columns are filled.
    #[serde(default = "yes")]
    pub simulate: bool,
    /// CSV destination; standard output when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub replicate: usize,
    pub seed: u64,
    pub params: Vec<Value>,
    pub scenario: ScenarioConfig,
    pub feasibility: Option<FeasibilityReport>,
    pub document: Option<ResultDocument>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn set_path(root: &mut Value, path: &str, value: Value, axis: usize) -> Result<()> {
    let field = format!("axes[{axis}].name");
    let mut node = root;
    for part in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(part),
            _ => None,
        }
        .ok_or_else(|| Error::config(&field, format!("`{path}` is not a scenario field")))?;
    }
    *node = value;
    Ok(())
}

fn grid(axes: &[Vec<Value>]) -> Vec<Vec<Value>> {
    axes.iter().fold(vec![Vec::new()], |acc, values| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

/// Runs every grid point and replicate; rows come back in grid order.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<SweepTable> {
    if cfg.replicates == 0 {
        return Err(Error::config("replicates", "must be >= 1"));
    }
    let mut values = Vec::with_capacity(cfg.axes.len());
    for (i, axis) in cfg.axes.iter().enumerate() {
        let v = axis.points();
        if v.is_empty() {
            return Err(Error::config(format!("axes[{i}]"), "axis has no values"));
        }
        values.push(v);
    }
    let base = serde_json::to_value(&cfg.base)?;
    let master = cfg.master_seed.unwrap_or(cfg.base.seed);

    let mut jobs = Vec::new();
    for (point, params) in grid(&values).into_iter().enumerate() {
        let mut doc = base.clone();
        for (i, (axis, v)) in cfg.axes.iter().zip(&params).enumerate() {
            set_path(&mut doc, &axis.name, v.clone(), i)?;
        }
        let scenario = ScenarioConfig::from_value(doc)?;
        for replicate in 0..cfg.replicates {
            let index = (point * cfg.replicates + replicate) as u64;
            let seed = point_seed(master, index);
            let mut s = scenario.clone();
            s.seed = seed;
            jobs.push((point, replicate, params.clone(), s));
        }
    }

    let simulate_points = cfg.simulate;
    let rows = map_ordered(jobs, exec, |(point, replicate, params, scenario)| {
        scenario.validate()?;
        let feasibility = scenario_feasibility(&scenario)?;
        let document = if simulate_points {
            Some(simulate(&scenario)?)
        } else {
            None
        };
        Ok(SweepRow {
            point,
            replicate,
            seed: scenario.seed,
            params,
            scenario,
            feasibility,
            document,
        })
    });
    Ok(SweepTable {
        axes: cfg.axes.iter().map(|a| a.name.clone()).collect(),
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Formats a power in µW with at most 6 significant digits.
pub fn power6(x: f64) -> String {
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn param_cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => power6(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

const MARGINS: [&str; 4] = [
    DPS_TRIGGER,
    COW_DATA_SILENT,
    COW_MONITORS_SILENT,
    COW_MONITOR_CONTROL,
];

const RATES: [DetectorId; 5] = DetectorId::ALL;

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["point", "replicate", "seed"].map(String::from).to_vec();
        h.extend(self.axes.iter().cloned());
        h.extend(["protocol", "mode", "feasible"].map(String::from));
        h.extend(MARGINS.iter().map(|m| format!("margin_{m}")));
        h.extend(["slots", "raw_detection_rate", "double_click_rate"].map(String::from));
        h.extend(RATES.iter().map(|id| format!("rate_{id}")));
        h.extend(["sifted_len", "qber", "visibility", "max_abs_z", "verdict"].map(String::from));
        h
    }

    fn cells(row: &SweepRow) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut c = vec![
            row.point.to_string(),
            row.replicate.to_string(),
            row.seed.to_string(),
        ];
        c.extend(row.params.iter().map(param_cell));
        c.push(enum_name(&row.scenario.protocol));
        c.push(enum_name(&row.scenario.mode));
        c.push(opt(row.feasibility.as_ref().map(|f| f.overall.to_string())));
        for m in MARGINS {
            let e = row.feasibility.as_ref().and_then(|f| f.entry(m));
            c.push(opt(e.map(|e| power6(e.margin))));
        }
        let stats = row.document.as_ref().map(|d| &d.statistics);
        c.push(opt(stats.map(|s| s.slots.to_string())));
        c.push(opt(stats.map(|s| s.raw_detection_rate.to_string())));
        c.push(opt(stats.map(|s| s.double_click_rate.to_string())));
        for id in RATES {
            c.push(opt(stats.and_then(|s| s.detector_rates.get(&id)).map(f64::to_string)));
        }
        c.push(opt(stats.map(|s| s.sifted_len.to_string())));
        c.push(opt(stats.and_then(|s| s.qber).map(|q| q.to_string())));
        c.push(opt(stats
            .and_then(|s| s.visibility.and_then(|v| v.value))
            .map(|v| v.to_string())));
        let div = row.document.as_ref().and_then(|d| d.divergence.as_ref());
        c.push(opt(div.map(|d| d.max_abs_z.to_string())));
        c.push(opt(div.map(|d| match d.verdict {
            Verdict::Flagged => "flagged".to_string(),
            Verdict::Indistinguishable => "indistinguishable".to_string(),
        })));
        c
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Usage(format!("csv: {e}"));
        w.write_record(self.header()).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(Self::cells(row)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Usage(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmix64_reference_values() {
        assert_eq!(fmix64(0), 0);
        // MurmurHash3 fmix64(1)
        assert_eq!(fmix64(1), 0xb456_bcfc_34c2_cb2c);
        assert_eq!(point_seed(42, 0), 42);
    }

    #[test]
    fn power_formatting() {
        assert_eq!(power6(800.0), "800");
        assert_eq!(power6(15200.0), "15200");
        assert_eq!(power6(618.686_217_847_897_3), "618.686");
        assert_eq!(power6(-0.000_123_456_789), "-0.000123457");
        assert_eq!(power6(0.0), "0");
    }

    #[test]
    fn ranges_hit_both_ends() {
        let a = Axis {
            name: "x".into(),
            values: vec![],
            range: Some(Range {
                start: 0.1,
                stop: 0.7,
                steps: 4,
            }),
        };
        let p = a.points();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], Value::from(0.1));
        assert_eq!(p[3], Value::from(0.7));
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = grid(&[
            vec![Value::from(1), Value::from(2)],
            vec![Value::from("a"), Value::from("b")],
        ]);
        let flat: Vec<String> = g.iter().map(|p| format!("{}{}", p[0], p[1])).collect();
        assert_eq!(flat, ["1\"a\"", "1\"b\"", "2\"a\"", "2\"b\""]);
    }

    #[test]
    fn unknown_axis_is_rejected() {
        let mut v = serde_json::json!({"cow": {"t_b": 0.5}});
        assert!(set_path(&mut v, "cow.t_b", Value::from(0.8), 0).is_ok());
        match set_path(&mut v, "cow.tb", Value::from(0.8), 1) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "axes[1].name"),
            other => panic!("{other:?}"),
        }
    }
}
