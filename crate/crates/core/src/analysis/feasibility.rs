//! Threshold conditions under which the detector-control attack is perfect.
//!
//! All comparisons are strict and evaluated in exact decimal arithmetic
//! (see [`super::exact`]); equality counts as violated.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::exact::{decimal, to_f64};
use crate::detectors::LinearModeConfig;
use crate::error::{Error, Result};

pub const DPS_TRIGGER: &str = "trigger_control";
pub const COW_DATA_SILENT: &str = "data_silent_under_train";
pub const COW_MONITORS_SILENT: &str = "monitors_silent_under_data";
pub const COW_MONITOR_CONTROL: &str = "monitor_control";

/// One strict inequality `lhs < rhs`, powers in µW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityEntry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// `rhs - lhs`; positive exactly when satisfied.
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FeasibilityEntry {
    fn strict(name: &str, lhs: BigRational, rhs: BigRational) -> Self {
        let margin = &rhs - &lhs;
        Self {
            name: name.to_string(),
            lhs: to_f64(&lhs),
            rhs: to_f64(&rhs),
            satisfied: lhs < rhs,
            margin: to_f64(&margin),
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub entries: Vec<FeasibilityEntry>,
    pub overall: bool,
    /// Factor 4 instead of 2 (at least two silent slots between events).
    pub relaxed_mode: bool,
}

impl FeasibilityReport {
    fn new(entries: Vec<FeasibilityEntry>, relaxed: bool) -> Self {
        Self {
            overall: entries.iter().all(|e| e.satisfied),
            entries,
            relaxed_mode: relaxed,
        }
    }

    pub fn entry(&self, name: &str) -> Option<&FeasibilityEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn split_factor(relaxed: bool) -> BigRational {
    BigRational::from_integer(if relaxed { 4 } else { 2 }.into())
}

fn check_ratio(t_b: f64) -> Result<()> {
    if t_b > 0.0 && t_b < 1.0 {
        Ok(())
    } else {
        Err(Error::parameter("t_b", t_b, "must lie in (0, 1)"))
    }
}

/// `t / (1 - t)` exactly.
fn odds(t_b: f64) -> BigRational {
    let t = decimal(t_b);
    let one = BigRational::from_integer(1.into());
    &t / (one - &t)
}

/// `P_always < f · P_never` with `f = 2`, or `f = 4` when relaxed.
pub fn check_dps_feasibility(cfg: &LinearModeConfig, relaxed: bool) -> FeasibilityReport {
    let entry = FeasibilityEntry::strict(
        DPS_TRIGGER,
        decimal(cfg.p_always),
        split_factor(relaxed) * decimal(cfg.p_never),
    );
    FeasibilityReport::new(vec![entry], relaxed)
}

/// COW conditions.
///
/// * data detector stays silent under the baseline train:
///   `t/(1-t) · P_always,M < P_never,B`
/// * monitors stay silent under a data pulse:
///   `(1-t)/t · P_always,B < f · P_never,M`
/// * the monitors themselves are controllable as in DPS:
///   `P_always,M < f · P_never,M`
///
/// With a single monitor the last two are conservative; no tighter bound is
/// asserted, the entries only carry a note.
pub fn check_cow_feasibility(
    monitor: &LinearModeConfig,
    data: &LinearModeConfig,
    t_b: f64,
    relaxed: bool,
    one_monitor: bool,
) -> Result<FeasibilityReport> {
    check_ratio(t_b)?;
    let odds = odds(t_b);
    let f = split_factor(relaxed);
    let a = FeasibilityEntry::strict(
        COW_DATA_SILENT,
        &odds * decimal(monitor.p_always),
        decimal(data.p_never),
    );
    let mut b = FeasibilityEntry::strict(
        COW_MONITORS_SILENT,
        decimal(data.p_always) / &odds,
        &f * decimal(monitor.p_never),
    );
    let mut m = FeasibilityEntry::strict(
        COW_MONITOR_CONTROL,
        decimal(monitor.p_always),
        &f * decimal(monitor.p_never),
    );
    if one_monitor {
        let note = "conservative: with one monitor, idle light can be steered to the open port";
        b.note = Some(note.into());
        m.note = Some(note.into());
    }
    Ok(FeasibilityReport::new(vec![a, b, m], relaxed))
}

/// Bounds on the data-detector thresholds implied by the monitor thresholds:
/// `P_never,B > t/(1-t) · P_always,M` and `P_always,B < f · t/(1-t) · P_never,M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataThresholdBounds {
    pub t_b: f64,
    pub min_p_never_b: f64,
    pub max_p_always_b: f64,
}

pub fn data_threshold_bounds(
    t_b: f64,
    p_never_m: f64,
    p_always_m: f64,
    relaxed: bool,
) -> Result<DataThresholdBounds> {
    check_ratio(t_b)?;
    let odds = odds(t_b);
    Ok(DataThresholdBounds {
        t_b,
        min_p_never_b: to_f64(&(&odds * decimal(p_always_m))),
        max_p_always_b: to_f64(&(split_factor(relaxed) * &odds * decimal(p_never_m))),
    })
}

/// Rows of the data-threshold table for the given splitting ratios.
pub fn table1_rows(
    t_values: &[f64],
    p_never_m: f64,
    p_always_m: f64,
) -> Result<Vec<DataThresholdBounds>> {
    LinearModeConfig::new(p_never_m, p_always_m)?;
    t_values
        .iter()
        .map(|&t| data_threshold_bounds(t, p_never_m, p_always_m, false))
        .collect()
}

/// The splitting ratios of the reference table.
pub const TABLE1_RATIOS: [f64; 4] = [0.5, 0.8, 0.9, 0.95];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lm(n: f64, a: f64) -> LinearModeConfig {
        LinearModeConfig::new(n, a).unwrap()
    }

    #[test]
    fn dps_examples() {
        let r = check_dps_feasibility(&lm(400.0, 500.0), false);
        assert!(r.overall);
        assert_eq!(r.entries[0].margin, 300.0);
        let r = check_dps_feasibility(&lm(400.0, 900.0), false);
        assert!(!r.overall);
        assert_eq!((r.entries[0].lhs, r.entries[0].rhs), (900.0, 800.0));
        let r = check_dps_feasibility(&lm(400.0, 1500.0), true);
        assert!(r.overall && r.relaxed_mode);
        let r = check_dps_feasibility(&lm(400.0, 800.0), false);
        assert!(!r.overall);
        assert_eq!(r.entries[0].margin, 0.0);
    }

    #[test]
    fn cow_worked_example_parameters() {
        let r = check_cow_feasibility(&lm(400.0, 500.0), &lm(600.0, 750.0), 0.5, false, false)
            .unwrap();
        let a = r.entry(COW_DATA_SILENT).unwrap();
        assert_eq!((a.lhs, a.rhs, a.satisfied), (500.0, 600.0, true));
        let b = r.entry(COW_MONITORS_SILENT).unwrap();
        assert_eq!((b.lhs, b.rhs, b.satisfied), (750.0, 800.0, true));
        assert!(r.overall);
    }

    #[test]
    fn cow_violations() {
        let r = check_cow_feasibility(&lm(400.0, 500.0), &lm(450.0, 750.0), 0.5, false, false)
            .unwrap();
        assert!(!r.entry(COW_DATA_SILENT).unwrap().satisfied);
        assert!(!r.overall);
        let r = check_cow_feasibility(&lm(400.0, 500.0), &lm(600.0, 800.0), 0.5, false, false)
            .unwrap();
        assert!(!r.entry(COW_MONITORS_SILENT).unwrap().satisfied);
        assert!(check_cow_feasibility(&lm(400.0, 500.0), &lm(600.0, 800.0), 1.0, false, false).is_err());
    }

    #[test]
    fn one_monitor_is_annotated() {
        let r = check_cow_feasibility(&lm(400.0, 500.0), &lm(600.0, 750.0), 0.5, false, true)
            .unwrap();
        assert!(r.entry(COW_MONITORS_SILENT).unwrap().note.is_some());
        assert!(r.entry(COW_DATA_SILENT).unwrap().note.is_none());
    }

    #[test]
    fn table_rows() {
        let rows = table1_rows(&TABLE1_RATIOS, 400.0, 500.0).unwrap();
        let got: Vec<(f64, f64)> = rows.iter().map(|r| (r.min_p_never_b, r.max_p_always_b)).collect();
        assert_eq!(
            got,
            vec![(500.0, 800.0), (2000.0, 3200.0), (4500.0, 7200.0), (9500.0, 15200.0)]
        );
        assert!(table1_rows(&[1.0], 400.0, 500.0).is_err());
        assert!(table1_rows(&[0.5], 500.0, 400.0).is_err());
    }

    #[test]
    fn t090_bounds() {
        let b = data_threshold_bounds(0.9, 400.0, 500.0, false).unwrap();
        assert_eq!((b.min_p_never_b, b.max_p_always_b), (4500.0, 7200.0));
    }

    proptest! {
        #[test]
        fn rewritten_bounds_agree(
            t in 0.01f64..0.99,
            pn_m in 1.0f64..1e4,
            ratio_m in 1.0001f64..5.0,
            pn_b in 1.0f64..1e5,
            ratio_b in 1.0001f64..5.0,
            relaxed in any::<bool>(),
        ) {
            let monitor = lm(pn_m, pn_m * ratio_m);
            let data = lm(pn_b, pn_b * ratio_b);
            let r = check_cow_feasibility(&monitor, &data, t, relaxed, false).unwrap();
            let b = data_threshold_bounds(t, monitor.p_never, monitor.p_always, relaxed).unwrap();
            // compare in exact arithmetic: the f64 bounds are rounded
            let odds = odds(t);
            let f = split_factor(relaxed);
            let a_alt = decimal(data.p_never) > &odds * decimal(monitor.p_always);
            let b_alt = decimal(data.p_always) < f * &odds * decimal(monitor.p_never);
            prop_assert_eq!(r.entry(COW_DATA_SILENT).unwrap().satisfied, a_alt);
            prop_assert_eq!(r.entry(COW_MONITORS_SILENT).unwrap().satisfied, b_alt);
            prop_assert!(b.min_p_never_b > 0.0);
        }

        #[test]
        fn verdicts_are_scale_invariant(
            t in 0.01f64..0.99,
            pn_m in 1.0f64..1e4,
            ratio_m in 1.0001f64..5.0,
            pn_b in 1.0f64..1e5,
            ratio_b in 1.0001f64..5.0,
            exp in -8i32..8,
        ) {
            // powers of two keep the scaled thresholds exact in binary
            let c = 2f64.powi(exp);
            let monitor = lm(pn_m, pn_m * ratio_m);
            let data = lm(pn_b, pn_b * ratio_b);
            let r1 = check_cow_feasibility(&monitor, &data, t, false, false).unwrap();
            let r2 = check_cow_feasibility(&monitor.scaled(c), &data.scaled(c), t, false, false).unwrap();
            for (e1, e2) in r1.entries.iter().zip(&r2.entries) {
                // skip draws within rounding distance of the boundary
                if e1.margin.abs() > 1e-9 * e1.rhs.abs() {
                    prop_assert_eq!(e1.satisfied, e2.satisfied);
                }
            }
            let d1 = check_dps_feasibility(&monitor, false);
            let d2 = check_dps_feasibility(&monitor.scaled(c), false);
            if d1.entries[0].margin.abs() > 1e-9 * d1.entries[0].rhs {
                prop_assert_eq!(d1.overall, d2.overall);
            }
        }

        #[test]
        fn margin_sign_matches_verdict(pn in 1.0f64..1e4, ratio in 1.0001f64..5.0, relaxed in any::<bool>()) {
            let r = check_dps_feasibility(&lm(pn, pn * ratio), relaxed);
            let e = &r.entries[0];
            prop_assert_eq!(e.satisfied, e.margin > 0.0);
        }
    }
}
