use dprqkd::analysis::{table1_rows, TABLE1_RATIOS};
use dprqkd::par::Execution;
use dprqkd::scenario::simulate;
use dprqkd::sweep::{fmix64, point_seed, run_sweep, SweepConfig};
use dprqkd::Error;

const T_B: &str = include_str!("../../../docs/examples/sweep_t_b.json");
const P_ALWAYS_B: &str = include_str!("../../../docs/examples/sweep_p_always_b.json");

fn reduced(text: &str, n_bits: usize) -> SweepConfig {
    let mut cfg = SweepConfig::from_json_str(text).unwrap();
    if let Some(c) = cfg.base.cow.as_mut() {
        c.n_bits = n_bits;
    }
    if let Some(d) = cfg.base.dps.as_mut() {
        d.n_bits = n_bits;
    }
    cfg
}

#[test]
fn seed_rule_is_fixed() {
    assert_eq!(fmix64(0), 0);
    assert_eq!(fmix64(1), 0xb456_bcfc_34c2_cb2c);
    assert_eq!(point_seed(42, 0), 42);
    assert_eq!(point_seed(42, 1), 42 ^ 0xb456_bcfc_34c2_cb2c);
}

#[test]
fn parallel_and_sequential_tables_agree() {
    let mut cfg = reduced(P_ALWAYS_B, 400);
    cfg.replicates = 2;
    let par = run_sweep(&cfg, Execution::Parallel).unwrap();
    let seq = run_sweep(&cfg, Execution::Sequential).unwrap();
    assert_eq!(par.to_csv().unwrap(), seq.to_csv().unwrap());
    assert_eq!(par.rows.len(), 8 * 2);
    for (i, row) in par.rows.iter().enumerate() {
        assert_eq!((row.point, row.replicate), (i / 2, i % 2));
        assert_eq!(row.seed, point_seed(cfg.base.seed, i as u64));
    }
}

#[test]
fn single_point_sweep_matches_simulate() {
    let mut cfg = reduced(P_ALWAYS_B, 600);
    cfg.axes.clear();
    cfg.replicates = 1;
    let table = run_sweep(&cfg, Execution::Sequential).unwrap();
    assert_eq!(table.rows.len(), 1);
    let direct = simulate(&cfg.base).unwrap().to_json().unwrap();
    assert_eq!(table.rows[0].document.as_ref().unwrap().to_json().unwrap(), direct);
}

#[test]
fn t_b_sweep_reproduces_the_bound_table() {
    let cfg = reduced(T_B, 100);
    let table = run_sweep(&cfg, Execution::Parallel).unwrap();
    let expected = table1_rows(&TABLE1_RATIOS, 400.0, 500.0).unwrap();
    for row in &table.rows {
        let report = row.feasibility.as_ref().unwrap();
        let bounds = &expected[row.point];
        assert_eq!(row.params[0].as_f64().unwrap(), bounds.t_b);
        let a = report.entry("data_silent_under_train").unwrap();
        assert_eq!(a.lhs, bounds.min_p_never_b);
        assert_eq!(a.satisfied, 600.0 > bounds.min_p_never_b);
        let b = report.entry("monitors_silent_under_data").unwrap();
        assert_eq!(b.rhs, 800.0);
        assert_eq!(b.satisfied, 750.0 < bounds.max_p_always_b);
        assert!(row.document.is_none());
    }
    let csv = table.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + table.rows.len());
}

#[test]
fn infeasible_data_threshold_is_reported() {
    let mut cfg = reduced(T_B, 100);
    cfg.axes.clear();
    cfg.base.attack.as_mut().unwrap().data =
        Some(dprqkd::detectors::LinearModeConfig::new(600.0, 900.0).unwrap());
    let table = run_sweep(&cfg, Execution::Sequential).unwrap();
    let report = table.rows[0].feasibility.as_ref().unwrap();
    assert!(!report.overall);
    let b = report.entry("monitors_silent_under_data").unwrap();
    assert!(!b.satisfied);
    assert_eq!((b.lhs, b.rhs), (900.0, 800.0));
}

#[test]
fn bad_axes_are_config_errors() {
    let mut cfg = reduced(T_B, 100);
    cfg.axes[0].name = "cow.no_such_field".into();
    match run_sweep(&cfg, Execution::Sequential) {
        Err(e @ Error::Config { .. }) => assert!(e.is_usage()),
        other => panic!("expected config error, got {other:?}"),
    }

    let mut cfg = reduced(T_B, 100);
    cfg.axes[0].values.clear();
    match run_sweep(&cfg, Execution::Sequential) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "axes[0]"),
        other => panic!("expected config error, got {other:?}"),
    }

    let mut cfg = reduced(T_B, 100);
    cfg.replicates = 0;
    assert!(matches!(run_sweep(&cfg, Execution::Sequential), Err(Error::Config { .. })));
}
