use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dprqkd::par::Execution;
use dprqkd::sweep::{run_sweep, SweepConfig};

const SWEEP: &str = r#"{
  "base": {
    "protocol": "dps", "mode": "attack", "seed": 1,
    "channel": {"transmittance": 0.1},
    "dps": {"mu": 0.2, "n_bits": 20000,
            "d0": {"mode": "geiger", "efficiency": 0.1},
            "d1": {"mode": "geiger", "efficiency": 0.1}},
    "attack": {"intercept": {"bob_prime": "mirror_bob"},
               "fsg": {"loss_target": 0.1},
               "detector": {"p_never": 400.0, "p_always": 500.0}}
  },
  "axes": [{"name": "attack.detector.p_always", "values": [450.0, 500.0, 700.0, 900.0]}],
  "replicates": 4
}"#;

fn sweep_exec(c: &mut Criterion) {
    let cfg = SweepConfig::from_json_str(SWEEP).expect("bench config");
    let mut group = c.benchmark_group("dps_attack_sweep_16_runs");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| run_sweep(&cfg, e).expect("sweep"))
        });
    }
    group.finish();
}

fn table_exec(c: &mut Criterion) {
    let cfg = SweepConfig::from_json_str(SWEEP).expect("bench config");
    let table = run_sweep(&cfg, Execution::Sequential).expect("sweep");
    c.bench_function("sweep_csv_render", |b| b.iter(|| table.to_csv().expect("csv")));
}

criterion_group!(benches, sweep_exec, table_exec);
criterion_main!(benches);
