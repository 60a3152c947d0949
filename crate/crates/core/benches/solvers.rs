use std::hint::black_box;

use covact::parallel::{map_trials, Execution};
use covact::rng::trial_seed;
use covact::scenario::{draw_truth, synthesize_observations, Scenario, ScenarioConfig};
use covact::solvers::{solve, Algorithm, SolverConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn config(n: usize, l: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        devices_per_cell: n,
        active_per_cell: n / 10,
        signature_len: l,
        antennas: 64,
        seed,
        ..Default::default()
    }
}

fn run_trial(alg: Algorithm, n: usize, l: usize, seed: u64) -> f64 {
    let cfg = config(n, l, seed);
    let scn = Scenario::generate(&cfg).unwrap().normalized();
    let truth = draw_truth(&cfg).unwrap();
    let obs = synthesize_observations(&scn, &truth, cfg.antennas);
    let solver = SolverConfig { seed, track_objective: false, ..Default::default() };
    solve(alg, &scn, &obs.sample_covs, &solver).unwrap().report.final_residual
}

fn algorithms(c: &mut Criterion) {
    let mut group = c.benchmark_group("algorithm");
    group.sample_size(10);
    let cfg = config(100, 15, 7);
    let scn = Scenario::generate(&cfg).unwrap().normalized();
    let truth = draw_truth(&cfg).unwrap();
    let obs = synthesize_observations(&scn, &truth, cfg.antennas);
    for alg in Algorithm::ALL {
        group.bench_function(BenchmarkId::new(alg.name(), "N100_L15"), |b| {
            let solver = SolverConfig { track_objective: false, ..Default::default() };
            b.iter(|| black_box(solve(alg, &scn, &obs.sample_covs, &solver).unwrap()));
        });
    }
    group.finish();
}

fn trial_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial_map");
    group.sample_size(10);
    let trials = 8;
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(BenchmarkId::new(label, trials), |b| {
            b.iter(|| {
                black_box(map_trials(trials, exec, |t| {
                    run_trial(Algorithm::ActiveSetCd, 50, 15, trial_seed(11, t as u64))
                }))
            });
        });
    }
    group.finish();
}

criterion_group!(benches, algorithms, trial_map);
criterion_main!(benches);
