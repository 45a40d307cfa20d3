//! Hot-path benchmarks, labeled by execution mode so that
//!
//!   cargo bench                          # …/par
//!   cargo bench --no-default-features    # …/seq
//!
//! produce directly comparable IDs for the parallel and sequential builds.

use criterion::{criterion_group, criterion_main, Criterion};

use pspin_core::control::{feedback_policy, simulate_functional, McParams};
use pspin_core::functional::parisi_zero_t;
use pspin_core::optimizer::{minimize_zero_t, OptimizerConfig};
use pspin_core::oracle::disorder_average;
use pspin_core::pde::solve_zero_t;
use pspin_core::{MixingFunction, SpaceGrid, StepOrderParam};

const MODE: &str = if cfg!(feature = "parallel") { "par" } else { "seq" };

fn mixed_model() -> MixingFunction {
    MixingFunction::new(&[(2, 0.7), (3, 0.4), (4, 0.3)], 0.2).unwrap()
}

fn two_step_gamma() -> StepOrderParam {
    StepOrderParam::new(&[(0.0, 0.3), (0.35, 0.9), (0.7, 1.6)]).unwrap()
}

/// Full backward PDE solve: per-node slab convolutions dominate.
fn bench_pde_solve(c: &mut Criterion) {
    let m = mixed_model();
    let gamma = two_step_gamma();
    let grid = SpaceGrid { x_max: 10.0, n_x: 2049, quad_nodes: 64, sub_levels: 1 };
    c.benchmark_group("pde_solve").bench_function(MODE, |b| {
        b.iter(|| solve_zero_t(&m, &gamma, grid).unwrap().value_at_origin())
    });
}

/// Functional evaluation as the optimizer sees it: solve plus correction.
fn bench_functional(c: &mut Criterion) {
    let m = mixed_model();
    let gamma = two_step_gamma();
    let grid = SpaceGrid { x_max: 10.0, n_x: 513, quad_nodes: 32, sub_levels: 1 };
    c.benchmark_group("functional_eval").bench_function(MODE, |b| {
        b.iter(|| parisi_zero_t(&m, &gamma, grid).unwrap().value)
    });
}

/// Monte Carlo paths under the feedback control (parallel over paths).
fn bench_mc_paths(c: &mut Criterion) {
    let m = MixingFunction::sk();
    let gamma = StepOrderParam::new(&[(0.0, 1.0)]).unwrap();
    let grid = SpaceGrid { x_max: 10.0, n_x: 513, quad_nodes: 32, sub_levels: 64 };
    let sol = solve_zero_t(&m, &gamma, grid).unwrap();
    let policy = feedback_policy(&sol);
    let mc = McParams { n_paths: 8192, n_steps: 64, seed: 1 };
    let mut group = c.benchmark_group("mc_feedback_paths");
    group.sample_size(20);
    group.bench_function(MODE, |b| {
        b.iter(|| simulate_functional(&m, &sol, &policy, 0.0, 0.0, &mc).unwrap().mean)
    });
    group.finish();
}

/// Exhaustive finite-N disorder average (parallel over samples).
fn bench_oracle(c: &mut Criterion) {
    let m = MixingFunction::sk();
    let mut group = c.benchmark_group("oracle_average");
    group.sample_size(20);
    group.bench_function(MODE, |b| {
        b.iter(|| disorder_average(&m, 12, 16, None, 1).unwrap().mean_l)
    });
    group.finish();
}

/// One restart batch of the derivative-free search (parallel over restarts).
fn bench_optimizer(c: &mut Criterion) {
    let m = MixingFunction::sk();
    let grid = SpaceGrid { x_max: 8.0, n_x: 257, quad_nodes: 24, sub_levels: 1 };
    let cfg = OptimizerConfig {
        restarts: 4,
        max_iters: 60,
        ..OptimizerConfig::for_k(1)
    };
    let mut group = c.benchmark_group("optimizer_restarts");
    group.sample_size(10);
    group.bench_function(MODE, |b| {
        b.iter(|| minimize_zero_t(&m, &cfg, grid).unwrap().value.value)
    });
    group.finish();
}

criterion_group!(
    kernels,
    bench_pde_solve,
    bench_functional,
    bench_mc_paths,
    bench_oracle,
    bench_optimizer
);
criterion_main!(kernels);
