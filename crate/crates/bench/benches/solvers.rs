//! Benchmarks for the hot paths of a weighted sum-rate solve: the three
//! per-topology feasibility probes, the exhaustive grid oracle, and a full
//! small polyblock run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wsr_bench::{miso_instance, simo_instance, siso_instance, uniform_rate_targets, USERS};
use wsr_core::feasibility::{miso, simo, siso};
use wsr_core::oracles::grid_wsr_siso;
use wsr_core::polyblock::{self, PolyblockConfig};
use wsr_core::{fixtures, Channel, RateRegionOracle};

fn feasibility_probes(c: &mut Criterion) {
    let mut group = c.benchmark_group("feasibility");
    let targets = uniform_rate_targets(USERS, 0.8);

    let siso_ch = siso_instance(101);
    group.bench_function("siso_fixed_point", |b| {
        b.iter(|| siso::check_feasible(black_box(&siso_ch), black_box(&targets)))
    });

    let simo_ch = simo_instance(102);
    group.bench_function("simo_balance", |b| {
        b.iter(|| {
            simo::check_feasible(
                black_box(&simo_ch),
                black_box(&targets),
                simo::DEFAULT_TOL,
                simo::DEFAULT_MAX_ITERS,
            )
            .expect("balancing succeeds on the benchmark draw")
        })
    });

    let miso_ch = miso_instance(103);
    group.bench_function("miso_socp", |b| {
        b.iter(|| {
            miso::check_feasible(black_box(&miso_ch), black_box(&targets))
                .expect("the cone solve succeeds on the benchmark draw")
        })
    });
    group.finish();
}

fn grid_oracle(c: &mut Criterion) {
    let ch = match fixtures::three_user() {
        Channel::Siso(ch) => ch,
        _ => unreachable!("the bundled three-user matrix is scalar"),
    };
    c.bench_function("grid_oracle_three_user_21pts", |b| {
        b.iter(|| grid_wsr_siso(black_box(&ch), 21, None).expect("grid fits under the cap"))
    });
}

fn polyblock_small(c: &mut Criterion) {
    let ch = fixtures::three_user();
    let cfg = PolyblockConfig { epsilon: 0.2, eta: 0.5, ..PolyblockConfig::default() };
    c.bench_function("polyblock_three_user_eps02", |b| {
        b.iter(|| {
            let oracle = RateRegionOracle::for_channel(black_box(&ch), None, 1e-4)
                .expect("the unconstrained oracle builds");
            polyblock::solve(
                &oracle,
                ch.weights(),
                &oracle.initial_vertex(),
                &oracle.origin(),
                &cfg,
            )
            .expect("the solve completes")
        })
    });
}

criterion_group!(benches, feasibility_probes, grid_oracle, polyblock_small);
criterion_main!(benches);
