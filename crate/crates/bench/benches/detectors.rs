use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ising_mimo::baselines::{fcsd, sphere_decode, zero_forcing};
use ising_mimo::ising::DenseIsing;
use ising_mimo::pmis::{metropolis_sweep, pmis_run, Replica, SolverParams};
use ising_mimo::rng::rng_from_seed;
use ising_mimo::two_round::two_round_detect;
use ising_mimo::{Constellation, SpinConfig};
use ising_mimo_bench::fixture;

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("metropolis_sweep");
    for n_users in [8, 16, 32] {
        let (_, model) = fixture(n_users, n_users, Constellation::Qam16, 20.0);
        let kernel = DenseIsing::from_model(&model);
        let mut rng = rng_from_seed(1);
        let mut replica = Replica::new(&kernel, SpinConfig::random(model.n_vars(), &mut rng));
        group.bench_with_input(BenchmarkId::from_parameter(model.n_vars()), &kernel, |b, k| {
            b.iter(|| metropolis_sweep(k, &mut replica, black_box(20.0), &mut rng))
        });
    }
    group.finish();
}

fn pmis(c: &mut Criterion) {
    let mut group = c.benchmark_group("pmis_run");
    for (n, con) in [
        (16, Constellation::Bpsk),
        (12, Constellation::Qam16),
        (20, Constellation::Qam16),
    ] {
        let (_, model) = fixture(n, n, con, 20.0);
        let mut seed = 0;
        group.bench_function(format!("{n}x{n}-{con}"), |b| {
            b.iter(|| {
                seed += 1;
                pmis_run(
                    &model,
                    &SolverParams {
                        seed,
                        ..Default::default()
                    },
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn two_round(c: &mut Criterion) {
    let (_, model) = fixture(12, 12, Constellation::Qam16, 20.0);
    c.bench_function("two_round/12x12-16qam-32runs", |b| {
        b.iter(|| two_round_detect(&model, &SolverParams::default(), 32, 0.97).unwrap())
    });
}

fn baselines(c: &mut Criterion) {
    let mut group = c.benchmark_group("baselines");
    let (inst, _) = fixture(8, 8, Constellation::Qam16, 20.0);
    group.bench_function("sd/8x8-16qam", |b| b.iter(|| sphere_decode(black_box(&inst)).unwrap()));
    group.bench_function("fcsd1/8x8-16qam", |b| b.iter(|| fcsd(black_box(&inst), 1).unwrap()));
    group.bench_function("zf/8x8-16qam", |b| b.iter(|| zero_forcing(black_box(&inst)).unwrap()));
    group.finish();
}

criterion_group!(benches, sweep, pmis, two_round, baselines);
criterion_main!(benches);
