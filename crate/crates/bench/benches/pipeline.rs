//! Hot-path benchmarks: operator applications and full BPDN solves at the
//! desk-scale geometry (n = 128, m = 43).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use csradar_bench::{desk_scale_simulator, received};
use csradar_core::nbi::two_stage_recover_on;
use csradar_core::solver::{solve_bpdn_with, BpdnProblem};

fn operator_benches(c: &mut Criterion) {
    let sim = desk_scale_simulator();
    let out = received(&sim);
    let op = sim.joint_operator();
    let observation = out.observations[0].clone();
    let coefficients = op.adjoint(&observation).unwrap();

    c.bench_function("joint_forward_n128_m43", |b| {
        b.iter(|| op.forward(black_box(&coefficients)).unwrap())
    });
    c.bench_function("joint_adjoint_n128_m43", |b| {
        b.iter(|| op.adjoint(black_box(&observation)).unwrap())
    });
}

fn solver_benches(c: &mut Criterion) {
    let sim = desk_scale_simulator();
    let out = received(&sim);
    let epsilons = sim.epsilons(out.sigma2).unwrap();
    let observation = out.observations[0].clone();

    sim.joint_operator().gram_spectrum();
    sim.channel_operator().gram_spectrum();

    let mut group = c.benchmark_group("solve");
    group.sample_size(20);
    group.bench_function("bpdn_joint_n128_m43", |b| {
        let problem =
            BpdnProblem::new(sim.joint_operator(), observation.clone(), epsilons.prime[0]).unwrap();
        b.iter(|| solve_bpdn_with(black_box(&problem), sim.options()).unwrap())
    });
    group.bench_function("two_stage_n128_m43", |b| {
        b.iter(|| {
            two_stage_recover_on(
                sim.joint_operator(),
                sim.channel_operator(),
                black_box(&observation),
                epsilons.prime[0],
                epsilons.double_prime[0],
                sim.options(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, operator_benches, solver_benches);
criterion_main!(benches);
