use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ergodic_smpc::conditions::{estimate_lipschitz, DomainBox};
use ergodic_smpc::ergodics::{build_histogram, ks_distance, BinRange};
use ergodic_smpc::ifs::{bernoulli_ifs, simulate, StateVector};
use ergodic_smpc::rng::RandomSource;
use ergodic_smpc::smpc::{generate_problem, project_simplex, smpc_closed_loop_ifs, GenerationSpec};

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_simplex");
    for n in [3usize, 16, 256] {
        let mut rng = RandomSource::new(1, 0);
        let v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| b.iter(|| project_simplex(black_box(v))));
    }
    group.finish();
}

fn saa_step(c: &mut Criterion) {
    let problem = generate_problem(&GenerationSpec::default(), 0).unwrap();
    let controller = problem.controller().unwrap();
    let x = StateVector::new(vec![0.5, -0.2, 0.1, 0.3]).unwrap();
    let mut group = c.benchmark_group("saa_control");
    for j in [10usize, 100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(j), &j, |b, &j| {
            let mut rng = RandomSource::new(2, 0);
            b.iter(|| controller.saa(black_box(&x), j, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn closed_loop(c: &mut Criterion) {
    let problem = generate_problem(&GenerationSpec::default(), 0).unwrap();
    let ifs = smpc_closed_loop_ifs(&problem, 100).unwrap();
    let x0 = StateVector::zeros(4).unwrap();
    c.bench_function("closed_loop_1000_steps", |b| b.iter(|| simulate(&ifs, &x0, 1000, 3).unwrap()));
}

fn diagnostics(c: &mut Criterion) {
    let traj = simulate(&bernoulli_ifs(), &StateVector::scalar(0.0).unwrap(), 100_000, 4).unwrap();
    let xs = traj.coordinate(0, 0..50_000);
    let ys = traj.coordinate(0, 50_000..100_000);
    c.bench_function("histogram_1e5", |b| b.iter(|| build_histogram(&traj, 10, &BinRange::Auto).unwrap()));
    c.bench_function("ks_5e4", |b| b.iter(|| ks_distance(&xs, &ys).unwrap()));
}

fn lipschitz(c: &mut Criterion) {
    let domain = DomainBox::cube(4, -1.0, 1.0).unwrap();
    let problem = generate_problem(&GenerationSpec::default(), 0).unwrap();
    let a = problem.a().clone();
    c.bench_function("estimate_lipschitz_1e4", |b| {
        b.iter(|| estimate_lipschitz(|x| &a * x.vector(), &domain, 10_000, 5).unwrap())
    });
}

criterion_group!(benches, simplex, saa_step, closed_loop, diagnostics, lipschitz);
criterion_main!(benches);
