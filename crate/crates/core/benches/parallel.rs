use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lasso_augment::datagen::generate;
use lasso_augment::importance::{log_weights_with, TrialSpec};
use lasso_augment::samplers::direct_sample_with;
use lasso_augment::{build_problem, spectral_decompose, ErrorModel, Execution};

fn modes() -> [(&'static str, Execution); 2] {
    [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)]
}

fn direct_sampler(c: &mut Criterion) {
    let data = generate(50, 10, 0.25, 1.0, 1).unwrap();
    let spec = build_problem(data.x, vec![1.0; 10], 0.2).unwrap();
    let model = ErrorModel::gaussian(1.0);
    let mut group = c.benchmark_group("direct_sample_2000");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| direct_sample_with(exec, &spec, &data.beta0, &model, 2000, 3).unwrap())
        });
    }
    group.finish();
}

fn is_weights(c: &mut Criterion) {
    let data = generate(20, 60, 0.25, 1.0, 2).unwrap();
    let spec = build_problem(data.x, vec![1.0; 60], 0.3).unwrap();
    let basis = spectral_decompose(&spec).unwrap();
    let trial = TrialSpec { sigma2_dagger: 5.0, lambda_dagger: 0.4, m_dagger: 5.0, l_pilot: 100 };
    let beta0 = vec![0.0; 60];
    let ts = spec.with_lambda(trial.lambda_dagger).unwrap();
    let states = direct_sample_with(Execution::default(), &ts, &beta0, &ErrorModel::gaussian(5.0), 5000, 4)
        .unwrap()
        .states;
    let mut group = c.benchmark_group("is_weights_5000");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| log_weights_with(exec, &states, &spec, Some(&basis), 1.0, 0.3, &trial, &beta0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, direct_sampler, is_weights);
criterion_main!(benches);
