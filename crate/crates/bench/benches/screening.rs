use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dfscreen::linalg::build_decorrelator;
use dfscreen::screening::TransformedProblem;
use dfscreen::simgen::{gen_ar1, gen_response};
use dfscreen::{df_path, fr_path, transform_response, DMatrix, DVector, LinkSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = gen_ar1(n, p, 0.5, &mut rng).unwrap();
    let mut beta = DVector::zeros(p);
    beta[0] = 1.0;
    beta[1] = -1.0;
    beta[2] = 0.8;
    let y = gen_response(&x, &beta, LinkSpec::Identity, &mut rng).unwrap();
    (x, y)
}

fn decorrelator(c: &mut Criterion) {
    let mut group = c.benchmark_group("decorrelator");
    for &(n, p) in &[(100, 500), (200, 500), (200, 1000)] {
        let (x, _) = instance(n, p);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{p}")), &x, |b, x| {
            b.iter(|| build_decorrelator(x, 1.0).unwrap())
        });
    }
    group.finish();
}

fn forward_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("path_50_steps");
    let (x, y) = instance(200, 1000);
    let response = transform_response(&y, LinkSpec::Identity).unwrap();
    let problem = TransformedProblem::decorrelate(&x, &response, 1.0).unwrap();
    group.bench_function("df_incremental", |b| b.iter(|| df_path(&problem, 50).unwrap()));
    group.bench_function("fr_cholesky", |b| b.iter(|| fr_path(&x, &y, 50).unwrap()));
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = decorrelator, forward_path
}
criterion_main!(benches);
