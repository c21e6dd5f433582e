use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use invlab::exec::{set_mode, Mode};
use invlab::limits::expected_error_ball;
use invlab::linalg::{Matrix, NormKind};
use invlab::lipschitz::falsification_suite;
use invlab::mlp::reference_model;
use invlab::region_analysis::sample_patterns;
use invlab::regions::{preset, sample_dataset};

const MODES: [(Mode, &str); 2] = [(Mode::Sequential, "sequential"), (Mode::Parallel, "parallel")];

fn patterns(c: &mut Criterion) {
    let model = reference_model();
    let region = preset("2x2-first").unwrap();
    let mut g = c.benchmark_group("sample_patterns_200k");
    for (mode, name) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_mode(mode);
            b.iter(|| sample_patterns(&model, &region, 200_000, 1).unwrap())
        });
    }
    g.finish();
}

fn ball(c: &mut Criterion) {
    let model = reference_model();
    let a0 = Matrix::from_rows(&[&[1., 1.], &[1., 1.]]).unwrap();
    let mut g = c.benchmark_group("expected_error_ball_100k");
    for (mode, name) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_mode(mode);
            b.iter(|| expected_error_ball(&model, &a0, &[1e-2], 1.0, 100_000, NormKind::L2, 1, None).unwrap())
        });
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("falsification_suite_2k");
    g.sample_size(10);
    for (mode, name) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_mode(mode);
            b.iter(|| falsification_suite(2000, 1).unwrap())
        });
    }
    g.finish();
}

fn dataset(c: &mut Criterion) {
    let region = preset("2x2-first").unwrap();
    let mut g = c.benchmark_group("sample_dataset_100k");
    g.sample_size(10);
    for (mode, name) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_mode(mode);
            b.iter(|| sample_dataset(&region, 100_000, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, patterns, ball, suite, dataset);
criterion_main!(benches);
