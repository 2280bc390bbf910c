//! Hot-path timings on the 48-point standard scene: single projection,
//! batch loss, analytic gradient, a bounded optimizer run, and a full
//! reprojection report. Run with `cargo bench -p panocal-bench`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use panocal::evaluate::reprojection_report;
use panocal::synthdata::{standard_dataset, standard_truth_pose, NoiseSpec};
use panocal::{batch_loss, loss_gradient, train, Correspondence, ExtrinsicPose, Point3, TrainingConfig};

fn scene() -> (Vec<Correspondence>, ExtrinsicPose) {
    let truth = standard_truth_pose();
    let (cs, _) = standard_dataset(&truth, &NoiseSpec::noiseless(9)).unwrap();
    (cs, truth)
}

fn perturbed(truth: &ExtrinsicPose) -> ExtrinsicPose {
    let t = truth.params();
    ExtrinsicPose::from_params([
        t[0] + 0.05,
        t[1] - 0.04,
        t[2] + 0.03,
        t[3] - 0.2,
        t[4] + 0.15,
        t[5] - 0.1,
    ])
    .unwrap()
}

fn bench_projection(c: &mut Criterion) {
    let p = Point3::new(3.2, -1.4, 0.9);
    c.bench_function("project_single_point", |b| {
        b.iter(|| panocal::project(black_box(&p)).unwrap())
    });
}

fn bench_batch_loss(c: &mut Criterion) {
    let (cs, truth) = scene();
    let pose = perturbed(&truth);
    let config = TrainingConfig::default();
    c.bench_function("batch_loss_48_points", |b| {
        b.iter(|| batch_loss(black_box(&cs), black_box(&pose), &config).unwrap())
    });
}

fn bench_gradient(c: &mut Criterion) {
    let (cs, truth) = scene();
    let pose = perturbed(&truth);
    let config = TrainingConfig::default();
    c.bench_function("loss_gradient_48_points", |b| {
        b.iter(|| loss_gradient(black_box(&cs), black_box(&pose), &config).unwrap())
    });
}

fn bench_train(c: &mut Criterion) {
    let (cs, truth) = scene();
    let init = perturbed(&truth);
    let config = TrainingConfig { max_iterations: 500, ..TrainingConfig::default() };
    c.bench_function("train_500_iterations", |b| {
        b.iter(|| train(black_box(&cs), black_box(&init), &config).unwrap())
    });
}

fn bench_reprojection(c: &mut Criterion) {
    let (cs, truth) = scene();
    c.bench_function("reprojection_report_48_points", |b| {
        b.iter(|| reprojection_report(black_box(&cs), black_box(&truth), 4096, 2048).unwrap())
    });
}

criterion_group!(
    benches,
    bench_projection,
    bench_batch_loss,
    bench_gradient,
    bench_train,
    bench_reprojection
);
criterion_main!(benches);
