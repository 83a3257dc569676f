use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use einbein::asymptotics::airy_pair;
use einbein::critical::critical_points_at;
use einbein::laurent::laurent_point_source;
use einbein::pade::fit_rational;
use einbein::{thimble_field, FieldOptions, RefractionModel, SourceSpec, C64};

fn kernels(c: &mut Criterion) {
    let linear = RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 };
    let channel = RefractionModel::QuadraticZ { n0sq: 1.0, alpha: 0.01 };
    let point = SourceSpec::point(&[0.0, 0.0]);
    let sheet = SourceSpec::PhaseSheet { mu: 1.0, z0: 0.0 };
    let constant = RefractionModel::Constant { n0sq: 1.0 };

    c.bench_function("airy_complex", |b| b.iter(|| airy_pair(black_box(C64::new(-4.0, 3.0)))));
    c.bench_function("critical_points_cusp", |b| {
        b.iter(|| critical_points_at(&constant, &sheet, black_box(&[0.3, 0.5])))
    });
    c.bench_function("laurent_channel_order_14", |b| {
        b.iter(|| laurent_point_source(&channel, &[0.0, 1.0], black_box(&[1.0, 1.0]), 10.0, 14))
    });
    let series = laurent_point_source(&channel, &[0.0, 1.0], &[1.0, 1.0], 10.0, 14).unwrap();
    c.bench_function("pade_channel_9_4", |b| b.iter(|| fit_rational(black_box(&series), 9, 4)));
    let mut g = c.benchmark_group("thimble_field");
    g.sample_size(20);
    g.bench_function("linear_illuminated", |b| {
        b.iter(|| thimble_field(&linear, &point, black_box(&[5.0, 0.0]), &FieldOptions::new(5.0), None))
    });
    g.bench_function("cusp_interior", |b| {
        b.iter(|| thimble_field(&constant, &sheet, black_box(&[0.3, 0.5]), &FieldOptions::new(8.0), None))
    });
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
