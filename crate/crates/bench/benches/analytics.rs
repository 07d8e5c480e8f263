use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tripwise_bench::responses;
use tripwise_core::analytics::{filter_low_variance, usefulness_influence_matrix, UserScore, DEFAULT_FILTER_THRESHOLD};
use tripwise_core::stats::{anova_oneway, kendall_tau_test};

fn analytics(c: &mut Criterion) {
    let rs = responses(650, 37, 3);
    c.bench_function("filter_low_variance/650", |b| {
        b.iter(|| black_box(filter_low_variance(&rs, DEFAULT_FILTER_THRESHOLD, UserScore::default())))
    });
    c.bench_function("usefulness_influence_matrix/650", |b| {
        b.iter(|| black_box(usefulness_influence_matrix(&rs)))
    });

    let x: Vec<f64> = rs.iter().map(|r| f64::from(r.usefulness.as_array()[0])).collect();
    let y: Vec<f64> = rs.iter().map(|r| r.usefulness.mean()).collect();
    c.bench_function("kendall_tau/650", |b| {
        b.iter(|| black_box(kendall_tau_test(&x, &y).unwrap()))
    });

    let groups: Vec<Vec<f64>> = (0..6)
        .map(|k| rs.iter().map(|r| f64::from(r.usefulness.as_array()[k])).collect())
        .collect();
    c.bench_function("anova/6x650", |b| b.iter(|| black_box(anova_oneway(&groups).unwrap())));
}

criterion_group!(benches, analytics);
criterion_main!(benches);
