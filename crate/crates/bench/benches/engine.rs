use std::hint::black_box;

use cogrelay_core::closed_form::{f_rstar_closed, MAX_USERS};
use cogrelay_core::oracle::quadrature_f_rstar;
use cogrelay_core::{
    avg_delay, derive_constants, e1_scaled, run, LinkStats, PolicyConfig, SimConfig, SystemParams,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn special(c: &mut Criterion) {
    let mut g = c.benchmark_group("e1_scaled");
    for x in [0.05, 0.9, 4.0, 40.0] {
        g.bench_with_input(BenchmarkId::from_parameter(x), &x, |b, &x| {
            b.iter(|| e1_scaled(black_box(x)))
        });
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let consts = derive_constants(&SystemParams::default());
    let mut g = c.benchmark_group("f_rstar_closed");
    for policy in PolicyConfig::ALL {
        for n in [2, 8, MAX_USERS.min(16)] {
            g.bench_with_input(BenchmarkId::new(policy.label(), n), &n, |b, &n| {
                b.iter(|| f_rstar_closed(&policy, black_box(&consts), n))
            });
        }
    }
    g.finish();

    let params = SystemParams::default();
    c.bench_function("link_stats_and_delay", |b| {
        b.iter(|| {
            let s = LinkStats::evaluate(black_box(&params), &PolicyConfig::AP_BPL).unwrap();
            avg_delay(params.lambda_p, &s).unwrap()
        })
    });
}

fn quadrature(c: &mut Criterion) {
    let consts = derive_constants(&SystemParams::default());
    let mut g = c.benchmark_group("quadrature_f_rstar");
    g.sample_size(10);
    for policy in PolicyConfig::ALL {
        g.bench_function(policy.label(), |b| {
            b.iter(|| quadrature_f_rstar(&policy, black_box(&consts), 4))
        });
    }
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_100k_slots");
    g.sample_size(10);
    for policy in PolicyConfig::ALL {
        let cfg = SimConfig::new(SystemParams::default(), policy)
            .with_slots(100_000)
            .with_warmup(1_000);
        g.bench_function(policy.label(), |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, special, closed_forms, quadrature, simulator);
criterion_main!(benches);
