use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lerw_bench::{domain, SIZES};
use lerw_core::greens::{log_q01, GreensTable};
use lerw_core::harmonic::{crossing_mass, escape_r};
use lerw_core::identity::crossing_census;
use lerw_core::loopmeasure::m_odd;
use lerw_core::montecarlo::{estimate_edge_probability, McConfig};
use lerw_core::solver::{log_det_i_minus, TransitionOperator};
use lerw_core::walks::EnumerationCaps;
use lerw_core::LatticePoint;

fn log_det(c: &mut Criterion) {
    let mut g = c.benchmark_group("log_det");
    for n in SIZES {
        let d = domain(n);
        g.bench_with_input(BenchmarkId::new("signed", n), &d, |b, d| {
            b.iter(|| log_det_i_minus(&TransitionOperator::signed(d)).unwrap())
        });
    }
    g.finish();
}

fn factors(c: &mut Criterion) {
    let mut g = c.benchmark_group("factors");
    for n in SIZES {
        let d = domain(n);
        g.bench_with_input(BenchmarkId::new("m_odd", n), &d, |b, d| {
            b.iter(|| m_odd(d).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("log_q01", n), &d, |b, d| {
            b.iter(|| log_q01(d).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("escape_r", n), &d, |b, d| {
            b.iter(|| escape_r(d).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("crossing_mass", n), &d, |b, d| {
            b.iter(|| crossing_mass(d).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let d = domain(2);
    c.bench_function("crossing_census/n2", |b| {
        b.iter(|| crossing_census(black_box(&d), EnumerationCaps::default()).unwrap())
    });
    let d = domain(4);
    let path: Vec<LatticePoint> = (-3..=4).map(|x| LatticePoint::new(x, 0)).collect();
    c.bench_function("greens_table/push_pop_row_n4", |b| {
        let mut t = GreensTable::new(&d).unwrap();
        b.iter(|| {
            for &p in &path {
                t.push(p).unwrap();
            }
            while t.pop().is_some() {}
        })
    });
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    for n in SIZES {
        let cfg = McConfig::new(n, 20_000, 1);
        g.bench_with_input(BenchmarkId::new("edge_20k", n), &cfg, |b, cfg| {
            b.iter(|| estimate_edge_probability(cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, log_det, factors, enumeration, monte_carlo);
criterion_main!(benches);
