use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use distill_core::codes::{eta, BlockSpectra};
use distill_core::resource::{Optimizer, ResourceParams, SearchSpace};
use distill_core::sim::{simulate_rare, SimConfig};
use distill_core::tracking::{track_block_checked, track_module_checked, BlockEstimate};
use distill_core::{ProtocolCode, ProtocolKind};

fn codes(c: &mut Criterion) {
    let bh = ProtocolCode::from_kind(ProtocolKind::Bh { k: 26 }).unwrap();
    c.bench_function("eta_bh26", |b| b.iter(|| eta(black_box(&bh))));
    c.bench_function("spectra_bh26", |b| b.iter(|| BlockSpectra::new(black_box(&bh)).unwrap()));
    let g1 = bh.g1().clone();
    c.bench_function("rank_bh26_g1", |b| b.iter(|| black_box(&g1).rank()));
}

fn tracking(c: &mut Criterion) {
    let kinds = [ProtocolKind::Bh { k: 10 }, ProtocolKind::Bh { k: 10 }, ProtocolKind::Toffoli];
    c.bench_function("track_module", |b| b.iter(|| track_module_checked(black_box(&kinds), 1e-3).unwrap()));
    c.bench_function("track_block_exact", |b| {
        b.iter(|| track_block_checked(black_box(&kinds), 1e-3, BlockEstimate::Exact).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let cfg = SimConfig::new(&[ProtocolKind::Bh { k: 6 }], 1e-2, 2000, 7);
    c.bench_function("simulate_rare_2000", |b| b.iter(|| simulate_rare(black_box(&cfg), &[]).unwrap()));
}

fn optimizer(c: &mut Criterion) {
    let space = SearchSpace { max_rounds: 2, ..SearchSpace::default() };
    let opt = Optimizer::new(ResourceParams::new(1e-3, 1e-5), space).unwrap();
    c.bench_function("optimize_best_1e10", |b| {
        b.iter(|| opt.best(black_box(1e10), distill_core::Species::T, None).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = codes, tracking, simulation, optimizer
}
criterion_main!(benches);
