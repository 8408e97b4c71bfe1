use criterion::{black_box, criterion_group, criterion_main, Criterion};

use distort_core::circle::Diffeo;
use distort_core::flows::{build_ht, f_flow};
use distort_core::generators::{build_gadgets, commutator_word, GeneratorSet};
use distort_core::rotation::rotation_number;

fn eval(c: &mut Criterion) {
    let gens = GeneratorSet::golden().unwrap();
    let f = f_flow(0.3);
    c.bench_function("flow eval", |b| b.iter(|| f.eval(black_box(0.41)).unwrap()));
    let h = build_ht(0.44);
    c.bench_function("h_t eval", |b| b.iter(|| h.eval(black_box(0.41)).unwrap()));
    c.bench_function("F1 inverse eval", |b| b.iter(|| gens.f1.eval_inverse(black_box(0.41)).unwrap()));
    let w = gens.realize(&build_gadgets(1, &gens, 1_000_000).unwrap()[0].tilde_word());
    c.bench_function("F̃_1 eval", |b| b.iter(|| w.eval(black_box(0.41)).unwrap()));
}

fn rotation(c: &mut Criterion) {
    let f = Diffeo::rotation(0.3).after(&GeneratorSet::golden().unwrap().f2);
    c.bench_function("rotation number, 8192 iterates", |b| b.iter(|| rotation_number(&f, 8192).unwrap()));
}

fn gadgets(c: &mut Criterion) {
    let gens = GeneratorSet::golden().unwrap();
    c.bench_function("build 4 gadgets", |b| b.iter(|| build_gadgets(4, &gens, 1_000_000).unwrap()));
    let g = build_gadgets(1, &gens, 1_000_000).unwrap().remove(0);
    c.bench_function("slot word, 64 probes", |b| b.iter(|| commutator_word(&g, &gens, 64, 1e-8).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = eval, rotation, gadgets
}
criterion_main!(benches);
