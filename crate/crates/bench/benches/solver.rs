use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kerrcav::{amplitudes_at, run_sweep, solve_cubic, BranchFields, ClosedForm, Mode, Observable, SqueezeTarget};
use kerrcav_bench::{reference_case, reference_solution, reference_spec};

fn cubic(c: &mut Criterion) {
    c.bench_function("solve_cubic", |b| b.iter(|| solve_cubic(black_box(-6.0), black_box(11.0), black_box(-6.0))));
}

fn closed_form(c: &mut Criterion) {
    let (params, trunc) = reference_case();
    c.bench_function("closed_form_setup", |b| b.iter(|| ClosedForm::new(black_box(&params), &trunc)));
    c.bench_function("amplitudes_at", |b| b.iter(|| amplitudes_at(&params, &trunc, black_box(3.7))));
    let (cf, _) = reference_solution();
    c.bench_function("closed_form_at", |b| b.iter(|| cf.at(black_box(3.7))));
}

fn observables(c: &mut Criterion) {
    let (cf, weights) = reference_solution();
    let set = cf.at(3.7);
    let fields = BranchFields::from_ansatz(&set, &weights);
    let mut group = c.benchmark_group("observables");
    for obs in [
        Observable::MandelQ(Mode::Mode1),
        Observable::G2(Mode::Mode1),
        Observable::SqueezeX(SqueezeTarget::Mode1),
        Observable::LinearEntropy,
    ] {
        group.bench_function(obs.to_string(), |b| b.iter(|| obs.evaluate(black_box(&fields))));
    }
    group.bench_function("branch_fields", |b| b.iter(|| BranchFields::from_ansatz(black_box(&set), &weights)));
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = reference_spec();
    c.bench_function("sweep_fig3b_closed_form", |b| b.iter(|| run_sweep(black_box(&spec))));
}

criterion_group!(benches, cubic, closed_form, observables, sweep);
criterion_main!(benches);
