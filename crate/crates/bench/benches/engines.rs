use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mucert::gridsearch::{exclusion_check_qubit, exclusion_search, GridSpec, DEFAULT_BUDGET};
use mucert::groebner::{buchberger, GroebnerOptions};
use mucert::lasserre::build_relaxation;
use mucert::sdpsolve::{solve, SolverOptions};
use mucert_bench::{qubit_spec, qubit_system};

fn groebner(c: &mut Criterion) {
    let gens = qubit_system().polynomials();
    let opts = GroebnerOptions::default();
    c.bench_function("buchberger_qubit", |b| b.iter(|| buchberger(black_box(&gens), &opts).unwrap()));
}

fn relaxation(c: &mut Criterion) {
    let sys = qubit_system();
    let mut g = c.benchmark_group("relaxation_build");
    for r in [2, 3, 4] {
        g.bench_function(format!("r{r}"), |b| {
            b.iter(|| build_relaxation(black_box(&sys), 0, r).unwrap().to_sdp_reduced())
        });
    }
    g.finish();
}

fn sdp(c: &mut Criterion) {
    let sys = qubit_system();
    let mut g = c.benchmark_group("sdp_solve");
    g.sample_size(10);
    for r in [2, 3] {
        let inst = build_relaxation(&sys, 0, r).unwrap().to_sdp_reduced();
        let opts = SolverOptions::default();
        g.bench_function(format!("r{r}"), |b| b.iter(|| solve(black_box(&inst), &opts).unwrap()));
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    c.bench_function("qubit_direct_r12", |b| b.iter(|| exclusion_check_qubit(black_box(12)).unwrap()));
    let spec = GridSpec::uniform(qubit_spec(), 200).unwrap();
    c.bench_function("qubit_search_r200", |b| {
        b.iter(|| exclusion_search(black_box(&spec), DEFAULT_BUDGET, 16).unwrap())
    });
}

criterion_group!(benches, groebner, relaxation, sdp, grid);
criterion_main!(benches);
