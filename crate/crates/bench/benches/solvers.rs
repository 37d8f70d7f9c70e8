use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rotopt::optimizer::Terms;
use rotopt::{build_machine_mesh, CurrentExcitation, SolveRequest};
use rotopt_bench::{desk_geometry, desk_model, desk_problem};

fn mesh(c: &mut Criterion) {
    let g = desk_geometry();
    c.bench_function("machine mesh 2.2 mm", |b| b.iter(|| build_machine_mesh(black_box(&g), 2.2e-3).unwrap()));
}

fn mqs(c: &mut Criterion) {
    let (model, design) = desk_model();
    let exc = CurrentExcitation::new(40.0, 4.5);
    let stat = model.time_grid(0.0).unwrap();
    let moving = model.time_grid(2000.0).unwrap();
    let mut g = c.benchmark_group("mqs");
    g.sample_size(10);
    g.bench_function("static N=5", |b| {
        b.iter(|| model.solve(&design, &exc, &stat, SolveRequest::default()).unwrap())
    });
    g.bench_function("eddy N=5", |b| {
        b.iter(|| {
            let req = SolveRequest {
                with_eddies: true,
                ..Default::default()
            };
            model.solve(&design, &exc, &moving, req).unwrap()
        })
    });
    g.finish();
}

fn coupled(c: &mut Criterion) {
    let (problem, design) = desk_problem();
    let currents = [(20.0, 4.5), (40.0, 4.5)];
    let eval = problem.evaluate(&design, &currents, Terms::ALL, None, None).unwrap();
    let mut g = c.benchmark_group("coupled");
    g.sample_size(10);
    g.bench_function("thermal solve", |b| {
        let th = eval.thermal.as_ref().unwrap();
        b.iter(|| {
            problem
                .thermal
                .solve(&problem.mqs.mesh, &design, &problem.mqs.materials, black_box(&th.density))
                .unwrap()
        })
    });
    g.bench_function("elastic solve", |b| {
        b.iter(|| {
            problem
                .elastic
                .solve(&problem.mqs.mesh, &design, &problem.mqs.materials, black_box(2800.0))
                .unwrap()
        })
    });
    g.bench_function("evaluate all terms", |b| {
        b.iter(|| problem.evaluate(&design, &currents, Terms::ALL, Some(&eval), None).unwrap())
    });
    g.bench_function("adjoints and topological derivative", |b| {
        b.iter(|| {
            let adj = problem.adjoints(&eval).unwrap();
            problem.topological_derivative(&eval, &adj)
        })
    });
    g.finish();
}

criterion_group!(benches, mesh, mqs, coupled);
criterion_main!(benches);
