use std::hint::black_box;

use cardassim_bench::{cable_at_rest, fronts, linear_system};
use cardassim_core::electro::StimulusProtocol;
use cardassim_core::filters::{simplex_sigma_points, ukf_step};
use cardassim_core::mech::{fiber_step, luenberger_step, mech_observe, Fiber, FiberConfig, MeasuredRegion, MechState};
use cardassim_core::pod::{build_pod, GramKind};
use cardassim_core::ObservationRecord;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;

fn cable(c: &mut Criterion) {
    let (cable, p, rest) = cable_at_rest();
    let i_app = StimulusProtocol::left_end(cable.n_nodes(), 0.1).current(0.0);
    c.bench_function("bidomain_step_n200", |b| {
        b.iter(|| cable.step(black_box(&rest), &p, &i_app, 0.1).unwrap())
    });
}

fn fiber(c: &mut Criterion) {
    let fiber = Fiber::new(FiberConfig::default()).unwrap();
    let n = fiber.n_nodes();
    let s = MechState::zeros(n);
    let vm = vec![20.0; n];
    let omega = MeasuredRegion::all(n);
    let y = mech_observe(&s, &omega);
    c.bench_function("fiber_step_n50", |b| b.iter(|| fiber_step(black_box(&s), &vm, &fiber, 1.0).unwrap()));
    c.bench_function("luenberger_step_n50", |b| {
        b.iter(|| luenberger_step(black_box(&s), &y, 0.05, &vm, &fiber, &omega, 1.0).unwrap())
    });
}

fn ukf(c: &mut Criterion) {
    let mut g = c.benchmark_group("ukf_step");
    for n in [4usize, 16, 64] {
        let (op, obs, f) = linear_system(n);
        let sp = simplex_sigma_points(n);
        let m = obs.h.nrows();
        let rec = ObservationRecord::new(1.0, DVector::from_element(m, 0.5), obs.w.clone()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| ukf_step(black_box(&f), &op, &obs, Some(&rec), &sp).unwrap())
        });
    }
    g.finish();
}

fn pod(c: &mut Criterion) {
    let snaps = fronts(400, 160);
    let gram = DVector::from_element(400, 0.5);
    c.bench_function("build_pod_400x160_r10", |b| {
        b.iter(|| build_pod(black_box(&snaps), 10, &gram, GramKind::Mass).unwrap())
    });
}

criterion_group!(benches, cable, fiber, ukf, pod);
criterion_main!(benches);
