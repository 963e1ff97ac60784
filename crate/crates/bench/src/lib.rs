//! Fixtures shared by the kernel benchmarks.

use cardassim_core::electro::{Cable, CableConfig, ElectroState, IonicConfig, MsParams};
use cardassim_core::pod::SnapshotSet;
use cardassim_core::statespace::{LinearObservation, LinearTransition};
use cardassim_core::FilterState;
use nalgebra::{DMatrix, DVector};

/// Default cable at rest with its resolved ionic parameters.
pub fn cable_at_rest() -> (Cable, MsParams, ElectroState) {
    let cable = Cable::new(CableConfig::default()).expect("default cable");
    let p = IonicConfig::default().resolve(&cable.config.regions).expect("default ionic");
    let s = ElectroState::resting(cable.n_nodes(), &p);
    (cable, p, s)
}

/// Slowly rotating `n`-dimensional system observing every other coordinate.
pub fn linear_system(n: usize) -> (LinearTransition, LinearObservation, FilterState) {
    let a = DMatrix::from_fn(n, n, |i, j| match (i as isize - j as isize).abs() {
        0 => 0.98,
        1 => 0.1 * if i > j { 1.0 } else { -1.0 },
        _ => 0.0,
    });
    let m = n.div_ceil(2);
    let h = DMatrix::from_fn(m, n, |i, j| if j == 2 * i { 1.0 } else { 0.0 });
    let op = LinearTransition::new(a, None).expect("square transition");
    let obs = LinearObservation { h, w: DVector::from_element(m, 4.0) };
    let x0: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let f = FilterState::full(op.state(&x0, &[]), DMatrix::identity(n, n), 0.0).expect("covariance");
    (op, obs, f)
}

/// `m` smooth travelling fronts of dimension `n`.
pub fn fronts(n: usize, m: usize) -> SnapshotSet {
    let cols = (0..m)
        .map(|k| {
            let c = n as f64 * (k as f64 + 0.5) / m as f64;
            DVector::from_fn(n, |i, _| ((c - i as f64) / 8.0).tanh())
        })
        .collect();
    SnapshotSet::from_columns(cols).expect("snapshots")
}
