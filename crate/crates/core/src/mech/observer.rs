use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::fiber::{fiber_step, Fiber, MechState};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::statespace::{AugmentedState, ObservationOperator};

/// Sorted, duplicate-free set of observed fiber nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredRegion {
    nodes: Vec<usize>,
}

impl MeasuredRegion {
    pub fn new(mut nodes: Vec<usize>, n_nodes: usize) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::config("mech.measured_nodes must not be empty"));
        }
        if nodes[nodes.len() - 1] >= n_nodes {
            return Err(Error::config(format!("mech.measured_nodes exceed the {n_nodes} fiber nodes")));
        }
        Ok(MeasuredRegion { nodes })
    }

    pub fn all(n_nodes: usize) -> Self {
        MeasuredRegion { nodes: (0..n_nodes).collect() }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn restrict(&self, field: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&i| field[i]).collect()
    }
}

/// `y|_ω`.
pub fn mech_observe(s: &MechState, omega: &MeasuredRegion) -> Vec<f64> {
    omega.restrict(&s.disp)
}

/// Static elastic extension of data on `ω` to the whole fiber: solves
/// `K d = 0` on the complement of `ω` with `d = d_ω` on `ω`.
pub fn extension_op(d_on_omega: &[f64], fiber: &Fiber, omega: &MeasuredRegion) -> Result<Vec<f64>> {
    let n = fiber.n_nodes();
    if d_on_omega.len() != omega.len() {
        return Err(Error::Dimension {
            context: "extension data",
            expected: omega.len(),
            got: d_on_omega.len(),
        });
    }
    let mut out = vec![0.0; n];
    let mut fixed = vec![false; n];
    for (&i, &d) in omega.nodes().iter().zip(d_on_omega) {
        out[i] = d;
        fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return Ok(out);
    }
    let k = &fiber.stiffness;
    let mut sub = Tridiagonal::zeros(free.len());
    let mut rhs = vec![0.0; free.len()];
    for (a, &i) in free.iter().enumerate() {
        sub.diag[a] = k.diag[i];
        if i > 0 && fixed[i - 1] {
            rhs[a] -= k.lower[i - 1] * out[i - 1];
        }
        if i + 1 < n && fixed[i + 1] {
            rhs[a] -= k.upper[i] * out[i + 1];
        }
        if a + 1 < free.len() && free[a + 1] == i + 1 {
            sub.upper[a] = k.upper[i];
            sub.lower[a] = k.lower[i];
        }
    }
    let d = sub.solve(&rhs)?;
    for (a, &i) in free.iter().enumerate() {
        out[i] = d[a];
    }
    Ok(out)
}

/// Fiber step with `ẏ = v + γ Ext_ω(y_m − ŷ|_ω)`; `γ = 0` is exactly [`fiber_step`].
pub fn luenberger_step(
    s: &MechState,
    y_m: &[f64],
    gamma: f64,
    vm_input: &[f64],
    fiber: &Fiber,
    omega: &MeasuredRegion,
    dt: f64,
) -> Result<MechState> {
    if !(gamma >= 0.0) {
        return Err(Error::config("mech.gamma must be nonnegative"));
    }
    if gamma == 0.0 {
        return fiber_step(s, vm_input, fiber, dt);
    }
    let discrepancy: Vec<f64> = y_m.iter().zip(mech_observe(s, omega)).map(|(y, yh)| y - yh).collect();
    let mut corr = extension_op(&discrepancy, fiber, omega)?;
    for c in &mut corr {
        *c *= gamma;
    }
    fiber.step_with_correction(s, vm_input, dt, Some(&corr))
}

/// Displacement observation of the `y` segment on `ω`, norm `W = dt_obs / sigma²`.
#[derive(Debug, Clone)]
pub struct DisplacementObservation {
    pub region: MeasuredRegion,
    pub dt_obs: f64,
    pub sigma: f64,
}

impl ObservationOperator for DisplacementObservation {
    fn output_dim(&self) -> usize {
        self.region.len()
    }

    fn observe(&self, x: &AugmentedState, _t: f64) -> Result<DVector<f64>> {
        let y = x.state.segment("y")?;
        Ok(DVector::from_vec(self.region.restrict(y)))
    }

    fn noise_norm(&self, _t: f64) -> DVector<f64> {
        DVector::from_element(self.output_dim(), self.dt_obs / (self.sigma * self.sigma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::FiberConfig;

    fn fiber() -> Fiber {
        Fiber::new(FiberConfig::default()).unwrap()
    }

    fn perturbed(f: &Fiber) -> MechState {
        let mut s = MechState::zeros(f.n_nodes());
        for (i, x) in f.coordinates().iter().enumerate() {
            s.disp[i] = 3.0 * (std::f64::consts::PI * x / 200.0).sin();
        }
        s
    }

    fn error_energy(f: &Fiber, a: &MechState, b: &MechState) -> f64 {
        let d = MechState {
            disp: a.disp.iter().zip(&b.disp).map(|(x, y)| x - y).collect(),
            vel: a.vel.iter().zip(&b.vel).map(|(x, y)| x - y).collect(),
            internal: a.internal.clone(),
        };
        f.energy(&d)
    }

    #[test]
    fn region_validation() {
        assert!(MeasuredRegion::new(vec![], 5).is_err());
        assert!(MeasuredRegion::new(vec![5], 5).is_err());
        assert_eq!(MeasuredRegion::new(vec![3, 1, 3], 5).unwrap().nodes(), &[1, 3]);
    }

    #[test]
    fn observe_selects_nodes() {
        let mut s = MechState::zeros(5);
        s.disp = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(mech_observe(&s, &MeasuredRegion::all(5)), s.disp);
        assert_eq!(mech_observe(&s, &MeasuredRegion::new(vec![4, 2], 5).unwrap()), vec![2.0, 4.0]);
    }

    #[test]
    fn extension_identity_and_zero() {
        let f = fiber();
        let all = MeasuredRegion::all(f.n_nodes());
        let d: Vec<f64> = (0..f.n_nodes()).map(|i| (i as f64).cos()).collect();
        assert_eq!(extension_op(&d, &f, &all).unwrap(), d);
        let part = MeasuredRegion::new(vec![5, 20, 33], f.n_nodes()).unwrap();
        assert!(extension_op(&[0.0; 3], &f, &part).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn extension_two_nodes_matches_harmonic_oracle() {
        let f = fiber();
        let (i, j) = (12usize, 30usize);
        let (di, dj) = (2.0, -1.0);
        let omega = MeasuredRegion::new(vec![i, j], f.n_nodes()).unwrap();
        let d = extension_op(&[di, dj], &f, &omega).unwrap();
        assert_eq!(d[i], di);
        assert_eq!(d[j], dj);
        // Linear between the constraints, constant toward the free end.
        for m in i..=j {
            let lin = di + (dj - di) * (m - i) as f64 / (j - i) as f64;
            assert!((d[m] - lin).abs() < 1e-12, "node {m}");
        }
        for m in j..f.n_nodes() {
            assert!((d[m] - dj).abs() < 1e-12);
        }
        // Toward the anchored end: d_m = d_0 (1 + m k_s h / E).
        let r = f.config.k_s * f.config.h() / f.config.e;
        let d0 = di / (1.0 + i as f64 * r);
        for m in 0..=i {
            assert!((d[m] - d0 * (1.0 + m as f64 * r)).abs() < 1e-12, "node {m}");
        }
    }

    #[test]
    fn zero_gain_is_bit_exact() {
        let f = fiber();
        let s = perturbed(&f);
        let vm = vec![10.0; f.n_nodes()];
        let omega = MeasuredRegion::new(vec![10, 40], f.n_nodes()).unwrap();
        let a = luenberger_step(&s, &[1.0, 2.0], 0.0, &vm, &f, &omega, 1.0).unwrap();
        let b = fiber_step(&s, &vm, &f, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truth_initialized_observer_follows_truth() {
        let f = fiber();
        let omega = MeasuredRegion::new((0..f.n_nodes()).step_by(3).collect(), f.n_nodes()).unwrap();
        let mut truth = MechState::zeros(f.n_nodes());
        let mut est = truth.clone();
        for k in 0..300 {
            let v = if k < 150 { 15.0 } else { -80.0 };
            let vm = vec![v; f.n_nodes()];
            let ym = mech_observe(&truth, &omega);
            est = luenberger_step(&est, &ym, 0.05, &vm, &f, &omega, 1.0).unwrap();
            truth = fiber_step(&truth, &vm, &f, 1.0).unwrap();
            assert_eq!(est, truth);
        }
    }

    fn run_observer(gamma: f64, steps: usize) -> (f64, f64) {
        let f = fiber();
        let omega = MeasuredRegion::all(f.n_nodes());
        let vm = vec![-80.0; f.n_nodes()];
        let mut truth = MechState::zeros(f.n_nodes());
        let mut est = perturbed(&f);
        let e0 = error_energy(&f, &est, &truth);
        for _ in 0..steps {
            let ym = mech_observe(&truth, &omega);
            est = luenberger_step(&est, &ym, gamma, &vm, &f, &omega, 1.0).unwrap();
            truth = fiber_step(&truth, &vm, &f, 1.0).unwrap();
        }
        (e0, error_energy(&f, &est, &truth))
    }

    #[test]
    fn full_observation_error_decays() {
        let (e0, e1) = run_observer(0.05, 800);
        assert!(e1 < 0.1 * e0, "{e1} vs {e0}");
    }

    #[test]
    fn error_decreasing_in_gain() {
        let errs: Vec<f64> = [0.0, 0.01, 0.05].iter().map(|&g| run_observer(g, 400).1).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }
}
