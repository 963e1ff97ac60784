use serde::{Deserialize, Serialize};

use super::bcs::{bcs_internal_step, BcsState};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Visco-elastic active fiber anchored at node 0 by a spring and damper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberConfig {
    pub n_nodes: usize,
    pub length: f64,
    pub dt: f64,
    pub rho: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub eta_s: f64,
    pub k_s: f64,
    pub c_s: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub mu: f64,
    pub n0: f64,
    /// Optional `(e_c, n0)` table, linearly interpolated and clamped at the ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_table: Option<Vec<[f64; 2]>>,
}

impl Default for FiberConfig {
    fn default() -> Self {
        FiberConfig {
            n_nodes: 50,
            length: 100.0,
            dt: 1.0,
            rho: 1e-3,
            e: 0.025,
            eta_s: 0.05,
            k_s: 0.05,
            c_s: 0.05,
            a: 2e-4,
            b: 0.012,
            alpha: 2.0,
            k0: 0.005,
            sigma0: 0.0025,
            mu: 0.001,
            n0: 1.0,
            n0_table: None,
        }
    }
}

impl FiberConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::config("mech.n_nodes must be at least 2"));
        }
        for (k, v) in [("length_mm", self.length), ("dt_ms", self.dt), ("rho", self.rho), ("E", self.e)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("mech.{k} must be positive")));
            }
        }
        for (k, v) in [
            ("eta_s", self.eta_s),
            ("k_s", self.k_s),
            ("c_s", self.c_s),
            ("alpha", self.alpha),
            ("k0", self.k0),
            ("sigma0", self.sigma0),
            ("mu", self.mu),
            ("n0", self.n0),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(format!("mech.{k} must be nonnegative")));
            }
        }
        if let Some(t) = &self.n0_table {
            if t.is_empty() || t.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return Err(Error::config("mech.n0_table must have increasing strain abscissae"));
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n_nodes - 1) as f64
    }

    pub fn n_elements(&self) -> usize {
        self.n_nodes - 1
    }

    /// Activation `u = a vm + b`.
    pub fn activation(&self, vm: f64) -> f64 {
        self.a * vm + self.b
    }

    pub fn n0_at(&self, e_c: f64) -> f64 {
        match &self.n0_table {
            None => self.n0,
            Some(t) => {
                if e_c <= t[0][0] {
                    return t[0][1];
                }
                for w in t.windows(2) {
                    if e_c <= w[1][0] {
                        let s = (e_c - w[0][0]) / (w[1][0] - w[0][0]);
                        return w[0][1] + s * (w[1][1] - w[0][1]);
                    }
                }
                t[t.len() - 1][1]
            }
        }
    }
}

/// Nodal displacement and velocity plus per-element internal variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MechState {
    pub disp: Vec<f64>,
    pub vel: Vec<f64>,
    pub internal: Vec<BcsState>,
}

impl MechState {
    pub fn zeros(n_nodes: usize) -> Self {
        MechState {
            disp: vec![0.0; n_nodes],
            vel: vec![0.0; n_nodes],
            internal: vec![BcsState::default(); n_nodes.saturating_sub(1)],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.disp.len()
    }
}

/// Assembled fiber operators.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub config: FiberConfig,
    pub mass: Vec<f64>,
    pub stiffness: Tridiagonal,
    pub damping: Tridiagonal,
}

impl Fiber {
    pub fn new(config: FiberConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_nodes;
        let h = config.h();
        let mut mass = vec![config.rho * h; n];
        mass[0] *= 0.5;
        mass[n - 1] *= 0.5;
        let mut stiffness = Tridiagonal::stiffness(n, config.e, h);
        stiffness.diag[0] += config.k_s;
        let mut damping = Tridiagonal::stiffness(n, config.eta_s + config.mu, h);
        damping.diag[0] += config.c_s;
        Ok(Fiber {
            config,
            mass,
            stiffness,
            damping,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.config.n_nodes
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.config.h();
        (0..self.n_nodes()).map(|i| i as f64 * h).collect()
    }

    /// Passive energy `½ vᵀ M v + ½ yᵀ K y`.
    pub fn energy(&self, s: &MechState) -> f64 {
        let kin: f64 = s.vel.iter().zip(&self.mass).map(|(v, m)| m * v * v).sum();
        0.5 * kin + 0.5 * self.stiffness.quad_form(&s.disp)
    }

    fn strain(&self, y: &[f64]) -> Vec<f64> {
        let h = self.config.h();
        y.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Midpoint step with an optional displacement-equation correction `c`:
    /// `y⁺ = y + dt c + dt/2 (v + v⁺)`.
    pub(crate) fn step_with_correction(
        &self,
        s: &MechState,
        vm: &[f64],
        dt: f64,
        correction: Option<&[f64]>,
    ) -> Result<MechState> {
        let n = self.n_nodes();
        if vm.len() != n || s.n_nodes() != n || s.internal.len() != n - 1 {
            return Err(Error::Dimension {
                context: "fiber step",
                expected: n,
                got: vm.len().min(s.n_nodes()),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::config("mechanical time step must be positive"));
        }
        let k = &self.stiffness;
        let c = &self.damping;

        // Active nodal force Dᵀ τ_c.
        let mut f_act = vec![0.0; n];
        for (e, iv) in s.internal.iter().enumerate() {
            f_act[e] -= iv.tau_c;
            f_act[e + 1] += iv.tau_c;
        }

        let mut y_half = s.disp.clone();
        if let Some(corr) = correction {
            for (yh, ci) in y_half.iter_mut().zip(corr) {
                *yh += 0.5 * dt * ci;
            }
        }
        let ky = k.mul_vec(&y_half);
        let kv = k.mul_vec(&s.vel);
        let cv = c.mul_vec(&s.vel);
        let rhs: Vec<f64> = (0..n)
            .map(|i| self.mass[i] / dt * s.vel[i] - ky[i] - 0.25 * dt * kv[i] - 0.5 * cv[i] - f_act[i])
            .collect();
        let mut lhs = k.combine(0.25 * dt, c, 0.5);
        let md: Vec<f64> = self.mass.iter().map(|m| m / dt).collect();
        lhs.add_diag(&md);
        let vel = lhs.solve(&rhs)?;

        let mut disp: Vec<f64> = (0..n).map(|i| s.disp[i] + 0.5 * dt * (s.vel[i] + vel[i])).collect();
        if let Some(corr) = correction {
            for (y, ci) in disp.iter_mut().zip(corr) {
                *y += dt * ci;
            }
        }

        let h = self.config.h();
        let strain = self.strain(&disp);
        let internal = s
            .internal
            .iter()
            .enumerate()
            .map(|(e, iv)| {
                let u = self.config.activation(0.5 * (vm[e] + vm[e + 1]));
                let de = 0.5 * ((s.vel[e + 1] + vel[e + 1]) - (s.vel[e] + vel[e])) / h;
                let mut next = bcs_internal_step(*iv, u, de, &self.config, dt);
                next.e_c = strain[e];
                next
            })
            .collect();
        Ok(MechState { disp, vel, internal })
    }
}

/// One mechanical step driven by the transmembrane potential on the fiber nodes.
pub fn fiber_step(s: &MechState, vm_on_fiber: &[f64], fiber: &Fiber, dt: f64) -> Result<MechState> {
    fiber.step_with_correction(s, vm_on_fiber, dt, None)
}

/// Linear interpolation weights from one 1D grid to another.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTransfer {
    idx: Vec<usize>,
    weight: Vec<f64>,
}

impl GridTransfer {
    /// Both grids are sorted node coordinates of the same interval.
    pub fn new(src: &[f64], dst: &[f64]) -> Result<Self> {
        if src.len() < 2 {
            return Err(Error::config("interpolation source needs at least two nodes"));
        }
        let mut idx = Vec::with_capacity(dst.len());
        let mut weight = Vec::with_capacity(dst.len());
        for &x in dst {
            let j = match src.binary_search_by(|p| p.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
                Ok(j) => j.min(src.len() - 2),
                Err(j) => j.clamp(1, src.len() - 1) - 1,
            };
            let t = ((x - src[j]) / (src[j + 1] - src[j])).clamp(0.0, 1.0);
            idx.push(j);
            weight.push(t);
        }
        Ok(GridTransfer { idx, weight })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.idx
            .iter()
            .zip(&self.weight)
            .map(|(&j, &t)| if t == 0.0 { f[j] } else if t == 1.0 { f[j + 1] } else { (1.0 - t) * f[j] + t * f[j + 1] })
            .collect()
    }
}

/// Interpolates a nodal field from the electrical to the mechanical grid.
pub fn interp_e2m(vm_electro: &[f64], electro_coords: &[f64], mech_coords: &[f64]) -> Result<Vec<f64>> {
    if vm_electro.len() != electro_coords.len() {
        return Err(Error::Dimension {
            context: "electrical field",
            expected: electro_coords.len(),
            got: vm_electro.len(),
        });
    }
    Ok(GridTransfer::new(electro_coords, mech_coords)?.apply(vm_electro))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn released(fiber: &Fiber) -> MechState {
        let mut s = MechState::zeros(fiber.n_nodes());
        for (i, x) in fiber.coordinates().iter().enumerate() {
            s.disp[i] = 5.0 * (x / 100.0) * (x / 100.0);
        }
        s
    }

    #[test]
    fn rest_stays_at_rest() {
        let fiber = Fiber::new(FiberConfig::default()).unwrap();
        let mut s = MechState::zeros(fiber.n_nodes());
        let vm = vec![-80.0; fiber.n_nodes()];
        assert!(fiber.config.activation(-80.0) < 0.0);
        for _ in 0..100 {
            s = fiber_step(&s, &vm, &fiber, 1.0).unwrap();
        }
        assert_eq!(s, MechState::zeros(fiber.n_nodes()));
    }

    #[test]
    fn passive_energy_non_increasing() {
        let fiber = Fiber::new(FiberConfig::default()).unwrap();
        let mut s = released(&fiber);
        let vm = vec![-80.0; fiber.n_nodes()];
        let mut e = fiber.energy(&s);
        for _ in 0..500 {
            s = fiber_step(&s, &vm, &fiber, 1.0).unwrap();
            let e1 = fiber.energy(&s);
            assert!(e1 <= e * (1.0 + 1e-10), "{e1} > {e}");
            e = e1;
        }
    }

    #[test]
    fn undamped_midpoint_conserves_energy() {
        let cfg = FiberConfig {
            eta_s: 0.0,
            mu: 0.0,
            c_s: 0.0,
            ..FiberConfig::default()
        };
        let fiber = Fiber::new(cfg).unwrap();
        let mut s = released(&fiber);
        let vm = vec![-80.0; fiber.n_nodes()];
        let e0 = fiber.energy(&s);
        for _ in 0..200 {
            s = fiber_step(&s, &vm, &fiber, 1.0).unwrap();
        }
        assert!((fiber.energy(&s) - e0).abs() < 1e-10 * e0);
    }

    #[test]
    fn uniform_activation_contracts_and_stays_nonnegative() {
        let fiber = Fiber::new(FiberConfig::default()).unwrap();
        let mut s = MechState::zeros(fiber.n_nodes());
        let vm = vec![20.0; fiber.n_nodes()];
        for _ in 0..400 {
            s = fiber_step(&s, &vm, &fiber, 1.0).unwrap();
            assert!(s.internal.iter().all(|iv| iv.k_c >= 0.0 && iv.tau_c >= 0.0));
        }
        let tip = s.disp[fiber.n_nodes() - 1];
        assert!(tip < -1.0, "tip displacement {tip}");
        let strain = s.internal[10].e_c;
        assert!((strain - (s.disp[11] - s.disp[10]) / fiber.config.h()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_identity_and_constants() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 10.0).collect();
        let f: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        assert_eq!(interp_e2m(&f, &x, &x).unwrap(), f);
        let fine: Vec<f64> = (0..37).map(|i| i as f64 * 100.0 / 36.0).collect();
        let c = interp_e2m(&vec![-3.5; 37], &fine, &x).unwrap();
        assert!(c.iter().all(|v| (*v + 3.5).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn linear_fields_reproduced(slope in -5.0f64..5.0, offset in -50.0f64..50.0, n_src in 2usize..60, n_dst in 2usize..60) {
            let src: Vec<f64> = (0..n_src).map(|i| i as f64 * 100.0 / (n_src - 1) as f64).collect();
            let dst: Vec<f64> = (0..n_dst).map(|i| i as f64 * 100.0 / (n_dst - 1) as f64).collect();
            let f: Vec<f64> = src.iter().map(|x| slope * x + offset).collect();
            let g = interp_e2m(&f, &src, &dst).unwrap();
            for (x, v) in dst.iter().zip(&g) {
                prop_assert!((v - (slope * x + offset)).abs() < 1e-9 * (1.0 + v.abs()));
            }
        }
    }
}
