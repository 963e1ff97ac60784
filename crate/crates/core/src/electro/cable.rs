//! 1D bidomain cable with P1 elements, lumped mass and IMEX time stepping.

use serde::{Deserialize, Serialize};

use super::ionic::{ms_gate_rhs, ms_ion_current, MsParams};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Contiguous named node ranges covering `[0, n_nodes)`; ranges may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub names: Vec<String>,
    /// `bounds[k]..bounds[k+1]` are the nodes of region `k`.
    pub bounds: Vec<usize>,
}

impl RegionPartition {
    pub fn new(names: Vec<String>, bounds: Vec<usize>) -> Result<Self> {
        if bounds.len() != names.len() + 1 || bounds.first() != Some(&0) {
            return Err(Error::config("region bounds must start at 0 and have one more entry than names"));
        }
        if bounds.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("region bounds must be non-decreasing"));
        }
        Ok(RegionPartition { names, bounds })
    }

    /// Default endo/mcell/epi/rv layout scaled from a 200-node cable.
    pub fn cardiac(n_nodes: usize) -> Self {
        let at = |k: usize| (k * n_nodes + 100) / 200;
        RegionPartition {
            names: ["endo", "mcell", "epi", "rv"].map(String::from).to_vec(),
            bounds: vec![0, at(60), at(90), at(150), n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        *self.bounds.last().unwrap_or(&0)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn nodes(&self, k: usize) -> std::ops::Range<usize> {
        self.bounds[k]..self.bounds[k + 1]
    }

    /// Expands per-region values to a per-node vector.
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (k, v) in values.iter().enumerate() {
            for i in self.nodes(k) {
                out[i] = *v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CableModel {
    #[default]
    Bidomain,
    /// Single equation with the harmonic-mean conductivity.
    Monodomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableConfig {
    pub n_nodes: usize,
    pub length: f64,
    pub sigma_i: f64,
    pub sigma_e: f64,
    pub am: f64,
    pub cm: f64,
    pub regions: RegionPartition,
    #[serde(default)]
    pub model: CableModel,
}

impl Default for CableConfig {
    fn default() -> Self {
        CableConfig {
            n_nodes: 200,
            length: 100.0,
            sigma_i: 0.04,
            sigma_e: 0.04,
            am: 1.0,
            cm: 0.01,
            regions: RegionPartition::cardiac(200),
            model: CableModel::Bidomain,
        }
    }
}

impl CableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::config("electro.n_nodes must be at least 2"));
        }
        if !(self.length > 0.0) {
            return Err(Error::config("electro.length_mm must be positive"));
        }
        for (k, v) in [("sigma_i", self.sigma_i), ("sigma_e", self.sigma_e), ("am", self.am), ("cm", self.cm)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("electro.{k} must be positive")));
            }
        }
        if self.regions.n_nodes() != self.n_nodes {
            return Err(Error::config(format!(
                "regions cover {} nodes, cable has {}",
                self.regions.n_nodes(),
                self.n_nodes
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n_nodes - 1) as f64
    }
}

/// Node values of the electrical fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectroState {
    pub vm: Vec<f64>,
    pub ue: Vec<f64>,
    pub w: Vec<f64>,
}

impl ElectroState {
    pub fn resting(n: usize, p: &MsParams) -> Self {
        ElectroState {
            vm: vec![p.v_min; n],
            ue: vec![0.0; n],
            w: vec![p.w_max(); n],
        }
    }
}

/// Assembled operators for one cable configuration.
#[derive(Debug, Clone)]
pub struct Cable {
    pub config: CableConfig,
    /// Lumped mass diagonal.
    pub mass: Vec<f64>,
    pub k_i: Tridiagonal,
    pub k_ie: Tridiagonal,
    pub k_mono: Tridiagonal,
}

impl Cable {
    pub fn new(config: CableConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_nodes;
        let h = config.h();
        let mut mass = vec![h; n];
        mass[0] = 0.5 * h;
        mass[n - 1] = 0.5 * h;
        let k_i = Tridiagonal::stiffness(n, config.sigma_i, h);
        let k_ie = Tridiagonal::stiffness(n, config.sigma_i + config.sigma_e, h);
        let sigma_m = config.sigma_i * config.sigma_e / (config.sigma_i + config.sigma_e);
        let k_mono = Tridiagonal::stiffness(n, sigma_m, h);
        Ok(Cable {
            config,
            mass,
            k_i,
            k_ie,
            k_mono,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.config.n_nodes
    }

    /// Node coordinates in mm.
    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.config.h();
        (0..self.n_nodes()).map(|i| i as f64 * h).collect()
    }

    /// Solves `(K_i + K_e) u_e = -K_i v_m` with zero arithmetic mean.
    ///
    /// The Neumann operator is singular; node 0 is pinned and the mean is
    /// removed afterwards, which is exact because the right-hand side is
    /// compatible.
    pub fn extracellular(&self, vm: &[f64]) -> Result<Vec<f64>> {
        let mut rhs: Vec<f64> = self.k_i.mul_vec(vm).iter().map(|x| -x).collect();
        let mut sys = self.k_ie.clone();
        sys.diag[0] = 1.0;
        sys.upper[0] = 0.0;
        rhs[0] = 0.0;
        let mut ue = sys.solve(&rhs).map_err(|e| match e {
            Error::Numerical { diagnostics, .. } => Error::numerical(
                "extracellular constraint solve failed",
                format!("{diagnostics}; sigma_i+sigma_e = {}", self.config.sigma_i + self.config.sigma_e),
            ),
            other => other,
        })?;
        let mean = ue.iter().sum::<f64>() / ue.len() as f64;
        ue.iter_mut().for_each(|u| *u -= mean);
        Ok(ue)
    }

    /// One IMEX step: implicit diffusion, explicit ionic current and gate.
    pub fn step(&self, s: &ElectroState, p: &MsParams, i_app: &[f64], dt: f64) -> Result<ElectroState> {
        match self.config.model {
            CableModel::Bidomain => bidomain_step(self, s, p, i_app, dt),
            CableModel::Monodomain => monodomain_step(self, s, p, i_app, dt),
        }
    }
}

fn reaction_rhs(cable: &Cable, s: &ElectroState, p: &MsParams, i_app: &[f64], dt: f64) -> Vec<f64> {
    let c = &cable.config;
    (0..cable.n_nodes())
        .map(|i| {
            let ion = ms_ion_current(s.vm[i], s.w[i], p);
            cable.mass[i] * c.am * (c.cm * s.vm[i] / dt + i_app[i] - ion)
        })
        .collect()
}

fn gate_update(s: &ElectroState, p: &MsParams, dt: f64) -> Vec<f64> {
    (0..s.w.len())
        .map(|i| s.w[i] + dt * ms_gate_rhs(s.vm[i], s.w[i], p, i))
        .collect()
}

fn implicit_operator(cable: &Cable, k: &Tridiagonal, dt: f64) -> Tridiagonal {
    let c = &cable.config;
    let mut op = k.clone();
    let m: Vec<f64> = cable.mass.iter().map(|m| m * c.am * c.cm / dt).collect();
    op.add_diag(&m);
    op
}

/// Bidomain IMEX step. `K_i u_e` is lagged from the incoming state, then the
/// static constraint is re-solved for the new `v_m`.
pub fn bidomain_step(
    cable: &Cable,
    s: &ElectroState,
    p: &MsParams,
    i_app: &[f64],
    dt: f64,
) -> Result<ElectroState> {
    check_step_inputs(cable, s, i_app, dt)?;
    let mut rhs = reaction_rhs(cable, s, p, i_app, dt);
    let kue = cable.k_i.mul_vec(&s.ue);
    rhs.iter_mut().zip(&kue).for_each(|(r, k)| *r -= k);
    let vm = implicit_operator(cable, &cable.k_i, dt).solve(&rhs)?;
    let ue = cable.extracellular(&vm)?;
    let w = gate_update(s, p, dt);
    Ok(ElectroState { vm, ue, w })
}

/// Monodomain fallback (`sigma_e -> infinity` limit of the bidomain
/// elimination in 1D uses the harmonic-mean conductivity).
pub fn monodomain_step(
    cable: &Cable,
    s: &ElectroState,
    p: &MsParams,
    i_app: &[f64],
    dt: f64,
) -> Result<ElectroState> {
    check_step_inputs(cable, s, i_app, dt)?;
    let rhs = reaction_rhs(cable, s, p, i_app, dt);
    let vm = implicit_operator(cable, &cable.k_mono, dt).solve(&rhs)?;
    let ue = cable.extracellular(&vm)?;
    let w = gate_update(s, p, dt);
    Ok(ElectroState { vm, ue, w })
}

fn check_step_inputs(cable: &Cable, s: &ElectroState, i_app: &[f64], dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::config(format!("electrical time step must be positive, got {dt}")));
    }
    let n = cable.n_nodes();
    for (what, len) in [("vm", s.vm.len()), ("ue", s.ue.len()), ("w", s.w.len()), ("i_app", i_app.len())] {
        if len != n {
            return Err(Error::Dimension {
                context: match what {
                    "vm" => "electro state vm",
                    "ue" => "electro state ue",
                    "w" => "electro state w",
                    _ => "applied current",
                },
                expected: n,
                got: len,
            });
        }
    }
    Ok(())
}
