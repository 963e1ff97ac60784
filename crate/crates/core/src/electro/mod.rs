//! Cardiac electrophysiology on a 1D cable: Mitchell-Schaeffer ionic model,
//! bidomain (or monodomain) diffusion, stimulus protocol and lead observations.

mod cable;
mod ionic;
mod leads;
mod stimulus;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use cable::{bidomain_step, monodomain_step, Cable, CableConfig, CableModel, ElectroState, RegionPartition};
pub use ionic::{ms_gate_rhs, ms_ion_current, MsParams};
pub use leads::{lead_observe, LeadField, LeadMode, LEAD_ATTENUATION};
pub use stimulus::StimulusProtocol;

use crate::error::{Error, Result};
use crate::filters::ParamSet;
use crate::statespace::{AugmentedState, Layout, ObservationOperator, StateVector, TransitionOperator};

/// Region-level ionic constants; expanded to [`MsParams`] per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonicConfig {
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    /// One value per region of the cable partition.
    pub tau_close: Vec<f64>,
    pub v_gate: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for IonicConfig {
    fn default() -> Self {
        IonicConfig {
            tau_in: 0.8,
            tau_out: 18.0,
            tau_open: 120.0,
            tau_close: vec![140.0, 105.0, 105.0, 120.0],
            v_gate: -67.0,
            v_min: -80.0,
            v_max: 20.0,
        }
    }
}

impl IonicConfig {
    pub fn resolve(&self, regions: &RegionPartition) -> Result<MsParams> {
        if self.tau_close.len() != regions.names.len() {
            return Err(Error::config(format!(
                "electro.tau_close has {} values for {} regions",
                self.tau_close.len(),
                regions.names.len()
            )));
        }
        let p = MsParams {
            tau_in: self.tau_in,
            tau_out: self.tau_out,
            tau_open: self.tau_open,
            tau_close: regions.expand(&self.tau_close),
            v_gate: self.v_gate,
            v_min: self.v_min,
            v_max: self.v_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// Overrides a named constant (`tau_in`, `tau_close.endo`, ...).
    pub fn set(&mut self, name: &str, value: f64, regions: &RegionPartition) -> Result<()> {
        match name {
            "tau_in" => self.tau_in = value,
            "tau_out" => self.tau_out = value,
            "tau_open" => self.tau_open = value,
            _ => {
                let region = name
                    .strip_prefix("tau_close.")
                    .ok_or_else(|| Error::config(format!("unknown electrical parameter `{name}`")))?;
                let k = regions
                    .index(region)
                    .ok_or_else(|| Error::config(format!("unknown region `{region}`")))?;
                self.tau_close[k] = value;
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str, regions: &RegionPartition) -> Result<f64> {
        match name {
            "tau_in" => Ok(self.tau_in),
            "tau_out" => Ok(self.tau_out),
            "tau_open" => Ok(self.tau_open),
            _ => {
                let region = name
                    .strip_prefix("tau_close.")
                    .ok_or_else(|| Error::config(format!("unknown electrical parameter `{name}`")))?;
                let k = regions
                    .index(region)
                    .ok_or_else(|| Error::config(format!("unknown region `{region}`")))?;
                Ok(self.tau_close[k])
            }
        }
    }
}

pub const DEFAULT_PARAM_BOUND: f64 = 3.0;

/// Electrical transition over one observation window, state `(vm, w)`.
#[derive(Debug, Clone)]
pub struct ElectroModel {
    pub cable: Cable,
    pub ionic: IonicConfig,
    pub stimulus: StimulusProtocol,
    pub dt: f64,
    pub substeps: usize,
    pub params: ParamSet,
    /// Particles see the log2 parameters clipped to `[-param_bound, param_bound]`.
    pub param_bound: f64,
    layout: Arc<Layout>,
}

impl ElectroModel {
    pub fn new(
        cable: Cable,
        ionic: IonicConfig,
        stimulus: StimulusProtocol,
        dt: f64,
        substeps: usize,
        params: ParamSet,
    ) -> Result<Self> {
        if !(dt > 0.0) || substeps == 0 {
            return Err(Error::config("electro.dt_ms must be positive with at least one sub-step"));
        }
        let n = cable.n_nodes();
        if stimulus.n_nodes != n || stimulus.nodes.iter().any(|&i| i >= n) {
            return Err(Error::config("electro.stimulus.nodes outside the cable"));
        }
        for name in params.names() {
            ionic.get(name, &cable.config.regions)?;
        }
        ionic.resolve(&cable.config.regions)?;
        let layout = Arc::new(Layout::new([("vm", n), ("w", n)])?);
        Ok(ElectroModel {
            cable,
            ionic,
            stimulus,
            dt,
            substeps,
            params,
            param_bound: DEFAULT_PARAM_BOUND,
            layout,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.cable.n_nodes()
    }

    pub fn state_layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Ionic constants with the reparametrized block applied.
    pub fn ms_params(&self, p: &DVector<f64>) -> Result<MsParams> {
        let mut ionic = self.ionic.clone();
        let p = p.map(|v| v.clamp(-self.param_bound, self.param_bound));
        for (name, value) in self.params.to_physical(&p)? {
            ionic.set(&name, value, &self.cable.config.regions)?;
        }
        ionic.resolve(&self.cable.config.regions)
    }

    pub fn resting(&self) -> Result<ElectroState> {
        Ok(ElectroState::resting(self.n_nodes(), &self.ionic.resolve(&self.cable.config.regions)?))
    }

    /// Advances `n_sub` electrical steps from `t0`.
    pub fn advance(&self, s: ElectroState, ms: &MsParams, t0: f64, n_sub: usize) -> Result<ElectroState> {
        self.advance_range(s, ms, t0, 0, n_sub)
    }

    /// Steps `first..first + count` of a window starting at `t0`.
    pub fn advance_range(
        &self,
        s: ElectroState,
        ms: &MsParams,
        t0: f64,
        first: usize,
        count: usize,
    ) -> Result<ElectroState> {
        let mut s = s;
        for k in first..first + count {
            let t = t0 + k as f64 * self.dt;
            s = self.cable.step(&s, ms, &self.stimulus.current(t), self.dt)?;
        }
        Ok(s)
    }

    /// Electrical fields of `x` projected onto `[v_min, v_max] x [0, w_max]`,
    /// with `ue` recomputed from `vm`.
    pub fn electro_state(&self, x: &AugmentedState) -> Result<ElectroState> {
        let (lo, hi) = (self.ionic.v_min, self.ionic.v_max);
        let w_max = (hi - lo).powi(-2);
        let vm: Vec<f64> = x.state.segment("vm")?.iter().map(|v| v.clamp(lo, hi)).collect();
        let w: Vec<f64> = x.state.segment("w")?.iter().map(|v| v.clamp(0.0, w_max)).collect();
        let ue = self.cable.extracellular(&vm)?;
        Ok(ElectroState { vm, ue, w })
    }

    pub fn augmented(&self, s: &ElectroState, params: DVector<f64>) -> AugmentedState {
        let mut values = Vec::with_capacity(2 * s.vm.len());
        values.extend_from_slice(&s.vm);
        values.extend_from_slice(&s.w);
        AugmentedState::new(
            StateVector::new(DVector::from_vec(values), self.layout.clone()).expect("layout sized from cable"),
            params,
        )
    }
}

impl TransitionOperator for ElectroModel {
    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn n_params(&self) -> usize {
        self.params.len()
    }

    fn step_length(&self) -> f64 {
        self.dt * self.substeps as f64
    }

    fn step(&self, x: &AugmentedState, t: f64) -> Result<AugmentedState> {
        self.check_layout(x)?;
        let ms = self.ms_params(&x.params)?;
        let s = self.advance(self.electro_state(x)?, &ms, t, self.substeps)?;
        Ok(self.augmented(&s, x.params.clone()))
    }
}

/// Lead observations `y^e = H^e x^e` with norm `W^e = dt_obs / sigma^2`.
#[derive(Debug, Clone)]
pub struct LeadObservation {
    pub cable: Cable,
    pub leads: LeadField,
    pub dt_obs: f64,
    pub sigma: f64,
}

impl ObservationOperator for LeadObservation {
    fn output_dim(&self) -> usize {
        self.leads.n_leads()
    }

    fn observe(&self, x: &AugmentedState, _t: f64) -> Result<DVector<f64>> {
        let vm = x.state.segment("vm")?;
        let y = match self.leads.mode {
            LeadMode::Lead => self.leads.apply(vm, &self.cable.extracellular(vm)?),
            LeadMode::Electrode => self.leads.apply(vm, vm),
        };
        Ok(DVector::from_vec(y))
    }

    fn noise_norm(&self, _t: f64) -> DVector<f64> {
        DVector::from_element(self.output_dim(), self.dt_obs / (self.sigma * self.sigma))
    }
}
