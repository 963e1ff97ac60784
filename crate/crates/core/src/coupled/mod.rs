//! One-way coupled electromechanical estimator: the electrical cable drives
//! the fiber through `u = a vm + b`; every particle carries its own
//! Luenberger-corrected mechanics while a reduced UKF acts on the POD
//! coordinates and the parameters.

mod diagnostics;
mod observation;
pub(crate) mod run;

use std::sync::Arc;

use nalgebra::DVector;

pub use diagnostics::{
    observability_gramian, parameter_probe, sensitivity_curves, GramianReport, ProbeRecord, SensitivityTrace,
};
pub use observation::StackedObservation;
pub use run::{coupled_roukf_run, CoupledObserverConfig, EstimateRow, EstimationReport};

use crate::electro::{ElectroModel, ElectroState};
use crate::error::{Error, Result};
use crate::mech::{luenberger_step, mech_segments, read_mech, write_mech, Fiber, GridTransfer, MeasuredRegion, MechState};
use crate::statespace::{AugmentedState, Layout, StateVector, TransitionOperator};

/// Time-stamped displacement records on the measured region.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MechData {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl MechData {
    pub fn new(records: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if records.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("displacement records must have increasing times"));
        }
        let (times, values) = records.into_iter().unzip();
        Ok(MechData { times, values })
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Record stamped at `t`, if any.
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        let tol = 1e-9 * (1.0 + t.abs());
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then(|| self.values[k].as_slice())
    }
}

/// Electrical and mechanical state with the parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub electro: ElectroState,
    pub mech: MechState,
    pub params: DVector<f64>,
}

/// Electrical cable plus Luenberger-observed fiber over one electrical
/// observation window. Layout `[vm, w, y, v, e_c, k_c, tau_c]`.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub electro: ElectroModel,
    pub fiber: Fiber,
    pub region: MeasuredRegion,
    pub gamma: f64,
    pub dt_mech: f64,
    mech_data: Option<Arc<MechData>>,
    transfer: GridTransfer,
    mech_substeps: usize,
    electro_per_mech: usize,
    layout: Arc<Layout>,
}

fn ratio(big: f64, small: f64, what: &str) -> Result<usize> {
    let k = (big / small).round();
    if k < 1.0 || (k * small - big).abs() > 1e-9 * big {
        return Err(Error::config(format!("{what} must be a whole multiple")));
    }
    Ok(k as usize)
}

impl CoupledModel {
    pub fn new(electro: ElectroModel, fiber: Fiber, region: MeasuredRegion, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::config("mech.gamma must be nonnegative"));
        }
        if region.nodes().iter().any(|&i| i >= fiber.n_nodes()) {
            return Err(Error::config("mech.measured_nodes outside the fiber"));
        }
        let dt_mech = fiber.config.dt;
        let window = electro.step_length();
        let mech_substeps = ratio(window, dt_mech, "the observation window over mech.dt_ms")?;
        let electro_per_mech = ratio(dt_mech, electro.dt, "mech.dt_ms over electro.dt_ms")?;
        let ec = electro.cable.coordinates();
        let mc = fiber.coordinates();
        if (ec[ec.len() - 1] - mc[mc.len() - 1]).abs() > 1e-9 * mc[mc.len() - 1] {
            return Err(Error::config("electrical and mechanical grids must cover the same interval"));
        }
        let transfer = GridTransfer::new(&ec, &mc)?;
        let n = electro.n_nodes();
        let mut parts: Vec<(&str, usize)> = vec![("vm", n), ("w", n)];
        parts.extend(mech_segments(fiber.n_nodes()));
        let layout = Arc::new(Layout::new(parts)?);
        Ok(CoupledModel {
            electro,
            fiber,
            region,
            gamma,
            dt_mech,
            mech_data: None,
            transfer,
            mech_substeps,
            electro_per_mech,
            layout,
        })
    }

    /// Attaches the displacement data feeding the Luenberger term.
    pub fn with_mech_data(mut self, data: Option<Arc<MechData>>) -> Self {
        self.mech_data = data;
        self
    }

    pub fn mech_data(&self) -> Option<&Arc<MechData>> {
        self.mech_data.as_ref()
    }

    pub fn electro_dim(&self) -> usize {
        2 * self.electro.n_nodes()
    }

    pub fn vm_on_fiber(&self, vm: &[f64]) -> Vec<f64> {
        self.transfer.apply(vm)
    }

    pub fn split(&self, x: &AugmentedState) -> Result<CoupledState> {
        Ok(CoupledState {
            electro: self.electro.electro_state(x)?,
            mech: read_mech(&x.state)?,
            params: x.params.clone(),
        })
    }

    pub fn join(&self, s: &CoupledState) -> Result<AugmentedState> {
        let mut state = StateVector::zeros(self.layout.clone());
        state.segment_mut("vm")?.copy_from_slice(&s.electro.vm);
        state.segment_mut("w")?.copy_from_slice(&s.electro.w);
        write_mech(&s.mech, &mut state)?;
        Ok(AugmentedState::new(state, s.params.clone()))
    }

    /// Electrical rest, mechanical zero state.
    pub fn resting(&self, params: DVector<f64>) -> Result<AugmentedState> {
        self.join(&CoupledState {
            electro: self.electro.resting()?,
            mech: MechState::zeros(self.fiber.n_nodes()),
            params,
        })
    }
}

/// Advances one window from `t`: for each mechanical sub-step the fiber
/// sees the interpolated `vm` at the sub-step start, with the Luenberger
/// term on sub-steps starting at a record time, then the cable advances by
/// its own sub-steps.
pub fn coupled_particle_step(x: &AugmentedState, data: Option<&MechData>, model: &CoupledModel, t: f64) -> Result<AugmentedState> {
    let s = model.split(x)?;
    let ms = model.electro.ms_params(&s.params)?;
    let mut electro = s.electro;
    let mut mech = s.mech;
    for j in 0..model.mech_substeps {
        let y_m = data.and_then(|d| d.at(t + j as f64 * model.dt_mech));
        if let Some(y) = y_m {
            if y.len() != model.region.len() {
                return Err(Error::Dimension { context: "displacement data", expected: model.region.len(), got: y.len() });
            }
        }
        let vm_f = model.vm_on_fiber(&electro.vm);
        mech = match y_m {
            Some(y) => luenberger_step(&mech, y, model.gamma, &vm_f, &model.fiber, &model.region, model.dt_mech)?,
            None => crate::mech::fiber_step(&mech, &vm_f, &model.fiber, model.dt_mech)?,
        };
        electro = model
            .electro
            .advance_range(electro, &ms, t, j * model.electro_per_mech, model.electro_per_mech)?;
    }
    model.join(&CoupledState { electro, mech, params: s.params })
}

impl TransitionOperator for CoupledModel {
    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn n_params(&self) -> usize {
        self.electro.params.len()
    }

    fn step_length(&self) -> f64 {
        self.electro.step_length()
    }

    fn step(&self, x: &AugmentedState, t: f64) -> Result<AugmentedState> {
        self.check_layout(x)?;
        coupled_particle_step(x, self.mech_data.as_deref(), self, t)
    }
}


#[cfg(test)]
mod tests {
    use super::testkit::small_model;
    use super::*;
    use crate::filters::ParamSet;
    use crate::mech::{fiber_step, mech_observe};
    use crate::statespace::{propagate, TimeGrid};

    #[test]
    fn record_lookup() {
        let d = MechData::new(vec![(0.0, vec![1.0]), (2.0, vec![2.0])]).unwrap();
        assert_eq!(d.at(0.0), Some(&[1.0][..]));
        assert_eq!(d.at(2.0 + 1e-12), Some(&[2.0][..]));
        assert_eq!(d.at(1.0), None);
        assert_eq!(d.at(3.0), None);
        assert!(MechData::new(vec![(1.0, vec![]), (1.0, vec![])]).is_err());
    }

    #[test]
    fn electrical_part_ignores_mechanics() {
        let params = ParamSet::new(vec![("tau_close.endo".into(), 100.0)]).unwrap();
        let m = small_model(40, 12, 0.1, 10, 1.0, params);
        let p = DVector::from_vec(vec![0.3]);
        let mut xc = m.resting(p.clone()).unwrap();
        let mut xe = m.electro.augmented(&m.electro.resting().unwrap(), p);
        for k in 0..60 {
            let t = k as f64;
            xc = m.step(&xc, t).unwrap();
            xe = m.electro.step(&xe, t).unwrap();
            let n = m.electro_dim();
            assert_eq!(xc.state.values.rows(0, n), xe.state.values.rows(0, n), "window {k}");
        }
        let mech = read_mech(&xc.state).unwrap();
        assert!(mech.disp.iter().any(|d| d.abs() > 0.0));
    }

    #[test]
    fn zero_gain_is_forward_model() {
        let mut m = small_model(40, 12, 0.1, 10, 1.0, ParamSet::empty());
        m.gamma = 0.0;
        let x0 = m.resting(DVector::zeros(0)).unwrap();
        let d = MechData::new(vec![(0.0, vec![3.0; 12])]).unwrap();
        let a = coupled_particle_step(&x0, Some(&d), &m, 0.0).unwrap();
        let b = coupled_particle_step(&x0, None, &m, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truth_initialized_particle_follows_truth() {
        let m = small_model(40, 12, 0.1, 10, 1.0, ParamSet::empty());
        let grid = TimeGrid::new(0.0, 1.0, 80, 1).unwrap();
        let truth = propagate(&m, &m.resting(DVector::zeros(0)).unwrap(), &grid).unwrap();
        let data = MechData::new(
            (0..80).map(|k| (k as f64, mech_observe(&read_mech(&truth[k].state).unwrap(), &m.region))).collect(),
        )
        .unwrap();
        let mut x = truth[0].clone();
        for k in 0..80 {
            x = coupled_particle_step(&x, Some(&data), &m, k as f64).unwrap();
            assert_eq!(x, truth[k + 1]);
        }
    }

    #[test]
    fn sparse_records_keep_truth() {
        let m = small_model(40, 12, 0.1, 10, 0.5, ParamSet::empty());
        let grid = TimeGrid::new(0.0, 1.0, 60, 1).unwrap();
        let truth = propagate(&m, &m.resting(DVector::zeros(0)).unwrap(), &grid).unwrap();
        let data = MechData::new(
            (0..60).step_by(3).map(|k| (k as f64, mech_observe(&read_mech(&truth[k].state).unwrap(), &m.region))).collect(),
        )
        .unwrap();
        let m = m.with_mech_data(Some(Arc::new(data)));
        let x = propagate(&m, &truth[0], &grid).unwrap();
        assert_eq!(x, truth);
    }

    #[test]
    fn equal_steps_match_nested_stepping() {
        let m = small_model(30, 10, 0.1, 5, 0.1, ParamSet::empty());
        let mut m = m;
        m.gamma = 0.02;
        let ym = vec![0.5; 10];
        let d = MechData::new((0..5).map(|j| (j as f64 * 0.1, ym.clone())).collect()).unwrap();
        let x0 = m.resting(DVector::zeros(0)).unwrap();
        let a = coupled_particle_step(&x0, Some(&d), &m, 0.0).unwrap();
        // Manual nesting with ratio one.
        let s = m.split(&x0).unwrap();
        let ms = m.electro.ms_params(&s.params).unwrap();
        let (mut e, mut mech) = (s.electro, s.mech);
        for j in 0..5 {
            let vmf = m.vm_on_fiber(&e.vm);
            mech = luenberger_step(&mech, &ym, 0.02, &vmf, &m.fiber, &m.region, 0.1).unwrap();
            e = m.electro.advance_range(e, &ms, 0.0, j, 1).unwrap();
        }
        let b = m.join(&CoupledState { electro: e, mech, params: s.params }).unwrap();
        assert_eq!(a, b);
        let _ = fiber_step;
    }

    #[test]
    fn contraction_follows_activation() {
        let mut m = small_model(100, 25, 0.1, 10, 1.0, ParamSet::empty());
        m.gamma = 0.0;
        let grid = TimeGrid::new(0.0, 1.0, 500, 1).unwrap();
        let traj = propagate(&m, &m.resting(DVector::zeros(0)).unwrap(), &grid).unwrap();
        let tip: Vec<f64> = traj.iter().map(|x| read_mech(&x.state).unwrap().disp[24]).collect();
        let vm_mid: Vec<f64> = traj.iter().map(|x| x.state.segment("vm").unwrap()[50]).collect();
        let act = vm_mid.iter().position(|v| *v > -60.0).unwrap();
        let onset = tip.iter().position(|d| *d < -0.01).unwrap();
        let peak = tip.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(onset > 0 && peak < -0.5, "onset {onset} peak {peak}");
        assert!(tip[act / 2].abs() < tip[onset.max(act)].abs() + 1e-12);
        let k_peak = tip.iter().position(|d| *d == peak).unwrap();
        assert!(k_peak > act, "peak {k_peak} before mid activation {act}");
    }
}
