use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::diagnostics::ProbeRecord;
use super::observation::StackedObservation;
use crate::error::{Error, Result};
use crate::filters::{
    pod_roukf_step, roukf_step, simplex_sigma_points, FilterState, LowRankCovariance, ObservationRecord, ParamSet,
    PodEmbedding,
};
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

/// Prior spread of the reduced filter. `U_⋄` is diagonal with `1/std²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledObserverConfig {
    /// Standard deviation of the POD coordinates, in the normalized state units.
    pub alpha_std: f64,
    /// Standard deviation of the log-2 parameters.
    pub param_std: f64,
    /// Sample the POD coordinates along with the parameters.
    pub joint: bool,
    /// Keep the estimated state after every step.
    #[serde(default)]
    pub keep_states: bool,
}

impl Default for CoupledObserverConfig {
    fn default() -> Self {
        CoupledObserverConfig { alpha_std: 0.4, param_std: 1.0, joint: true, keep_states: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub time: f64,
    pub params: Vec<f64>,
    pub physical: Vec<f64>,
    /// Weighted innovation norm per observation block, in block order.
    pub innovation: Vec<f64>,
    pub u_min: f64,
}

#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub names: Vec<String>,
    pub blocks: Vec<String>,
    pub rows: Vec<EstimateRow>,
    pub final_estimate: AugmentedState,
    pub probes: Vec<ProbeRecord>,
    pub states: Vec<DVector<f64>>,
}

impl EstimationReport {
    pub fn final_physical(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.physical.as_slice())
    }
}

pub(crate) fn block_norms(obs: &StackedObservation, innov: Option<&DVector<f64>>, w: &DVector<f64>) -> Vec<f64> {
    obs.names()
        .iter()
        .map(|n| {
            let r = obs.range(n).unwrap_or(0..0);
            innov.map_or(0.0, |v| r.map(|c| w[c] * v[c] * v[c]).sum::<f64>().sqrt())
        })
        .collect()
}

/// Reduced UKF over `(α, θ)` (or `θ` alone) on any transition; each record
/// is assimilated at the end of one transition window.
#[allow(clippy::too_many_arguments)]
pub fn coupled_roukf_run<T>(
    op: &T,
    obs: &StackedObservation,
    records: &[ObservationRecord],
    x0: AugmentedState,
    t0: f64,
    emb: Option<&PodEmbedding>,
    params: &ParamSet,
    cfg: &CoupledObserverConfig,
) -> Result<EstimationReport>
where
    T: TransitionOperator + ?Sized,
{
    op.check_layout(&x0)?;
    if params.len() != x0.n_params() {
        return Err(Error::Dimension { context: "estimated parameters", expected: x0.n_params(), got: params.len() });
    }
    if !(cfg.param_std > 0.0) || (cfg.joint && emb.is_some() && !(cfg.alpha_std > 0.0)) {
        return Err(Error::config("prior standard deviations must be positive"));
    }
    let n = x0.state_dim();
    let p = x0.n_params();
    let use_alpha = cfg.joint && emb.is_some_and(|e| e.rank() > 0);
    let (l0, r) = match emb {
        Some(e) => (e.initial_extension(n, p, use_alpha)?, if use_alpha { e.rank() } else { 0 }),
        None => {
            let mut l = DMatrix::zeros(n + p, p);
            for k in 0..p {
                l[(n + k, k)] = 1.0;
            }
            (l, 0)
        }
    };
    let d = r + p;
    let u0 = DMatrix::from_fn(d, d, |i, j| match (i == j, i < r) {
        (false, _) => 0.0,
        (true, true) => 1.0 / (cfg.alpha_std * cfg.alpha_std),
        (true, false) => 1.0 / (cfg.param_std * cfg.param_std),
    });
    let sp = simplex_sigma_points(d);
    let mut f = FilterState::low_rank(x0, LowRankCovariance::new(l0, u0)?, t0)?;
    let window = op.step_length();
    let mut rows = Vec::with_capacity(records.len());
    let mut probes = Vec::new();
    let mut states = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        let expected = f.time + window;
        if (rec.time - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(Error::config(format!(
                "observation {k} at t = {} does not close the window ending at {expected}",
                rec.time
            )));
        }
        let (next, report) = if d == 0 {
            let x = op.step(&f.estimate, f.time).map_err(|e| e.at_step(k))?;
            let mut g = f.clone();
            g.estimate = x;
            g.time = expected;
            g.step += 1;
            (g, Default::default())
        } else if let Some(e) = emb {
            let (g, rep, _) = pod_roukf_step(&f, op, obs, Some(rec), e, &sp).map_err(|e| e.at_step(k))?;
            (g, rep)
        } else {
            roukf_step(&f, op, obs, Some(rec), &sp).map_err(|e| e.at_step(k))?
        };
        if p > 0 {
            if let (Some(hl), Some(innov)) = (&report.hl, &report.innovation) {
                let l = &next.low_rank_covariance()?.l;
                probes.push(ProbeRecord {
                    time: rec.time,
                    params: next.estimate.params.clone(),
                    y_mean: &rec.value - innov,
                    hl: hl.columns(r, p).into_owned(),
                    l_theta: l.view((n, r), (p, p)).into_owned(),
                    weights: rec.noise_norm.clone(),
                    noise_norm: obs.noise_norm(rec.time),
                });
            }
        }
        let est = &next.estimate;
        if est.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("estimate is not finite", format!("after observation at t = {}", rec.time)).at_step(k));
        }
        rows.push(EstimateRow {
            time: rec.time,
            params: est.params.iter().cloned().collect(),
            physical: params.to_physical(&est.params)?.into_iter().map(|(_, v)| v).collect(),
            innovation: block_norms(obs, report.innovation.as_ref(), &rec.noise_norm),
            u_min: report.u_min_eigenvalue.unwrap_or(f64::NAN),
        });
        if cfg.keep_states {
            states.push(est.state.values.clone());
        }
        f = next;
    }
    Ok(EstimationReport {
        names: params.names().map(String::from).collect(),
        blocks: obs.names().iter().map(|s| s.to_string()).collect(),
        rows,
        final_estimate: f.estimate,
        probes,
        states,
    })
}
