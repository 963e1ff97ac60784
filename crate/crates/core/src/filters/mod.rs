//! Sequential estimators for any transition/observation pair: discrete EKF
//! and UKF with full covariance, and their reduced-order variants RoEKF and
//! RoUKF working on `P = L U⁻¹ Lᵀ`, including the POD-split RoUKF.

mod ekf;
mod lowrank;
mod pod_roukf;
mod reparam;
mod roekf;
mod roukf;
mod sigma;
mod tangent;
mod ukf;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use ekf::{ekf_step, JacobianSource};
pub use lowrank::LowRankCovariance;
pub use pod_roukf::{pod_roukf_step, PodEmbedding, PodSplit};
pub use reparam::{reparametrize, to_physical, ParamSet};
pub use roekf::roekf_step;
pub use roukf::roukf_step;
pub(crate) use roukf::sample_and_predict;
pub use sigma::{simplex_sigma_points, SigmaPointSet};
pub use tangent::{directional_derivative, finite_difference_jacobian};
pub use ukf::ukf_step;

use crate::error::{Error, Result};
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(DMatrix<f64>),
    LowRank(LowRankCovariance),
}

/// Estimate, covariance and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub estimate: AugmentedState,
    pub covariance: Covariance,
    pub step: usize,
    pub time: f64,
}

impl FilterState {
    pub fn full(estimate: AugmentedState, p: DMatrix<f64>, time: f64) -> Result<Self> {
        if p.nrows() != estimate.dim() || p.ncols() != estimate.dim() {
            return Err(Error::Dimension {
                context: "full covariance",
                expected: estimate.dim(),
                got: p.nrows(),
            });
        }
        Ok(FilterState {
            estimate,
            covariance: Covariance::Full(p),
            step: 0,
            time,
        })
    }

    pub fn low_rank(estimate: AugmentedState, cov: LowRankCovariance, time: f64) -> Result<Self> {
        if cov.l.nrows() != estimate.dim() {
            return Err(Error::Dimension {
                context: "extension matrix rows",
                expected: estimate.dim(),
                got: cov.l.nrows(),
            });
        }
        Ok(FilterState {
            estimate,
            covariance: Covariance::LowRank(cov),
            step: 0,
            time,
        })
    }

    pub fn full_covariance(&self) -> Result<&DMatrix<f64>> {
        match &self.covariance {
            Covariance::Full(p) => Ok(p),
            Covariance::LowRank(_) => Err(Error::config("filter expects a full covariance")),
        }
    }

    pub fn low_rank_covariance(&self) -> Result<&LowRankCovariance> {
        match &self.covariance {
            Covariance::LowRank(c) => Ok(c),
            Covariance::Full(_) => Err(Error::config("filter expects a low-rank covariance")),
        }
    }
}

/// One observation `y_n` with its diagonal noise norm `W_n`.
///
/// Channels with a zero weight carry no information; a record whose weights
/// are all zero is skipped (pure prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub time: f64,
    pub value: DVector<f64>,
    pub noise_norm: DVector<f64>,
}

impl ObservationRecord {
    pub fn new(time: f64, value: DVector<f64>, noise_norm: DVector<f64>) -> Result<Self> {
        if value.len() != noise_norm.len() {
            return Err(Error::Dimension {
                context: "observation noise norm",
                expected: value.len(),
                got: noise_norm.len(),
            });
        }
        if noise_norm.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("observation weights must be nonnegative".into()));
        }
        Ok(ObservationRecord { time, value, noise_norm })
    }

    pub fn is_informative(&self) -> bool {
        self.noise_norm.iter().any(|w| *w > 0.0)
    }

    pub fn active_channels(&self) -> Vec<usize> {
        (0..self.noise_norm.len()).filter(|&i| self.noise_norm[i] > 0.0).collect()
    }

    pub(crate) fn check_dim<O: ObservationOperator + ?Sized>(&self, obs: &O) -> Result<()> {
        if self.value.len() != obs.output_dim() {
            return Err(Error::Dimension {
                context: "observation record",
                expected: obs.output_dim(),
                got: self.value.len(),
            });
        }
        Ok(())
    }
}

/// Per-step diagnostics shared by all filters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    /// `y - ŷ⁻` when an informative observation was assimilated.
    pub innovation: Option<DVector<f64>>,
    /// Weighted innovation norm `sqrt(innovᵀ W innov)`.
    pub innovation_norm: f64,
    /// Empirical `HL` of the reduced filters.
    pub hl: Option<DMatrix<f64>>,
    /// Smallest eigenvalue of `U` after the step (reduced filters).
    pub u_min_eigenvalue: Option<f64>,
}

pub(crate) fn weighted_norm(innov: &DVector<f64>, w: &DVector<f64>) -> f64 {
    innov.iter().zip(w.iter()).map(|(e, w)| w * e * e).sum::<f64>().sqrt()
}

/// Propagates every particle through one transition; output order matches input.
pub(crate) fn propagate_particles<T: TransitionOperator + ?Sized>(
    op: &T,
    particles: &[AugmentedState],
    t: f64,
) -> Result<Vec<AugmentedState>> {
    particles.par_iter().map(|x| op.step(x, t)).collect()
}

pub(crate) fn observe_particles<O: ObservationOperator + ?Sized>(
    obs: &O,
    particles: &[AugmentedState],
    t: f64,
) -> Result<Vec<DVector<f64>>> {
    particles.iter().map(|x| obs.observe(x, t)).collect()
}
