use nalgebra::{DMatrix, DVector};

use super::{finite_difference_jacobian, weighted_norm, FilterState, ObservationRecord, StepReport};
use crate::error::{Error, Result};
use crate::linalg::{spd_solve, symmetrize};
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

/// Tangent operators on the flattened augmented state.
#[derive(Debug, Clone)]
pub enum JacobianSource {
    FiniteDifference,
    /// `dA` (square, augmented) and `dH` (outputs x augmented).
    Supplied { a: DMatrix<f64>, h: DMatrix<f64> },
}

impl JacobianSource {
    fn transition<T: TransitionOperator + ?Sized>(&self, op: &T, x: &AugmentedState, t: f64) -> Result<DMatrix<f64>> {
        match self {
            JacobianSource::FiniteDifference => {
                finite_difference_jacobian(&|z: &AugmentedState| Ok(op.step(z, t)?.to_flat()), x)
            }
            JacobianSource::Supplied { a, .. } => Ok(a.clone()),
        }
    }

    fn observation<O: ObservationOperator + ?Sized>(&self, obs: &O, x: &AugmentedState, t: f64) -> Result<DMatrix<f64>> {
        match self {
            JacobianSource::FiniteDifference => finite_difference_jacobian(&|z: &AugmentedState| obs.observe(z, t), x),
            JacobianSource::Supplied { h, .. } => Ok(h.clone()),
        }
    }
}

/// Rows of `m` (or entries of `v`) on the listed channels.
pub(crate) fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub(crate) fn select(v: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_fn(rows.len(), |i, _| v[rows[i]])
}

/// Rejects a covariance with clearly negative spectrum after an update.
pub(crate) fn check_psd(p: &DMatrix<f64>, what: &str) -> Result<()> {
    if p.nrows() == 0 {
        return Ok(());
    }
    let eig = p.clone().symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || min < -1e-8 * max.abs().max(1e-300) {
        return Err(Error::numerical(
            format!("{what} lost positive semidefiniteness"),
            format!("eigenvalues in [{min:.3e}, {max:.3e}] after symmetrization"),
        ));
    }
    Ok(())
}

/// One prediction-correction step of the discrete extended Kalman filter.
///
/// The prediction carries `f` from `f.time` to `f.time + op.step_length()`;
/// `y` is assimilated at the new time. Without model noise the blockwise
/// prediction of the augmented covariance reduces to `dA P dAᵀ`.
pub fn ekf_step<T, O>(
    f: &FilterState,
    op: &T,
    obs: &O,
    y: Option<&ObservationRecord>,
    jac: &JacobianSource,
) -> Result<(FilterState, StepReport)>
where
    T: TransitionOperator + ?Sized,
    O: ObservationOperator + ?Sized,
{
    op.check_layout(&f.estimate)?;
    let p = f.full_covariance()?;
    let a = jac.transition(op, &f.estimate, f.time)?;
    let x_pred = op.step(&f.estimate, f.time)?;
    let t1 = f.time + op.step_length();
    let mut p_pred = &a * p * a.transpose();
    symmetrize(&mut p_pred);

    let mut report = StepReport::default();
    let mut estimate = x_pred;
    let mut p_new = p_pred.clone();
    if let Some(y) = y.filter(|y| y.is_informative()) {
        y.check_dim(obs)?;
        let active = y.active_channels();
        let h_full = jac.observation(obs, &estimate, t1)?;
        let innov_full = &y.value - obs.observe(&estimate, t1)?;
        let h = select_rows(&h_full, &active);
        let innov = select(&innov_full, &active);
        let w = select(&y.noise_norm, &active);
        // S = H P⁻ Hᵀ + W⁻¹; P⁺ = P⁻ - P⁻Hᵀ S⁻¹ H P⁻, gain P⁺ Hᵀ W = P⁻ Hᵀ S⁻¹.
        let pht = &p_pred * h.transpose();
        let mut s = &h * &pht;
        for i in 0..w.len() {
            s[(i, i)] += 1.0 / w[i];
        }
        symmetrize(&mut s);
        let s_inv_hp = spd_solve(&s, &pht.transpose(), "innovation covariance")?;
        let s_inv_e = spd_solve(&s, &DMatrix::from_column_slice(innov.len(), 1, innov.as_slice()), "innovation covariance")?;
        let dx = &pht * s_inv_e;
        estimate = estimate.with_flat(&(estimate.to_flat() + dx.column(0)))?;
        p_new = &p_pred - &pht * s_inv_hp;
        symmetrize(&mut p_new);
        check_psd(&p_new, "EKF covariance")?;
        report.innovation_norm = weighted_norm(&innov_full, &y.noise_norm);
        report.innovation = Some(innov_full);
    }
    Ok((
        FilterState {
            estimate,
            covariance: super::Covariance::Full(p_new),
            step: f.step + 1,
            time: t1,
        },
        report,
    ))
}
