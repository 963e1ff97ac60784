use nalgebra::{DMatrix, DVector};

use super::ekf::{check_psd, select, select_rows};
use super::{
    observe_particles, propagate_particles, weighted_norm, Covariance, FilterState, ObservationRecord,
    SigmaPointSet, StepReport,
};
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, spd_solve, symmetrize, weighted_mean};
use crate::statespace::{ObservationOperator, TransitionOperator};

fn centered(columns: &[DVector<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(mean.len(), columns.len());
    for (i, c) in columns.iter().enumerate() {
        m.set_column(i, &(c - mean));
    }
    m
}

/// One sampling-prediction-correction step of the discrete UKF.
///
/// Particles `x̂ + √P I_i` use the lower Cholesky factor of `P`, or its
/// symmetric square root when `P` is only semidefinite. The predicted
/// covariance is the weighted spread of the propagated particles around
/// their mean.
pub fn ukf_step<T, O>(
    f: &FilterState,
    op: &T,
    obs: &O,
    y: Option<&ObservationRecord>,
    sp: &SigmaPointSet,
) -> Result<(FilterState, StepReport)>
where
    T: TransitionOperator + ?Sized,
    O: ObservationOperator + ?Sized,
{
    op.check_layout(&f.estimate)?;
    let p = f.full_covariance()?;
    let n = f.estimate.dim();
    if sp.dim() != n {
        return Err(Error::Dimension {
            context: "UKF sigma points",
            expected: n,
            got: sp.dim(),
        });
    }
    let sqrt_p = psd_sqrt(p, "UKF covariance")?;
    let x0 = f.estimate.to_flat();
    let particles = (0..sp.len())
        .map(|i| f.estimate.with_flat(&(&x0 + &sqrt_p * sp.point(i))))
        .collect::<Result<Vec<_>>>()?;
    let predicted = propagate_particles(op, &particles, f.time)?;
    let t1 = f.time + op.step_length();

    let flats: Vec<DVector<f64>> = predicted.iter().map(|x| x.to_flat()).collect();
    let x_mean = weighted_mean(&flats, &sp.weights);
    let dx = centered(&flats, &x_mean);
    let dxw = DMatrix::from_fn(n, sp.len(), |r, c| dx[(r, c)] * sp.weights[c]);
    let mut p_pred = &dxw * dx.transpose();
    symmetrize(&mut p_pred);

    let mut report = StepReport::default();
    let mut x_new = x_mean;
    let mut p_new = p_pred.clone();
    if let Some(y) = y.filter(|y| y.is_informative()) {
        y.check_dim(obs)?;
        let ys = observe_particles(obs, &predicted, t1)?;
        let y_mean = weighted_mean(&ys, &sp.weights);
        let innov_full = &y.value - &y_mean;
        let active = y.active_channels();
        let dy = select_rows(&centered(&ys, &y_mean), &active);
        let w = select(&y.noise_norm, &active);
        let innov = select(&innov_full, &active);
        let p_xy = &dxw * dy.transpose();
        let dyw = DMatrix::from_fn(dy.nrows(), sp.len(), |r, c| dy[(r, c)] * sp.weights[c]);
        let mut p_y = &dyw * dy.transpose();
        for i in 0..w.len() {
            p_y[(i, i)] += 1.0 / w[i];
        }
        symmetrize(&mut p_y);
        let s_inv_pyx = spd_solve(&p_y, &p_xy.transpose(), "UKF innovation covariance")?;
        let gain = s_inv_pyx.transpose();
        x_new += &gain * innov;
        p_new = &p_pred - &p_xy * s_inv_pyx;
        symmetrize(&mut p_new);
        check_psd(&p_new, "UKF covariance")?;
        report.innovation_norm = weighted_norm(&innov_full, &y.noise_norm);
        report.innovation = Some(innov_full);
    }
    Ok((
        FilterState {
            estimate: f.estimate.with_flat(&x_new)?,
            covariance: Covariance::Full(p_new),
            step: f.step + 1,
            time: t1,
        },
        report,
    ))
}
