use nalgebra::DMatrix;

use super::{
    directional_derivative, weighted_norm, Covariance, FilterState, JacobianSource, LowRankCovariance,
    ObservationRecord, StepReport,
};
use crate::error::Result;
use crate::linalg::{cholesky, symmetrize};
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

/// Applies the tangent of `g` at `x` to every column of `l`.
fn tangent_columns<F>(g: &F, x: &AugmentedState, l: &DMatrix<f64>, rows: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&AugmentedState) -> Result<nalgebra::DVector<f64>>,
{
    let mut out = DMatrix::zeros(rows, l.ncols());
    for j in 0..l.ncols() {
        let col = directional_derivative(g, x, &l.column(j).into_owned())?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// One step of the reduced-order EKF: `L⁺ = dA L`, `U⁺ = U + (HL)ᵀ W (HL)`,
/// gain `L U⁻¹ (HL)ᵀ W`.
///
/// With `L = [0; 1]` on the parameters the parameter rows stay the identity
/// and the state rows follow the sensitivity recursion `L⁺ = A L + ∂_θ A`.
pub fn roekf_step<T, O>(
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
    let cov = f.low_rank_covariance()?;
    let n = f.estimate.dim();
    let l_new = match jac {
        JacobianSource::FiniteDifference => {
            tangent_columns(&|z: &AugmentedState| Ok(op.step(z, f.time)?.to_flat()), &f.estimate, &cov.l, n)?
        }
        JacobianSource::Supplied { a, .. } => a * &cov.l,
    };
    let x_pred = op.step(&f.estimate, f.time)?;
    let t1 = f.time + op.step_length();

    let mut report = StepReport::default();
    let mut u = cov.u.clone();
    let mut estimate = x_pred;
    if let Some(y) = y.filter(|y| y.is_informative()) {
        y.check_dim(obs)?;
        let hl = match jac {
            JacobianSource::FiniteDifference => tangent_columns(
                &|z: &AugmentedState| obs.observe(z, t1),
                &estimate,
                &l_new,
                obs.output_dim(),
            )?,
            JacobianSource::Supplied { h, .. } => h * &l_new,
        };
        let whl = DMatrix::from_fn(hl.nrows(), hl.ncols(), |i, j| y.noise_norm[i] * hl[(i, j)]);
        u += hl.transpose() * &whl;
        symmetrize(&mut u);
        let innov = &y.value - obs.observe(&estimate, t1)?;
        let rhs = whl.transpose() * &innov;
        let coeffs = cholesky(&u, "U")?.solve(&rhs);
        estimate = estimate.with_flat(&(estimate.to_flat() + &l_new * coeffs))?;
        report.innovation_norm = weighted_norm(&innov, &y.noise_norm);
        report.innovation = Some(innov);
        report.hl = Some(hl);
    }
    let cov = LowRankCovariance::new(l_new, u)?;
    report.u_min_eigenvalue = Some(cov.min_eigenvalue());
    Ok((
        FilterState {
            estimate,
            covariance: Covariance::LowRank(cov),
            step: f.step + 1,
            time: t1,
        },
        report,
    ))
}
