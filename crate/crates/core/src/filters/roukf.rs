use nalgebra::{DMatrix, DVector};

use super::{
    observe_particles, propagate_particles, weighted_norm, Covariance, FilterState, LowRankCovariance,
    ObservationRecord, SigmaPointSet, StepReport,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize, weighted_mean};
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

/// Sampled and propagated particles of one reduced step.
pub(crate) struct Prediction {
    pub particles: Vec<AugmentedState>,
    pub flats: Vec<DVector<f64>>,
    pub mean: DVector<f64>,
    pub time: f64,
}

pub(crate) fn sample_and_predict<T>(f: &FilterState, op: &T, sp: &SigmaPointSet) -> Result<Prediction>
where
    T: TransitionOperator + ?Sized,
{
    op.check_layout(&f.estimate)?;
    let cov = f.low_rank_covariance()?;
    if sp.dim() != cov.rank() {
        return Err(Error::Dimension {
            context: "reduced sigma points",
            expected: cov.rank(),
            got: sp.dim(),
        });
    }
    let ct = cov.sampling_factor()?;
    let lct = &cov.l * ct;
    let x0 = f.estimate.to_flat();
    let sampled = (0..sp.len())
        .map(|i| f.estimate.with_flat(&(&x0 + &lct * sp.point(i))))
        .collect::<Result<Vec<_>>>()?;
    let particles = propagate_particles(op, &sampled, f.time)?;
    let flats: Vec<DVector<f64>> = particles.iter().map(|x| x.to_flat()).collect();
    let mean = weighted_mean(&flats, &sp.weights);
    Ok(Prediction {
        particles,
        flats,
        mean,
        time: f.time + op.step_length(),
    })
}

/// Innovation, `HL` and the corrected reduced matrix of one observation.
pub(crate) struct Correction {
    pub hl: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// `U⁻¹ (HL)ᵀ W (y - ŷ⁻)`
    pub coeffs: DVector<f64>,
    pub innovation: DVector<f64>,
    pub innovation_norm: f64,
}

pub(crate) fn reduced_correction<O>(
    obs: &O,
    pred: &Prediction,
    y: &ObservationRecord,
    sp: &SigmaPointSet,
) -> Result<Correction>
where
    O: ObservationOperator + ?Sized,
{
    y.check_dim(obs)?;
    let ys = observe_particles(obs, &pred.particles, pred.time)?;
    let y_mean = weighted_mean(&ys, &sp.weights);
    let hl = sp.spread(&ys);
    let d = sp.dim();
    let whl = DMatrix::from_fn(hl.nrows(), d, |i, j| y.noise_norm[i] * hl[(i, j)]);
    let mut u = DMatrix::identity(d, d) + hl.transpose() * &whl;
    symmetrize(&mut u);
    let innovation = &y.value - y_mean;
    let coeffs = cholesky(&u, "U")?.solve(&(whl.transpose() * &innovation));
    Ok(Correction {
        innovation_norm: weighted_norm(&innovation, &y.noise_norm),
        hl,
        u,
        coeffs,
        innovation,
    })
}

/// One step of the reduced-order UKF with `P = L U⁻¹ Lᵀ`.
///
/// Sampling `x̂ + L Cᵀ I_i` with `Cᵀ C = U⁻¹`, prediction of all particles,
/// then `L = [x*] D_α Iᵀ`, `U = 1 + (HL)ᵀ W (HL)` and the update
/// `x̂⁺ = x̂⁻ + L U⁻¹ (HL)ᵀ W (y - ŷ⁻)`. Without an informative observation
/// `U` resets to the identity because `L` already carries the spread.
pub fn roukf_step<T, O>(
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
    let pred = sample_and_predict(f, op, sp)?;
    let l = sp.spread(&pred.flats);
    let mut x = pred.mean.clone();
    let mut report = StepReport::default();
    let u = match y.filter(|y| y.is_informative()) {
        Some(y) => {
            let c = reduced_correction(obs, &pred, y, sp)?;
            x += &l * &c.coeffs;
            report.innovation = Some(c.innovation);
            report.innovation_norm = c.innovation_norm;
            report.hl = Some(c.hl);
            c.u
        }
        None => DMatrix::identity(sp.dim(), sp.dim()),
    };
    let cov = LowRankCovariance::new(l, u)?;
    report.u_min_eigenvalue = Some(cov.min_eigenvalue());
    Ok((
        FilterState {
            estimate: f.estimate.with_flat(&x)?,
            covariance: Covariance::LowRank(cov),
            step: f.step + 1,
            time: pred.time,
        },
        report,
    ))
}
