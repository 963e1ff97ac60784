use nalgebra::{DMatrix, DVector};

use super::roukf::{reduced_correction, sample_and_predict};
use super::{Covariance, FilterState, LowRankCovariance, ObservationRecord, SigmaPointSet, StepReport};
use crate::error::{Error, Result};
use crate::linalg::weighted_mean;
use crate::statespace::{ObservationOperator, TransitionOperator};

/// A POD basis placed on a contiguous block of the state vector.
///
/// `alpha = Φᵀ M x[offset..offset+N]` with `M = diag(gram)`; everything
/// else in the state block belongs to `x⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct PodEmbedding {
    pub phi: DMatrix<f64>,
    pub gram: DVector<f64>,
    pub offset: usize,
}

impl PodEmbedding {
    pub fn new(phi: DMatrix<f64>, gram: DVector<f64>, offset: usize) -> Result<Self> {
        if gram.len() != phi.nrows() {
            return Err(Error::Dimension {
                context: "POD gramian",
                expected: phi.nrows(),
                got: gram.len(),
            });
        }
        Ok(PodEmbedding { phi, gram, offset })
    }

    pub fn rank(&self) -> usize {
        self.phi.ncols()
    }

    fn check(&self, state_dim: usize) -> Result<()> {
        if self.offset + self.phi.nrows() > state_dim {
            return Err(Error::Dimension {
                context: "POD block inside state",
                expected: state_dim,
                got: self.offset + self.phi.nrows(),
            });
        }
        Ok(())
    }

    /// `Φᵀ M x` on the embedded block of a flattened state.
    pub fn alpha(&self, flat: &DVector<f64>) -> DVector<f64> {
        let seg = flat.rows(self.offset, self.phi.nrows());
        self.phi.tr_mul(&seg.component_mul(&self.gram))
    }

    /// Adds `Φ a` on the embedded block.
    fn add_span(&self, flat: &mut DVector<f64>, a: &DVector<f64>) {
        let n = self.phi.nrows();
        flat.rows_mut(self.offset, n).gemv(1.0, &self.phi, a, 1.0);
    }

    /// Initial extension `[Φ; 1_θ]`, or `[0; 1_θ]` with `with_alpha = false`.
    pub fn initial_extension(&self, state_dim: usize, n_params: usize, with_alpha: bool) -> Result<DMatrix<f64>> {
        self.check(state_dim)?;
        let r = if with_alpha { self.rank() } else { 0 };
        let mut l = DMatrix::zeros(state_dim + n_params, r + n_params);
        if with_alpha {
            l.view_mut((self.offset, 0), (self.phi.nrows(), r)).copy_from(&self.phi);
        }
        for k in 0..n_params {
            l[(state_dim + k, r + k)] = 1.0;
        }
        Ok(l)
    }
}

/// Split factors `L = (L⊥, L^α, L^θ)` and the POD coordinates after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct PodSplit {
    pub alpha: DVector<f64>,
    pub l_perp: DMatrix<f64>,
    pub l_alpha: DMatrix<f64>,
    pub l_theta: DMatrix<f64>,
}

/// RoUKF step with the state split `x = x⊥ + Φα`.
///
/// Every particle runs the full model; predicted particles are projected
/// to `α_i = Φᵀ M x_i` and `x⊥_i = x_i - Φ α_i`, and the three blocks are
/// corrected with the same gain pattern `L_b U⁻¹ (HL)ᵀ W (y - ŷ⁻)`.
/// The stored extension is `[L⊥ + Φ L^α; L^θ]` in full coordinates.
pub fn pod_roukf_step<T, O>(
    f: &FilterState,
    op: &T,
    obs: &O,
    y: Option<&ObservationRecord>,
    emb: &PodEmbedding,
    sp: &SigmaPointSet,
) -> Result<(FilterState, StepReport, PodSplit)>
where
    T: TransitionOperator + ?Sized,
    O: ObservationOperator + ?Sized,
{
    let n = f.estimate.state_dim();
    let p = f.estimate.n_params();
    emb.check(n)?;
    let pred = sample_and_predict(f, op, sp)?;

    let mut alphas = Vec::with_capacity(sp.len());
    let mut perps = Vec::with_capacity(sp.len());
    let mut thetas = Vec::with_capacity(sp.len());
    for x in &pred.flats {
        let a = emb.alpha(x);
        let mut perp = x.rows(0, n).into_owned();
        let neg = -&a;
        emb.add_span(&mut perp, &neg);
        alphas.push(a);
        perps.push(perp);
        thetas.push(x.rows(n, p).into_owned());
    }
    let mut alpha = weighted_mean(&alphas, &sp.weights);
    let mut perp = weighted_mean(&perps, &sp.weights);
    let mut theta = weighted_mean(&thetas, &sp.weights);
    let l_perp = sp.spread(&perps);
    let l_alpha = sp.spread(&alphas);
    let l_theta = if p > 0 { sp.spread(&thetas) } else { DMatrix::zeros(0, sp.dim()) };

    let mut report = StepReport::default();
    let u = match y.filter(|y| y.is_informative()) {
        Some(y) => {
            let c = reduced_correction(obs, &pred, y, sp)?;
            perp += &l_perp * &c.coeffs;
            alpha += &l_alpha * &c.coeffs;
            theta += &l_theta * &c.coeffs;
            report.innovation = Some(c.innovation);
            report.innovation_norm = c.innovation_norm;
            report.hl = Some(c.hl);
            c.u
        }
        None => DMatrix::identity(sp.dim(), sp.dim()),
    };

    let mut flat = DVector::zeros(n + p);
    flat.rows_mut(0, n).copy_from(&perp);
    emb.add_span(&mut flat, &alpha);
    flat.rows_mut(n, p).copy_from(&theta);

    let mut l = DMatrix::zeros(n + p, sp.dim());
    l.view_mut((0, 0), (n, sp.dim())).copy_from(&l_perp);
    let span = &emb.phi * &l_alpha;
    let mut block = l.view_mut((emb.offset, 0), (emb.phi.nrows(), sp.dim()));
    block += span;
    if p > 0 {
        l.view_mut((n, 0), (p, sp.dim())).copy_from(&l_theta);
    }
    let cov = LowRankCovariance::new(l, u)?;
    report.u_min_eigenvalue = Some(cov.min_eigenvalue());
    Ok((
        FilterState {
            estimate: f.estimate.with_flat(&flat)?,
            covariance: Covariance::LowRank(cov),
            step: f.step + 1,
            time: pred.time,
        },
        report,
        PodSplit {
            alpha,
            l_perp,
            l_alpha,
            l_theta,
        },
    ))
}
