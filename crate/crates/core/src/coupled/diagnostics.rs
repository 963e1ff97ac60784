use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{sample_and_predict, simplex_sigma_points, FilterState, LowRankCovariance, ParamSet};
use crate::linalg::symmetrize;
use crate::statespace::{AugmentedState, ObservationOperator, TransitionOperator};

/// Empirical parameter sensitivity of the observations at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub time: f64,
    /// Parameter estimate (reparametrized) at this time.
    pub params: DVector<f64>,
    /// Predicted observation mean.
    pub y_mean: DVector<f64>,
    pub hl: DMatrix<f64>,
    pub l_theta: DMatrix<f64>,
    /// Weights of the channels actually observed at this time.
    pub weights: DVector<f64>,
    /// Nominal weights of every channel.
    pub noise_norm: DVector<f64>,
}

impl ProbeRecord {
    /// `HL (L^θ)⁻¹`, the derivative of the observations in the reparametrized block.
    pub fn sensitivity(&self) -> Result<DMatrix<f64>> {
        let p = self.l_theta.nrows();
        if self.l_theta.ncols() != p || self.hl.ncols() != p {
            return Err(Error::numerical(
                "parameter extension factor is not square",
                format!("L^theta is {}x{}, HL has {} columns", p, self.l_theta.ncols(), self.hl.ncols()),
            ));
        }
        let sv = self.l_theta.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 1e-12 * smax) {
            return Err(Error::numerical(
                "parameter extension factor is singular",
                format!("condition number {:.3e} at t = {}", smax / smin, self.time),
            ));
        }
        let inv = self
            .l_theta
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("parameter extension factor is singular", format!("t = {}", self.time)))?;
        Ok(&self.hl * inv)
    }
}

/// Prediction-only run sampling the parameter block with spread `delta`
/// (log-2 units). `weights(t)` gives the channel weights used at time `t`.
pub fn parameter_probe<T, O>(
    op: &T,
    obs: &O,
    x0: &AugmentedState,
    t0: f64,
    n_steps: usize,
    delta: f64,
    weights: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Vec<ProbeRecord>>
where
    T: TransitionOperator + ?Sized,
    O: ObservationOperator + ?Sized,
{
    let n = x0.state_dim();
    let p = x0.n_params();
    if p == 0 {
        return Err(Error::config("sensitivity probe needs at least one parameter"));
    }
    if !(delta > 0.0) {
        return Err(Error::config("probe spread must be positive"));
    }
    let sp = simplex_sigma_points(p);
    let mut l = DMatrix::zeros(n + p, p);
    for k in 0..p {
        l[(n + k, k)] = 1.0;
    }
    let u = DMatrix::identity(p, p) / (delta * delta);
    let mut f = FilterState::low_rank(x0.clone(), LowRankCovariance::new(l, u)?, t0)?;
    let mut out = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let pred = sample_and_predict(&f, op, &sp).map_err(|e| e.at_step(k))?;
        let ys = pred
            .particles
            .iter()
            .map(|x| obs.observe(x, pred.time))
            .collect::<Result<Vec<_>>>()?;
        let y_mean = crate::linalg::weighted_mean(&ys, &sp.weights);
        let thetas: Vec<DVector<f64>> = pred.flats.iter().map(|x| x.rows(n, p).into_owned()).collect();
        let l_new = sp.spread(&pred.flats);
        out.push(ProbeRecord {
            time: pred.time,
            params: pred.mean.rows(n, p).into_owned(),
            y_mean,
            hl: sp.spread(&ys),
            l_theta: sp.spread(&thetas),
            weights: weights(pred.time),
            noise_norm: obs.noise_norm(pred.time),
        });
        let est = f.estimate.with_flat(&pred.mean)?;
        let mut next = FilterState::low_rank(est, LowRankCovariance::new(l_new, DMatrix::identity(p, p))?, pred.time)?;
        next.step = f.step + 1;
        f = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramianReport {
    pub matrix: Vec<Vec<f64>>,
    pub lambda_min: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub label: String,
}

/// `G = Σ Δt Sᵀ W S` with `S = HL (L^θ)⁻¹` over the channels `channels`,
/// weighted by the weights recorded at each time.
pub fn observability_gramian(records: &[ProbeRecord], dt: f64, channels: Range<usize>, label: &str) -> Result<GramianReport> {
    let p = records.first().map_or(0, |r| r.l_theta.nrows());
    let mut g = DMatrix::zeros(p, p);
    for r in records {
        let s = r.sensitivity()?;
        if channels.end > s.nrows() {
            return Err(Error::Dimension { context: "gramian channels", expected: s.nrows(), got: channels.end });
        }
        for c in channels.clone() {
            let w = r.weights[c];
            if w == 0.0 {
                continue;
            }
            let row = s.row(c);
            g += dt * w * row.transpose() * row;
        }
    }
    symmetrize(&mut g);
    let lambda_min = if p == 0 { 0.0 } else { g.clone().symmetric_eigenvalues().min() };
    let threshold = if p == 0 { 0.0 } else { 1e-8 * g.trace() / p as f64 };
    Ok(GramianReport {
        matrix: g.row_iter().map(|r| r.iter().cloned().collect()).collect(),
        lambda_min,
        threshold,
        satisfied: lambda_min > threshold,
        label: label.to_string(),
    })
}

/// Normalized electrical and mechanical sensitivity curves per parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTrace {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `s_e[j][k]`: parameter `j`, time `k`.
    pub s_e: Vec<Vec<f64>>,
    pub s_m: Vec<Vec<f64>>,
}

impl SensitivityTrace {
    /// Time spent above `frac` of the peak magnitude.
    pub fn support(curve: &[f64], times: &[f64], frac: f64) -> f64 {
        let peak = curve.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 || times.len() < 2 {
            return 0.0;
        }
        let dt = times[1] - times[0];
        curve.iter().filter(|v| v.abs() > frac * peak).count() as f64 * dt
    }
}

/// `s^e_j = θ⋄_j / ȳ^e · ∂y^e_1/∂θ_j` on the first electrical channel and
/// `s^m_j = θ⋄_j / ȳ^m · ‖W^{1/2} ∂y^m/∂θ_j‖`, with `ȳ` the time averages of
/// `|y^e_1|` and `‖W^{1/2} y^m‖`.
pub fn sensitivity_curves(
    records: &[ProbeRecord],
    params: &ParamSet,
    electro: Option<Range<usize>>,
    mech: Option<Range<usize>>,
) -> Result<SensitivityTrace> {
    let p = params.len();
    let nr = records.len();
    let mut s_e = vec![vec![0.0; nr]; if electro.is_some() { p } else { 0 }];
    let mut s_m = vec![vec![0.0; nr]; if mech.is_some() { p } else { 0 }];
    let mut ybar_e = 0.0;
    let mut ybar_m = 0.0;
    for r in records {
        if let Some(e) = &electro {
            ybar_e += r.y_mean[e.start].abs() / nr as f64;
        }
        if let Some(m) = &mech {
            let norm: f64 = m.clone().map(|c| r.noise_norm[c] * r.y_mean[c] * r.y_mean[c]).sum::<f64>().sqrt();
            ybar_m += norm / nr as f64;
        }
    }
    for (k, r) in records.iter().enumerate() {
        let s = r.sensitivity()?;
        let phys = params.to_physical(&r.params)?;
        for j in 0..p {
            let prior = params.specs[j].1;
            // ∂/∂θ = ∂/∂p / (θ ln 2)
            let scale = prior / (phys[j].1 * std::f64::consts::LN_2);
            if let Some(e) = &electro {
                if ybar_e > 0.0 {
                    s_e[j][k] = scale * s[(e.start, j)] / ybar_e;
                }
            }
            if let Some(m) = &mech {
                if ybar_m > 0.0 {
                    let norm: f64 = m.clone().map(|c| r.noise_norm[c] * s[(c, j)] * s[(c, j)]).sum::<f64>().sqrt();
                    s_m[j][k] = scale * norm / ybar_m;
                }
            }
        }
    }
    Ok(SensitivityTrace {
        names: params.names().map(String::from).collect(),
        times: records.iter().map(|r| r.time).collect(),
        s_e,
        s_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{LinearObservation, LinearTransition};

    fn linear_probe(h: DMatrix<f64>, steps: usize) -> Vec<ProbeRecord> {
        // x ← 0.9 x + b θ
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.8]));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
        let op = LinearTransition::new(a, Some(b)).unwrap();
        let w = DVector::from_element(h.nrows(), 1.0);
        let obs = LinearObservation { h, w: w.clone() };
        let x0 = op.state(&[0.0, 0.0], &[0.2, -0.1]);
        parameter_probe(&op, &obs, &x0, 0.0, steps, 0.01, &|_| w.clone()).unwrap()
    }

    #[test]
    fn zero_observation_has_zero_gramian() {
        let recs = linear_probe(DMatrix::zeros(1, 2), 10);
        let g = observability_gramian(&recs, 1.0, 0..1, "zero").unwrap();
        assert_eq!(g.lambda_min, 0.0);
        assert!(!g.satisfied);
    }

    #[test]
    fn full_observation_is_observable() {
        let recs = linear_probe(DMatrix::identity(2, 2), 10);
        let g = observability_gramian(&recs, 1.0, 0..2, "full").unwrap();
        assert!(g.lambda_min > 0.0 && g.satisfied);
        // Linear model: S_n = Σ_k A^k B exactly.
        let mut s = DMatrix::zeros(2, 2);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.8]));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
        for r in &recs {
            s = &a * &s + &b;
            assert!((r.sensitivity().unwrap() - &s).amax() < 1e-9);
        }
    }

    #[test]
    fn uninfluential_parameter_has_zero_curve() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let op = LinearTransition::new(a, Some(b)).unwrap();
        let w = DVector::from_element(1, 1.0);
        let obs = LinearObservation { h: DMatrix::from_element(1, 1, 1.0), w: w.clone() };
        let x0 = op.state(&[1.0], &[0.0, 0.0]);
        let recs = parameter_probe(&op, &obs, &x0, 0.0, 20, 0.01, &|_| w.clone()).unwrap();
        let params = ParamSet::new(vec![("a".into(), 1.0), ("b".into(), 2.0)]).unwrap();
        let tr = sensitivity_curves(&recs, &params, Some(0..1), None).unwrap();
        let peak = tr.s_e[0].iter().cloned().fold(0.0, f64::max);
        assert!(tr.s_e[0].iter().all(|v| *v > 0.0));
        assert!(tr.s_e[1].iter().all(|v| v.abs() < 1e-12 * peak));
        assert!(SensitivityTrace::support(&tr.s_e[0], &tr.times, 0.1) > 0.0);
    }
}
