//! Central finite-difference tangents of transitions and observations.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::statespace::AugmentedState;

fn step_size(x: &DVector<f64>, dir: &DVector<f64>) -> f64 {
    let dmax = dir.amax();
    if dmax == 0.0 {
        return 0.0;
    }
    1e-6 * (1.0 + x.amax()) / dmax
}

/// `(f(x + ε d) - f(x - ε d)) / 2ε` on the flattened augmented state.
pub fn directional_derivative<F>(f: &F, x: &AugmentedState, dir: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&AugmentedState) -> Result<DVector<f64>>,
{
    let flat = x.to_flat();
    let eps = step_size(&flat, dir);
    if eps == 0.0 {
        let n = f(x)?.len();
        return Ok(DVector::zeros(n));
    }
    let plus = f(&x.with_flat(&(&flat + eps * dir))?)?;
    let minus = f(&x.with_flat(&(&flat - eps * dir))?)?;
    Ok((plus - minus) / (2.0 * eps))
}

/// Full Jacobian with per-coordinate step `1e-6 (1 + |x_j|)`.
pub fn finite_difference_jacobian<F>(f: &F, x: &AugmentedState) -> Result<DMatrix<f64>>
where
    F: Fn(&AugmentedState) -> Result<DVector<f64>>,
{
    let flat = x.to_flat();
    let n = flat.len();
    let f0 = f(x)?;
    let mut jac = DMatrix::zeros(f0.len(), n);
    for j in 0..n {
        let eps = 1e-6 * (1.0 + flat[j].abs());
        let mut p = flat.clone();
        p[j] += eps;
        let mut m = flat.clone();
        m[j] -= eps;
        let col = (f(&x.with_flat(&p)?)? - f(&x.with_flat(&m)?)?) / (2.0 * eps);
        jac.set_column(j, &col);
    }
    Ok(jac)
}
