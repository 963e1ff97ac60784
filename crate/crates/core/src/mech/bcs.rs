use serde::{Deserialize, Serialize};

use super::FiberConfig;

/// Internal variables of one element: strain `e_c`, stiffness `k_c`, stress `tau_c`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BcsState {
    pub e_c: f64,
    pub k_c: f64,
    pub tau_c: f64,
}

/// Explicit Euler step of the chemically controlled law
///
/// `k_c' = -(|u| + α|ė_c|) k_c + n0 k0 |u|₊`,
/// `τ_c' = -(|u| + α|ė_c|) τ_c + ė_c k_c + n0 σ0 |u|₊`.
///
/// `e_c` advances by `dt ė_c`.
pub fn bcs_internal_step(iv: BcsState, u: f64, de_c: f64, cfg: &FiberConfig, dt: f64) -> BcsState {
    let decay = u.abs() + cfg.alpha * de_c.abs();
    let up = u.max(0.0);
    let n0 = cfg.n0_at(iv.e_c);
    BcsState {
        e_c: iv.e_c + dt * de_c,
        k_c: iv.k_c + dt * (-decay * iv.k_c + n0 * cfg.k0 * up),
        tau_c: iv.tau_c + dt * (-decay * iv.tau_c + de_c * iv.k_c + n0 * cfg.sigma0 * up),
    }
}
