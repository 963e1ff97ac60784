//! Mitchell-Schaeffer two-variable ionic model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ionic parameters; `tau_close` is resolved per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsParams {
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    pub tau_close: Vec<f64>,
    pub v_gate: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl MsParams {
    pub fn uniform(n_nodes: usize, tau_close: f64) -> Self {
        MsParams {
            tau_in: 0.8,
            tau_out: 18.0,
            tau_open: 120.0,
            tau_close: vec![tau_close; n_nodes],
            v_gate: -67.0,
            v_min: -80.0,
            v_max: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let taus = [self.tau_in, self.tau_out, self.tau_open];
        if taus.iter().chain(&self.tau_close).any(|t| !(*t > 0.0)) {
            return Err(Error::Domain("ionic time constants must be positive".into()));
        }
        if !(self.v_min < self.v_gate && self.v_gate < self.v_max) {
            return Err(Error::Domain(format!(
                "need v_min < v_gate < v_max, got {} / {} / {}",
                self.v_min, self.v_gate, self.v_max
            )));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// Open-gate equilibrium `(v_max - v_min)^-2`, also the upper gate bound.
    pub fn w_max(&self) -> f64 {
        1.0 / (self.span() * self.span())
    }
}

/// `I_ion(v, w)`; positive values repolarize.
pub fn ms_ion_current(vm: f64, w: f64, p: &MsParams) -> f64 {
    let span = p.span();
    let dv = vm - p.v_min;
    -(w / p.tau_in) * dv * dv * (p.v_max - vm) / span + dv / (p.tau_out * span)
}

/// Gate rate `dw/dt = -g(v, w)`.
pub fn ms_gate_rhs(vm: f64, w: f64, p: &MsParams, node: usize) -> f64 {
    let g = if vm <= p.v_gate {
        w / p.tau_open - 1.0 / (p.tau_open * p.span() * p.span())
    } else {
        w / p.tau_close[node]
    };
    -g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> MsParams {
        MsParams::uniform(1, 140.0)
    }

    #[test]
    fn current_vanishes_at_v_min() {
        let p = params();
        for w in [0.0, 1e-4, 3e-3] {
            assert_eq!(ms_ion_current(-80.0, w, &p), 0.0);
        }
    }

    #[test]
    fn current_at_v_max_is_outward_leak() {
        let p = params();
        assert_relative_eq!(ms_ion_current(20.0, 7e-5, &p), 1.0 / 18.0, epsilon = 1e-15);
    }

    #[test]
    fn current_mid_plateau_hand_value() {
        // (-30+80)^2 (20+30) / 100 = 1250;  -(1e-4/0.8)*1250 + 50/(18*100)
        let p = params();
        let expected = -0.15625 + 0.027_777_777_777_777_776;
        assert_relative_eq!(ms_ion_current(-30.0, 1e-4, &p), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, -0.128_472_222_222_222_22, epsilon = 1e-15);
    }

    #[test]
    fn gate_equilibria() {
        let p = params();
        assert_relative_eq!(ms_gate_rhs(-80.0, p.w_max(), &p, 0), 0.0, epsilon = 1e-18);
        assert_eq!(ms_gate_rhs(0.0, 0.0, &p, 0), 0.0);
        assert_relative_eq!(ms_gate_rhs(0.0, 1e-4, &p, 0), -1e-4 / 140.0, epsilon = 1e-20);
    }

    #[test]
    fn validation() {
        let mut p = params();
        assert!(p.validate().is_ok());
        p.v_gate = 30.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.tau_close[0] = 0.0;
        assert!(p.validate().is_err());
    }
}
