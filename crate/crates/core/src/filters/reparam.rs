//! Log-2 reparametrization `theta = 2^p * theta_prior` of positive parameters.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn reparametrize(theta_phys: f64, theta_prior: f64) -> Result<f64> {
    if !(theta_prior > 0.0) {
        return Err(Error::Domain(format!("prior value must be positive, got {theta_prior}")));
    }
    if !(theta_phys > 0.0) {
        return Err(Error::Domain(format!("physical value must be positive, got {theta_phys}")));
    }
    Ok((theta_phys / theta_prior).log2())
}

pub fn to_physical(p: f64, theta_prior: f64) -> f64 {
    theta_prior * p.exp2()
}

/// Named estimated parameters with the prior values anchoring `p = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    pub specs: Vec<(String, f64)>,
}

impl ParamSet {
    pub fn new(specs: Vec<(String, f64)>) -> Result<Self> {
        for (name, prior) in &specs {
            if !(*prior > 0.0) {
                return Err(Error::Domain(format!("prior for `{name}` must be positive")));
            }
        }
        Ok(ParamSet { specs })
    }

    pub fn empty() -> Self {
        ParamSet::default()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|(n, _)| n.as_str())
    }

    pub fn to_physical(&self, p: &DVector<f64>) -> Result<Vec<(String, f64)>> {
        if p.len() != self.len() {
            return Err(Error::Dimension {
                context: "parameter block",
                expected: self.len(),
                got: p.len(),
            });
        }
        Ok(self
            .specs
            .iter()
            .zip(p.iter())
            .map(|((n, prior), v)| (n.clone(), to_physical(*v, *prior)))
            .collect())
    }

    pub fn from_physical(&self, values: &[f64]) -> Result<DVector<f64>> {
        let v: Result<Vec<f64>> = self
            .specs
            .iter()
            .zip(values)
            .map(|((_, prior), v)| reparametrize(*v, *prior))
            .collect();
        Ok(DVector::from_vec(v?))
    }
}
