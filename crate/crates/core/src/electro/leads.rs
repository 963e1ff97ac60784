//! Lead-field observations of the cable (ECG-like leads or electrodes).

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cable::ElectroState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LeadMode {
    /// Rows act on the extracellular potential.
    #[default]
    Lead,
    /// Rows select transmembrane potential samples.
    Electrode,
}

/// Fixed linear map from node potentials to a handful of signals.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadField {
    pub matrix: DMatrix<f64>,
    pub names: Vec<String>,
    pub mode: LeadMode,
}

/// Attenuation applied to the synthetic leads so that a fully polarized
/// half cable reads a few millivolts.
pub const LEAD_ATTENUATION: f64 = 0.05;

impl LeadField {
    pub fn new(matrix: DMatrix<f64>, names: Vec<String>, mode: LeadMode) -> Result<Self> {
        if names.len() != matrix.nrows() {
            return Err(Error::config("one lead name per lead-field row is required"));
        }
        for (k, row) in matrix.row_iter().enumerate() {
            if row.iter().all(|x| *x == 0.0) {
                return Err(Error::config(format!("lead `{}` has an all-zero row", names[k])));
            }
        }
        Ok(LeadField { matrix, names, mode })
    }

    /// Three mean-free synthetic leads: an end-to-end ramp dipole, a
    /// half-versus-half dipole difference, and a cosine-weighted sum.
    pub fn synthetic(n_nodes: usize) -> Self {
        let mut m = DMatrix::zeros(3, n_nodes);
        let xs: Vec<f64> = (0..n_nodes).map(|i| i as f64 / (n_nodes - 1) as f64).collect();
        let half = n_nodes / 2;
        for (j, x) in xs.iter().enumerate() {
            m[(0, j)] = 2.0 * (x - 0.5);
            m[(1, j)] = if j < half { 1.0 } else { -1.0 };
            m[(2, j)] = (2.0 * std::f64::consts::PI * x).cos();
        }
        for mut row in m.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
            let l1: f64 = row.iter().map(|x| x.abs()).sum();
            row *= 2.0 * LEAD_ATTENUATION / l1;
        }
        LeadField {
            matrix: m,
            names: vec!["I".into(), "II".into(), "III".into()],
            mode: LeadMode::Lead,
        }
    }

    /// Electrode rows picking `vm` at the given nodes.
    pub fn electrodes(n_nodes: usize, nodes: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(nodes.len(), n_nodes);
        for (k, &i) in nodes.iter().enumerate() {
            if i >= n_nodes {
                return Err(Error::config(format!("electrode node {i} outside cable")));
            }
            m[(k, i)] = 1.0;
        }
        let names = nodes.iter().map(|i| format!("e{i}")).collect();
        LeadField::new(m, names, LeadMode::Electrode)
    }

    pub fn n_leads(&self) -> usize {
        self.matrix.nrows()
    }

    /// Reads an `n_leads x n_nodes` CSV (lines starting with `#` ignored).
    pub fn from_csv(path: &Path, n_nodes: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            if row.len() != n_nodes {
                return Err(Error::Dimension {
                    context: "lead-field row",
                    expected: n_nodes,
                    got: row.len(),
                });
            }
            rows.push(row);
        }
        let m = DMatrix::from_fn(rows.len(), n_nodes, |i, j| rows[i][j]);
        let names = (0..rows.len()).map(|k| format!("L{}", k + 1)).collect();
        LeadField::new(m, names, LeadMode::Lead)
    }

    pub fn apply(&self, vm: &[f64], ue: &[f64]) -> Vec<f64> {
        let src = match self.mode {
            LeadMode::Lead => ue,
            LeadMode::Electrode => vm,
        };
        self.matrix
            .row_iter()
            .map(|row| row.iter().zip(src).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn lead_observe(s: &ElectroState, lf: &LeadField) -> Result<Vec<f64>> {
    if lf.matrix.ncols() != s.vm.len() {
        return Err(Error::Dimension {
            context: "lead field columns",
            expected: s.vm.len(),
            got: lf.matrix.ncols(),
        });
    }
    Ok(lf.apply(&s.vm, &s.ue))
}
