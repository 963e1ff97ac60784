use serde::{Deserialize, Serialize};

/// Square current pulse on a set of nodes, optionally repeated every `period_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusProtocol {
    pub nodes: Vec<usize>,
    pub amplitude: f64,
    pub onset_ms: f64,
    pub duration_ms: f64,
    #[serde(default)]
    pub period_ms: Option<f64>,
    pub n_nodes: usize,
}

impl StimulusProtocol {
    /// 25 ms pulse on the left 10% of the cable.
    pub fn left_end(n_nodes: usize, amplitude: f64) -> Self {
        StimulusProtocol {
            nodes: (0..n_nodes.div_ceil(10)).collect(),
            amplitude,
            onset_ms: 0.0,
            duration_ms: 25.0,
            period_ms: None,
            n_nodes,
        }
    }

    pub fn none(n_nodes: usize) -> Self {
        StimulusProtocol {
            nodes: Vec::new(),
            amplitude: 0.0,
            onset_ms: 0.0,
            duration_ms: 0.0,
            period_ms: None,
            n_nodes,
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        if self.nodes.is_empty() || t < self.onset_ms {
            return false;
        }
        let local = match self.period_ms {
            Some(p) if p > 0.0 => (t - self.onset_ms) % p,
            _ => t - self.onset_ms,
        };
        local < self.duration_ms
    }

    /// Per-node applied current at time `t`.
    pub fn current(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        if self.is_active(t) {
            for &i in &self.nodes {
                out[i] = self.amplitude;
            }
        }
        out
    }
}
