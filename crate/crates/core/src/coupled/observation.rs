use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filters::ObservationRecord;
use crate::statespace::{AugmentedState, ObservationOperator};

/// Concatenation `y = (y_1, ..., y_k)` with block-diagonal `W`.
#[derive(Clone)]
pub struct StackedObservation {
    parts: Vec<(String, Arc<dyn ObservationOperator + Send>)>,
}

impl std::fmt::Debug for StackedObservation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.parts.iter().map(|(n, _)| n.as_str()).collect();
        f.debug_struct("StackedObservation").field("parts", &names).finish()
    }
}

impl StackedObservation {
    pub fn new(parts: Vec<(String, Arc<dyn ObservationOperator + Send>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::config("at least one observation modality is required"));
        }
        Ok(StackedObservation { parts })
    }

    pub fn names(&self) -> Vec<&str> {
        self.parts.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.parts.iter().any(|(n, _)| n == name)
    }

    /// Channel range of a named block.
    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        let mut off = 0;
        for (n, op) in &self.parts {
            let d = op.output_dim();
            if n == name {
                return Some(off..off + d);
            }
            off += d;
        }
        None
    }

    /// Record from per-block values; a `None` block gets zero weight.
    pub fn record(&self, time: f64, blocks: &[Option<&[f64]>]) -> Result<ObservationRecord> {
        if blocks.len() != self.parts.len() {
            return Err(Error::Dimension { context: "observation blocks", expected: self.parts.len(), got: blocks.len() });
        }
        let mut value = Vec::with_capacity(self.output_dim());
        let mut w = Vec::with_capacity(self.output_dim());
        for ((_, op), b) in self.parts.iter().zip(blocks) {
            let d = op.output_dim();
            match b {
                Some(v) => {
                    if v.len() != d {
                        return Err(Error::Dimension { context: "observation block", expected: d, got: v.len() });
                    }
                    value.extend_from_slice(v);
                    w.extend(op.noise_norm(time).iter());
                }
                None => {
                    value.extend(std::iter::repeat_n(0.0, d));
                    w.extend(std::iter::repeat_n(0.0, d));
                }
            }
        }
        ObservationRecord::new(time, DVector::from_vec(value), DVector::from_vec(w))
    }
}

impl ObservationOperator for StackedObservation {
    fn output_dim(&self) -> usize {
        self.parts.iter().map(|(_, o)| o.output_dim()).sum()
    }

    fn observe(&self, x: &AugmentedState, t: f64) -> Result<DVector<f64>> {
        let mut out = Vec::with_capacity(self.output_dim());
        for (_, op) in &self.parts {
            out.extend(op.observe(x, t)?.iter());
        }
        Ok(DVector::from_vec(out))
    }

    fn noise_norm(&self, t: f64) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.output_dim());
        for (_, op) in &self.parts {
            out.extend(op.noise_norm(t).iter());
        }
        DVector::from_vec(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{LinearObservation, LinearTransition};
    use nalgebra::DMatrix;

    #[test]
    fn concatenates_blocks() {
        let a = LinearObservation { h: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), w: DVector::from_element(1, 2.0) };
        let b = LinearObservation { h: DMatrix::identity(2, 2), w: DVector::from_element(2, 5.0) };
        let s = StackedObservation::new(vec![("a".into(), Arc::new(a)), ("b".into(), Arc::new(b))]).unwrap();
        let op = LinearTransition::new(DMatrix::identity(2, 2), None).unwrap();
        let x = op.state(&[3.0, 4.0], &[]);
        assert_eq!(s.observe(&x, 0.0).unwrap().as_slice(), &[3.0, 3.0, 4.0]);
        assert_eq!(s.noise_norm(0.0).as_slice(), &[2.0, 5.0, 5.0]);
        assert_eq!(s.range("b"), Some(1..3));
        let r = s.record(1.0, &[Some(&[1.0]), None]).unwrap();
        assert_eq!(r.noise_norm.as_slice(), &[2.0, 0.0, 0.0]);
        assert!(s.record(1.0, &[Some(&[1.0, 2.0]), None]).is_err());
    }
}
