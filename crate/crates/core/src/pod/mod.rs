//! Proper orthogonal decomposition of electrical snapshots and the split
//! `x = Φ α + x⊥` used by the reduced filter.

mod io;
mod snapshots;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use io::{read_basis, read_snapshots, write_basis, write_snapshots};
pub use snapshots::{electro_snapshots, state_gram};

use crate::error::{Error, Result};
use crate::filters::PodEmbedding;

/// Inner product used for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GramKind {
    /// Euclidean product of node values.
    L2,
    /// Lumped mass matrix of the cable.
    #[default]
    Mass,
}

impl GramKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GramKind::L2 => "l2",
            GramKind::Mass => "mass",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(GramKind::L2),
            "mass" => Ok(GramKind::Mass),
            _ => Err(Error::config(format!("unknown gram `{s}`, expected l2 or mass"))),
        }
    }
}

/// Snapshot columns sharing one dimension, each with a source tag.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotSet {
    pub columns: Vec<DVector<f64>>,
    pub tags: Vec<String>,
}

impl SnapshotSet {
    pub fn new(columns: Vec<DVector<f64>>, tags: Vec<String>) -> Result<Self> {
        if columns.len() != tags.len() {
            return Err(Error::config("one tag per snapshot is required"));
        }
        if let Some(first) = columns.first() {
            if let Some(bad) = columns.iter().find(|c| c.len() != first.len()) {
                return Err(Error::Dimension {
                    context: "snapshot column",
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(SnapshotSet { columns, tags })
    }

    pub fn from_columns(columns: Vec<DVector<f64>>) -> Result<Self> {
        let tags = (0..columns.len()).map(|i| i.to_string()).collect();
        SnapshotSet::new(columns, tags)
    }

    pub fn dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.columns)
    }

    pub fn push(&mut self, column: DVector<f64>, tag: String) -> Result<()> {
        if !self.is_empty() && column.len() != self.dim() {
            return Err(Error::Dimension {
                context: "snapshot column",
                expected: self.dim(),
                got: column.len(),
            });
        }
        self.columns.push(column);
        self.tags.push(tag);
        Ok(())
    }
}

/// `M`-orthonormal modes `Φ` with their singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub phi: DMatrix<f64>,
    /// Diagonal of `M`.
    pub gram: DVector<f64>,
    pub gram_kind: GramKind,
    pub singular_values: DVector<f64>,
    /// Set when fewer than the requested modes carried energy.
    pub rank_deficient: bool,
}

impl PodBasis {
    pub fn rank(&self) -> usize {
        self.phi.ncols()
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    /// `max |Φᵀ M Φ - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.phi.tr_mul(&scale_rows(&self.gram, &self.phi));
        (g - DMatrix::identity(self.rank(), self.rank())).amax()
    }

    pub fn embedding(&self, offset: usize) -> Result<PodEmbedding> {
        PodEmbedding::new(self.phi.clone(), self.gram.clone(), offset)
    }

    /// First `r` modes.
    pub fn truncated(&self, r: usize) -> Result<PodBasis> {
        if r > self.rank() {
            return Err(Error::config(format!("rank {r} exceeds the {} available modes", self.rank())));
        }
        Ok(PodBasis {
            phi: self.phi.columns(0, r).into_owned(),
            gram: self.gram.clone(),
            gram_kind: self.gram_kind,
            singular_values: self.singular_values.rows(0, r).into_owned(),
            rank_deficient: self.rank_deficient,
        })
    }
}

fn scale_rows(w: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    crate::linalg::diag_scale_rows(w, m)
}

/// Relative eigenvalue floor below which a snapshot direction counts as empty.
const RANK_TOL: f64 = 1e-13;

/// Method of snapshots: eigen-decomposes `Xᵀ M X` and lifts the leading
/// eigenvectors, then re-orthonormalizes in the `M` inner product.
pub fn build_pod(snapshots: &SnapshotSet, r: usize, gram: &DVector<f64>, gram_kind: GramKind) -> Result<PodBasis> {
    let n = snapshots.dim();
    let m = snapshots.len();
    if r == 0 || r > n.min(m) {
        return Err(Error::config(format!(
            "POD rank {r} must be between 1 and min(dimension {n}, snapshots {m})"
        )));
    }
    if gram.len() != n {
        return Err(Error::Dimension { context: "POD gramian", expected: n, got: gram.len() });
    }
    if gram.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::config("POD gramian entries must be positive"));
    }
    let x = snapshots.matrix();
    let mx = scale_rows(gram, &x);
    let mut c = x.tr_mul(&mx);
    crate::linalg::symmetrize(&mut c);
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(0.0);
    let floor = RANK_TOL * lmax * m as f64;
    let effective = order.iter().take(r).take_while(|&&k| eig.eigenvalues[k] > floor && lmax > 0.0).count();
    let rank_deficient = effective < r;
    if rank_deficient {
        log::warn!("snapshots span only {effective} of the {r} requested POD modes");
    }
    if effective == 0 {
        return Err(Error::numerical("POD of empty snapshot span", "all snapshot eigenvalues vanish"));
    }
    let mut phi = DMatrix::zeros(n, effective);
    let mut sv = DVector::zeros(effective);
    for (j, &k) in order.iter().take(effective).enumerate() {
        let lam = eig.eigenvalues[k];
        let col = &x * eig.eigenvectors.column(k) / lam.sqrt();
        phi.set_column(j, &col);
        sv[j] = lam.sqrt();
    }
    // Two passes of modified Gram-Schmidt in the M inner product.
    for _ in 0..2 {
        for j in 0..effective {
            for i in 0..j {
                let proj = phi.column(i).dot(&phi.column(j).component_mul(gram));
                let ci = phi.column(i).into_owned();
                phi.column_mut(j).axpy(-proj, &ci, 1.0);
            }
            let norm = phi.column(j).dot(&phi.column(j).component_mul(gram)).sqrt();
            phi.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    Ok(PodBasis { phi, gram: gram.clone(), gram_kind, singular_values: sv, rank_deficient })
}

/// `α = Φᵀ M x`, `x⊥ = x - Φ α`.
pub fn project(x: &DVector<f64>, basis: &PodBasis) -> Result<(DVector<f64>, DVector<f64>)> {
    if x.len() != basis.dim() {
        return Err(Error::Dimension { context: "POD projection", expected: basis.dim(), got: x.len() });
    }
    let alpha = basis.phi.tr_mul(&x.component_mul(&basis.gram));
    let perp = x - &basis.phi * &alpha;
    Ok((alpha, perp))
}

/// Squared `M`-norm of the projection residual summed over all snapshots.
pub fn reconstruction_error(snapshots: &SnapshotSet, basis: &PodBasis) -> Result<f64> {
    let mut acc = 0.0;
    for c in &snapshots.columns {
        let (_, perp) = project(c, basis)?;
        acc += perp.dot(&perp.component_mul(&basis.gram));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(seed: u64, n: usize, m: usize) -> (SnapshotSet, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..m)
            .map(|k| DVector::from_fn(n, |i, _| rng.random_range(-1.0..1.0) / (1.0 + (i + k) as f64 * 0.3)))
            .collect();
        let gram = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
        (SnapshotSet::from_columns(cols).unwrap(), gram)
    }

    #[test]
    fn repeated_unit_vector() {
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let set = SnapshotSet::from_columns(vec![e1.clone(), e1.clone()]).unwrap();
        let b = build_pod(&set, 1, &DVector::from_element(3, 1.0), GramKind::L2).unwrap();
        assert!((b.phi.column(0).abs() - e1).amax() < 1e-14);
        assert!(!b.rank_deficient);
        let b2 = build_pod(&set, 2, &DVector::from_element(3, 1.0), GramKind::L2).unwrap();
        assert!(b2.rank_deficient);
        assert_eq!(b2.rank(), 1);
    }

    #[test]
    fn orthonormal_snapshots_reconstruct_exactly() {
        let cols: Vec<_> = (0..4).map(|i| DVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
        let set = SnapshotSet::from_columns(cols).unwrap();
        let b = build_pod(&set, 4, &DVector::from_element(4, 1.0), GramKind::L2).unwrap();
        assert!(reconstruction_error(&set, &b).unwrap() < 1e-28);
    }

    #[test]
    fn rank_bounds_checked() {
        let (set, gram) = random_set(1, 5, 3);
        assert!(build_pod(&set, 0, &gram, GramKind::Mass).is_err());
        assert!(build_pod(&set, 4, &gram, GramKind::Mass).is_err());
    }

    #[test]
    fn tail_energy_matches_eigen_oracle() {
        let (set, gram) = random_set(7, 10, 14);
        // Oracle: eigenvalues of M^{1/2} X Xᵀ M^{1/2}, an N x N problem.
        let sq = gram.map(f64::sqrt);
        let y = scale_rows(&sq, &set.matrix());
        let mut eig: Vec<f64> = (&y * y.transpose()).symmetric_eigenvalues().iter().cloned().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = eig.iter().sum();
        for r in 1..=10 {
            let b = build_pod(&set, r, &gram, GramKind::Mass).unwrap();
            assert!(b.orthonormality_defect() < 1e-10);
            let tail: f64 = eig[r..].iter().sum();
            let err = reconstruction_error(&set, &b).unwrap();
            assert!((err - tail).abs() < 1e-8 * total, "r={r}: {err} vs {tail}");
        }
    }

    #[test]
    fn singular_values_nonincreasing() {
        let (set, gram) = random_set(3, 12, 9);
        let b = build_pod(&set, 9, &gram, GramKind::Mass).unwrap();
        assert!(b.singular_values.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn in_span_and_orthogonal_inputs() {
        let (set, gram) = random_set(4, 8, 6);
        let b = build_pod(&set, 3, &gram, GramKind::Mass).unwrap();
        let c = DVector::from_vec(vec![0.5, -2.0, 1.5]);
        let (a, perp) = project(&(&b.phi * &c), &b).unwrap();
        assert!((a - &c).amax() < 1e-12);
        assert!(perp.amax() < 1e-12);
        let full = build_pod(&set, 6, &gram, GramKind::Mass).unwrap();
        let outside = full.phi.column(4).into_owned();
        let (a, perp) = project(&outside, &b).unwrap();
        assert!(a.amax() < 1e-10);
        assert!((perp - outside).amax() < 1e-10);
    }

    proptest! {
        #[test]
        fn projection_reconstructs_and_is_orthogonal(seed in 0u64..500) {
            let (set, gram) = random_set(seed, 9, 7);
            let b = build_pod(&set, 4, &gram, GramKind::Mass).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let x = DVector::from_fn(9, |_, _| rng.random_range(-10.0..10.0));
            let (a, perp) = project(&x, &b).unwrap();
            let back = &b.phi * &a + &perp;
            prop_assert!((back - &x).amax() <= 1e-12 * x.amax());
            let orth = b.phi.tr_mul(&perp.component_mul(&gram));
            prop_assert!(orth.amax() < 1e-10);
        }
    }
}
