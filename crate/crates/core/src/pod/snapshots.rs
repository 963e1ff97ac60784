use nalgebra::DVector;

use super::{GramKind, SnapshotSet};
use crate::electro::{Cable, ElectroModel, IonicConfig};
use crate::error::{Error, Result};

/// Gramian diagonal for the electrical state `(vm, w)`, with `vm` measured
/// in units of `v_max - v_min` and `w` in units of its upper bound.
pub fn state_gram(cable: &Cable, ionic: &IonicConfig, kind: GramKind) -> DVector<f64> {
    let n = cable.n_nodes();
    let span2 = (ionic.v_max - ionic.v_min).powi(2);
    let scale = |i: usize| if i < n { 1.0 / span2 } else { span2 * span2 };
    match kind {
        GramKind::L2 => DVector::from_fn(2 * n, |i, _| scale(i)),
        GramKind::Mass => DVector::from_fn(2 * n, |i, _| scale(i) * cable.mass[i % n]),
    }
}

/// Simulates `model` once per parameter set (named ionic overrides) and
/// samples `(vm, w)` every `every_ms` up to `t_end_ms`, start included.
pub fn electro_snapshots(
    model: &ElectroModel,
    param_sets: &[Vec<(String, f64)>],
    t_end_ms: f64,
    every_ms: f64,
) -> Result<SnapshotSet> {
    let per = (every_ms / model.dt).round() as usize;
    if per == 0 || ((per as f64) * model.dt - every_ms).abs() > 1e-9 * every_ms {
        return Err(Error::config("snapshot interval must be a multiple of the electrical step"));
    }
    let n_samples = (t_end_ms / every_ms).floor() as usize;
    let mut set = SnapshotSet::default();
    for (k, overrides) in param_sets.iter().enumerate() {
        let mut ionic = model.ionic.clone();
        for (name, v) in overrides {
            ionic.set(name, *v, &model.cable.config.regions)?;
        }
        let ms = ionic.resolve(&model.cable.config.regions)?;
        let mut s = model.resting()?;
        let tag = if overrides.is_empty() {
            format!("set{k}")
        } else {
            let parts: Vec<String> = overrides.iter().map(|(n, v)| format!("{n}={v}")).collect();
            format!("set{k}:{}", parts.join(";"))
        };
        for j in 0..=n_samples {
            if j > 0 {
                s = model.advance(s, &ms, (j - 1) as f64 * every_ms, per)?;
            }
            let mut col = Vec::with_capacity(2 * s.vm.len());
            col.extend_from_slice(&s.vm);
            col.extend_from_slice(&s.w);
            set.push(DVector::from_vec(col), format!("{tag}@{}", j as f64 * every_ms))?;
        }
    }
    Ok(set)
}
