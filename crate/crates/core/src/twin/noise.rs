use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tables::ObservationTable;
use crate::error::{Error, Result};

/// Additive Gaussian white noise with one standard deviation per modality.
///
/// Each modality draws from its own stream of the seed, so the electrical
/// noise does not depend on whether displacements are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub ecg_std: f64,
    pub mech_std: f64,
    pub seed: u64,
}

impl NoiseModel {
    fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }
}

fn perturb(values: &mut [f64], std: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if std == 0.0 {
        return Ok(());
    }
    let n = Normal::new(0.0, std).map_err(|e| Error::config(format!("noise std {std}: {e}")))?;
    for v in values {
        *v += n.sample(rng);
    }
    Ok(())
}

/// Channel-wise i.i.d. noise in row order.
pub fn add_noise(clean: &ObservationTable, nm: &NoiseModel) -> Result<ObservationTable> {
    if !(nm.ecg_std >= 0.0) || !(nm.mech_std >= 0.0) {
        return Err(Error::config("noise standard deviations must be nonnegative"));
    }
    let mut ecg_rng = nm.stream(0);
    let mut mech_rng = nm.stream(1);
    let mut out = clean.clone();
    for r in &mut out.rows {
        if let Some(e) = r.ecg.as_mut() {
            perturb(e, nm.ecg_std, &mut ecg_rng)?;
        }
        if let Some(m) = r.mech.as_mut() {
            perturb(m, nm.mech_std, &mut mech_rng)?;
        }
    }
    Ok(out)
}

/// Largest `|y|` over all recorded displacements.
pub fn mech_peak(clean: &ObservationTable) -> f64 {
    clean.rows.iter().filter_map(|r| r.mech.as_ref()).flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}
