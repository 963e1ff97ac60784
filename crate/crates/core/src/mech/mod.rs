//! One-dimensional visco-elastic active fiber driven by the transmembrane
//! potential, with displacement observations and a Luenberger observer.

mod bcs;
mod fiber;
mod observer;

use std::sync::Arc;

pub use bcs::{bcs_internal_step, BcsState};
pub use fiber::{fiber_step, interp_e2m, Fiber, FiberConfig, GridTransfer, MechState};
pub use observer::{extension_op, luenberger_step, mech_observe, DisplacementObservation, MeasuredRegion};

use crate::error::{Error, Result};
use crate::statespace::{Layout, StateVector};

/// Segments of the flat mechanical state: nodal `y`, `v` and per-element `e_c`, `k_c`, `tau_c`.
pub fn mech_segments(n_nodes: usize) -> [(&'static str, usize); 5] {
    let ne = n_nodes.saturating_sub(1);
    [("y", n_nodes), ("v", n_nodes), ("e_c", ne), ("k_c", ne), ("tau_c", ne)]
}

pub fn mech_layout(n_nodes: usize) -> Result<Arc<Layout>> {
    Ok(Arc::new(Layout::new(mech_segments(n_nodes))?))
}

/// Reads the mechanical segments out of any state carrying them.
pub fn read_mech(x: &StateVector) -> Result<MechState> {
    let disp = x.segment("y")?.to_vec();
    let vel = x.segment("v")?.to_vec();
    let e_c = x.segment("e_c")?;
    let k_c = x.segment("k_c")?;
    let tau_c = x.segment("tau_c")?;
    if vel.len() != disp.len() || e_c.len() + 1 != disp.len() {
        return Err(Error::config("inconsistent mechanical segment lengths"));
    }
    let internal = (0..e_c.len())
        .map(|e| BcsState { e_c: e_c[e], k_c: k_c[e], tau_c: tau_c[e] })
        .collect();
    Ok(MechState { disp, vel, internal })
}

pub fn write_mech(s: &MechState, x: &mut StateVector) -> Result<()> {
    x.segment_mut("y")?.copy_from_slice(&s.disp);
    x.segment_mut("v")?.copy_from_slice(&s.vel);
    for (name, get) in [
        ("e_c", (|iv: &BcsState| iv.e_c) as fn(&BcsState) -> f64),
        ("k_c", |iv: &BcsState| iv.k_c),
        ("tau_c", |iv: &BcsState| iv.tau_c),
    ] {
        let seg = x.segment_mut(name)?;
        if seg.len() != s.internal.len() {
            return Err(Error::Dimension { context: "mechanical internal variables", expected: seg.len(), got: s.internal.len() });
        }
        for (dst, iv) in seg.iter_mut().zip(&s.internal) {
            *dst = get(iv);
        }
    }
    Ok(())
}
