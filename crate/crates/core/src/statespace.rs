//! Generic state-space contracts shared by every model and filter.
//!
//! A model state is a flat `f64` vector whose entries are grouped into named
//! segments (`vm`, `w`, `disp`, ...). Parameters live in a separate block and
//! are appended after the state whenever a filter needs a single flat vector.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered, contiguous segment layout covering a whole state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    segments: Vec<Segment>,
    dim: usize,
}

impl Layout {
    /// Builds a layout from `(name, len)` pairs laid out back to back.
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut segments = Vec::new();
        let mut offset = 0;
        for (name, len) in parts {
            let name = name.into();
            if segments.iter().any(|s: &Segment| s.name == name) {
                return Err(Error::config(format!("duplicate segment name `{name}`")));
            }
            segments.push(Segment { name, offset, len });
            offset += len;
        }
        Ok(Layout {
            segments,
            dim: offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn range(&self, name: &str) -> Result<std::ops::Range<usize>> {
        self.segment(name)
            .map(|s| s.offset..s.offset + s.len)
            .ok_or_else(|| Error::config(format!("unknown state segment `{name}`")))
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| format!("{}[{}]", s.name, s.len))
            .collect();
        parts.join(",")
    }
}

/// Model state: values plus the shared layout naming its segments.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: DVector<f64>,
    layout: Arc<Layout>,
}

impl StateVector {
    pub fn new(values: DVector<f64>, layout: Arc<Layout>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::Dimension {
                context: "state vector",
                expected: layout.dim(),
                got: values.len(),
            });
        }
        Ok(StateVector { values, layout })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        StateVector {
            values: DVector::zeros(layout.dim()),
            layout,
        }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, name: &str) -> Result<&[f64]> {
        let r = self.layout.range(name)?;
        Ok(&self.values.as_slice()[r])
    }

    pub fn segment_mut(&mut self, name: &str) -> Result<&mut [f64]> {
        let r = self.layout.range(name)?;
        Ok(&mut self.values.as_mut_slice()[r])
    }
}

/// State plus parameter block; flattened order is always (state, params).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub state: StateVector,
    pub params: DVector<f64>,
}

impl AugmentedState {
    pub fn new(state: StateVector, params: DVector<f64>) -> Self {
        AugmentedState { state, params }
    }

    pub fn dim(&self) -> usize {
        self.state.len() + self.params.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn layout(&self) -> &Arc<Layout> {
        self.state.layout()
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        let n = self.state.len();
        v.rows_mut(0, n).copy_from(&self.state.values);
        v.rows_mut(n, self.params.len()).copy_from(&self.params);
        v
    }

    /// Rebuilds an augmented state with the same layout and parameter count.
    pub fn with_flat(&self, flat: &DVector<f64>) -> Result<Self> {
        join_augmented(self.layout().clone(), self.n_params(), flat)
    }
}

/// Splits an augmented state into its state and parameter blocks.
pub fn split_augmented(x: &AugmentedState) -> (StateVector, DVector<f64>) {
    (x.state.clone(), x.params.clone())
}

pub fn join_augmented(
    layout: Arc<Layout>,
    n_params: usize,
    flat: &DVector<f64>,
) -> Result<AugmentedState> {
    let n = layout.dim();
    if flat.len() != n + n_params {
        return Err(Error::Dimension {
            context: "augmented state",
            expected: n + n_params,
            got: flat.len(),
        });
    }
    let state = StateVector::new(flat.rows(0, n).into_owned(), layout)?;
    Ok(AugmentedState::new(state, flat.rows(n, n_params).into_owned()))
}

/// Uniform time grid with an observation sub-sampling factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub sub_steps_per_obs: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize, sub_steps_per_obs: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        if n_steps == 0 || sub_steps_per_obs == 0 {
            return Err(Error::config("n_steps and sub_steps_per_obs must be positive"));
        }
        Ok(TimeGrid {
            t0,
            dt,
            n_steps,
            sub_steps_per_obs,
        })
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    pub fn is_observation_step(&self, step: usize) -> bool {
        step % self.sub_steps_per_obs == 0
    }

    pub fn observation_interval(&self) -> f64 {
        self.dt * self.sub_steps_per_obs as f64
    }
}

/// Discrete transition `x_{n+1} = A_{n+1|n}(x_n)` over one model step.
///
/// Implementations must be pure: identical `(x, t)` give bit-identical output.
/// The parameter block is carried unchanged.
pub trait TransitionOperator: Sync {
    fn layout(&self) -> &Arc<Layout>;

    fn n_params(&self) -> usize;

    /// Length of one call to [`TransitionOperator::step`].
    fn step_length(&self) -> f64;

    fn step(&self, x: &AugmentedState, t: f64) -> Result<AugmentedState>;

    fn check_layout(&self, x: &AugmentedState) -> Result<()> {
        if x.layout().as_ref() != self.layout().as_ref() || x.n_params() != self.n_params() {
            return Err(Error::LayoutMismatch {
                expected: format!("{} + {} params", self.layout().describe(), self.n_params()),
                got: format!("{} + {} params", x.layout().describe(), x.n_params()),
            });
        }
        Ok(())
    }
}

/// Observation map `y = H(x)` with its diagonal noise norm `W_n`.
pub trait ObservationOperator: Sync {
    fn output_dim(&self) -> usize;

    fn observe(&self, x: &AugmentedState, t: f64) -> Result<DVector<f64>>;

    /// Diagonal of `W_n`; strictly positive.
    fn noise_norm(&self, t: f64) -> DVector<f64>;
}

/// Runs `op` over the grid, returning `n_steps + 1` states starting with `x0`.
pub fn propagate<T: TransitionOperator + ?Sized>(
    op: &T,
    x0: &AugmentedState,
    grid: &TimeGrid,
) -> Result<Vec<AugmentedState>> {
    op.check_layout(x0)?;
    let mut traj = Vec::with_capacity(grid.n_steps + 1);
    traj.push(x0.clone());
    for n in 0..grid.n_steps {
        let next = op.step(&traj[n], grid.time(n))?;
        traj.push(next);
    }
    Ok(traj)
}

/// Linear transition `x ← A x + B θ`, used by tests and small twins.
#[derive(Debug, Clone)]
pub struct LinearTransition {
    pub a: nalgebra::DMatrix<f64>,
    pub b: nalgebra::DMatrix<f64>,
    pub dt: f64,
    layout: Arc<Layout>,
}

impl LinearTransition {
    pub fn new(a: nalgebra::DMatrix<f64>, b: Option<nalgebra::DMatrix<f64>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::config("transition matrix must be square"));
        }
        let n = a.nrows();
        let b = b.unwrap_or_else(|| nalgebra::DMatrix::zeros(n, 0));
        if b.nrows() != n {
            return Err(Error::Dimension {
                context: "parameter influence matrix",
                expected: n,
                got: b.nrows(),
            });
        }
        Ok(LinearTransition {
            a,
            b,
            dt: 1.0,
            layout: Arc::new(Layout::new([("x", n)])?),
        })
    }

    pub fn state(&self, values: &[f64], params: &[f64]) -> AugmentedState {
        AugmentedState::new(
            StateVector::new(DVector::from_column_slice(values), self.layout.clone())
                .expect("dimension checked by caller"),
            DVector::from_column_slice(params),
        )
    }
}

impl TransitionOperator for LinearTransition {
    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn n_params(&self) -> usize {
        self.b.ncols()
    }

    fn step_length(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &AugmentedState, _t: f64) -> Result<AugmentedState> {
        let mut next = x.clone();
        next.state.values = &self.a * &x.state.values + &self.b * &x.params;
        Ok(next)
    }
}

/// Linear observation `y = H x` (state block only) with a fixed diagonal norm.
#[derive(Debug, Clone)]
pub struct LinearObservation {
    pub h: nalgebra::DMatrix<f64>,
    pub w: DVector<f64>,
}

impl ObservationOperator for LinearObservation {
    fn output_dim(&self) -> usize {
        self.h.nrows()
    }

    fn observe(&self, x: &AugmentedState, _t: f64) -> Result<DVector<f64>> {
        if self.h.ncols() != x.state_dim() {
            return Err(Error::Dimension {
                context: "linear observation",
                expected: self.h.ncols(),
                got: x.state_dim(),
            });
        }
        Ok(&self.h * &x.state.values)
    }

    fn noise_norm(&self, _t: f64) -> DVector<f64> {
        self.w.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn identity_transition_is_constant() {
        let op = LinearTransition::new(DMatrix::identity(2, 2), None).unwrap();
        let x0 = op.state(&[1.5, -2.0], &[]);
        let grid = TimeGrid::new(0.0, 1.0, 3, 1).unwrap();
        let traj = propagate(&op, &x0, &grid).unwrap();
        assert_eq!(traj.len(), 4);
        assert!(traj.iter().all(|x| *x == x0));
    }

    #[test]
    fn scalar_decay_closed_form() {
        let op = LinearTransition::new(DMatrix::from_element(1, 1, 0.5), None).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 2, 1).unwrap();
        let traj = propagate(&op, &op.state(&[1.0], &[]), &grid).unwrap();
        let v: Vec<f64> = traj.iter().map(|x| x.state.values[0]).collect();
        assert_eq!(v, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn propagate_rejects_layout_mismatch() {
        let op = LinearTransition::new(DMatrix::identity(2, 2), None).unwrap();
        let other = LinearTransition::new(DMatrix::identity(3, 3), None).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 1, 1).unwrap();
        let err = propagate(&op, &other.state(&[0.0; 3], &[]), &grid).unwrap_err();
        assert!(matches!(err, Error::LayoutMismatch { .. }));
    }

    #[test]
    fn split_small_examples() {
        let layout = Arc::new(Layout::new([("x", 2)]).unwrap());
        let s = StateVector::new(DVector::from_vec(vec![1.0, 2.0]), layout.clone()).unwrap();
        let x = AugmentedState::new(s.clone(), DVector::from_vec(vec![3.0]));
        let (state, params) = split_augmented(&x);
        assert_eq!(state.values.as_slice(), &[1.0, 2.0]);
        assert_eq!(params.as_slice(), &[3.0]);

        let empty = AugmentedState::new(s, DVector::zeros(0));
        let (_, params) = split_augmented(&empty);
        assert!(params.is_empty());
    }

    #[test]
    fn layout_lookup_and_coverage() {
        let l = Layout::new([("vm", 4), ("w", 4), ("disp", 3)]).unwrap();
        assert_eq!(l.dim(), 11);
        let mut end = 0;
        for s in l.segments() {
            assert_eq!(s.offset, end);
            end += s.len;
        }
        assert_eq!(end, l.dim());
        assert_eq!(l.range("w").unwrap(), 4..8);
        assert!(l.range("nope").is_err());
        assert!(Layout::new([("a", 1), ("a", 2)]).is_err());
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 1, 1).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 0, 1).is_err());
        let g = TimeGrid::new(2.0, 0.1, 100, 10).unwrap();
        assert!(g.is_observation_step(20));
        assert!(!g.is_observation_step(21));
        assert!((g.observation_interval() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn split_join_round_trip(
            state in prop::collection::vec(-1e6f64..1e6, 1..12),
            params in prop::collection::vec(-1e3f64..1e3, 0..5),
        ) {
            let layout = Arc::new(Layout::new([("x", state.len())]).unwrap());
            let x = AugmentedState::new(
                StateVector::new(DVector::from_vec(state), layout.clone()).unwrap(),
                DVector::from_vec(params),
            );
            let (s, p) = split_augmented(&x);
            let flat = AugmentedState::new(s, p).to_flat();
            let back = join_augmented(layout, x.n_params(), &flat).unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
