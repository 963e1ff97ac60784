use nalgebra::{DMatrix, DVector};

/// Unitary sampling rule: `Σ α_i I_i = 0` and `Σ α_i I_i I_iᵀ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    /// `d x Nσ`, one unitary point per column.
    pub points: DMatrix<f64>,
    pub weights: Vec<f64>,
}

impl SigmaPointSet {
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.column(i).into_owned()
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.weights))
    }

    /// `[v_*] D_α [I_*]ᵀ` for a list of column vectors.
    pub fn spread(&self, columns: &[DVector<f64>]) -> DMatrix<f64> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut out = DMatrix::zeros(rows, self.dim());
        for (i, c) in columns.iter().enumerate() {
            let wi = self.weights[i];
            for k in 0..self.dim() {
                let s = wi * self.points[(k, i)];
                if s != 0.0 {
                    out.column_mut(k).axpy(s, c, 1.0);
                }
            }
        }
        out
    }
}

/// The `d + 1` equal-weight simplex points.
///
/// Points are `sqrt(d+1)` times the rows of a Helmert basis of the
/// complement of the all-ones vector, which gives both moment identities
/// exactly in exact arithmetic.
pub fn simplex_sigma_points(d: usize) -> SigmaPointSet {
    let n = d + 1;
    let scale = (n as f64).sqrt();
    let mut points = DMatrix::zeros(d, n);
    for k in 1..=d {
        let kf = k as f64;
        let norm = (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            points[(k - 1, i)] = scale / norm;
        }
        points[(k - 1, k)] = -scale * kf / norm;
    }
    SigmaPointSet {
        points,
        weights: vec![1.0 / n as f64; n],
    }
}
