//! Small dense and banded linear-algebra helpers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals; `lower[i]` sits at `(i+1, i)`,
/// `upper[i]` at `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// P1 stiffness `coef/h * [-1 2 -1]` with natural (Neumann) ends.
    pub fn stiffness(n: usize, coef: f64, h: f64) -> Self {
        let mut k = Tridiagonal::zeros(n);
        let c = coef / h;
        for e in 0..n.saturating_sub(1) {
            k.diag[e] += c;
            k.diag[e + 1] += c;
            k.upper[e] -= c;
            k.lower[e] -= c;
        }
        k
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &Tridiagonal, b: f64) -> Tridiagonal {
        let z = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Tridiagonal {
            lower: z(&self.lower, &other.lower),
            diag: z(&self.diag, &other.diag),
            upper: z(&self.upper, &other.upper),
        }
    }

    pub fn scaled(&self, a: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|x| a * x).collect(),
            diag: self.diag.iter().map(|x| a * x).collect(),
            upper: self.upper.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add_diag(&mut self, d: &[f64]) {
        for (x, y) in self.diag.iter_mut().zip(d) {
            *x += y;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Thomas algorithm; fails on a vanishing pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension {
                context: "tridiagonal solve",
                expected: n,
                got: rhs.len(),
            });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1e-300);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv.abs() <= 1e-14 * scale {
            return Err(pivot_error(0, piv, scale));
        }
        if n > 1 {
            c[0] = self.upper[0] / piv;
        }
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if piv.abs() <= 1e-14 * scale {
                return Err(pivot_error(i, piv, scale));
            }
            if i + 1 < n {
                c[i] = self.upper[i] / piv;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }
}

fn pivot_error(row: usize, piv: f64, scale: f64) -> Error {
    Error::numerical(
        "singular tridiagonal system",
        format!("pivot {piv:.3e} at row {row}, diagonal scale {scale:.3e}"),
    )
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// Cholesky factorization with eigenvalue diagnostics on failure.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| {
        let eig = m.clone().symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let asym = (m - m.transpose()).abs().max();
        Error::numerical(
            format!("{what} is not positive definite"),
            format!("eigenvalues in [{min:.3e}, {max:.3e}], asymmetry {asym:.3e}"),
        )
    })
}

/// A factor `S` with `S Sᵀ = P` for symmetric positive-semidefinite `P`.
///
/// Lower Cholesky when it exists, otherwise the symmetric square root with
/// round-off negative eigenvalues clamped to zero.
pub fn psd_sqrt(p: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(p.clone()) {
        return Ok(c.l());
    }
    let eig = p.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if !min.is_finite() || min < -1e-10 * max.max(1e-300) {
        return Err(Error::numerical(
            format!("{what} has no real square root"),
            format!("eigenvalues in [{min:.3e}, {max:.3e}]"),
        ));
    }
    let sq = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sq) * eig.eigenvectors.transpose())
}

/// Solves `A X = B` for symmetric positive-definite `A`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky(a, what)?.solve(b))
}

pub fn spd_solve_vec(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Ok(cholesky(a, what)?.solve(b))
}

/// Upper-left to lower-right weighted sum `Σ_i w_i v_i` in fixed index order.
pub fn weighted_mean(columns: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
    let mut acc = DVector::zeros(columns.first().map_or(0, |c| c.len()));
    for (c, w) in columns.iter().zip(weights) {
        acc.axpy(*w, c, 1.0);
    }
    acc
}

pub fn diag_scale_rows(w: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= w[i];
    }
    out
}
