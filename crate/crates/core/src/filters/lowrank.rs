use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::cholesky;

/// Covariance ansatz `P = L U⁻¹ Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankCovariance {
    /// `n x d` extension matrix.
    pub l: DMatrix<f64>,
    /// `d x d` symmetric positive-definite reduced matrix.
    pub u: DMatrix<f64>,
}

impl LowRankCovariance {
    pub fn new(l: DMatrix<f64>, u: DMatrix<f64>) -> Result<Self> {
        if u.nrows() != u.ncols() || u.nrows() != l.ncols() {
            return Err(Error::Dimension {
                context: "reduced covariance",
                expected: l.ncols(),
                got: u.nrows(),
            });
        }
        if u.nrows() > 0 {
            cholesky(&u, "U")?;
        }
        Ok(LowRankCovariance { l, u })
    }

    pub fn rank(&self) -> usize {
        self.u.nrows()
    }

    /// Dense `L U⁻¹ Lᵀ`; only for small problems and tests.
    pub fn realized(&self) -> Result<DMatrix<f64>> {
        if self.rank() == 0 {
            return Ok(DMatrix::zeros(self.l.nrows(), self.l.nrows()));
        }
        let chol = cholesky(&self.u, "U")?;
        let x = chol.solve(&self.l.transpose());
        Ok(&self.l * x)
    }

    /// `Cᵀ` with `C` lower triangular and `Cᵀ C = U⁻¹`.
    ///
    /// With `U = R Rᵀ`, `C = R⁻¹`, so `Cᵀ = R⁻ᵀ` comes from one triangular
    /// solve and `U⁻¹` is never formed.
    pub fn sampling_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.rank();
        if d == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let r = cholesky(&self.u, "U")?.l();
        let rt = r.transpose();
        rt.solve_upper_triangular(&DMatrix::identity(d, d))
            .ok_or_else(|| Error::numerical("triangular solve for U^-1/2 failed", "zero pivot in Cholesky factor"))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.rank() == 0 {
            return f64::INFINITY;
        }
        self.u
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}
