use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, SpectralSummary, DEFAULT_RANK_TOLERANCE};

/// A least-squares problem together with its exact solution and the
/// orthogonal split `b = b_range + b_perp` with `b_range ∈ range(A)`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_ls: Vec<f64>,
    pub spectral: SpectralSummary,
    pub b_range: Vec<f64>,
    pub b_perp: Vec<f64>,
}

impl LinearSystem {
    /// Computes the oracle quantities from one full SVD of `a`.
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.n_rows() {
            return Err(Error::DimensionMismatch {
                op: "LinearSystem::new",
                expected: a.n_rows(),
                got: b.len(),
            });
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let f = linalg::svd(&a, DEFAULT_RANK_TOLERANCE)?;
        let spectral = linalg::spectral_summary_from(&f, a.frobenius_norm())?;
        let x_ls = f.pinv_apply(&b)?;
        let b_range = f.project_range(&b)?;
        let b_perp = linalg::sub(&b, &b_range);
        Ok(Self {
            a,
            b,
            x_ls,
            spectral,
            b_range,
            b_perp,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.a.n_cols()
    }

    /// `‖x − x_LS‖₂`.
    pub fn error(&self, x: &[f64]) -> f64 {
        linalg::distance(x, &self.x_ls)
    }

    /// `‖b − A x‖₂`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r = 0.0;
        for (i, bi) in self.b.iter().enumerate() {
            let e = bi - linalg::dot(self.a.row(i), x);
            r += e * e;
        }
        r.sqrt()
    }

    /// The least-squares residual `b − A x_LS`, which equals `b_perp`.
    pub fn ls_residual(&self) -> Vec<f64> {
        self.b_perp.clone()
    }
}
