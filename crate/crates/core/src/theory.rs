//! Closed-form convergence bounds and rate constants.
//!
//! Every evaluator takes measured quantities (singular values, paving
//! parameters, oracle norms), so empirical traces can be overlaid on the
//! envelopes they are supposed to respect.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::paving::{PavingParams, Partition};
use crate::system::LinearSystem;

/// `1 − σ_min²/(p·β)`, clamped at 0 to absorb rounding when a single
/// orthonormal block makes the rate exactly zero.
pub fn paving_gamma(sigma_min: f64, paving: &PavingParams) -> Result<f64> {
    if !(paving.beta > 0.0) || paving.p == 0 {
        return Err(Error::VacuousBound(format!(
            "paving with p = {} and beta = {} has no rate",
            paving.p, paving.beta
        )));
    }
    Ok((1.0 - sigma_min * sigma_min / (paving.p as f64 * paving.beta)).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateConstants {
    /// Row-paving rate `γ`.
    pub gamma_row: f64,
    /// Column-paving rate `γ̄`.
    pub gamma_col: f64,
    pub alpha_row: f64,
    pub sigma_min: f64,
    /// `‖b_R(A)‖₂`.
    pub b_range_norm: f64,
    pub b_perp_norm: f64,
}

pub fn rate_constants(
    system: &LinearSystem,
    row_paving: &PavingParams,
    col_paving: &PavingParams,
) -> Result<RateConstants> {
    let sigma_min = system.spectral.sigma_min_nonzero;
    Ok(RateConstants {
        gamma_row: paving_gamma(sigma_min, row_paving)?,
        gamma_col: paving_gamma(sigma_min, col_paving)?,
        alpha_row: row_paving.alpha,
        sigma_min,
        b_range_norm: linalg::norm(&system.b_range),
        b_perp_norm: linalg::norm(&system.b_perp),
    })
}

fn check_rate(name: &str, g: f64) -> Result<()> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::VacuousBound(format!("{name} = {g} is outside [0, 1)")));
    }
    Ok(())
}

fn pow(g: f64, t: usize) -> f64 {
    g.powf(t as f64)
}

/// `γ^T·x0_err_sq + (γ^⌊T/2⌋ + γ̄^⌊T/2⌋)·B/(1−γ)`.
pub fn lemma_recursion_bound(
    t: usize,
    gamma: f64,
    gamma_bar: f64,
    b: f64,
    x0_err_sq: f64,
) -> Result<f64> {
    check_rate("gamma", gamma)?;
    check_rate("gamma_bar", gamma_bar)?;
    let h = t / 2;
    let tail = if b == 0.0 {
        0.0
    } else {
        (pow(gamma, h) + pow(gamma_bar, h)) * b / (1.0 - gamma)
    };
    Ok(pow(gamma, t) * x0_err_sq + tail)
}

/// Expected squared error bound for the double-block method after `t`
/// iterations.
pub fn theorem1_bound(t: usize, c: &RateConstants, x0_err_sq: f64) -> Result<f64> {
    let br2 = c.b_range_norm * c.b_range_norm;
    let b = if br2 == 0.0 {
        0.0
    } else if c.alpha_row > 0.0 {
        br2 / c.alpha_row
    } else {
        return Err(Error::VacuousBound(
            "row paving has alpha = 0 and b has a range component".into(),
        ));
    };
    lemma_recursion_bound(t, c.gamma_row, c.gamma_col, b, x0_err_sq)
}

/// `γ̄^k‖b_R‖²`, the expected squared distance of `z_k` from `b⊥`.
pub fn lemma1_envelope(k: usize, gamma_bar: f64, b_range_norm_sq: f64) -> f64 {
    pow(gamma_bar, k) * b_range_norm_sq
}

/// REK error bound `(1 − 1/K²)^{j/2}(‖x_LS‖² + 2‖b‖²/σ_min²)` where `K` is
/// the scaled condition number `‖A‖_F/σ_min`.
pub fn rek_bound(
    j: usize,
    k_scaled: f64,
    x_ls_norm_sq: f64,
    b_norm_sq: f64,
    sigma_min: f64,
) -> Result<f64> {
    if !(k_scaled >= 1.0) {
        return Err(Error::VacuousBound(format!("scaled condition {k_scaled} < 1")));
    }
    if !(sigma_min > 0.0) {
        return Err(Error::VacuousBound("sigma_min must be positive".into()));
    }
    let rate = 1.0 - 1.0 / (k_scaled * k_scaled);
    Ok(rate.max(0.0).powf(j as f64 / 2.0) * (x_ls_norm_sq + 2.0 * b_norm_sq / (sigma_min * sigma_min)))
}

/// Additive error radius `√R·max_i |e_i|/‖a_i‖` of plain randomized Kaczmarz,
/// with `R = ‖A‖_F²/σ_min²` and `e = b − A x_LS`.
pub fn rk_horizon(system: &LinearSystem) -> Result<f64> {
    let norms = system.a.row_norms();
    let mut worst = 0.0f64;
    for (i, (&e, &r)) in system.b_perp.iter().zip(&norms).enumerate() {
        if r == 0.0 {
            return Err(Error::ZeroRow(i));
        }
        worst = worst.max(e.abs() / r);
    }
    Ok(system.spectral.scaled_condition * worst)
}

/// Block Kaczmarz horizon `3‖e‖²/σ_min²`.
pub fn block_horizon(system: &LinearSystem) -> f64 {
    let s = system.spectral.sigma_min_nonzero;
    3.0 * linalg::norm_sq(&system.b_perp) / (s * s)
}

fn is_unit(v: &[f64]) -> bool {
    v.iter().all(|n| (n - 1.0).abs() <= 1e-10)
}

/// Rate of a paving measured on a row- or column-standardized matrix.
pub fn corollary1_gamma(a_std: &DenseMatrix, paving: &PavingParams) -> Result<f64> {
    if !is_unit(&a_std.row_norms()) && !is_unit(&a_std.column_norms()) {
        return Err(Error::Config(
            "matrix is neither row- nor column-standardized".into(),
        ));
    }
    let s = linalg::spectral_summary(a_std)?;
    paving_gamma(s.sigma_min_nonzero, paving)
}

/// Reference curve `1 − C/(κ² log(1+n))` for a caller-chosen constant `C`.
pub fn corollary1_reference(c: f64, kappa: f64, n: usize) -> f64 {
    1.0 - c / (kappa * kappa * (1.0 + n as f64).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportedPaving {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Smallest `δ` with `1 − δ ≤ α ≤ β ≤ 1 + δ` for a measured paving.
pub fn measured_delta(paving: &PavingParams) -> f64 {
    (paving.beta - 1.0).max(1.0 - paving.alpha).max(0.0)
}

/// Rate obtained by running an unstandardized matrix with the paving of its
/// row-standardized version: with `a_min`, `a_max` the extreme squared row
/// norms, `α ≥ a_min(1−δ)`, `β ≤ a_max(1+δ)` and
/// `γ = 1 − σ_min²/(p·a_max(1+δ))`.
pub fn dynamic_range_gamma(
    a: &DenseMatrix,
    delta: f64,
    paving_std: &PavingParams,
) -> Result<TransportedPaving> {
    if !(delta >= 0.0) {
        return Err(Error::Config(format!("delta must be nonnegative, got {delta}")));
    }
    if paving_std.beta > 1.0 + delta + 1e-12 || paving_std.alpha < 1.0 - delta - 1e-12 {
        return Err(Error::Config(format!(
            "paving ({}, {}) is not within 1 ± {delta}",
            paving_std.alpha, paving_std.beta
        )));
    }
    let sq: Vec<f64> = a.row_norms().iter().map(|r| r * r).collect();
    if let Some(i) = sq.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroRow(i));
    }
    let a_min = sq.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = sq.iter().cloned().fold(0.0, f64::max);
    let alpha = a_min * (1.0 - delta).max(0.0);
    let beta = a_max * (1.0 + delta);
    let s = linalg::spectral_summary(a)?.sigma_min_nonzero;
    let gamma = paving_gamma(
        s,
        &PavingParams {
            p: paving_std.p,
            alpha,
            beta,
        },
    )?;
    Ok(TransportedPaving { gamma, alpha, beta })
}

/// `γ̄^T‖b_R‖²`, bounding `E‖A(x_LS − x_T)‖²` for the block least-squares
/// method.
pub fn theorem2_bound(t: usize, gamma_col: f64, b_range_norm_sq: f64) -> f64 {
    pow(gamma_col, t) * b_range_norm_sq
}

/// Full-rank error form `γ̄^T·κ²·‖x_LS‖²`.
///
/// With `gamma_col` measured on the column-standardized matrix and `kappa`
/// of the original one, this bounds the error of the unscaled iterate.
pub fn corollary2_bound(t: usize, gamma_col: f64, kappa: f64, x_ls_norm_sq: f64) -> f64 {
    pow(gamma_col, t) * kappa * kappa * x_ls_norm_sq
}

/// Exact mean of `‖(I − A_τ†A_τ)u‖²` over the blocks of a row partition.
pub fn mean_block_contraction(a: &DenseMatrix, rows: &Partition, u: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..rows.len() {
        let f = linalg::svd(&rows.submatrix(a, k)?, linalg::DEFAULT_RANK_TOLERANCE)?;
        let p = f.project_row_space(u)?;
        total += linalg::norm_sq(&linalg::sub(u, &p));
    }
    Ok(total / rows.len() as f64)
}
