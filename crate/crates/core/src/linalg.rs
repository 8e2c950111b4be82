//! Dense linear algebra substrate: a row-major matrix type, slice helpers for
//! vectors, an SVD wrapper with pseudoinverse application, and the exact
//! least-squares oracle every solver is measured against.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative cutoff below which singular values count as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be nonempty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    op: "DenseMatrix::from_rows",
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, d, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows).map(|i| norm(self.row(i))).collect()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sq.iter_mut().zip(self.row(i)) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// `A x`.
    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("mat_vec", self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`.
    pub fn mat_tvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("mat_tvec", self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// `A B`.
    pub fn mat_mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim("mat_mul", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let (lhs, dst) = (self.row(i), &mut out.data[i * other.cols..(i + 1) * other.cols]);
            for (k, &a) in lhs.iter().enumerate() {
                axpy(a, other.row(k), dst);
            }
        }
        Ok(out)
    }

    /// Rows indexed by `idx`, in the order given.
    pub fn row_submatrix(&self, idx: &[usize]) -> Result<DenseMatrix> {
        check_indices(idx, self.rows)?;
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Ok(DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }

    /// Columns indexed by `idx`, in the order given.
    pub fn col_submatrix(&self, idx: &[usize]) -> Result<DenseMatrix> {
        check_indices(idx, self.cols)?;
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// Scales row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<DenseMatrix> {
        check_dim("scale_rows", self.rows, factors.len())?;
        let mut out = self.clone();
        for (i, &f) in factors.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v *= f);
        }
        Ok(out)
    }

    /// Scales column `j` by `factors[j]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<DenseMatrix> {
        check_dim("scale_columns", self.cols, factors.len())?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, f) in out.row_mut(i).iter_mut().zip(factors) {
                *v *= f;
            }
        }
        Ok(out)
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

fn check_dim(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, expected, got })
    }
}

fn check_indices(idx: &[usize], bound: usize) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    match idx.iter().find(|&&i| i >= bound) {
        Some(&index) => Err(Error::IndexOutOfRange { index, bound }),
        None => Ok(()),
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Thin SVD `A = U Σ Vᵀ` with singular values in nonincreasing order.
///
/// Singular vectors are stored as rows (`ut` is `k×m`, `vt` is `k×n`,
/// `k = min(m, n)`) so that every projection is a sequence of contiguous dot
/// products and axpys.
#[derive(Clone, Debug)]
pub struct Svd {
    rows: usize,
    cols: usize,
    ut: DenseMatrix,
    singular_values: Vec<f64>,
    vt: DenseMatrix,
    rank_tolerance: f64,
    rank: usize,
}

/// Factorizes `a`. Singular values at or below `rank_tolerance · σ₁` are
/// treated as zero by every pseudoinverse operation.
pub fn svd(a: &DenseMatrix, rank_tolerance: f64) -> Result<Svd> {
    if !(0.0..1.0).contains(&rank_tolerance) {
        return Err(Error::Config(format!(
            "rank tolerance {rank_tolerance} outside [0, 1)"
        )));
    }
    let (m, n) = (a.n_rows(), a.n_cols());
    let k = m.min(n);
    let max_iter = 1000 * k.max(10);
    let dec = a
        .to_nalgebra()
        .try_svd(true, true, f64::EPSILON, max_iter)
        .ok_or(Error::SvdNoConvergence { rows: m, cols: n })?;
    let u = dec.u.ok_or(Error::SvdNoConvergence { rows: m, cols: n })?;
    let v_t = dec.v_t.ok_or(Error::SvdNoConvergence { rows: m, cols: n })?;
    let sv = dec.singular_values;
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdNoConvergence { rows: m, cols: n });
    }

    // nalgebra sorts already; keep an explicit ordering so the invariant
    // does not hinge on that.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));

    let mut ut = DenseMatrix::zeros(k, m);
    let mut vt = DenseMatrix::zeros(k, n);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        singular_values.push(sv[src].max(0.0));
        for i in 0..m {
            ut.set(dst, i, u[(i, src)]);
        }
        for j in 0..n {
            vt.set(dst, j, v_t[(src, j)]);
        }
    }
    let cutoff = rank_tolerance * singular_values[0];
    let rank = singular_values
        .iter()
        .take_while(|&&s| s > cutoff && s > 0.0)
        .count();
    Ok(Svd {
        rows: m,
        cols: n,
        ut,
        singular_values,
        vt,
        rank_tolerance,
        rank,
    })
}

impl Svd {
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// Number of singular values above the rank cutoff.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Left singular vectors as an `m×k` matrix.
    pub fn u(&self) -> DenseMatrix {
        self.ut.transpose()
    }

    /// Right singular vectors as an `n×k` matrix.
    pub fn v(&self) -> DenseMatrix {
        self.vt.transpose()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest singular value above the rank cutoff, `None` for a zero matrix.
    pub fn sigma_min_nonzero(&self) -> Option<f64> {
        self.rank.checked_sub(1).map(|i| self.singular_values[i])
    }

    /// `U Σ Vᵀ`, used to check the factorization.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (s, &sigma) in self.singular_values.iter().enumerate() {
            let (u, v) = (self.ut.row(s), self.vt.row(s));
            for (i, &ui) in u.iter().enumerate() {
                axpy(sigma * ui, v, out.row_mut(i));
            }
        }
        out
    }

    /// `A† v = V Σ⁺ Uᵀ v`.
    pub fn pinv_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("pinv_apply", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for s in 0..self.rank {
            let coef = dot(self.ut.row(s), v) / self.singular_values[s];
            axpy(coef, self.vt.row(s), &mut out);
        }
        Ok(out)
    }

    /// In-place `out += A† v`.
    pub fn pinv_apply_add(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("pinv_apply_add", self.rows, v.len())?;
        check_dim("pinv_apply_add", self.cols, out.len())?;
        for s in 0..self.rank {
            let coef = dot(self.ut.row(s), v) / self.singular_values[s];
            axpy(coef, self.vt.row(s), out);
        }
        Ok(())
    }

    /// Orthogonal projection onto range(A): `U_r U_rᵀ v`.
    pub fn project_range(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("project_range", self.rows, v.len())?;
        let mut out = vec![0.0; self.rows];
        for s in 0..self.rank {
            let u = self.ut.row(s);
            axpy(dot(u, v), u, &mut out);
        }
        Ok(out)
    }

    /// In-place `v ← (I − A A†) v`, removing the component in range(A).
    pub fn remove_range_component(&self, v: &mut [f64]) -> Result<()> {
        check_dim("remove_range_component", self.rows, v.len())?;
        for s in 0..self.rank {
            let u = self.ut.row(s);
            let c = dot(u, v);
            axpy(-c, u, v);
        }
        Ok(())
    }

    /// Orthogonal projection onto the row space: `A† A u = V_r V_rᵀ u`.
    pub fn project_row_space(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim("project_row_space", self.cols, u.len())?;
        let mut out = vec![0.0; self.cols];
        for s in 0..self.rank {
            let v = self.vt.row(s);
            axpy(dot(v, u), v, &mut out);
        }
        Ok(out)
    }
}

/// Minimum-norm least-squares solution `A† b` via a full SVD.
pub fn least_squares_oracle(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim("least_squares_oracle", a.n_rows(), b.len())?;
    svd(a, DEFAULT_RANK_TOLERANCE)?.pinv_apply(b)
}

/// Spectral constants of a matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub sigma_min_nonzero: f64,
    pub sigma_max: f64,
    pub frobenius: f64,
    /// `σ_max / σ_min`.
    pub condition: f64,
    /// `‖A‖_F / σ_min`.
    pub scaled_condition: f64,
    pub rank: usize,
}

pub fn spectral_summary(a: &DenseMatrix) -> Result<SpectralSummary> {
    spectral_summary_from(&svd(a, DEFAULT_RANK_TOLERANCE)?, a.frobenius_norm())
}

pub(crate) fn spectral_summary_from(f: &Svd, frobenius: f64) -> Result<SpectralSummary> {
    let sigma_min = f.sigma_min_nonzero().ok_or(Error::ZeroMatrix)?;
    let sigma_max = f.sigma_max();
    Ok(SpectralSummary {
        sigma_min_nonzero: sigma_min,
        sigma_max,
        frobenius,
        condition: sigma_max / sigma_min,
        scaled_condition: frobenius / sigma_min,
        rank: f.rank(),
    })
}
