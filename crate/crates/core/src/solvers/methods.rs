//! Single-step updates for each method.
//!
//! Every method exposes a deterministic `update` taking the already-sampled
//! indices, and a `step` that draws those indices from the random stream and
//! calls `update`. Row/column sampling for the single-row methods is
//! proportional to squared norms; block sampling is uniform. All draws are
//! with replacement.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::{SolverRng, SolverState};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix, Svd};
use crate::paving::{block_factorizations, Axis, DiagonalScaling, Partition};

/// A fixed partition with each block's submatrix and SVD precomputed.
#[derive(Clone, Debug)]
pub struct BlockSet {
    partition: Partition,
    blocks: Vec<DenseMatrix>,
    factors: Vec<Svd>,
}

impl BlockSet {
    pub fn new(a: &DenseMatrix, partition: Partition) -> Result<Self> {
        let factors = block_factorizations(a, &partition)?;
        let blocks = (0..partition.len())
            .map(|k| partition.submatrix(a, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            partition,
            blocks,
            factors,
        })
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn indices(&self, k: usize) -> &[usize] {
        self.partition.block(k)
    }

    pub fn block(&self, k: usize) -> &DenseMatrix {
        &self.blocks[k]
    }

    pub fn factor(&self, k: usize) -> &Svd {
        &self.factors[k]
    }

    fn sample(&self, rng: &mut SolverRng) -> usize {
        rng.random_range(0..self.len())
    }

    /// `x ← x + (A_υ)† (rhs_υ − A_υ x)`, where `rhs_υ` is produced per row
    /// index by `rhs`.
    fn project_rows(&self, k: usize, x: &mut [f64], rhs: impl Fn(usize) -> f64) {
        let block = &self.blocks[k];
        let resid: Vec<f64> = self
            .indices(k)
            .iter()
            .enumerate()
            .map(|(j, &i)| rhs(i) - dot(block.row(j), x))
            .collect();
        self.factors[k]
            .pinv_apply_add(&resid, x)
            .expect("block factorization conforms to its block");
    }
}

fn squared_norms_checked(norms: Vec<f64>, zero: impl Fn(usize) -> Error) -> Result<Vec<f64>> {
    match norms.iter().position(|&n| n == 0.0) {
        Some(i) => Err(zero(i)),
        None => Ok(norms.into_iter().map(|n| n * n).collect()),
    }
}

fn norm_sampler(weights: &[f64]) -> Result<WeightedAliasIndex<f64>> {
    WeightedAliasIndex::new(weights.to_vec())
        .map_err(|e| Error::Config(format!("cannot build sampler: {e}")))
}

fn check_rhs(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows() != b.len() {
        return Err(Error::DimensionMismatch {
            op: "solver rhs",
            expected: a.n_rows(),
            got: b.len(),
        });
    }
    Ok(())
}

fn check_axis(p: &Partition, axis: Axis) -> Result<()> {
    if p.axis() != axis {
        return Err(Error::Config(format!(
            "expected a {axis:?} partition, got {:?}",
            p.axis()
        )));
    }
    Ok(())
}

/// Randomized Kaczmarz: project onto the hyperplane of one row.
pub struct RandomizedKaczmarz<'a> {
    a: &'a DenseMatrix,
    b: &'a [f64],
    row_norms_sq: Vec<f64>,
    rows: WeightedAliasIndex<f64>,
}

impl<'a> RandomizedKaczmarz<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64]) -> Result<Self> {
        check_rhs(a, b)?;
        let row_norms_sq = squared_norms_checked(a.row_norms(), Error::ZeroRow)?;
        let rows = norm_sampler(&row_norms_sq)?;
        Ok(Self {
            a,
            b,
            row_norms_sq,
            rows,
        })
    }

    pub fn update(&self, state: &mut SolverState, i: usize) {
        let row = self.a.row(i);
        let c = (self.b[i] - dot(row, &state.x)) / self.row_norms_sq[i];
        axpy(c, row, &mut state.x);
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let i = self.rows.sample(rng);
        self.update(state, i);
    }
}

/// Randomized Extended Kaczmarz: a column projection on `z` followed by a
/// row projection on `x` against `b − z`.
pub struct ExtendedKaczmarz<'a> {
    a: &'a DenseMatrix,
    // Aᵀ, so that columns are contiguous.
    columns: DenseMatrix,
    b: &'a [f64],
    row_norms_sq: Vec<f64>,
    col_norms_sq: Vec<f64>,
    rows: WeightedAliasIndex<f64>,
    cols: WeightedAliasIndex<f64>,
}

impl<'a> ExtendedKaczmarz<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64]) -> Result<Self> {
        check_rhs(a, b)?;
        let row_norms_sq = squared_norms_checked(a.row_norms(), Error::ZeroRow)?;
        let col_norms_sq = squared_norms_checked(a.column_norms(), Error::ZeroColumn)?;
        let rows = norm_sampler(&row_norms_sq)?;
        let cols = norm_sampler(&col_norms_sq)?;
        Ok(Self {
            a,
            columns: a.transpose(),
            b,
            row_norms_sq,
            col_norms_sq,
            rows,
            cols,
        })
    }

    /// Column projection with column `k`, then row projection with row `i`.
    pub fn update(&self, state: &mut SolverState, i: usize, k: usize) {
        let col = self.columns.row(k);
        let c = dot(col, &state.z) / self.col_norms_sq[k];
        axpy(-c, col, &mut state.z);

        let row = self.a.row(i);
        let r = (self.b[i] - state.z[i] - dot(row, &state.x)) / self.row_norms_sq[i];
        axpy(r, row, &mut state.x);
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let k = self.cols.sample(rng);
        let i = self.rows.sample(rng);
        self.update(state, i, k);
    }
}

/// Block Kaczmarz over a row partition.
pub struct BlockKaczmarz<'a> {
    b: &'a [f64],
    rows: BlockSet,
}

impl<'a> BlockKaczmarz<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64], rows: Partition) -> Result<Self> {
        check_rhs(a, b)?;
        check_axis(&rows, Axis::Rows)?;
        Ok(Self {
            b,
            rows: BlockSet::new(a, rows)?,
        })
    }

    pub fn row_blocks(&self) -> &BlockSet {
        &self.rows
    }

    pub fn update(&self, state: &mut SolverState, row_block: usize) {
        let b = self.b;
        self.rows.project_rows(row_block, &mut state.x, |i| b[i]);
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let k = self.rows.sample(rng);
        self.update(state, k);
    }
}

/// Randomized double block Kaczmarz: a column-block projection removes the
/// range component of `z`, then a row-block projection moves `x` toward
/// `b − z` on that block.
pub struct DoubleBlockKaczmarz<'a> {
    b: &'a [f64],
    rows: BlockSet,
    cols: BlockSet,
}

impl<'a> DoubleBlockKaczmarz<'a> {
    pub fn new(
        a: &'a DenseMatrix,
        b: &'a [f64],
        rows: Partition,
        cols: Partition,
    ) -> Result<Self> {
        check_rhs(a, b)?;
        check_axis(&rows, Axis::Rows)?;
        check_axis(&cols, Axis::Columns)?;
        Ok(Self {
            b,
            rows: BlockSet::new(a, rows)?,
            cols: BlockSet::new(a, cols)?,
        })
    }

    pub fn row_blocks(&self) -> &BlockSet {
        &self.rows
    }

    pub fn col_blocks(&self) -> &BlockSet {
        &self.cols
    }

    pub fn update(&self, state: &mut SolverState, col_block: usize, row_block: usize) {
        self.cols
            .factor(col_block)
            .remove_range_component(&mut state.z)
            .expect("z has one entry per row");
        let (b, z) = (self.b, &state.z);
        self.rows.project_rows(row_block, &mut state.x, |i| b[i] - z[i]);
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let tau = self.cols.sample(rng);
        let upsilon = self.rows.sample(rng);
        self.update(state, tau, upsilon);
    }
}

/// Randomized block least-squares (block coordinate descent) over a column
/// partition. Maintains `z = b − A x` exactly up to rounding.
///
/// With column standardization the iteration runs on `Ā = A D` and
/// [`BlockLeastSquares::solution`] maps the iterate back through `D`.
pub struct BlockLeastSquares<'a> {
    b: &'a [f64],
    cols: BlockSet,
    scaling: Option<DiagonalScaling>,
}

impl<'a> BlockLeastSquares<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64], cols: Partition) -> Result<Self> {
        check_rhs(a, b)?;
        check_axis(&cols, Axis::Columns)?;
        Ok(Self {
            b,
            cols: BlockSet::new(a, cols)?,
            scaling: None,
        })
    }

    /// Runs on the column-standardized matrix.
    pub fn standardized(a: &'a DenseMatrix, b: &'a [f64], cols: Partition) -> Result<Self> {
        check_rhs(a, b)?;
        check_axis(&cols, Axis::Columns)?;
        let (abar, scaling) = crate::paving::column_standardize(a)?;
        Ok(Self {
            b,
            cols: BlockSet::new(&abar, cols)?,
            scaling: Some(scaling),
        })
    }

    pub fn col_blocks(&self) -> &BlockSet {
        &self.cols
    }

    pub fn scaling(&self) -> Option<&DiagonalScaling> {
        self.scaling.as_ref()
    }

    pub fn rhs(&self) -> &[f64] {
        self.b
    }

    /// `w = (A_τ)† z; x_τ += w; z −= A_τ w`.
    pub fn update(&self, state: &mut SolverState, col_block: usize) {
        let w = self
            .cols
            .factor(col_block)
            .pinv_apply(&state.z)
            .expect("z has one entry per row");
        for (&j, wj) in self.cols.indices(col_block).iter().zip(&w) {
            state.x[j] += wj;
        }
        let block = self.cols.block(col_block);
        for (i, zi) in state.z.iter_mut().enumerate() {
            *zi -= dot(block.row(i), &w);
        }
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let tau = self.cols.sample(rng);
        self.update(state, tau);
    }

    /// The iterate in the original variables.
    pub fn solution(&self, state: &SolverState) -> Vec<f64> {
        match &self.scaling {
            Some(s) => crate::paving::unscale_solution(&state.x, s)
                .expect("iterate conforms to the scaling"),
            None => state.x.clone(),
        }
    }
}

/// Single-column REK projection paired with a block Kaczmarz row update.
/// Kept only to reproduce the observation that mixing step sizes this way
/// converges poorly.
pub struct HybridRekBlock<'a> {
    columns: DenseMatrix,
    col_norms_sq: Vec<f64>,
    cols: WeightedAliasIndex<f64>,
    b: &'a [f64],
    rows: BlockSet,
}

impl<'a> HybridRekBlock<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64], rows: Partition) -> Result<Self> {
        check_rhs(a, b)?;
        check_axis(&rows, Axis::Rows)?;
        let col_norms_sq = squared_norms_checked(a.column_norms(), Error::ZeroColumn)?;
        Ok(Self {
            columns: a.transpose(),
            cols: norm_sampler(&col_norms_sq)?,
            col_norms_sq,
            b,
            rows: BlockSet::new(a, rows)?,
        })
    }

    pub fn row_blocks(&self) -> &BlockSet {
        &self.rows
    }

    pub fn update(&self, state: &mut SolverState, col: usize, row_block: usize) {
        let c = self.columns.row(col);
        let coef = dot(c, &state.z) / self.col_norms_sq[col];
        axpy(-coef, c, &mut state.z);
        let (b, z) = (self.b, &state.z);
        self.rows.project_rows(row_block, &mut state.x, |i| b[i] - z[i]);
        state.iteration += 1;
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        let k = self.cols.sample(rng);
        let upsilon = self.rows.sample(rng);
        self.update(state, k, upsilon);
    }
}
