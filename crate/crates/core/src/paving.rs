//! Row and column partitions, diagonal standardization, and measurement of
//! paving parameters `(p, α, β)`.
//!
//! A `(p, α, β)` row paving is a partition of the rows into `p` blocks whose
//! Gram matrices `A_τ A_τᵀ` all have spectrum inside `[α, β]`. A column paving
//! of `A` is a row paving of `Aᵀ`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix, Svd, DEFAULT_RANK_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Rows,
    Columns,
}

impl Axis {
    fn len_of(self, a: &DenseMatrix) -> usize {
        match self {
            Axis::Rows => a.n_rows(),
            Axis::Columns => a.n_cols(),
        }
    }
}

/// Disjoint, exhaustive, nonempty blocks over `0..universe_size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    axis: Axis,
    blocks: Vec<Vec<usize>>,
    universe_size: usize,
}

impl Partition {
    pub fn new(axis: Axis, blocks: Vec<Vec<usize>>, universe_size: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut seen = vec![false; universe_size];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= universe_size {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} outside universe of size {universe_size}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {missing} not covered")));
        }
        Ok(Self {
            axis,
            blocks,
            universe_size,
        })
    }

    /// A single block holding every index.
    pub fn whole(axis: Axis, universe_size: usize) -> Result<Self> {
        Self::new(axis, vec![(0..universe_size).collect()], universe_size)
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    fn check_conforms(&self, a: &DenseMatrix) -> Result<()> {
        let want = self.axis.len_of(a);
        if want != self.universe_size {
            return Err(Error::DimensionMismatch {
                op: "partition",
                expected: want,
                got: self.universe_size,
            });
        }
        Ok(())
    }

    /// Submatrix selected by block `k` (rows or columns depending on the axis).
    pub fn submatrix(&self, a: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
        self.check_conforms(a)?;
        match self.axis {
            Axis::Rows => a.row_submatrix(&self.blocks[k]),
            Axis::Columns => a.col_submatrix(&self.blocks[k]),
        }
    }
}

/// Uniformly random permutation of `0..universe_size` cut into `p`
/// contiguous chunks; the first `universe_size % p` chunks get one extra index.
pub fn random_partition<R: Rng + ?Sized>(
    axis: Axis,
    universe_size: usize,
    p: usize,
    rng: &mut R,
) -> Result<Partition> {
    if p == 0 || p > universe_size {
        return Err(Error::InvalidPartition(format!(
            "cannot split {universe_size} indices into {p} nonempty blocks"
        )));
    }
    let mut perm: Vec<usize> = (0..universe_size).collect();
    perm.shuffle(rng);
    let (base, extra) = (universe_size / p, universe_size % p);
    let mut blocks = Vec::with_capacity(p);
    let mut start = 0;
    for k in 0..p {
        let len = base + usize::from(k < extra);
        blocks.push(perm[start..start + len].to_vec());
        start += len;
    }
    Partition::new(axis, blocks, universe_size)
}

/// Measured paving parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PavingParams {
    pub p: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Extreme eigenvalues `(λ_min, λ_max)` of the Gram matrix of each block,
/// where the Gram matrix is `A_τ A_τᵀ` for row blocks and `A_τᵀ A_τ` for
/// column blocks.
pub fn block_gram_extremes(a: &DenseMatrix, partition: &Partition) -> Result<Vec<(f64, f64)>> {
    partition.check_conforms(a)?;
    (0..partition.len())
        .map(|k| {
            let block = partition.submatrix(a, k)?;
            let f = svd(&block, 0.0)?;
            let sv = f.singular_values();
            let size = partition.block(k).len();
            // Gram order is the block size; if it exceeds the other dimension
            // the Gram matrix is singular.
            let lmin = if sv.len() == size { sv[size - 1].powi(2) } else { 0.0 };
            Ok((lmin, sv[0].powi(2)))
        })
        .collect()
}

pub fn paving_bounds(a: &DenseMatrix, partition: &Partition) -> Result<PavingParams> {
    let ext = block_gram_extremes(a, partition)?;
    let alpha = ext.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let beta = ext.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(PavingParams {
        p: partition.len(),
        alpha,
        beta,
    })
}

/// Diagonal scaling `D` stored as its diagonal entries (the reciprocals of
/// the original row or column norms).
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalScaling {
    reciprocals: Vec<f64>,
}

impl DiagonalScaling {
    pub fn new(reciprocals: Vec<f64>) -> Result<Self> {
        if let Some(i) = reciprocals.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config(format!(
                "scaling entry {i} must be positive and finite"
            )));
        }
        Ok(Self { reciprocals })
    }

    pub fn reciprocals(&self) -> &[f64] {
        &self.reciprocals
    }

    pub fn len(&self) -> usize {
        self.reciprocals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reciprocals.is_empty()
    }
}

/// `D̃ A` with unit-norm rows.
pub fn row_standardize(a: &DenseMatrix) -> Result<(DenseMatrix, DiagonalScaling)> {
    let norms = a.row_norms();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroRow(i));
    }
    let recip: Vec<f64> = norms.iter().map(|n| 1.0 / n).collect();
    let mut out = a.clone();
    for (i, &n) in norms.iter().enumerate() {
        for (dst, &src) in out.row_mut(i).iter_mut().zip(a.row(i)) {
            *dst = src / n;
        }
    }
    Ok((out, DiagonalScaling::new(recip)?))
}

/// `A D` with unit-norm columns.
pub fn column_standardize(a: &DenseMatrix) -> Result<(DenseMatrix, DiagonalScaling)> {
    let norms = a.column_norms();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let mut out = a.clone();
    for i in 0..a.n_rows() {
        for (v, n) in out.row_mut(i).iter_mut().zip(&norms) {
            *v /= n;
        }
    }
    let recip = norms.iter().map(|n| 1.0 / n).collect();
    Ok((out, DiagonalScaling::new(recip)?))
}

/// Maps an iterate of the column-standardized system back to the original
/// variables: `x = D x̄`.
pub fn unscale_solution(x: &[f64], scaling: &DiagonalScaling) -> Result<Vec<f64>> {
    if x.len() != scaling.len() {
        return Err(Error::DimensionMismatch {
            op: "unscale_solution",
            expected: scaling.len(),
            got: x.len(),
        });
    }
    Ok(x.iter().zip(&scaling.reciprocals).map(|(v, d)| v * d).collect())
}

/// `max ‖a_i‖² / min ‖a_i‖²`.
pub fn dynamic_range(a: &DenseMatrix) -> Result<f64> {
    let norms = a.row_norms();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroRow(i));
    }
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max / min).powi(2))
}

/// SVD of every block submatrix, in partition order.
pub fn block_factorizations(a: &DenseMatrix, partition: &Partition) -> Result<Vec<Svd>> {
    partition.check_conforms(a)?;
    (0..partition.len())
        .map(|k| svd(&partition.submatrix(a, k)?, DEFAULT_RANK_TOLERANCE))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{distance, least_squares_oracle, norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn sorted_union(p: &Partition) -> Vec<usize> {
        let mut all: Vec<usize> = p.blocks().iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(Axis::Rows, vec![vec![0, 1], vec![2]], 3).is_ok());
        assert!(Partition::new(Axis::Rows, vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Partition::new(Axis::Rows, vec![vec![0], vec![]], 1).is_err());
        assert!(Partition::new(Axis::Rows, vec![vec![0]], 2).is_err());
        assert!(Partition::new(Axis::Rows, vec![vec![0, 5]], 2).is_err());
    }

    #[test]
    fn random_partition_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_partition(Axis::Rows, 4, 4, &mut rng).unwrap();
        assert!(p.blocks().iter().all(|b| b.len() == 1));
        assert_eq!(sorted_union(&p), vec![0, 1, 2, 3]);

        let p = random_partition(Axis::Rows, 4, 1, &mut rng).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(sorted_union(&p), vec![0, 1, 2, 3]);

        let p = random_partition(Axis::Columns, 10, 3, &mut rng).unwrap();
        let sizes: Vec<usize> = p.blocks().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_eq!(sorted_union(&p), (0..10).collect::<Vec<_>>());

        assert!(random_partition(Axis::Rows, 4, 0, &mut rng).is_err());
        assert!(random_partition(Axis::Rows, 4, 5, &mut rng).is_err());
    }

    #[test]
    fn random_partition_is_seed_deterministic() {
        let a = random_partition(Axis::Rows, 50, 7, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_partition(Axis::Rows, 50, 7, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c = random_partition(Axis::Rows, 50, 7, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn paving_bounds_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let i4 = DenseMatrix::identity(4);
        let p = random_partition(Axis::Rows, 4, 2, &mut rng).unwrap();
        let pp = paving_bounds(&i4, &p).unwrap();
        assert_eq!(pp.p, 2);
        assert!((pp.alpha - 1.0).abs() < 1e-14 && (pp.beta - 1.0).abs() < 1e-14);

        let d = DenseMatrix::diag(&[2.0, 1.0]);
        let singles = Partition::new(Axis::Rows, vec![vec![0], vec![1]], 2).unwrap();
        let pp = paving_bounds(&d, &singles).unwrap();
        assert!((pp.alpha - 1.0).abs() < 1e-14);
        assert!((pp.beta - 4.0).abs() < 1e-14);

        let wrong = Partition::whole(Axis::Rows, 3).unwrap();
        assert!(matches!(
            paving_bounds(&d, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tall_row_block_has_zero_alpha() {
        // 3 rows in R^2 cannot have a nonsingular 3x3 Gram matrix.
        let a = gaussian(3, 2, 4);
        let pp = paving_bounds(&a, &Partition::whole(Axis::Rows, 3).unwrap()).unwrap();
        assert_eq!(pp.alpha, 0.0);
        assert!(pp.beta > 0.0);
    }

    #[test]
    fn column_paving_is_row_paving_of_transpose() {
        let a = gaussian(12, 9, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cols = random_partition(Axis::Columns, 9, 3, &mut rng).unwrap();
        let rows_of_t = Partition::new(Axis::Rows, cols.blocks().to_vec(), 9).unwrap();
        let lhs = paving_bounds(&a, &cols).unwrap();
        let rhs = paving_bounds(&a.transpose(), &rows_of_t).unwrap();
        assert!((lhs.alpha - rhs.alpha).abs() <= 1e-12 * rhs.beta);
        assert!((lhs.beta - rhs.beta).abs() <= 1e-12 * rhs.beta);
    }

    #[test]
    fn row_standardize_examples() {
        let (a, _) = row_standardize(&gaussian(6, 3, 7)).unwrap();
        let (b, s) = row_standardize(&a).unwrap();
        assert!(distance(a.as_slice(), b.as_slice()) < 1e-15);
        assert!(s.reciprocals().iter().all(|r| (r - 1.0).abs() < 1e-15));

        let (m, s) = row_standardize(&DenseMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap()).unwrap();
        assert!(distance(m.as_slice(), &[0.6, 0.8]) < 1e-15);
        assert!((s.reciprocals()[0] - 0.2).abs() < 1e-16);

        let raw = gaussian(15, 4, 8);
        let (m, s) = row_standardize(&raw).unwrap();
        for nrm in m.row_norms() {
            assert!((nrm - 1.0).abs() <= 1e-12);
        }
        let back = raw.scale_rows(s.reciprocals()).unwrap();
        assert!(distance(back.as_slice(), m.as_slice()) <= 1e-14 * m.frobenius_norm());

        let zero_row = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(row_standardize(&zero_row), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn column_standardize_examples() {
        let q = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let (m, s) = column_standardize(&q).unwrap();
        assert_eq!(m, q);
        assert_eq!(s.reciprocals(), &[1.0, 1.0]);

        let col = DenseMatrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let (m, _) = column_standardize(&col).unwrap();
        assert!(distance(m.as_slice(), &[0.6, 0.8]) < 1e-15);

        let (m, _) = column_standardize(&gaussian(9, 5, 9)).unwrap();
        for nrm in m.column_norms() {
            assert!((nrm - 1.0).abs() <= 1e-12);
        }

        let zero_col = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(column_standardize(&zero_col), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn unscale_examples() {
        let ones = DiagonalScaling::new(vec![1.0; 3]).unwrap();
        assert_eq!(unscale_solution(&[1.0, -2.0, 3.0], &ones).unwrap(), vec![1.0, -2.0, 3.0]);
        let s = DiagonalScaling::new(vec![0.5, 1.0]).unwrap();
        assert_eq!(unscale_solution(&[2.0, 2.0], &s).unwrap(), vec![1.0, 2.0]);
        assert!(unscale_solution(&[1.0], &s).is_err());
        assert!(DiagonalScaling::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn standardized_solve_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = gaussian(25, 8, 11).scale_columns(&[1.0, 10.0, 0.1, 3.0, 1.0, 50.0, 0.5, 2.0]).unwrap();
        let b: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let direct = least_squares_oracle(&a, &b).unwrap();
        let (abar, s) = column_standardize(&a).unwrap();
        let via = unscale_solution(&least_squares_oracle(&abar, &b).unwrap(), &s).unwrap();
        assert!(distance(&direct, &via) <= 1e-8 * norm(&direct));
    }

    #[test]
    fn dynamic_range_examples() {
        let (a, _) = row_standardize(&gaussian(5, 3, 12)).unwrap();
        assert!((dynamic_range(&a).unwrap() - 1.0).abs() < 1e-12);
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!((dynamic_range(&b).unwrap() - 4.0).abs() < 1e-15);
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(dynamic_range(&z), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn block_factorization_examples() {
        let i4 = DenseMatrix::identity(4);
        let p = Partition::new(Axis::Rows, vec![vec![0, 2], vec![1, 3]], 4).unwrap();
        for f in block_factorizations(&i4, &p).unwrap() {
            assert!(f.singular_values().iter().all(|s| (s - 1.0).abs() < 1e-14));
        }

        let a = gaussian(7, 4, 13);
        let whole = block_factorizations(&a, &Partition::whole(Axis::Rows, 7).unwrap()).unwrap();
        let direct = svd(&a, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(whole.len(), 1);
        assert!(distance(whole[0].singular_values(), direct.singular_values()) < 1e-13);

        let a = gaussian(20, 10, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for axis in [Axis::Rows, Axis::Columns] {
            let p = random_partition(axis, axis.len_of(&a), 4, &mut rng).unwrap();
            let fs = block_factorizations(&a, &p).unwrap();
            for (k, f) in fs.iter().enumerate() {
                let block = p.submatrix(&a, k).unwrap();
                let err = distance(f.reconstruct().as_slice(), block.as_slice());
                assert!(err <= 1e-10 * block.frobenius_norm());
            }
        }
    }
}
