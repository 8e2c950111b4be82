//! Reference computations for integration tests, written without the
//! library's linear algebra: cyclic Jacobi for symmetric eigenvalues and
//! Gaussian elimination with partial pivoting for the normal equations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Row-major dense matrix as nested vectors.
pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn normalize_rows(a: &mut Mat) {
    for row in a.iter_mut() {
        let r = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter_mut().for_each(|v| *v /= r);
    }
}

pub fn to_dense(a: &Mat) -> rbk::DenseMatrix {
    rbk::DenseMatrix::from_rows(a).unwrap()
}

pub fn from_dense(a: &rbk::DenseMatrix) -> Mat {
    (0..a.n_rows()).map(|i| a.row(i).to_vec()).collect()
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn matvec_t(a: &Mat, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a[0].len()];
    for (row, yi) in a.iter().zip(y) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * yi;
        }
    }
    out
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `Aᵀ A`.
pub fn gram_cols(a: &Mat) -> Mat {
    let d = a[0].len();
    let mut g = vec![vec![0.0; d]; d];
    for row in a {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// `A Aᵀ`.
pub fn gram_rows(a: &Mat) -> Mat {
    a.iter()
        .map(|r| a.iter().map(|s| r.iter().zip(s).map(|(p, q)| p * q).sum()).collect())
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &Mat) -> Vec<f64> {
    let n = m.len();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Extreme singular values `(σ_min, σ_max)` of a full-column-rank matrix.
pub fn singular_extremes(a: &Mat) -> (f64, f64) {
    let ev = jacobi_eigenvalues(&gram_cols(a));
    (ev[0].max(0.0).sqrt(), ev[ev.len() - 1].sqrt())
}

/// Solves `M x = r` by Gaussian elimination with partial pivoting.
pub fn solve(m: &Mat, r: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut a: Mat = m
        .iter()
        .zip(r)
        .map(|(row, &v)| {
            let mut row = row.clone();
            row.push(v);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for k in col..=n {
                a[i][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

/// Least-squares solution of a full-column-rank system via the normal
/// equations.
pub fn least_squares(a: &Mat, b: &[f64]) -> Vec<f64> {
    solve(&gram_cols(a), &matvec_t(a, b))
}

/// Orthogonal projection of `u` onto the row space of a full-row-rank `a`:
/// `aᵀ (a aᵀ)⁻¹ a u`.
pub fn project_row_space(a: &Mat, u: &[f64]) -> Vec<f64> {
    matvec_t(a, &solve(&gram_rows(a), &matvec(a, u)))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
