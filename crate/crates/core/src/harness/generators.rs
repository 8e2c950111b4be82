//! Synthetic test problems: Gaussian systems (consistent, inconsistent, with
//! a wide spread of row norms) and random-line tomography.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, DEFAULT_RANK_TOLERANCE};
use crate::system::LinearSystem;

/// A generated system together with the vector used to build its right-hand
/// side.
#[derive(Clone, Debug)]
pub struct Generated {
    pub system: LinearSystem,
    pub planted: Vec<f64>,
}

fn check_tall(n: usize, d: usize) -> Result<()> {
    if d == 0 || n <= d {
        return Err(Error::Config(format!("need n > d >= 1, got n = {n}, d = {d}")));
    }
    Ok(())
}

fn gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian matrix with unit-norm rows. Rows that come out exactly zero are
/// redrawn.
fn unit_row_gaussian<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, d);
    for i in 0..n {
        loop {
            let row = gaussian_vec(d, rng);
            let r = linalg::norm(&row);
            if r > 0.0 {
                for (dst, v) in a.row_mut(i).iter_mut().zip(&row) {
                    *dst = v / r;
                }
                break;
            }
        }
    }
    a
}

/// `e = (I − AA†)g` for Gaussian `g`, rescaled to norm `residual_norm`.
fn orthogonal_noise<R: Rng + ?Sized>(
    a: &DenseMatrix,
    residual_norm: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let f = linalg::svd(a, DEFAULT_RANK_TOLERANCE)?;
    for _ in 0..100 {
        let mut e = gaussian_vec(a.n_rows(), rng);
        f.remove_range_component(&mut e)?;
        let r = linalg::norm(&e);
        if r > 1e-8 {
            e.iter_mut().for_each(|v| *v *= residual_norm / r);
            return Ok(e);
        }
    }
    Err(Error::Config("range of A fills the whole space; no residual possible".into()))
}

fn assemble(a: DenseMatrix, x: Vec<f64>, noise: Option<Vec<f64>>) -> Result<Generated> {
    let mut b = a.mat_vec(&x)?;
    if let Some(e) = noise {
        linalg::axpy(1.0, &e, &mut b);
    }
    Ok(Generated {
        system: LinearSystem::new(a, b)?,
        planted: x,
    })
}

/// Consistent system `b = Ax` with a row-normalized Gaussian `A` and Gaussian
/// `x`.
pub fn gen_gaussian_rowstd<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Generated> {
    check_tall(n, d)?;
    let a = unit_row_gaussian(n, d, rng);
    let x = gaussian_vec(d, rng);
    assemble(a, x, None)
}

/// Row-normalized Gaussian system with `‖b − A x_LS‖ = residual_norm`, built
/// as `b = A x + e` where `e ⊥ range(A)`.
pub fn gen_inconsistent<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    residual_norm: f64,
    rng: &mut R,
) -> Result<Generated> {
    check_tall(n, d)?;
    if !(residual_norm > 0.0 && residual_norm.is_finite()) {
        return Err(Error::Config(format!(
            "residual norm must be positive, got {residual_norm}"
        )));
    }
    let a = unit_row_gaussian(n, d, rng);
    let x = gaussian_vec(d, rng);
    let e = orthogonal_noise(&a, residual_norm, rng)?;
    assemble(a, x, Some(e))
}

/// Gaussian matrix whose `i`-th row (0-based) has norm `i + 1`. A positive
/// `residual_norm` adds a component orthogonal to the range as in
/// [`gen_inconsistent`]; zero gives a consistent system.
pub fn gen_dynamic_rows<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    residual_norm: f64,
    rng: &mut R,
) -> Result<Generated> {
    check_tall(n, d)?;
    if !(residual_norm >= 0.0 && residual_norm.is_finite()) {
        return Err(Error::Config(format!(
            "residual norm must be nonnegative, got {residual_norm}"
        )));
    }
    let mut a = unit_row_gaussian(n, d, rng);
    for i in 0..n {
        a.row_mut(i).iter_mut().for_each(|v| *v *= (i + 1) as f64);
    }
    let x = gaussian_vec(d, rng);
    let noise = if residual_norm > 0.0 {
        Some(orthogonal_noise(&a, residual_norm, rng)?)
    } else {
        None
    };
    assemble(a, x, noise)
}

/// Intersection lengths of the segment `p → q` with the unit pixels of the
/// `[0, n]²` grid, as `(pixel, length)` pairs with pixel index
/// `row · n + col` (`row` counts along y). Cells are found by sorting the
/// crossings of the segment with grid lines and locating each sub-segment's
/// midpoint.
pub fn line_pixel_lengths(n: usize, p: (f64, f64), q: (f64, f64)) -> Vec<(usize, f64)> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 || n == 0 {
        return Vec::new();
    }
    let mut ts = vec![0.0, 1.0];
    for (start, delta) in [(p.0, dx), (p.1, dy)] {
        if delta != 0.0 {
            for k in 0..=n {
                let t = (k as f64 - start) / delta;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let nf = n as f64;
    let cell = |v: f64| -> Option<usize> {
        if (0.0..=nf).contains(&v) {
            Some((v.floor() as usize).min(n - 1))
        } else {
            None
        }
    };
    let mut out: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let seg = (w[1] - w[0]) * len;
        if seg <= 1e-14 * len {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (Some(col), Some(row)) = (cell(p.0 + tm * dx), cell(p.1 + tm * dy)) else {
            continue;
        };
        let pix = row * n + col;
        match out.iter_mut().find(|(j, _)| *j == pix) {
            Some(entry) => entry.1 += seg,
            None => out.push((pix, seg)),
        }
    }
    out
}

/// Uniform point on edge `e` of `[0, n]²`: 0 bottom, 1 right, 2 top, 3 left.
fn edge_point<R: Rng + ?Sized>(e: usize, n: f64, rng: &mut R) -> (f64, f64) {
    let s = rng.random::<f64>() * n;
    match e {
        0 => (s, 0.0),
        1 => (n, s),
        2 => (s, n),
        _ => (0.0, s),
    }
}

/// Smooth radial bump `exp(−4r²)` on the pixel centres, where `r` is the
/// distance to the grid centre in units of half the grid width; the maximum
/// is scaled to 1.
pub fn radial_phantom(n: usize) -> Vec<f64> {
    let h = n as f64 / 2.0;
    let mut x: Vec<f64> = (0..n * n)
        .map(|j| {
            let (row, col) = (j / n, j % n);
            let (u, v) = ((col as f64 + 0.5 - h) / h, (row as f64 + 0.5 - h) / h);
            (-4.0 * (u * u + v * v)).exp()
        })
        .collect();
    let m = x.iter().cloned().fold(0.0, f64::max);
    x.iter_mut().for_each(|v| *v /= m);
    x
}

/// `f·N² × N²` system of absorption along random lines through an `N × N`
/// grid, each line joining uniform points on two distinct edges of the
/// square. `b = A x` for [`radial_phantom`].
pub fn gen_tomography<R: Rng + ?Sized>(grid: usize, f: usize, rng: &mut R) -> Result<Generated> {
    if grid < 2 || f < 1 {
        return Err(Error::Config(format!(
            "tomography needs N >= 2 and f >= 1, got N = {grid}, f = {f}"
        )));
    }
    let (n, d) = (f * grid * grid, grid * grid);
    let side = grid as f64;
    let mut a = DenseMatrix::zeros(n, d);
    for i in 0..n {
        loop {
            let e1 = rng.random_range(0..4);
            let e2 = (e1 + 1 + rng.random_range(0..3)) % 4;
            let (p, q) = (edge_point(e1, side, rng), edge_point(e2, side, rng));
            let hits = line_pixel_lengths(grid, p, q);
            if !hits.is_empty() {
                let row = a.row_mut(i);
                for (j, l) in hits {
                    row[j] = l;
                }
                break;
            }
        }
    }
    assemble(a, radial_phantom(grid), None)
}
