//! Library behaviour checked against the independent reference computations
//! in `common`.

mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rbk::harness::experiment::{run_experiment, MethodSpec, ProblemSpec};
use rbk::harness::{gen_dynamic_rows, gen_gaussian_rowstd, gen_inconsistent, gen_tomography};
use rbk::linalg::{least_squares_oracle, svd, DEFAULT_RANK_TOLERANCE};
use rbk::paving::{paving_bounds, random_partition, row_standardize, Axis};
use rbk::solvers::{
    BlockLeastSquares, DoubleBlockKaczmarz, Method, MethodConfig, Solver, SolverRng, SolverState,
    StopRule,
};
use rbk::LinearSystem;

fn rel(a: &[f64], b: &[f64]) -> f64 {
    norm_sq(&sub(a, b)).sqrt() / norm_sq(b).sqrt().max(f64::MIN_POSITIVE)
}

fn tall(seed: u64, n: usize, d: usize) -> (Mat, Vec<f64>) {
    let mut r = rng(seed);
    (gaussian(n, d, &mut r), gaussian_vec(n, &mut r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn least_squares_matches_normal_equations(seed in any::<u64>(), d in 2usize..12, extra in 1usize..20) {
        let (a, b) = tall(seed, d + extra, d);
        let lib = least_squares_oracle(&to_dense(&a), &b).unwrap();
        prop_assert!(rel(&lib, &least_squares(&a, &b)) < 1e-8);
        let (_, smax) = singular_extremes(&a);
        let r = sub(&b, &matvec(&a, &lib));
        prop_assert!(norm_sq(&matvec_t(&a, &r)).sqrt() <= 1e-8 * smax * norm_sq(&b).sqrt());
    }

    #[test]
    fn svd_extremes_match_jacobi(seed in any::<u64>(), d in 2usize..10, extra in 0usize..10) {
        let (a, _) = tall(seed, d + extra, d);
        let f = svd(&to_dense(&a), DEFAULT_RANK_TOLERANCE).unwrap();
        let (smin, smax) = singular_extremes(&a);
        prop_assert!((f.sigma_max() - smax).abs() <= 1e-10 * smax);
        prop_assert!((f.sigma_min_nonzero().unwrap() - smin).abs() <= 1e-8 * smax);
        let x = gaussian_vec(d, &mut rng(seed ^ 1));
        prop_assert!(rel(&f.pinv_apply(&matvec(&a, &x)).unwrap(), &x) < 1e-8);
    }

    #[test]
    fn paving_bounds_are_block_eigen_extremes(seed in any::<u64>(), n in 6usize..30, p in 1usize..6, rows in any::<bool>()) {
        let d = 4;
        let (a, _) = tall(seed, n, d);
        let dense = to_dense(&a);
        let (axis, size) = if rows { (Axis::Rows, n) } else { (Axis::Columns, d) };
        let p = p.min(size);
        let part = random_partition(axis, size, p, &mut rng(seed ^ 2)).unwrap();

        let mut all: Vec<usize> = part.blocks().concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..size).collect::<Vec<_>>());

        let pv = paving_bounds(&dense, &part).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for blk in part.blocks() {
            let sub_a: Mat = match axis {
                Axis::Rows => blk.iter().map(|&i| a[i].clone()).collect(),
                Axis::Columns => blk.iter().map(|&j| a.iter().map(|r| r[j]).collect()).collect(),
            };
            let ev = jacobi_eigenvalues(&gram_rows(&sub_a));
            lo = lo.min(ev[0]);
            hi = hi.max(ev[ev.len() - 1]);
        }
        prop_assert!((pv.beta - hi).abs() <= 1e-10 * hi);
        prop_assert!((pv.alpha - lo).abs() <= 1e-10 * hi);
    }

    #[test]
    fn block_cd_keeps_residual_identity(seed in any::<u64>(), p in 1usize..6) {
        let (a, b) = tall(seed, 15, 6);
        let dense = to_dense(&a);
        let cols = random_partition(Axis::Columns, 6, p, &mut rng(seed ^ 3)).unwrap();
        let cd = BlockLeastSquares::new(&dense, &b, cols).unwrap();
        let mut st = SolverState::initial(6, &b);
        let mut srng = SolverRng::seed_from_u64(seed);
        let x_ls = least_squares(&a, &b);
        let b_perp = sub(&b, &matvec(&a, &x_ls));
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            cd.step(&mut st, &mut srng);
            let r = sub(&b, &matvec(&a, &st.x));
            prop_assert!(rel(&st.z, &r) <= 1e-10 || norm_sq(&sub(&st.z, &r)).sqrt() <= 1e-10 * norm_sq(&b).sqrt());
            let gap = norm_sq(&sub(&st.z, &b_perp)).sqrt();
            prop_assert!(gap <= prev * (1.0 + 1e-12) + 1e-14);
            prev = gap;
        }
    }

    #[test]
    fn double_block_step_splits_error_orthogonally(seed in any::<u64>(), pr in 4usize..9, pc in 1usize..4) {
        let (a, b) = tall(seed, 16, 5);
        let dense = to_dense(&a);
        let mut prng = rng(seed ^ 4);
        let rows = random_partition(Axis::Rows, 16, pr, &mut prng).unwrap();
        let cols = random_partition(Axis::Columns, 5, pc, &mut prng).unwrap();
        let db = DoubleBlockKaczmarz::new(&dense, &b, rows.clone(), cols).unwrap();
        let x_ls = least_squares(&a, &b);
        let b_perp = sub(&b, &matvec(&a, &x_ls));
        let mut st = SolverState::initial(5, &b);
        let mut srng = SolverRng::seed_from_u64(seed);
        let mut prev_z = f64::INFINITY;
        for _ in 0..40 {
            let tau = srng.random_range(0..pc);
            let ups = srng.random_range(0..pr);
            let e_prev = sub(&st.x, &x_ls);
            db.update(&mut st, tau, ups);

            // Split via the oracle row-space projection of the sampled block;
            // blocks have at most 4 rows, so they have full row rank.
            let blk: Mat = rows.block(ups).iter().map(|&i| a[i].clone()).collect();
            let kept = sub(&e_prev, &project_row_space(&blk, &e_prev));
            let total = norm_sq(&sub(&st.x, &x_ls));
            let moved = sub(&sub(&st.x, &x_ls), &kept);
            let parts = norm_sq(&kept) + norm_sq(&moved);
            // Below this the split is dominated by rounding in x itself.
            if norm_sq(&e_prev) >= 1e-12 * norm_sq(&x_ls) {
                prop_assert!((total - parts).abs() <= 1e-8 * total);
            }

            let zg = norm_sq(&sub(&st.z, &b_perp)).sqrt();
            prop_assert!(zg <= prev_z * (1.0 + 1e-12) + 1e-14);
            prev_z = zg;
        }
    }
}

use rand::Rng;

#[test]
fn fixed_points_are_invariant() {
    let (a, b) = tall(11, 20, 6);
    let system = LinearSystem::new(to_dense(&a), b.clone()).unwrap();
    let x_ls = least_squares(&a, &b);
    let b_perp = sub(&b, &matvec(&a, &x_ls));
    let mut prng = rng(12);
    let rows = random_partition(Axis::Rows, 20, 4, &mut prng).unwrap();
    let cols = random_partition(Axis::Columns, 6, 2, &mut prng).unwrap();
    for (method, cfg) in [
        (Method::Rek, MethodConfig::new(Method::Rek, 0)),
        (
            Method::DoubleBlock,
            MethodConfig::new(Method::DoubleBlock, 0).with_rows(rows).with_cols(cols.clone()),
        ),
    ] {
        let solver = Solver::new(&system.a, &system.b, &cfg).unwrap();
        let mut st = SolverState::initial(6, &b);
        st.x = x_ls.clone();
        st.z = b_perp.clone();
        let mut srng = SolverRng::seed_from_u64(5);
        for _ in 0..50 {
            solver.step(&mut st, &mut srng);
        }
        assert!(rel(&st.x, &x_ls) < 1e-10, "{method:?} left x_ls");
        assert!(norm_sq(&sub(&st.z, &b_perp)).sqrt() < 1e-10 * norm_sq(&b).sqrt(), "{method:?} left b_perp");
    }

    // Consistent right-hand side: z = 0 with A x = b stays put under BlockCD.
    let x_true = gaussian_vec(6, &mut rng(13));
    let bc = matvec(&a, &x_true);
    let dense = to_dense(&a);
    let cd = BlockLeastSquares::new(&dense, &bc, cols).unwrap();
    let mut st = SolverState::initial(6, &bc);
    st.x = x_true.clone();
    st.z = vec![0.0; 20];
    let mut srng = SolverRng::seed_from_u64(6);
    for _ in 0..50 {
        cd.step(&mut st, &mut srng);
    }
    assert!(rel(&st.x, &x_true) < 1e-10);
}

#[test]
fn generators_split_rhs_orthogonally() {
    let mut r = rng(21);
    let systems = [
        gen_gaussian_rowstd(60, 20, &mut r).unwrap(),
        gen_inconsistent(60, 20, 0.5, &mut r).unwrap(),
        gen_dynamic_rows(60, 20, 0.5, &mut r).unwrap(),
        gen_tomography(6, 3, &mut r).unwrap(),
    ];
    for g in &systems {
        let s = &g.system;
        let a = from_dense(&s.a);
        let x = least_squares(&a, &s.b);
        assert!(rel(&s.x_ls, &x) < 1e-8);
        let bn = norm_sq(&s.b).sqrt();
        assert!(dot(&s.b_range, &s.b_perp).abs() <= 1e-10 * bn * bn);
        assert!(rel(&s.b_range, &matvec(&a, &x)) < 1e-8 || norm_sq(&s.b_range).sqrt() < 1e-12 * bn);
        let (_, smax) = singular_extremes(&a);
        assert!(norm_sq(&matvec_t(&a, &s.b_perp)).sqrt() <= 1e-10 * smax * bn);
        let resid = norm_sq(&sub(&s.b, &matvec(&a, &x))).sqrt();
        let bp = norm_sq(&s.b_perp).sqrt();
        assert!((resid - bp).abs() <= 1e-10 * bn);
    }
    // The inconsistent generator plants the requested residual norm.
    let bp = norm_sq(&systems[1].system.b_perp).sqrt();
    assert!((bp - 0.5).abs() < 1e-10, "residual norm {bp}");
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn standardized_block_cd_solves_the_original_problem() {
    let g = gen_dynamic_rows(80, 20, 0.5, &mut rng(31)).unwrap();
    let x = least_squares(&from_dense(&g.system.a), &g.system.b);
    let cols = random_partition(Axis::Columns, 20, 4, &mut rng(32)).unwrap();
    let cfg = MethodConfig::new(Method::BlockCd, 7).with_cols(cols).standardized(true);
    let solver = Solver::new(&g.system.a, &g.system.b, &cfg).unwrap();
    let (trace, sol) = rbk::solvers::run_to_solution(&solver, &g.system, &StopRule::new(5000, 1e-10).unwrap(), 7);
    assert!(trace.converged);
    assert!(rel(&sol, &x) < 1e-8);
}

#[test]
fn row_standardized_gaussian_paving_beta_stays_small() {
    let mut over = 0;
    for s in 0..40u64 {
        let mut r = rng(400 + s);
        let a = to_dense(&gaussian(300, 100, &mut r));
        let (abar, _) = row_standardize(&a).unwrap();
        let part = random_partition(Axis::Rows, 300, 30, &mut r).unwrap();
        let pv = paving_bounds(&abar, &part).unwrap();
        assert!(pv.alpha.is_finite() && pv.beta.is_finite());
        if pv.beta > 4.0 {
            over += 1;
        }
    }
    assert_eq!(over, 0);
}

#[test]
fn experiments_are_pure_apart_from_cpu_time() {
    let spec = ProblemSpec::inconsistent(60, 20, 0.5, 3);
    let methods = [
        MethodSpec::new(Method::Rek, 1, 1),
        MethodSpec::new(Method::DoubleBlock, 6, 4),
        MethodSpec::new(Method::BlockCd, 1, 4),
    ];
    let stop = StopRule::new(20, 1e-8).unwrap();
    let strip = |e: &rbk::harness::experiment::Experiment| {
        e.records
            .iter()
            .map(|r| {
                let rows: Vec<_> = r.trace.rows.iter().map(|t| (t.epoch, t.iteration, t.error, t.residual, t.z_error)).collect();
                (r.trial, r.method.clone(), rows, r.trace.converged)
            })
            .collect::<Vec<_>>()
    };
    let a = run_experiment(&spec, &methods, 5, &stop).unwrap();
    let b = run_experiment(&spec, &methods, 5, &stop).unwrap();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn oracles_reproduce_closed_forms() {
    // [[2,1],[1,2]] has eigenvalues 1 and 3.
    let ev = jacobi_eigenvalues(&vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    // diag(3, 4) stacked over a zero row.
    let a = vec![vec![3.0, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]];
    assert_eq!(singular_extremes(&a), (3.0, 4.0));
    let x = least_squares(&a, &[6.0, 8.0, 5.0]);
    assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    let p = project_row_space(&vec![vec![1.0, 1.0]], &[1.0, 0.0]);
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
}
