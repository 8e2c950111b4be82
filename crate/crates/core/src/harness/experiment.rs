//! Multi-trial experiments: problem specs, presets, seeded trial runs,
//! median/min/max aggregation and theoretical envelopes.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rayon::prelude::*;

use super::generators::{
    gen_dynamic_rows, gen_gaussian_rowstd, gen_inconsistent, gen_tomography, Generated,
};
use crate::error::{Error, Result};
use crate::linalg::{self, norm_sq};
use crate::paving::{column_standardize, paving_bounds, random_partition, Axis, Partition};
use crate::solvers::{
    epoch_length, run_prepared, Method, MethodConfig, Solver, SolverRng, StopRule, Trace, TraceRow,
};
use crate::system::LinearSystem;
use crate::theory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    GaussianRowstd,
    GaussianInconsistent,
    GaussianDynamicRows,
    Tomography,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    pub residual_norm: f64,
    pub tomo_n: usize,
    pub tomo_f: usize,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn gaussian(n: usize, d: usize, seed: u64) -> Self {
        Self {
            kind: ProblemKind::GaussianRowstd,
            n,
            d,
            residual_norm: 0.0,
            tomo_n: 0,
            tomo_f: 0,
            seed,
        }
    }

    pub fn inconsistent(n: usize, d: usize, residual_norm: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::GaussianInconsistent,
            residual_norm,
            ..Self::gaussian(n, d, seed)
        }
    }

    pub fn dynamic_rows(n: usize, d: usize, residual_norm: f64, seed: u64) -> Self {
        Self {
            kind: ProblemKind::GaussianDynamicRows,
            residual_norm,
            ..Self::gaussian(n, d, seed)
        }
    }

    pub fn tomography(grid: usize, f: usize, seed: u64) -> Self {
        Self {
            kind: ProblemKind::Tomography,
            n: f * grid * grid,
            d: grid * grid,
            residual_norm: 0.0,
            tomo_n: grid,
            tomo_f: f,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let consistent = matches!(self.kind, ProblemKind::GaussianRowstd | ProblemKind::Tomography);
        if consistent && self.residual_norm != 0.0 {
            return Err(Error::Config(format!(
                "{:?} problems are consistent; residual_norm must be 0",
                self.kind
            )));
        }
        if self.kind == ProblemKind::Tomography
            && (self.n != self.tomo_f * self.tomo_n * self.tomo_n || self.d != self.tomo_n * self.tomo_n)
        {
            return Err(Error::Config("tomography sizes must be n = fN², d = N²".into()));
        }
        Ok(())
    }

    /// Builds the system from `seed` alone.
    pub fn generate(&self) -> Result<Generated> {
        self.validate()?;
        let mut rng = SolverRng::seed_from_u64(self.seed);
        match self.kind {
            ProblemKind::GaussianRowstd => gen_gaussian_rowstd(self.n, self.d, &mut rng),
            ProblemKind::GaussianInconsistent => {
                gen_inconsistent(self.n, self.d, self.residual_norm, &mut rng)
            }
            ProblemKind::GaussianDynamicRows => {
                gen_dynamic_rows(self.n, self.d, self.residual_norm, &mut rng)
            }
            ProblemKind::Tomography => gen_tomography(self.tomo_n, self.tomo_f, &mut rng),
        }
    }
}

/// One solver configuration inside an experiment. `label` names the series
/// in every output file and feeds the per-trial seed.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method,
    pub row_blocks: usize,
    pub col_blocks: usize,
    pub standardize: bool,
}

impl MethodSpec {
    pub fn new(method: Method, row_blocks: usize, col_blocks: usize) -> Self {
        Self {
            label: method.tag().to_string(),
            method,
            row_blocks,
            col_blocks,
            standardize: false,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn standardized(mut self) -> Self {
        self.standardize = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetName {
    Fig1,
    Fig2,
    Fig3a,
    Fig3b,
    Figd,
    Fig4,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::Fig1,
        PresetName::Fig2,
        PresetName::Fig3a,
        PresetName::Fig3b,
        PresetName::Figd,
        PresetName::Fig4,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PresetName::Fig1 => "fig1",
            PresetName::Fig2 => "fig2",
            PresetName::Fig3a => "fig3a",
            PresetName::Fig3b => "fig3b",
            PresetName::Figd => "figd",
            PresetName::Fig4 => "fig4",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: PresetName,
    pub spec: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    pub stop: StopRule,
}

pub const DEFAULT_ROW_BLOCKS: usize = 30;
pub const DEFAULT_COL_BLOCKS: usize = 10;
pub const DEFAULT_TRIALS: usize = 40;
pub const SUCCESS_THRESHOLD: f64 = 1e-6;

/// Problem and method line-up for each figure-style experiment.
pub fn preset(name: PresetName, seed: u64, row_blocks: usize, col_blocks: usize) -> Result<Preset> {
    let rek = MethodSpec::new(Method::Rek, 1, 1);
    let double = MethodSpec::new(Method::DoubleBlock, row_blocks, col_blocks);
    let blockcd = MethodSpec::new(Method::BlockCd, 1, col_blocks);
    let (spec, methods, max_epochs) = match name {
        PresetName::Fig1 => (ProblemSpec::gaussian(300, 100, seed), vec![rek, double], 300),
        PresetName::Fig2 => (ProblemSpec::gaussian(300, 100, seed), vec![rek, blockcd], 300),
        PresetName::Fig3a => (
            ProblemSpec::inconsistent(300, 100, 0.5, seed),
            vec![rek, double, MethodSpec::new(Method::BlockKaczmarz, row_blocks, 1)],
            600,
        ),
        PresetName::Fig3b => (
            ProblemSpec::inconsistent(300, 100, 0.5, seed),
            vec![rek, blockcd],
            600,
        ),
        PresetName::Figd => (
            ProblemSpec::dynamic_rows(300, 100, 0.5, seed),
            vec![rek, blockcd.standardized()],
            2000,
        ),
        PresetName::Fig4 => {
            let sizes = [col_blocks, 2 * col_blocks, 4 * col_blocks];
            let mut methods = vec![rek];
            for q in sizes {
                methods.push(MethodSpec::new(Method::BlockCd, 1, q).labeled(format!("blockcd_q{q}")));
            }
            (ProblemSpec::tomography(20, 3, seed), methods, 3000)
        }
    };
    Ok(Preset {
        name,
        spec,
        methods,
        stop: StopRule::new(max_epochs, SUCCESS_THRESHOLD)?,
    })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial, a fixed function of the master seed, the series
/// label and the trial index.
pub fn trial_seed(master: u64, label: &str, trial: u64) -> u64 {
    // FNV-1a of the label keeps the mapping stable across builds.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(mix64(master ^ mix64(h)) ^ trial)
}

/// Stream used to draw an experiment's partitions.
pub fn partition_rng(master: u64) -> SolverRng {
    SolverRng::seed_from_u64(trial_seed(master, "partition", 0))
}

/// A method with its partitions fixed for the whole experiment.
#[derive(Clone, Debug)]
pub struct PreparedMethod {
    pub spec: MethodSpec,
    pub config: MethodConfig,
}

/// Draws partitions for `spec` on an `n × d` matrix.
pub fn prepare_method(spec: &MethodSpec, n: usize, d: usize, rng: &mut SolverRng) -> Result<MethodConfig> {
    let mut cfg = MethodConfig::new(spec.method, 0).standardized(spec.standardize);
    if spec.method.needs_row_partition() {
        cfg = cfg.with_rows(random_partition(Axis::Rows, n, spec.row_blocks, rng)?);
    }
    if spec.method.needs_col_partition() {
        cfg = cfg.with_cols(random_partition(Axis::Columns, d, spec.col_blocks, rng)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub method: String,
    pub trace: Trace,
}

#[derive(Debug)]
pub struct Experiment {
    pub spec: ProblemSpec,
    pub system: LinearSystem,
    pub methods: Vec<PreparedMethod>,
    pub records: Vec<ExperimentRecord>,
}

/// Generates the system once from `spec.seed`, fixes one partition per
/// method, and runs `trials` seeded trials of each method. Trials run in
/// parallel; records come back ordered by method, then trial.
pub fn run_experiment(
    spec: &ProblemSpec,
    methods: &[MethodSpec],
    trials: usize,
    stop: &StopRule,
) -> Result<Experiment> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let system = spec.generate()?.system;
    let mut prng = partition_rng(spec.seed);
    let prepared = methods
        .iter()
        .map(|m| {
            Ok(PreparedMethod {
                spec: m.clone(),
                config: prepare_method(m, system.n_rows(), system.n_cols(), &mut prng)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let solvers = prepared
        .iter()
        .map(|pm| Solver::new(&system.a, &system.b, &pm.config))
        .collect::<Result<Vec<_>>>()?;
    // Trial-major order interleaves methods, so load spikes on a shared
    // machine do not land on one method's CPU times.
    let m = prepared.len();
    let mut traces: Vec<Option<Trace>> = (0..trials * m)
        .into_par_iter()
        .map(|k| {
            let (t, i) = (k / m, k % m);
            let label = prepared[i].spec.label.as_str();
            Some(run_prepared(&solvers[i], &system, stop, trial_seed(spec.seed, label, t as u64)))
        })
        .collect();
    let mut records = Vec::with_capacity(m * trials);
    for (i, pm) in prepared.iter().enumerate() {
        for trial in 0..trials {
            records.push(ExperimentRecord {
                trial,
                method: pm.spec.label.clone(),
                trace: traces[trial * m + i].take().expect("each trace is taken once"),
            });
        }
    }
    Ok(Experiment {
        spec: spec.clone(),
        system,
        methods: prepared,
        records,
    })
}

/// Per-epoch median, minimum and maximum of the error across trials.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub method: String,
    pub epochs: Vec<usize>,
    pub median: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Median CPU seconds at each epoch, for plotting against time.
    pub cpu_median: Vec<f64>,
    /// Whether some trial stopped early and had its final values carried
    /// forward.
    pub padded: bool,
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Row `k` of a trace, or its last row if it stopped earlier.
fn row_at(t: &Trace, k: usize) -> &TraceRow {
    &t.rows[k.min(t.rows.len() - 1)]
}

/// Groups records by method (in order of first appearance) and aggregates
/// them on a common epoch grid.
pub fn aggregate_bands(records: &[ExperimentRecord]) -> Result<Vec<Band>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("experiment records"));
    }
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    let value = |row: &TraceRow| row.error.unwrap_or(row.residual);
    order
        .into_iter()
        .map(|m| {
            let group: Vec<&Trace> = records.iter().filter(|r| r.method == m).map(|r| &r.trace).collect();
            let len = group.iter().map(|t| t.rows.len()).max().unwrap_or(0);
            let padded = group.iter().any(|t| t.rows.len() < len);
            let mut band = Band {
                method: m.to_string(),
                epochs: (0..len).collect(),
                median: Vec::with_capacity(len),
                min: Vec::with_capacity(len),
                max: Vec::with_capacity(len),
                cpu_median: Vec::with_capacity(len),
                padded,
            };
            for k in 0..len {
                let mut errs: Vec<f64> = group.iter().map(|t| value(row_at(t, k))).collect();
                let mut cpus: Vec<f64> = group.iter().map(|t| row_at(t, k).cpu_seconds).collect();
                band.min.push(errs.iter().cloned().fold(f64::INFINITY, f64::min));
                band.max.push(errs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                band.median.push(median(&mut errs));
                band.cpu_median.push(median(&mut cpus));
            }
            Ok(band)
        })
        .collect()
}

/// One theoretical envelope, on the same `‖x − x_LS‖₂` (or `‖z − b⊥‖₂`)
/// scale as the traces: square roots of the squared-error bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub method: String,
    pub bound: &'static str,
    pub values: Vec<f64>,
}

/// Envelopes for every method in an experiment that has an applicable
/// bound, evaluated at epochs `0..=max_epochs`. Bounds whose constants make
/// them vacuous are skipped.
pub fn envelopes(exp: &Experiment, max_epochs: usize) -> Result<Vec<Envelope>> {
    let sys = &exp.system;
    let n = sys.n_rows();
    let sigma_min = sys.spectral.sigma_min_nonzero;
    let x_ls_sq = norm_sq(&sys.x_ls);
    let br_sq = norm_sq(&sys.b_range);
    let mut out = Vec::new();
    for pm in &exp.methods {
        let label = pm.spec.label.clone();
        let cfg = &pm.config;
        let p_row = cfg.row_partition.as_ref().map_or(1, Partition::len);
        let p_col = cfg.col_partition.as_ref().map_or(1, Partition::len);
        let iters = |e: usize| e * epoch_length(pm.spec.method, n, p_row, p_col);
        let mut push = |bound: &'static str, f: &dyn Fn(usize) -> Result<f64>| -> Result<()> {
            let values = (0..=max_epochs).map(|e| f(e).map(f64::sqrt)).collect::<Result<Vec<_>>>();
            match values {
                Ok(values) => {
                    out.push(Envelope {
                        method: label.clone(),
                        bound,
                        values,
                    });
                    Ok(())
                }
                Err(Error::VacuousBound(_)) => Ok(()),
                Err(e) => Err(e),
            }
        };
        match pm.spec.method {
            Method::Rk => {
                let h = theory::rk_horizon(sys)?;
                push("rk_horizon", &|_| Ok(h * h))?;
            }
            Method::Rek => {
                let k = sys.spectral.scaled_condition;
                let b_sq = norm_sq(&sys.b);
                push("rek", &|e| theory::rek_bound(iters(e), k, x_ls_sq, b_sq, sigma_min))?;
            }
            Method::BlockKaczmarz => {
                let h = theory::block_horizon(sys);
                push("block_horizon", &|_| Ok(h))?;
            }
            Method::DoubleBlock => {
                let rows = paving_bounds(&sys.a, cfg.row_partition.as_ref().expect("validated"))?;
                let cols = paving_bounds(&sys.a, cfg.col_partition.as_ref().expect("validated"))?;
                let c = theory::rate_constants(sys, &rows, &cols)?;
                push("theorem1", &|e| theory::theorem1_bound(iters(e), &c, x_ls_sq))?;
                push("lemma1_z", &|e| Ok(theory::lemma1_envelope(iters(e), c.gamma_col, br_sq)))?;
            }
            Method::BlockCd => {
                let part = cfg.col_partition.as_ref().expect("validated");
                let (a_used, sigma) = if cfg.standardize_columns {
                    let (abar, _) = column_standardize(&sys.a)?;
                    let s = linalg::spectral_summary(&abar)?.sigma_min_nonzero;
                    (abar, s)
                } else {
                    (sys.a.clone(), sigma_min)
                };
                let gamma = theory::paving_gamma(sigma, &paving_bounds(&a_used, part)?)?;
                push("theorem2_residual", &|e| Ok(theory::theorem2_bound(iters(e), gamma, br_sq)))?;
                if sys.spectral.rank == sys.n_cols() {
                    let kappa = sys.spectral.condition;
                    push("corollary2", &|e| Ok(theory::corollary2_bound(iters(e), gamma, kappa, x_ls_sq)))?;
                }
            }
            Method::Hybrid => {}
        }
    }
    Ok(out)
}
