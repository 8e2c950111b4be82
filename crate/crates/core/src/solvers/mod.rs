//! The randomized Kaczmarz family as single-step updates, plus a shared run
//! loop with epoch accounting, stopping rules and per-epoch telemetry.

mod methods;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use methods::{
    BlockKaczmarz, BlockLeastSquares, BlockSet, DoubleBlockKaczmarz, ExtendedKaczmarz,
    HybridRekBlock, RandomizedKaczmarz,
};

use crate::cpu_time::CpuStopwatch;
use crate::error::{Error, Result};
use crate::linalg::{distance, DenseMatrix};
use crate::paving::Partition;
use crate::system::LinearSystem;

/// Random stream driving index selection. ChaCha output is stable across
/// platforms and crate versions, which keeps traces reproducible.
pub type SolverRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Rk,
    Rek,
    BlockKaczmarz,
    DoubleBlock,
    BlockCd,
    /// Single-column REK projection with a block row update (experimental).
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rk,
        Method::Rek,
        Method::BlockKaczmarz,
        Method::DoubleBlock,
        Method::BlockCd,
        Method::Hybrid,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Rk => "rk",
            Method::Rek => "rek",
            Method::BlockKaczmarz => "block",
            Method::DoubleBlock => "double",
            Method::BlockCd => "blockcd",
            Method::Hybrid => "hybrid",
        }
    }

    pub fn needs_row_partition(self) -> bool {
        matches!(
            self,
            Method::BlockKaczmarz | Method::DoubleBlock | Method::Hybrid
        )
    }

    pub fn needs_col_partition(self) -> bool {
        matches!(self, Method::DoubleBlock | Method::BlockCd)
    }

    /// Whether the method maintains an auxiliary `z` sequence.
    pub fn tracks_z(self) -> bool {
        matches!(
            self,
            Method::Rek | Method::DoubleBlock | Method::BlockCd | Method::Hybrid
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Iterate `x`, auxiliary `z` and the iteration counter.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub iteration: u64,
}

impl SolverState {
    /// `x₀ = 0`, `z₀ = b`.
    pub fn initial(n_cols: usize, b: &[f64]) -> Self {
        Self {
            x: vec![0.0; n_cols],
            z: b.to_vec(),
            iteration: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodConfig {
    pub method: Method,
    pub row_partition: Option<Partition>,
    pub col_partition: Option<Partition>,
    /// Run the column-block solver on the column-standardized matrix and map
    /// iterates back. Only meaningful for [`Method::BlockCd`].
    pub standardize_columns: bool,
    pub seed: u64,
}

impl MethodConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            row_partition: None,
            col_partition: None,
            standardize_columns: false,
            seed,
        }
    }

    pub fn with_rows(mut self, p: Partition) -> Self {
        self.row_partition = Some(p);
        self
    }

    pub fn with_cols(mut self, p: Partition) -> Self {
        self.col_partition = Some(p);
        self
    }

    pub fn standardized(mut self, on: bool) -> Self {
        self.standardize_columns = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.method;
        let check = |needed: bool, present: bool, what: &str| -> Result<()> {
            match (needed, present) {
                (true, false) => Err(Error::Config(format!("{m} requires a {what} partition"))),
                (false, true) => Err(Error::Config(format!("{m} does not use a {what} partition"))),
                _ => Ok(()),
            }
        };
        check(m.needs_row_partition(), self.row_partition.is_some(), "row")?;
        check(m.needs_col_partition(), self.col_partition.is_some(), "column")?;
        if self.standardize_columns && m != Method::BlockCd {
            return Err(Error::Config(format!(
                "column standardization applies to blockcd only, not {m}"
            )));
        }
        Ok(())
    }
}

/// Number of iterations counted as one epoch: one pass worth of rows.
pub fn epoch_length(method: Method, n_rows: usize, p_row: usize, p_col: usize) -> usize {
    match method {
        Method::Rk | Method::Rek => n_rows,
        Method::BlockKaczmarz | Method::DoubleBlock | Method::Hybrid => p_row,
        Method::BlockCd => n_rows.div_ceil(p_col),
    }
    .max(1)
}

#[derive(Clone, Copy, Debug)]
pub struct StopRule {
    pub max_epochs: usize,
    /// Halt once `‖x − x_LS‖₂` drops to this value (checked per epoch).
    pub error_threshold: f64,
}

impl StopRule {
    pub fn new(max_epochs: usize, error_threshold: f64) -> Result<Self> {
        if !(error_threshold > 0.0) {
            return Err(Error::Config(format!(
                "error threshold must be positive, got {error_threshold}"
            )));
        }
        Ok(Self {
            max_epochs,
            error_threshold,
        })
    }
}

/// Telemetry at one epoch boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub iteration: u64,
    /// `‖x − x_LS‖₂`, absent when no oracle solution is known.
    pub error: Option<f64>,
    /// `‖b − A x‖₂`.
    pub residual: f64,
    /// `‖z − b_perp‖₂` for methods with a `z` sequence.
    pub z_error: Option<f64>,
    /// Solver CPU seconds so far, excluding telemetry.
    pub cpu_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl Trace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace always holds epoch 0")
    }

    pub fn final_error(&self) -> Option<f64> {
        self.last().error
    }

    /// First epoch whose error is at or below `threshold`.
    pub fn first_epoch_below(&self, threshold: f64) -> Option<&TraceRow> {
        self.rows
            .iter()
            .find(|r| r.error.is_some_and(|e| e <= threshold))
    }
}

/// A method bound to a matrix and right-hand side, with all per-run
/// invariant data (samplers, block factorizations) precomputed. Shareable
/// across concurrent runs.
pub enum Solver<'a> {
    Rk(RandomizedKaczmarz<'a>),
    Rek(ExtendedKaczmarz<'a>),
    BlockKaczmarz(BlockKaczmarz<'a>),
    DoubleBlock(DoubleBlockKaczmarz<'a>),
    BlockCd(BlockLeastSquares<'a>),
    Hybrid(HybridRekBlock<'a>),
}

impl<'a> Solver<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64], config: &MethodConfig) -> Result<Self> {
        config.validate()?;
        let rows = || config.row_partition.clone().expect("validated");
        let cols = || config.col_partition.clone().expect("validated");
        Ok(match config.method {
            Method::Rk => Solver::Rk(RandomizedKaczmarz::new(a, b)?),
            Method::Rek => Solver::Rek(ExtendedKaczmarz::new(a, b)?),
            Method::BlockKaczmarz => Solver::BlockKaczmarz(BlockKaczmarz::new(a, b, rows())?),
            Method::DoubleBlock => {
                Solver::DoubleBlock(DoubleBlockKaczmarz::new(a, b, rows(), cols())?)
            }
            Method::BlockCd if config.standardize_columns => {
                Solver::BlockCd(BlockLeastSquares::standardized(a, b, cols())?)
            }
            Method::BlockCd => Solver::BlockCd(BlockLeastSquares::new(a, b, cols())?),
            Method::Hybrid => Solver::Hybrid(HybridRekBlock::new(a, b, rows())?),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Solver::Rk(_) => Method::Rk,
            Solver::Rek(_) => Method::Rek,
            Solver::BlockKaczmarz(_) => Method::BlockKaczmarz,
            Solver::DoubleBlock(_) => Method::DoubleBlock,
            Solver::BlockCd(_) => Method::BlockCd,
            Solver::Hybrid(_) => Method::Hybrid,
        }
    }

    pub fn step(&self, state: &mut SolverState, rng: &mut SolverRng) {
        match self {
            Solver::Rk(s) => s.step(state, rng),
            Solver::Rek(s) => s.step(state, rng),
            Solver::BlockKaczmarz(s) => s.step(state, rng),
            Solver::DoubleBlock(s) => s.step(state, rng),
            Solver::BlockCd(s) => s.step(state, rng),
            Solver::Hybrid(s) => s.step(state, rng),
        }
    }

    /// The iterate in the original variables.
    pub fn solution(&self, state: &SolverState) -> Vec<f64> {
        match self {
            Solver::BlockCd(s) => s.solution(state),
            _ => state.x.clone(),
        }
    }

    pub fn epoch_length(&self, n_rows: usize) -> usize {
        let (p_row, p_col) = match self {
            Solver::BlockKaczmarz(s) => (s.row_blocks().len(), 1),
            Solver::DoubleBlock(s) => (s.row_blocks().len(), s.col_blocks().len()),
            Solver::BlockCd(s) => (1, s.col_blocks().len()),
            Solver::Hybrid(s) => (s.row_blocks().len(), 1),
            Solver::Rk(_) | Solver::Rek(_) => (1, 1),
        };
        epoch_length(self.method(), n_rows, p_row, p_col)
    }
}

/// Runs `config` on `system` from `x₀ = 0, z₀ = b`.
pub fn run(system: &LinearSystem, config: &MethodConfig, stop: &StopRule) -> Result<Trace> {
    let solver = Solver::new(&system.a, &system.b, config)?;
    Ok(run_prepared(&solver, system, stop, config.seed))
}

/// Runs an already-built solver; the random stream is seeded from `seed`.
pub fn run_prepared(
    solver: &Solver<'_>,
    system: &LinearSystem,
    stop: &StopRule,
    seed: u64,
) -> Trace {
    run_to_solution(solver, system, stop, seed).0
}

/// [`run_prepared`], also returning the final iterate.
pub fn run_to_solution(
    solver: &Solver<'_>,
    system: &LinearSystem,
    stop: &StopRule,
    seed: u64,
) -> (Trace, Vec<f64>) {
    let mut rng = SolverRng::seed_from_u64(seed);
    let mut state = SolverState::initial(system.n_cols(), &system.b);
    let epoch_len = solver.epoch_length(system.n_rows());
    let tracks_z = solver.method().tracks_z();
    let mut clock = CpuStopwatch::default();

    let record = |epoch: usize, state: &SolverState, cpu: f64| {
        let x = solver.solution(state);
        TraceRow {
            epoch,
            iteration: state.iteration,
            error: Some(system.error(&x)),
            residual: system.residual(&x),
            z_error: tracks_z.then(|| distance(&state.z, &system.b_perp)),
            cpu_seconds: cpu,
        }
    };

    let mut rows = vec![record(0, &state, 0.0)];
    let below = |r: &TraceRow| r.error.is_some_and(|e| e <= stop.error_threshold);
    let mut converged = below(&rows[0]);
    let mut epoch = 0;
    while !converged && epoch < stop.max_epochs {
        clock.start();
        for _ in 0..epoch_len {
            solver.step(&mut state, &mut rng);
        }
        clock.stop();
        epoch += 1;
        let row = record(epoch, &state, clock.elapsed());
        converged = below(&row);
        rows.push(row);
    }
    (Trace { rows, converged }, solver.solution(&state))
}

/// Runs without an oracle solution, halting when the residual norm stagnates:
/// `|r_{e−1} − r_e| ≤ threshold · r_e` between consecutive epochs.
pub fn run_residual_stop(
    a: &DenseMatrix,
    b: &[f64],
    config: &MethodConfig,
    stop: &StopRule,
) -> Result<(Vec<f64>, Trace)> {
    let solver = Solver::new(a, b, config)?;
    let mut rng = SolverRng::seed_from_u64(config.seed);
    let mut state = SolverState::initial(a.n_cols(), b);
    let epoch_len = solver.epoch_length(a.n_rows());
    let mut clock = CpuStopwatch::default();
    let residual = |x: &[f64]| -> f64 {
        let ax = a.mat_vec(x).expect("iterate conforms");
        distance(&ax, b)
    };
    let mut rows = vec![TraceRow {
        epoch: 0,
        iteration: 0,
        error: None,
        residual: residual(&state.x),
        z_error: None,
        cpu_seconds: 0.0,
    }];
    let mut converged = false;
    for epoch in 1..=stop.max_epochs {
        clock.start();
        for _ in 0..epoch_len {
            solver.step(&mut state, &mut rng);
        }
        clock.stop();
        let r = residual(&solver.solution(&state));
        let prev = rows.last().map(|row| row.residual).unwrap_or(r);
        rows.push(TraceRow {
            epoch,
            iteration: state.iteration,
            error: None,
            residual: r,
            z_error: None,
            cpu_seconds: clock.elapsed(),
        });
        if (prev - r).abs() <= stop.error_threshold * r.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok((solver.solution(&state), Trace { rows, converged }))
}
