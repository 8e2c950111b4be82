use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rbk::harness::experiment::{
    envelopes, partition_rng, prepare_method, preset, run_experiment, trial_seed, ExperimentRecord,
    MethodSpec, PresetName, ProblemSpec, DEFAULT_COL_BLOCKS, DEFAULT_ROW_BLOCKS, DEFAULT_TRIALS,
};
use rbk::harness::output::{
    trace_csv, write_bands_csv, write_envelopes_csv, write_svg_plot, write_trace_csv, PlotAxis,
};
use rbk::harness::aggregate_bands;
use rbk::paving::{paving_bounds, random_partition, Axis};
use rbk::solvers::{run_residual_stop, run_to_solution, Method, Solver, StopRule};
use rbk::{io, LinearSystem};

#[derive(Parser)]
#[command(name = "rbk", version, about = "Randomized block Kaczmarz least-squares solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Rows,
    Cols,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Inconsistent,
    Dynamic,
    Tomography,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a least-squares system read from text files.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_ROW_BLOCKS)]
        row_blocks: usize,
        #[arg(long, default_value_t = DEFAULT_COL_BLOCKS)]
        col_blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_epochs: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Per-epoch trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the final iterate here.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Run blockcd on the column-standardized matrix.
        #[arg(long)]
        standardize: bool,
        /// Stop on residual stagnation instead of the error to the exact
        /// solution; `--tol` becomes the relative stagnation threshold.
        #[arg(long)]
        residual_stop: bool,
    },
    /// Measure the paving parameters of a random partition.
    PaveCheck {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        blocks: usize,
        #[arg(long, value_enum, default_value = "rows")]
        axis: AxisArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a multi-trial experiment preset and write traces, bands, plots
    /// and theoretical envelopes.
    Experiment {
        #[arg(long, value_parser = parse_preset)]
        preset: PresetName,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, env = "RBK_OUT_DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROW_BLOCKS)]
        row_blocks: usize,
        #[arg(long, default_value_t = DEFAULT_COL_BLOCKS)]
        col_blocks: usize,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Add the single-column REK projection + block row update variant.
        #[arg(long)]
        hybrid: bool,
    },
    /// Write a generated test problem as text files.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        residual: f64,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 3)]
        oversampling: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: rbk::Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<PresetName, String> {
    s.parse().map_err(|e: rbk::Error| e.to_string())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve {
            matrix,
            rhs,
            method,
            row_blocks,
            col_blocks,
            seed,
            max_epochs,
            tol,
            trace,
            solution,
            standardize,
            residual_stop,
        } => {
            let a = io::read_matrix(&matrix)?;
            let b = io::read_vector(&rhs)?;
            let mut spec = MethodSpec::new(method, row_blocks, col_blocks);
            spec.standardize = standardize;
            let mut cfg = prepare_method(&spec, a.n_rows(), a.n_cols(), &mut partition_rng(seed))?;
            cfg.seed = trial_seed(seed, method.tag(), 0);
            let stop = StopRule::new(max_epochs, tol)?;

            let (t, x) = if residual_stop {
                let (x, t) = run_residual_stop(&a, &b, &cfg, &stop)?;
                println!("final_residual {:e}", t.last().residual);
                (t, x)
            } else {
                let system = LinearSystem::new(a, b)?;
                let solver = Solver::new(&system.a, &system.b, &cfg)?;
                let (t, x) = run_to_solution(&solver, &system, &stop, cfg.seed);
                println!("final_error {:e}", t.final_error().unwrap_or(f64::NAN));
                (t, x)
            };
            println!("epochs {}", t.last().epoch);
            println!("converged {}", t.converged);
            if let Some(path) = trace {
                let rec = ExperimentRecord {
                    trial: 0,
                    method: method.tag().to_string(),
                    trace: t,
                };
                fs::write(&path, trace_csv(std::slice::from_ref(&rec)))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = solution {
                io::write_vector(&path, &x)?;
            }
        }
        Command::PaveCheck {
            matrix,
            blocks,
            axis,
            seed,
        } => {
            let a = io::read_matrix(&matrix)?;
            let (axis, size) = match axis {
                AxisArg::Rows => (Axis::Rows, a.n_rows()),
                AxisArg::Cols => (Axis::Columns, a.n_cols()),
            };
            let part = random_partition(axis, size, blocks, &mut partition_rng(seed))?;
            let pv = paving_bounds(&a, &part)?;
            println!("{} {} {}", pv.p, pv.alpha, pv.beta);
        }
        Command::Experiment {
            preset: name,
            seed,
            trials,
            out,
            row_blocks,
            col_blocks,
            max_epochs,
            tol,
            hybrid,
        } => {
            let mut p = preset(name, seed, row_blocks, col_blocks)?;
            if hybrid {
                p.methods.push(MethodSpec::new(Method::Hybrid, row_blocks, 1));
            }
            let stop = StopRule::new(
                max_epochs.unwrap_or(p.stop.max_epochs),
                tol.unwrap_or(p.stop.error_threshold),
            )?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let exp = run_experiment(&p.spec, &p.methods, trials, &stop)?;
            let bands = aggregate_bands(&exp.records)?;
            write_trace_csv(&exp.records, &out.join("trace.csv"))?;
            write_bands_csv(&bands, &out.join("bands.csv"))?;
            write_svg_plot(&bands, &out.join("bands_epoch.svg"), PlotAxis::Epoch, true)?;
            write_svg_plot(&bands, &out.join("bands_cpu.svg"), PlotAxis::CpuSeconds, true)?;
            write_envelopes_csv(&envelopes(&exp, stop.max_epochs)?, &out.join("envelopes.csv"))?;

            println!(
                "{} {}x{} kappa {:.4}",
                name,
                exp.system.n_rows(),
                exp.system.n_cols(),
                exp.system.spectral.condition
            );
            for b in &bands {
                let recs: Vec<_> = exp.records.iter().filter(|r| r.method == b.method).collect();
                let ok = recs.iter().filter(|r| r.trace.converged).count();
                println!(
                    "{:<14} median_final {:.3e} success {}/{}",
                    b.method,
                    b.median.last().copied().unwrap_or(f64::NAN),
                    ok,
                    recs.len()
                );
            }
        }
        Command::Generate {
            kind,
            n,
            d,
            residual,
            grid,
            oversampling,
            seed,
            matrix,
            rhs,
        } => {
            let spec = match kind {
                KindArg::Gaussian => ProblemSpec::gaussian(n, d, seed),
                KindArg::Inconsistent => ProblemSpec::inconsistent(n, d, residual, seed),
                KindArg::Dynamic => ProblemSpec::dynamic_rows(n, d, residual, seed),
                KindArg::Tomography => ProblemSpec::tomography(grid, oversampling, seed),
            };
            let g = spec.generate()?;
            io::write_matrix(&matrix, &g.system.a)?;
            io::write_vector(&rhs, &g.system.b)?;
        }
    }
    Ok(())
}
