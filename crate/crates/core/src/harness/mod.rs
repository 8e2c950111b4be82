//! Problem generation, multi-trial experiments and their file outputs.

pub mod experiment;
pub mod generators;
pub mod output;

pub use experiment::{
    aggregate_bands, envelopes, preset, run_experiment, trial_seed, Band, Envelope, Experiment,
    ExperimentRecord, MethodSpec, Preset, PresetName, ProblemKind, ProblemSpec,
};
pub use generators::{
    gen_dynamic_rows, gen_gaussian_rowstd, gen_inconsistent, gen_tomography, line_pixel_lengths,
    Generated,
};
pub use output::{write_bands_csv, write_envelopes_csv, write_svg_plot, write_trace_csv, PlotAxis};
