//! Experiment runners, corpus ingestion and probe signals.

pub mod filter;
pub mod noise;
pub mod optimize;
pub mod report;
pub mod synth;
pub mod sweep;
pub mod wav;

pub use filter::{run_filter_experiment, FilterSpec};
pub use noise::run_noise_sensitivity;
pub use optimize::{optimize_parameters, OptimalSet, OptimizeReport, OptimizeSpec};
pub use sweep::{
    cell_seed, mean_snr, realize_grid, run_sweep, AlgoSpec, CellMean, Corpus, SweepRow, SweepSpec,
    TrimPolicy,
};
pub use report::{rows_to_csv, write_results, OutputFormat};
pub use synth::{synth_signal, SynthKind};
pub use wav::{ingest_wav, load_corpus, write_wav, WavFormat};
