//! Phase retrieval from STFT magnitudes.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`stft`] and [`dual`]: an invertible discrete STFT on a
//!   circular signal, canonical dual windows and the consistency projection.
//! * [`windows`]: periodized Gaussians, the Hann/Blackman/Bartlett family and
//!   conversion between window shape and the time-frequency ratio λ.
//! * [`phase`]: PGHI, fast Griffin-Lim, SPSI and simple baselines.
//! * [`metrics`]: spectrogram SNR and projection error.
//! * [`harness`]: synthetic signals, WAV ingestion and the experiment runners
//!   behind the `tfpr` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual;
pub mod error;
mod fft;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod phase;
pub mod stft;
pub mod windows;

pub use dual::{canonical_dual, tight_window};
pub use error::{Error, Result};
pub use grid::{SignalBuffer, StftGrid};
pub use metrics::{projection_error, snr_ms, SnrMsConfig};
pub use stft::{istft, project_consistent, stft, ComplexStft, Gabor, MagnitudeStft};
pub use windows::{LambdaSource, LambdaSpec, WindowFamily, WindowRole, WindowVec};

pub use num_complex::Complex64;
