//! Phase retrieval from STFT magnitudes.

pub mod baseline;
pub mod fgla;
pub mod pghi;
pub mod spsi;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::SignalBuffer;

pub use baseline::{distort_phase, zero_phase_baseline};
pub use fgla::{fgla, fgla_with, FglaConfig};
pub use pghi::{pghi, pghi_phase, BelowTolerancePhase, PghiConfig, PghiStats};
pub use spsi::{spsi, spsi_centered_phase};

/// Output of a phase retrieval run.
#[derive(Clone, Debug)]
pub struct PrResult {
    pub reconstructed: SignalBuffer,
    /// Estimated phase in `[-π, π)`, same layout as the magnitudes.
    pub estimated_phase: Vec<f64>,
    pub iterations_run: usize,
    pub wall_time: f64,
    pub snapshots: Vec<(usize, SignalBuffer)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pghi,
    Fgla,
    Spsi,
    ZeroPhase,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pghi => "pghi",
            Algorithm::Fgla => "fgla",
            Algorithm::Spsi => "spsi",
            Algorithm::ZeroPhase => "zerophase",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "pghi" => Ok(Algorithm::Pghi),
            "fgla" | "gla" => Ok(Algorithm::Fgla),
            "spsi" => Ok(Algorithm::Spsi),
            "zero" | "zerophase" | "zero-phase" => Ok(Algorithm::ZeroPhase),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm '{s}'"))),
        }
    }
}
