//! Phase-noise sensitivity: STFT, perturb the phase, resynthesize.

use super::sweep::{run_sweep, AlgoSpec, Corpus, SweepRow, SweepSpec};
use crate::error::{Error, Result};

pub const DEFAULT_SIGMAS: [f64; 3] = [0.1, 0.5, 1.0];

/// One `noise:<σ>` row per σ, λ, D and signal. Window, trim, seed and
/// thread count come from `base`; its algorithm list is ignored.
pub fn run_noise_sensitivity(
    sigmas: &[f64],
    base: &SweepSpec,
    corpus: &Corpus,
) -> Result<Vec<SweepRow>> {
    if sigmas.is_empty() {
        return Err(Error::arg("σ list must be non-empty"));
    }
    let spec = SweepSpec {
        algorithms: sigmas
            .iter()
            .map(|&sigma| AlgoSpec::PhaseNoise { sigma })
            .collect(),
        ..base.clone()
    };
    run_sweep(&spec, corpus)
}
