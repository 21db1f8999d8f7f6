//! Filtering by channel weighting followed by phase retrieval of the
//! weighted (inconsistent) spectrogram.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{
    build_systems, cell_groups, error_row, estimate, measured_row, row_contexts, with_threads,
    weighted_coeffs, AlgoSpec, Corpus, Estimate, SweepRow, SweepSpec,
};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{SignalBuffer, StftGrid};

/// Channel count from which the comb's peaks and valleys are all resolved.
pub const MIN_RESOLVING_CHANNELS: usize = 96;

pub const REFERENCE_ARM: &str = "reference";

/// Comb response `clamp(0.1 + cos(2π P ξ / L), 0.1, 1)` over DFT index ξ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Cosine periods over the full index range `[0, L)`. The default of 14
    /// puts 15 peaks and 14 valleys on the mirrored spectrum `[-L/2, L/2]`.
    pub periods: f64,
    /// Replace the comb by a flat unit response.
    pub identity: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            periods: 14.0,
            identity: false,
        }
    }
}

impl FilterSpec {
    pub fn identity() -> Self {
        Self {
            identity: true,
            ..Self::default()
        }
    }

    /// Response at DFT index `xi` (fractional allowed) of a length-`len` signal.
    pub fn response_at(&self, xi: f64, len: usize) -> f64 {
        if self.identity {
            return 1.0;
        }
        let phase = (self.periods * xi / len as f64).fract();
        (0.1 + (2.0 * std::f64::consts::PI * phase).cos()).clamp(0.1, 1.0)
    }

    /// Weights of the stored channels `0..=M/2`, each taken at its centre
    /// frequency.
    pub fn channel_weights(&self, grid: &StftGrid) -> Vec<f64> {
        let (len, m) = (grid.len(), grid.channels());
        (0..grid.half_channels())
            .map(|k| self.response_at((k * len) as f64 / m as f64, len))
            .collect()
    }

    /// The signal with the response applied to its full DFT.
    pub fn apply(&self, signal: &SignalBuffer) -> Result<SignalBuffer> {
        if self.identity {
            return Ok(signal.clone());
        }
        let len = signal.len();
        let mut buf: Vec<Complex64> = signal
            .samples()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        fft::forward(len).process(&mut buf);
        for (xi, c) in buf.iter_mut().enumerate() {
            *c *= self.response_at(xi as f64, len);
        }
        fft::inverse(len).process(&mut buf);
        SignalBuffer::new(
            buf.iter().map(|c| c.re / len as f64).collect(),
            signal.sample_rate(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.periods > 0.0 && self.periods.is_finite()) {
            return Err(Error::arg("filter period count must be positive"));
        }
        Ok(())
    }
}

/// For each cell and signal: a `reference` row resynthesized from the
/// weighted complex coefficients, then one row per algorithm of the spec run
/// on the weighted magnitudes. All rows are scored against the filtered
/// signal.
pub fn run_filter_experiment(
    spec: &SweepSpec,
    filter: &FilterSpec,
    corpus: &Corpus,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    filter.validate()?;
    if corpus.is_empty() {
        return Err(Error::arg("corpus is empty"));
    }
    let (len, rate) = (corpus.signal_len(), corpus.sample_rate());
    let targets: Vec<SignalBuffer> = corpus
        .signals
        .iter()
        .map(|(_, s)| filter.apply(s))
        .collect::<Result<_>>()?;
    let groups = cell_groups(spec);
    let systems = build_systems(&groups, len, rate, spec.threads)?;
    // Slot 0 is the reference arm; its placeholder algorithm never runs.
    let mut arms = vec![AlgoSpec::ZeroPhase];
    arms.extend(spec.algorithms.iter().copied());

    let units: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..corpus.len()).map(move |s| (g, s)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = with_threads(spec.threads, || {
        units
            .par_iter()
            .map(|&(g, s)| {
                let (family, lambda, d) = groups[g];
                let (id, signal) = &corpus.signals[s];
                let target = &targets[s];
                let mut contexts = row_contexts(&arms, spec.seed, family, lambda, d, id);
                contexts[0].1.algorithm = REFERENCE_ARM.to_string();
                contexts[0].1.iterations = 0;
                let cell = match &systems[g] {
                    Ok(c) => c,
                    Err(msg) => {
                        let err = Error::InvalidGrid(msg.clone());
                        return contexts.iter().map(|(_, c)| error_row(c, &err)).collect();
                    }
                };
                let weighted = cell.system.analyze(signal).and_then(|c| {
                    weighted_coeffs(&c, &filter.channel_weights(cell.system.grid()))
                });
                let weighted = match weighted {
                    Ok(w) => w,
                    Err(e) => return contexts.iter().map(|(_, c)| error_row(c, &e)).collect(),
                };
                let mags = weighted.magnitude();
                contexts
                    .iter()
                    .enumerate()
                    .map(|(i, (algo, ctx))| {
                        let est = if i == 0 {
                            let start = Instant::now();
                            cell.system.synthesize(&weighted).map(|signal| Estimate {
                                signal,
                                coeffs: weighted.clone(),
                                iterations: 0,
                                wall_time: start.elapsed().as_secs_f64(),
                            })
                        } else {
                            estimate(algo, cell, &weighted, &mags, ctx.seed, spec.fgla_alpha)
                        };
                        est.and_then(|est| {
                            measured_row(ctx, cell, target, &est, spec.trim, spec.snr, spec.timing)
                        })
                        .unwrap_or_else(|e| error_row(ctx, &e))
                    })
                    .collect()
            })
            .collect()
    })?;
    Ok(rows.into_iter().flatten().collect())
}
