//! Phase-gradient heap integration.
//!
//! For a Gaussian window with `λ_s = λ ξ_s` (in samples²) the phase of the
//! STFT in the frequency-invariant convention satisfies
//!
//! ```text
//! ∂_n φ =  (aM / λ_s) ∂_m log|S|
//! ∂_m φ = -(λ_s / aM) ∂_n log|S| - 2π n a / M
//! ```
//!
//! The gradient is integrated outward from the loudest coefficients.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PrResult;
use crate::error::{Error, Result};
use crate::grid::StftGrid;
use crate::stft::{wrap_phase, ComplexStft, Gabor, MagnitudeStft};

/// Floor applied to magnitudes before taking logs, relative to the maximum.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BelowTolerancePhase {
    RandomUniform,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PghiConfig {
    pub rel_tolerance: f64,
    pub seed: u64,
    pub below_tol_phase: BelowTolerancePhase,
}

impl Default for PghiConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-6,
            seed: 0,
            below_tol_phase: BelowTolerancePhase::RandomUniform,
        }
    }
}

/// Bookkeeping from one integration pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PghiStats {
    /// Bins reached from a neighbour.
    pub integrated: usize,
    /// Bins that started a new integration front (phase 0).
    pub seeds: usize,
    pub below_tolerance: usize,
}

impl PghiStats {
    pub fn total(&self) -> usize {
        self.integrated + self.seeds + self.below_tolerance
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    mag: f64,
    n: usize,
    m: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Larger magnitude first; among equals the smaller (n, m) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.mag
            .total_cmp(&other.mag)
            .then_with(|| (other.n, other.m).cmp(&(self.n, self.m)))
    }
}

/// Centred difference along one axis, one-sided at the ends.
fn diff(values: &[f64], i: usize, len: usize, stride: usize, base: usize) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let at = |k: usize| values[base + k * stride];
    if i == 0 {
        at(1) - at(0)
    } else if i == len - 1 {
        at(len - 1) - at(len - 2)
    } else {
        0.5 * (at(i + 1) - at(i - 1))
    }
}

/// Phase derivatives `(∂_n φ, ∂_m φ)` per bin, frame-major.
pub fn phase_gradients(mags: &MagnitudeStft, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let grid = *mags.grid();
    let (mr, frames) = (grid.half_channels(), grid.frames());
    let (a, m) = (grid.hop() as f64, grid.channels() as f64);
    let lambda_s = lambda * mags.sample_rate() as f64;
    let floor = LOG_FLOOR * mags.max();
    let logs: Vec<f64> = mags
        .mags()
        .iter()
        .map(|&x| x.max(floor).max(f64::MIN_POSITIVE).ln())
        .collect();
    let time_scale = a * m / lambda_s;
    let freq_scale = lambda_s / (a * m);
    let mut dn = vec![0.0; logs.len()];
    let mut dm = vec![0.0; logs.len()];
    for n in 0..frames {
        for k in 0..mr {
            let i = n * mr + k;
            dn[i] = time_scale * diff(&logs, k, mr, 1, n * mr);
            dm[i] = -freq_scale * diff(&logs, n, frames, mr, k)
                - 2.0 * PI * (n as f64) * a / m;
        }
    }
    (dn, dm)
}

/// Phase estimate (unwrapped) and integration statistics.
pub fn pghi_phase(
    mags: &MagnitudeStft,
    lambda: f64,
    cfg: &PghiConfig,
) -> Result<(Vec<f64>, PghiStats)> {
    if !(cfg.rel_tolerance > 0.0 && cfg.rel_tolerance < 1.0) {
        return Err(Error::arg(format!(
            "relative tolerance must lie in (0, 1), got {}",
            cfg.rel_tolerance
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("λ must be positive, got {lambda}")));
    }
    let grid: StftGrid = *mags.grid();
    let (mr, frames) = (grid.half_channels(), grid.frames());
    let size = mr * frames;
    let mut phase = vec![0.0; size];
    let mut stats = PghiStats::default();
    let max = mags.max();
    if max == 0.0 {
        stats.below_tolerance = size;
        return Ok((phase, stats));
    }

    let tol = cfg.rel_tolerance * max;
    let mut done = vec![false; size];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (i, &x) in mags.mags().iter().enumerate() {
        if x < tol {
            done[i] = true;
            stats.below_tolerance += 1;
            if cfg.below_tol_phase == BelowTolerancePhase::RandomUniform {
                phase[i] = rng.random_range(-PI..PI);
            }
        }
    }

    let (dn, dm) = phase_gradients(mags, lambda);
    let mut order: Vec<Entry> = mags
        .mags()
        .iter()
        .enumerate()
        .filter(|(i, _)| !done[*i])
        .map(|(i, &mag)| Entry {
            mag,
            n: i / mr,
            m: i % mr,
        })
        .collect();
    order.sort_unstable_by(|x, y| y.cmp(x));

    let mut heap = BinaryHeap::new();
    let mut cursor = 0;
    loop {
        while cursor < order.len() && done[order[cursor].n * mr + order[cursor].m] {
            cursor += 1;
        }
        let Some(&seed) = order.get(cursor) else {
            break;
        };
        let i = seed.n * mr + seed.m;
        done[i] = true;
        phase[i] = 0.0;
        stats.seeds += 1;
        heap.push(seed);

        while let Some(Entry { n, m, .. }) = heap.pop() {
            let i = n * mr + m;
            let here = phase[i];
            let mut steps = [None; 4];
            if n + 1 < frames {
                steps[0] = Some((i + mr, n + 1, m, here + 0.5 * (dn[i] + dn[i + mr])));
            }
            if n > 0 {
                steps[1] = Some((i - mr, n - 1, m, here - 0.5 * (dn[i] + dn[i - mr])));
            }
            if m + 1 < mr {
                steps[2] = Some((i + 1, n, m + 1, here + 0.5 * (dm[i] + dm[i + 1])));
            }
            if m > 0 {
                steps[3] = Some((i - 1, n, m - 1, here - 0.5 * (dm[i] + dm[i - 1])));
            }
            for (j, nn, mm, value) in steps.into_iter().flatten() {
                if !done[j] {
                    done[j] = true;
                    phase[j] = value;
                    stats.integrated += 1;
                    heap.push(Entry {
                        mag: mags.mags()[j],
                        n: nn,
                        m: mm,
                    });
                }
            }
        }
    }
    Ok((phase, stats))
}

/// Phase retrieval by gradient integration. `lambda` is the time-frequency
/// ratio of the analysis window in the units of `aM / ξ_s`.
pub fn pghi(
    mags: &MagnitudeStft,
    system: &Gabor,
    lambda: f64,
    cfg: &PghiConfig,
) -> Result<PrResult> {
    if mags.grid() != system.grid() {
        return Err(Error::dim("magnitudes and system use different grids"));
    }
    let start = Instant::now();
    let (phase, _) = pghi_phase(mags, lambda, cfg)?;
    let phase: Vec<f64> = phase.into_iter().map(wrap_phase).collect();
    let coeffs = ComplexStft::from_polar(mags, &phase)?;
    let reconstructed = system.synthesize(&coeffs)?;
    Ok(PrResult {
        reconstructed,
        estimated_phase: phase,
        iterations_run: 1,
        wall_time: start.elapsed().as_secs_f64(),
        snapshots: Vec::new(),
    })
}
