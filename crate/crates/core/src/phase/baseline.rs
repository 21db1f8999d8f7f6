use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PrResult;
use crate::error::{Error, Result};
use crate::stft::{wrap_phase, ComplexStft, Gabor, MagnitudeStft};

/// Inverse STFT of the magnitudes with zero phase.
pub fn zero_phase_baseline(mags: &MagnitudeStft, system: &Gabor) -> Result<PrResult> {
    let start = Instant::now();
    let phase = vec![0.0; mags.mags().len()];
    let coeffs = ComplexStft::from_polar(mags, &phase)?;
    let reconstructed = system.synthesize(&coeffs)?;
    Ok(PrResult {
        reconstructed,
        estimated_phase: phase,
        iterations_run: 0,
        wall_time: start.elapsed().as_secs_f64(),
        snapshots: Vec::new(),
    })
}

/// Adds i.i.d. `N(0, σ²)` noise to every phase, wrapped to `[-π, π)`.
/// Noise is drawn in storage order from a ChaCha8 stream seeded by `seed`.
pub fn distort_phase(coeffs: &ComplexStft, sigma: f64, seed: u64) -> Result<ComplexStft> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("σ must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(coeffs.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = coeffs.clone();
    for c in out.coeffs_mut() {
        let (r, phi) = c.to_polar();
        let noisy = wrap_phase(phi + normal.sample(&mut rng));
        *c = num_complex::Complex64::from_polar(r, noisy);
    }
    Ok(out)
}
