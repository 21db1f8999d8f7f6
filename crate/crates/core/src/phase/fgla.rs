//! Fast Griffin-Lim: alternating projections with an inertial step.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PrResult;
use crate::error::{Error, Result};
use crate::stft::{wrap_phase, ComplexStft, Gabor, MagnitudeStft};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FglaConfig {
    pub alpha: f64,
    pub iterations: usize,
    /// Keep a reconstruction every this many iterations; 0 keeps none.
    pub record_every: usize,
}

impl Default for FglaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            iterations: 100,
            record_every: 0,
        }
    }
}

impl FglaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::arg(format!("α must lie in [0, 1), got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::arg("FGLA needs at least one iteration"));
        }
        Ok(())
    }
}

/// Keeps the phase of `c` and replaces its modulus by `mag`.
fn impose(c: Complex64, mag: f64) -> Complex64 {
    let r = c.norm();
    if r == 0.0 {
        Complex64::new(mag, 0.0)
    } else {
        c * (mag / r)
    }
}

pub fn fgla(mags: &MagnitudeStft, system: &Gabor, cfg: &FglaConfig) -> Result<PrResult> {
    fgla_with(mags, system, cfg, |_, _| {})
}

/// FGLA that hands every magnitude-constrained iterate `p_k` to `observe`.
pub fn fgla_with(
    mags: &MagnitudeStft,
    system: &Gabor,
    cfg: &FglaConfig,
    mut observe: impl FnMut(usize, &[Complex64]),
) -> Result<PrResult> {
    cfg.validate()?;
    if mags.grid() != system.grid() {
        return Err(Error::dim("magnitudes and system use different grids"));
    }
    let target = mags.mags();
    let grid = *mags.grid();
    let rate = mags.sample_rate();
    let start = Instant::now();

    let c0: Vec<Complex64> = target.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut t = c0.clone();
    let mut prev = c0;
    let mut p = vec![Complex64::new(0.0, 0.0); t.len()];
    let mut signal = vec![0.0; grid.len()];
    let mut snapshots = Vec::new();

    for k in 1..=cfg.iterations {
        p.copy_from_slice(&t);
        system.project_in_place(&mut p, &mut signal)?;
        for (c, &x) in p.iter_mut().zip(target) {
            *c = impose(*c, x);
        }
        if p.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numerical {
                iteration: k,
                reason: "non-finite coefficient".into(),
            });
        }
        for ((tt, &pk), &pp) in t.iter_mut().zip(&p).zip(&prev) {
            *tt = pk + cfg.alpha * (pk - pp);
        }
        std::mem::swap(&mut prev, &mut p);
        observe(k, &prev);
        if cfg.record_every > 0 && k % cfg.record_every == 0 {
            let c = ComplexStft::new(grid, rate, prev.clone())?;
            snapshots.push((k, system.synthesize(&c)?));
        }
    }

    let estimated_phase = prev.iter().map(|c| wrap_phase(c.arg())).collect();
    let coeffs = ComplexStft::new(grid, rate, prev)?;
    let reconstructed = system.synthesize(&coeffs)?;
    Ok(PrResult {
        reconstructed,
        estimated_phase,
        iterations_run: cfg.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        snapshots,
    })
}
