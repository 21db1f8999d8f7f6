//! Reconstruction quality measures.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SignalBuffer, StftGrid};
use crate::stft::{ComplexStft, Gabor};
use crate::windows::{periodized_gaussian, WindowVec};

/// Denominators below this give an infinite SNR.
pub const PERFECT_DENOMINATOR: f64 = 1e-300;

/// Fixed analysis used by [`snr_ms`]: a Gaussian matched to `(a, M)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SnrMsConfig {
    pub channels: usize,
    pub hop: usize,
}

impl Default for SnrMsConfig {
    fn default() -> Self {
        Self {
            channels: 2048,
            hop: 128,
        }
    }
}

impl SnrMsConfig {
    /// λ of the analysis window at a given sample rate.
    pub fn lambda(&self, rate: u32) -> f64 {
        (self.hop * self.channels) as f64 / rate as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub snr_ms: f64,
    pub projection_error: f64,
    pub time_snr: f64,
    pub trim: usize,
    /// Reserved for externally computed perceptual grades.
    pub odg: Option<f64>,
}

type AnalysisKey = (usize, u32, SnrMsConfig);

fn analysis(len: usize, rate: u32, cfg: SnrMsConfig) -> Result<Arc<Gabor>> {
    static CACHE: OnceLock<Mutex<HashMap<AnalysisKey, Arc<Gabor>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(g) = cache.lock().unwrap().get(&(len, rate, cfg)) {
        return Ok(g.clone());
    }
    let grid = StftGrid::new(cfg.hop, cfg.channels, len)?;
    let window = periodized_gaussian(cfg.lambda(rate), len, rate)?;
    // Only the analysis half is used.
    let system = Arc::new(Gabor::with_dual(grid, window.clone(), window, rate)?);
    cache
        .lock()
        .unwrap()
        .insert((len, rate, cfg), system.clone());
    Ok(system)
}

fn padded(samples: &[f64], len: usize) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.resize(len, 0.0);
    v
}

/// Spectrogram SNR `10 log10(‖S‖² / ‖|S_r| - |S|‖²)` in dB, with both signals
/// analysed on the fixed grid of `cfg`. Signals are zero-padded to a
/// multiple of `M`.
pub fn snr_ms(original: &SignalBuffer, reconstructed: &SignalBuffer, cfg: SnrMsConfig) -> Result<f64> {
    if original.len() != reconstructed.len() {
        return Err(Error::dim(format!(
            "signal lengths differ: {} vs {}",
            original.len(),
            reconstructed.len()
        )));
    }
    if original.sample_rate() != reconstructed.sample_rate() {
        return Err(Error::dim(format!(
            "sample rates differ: {} vs {}",
            original.sample_rate(),
            reconstructed.sample_rate()
        )));
    }
    if cfg.hop == 0 || cfg.channels == 0 || !cfg.channels.is_multiple_of(cfg.hop) {
        return Err(Error::arg("SNR analysis needs a hop dividing the channel count"));
    }
    let len = original.len().div_ceil(cfg.channels) * cfg.channels;
    let system = analysis(len, original.sample_rate(), cfg)?;
    let grid = system.grid();
    let mut s = vec![Default::default(); grid.half_size()];
    let mut r = s.clone();
    system.analyze_into(&padded(original.samples(), len), &mut s)?;
    system.analyze_into(&padded(reconstructed.samples(), len), &mut r)?;
    let mr = grid.half_channels();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (x, y)) in s.iter().zip(&r).enumerate() {
        let w = grid.channel_weight(i % mr);
        let (ax, ay) = (x.norm(), y.norm());
        num += w * ax * ax;
        den += w * (ay - ax) * (ay - ax);
    }
    Ok(ratio_db(num, den))
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if den < PERFECT_DENOMINATOR {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

/// Waveform SNR `10 log10(‖s‖² / ‖s - s̃‖²)` in dB.
pub fn time_snr(original: &SignalBuffer, reconstructed: &SignalBuffer) -> Result<f64> {
    if original.len() != reconstructed.len() {
        return Err(Error::dim("signal lengths differ"));
    }
    let num = original.energy();
    let den: f64 = original
        .samples()
        .iter()
        .zip(reconstructed.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(ratio_db(num, den))
}

/// `‖X - P(X)‖` over the full spectrum, `P` being the consistency projection
/// of the pair `(g, g_dual)`.
pub fn projection_error(coeffs: &ComplexStft, g: &WindowVec, g_dual: &WindowVec) -> Result<f64> {
    let system = Gabor::with_dual(*coeffs.grid(), g.clone(), g_dual.clone(), coeffs.sample_rate())?;
    projection_error_with(&system, coeffs)
}

pub fn projection_error_with(system: &Gabor, coeffs: &ComplexStft) -> Result<f64> {
    coeffs.full_distance(&system.project(coeffs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(len: usize) -> SignalBuffer {
        let s = (0..len)
            .map(|i| (i as f64 * 0.05).sin() + 0.3 * (i as f64 * 0.31).cos())
            .collect();
        SignalBuffer::new(s, 22050).unwrap()
    }

    #[test]
    fn identical_and_negated_are_perfect() {
        let s = tone(4096);
        let cfg = SnrMsConfig::default();
        assert_eq!(snr_ms(&s, &s, cfg).unwrap(), f64::INFINITY);
        let neg = SignalBuffer::new(s.samples().iter().map(|x| -x).collect(), 22050).unwrap();
        assert_eq!(snr_ms(&s, &neg, cfg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(snr_ms(&tone(4096), &tone(2048), SnrMsConfig::default()).is_err());
    }

    #[test]
    fn default_lambda() {
        let l = SnrMsConfig::default().lambda(22050);
        assert!((l - 11.888_616).abs() < 1e-6);
    }

    #[test]
    fn scaled_copy_has_closed_form_snr() {
        // |S_r| - |S| = 0.5 |S|, so the ratio is exactly 1 / 0.25.
        let s = tone(4096);
        let r = SignalBuffer::new(s.samples().iter().map(|x| 1.5 * x).collect(), 22050).unwrap();
        let v = snr_ms(&s, &r, SnrMsConfig::default()).unwrap();
        assert!((v - 10.0 * 4f64.log10()).abs() < 1e-9);
    }
}
