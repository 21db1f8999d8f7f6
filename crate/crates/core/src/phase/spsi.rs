//! Single-pass spectrogram inversion.
//!
//! Works frame by frame in the frame-centred phase convention, where a
//! stationary sinusoid advances by `a ω` per hop, and converts to the
//! frequency-invariant convention at the end.

use std::f64::consts::PI;
use std::time::Instant;

use super::PrResult;
use crate::error::{Error, Result};
use crate::stft::{wrap_phase, ComplexStft, Gabor, MagnitudeStft};

/// Offset in `(-0.5, 0.5)` of the vertex of the parabola through three
/// samples around a strict maximum.
fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let den = left - 2.0 * mid + right;
    if den == 0.0 {
        0.0
    } else {
        0.5 * (left - right) / den
    }
}

fn is_peak(x: &[f64], k: usize) -> bool {
    k > 0 && k + 1 < x.len() && x[k] > x[k - 1] && x[k] > x[k + 1]
}

fn is_trough(x: &[f64], k: usize) -> bool {
    k > 0 && k + 1 < x.len() && x[k] < x[k - 1] && x[k] < x[k + 1]
}

/// Unwrapped frame-centred phase, frame-major.
pub fn spsi_centered_phase(mags: &MagnitudeStft) -> Result<Vec<f64>> {
    let grid = *mags.grid();
    let mr = grid.half_channels();
    if mr < 3 {
        return Err(Error::arg(format!(
            "SPSI needs at least 3 stored channels to pick peaks, got {mr}"
        )));
    }
    let (a, m) = (grid.hop() as f64, grid.channels() as f64);
    let frames = grid.frames();
    let mut phase = vec![0.0; mr * frames];
    for n in 1..frames {
        let (done, rest) = phase.split_at_mut(n * mr);
        let prev = &done[(n - 1) * mr..];
        let cur = &mut rest[..mr];
        cur.copy_from_slice(prev);
        let x = &mags.mags()[n * mr..(n + 1) * mr];
        let peaks: Vec<usize> = (1..mr - 1).filter(|&k| is_peak(x, k)).collect();
        for (i, &k) in peaks.iter().enumerate() {
            let p = parabolic_offset(x[k - 1], x[k], x[k + 1]);
            let omega = 2.0 * PI * (k as f64 + p) / m;
            let peak_phase = prev[k] + a * omega;

            let floor = if i > 0 { peaks[i - 1] + 1 } else { 0 };
            let mut lo = k - 1;
            while lo > floor && !is_trough(x, lo) {
                lo -= 1;
            }
            let ceil = peaks.get(i + 1).map_or(mr - 1, |&q| q - 1);
            let mut hi = k + 1;
            while hi < ceil && !is_trough(x, hi) {
                hi += 1;
            }
            for v in &mut cur[lo..=hi] {
                *v = peak_phase;
            }
        }
    }
    Ok(phase)
}

pub fn spsi(mags: &MagnitudeStft, system: &Gabor) -> Result<PrResult> {
    if mags.grid() != system.grid() {
        return Err(Error::dim("magnitudes and system use different grids"));
    }
    let start = Instant::now();
    let grid = *mags.grid();
    let (mr, a, m) = (grid.half_channels(), grid.hop(), grid.channels());
    let centred = spsi_centered_phase(mags)?;
    let phase: Vec<f64> = centred
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (n, k) = (i / mr, i % mr);
            let shift = 2.0 * PI * ((k * n * a) % m) as f64 / m as f64;
            wrap_phase(p - shift)
        })
        .collect();
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StftGrid;

    #[test]
    fn parabola_vertex() {
        assert_eq!(parabolic_offset(1.0, 2.0, 1.0), 0.0);
        // y = -(x - 0.25)^2 sampled at -1, 0, 1.
        let f = |x: f64| -(x - 0.25) * (x - 0.25);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn flat_magnitude_keeps_zero_phase() {
        let grid = StftGrid::new(4, 16, 64).unwrap();
        let mags = MagnitudeStft::new(grid, 100, vec![2.0; grid.half_size()]).unwrap();
        assert!(spsi_centered_phase(&mags).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn regions_stop_at_troughs() {
        let grid = StftGrid::new(1, 16, 32).unwrap();
        let frame = [0.1, 0.5, 1.0, 0.5, 0.2, 0.3, 2.0, 0.3, 0.1];
        let mags: Vec<f64> = (0..grid.frames()).flat_map(|_| frame).collect();
        let mags = MagnitudeStft::new(grid, 100, mags).unwrap();
        let ph = spsi_centered_phase(&mags).unwrap();
        let f1 = &ph[9..18];
        let w = |k: f64| 2.0 * PI * k / 16.0;
        for v in &f1[0..=3] {
            assert!((v - w(2.0)).abs() < 1e-12);
        }
        // The shared trough goes to the right-hand peak.
        for v in &f1[4..=8] {
            assert!((v - w(6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_channels() {
        let grid = StftGrid::new(2, 2, 8).unwrap();
        let mags = MagnitudeStft::new(grid, 100, vec![1.0; grid.half_size()]).unwrap();
        assert!(spsi_centered_phase(&mags).is_err());
    }
}
