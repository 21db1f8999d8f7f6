//! Discrete STFT on a circular signal.
//!
//! `S[m, n] = Σ_l s[l] g[l - na] e^{-2πiml/M}` with all indices modulo `L`.
//! Coefficients of real signals are stored as the half spectrum
//! `m < ⌊M/2⌋ + 1`, frame-major.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealToComplex};

use crate::dual;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{SignalBuffer, StftGrid};
use crate::windows::{Support, WindowRole, WindowVec};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStft {
    grid: StftGrid,
    sample_rate: u32,
    coeffs: Vec<Complex64>,
}

impl ComplexStft {
    pub fn new(grid: StftGrid, sample_rate: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.half_size() {
            return Err(Error::dim(format!(
                "expected {} x {} coefficients, got {}",
                grid.half_channels(),
                grid.frames(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("STFT coefficients"));
        }
        Ok(Self {
            grid,
            sample_rate,
            coeffs,
        })
    }

    pub fn zeros(grid: StftGrid, sample_rate: u32) -> Self {
        Self {
            grid,
            sample_rate,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.half_size()],
        }
    }

    /// Coefficients `|mags| e^{i phase}`.
    pub fn from_polar(mags: &MagnitudeStft, phase: &[f64]) -> Result<Self> {
        if phase.len() != mags.mags.len() {
            return Err(Error::dim(format!(
                "phase has {} entries, magnitudes have {}",
                phase.len(),
                mags.mags.len()
            )));
        }
        let coeffs = mags
            .mags
            .iter()
            .zip(phase)
            .map(|(&r, &p)| Complex64::from_polar(r, p))
            .collect();
        Self::new(mags.grid, mags.sample_rate, coeffs)
    }

    /// Rebuilds the half spectrum from a full `M`-channel frame-major matrix.
    pub fn from_full(grid: StftGrid, sample_rate: u32, full: &[Complex64]) -> Result<Self> {
        let (m, n) = (grid.channels(), grid.frames());
        if full.len() != m * n {
            return Err(Error::dim(format!(
                "expected {m} x {n} full-spectrum coefficients, got {}",
                full.len()
            )));
        }
        let mr = grid.half_channels();
        let coeffs = full
            .chunks_exact(m)
            .flat_map(|frame| frame[..mr].iter().copied())
            .collect();
        Self::new(grid, sample_rate, coeffs)
    }

    pub fn grid(&self) -> &StftGrid {
        &self.grid
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.coeffs[n * self.grid.half_channels() + m]
    }

    pub fn frame(&self, n: usize) -> &[Complex64] {
        let mr = self.grid.half_channels();
        &self.coeffs[n * mr..(n + 1) * mr]
    }

    pub fn magnitude(&self) -> MagnitudeStft {
        MagnitudeStft {
            grid: self.grid,
            sample_rate: self.sample_rate,
            mags: self.coeffs.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Phase in `[-π, π)`; zero where the coefficient is zero.
    pub fn phase(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| wrap_phase(c.arg())).collect()
    }

    /// All `M` channels, using `S[M - m] = conj(S[m])`.
    pub fn expand_full(&self) -> Vec<Complex64> {
        let (m, mr) = (self.grid.channels(), self.grid.half_channels());
        let mut full = Vec::with_capacity(m * self.grid.frames());
        for frame in self.coeffs.chunks_exact(mr) {
            full.extend_from_slice(frame);
            for k in mr..m {
                full.push(frame[m - k].conj());
            }
        }
        full
    }

    /// Squared Euclidean norm over the full expanded spectrum.
    pub fn full_norm_sqr(&self) -> f64 {
        let mr = self.grid.half_channels();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| self.grid.channel_weight(i % mr) * c.norm_sqr())
            .sum()
    }

    pub fn full_norm(&self) -> f64 {
        self.full_norm_sqr().sqrt()
    }

    /// `‖self - other‖` over the full expanded spectrum.
    pub fn full_distance(&self, other: &ComplexStft) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::dim("STFTs live on different grids"));
        }
        let mr = self.grid.half_channels();
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| self.grid.channel_weight(i % mr) * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeStft {
    grid: StftGrid,
    sample_rate: u32,
    mags: Vec<f64>,
}

impl MagnitudeStft {
    pub fn new(grid: StftGrid, sample_rate: u32, mags: Vec<f64>) -> Result<Self> {
        if mags.len() != grid.half_size() {
            return Err(Error::dim(format!(
                "expected {} magnitudes, got {}",
                grid.half_size(),
                mags.len()
            )));
        }
        if mags.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("magnitudes"));
        }
        if mags.iter().any(|&m| m < 0.0) {
            return Err(Error::arg("magnitudes must be non-negative"));
        }
        Ok(Self {
            grid,
            sample_rate,
            mags,
        })
    }

    pub fn grid(&self) -> &StftGrid {
        &self.grid
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn mags(&self) -> &[f64] {
        &self.mags
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.mags[n * self.grid.half_channels() + m]
    }

    pub fn max(&self) -> f64 {
        self.mags.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Multiplies every frame by per-channel weights.
    pub fn weighted(&self, weights: &[f64]) -> Result<Self> {
        let mr = self.grid.half_channels();
        if weights.len() != mr {
            return Err(Error::dim(format!(
                "expected {mr} channel weights, got {}",
                weights.len()
            )));
        }
        let mags = self
            .mags
            .iter()
            .enumerate()
            .map(|(i, m)| m * weights[i % mr])
            .collect();
        Self::new(self.grid, self.sample_rate, mags)
    }
}

/// Analysis window, canonical dual and the FFT plans for one lattice.
///
/// Windows are applied on their effective support only, so a Gaussian whose
/// tails underflow costs no more than a compact window of the same width.
#[derive(Clone)]
pub struct Gabor {
    grid: StftGrid,
    sample_rate: u32,
    window: WindowVec,
    dual: WindowVec,
    win_support: Support,
    win_taps: Vec<f64>,
    dual_support: Support,
    dual_taps: Vec<f64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Gabor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gabor")
            .field("grid", &self.grid)
            .field("sample_rate", &self.sample_rate)
            .field("family", &self.window.family())
            .field("window_support", &self.win_support.len)
            .field("dual_support", &self.dual_support.len)
            .finish()
    }
}

impl Gabor {
    /// Builds the system and its canonical dual window.
    pub fn new(grid: StftGrid, window: WindowVec, sample_rate: u32) -> Result<Self> {
        let dual = dual::canonical_dual(&window, &grid)?;
        Self::with_dual(grid, window, dual, sample_rate)
    }

    pub fn with_dual(
        grid: StftGrid,
        window: WindowVec,
        dual: WindowVec,
        sample_rate: u32,
    ) -> Result<Self> {
        grid.check_len(window.len(), "analysis window")?;
        grid.check_len(dual.len(), "synthesis window")?;
        if sample_rate == 0 {
            return Err(Error::arg("sample rate must be positive"));
        }
        let win_support = window.support();
        let dual_support = dual.support();
        Ok(Self {
            grid,
            sample_rate,
            win_taps: window.compact_taps(win_support),
            dual_taps: dual.compact_taps(dual_support),
            window,
            dual,
            win_support,
            dual_support,
            r2c: fft::r2c(grid.channels()),
            c2r: fft::c2r(grid.channels()),
        })
    }

    pub fn grid(&self) -> &StftGrid {
        &self.grid
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn window(&self) -> &WindowVec {
        &self.window
    }

    pub fn dual(&self) -> &WindowVec {
        &self.dual
    }

    /// Forward transform into a caller-provided half-spectrum buffer.
    pub fn analyze_into(&self, signal: &[f64], out: &mut [Complex64]) -> Result<()> {
        self.grid.check_len(signal.len(), "signal")?;
        if out.len() != self.grid.half_size() {
            return Err(Error::dim("output buffer does not match the grid"));
        }
        let (a, m, len) = (self.grid.hop(), self.grid.channels(), self.grid.len());
        let mr = self.grid.half_channels();
        let mut buf = vec![0.0; m];
        let mut scratch = self.r2c.make_scratch_vec();
        for (n, frame) in out.chunks_exact_mut(mr).enumerate() {
            buf.iter_mut().for_each(|x| *x = 0.0);
            let mut l = (n * a + self.win_support.start) % len;
            let mut lm = l % m;
            for &g in &self.win_taps {
                buf[lm] += signal[l] * g;
                l += 1;
                lm += 1;
                if lm == m {
                    lm = 0;
                }
                if l == len {
                    l = 0;
                    lm = 0;
                }
            }
            self.r2c
                .process_with_scratch(&mut buf, frame, &mut scratch)
                .map_err(|e| Error::dim(e.to_string()))?;
        }
        Ok(())
    }

    pub fn analyze(&self, signal: &SignalBuffer) -> Result<ComplexStft> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.half_size()];
        self.analyze_into(signal.samples(), &mut coeffs)?;
        Ok(ComplexStft {
            grid: self.grid,
            sample_rate: signal.sample_rate(),
            coeffs,
        })
    }

    /// Inverse transform with the dual window. The imaginary parts of the
    /// self-conjugate channels are dropped, which makes the output the real
    /// part of the full synthesis sum.
    pub fn synthesize_into(&self, coeffs: &[Complex64], out: &mut [f64]) -> Result<()> {
        if coeffs.len() != self.grid.half_size() {
            return Err(Error::dim("coefficients do not match the grid"));
        }
        self.grid.check_len(out.len(), "output signal")?;
        let (a, m, len) = (self.grid.hop(), self.grid.channels(), self.grid.len());
        let mr = self.grid.half_channels();
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut spec = vec![Complex64::new(0.0, 0.0); mr];
        let mut buf = vec![0.0; m];
        let mut scratch = self.c2r.make_scratch_vec();
        for (n, frame) in coeffs.chunks_exact(mr).enumerate() {
            spec.copy_from_slice(frame);
            spec[0].im = 0.0;
            if m % 2 == 0 {
                spec[mr - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(&mut spec, &mut buf, &mut scratch)
                .map_err(|e| Error::dim(e.to_string()))?;
            let mut l = (n * a + self.dual_support.start) % len;
            let mut lm = l % m;
            for &g in &self.dual_taps {
                out[l] += g * buf[lm];
                l += 1;
                lm += 1;
                if lm == m {
                    lm = 0;
                }
                if l == len {
                    l = 0;
                    lm = 0;
                }
            }
        }
        Ok(())
    }

    pub fn synthesize(&self, coeffs: &ComplexStft) -> Result<SignalBuffer> {
        if coeffs.grid != self.grid {
            return Err(Error::dim("coefficients live on a different grid"));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(&coeffs.coeffs, &mut out)?;
        SignalBuffer::new(out, coeffs.sample_rate)
    }

    /// `S_g(iSTFT_g̃(coeffs))`: the orthogonal projection onto consistent
    /// coefficients when `g̃` is the canonical dual.
    pub fn project(&self, coeffs: &ComplexStft) -> Result<ComplexStft> {
        let s = self.synthesize(coeffs)?;
        self.analyze(&s)
    }

    pub fn project_in_place(&self, coeffs: &mut [Complex64], scratch: &mut [f64]) -> Result<()> {
        self.synthesize_into(coeffs, scratch)?;
        self.analyze_into(scratch, coeffs)
    }
}

/// Forward STFT of `signal` with `window` on `grid`.
pub fn stft(signal: &SignalBuffer, window: &WindowVec, grid: &StftGrid) -> Result<ComplexStft> {
    grid.check_len(signal.len(), "signal")?;
    grid.check_len(window.len(), "window")?;
    let system = Gabor::with_dual(*grid, window.clone(), window.clone(), signal.sample_rate())?;
    system.analyze(signal)
}

/// Inverse STFT of `coeffs` with a synthesis window.
pub fn istft(coeffs: &ComplexStft, synthesis_window: &WindowVec) -> Result<SignalBuffer> {
    if synthesis_window.role() != WindowRole::SynthesisDual {
        return Err(Error::arg("istft needs a synthesis (dual) window"));
    }
    let grid = *coeffs.grid();
    grid.check_len(synthesis_window.len(), "synthesis window")?;
    let system = Gabor::with_dual(
        grid,
        synthesis_window.clone(),
        synthesis_window.clone(),
        coeffs.sample_rate(),
    )?;
    system.synthesize(coeffs)
}

/// `S_g(iSTFT_{g̃}(coeffs))`.
pub fn project_consistent(
    coeffs: &ComplexStft,
    g: &WindowVec,
    g_dual: &WindowVec,
) -> Result<ComplexStft> {
    let system = Gabor::with_dual(*coeffs.grid(), g.clone(), g_dual.clone(), coeffs.sample_rate())?;
    system.project(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windows::{named_window, periodized_gaussian, WindowFamily};
    use std::f64::consts::PI;

    fn lcg(seed: u64, len: usize) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    fn brute_stft(s: &[f64], g: &[f64], a: usize, m: usize) -> Vec<Complex64> {
        let len = s.len();
        let mut out = Vec::new();
        for n in 0..len / a {
            for k in 0..m / 2 + 1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, &x) in s.iter().enumerate() {
                    let w = g[(l + len - (n * a) % len) % len];
                    let ph = -2.0 * PI * ((k * l) % m) as f64 / m as f64;
                    acc += x * w * Complex64::from_polar(1.0, ph);
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn matches_direct_sum() {
        let (len, a, m) = (96, 8, 24);
        let s = lcg(1, len);
        let g = periodized_gaussian(0.01, len, 22050).unwrap();
        let grid = StftGrid::new(a, m, len).unwrap();
        let c = stft(&SignalBuffer::new(s.clone(), 22050).unwrap(), &g, &grid).unwrap();
        let oracle = brute_stft(&s, g.taps(), a, m);
        let scale = oracle.iter().fold(0.0f64, |x, c| x.max(c.norm()));
        for (x, y) in c.coeffs().iter().zip(&oracle) {
            assert!((x - y).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn impulse_gives_window_values() {
        let (len, a, m) = (64, 4, 16);
        let mut s = vec![0.0; len];
        s[0] = 1.0;
        let g = named_window(WindowFamily::Hann, 24, len).unwrap();
        let grid = StftGrid::new(a, m, len).unwrap();
        let c = stft(&SignalBuffer::new(s, 1000).unwrap(), &g, &grid).unwrap();
        for n in 0..grid.frames() {
            let expect = g.taps()[(len - n * a) % len].abs();
            for k in 0..grid.half_channels() {
                assert!((c.get(k, n).norm() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expand_then_fold_is_lossless() {
        let grid = StftGrid::new(3, 9, 27).unwrap();
        let s = SignalBuffer::new(lcg(5, 27), 100).unwrap();
        let g = named_window(WindowFamily::Blackman, 11, 27).unwrap();
        let c = stft(&s, &g, &grid).unwrap();
        let back = ComplexStft::from_full(grid, 100, &c.expand_full()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), -PI);
        assert_eq!(wrap_phase(-PI), -PI);
        assert!((wrap_phase(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert_eq!(wrap_phase(0.0), 0.0);
    }

    #[test]
    fn istft_requires_dual_role() {
        let grid = StftGrid::new(4, 8, 16).unwrap();
        let g = named_window(WindowFamily::Hann, 8, 16).unwrap();
        assert!(istft(&ComplexStft::zeros(grid, 10), &g).is_err());
    }

    #[test]
    fn full_norm_counts_mirrored_channels() {
        let grid = StftGrid::new(2, 4, 8).unwrap();
        let mut c = ComplexStft::zeros(grid, 10);
        c.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        c.coeffs_mut()[2] = Complex64::new(0.0, 2.0);
        let full: f64 = c.expand_full().iter().map(|x| x.norm_sqr()).sum();
        assert!((c.full_norm_sqr() - full).abs() < 1e-15);
        assert!((full - 6.0).abs() < 1e-15);
    }
}
