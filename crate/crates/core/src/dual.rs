//! Gabor frame operator, canonical dual and canonical tight windows.
//!
//! With `a | M | L` the frame operator only couples samples `l` and
//! `l - kM`:
//!
//! ```text
//! (S f)[l] = M Σ_k G_k[l mod a] f[l - kM],   G_k[r] = Σ_{j ≡ r (mod a)} g[j] g[j - kM]
//! ```
//!
//! so every residue class modulo `M` is a circulant block of size `p = L/M`,
//! diagonalized by a length-`p` DFT. When the window support fits in `M`
//! only `k = 0` survives and the operator is diagonal.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::StftGrid;
use crate::windows::{WindowRole, WindowVec};

/// Smallest-to-largest eigenvalue ratio at or below which there is no frame.
pub const FRAME_RATIO_LIMIT: f64 = 1e-12;

/// Taps of a computed dual or tight window at or below this fraction of the
/// peak are rounding noise from the block DFTs and are set to zero, so the
/// window keeps a compact support.
pub const ROUNDING_FLOOR: f64 = 1e-14;

/// Eigenvalues of the frame operator, one length-`p` block per residue
/// `r < a`.
#[derive(Clone, Debug)]
pub struct FrameSpectrum {
    hop: usize,
    blocks: usize,
    eig: Vec<f64>,
    diagonal: bool,
}

impl FrameSpectrum {
    pub fn new(window: &WindowVec, grid: &StftGrid) -> Result<Self> {
        grid.check_len(window.len(), "window")?;
        let (a, m, len) = (grid.hop(), grid.channels(), grid.len());
        let p = len / m;
        let taps = window.taps();
        let support = window.support();

        // c[k * a + r] = M G_k[r]; only lags that fit inside the support.
        let mut c = vec![0.0; p * a];
        let mut diagonal = true;
        for k in 0..p {
            if k.min(p - k) * m >= support.len.max(1) && k != 0 {
                continue;
            }
            let shift = k * m;
            let mut any = false;
            for i in 0..support.len {
                let j = (support.start + i) % len;
                let prod = taps[j] * taps[(j + len - shift) % len];
                if prod != 0.0 {
                    c[k * a + j % a] += prod;
                    any = true;
                }
            }
            if k != 0 && any {
                diagonal = false;
            }
        }
        for v in &mut c {
            *v *= m as f64;
        }

        let mut eig = vec![0.0; p * a];
        if diagonal || p == 1 {
            for r in 0..a {
                for q in 0..p {
                    eig[r * p + q] = c[r];
                }
            }
        } else {
            let plan = fft::forward(p);
            let mut buf = vec![Complex64::new(0.0, 0.0); p];
            for r in 0..a {
                for k in 0..p {
                    buf[k] = Complex64::new(c[k * a + r], 0.0);
                }
                plan.process(&mut buf);
                for q in 0..p {
                    eig[r * p + q] = buf[q].re;
                }
            }
        }
        Ok(Self {
            hop: a,
            blocks: p,
            eig,
            diagonal,
        })
    }

    pub fn min(&self) -> f64 {
        self.eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eig.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when the window fits in one period of `M` (the painless case).
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    fn check(&self, grid: &StftGrid) -> Result<()> {
        let (lo, hi) = (self.min(), self.max());
        if !(hi > 0.0) || lo <= FRAME_RATIO_LIMIT * hi {
            return Err(Error::NotAFrame {
                a: grid.hop(),
                m: grid.channels(),
                ratio: if hi > 0.0 { lo / hi } else { 0.0 },
            });
        }
        Ok(())
    }

    /// Applies `S^power` to `f` in place.
    fn apply_power(&self, grid: &StftGrid, f: &mut [f64], power: f64) {
        self.apply_power_raw(grid, f, power);
        if !self.diagonal {
            let peak = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for v in f.iter_mut() {
                if v.abs() <= ROUNDING_FLOOR * peak {
                    *v = 0.0;
                }
            }
        }
    }

    fn apply_power_raw(&self, grid: &StftGrid, f: &mut [f64], power: f64) {
        let (a, m) = (self.hop, grid.channels());
        let p = self.blocks;
        if self.diagonal || p == 1 {
            for (l, v) in f.iter_mut().enumerate() {
                *v *= self.eig[(l % m % a) * p].powf(power);
            }
            return;
        }
        let fwd = fft::forward(p);
        let inv = fft::inverse(p);
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for r0 in 0..m {
            let r = r0 % a;
            for t in 0..p {
                buf[t] = Complex64::new(f[r0 + t * m], 0.0);
            }
            fwd.process(&mut buf);
            for (v, e) in buf.iter_mut().zip(&self.eig[r * p..(r + 1) * p]) {
                *v *= e.powf(power);
            }
            inv.process(&mut buf);
            for t in 0..p {
                f[r0 + t * m] = buf[t].re / p as f64;
            }
        }
    }
}

/// Canonical dual `g̃ = S⁻¹ g`.
pub fn canonical_dual(window: &WindowVec, grid: &StftGrid) -> Result<WindowVec> {
    let spec = FrameSpectrum::new(window, grid)?;
    spec.check(grid)?;
    let mut taps = window.taps().to_vec();
    spec.apply_power(grid, &mut taps, -1.0);
    WindowVec::new(taps, window.family(), WindowRole::SynthesisDual)
}

/// Canonical tight window `S^{-1/2} g`; its frame operator is the identity.
pub fn tight_window(window: &WindowVec, grid: &StftGrid) -> Result<WindowVec> {
    let spec = FrameSpectrum::new(window, grid)?;
    spec.check(grid)?;
    let mut taps = window.taps().to_vec();
    spec.apply_power(grid, &mut taps, -0.5);
    WindowVec::new(taps, window.family(), WindowRole::Analysis)
}

/// Lower and upper frame bounds.
pub fn frame_bounds(window: &WindowVec, grid: &StftGrid) -> Result<(f64, f64)> {
    let spec = FrameSpectrum::new(window, grid)?;
    Ok((spec.min(), spec.max()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windows::{named_window, periodized_gaussian, WindowFamily};

    /// Dense frame operator applied to `f`, straight from its definition.
    fn frame_op(g: &[f64], a: usize, m: usize, f: &[f64]) -> Vec<f64> {
        let len = g.len();
        let mut out = vec![0.0; len];
        for n in 0..len / a {
            for l in 0..len {
                for lp in (l % m..len).step_by(m) {
                    out[l] += m as f64
                        * g[(l + len - n * a % len) % len]
                        * g[(lp + len - n * a % len) % len]
                        * f[lp];
                }
            }
        }
        out
    }

    #[test]
    fn dual_inverts_dense_operator() {
        let (len, a, m) = (48, 4, 12);
        let grid = StftGrid::new(a, m, len).unwrap();
        for g in [
            periodized_gaussian(0.002, len, 22050).unwrap(),
            named_window(WindowFamily::Hann, 20, len).unwrap(),
            named_window(WindowFamily::Bartlett, 9, len).unwrap(),
        ] {
            let d = canonical_dual(&g, &grid).unwrap();
            let back = frame_op(g.taps(), a, m, d.taps());
            for (x, y) in back.iter().zip(g.taps()) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn tight_window_has_identity_operator() {
        let (len, a, m) = (60, 5, 15);
        let grid = StftGrid::new(a, m, len).unwrap();
        let g = periodized_gaussian(0.004, len, 22050).unwrap();
        let t = tight_window(&g, &grid).unwrap();
        let mut e = vec![0.0; len];
        e[7] = 1.0;
        let img = frame_op(t.taps(), a, m, &e);
        for (l, v) in img.iter().enumerate() {
            let expect = if l == 7 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn painless_dual_is_proportional_when_tight() {
        // Squared Hann at a quarter of its support sums to a constant, so the
        // dual is a scaled copy of the window.
        let (len, a, m) = (64, 4, 16);
        let grid = StftGrid::new(a, m, len).unwrap();
        let g = named_window(WindowFamily::Hann, 16, len).unwrap();
        assert!(FrameSpectrum::new(&g, &grid).unwrap().is_diagonal());
        let d = canonical_dual(&g, &grid).unwrap();
        let ratio = d.taps()[0] / g.taps()[0];
        for (x, y) in d.taps().iter().zip(g.taps()) {
            assert!((x - ratio * y).abs() < 1e-15);
        }
    }

    #[test]
    fn gap_in_coverage_is_not_a_frame() {
        let grid = StftGrid::new(8, 16, 64).unwrap();
        let g = named_window(WindowFamily::Hann, 6, 64).unwrap();
        assert!(matches!(
            canonical_dual(&g, &grid),
            Err(Error::NotAFrame { a: 8, m: 16, .. })
        ));
    }

    #[test]
    fn critically_sampled_even_window_is_singular() {
        // The Zak transform of an even window vanishes at the half-period
        // point when a = M and L/M are both even.
        let grid = StftGrid::new(8, 8, 64).unwrap();
        let g = periodized_gaussian(64.0 / 22050.0, 64, 22050).unwrap();
        assert!(canonical_dual(&g, &grid).is_err());
        let odd = StftGrid::new(7, 7, 63).unwrap();
        let g = periodized_gaussian(49.0 / 22050.0, 63, 22050).unwrap();
        assert!(canonical_dual(&g, &odd).is_ok());
    }
}
