#![allow(dead_code)]

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use tfpr::SignalBuffer;

pub const RATE: u32 = 22050;

pub fn noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn signal(len: usize, seed: u64) -> SignalBuffer {
    SignalBuffer::new(noise(len, seed), RATE).unwrap()
}

pub fn complex_noise(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Analysis by direct summation, half spectrum, frame-major.
pub fn brute_stft(s: &[f64], g: &[f64], a: usize, m: usize) -> Vec<Complex64> {
    let len = s.len();
    let mut out = Vec::with_capacity((m / 2 + 1) * len / a);
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

/// Synthesis by direct summation over the full conjugate-symmetric expansion.
/// Returns real and imaginary parts.
pub fn brute_istft(full: &[Complex64], gd: &[f64], a: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let len = gd.len();
    let mut re = vec![0.0; len];
    let mut im = vec![0.0; len];
    for (l, (r, i)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..len / a {
            let w = gd[(l + len - (n * a) % len) % len];
            if w == 0.0 {
                continue;
            }
            for k in 0..m {
                let ph = 2.0 * PI * ((k * l) % m) as f64 / m as f64;
                acc += full[n * m + k] * w * Complex64::from_polar(1.0, ph);
            }
        }
        *r = acc.re;
        *i = acc.im;
    }
    (re, im)
}

pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0f64, |x, c| x.max(c.norm()))
}
