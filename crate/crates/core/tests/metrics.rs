mod common;

use common::{brute_stft, noise, RATE};
use tfpr::harness::sweep::cell_system;
use tfpr::harness::{synth_signal, SynthKind};
use tfpr::metrics::projection_error_with;
use tfpr::phase::distort_phase;
use tfpr::windows::periodized_gaussian;
use tfpr::{snr_ms, Complex64, SignalBuffer, SnrMsConfig, WindowFamily};

fn unit_energy(samples: Vec<f64>) -> SignalBuffer {
    let e = samples.iter().map(|x| x * x).sum::<f64>().sqrt();
    SignalBuffer::new(samples.into_iter().map(|x| x / e).collect(), RATE).unwrap()
}

fn plus_noise(x: &SignalBuffer, n: &[f64], t: f64) -> SignalBuffer {
    let s = x.samples().iter().zip(n).map(|(a, b)| a + t * b).collect();
    SignalBuffer::new(s, RATE).unwrap()
}

/// Ratio `‖|S_y| - |S_x|‖² / ‖S_x‖²` by direct summation on the metric grid.
fn brute_ratio(x: &SignalBuffer, y: &SignalBuffer, cfg: SnrMsConfig) -> f64 {
    let len = x.len();
    let g = periodized_gaussian(cfg.lambda(RATE), len, RATE).unwrap();
    let sx = brute_stft(x.samples(), g.taps(), cfg.hop, cfg.channels);
    let sy = brute_stft(y.samples(), g.taps(), cfg.hop, cfg.channels);
    let mr = cfg.channels / 2 + 1;
    let weight = |k: usize| if k == 0 || 2 * k == cfg.channels { 1.0 } else { 2.0 };
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (a, b)) in sx.iter().zip(&sy).enumerate() {
        let w = weight(i % mr);
        num += w * (b.norm() - a.norm()).powi(2);
        den += w * a.norm_sqr();
    }
    num / den
}

#[test]
fn ten_decibels_at_a_tenth_of_the_energy() {
    let len = 4096;
    let cfg = SnrMsConfig::default();
    let x = unit_energy(noise(len, 1));
    let n = noise(len, 2);
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let t = 0.5 * (lo + hi);
        if snr_ms(&x, &plus_noise(&x, &n, t), cfg).unwrap() > 10.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    let y = plus_noise(&x, &n, 0.5 * (lo + hi));
    assert!((snr_ms(&x, &y, cfg).unwrap() - 10.0).abs() < 1e-9);
    let ratio = brute_ratio(&x, &y, cfg);
    assert!((ratio - 0.1).abs() < 1e-9, "{ratio}");
}

#[test]
fn sign_flip_does_not_change_snr() {
    let len = 8192;
    let x = synth_signal(&SynthKind::SpeechLike, len, RATE, 4).unwrap();
    let n = noise(len, 9);
    let y = plus_noise(&x, &n, 0.05);
    let neg = SignalBuffer::new(y.samples().iter().map(|v| -v).collect(), RATE).unwrap();
    let cfg = SnrMsConfig::default();
    assert_eq!(snr_ms(&x, &y, cfg).unwrap(), snr_ms(&x, &neg, cfg).unwrap());
}

#[test]
fn snr_falls_as_phase_noise_grows() {
    let len = 24_576;
    let x = synth_signal(&SynthKind::SpeechLike, len, RATE, 6).unwrap();
    let cell = cell_system(WindowFamily::Gaussian, 1.0, 8, len, RATE).unwrap();
    let coeffs = cell.system.analyze(&x).unwrap();
    let values: Vec<f64> = [0.1, 0.5, 1.0]
        .iter()
        .map(|&sigma| {
            let noisy = distort_phase(&coeffs, sigma, 77).unwrap();
            let y = cell.system.synthesize(&noisy).unwrap();
            snr_ms(&x, &y, SnrMsConfig::default()).unwrap()
        })
        .collect();
    assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
    assert!(values[2] < 8.0, "{values:?}");
}

// Coefficients are the half spectrum of a real signal, so the unit constants
// acting globally on the full spectrum are ±1.
#[test]
fn projection_error_ignores_global_sign() {
    let len = 4096;
    let x = synth_signal(&SynthKind::SpeechLike, len, RATE, 8).unwrap();
    let cell = cell_system(WindowFamily::Hann, 2.0, 8, len, RATE).unwrap();
    let system = &cell.system;
    let coeffs = system.analyze(&x).unwrap();
    let mut inconsistent = distort_phase(&coeffs, 0.7, 3).unwrap();
    let e0 = projection_error_with(system, &inconsistent).unwrap();
    assert!(e0 > 1e-3 * inconsistent.full_norm());
    inconsistent.scale(Complex64::new(-1.0, 0.0));
    let e1 = projection_error_with(system, &inconsistent).unwrap();
    assert!((e1 - e0).abs() <= 1e-10 * e0, "{e0} vs {e1}");
}
