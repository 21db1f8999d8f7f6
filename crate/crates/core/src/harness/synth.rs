//! Deterministic synthetic probe signals.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SignalBuffer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    /// Stationary tone with `harmonics` partials of `f0` (amplitude `1/h`).
    HarmonicTone { f0: f64, harmonics: usize },
    /// Hann-tapered sinusoid bursts, frequency rising geometrically.
    SineBursts { bursts: usize, f_lo: f64, f_hi: f64 },
    /// Unit impulses every `period` samples.
    PulseTrain { period: usize },
    /// Gliding harmonic "syllables" with formant envelopes, noise bursts and
    /// pauses.
    SpeechLike,
}

impl SynthKind {
    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::HarmonicTone { .. } => "harmonic",
            SynthKind::SineBursts { .. } => "bursts",
            SynthKind::PulseTrain { .. } => "pulses",
            SynthKind::SpeechLike => "speech",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    /// Kind names with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "harmonic" | "harmonictone" | "tone" => Ok(SynthKind::HarmonicTone {
                f0: 220.0,
                harmonics: 10,
            }),
            "bursts" | "sinebursts" => Ok(SynthKind::SineBursts {
                bursts: 8,
                f_lo: 200.0,
                f_hi: 4000.0,
            }),
            "pulses" | "pulsetrain" => Ok(SynthKind::PulseTrain { period: 512 }),
            "speech" | "speechlike" => Ok(SynthKind::SpeechLike),
            _ => Err(Error::arg(format!("unknown synthetic signal kind '{s}'"))),
        }
    }
}

fn normalize_peak(mut s: Vec<f64>) -> Vec<f64> {
    let peak = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        for x in &mut s {
            *x /= peak;
        }
    }
    s
}

/// Generates a unit-peak signal of `len` samples at `rate`.
pub fn synth_signal(kind: &SynthKind, len: usize, rate: u32, seed: u64) -> Result<SignalBuffer> {
    if len == 0 || rate == 0 {
        return Err(Error::arg("length and sample rate must be positive"));
    }
    let nyquist = rate as f64 / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match *kind {
        SynthKind::HarmonicTone { f0, harmonics } => {
            if !(f0 > 0.0) || harmonics == 0 {
                return Err(Error::arg("tone needs f0 > 0 and at least one harmonic"));
            }
            // Whole number of periods over the circular signal.
            let bins = (f0 * len as f64 / rate as f64).round().max(1.0) as usize;
            if bins * harmonics * 2 >= len {
                return Err(Error::arg(format!(
                    "harmonic {harmonics} of {f0} Hz is above the Nyquist frequency {nyquist} Hz"
                )));
            }
            let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(-PI..PI)).collect();
            (0..len)
                .map(|l| {
                    phases
                        .iter()
                        .enumerate()
                        .map(|(h, ph)| {
                            let k = (h + 1) * bins;
                            let arg = TAU * ((k * l) % len) as f64 / len as f64;
                            (arg + ph).sin() / (h + 1) as f64
                        })
                        .sum()
                })
                .collect()
        }
        SynthKind::SineBursts { bursts, f_lo, f_hi } => {
            if bursts == 0 || !(f_lo > 0.0) || f_hi < f_lo {
                return Err(Error::arg("bursts need a count and 0 < f_lo <= f_hi"));
            }
            if f_hi >= nyquist {
                return Err(Error::arg(format!(
                    "burst frequency {f_hi} Hz is above the Nyquist frequency {nyquist} Hz"
                )));
            }
            let slot = len / bursts;
            let width = slot * 3 / 5;
            if width < 2 {
                return Err(Error::arg("signal too short for that many bursts"));
            }
            let mut s = vec![0.0; len];
            for b in 0..bursts {
                let f = if bursts == 1 {
                    f_lo
                } else {
                    f_lo * (f_hi / f_lo).powf(b as f64 / (bursts - 1) as f64)
                };
                let start = b * slot + (slot - width) / 2;
                for i in 0..width {
                    let env = (PI * (i as f64 + 0.5) / width as f64).sin().powi(2);
                    s[start + i] = env * (TAU * f * i as f64 / rate as f64).sin();
                }
            }
            s
        }
        SynthKind::PulseTrain { period } => {
            if period == 0 {
                return Err(Error::arg("pulse period must be positive"));
            }
            let mut s = vec![0.0; len];
            for x in s.iter_mut().step_by(period) {
                *x = 1.0;
            }
            s
        }
        SynthKind::SpeechLike => speech_like(len, rate, &mut rng),
    };
    SignalBuffer::new(normalize_peak(samples), rate)
}

fn speech_like(len: usize, rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fs = rate as f64;
    let nyquist = fs / 2.0;
    let mut out = vec![0.0; len];
    let mut t = 0usize;
    while t < len {
        let kind: f64 = rng.random_range(0.0..1.0);
        let (lo, hi) = if kind < 0.2 { (0.03, 0.12) } else { (0.06, 0.25) };
        let dur = ((rng.random_range(lo..hi) * fs) as usize).max(16).min(len - t);
        if kind < 0.2 {
            // pause
        } else if kind < 0.4 {
            // Fricative: differenced noise under a smooth envelope.
            let gain = rng.random_range(0.1..0.35);
            let mut prev = 0.0;
            for i in 0..dur {
                let w: f64 = rng.random_range(-1.0..1.0);
                let env = (PI * (i as f64 + 0.5) / dur as f64).sin().powi(2);
                out[t + i] += gain * env * (w - 0.7 * prev);
                prev = w;
            }
        } else {
            let f_start: f64 = rng.random_range(90.0..230.0);
            let f_end = f_start * rng.random_range(0.8..1.25);
            let vib_rate = rng.random_range(3.0..7.0);
            let vib_depth = rng.random_range(0.0..0.03);
            let am_rate = rng.random_range(2.0..6.0);
            let formants = [
                (rng.random_range(300.0..850.0), rng.random_range(60.0..120.0)),
                (rng.random_range(900.0..2300.0), rng.random_range(80.0..160.0)),
                (rng.random_range(2300.0..3200.0), rng.random_range(120.0..220.0)),
            ];
            let f_max = f_start.max(f_end) * (1.0 + vib_depth);
            let harmonics = ((4500.0f64.min(nyquist * 0.9)) / f_max).floor() as usize;
            let amps: Vec<f64> = (1..=harmonics)
                .map(|k| {
                    // Amplitudes follow the formants at the mean pitch.
                    let f = k as f64 * 0.5 * (f_start + f_end);
                    let env: f64 = formants
                        .iter()
                        .map(|&(c, bw)| (-((f - c) / bw).powi(2)).exp())
                        .sum();
                    (0.05 + env) / (k as f64).sqrt()
                })
                .collect();
            let mut phase: Vec<f64> = (0..harmonics).map(|_| rng.random_range(-PI..PI)).collect();
            let gain = rng.random_range(0.5..1.0);
            for i in 0..dur {
                let x = i as f64 / dur as f64;
                let ts = i as f64 / fs;
                let f0 = (f_start + (f_end - f_start) * x)
                    * (1.0 + vib_depth * (TAU * vib_rate * ts).sin());
                let env = (PI * (i as f64 + 0.5) / dur as f64).sin().powf(1.5)
                    * (1.0 + 0.3 * (TAU * am_rate * ts).sin());
                let mut v = 0.0;
                for (k, (ph, a)) in phase.iter_mut().zip(&amps).enumerate() {
                    *ph += TAU * (k + 1) as f64 * f0 / fs;
                    v += a * ph.sin();
                }
                out[t + i] += gain * env * v;
            }
        }
        t += dur;
    }
    out
}
