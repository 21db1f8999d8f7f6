//! WAV input and output, with resampling on ingestion.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::sweep::Corpus;
use crate::error::{Error, Result};
use crate::grid::SignalBuffer;

pub const DEFAULT_RATE: u32 = 22050;
pub const DEFAULT_LENGTH: usize = 122_880;

pub const RESAMPLER_TAPS: usize = 64;
const KAISER_BETA: f64 = 8.6;
/// Passband edge as a fraction of the lower Nyquist frequency.
const CUTOFF: f64 = 0.9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    #[default]
    Pcm16,
    Float32,
}

impl FromStr for WavFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm16" => Ok(WavFormat::Pcm16),
            "float32" => Ok(WavFormat::Float32),
            _ => Err(Error::arg(format!("WAV format must be pcm16 or float32, got '{s}'"))),
        }
    }
}

fn data_err(path: &Path, reason: impl ToString) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Channel 0 of a PCM16 or float32 file, as floats, with its sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = WavReader::open(path).map_err(|e| data_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| data_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| data_err(path, e))?,
        (fmt, bits) => {
            return Err(data_err(
                path,
                format!("unsupported encoding {fmt:?} {bits}-bit, expected PCM16 or float32"),
            ));
        }
    };
    if samples.is_empty() {
        return Err(data_err(path, "file has no samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(data_err(path, "non-finite sample"));
    }
    Ok((samples, spec.sample_rate))
}

pub fn write_wav(path: &Path, signal: &SignalBuffer, format: WavFormat) -> Result<()> {
    let (bits, sample_format) = match format {
        WavFormat::Pcm16 => (16, SampleFormat::Int),
        WavFormat::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| data_err(path, e))?;
    for &x in signal.samples() {
        let r = match format {
            WavFormat::Pcm16 => {
                writer.write_sample((x * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
            }
            WavFormat::Float32 => writer.write_sample(x as f32),
        };
        r.map_err(|e| data_err(path, e))?;
    }
    writer.finalize().map_err(|e| data_err(path, e))
}

/// Modified Bessel function of the first kind, order 0.
fn bessel_i0(x: f64) -> f64 {
    let (mut sum, mut term) = (1.0, 1.0);
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Kaiser-windowed sinc interpolation onto a new rate. Each output sample
/// uses the 64 input samples around its position, with taps normalized to
/// unit sum.
pub fn resample(input: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if from == 0 || to == 0 {
        return Err(Error::arg("sample rates must be positive"));
    }
    if from == to {
        return Ok(input.to_vec());
    }
    let ratio = from as f64 / to as f64;
    // Cutoff in cycles per input sample.
    let fc = CUTOFF * 0.5 * (to as f64 / from as f64).min(1.0);
    let half = (RESAMPLER_TAPS / 2) as i64;
    let norm = bessel_i0(KAISER_BETA);
    let out_len = ((input.len() as u128 * to as u128).div_ceil(from as u128)) as usize;
    let mut taps = vec![0.0; RESAMPLER_TAPS];
    Ok((0..out_len)
        .map(|j| {
            let x = j as f64 * ratio;
            let base = x.floor() as i64;
            let mut sum = 0.0;
            for (i, t) in taps.iter_mut().enumerate() {
                let k = base - half + 1 + i as i64;
                let d = x - k as f64;
                let r = d / half as f64;
                let w = if r.abs() < 1.0 {
                    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
                } else {
                    0.0
                };
                *t = w * sinc(2.0 * fc * d);
                sum += *t;
            }
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let k = base - half + 1 + i as i64;
                if k >= 0 && (k as usize) < input.len() {
                    acc += t * input[k as usize];
                }
            }
            acc / sum
        })
        .collect())
}

/// Reads channel 0, resamples to `rate` and cuts or zero-pads to `len`.
pub fn ingest_wav(path: &Path, rate: u32, len: usize) -> Result<SignalBuffer> {
    if len == 0 {
        return Err(Error::arg("target length must be positive"));
    }
    let (samples, from) = read_wav(path)?;
    let mut out = resample(&samples, from, rate)?;
    out.resize(len, 0.0);
    SignalBuffer::new(out, rate)
}

/// Every `.wav` file in `dir`, sorted by file name; ids are file stems.
pub fn load_corpus(dir: &Path, rate: u32, len: usize) -> Result<Corpus> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| data_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(data_err(dir, "no .wav files found"));
    }
    let signals = paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, ingest_wav(p, rate, len)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(signals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(2.0) - 2.279_585_302_336_067).abs() < 1e-14);
    }

    #[test]
    fn constant_is_preserved() {
        let x = vec![0.5; 400];
        let y = resample(&x, 44100, 22050).unwrap();
        assert_eq!(y.len(), 200);
        for v in &y[20..180] {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn same_rate_is_identity() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert_eq!(resample(&x, 8000, 8000).unwrap(), x);
    }
}
