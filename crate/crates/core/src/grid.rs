//! Signals and the time-frequency lattice they are analysed on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite real signal, indexed modulo its length.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SignalBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::arg("signal must have at least one sample"));
        }
        if sample_rate == 0 {
            return Err(Error::arg("sample rate must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Sample at `index` taken modulo the signal length.
    pub fn at(&self, index: i64) -> f64 {
        self.samples[index.rem_euclid(self.samples.len() as i64) as usize]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    /// Drops `count` samples from both ends.
    pub fn trimmed(&self, count: usize) -> Result<Self> {
        if 2 * count >= self.len() {
            return Err(Error::dim(format!(
                "cannot trim {count} samples from each end of a length-{} signal",
                self.len()
            )));
        }
        Self::new(
            self.samples[count..self.len() - count].to_vec(),
            self.sample_rate,
        )
    }
}

/// Transform lattice: hop `a`, `M` channels, signal length `L`.
///
/// The redundancy `D = M / a` is kept integral so the frame operator stays
/// block-circulant (see [`crate::dual`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StftGrid {
    hop: usize,
    channels: usize,
    len: usize,
}

impl StftGrid {
    pub fn new(hop: usize, channels: usize, len: usize) -> Result<Self> {
        if hop == 0 || channels == 0 || len == 0 {
            return Err(Error::InvalidGrid(format!(
                "a = {hop}, M = {channels}, L = {len} must all be positive"
            )));
        }
        if !len.is_multiple_of(hop) || !len.is_multiple_of(channels) {
            return Err(Error::InvalidGrid(format!(
                "a = {hop} and M = {channels} must both divide L = {len}"
            )));
        }
        if !channels.is_multiple_of(hop) {
            return Err(Error::InvalidGrid(format!(
                "redundancy M/a = {channels}/{hop} must be an integer >= 1"
            )));
        }
        Ok(Self {
            hop,
            channels,
            len,
        })
    }

    /// Time step `a` in samples.
    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Number of frequency channels `M`.
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Signal length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of time frames `N = L / a`.
    pub fn frames(&self) -> usize {
        self.len / self.hop
    }

    /// Redundancy `D = M / a`.
    pub fn redundancy(&self) -> usize {
        self.channels / self.hop
    }

    /// Stored channels for real signals, `floor(M/2) + 1`.
    pub fn half_channels(&self) -> usize {
        self.channels / 2 + 1
    }

    /// Number of coefficients in half-spectrum storage.
    pub fn half_size(&self) -> usize {
        self.half_channels() * self.frames()
    }

    /// Weight of channel `m` when the half spectrum stands in for the full one:
    /// 1 for self-conjugate channels (DC, and Nyquist for even `M`), 2 otherwise.
    pub fn channel_weight(&self, m: usize) -> f64 {
        if m == 0 || (self.channels.is_multiple_of(2) && m == self.channels / 2) {
            1.0
        } else {
            2.0
        }
    }

    pub fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len {
            return Err(Error::dim(format!(
                "{what} has length {len}, grid expects L = {}",
                self.len
            )));
        }
        Ok(())
    }
}
