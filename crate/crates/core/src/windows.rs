//! Analysis windows and the time-frequency ratio λ.
//!
//! A window of length `L` is stored circularly: index 0 is the centre and
//! negative offsets live at the end of the vector.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StftGrid;

/// Largest periodization index `|k|` we are willing to sum.
pub const MAX_PERIODIZATION_TERMS: usize = 100;

/// `ln(1e16)`: a Gaussian term below `exp(-this)` of the peak is dropped.
const TAIL_LOG: f64 = 36.841_361_487_904_734;

/// Taps with magnitude at or below this fraction of the peak count as zero
/// when a window's effective support is computed.
pub const SUPPORT_THRESHOLD: f64 = 1e-18;

const MIN_NAMED_SUPPORT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFamily {
    Gaussian,
    Hann,
    Blackman,
    Bartlett,
    Custom,
}

impl WindowFamily {
    pub const NAMED: [WindowFamily; 3] = [
        WindowFamily::Hann,
        WindowFamily::Blackman,
        WindowFamily::Bartlett,
    ];

    pub const ALL: [WindowFamily; 4] = [
        WindowFamily::Gaussian,
        WindowFamily::Hann,
        WindowFamily::Blackman,
        WindowFamily::Bartlett,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowFamily::Gaussian => "gaussian",
            WindowFamily::Hann => "hann",
            WindowFamily::Blackman => "blackman",
            WindowFamily::Bartlett => "bartlett",
            WindowFamily::Custom => "custom",
        }
    }
}

impl fmt::Display for WindowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" => Ok(WindowFamily::Gaussian),
            "hann" | "hanning" => Ok(WindowFamily::Hann),
            "blackman" => Ok(WindowFamily::Blackman),
            "bartlett" | "triangle" => Ok(WindowFamily::Bartlett),
            _ => Err(Error::arg(format!("unknown window family '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowRole {
    Analysis,
    SynthesisDual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaSource {
    Given,
    FittedFromWindow,
    FromGrid,
}

/// Time-frequency ratio λ, in the units of `aM / ξ_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSpec {
    pub value: f64,
    pub source: LambdaSource,
}

impl LambdaSpec {
    pub fn given(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::arg(format!("λ must be positive and finite, got {value}")));
        }
        Ok(Self {
            value,
            source: LambdaSource::Given,
        })
    }
}

/// Circular arc `[start, start + len)` outside of which a window is negligible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Support {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowVec {
    taps: Vec<f64>,
    family: WindowFamily,
    fitted_lambda: Option<f64>,
    role: WindowRole,
    clamped: bool,
}

impl WindowVec {
    pub fn new(taps: Vec<f64>, family: WindowFamily, role: WindowRole) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::arg("window must have at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("window taps"));
        }
        if taps.iter().all(|&t| t == 0.0) {
            return Err(Error::arg("window taps are all zero"));
        }
        Ok(Self {
            taps,
            family,
            fitted_lambda: None,
            role,
            clamped: false,
        })
    }

    pub fn custom(taps: Vec<f64>) -> Result<Self> {
        Self::new(taps, WindowFamily::Custom, WindowRole::Analysis)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.fitted_lambda = Some(lambda);
        self
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn family(&self) -> WindowFamily {
        self.family
    }

    pub fn role(&self) -> WindowRole {
        self.role
    }

    pub fn fitted_lambda(&self) -> Option<f64> {
        self.fitted_lambda
    }

    /// Set when a support search hit its lower bound.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn peak(&self) -> f64 {
        self.taps.iter().fold(0.0f64, |m, t| m.max(t.abs()))
    }

    /// Copy scaled so the largest magnitude tap is exactly 1.
    pub fn peak_normalized(&self) -> Self {
        let peak = self.peak();
        let mut out = self.clone();
        for t in &mut out.taps {
            *t /= peak;
        }
        out
    }

    /// Number of nonzero taps.
    pub fn nonzero_taps(&self) -> usize {
        self.taps.iter().filter(|&&t| t != 0.0).count()
    }

    /// Smallest circular arc that holds every tap above
    /// [`SUPPORT_THRESHOLD`] times the peak.
    pub fn support(&self) -> Support {
        let len = self.taps.len();
        let thr = SUPPORT_THRESHOLD * self.peak();
        let small: Vec<bool> = self.taps.iter().map(|t| t.abs() <= thr).collect();
        let Some(first_big) = small.iter().position(|s| !s) else {
            return Support { start: 0, len };
        };
        // Longest run of negligible taps, walking once around the circle
        // starting just after a significant tap.
        let (mut best_start, mut best_run) = (0, 0);
        let mut run_start = 0;
        let mut run = 0;
        for step in 1..=len {
            let i = (first_big + step) % len;
            if small[i] {
                if run == 0 {
                    run_start = i;
                }
                run += 1;
                if run > best_run {
                    best_run = run;
                    best_start = run_start;
                }
            } else {
                run = 0;
            }
        }
        if best_run == 0 {
            return Support { start: 0, len };
        }
        Support {
            start: (best_start + best_run) % len,
            len: len - best_run,
        }
    }

    /// Taps of [`Self::support`] in order, starting at `support.start`.
    pub fn compact_taps(&self, support: Support) -> Vec<f64> {
        let len = self.taps.len();
        (0..support.len)
            .map(|i| self.taps[(support.start + i) % len])
            .collect()
    }
}

/// Number of periodization terms `K` such that every dropped term of the sum
/// stays below `1e-16` of the central peak.
pub fn periodization_terms(c: f64, len: usize) -> usize {
    let dmax = (c * TAIL_LOG / PI).sqrt();
    // Term k >= 1 comes closest to the frame at distance (k - 1) L + 1.
    if dmax < 1.0 {
        0
    } else {
        ((dmax - 1.0) / len as f64).floor() as usize + 1
    }
}

/// Periodized Gaussian `Σ_k exp(-π (l - kL)² / c)` with `c = ξ_s λ`, summed
/// over `|k| <= terms`. Exactly symmetric.
fn gaussian_direct(c: f64, len: usize, terms: usize) -> Vec<f64> {
    let mut g = vec![0.0; len];
    let lf = len as f64;
    // exp underflows to zero once the exponent passes ~745.
    let reach = (745.5 * c / PI).sqrt();
    let k = terms as i64;
    for (l, slot) in g.iter_mut().enumerate().take(len / 2 + 1) {
        let mut acc = 0.0;
        // Largest terms last keeps the sum accurate.
        for kk in (1..=k).rev() {
            for d in [l as f64 - kk as f64 * lf, l as f64 + kk as f64 * lf] {
                if d.abs() <= reach {
                    acc += (-PI * d * d / c).exp();
                }
            }
        }
        let d = l as f64;
        if d <= reach {
            acc += (-PI * d * d / c).exp();
        }
        *slot = acc;
    }
    for l in 1..len.div_ceil(2) {
        g[len - l] = g[l];
    }
    g
}

/// The same sum through Poisson summation, which converges fast when the
/// Gaussian is much wider than `L`.
fn gaussian_dual_sum(c: f64, len: usize) -> Vec<f64> {
    let lf = len as f64;
    let qmax = ((lf * lf * TAIL_LOG / (PI * c)).sqrt()).ceil() as usize + 1;
    let scale = c.sqrt() / lf;
    let weights: Vec<f64> = (1..=qmax)
        .map(|q| 2.0 * (-PI * c * (q * q) as f64 / (lf * lf)).exp())
        .collect();
    let mut g = vec![0.0; len];
    for (l, slot) in g.iter_mut().enumerate().take(len / 2 + 1) {
        let mut acc = 0.0;
        for (q, w) in weights.iter().enumerate().rev() {
            acc += w * (2.0 * PI * (q + 1) as f64 * l as f64 / lf).cos();
        }
        *slot = scale * (1.0 + acc);
    }
    for l in 1..len.div_ceil(2) {
        g[len - l] = g[l];
    }
    g
}

/// Peak-normalized periodized Gaussian, with no limit on its width.
fn gaussian_normalized(c: f64, len: usize) -> Vec<f64> {
    let terms = periodization_terms(c, len);
    let lf = len as f64;
    let poisson_terms = (lf * lf * TAIL_LOG / (PI * c)).sqrt();
    let mut g = if (terms as f64) <= poisson_terms || terms <= MAX_PERIODIZATION_TERMS {
        gaussian_direct(c, len, terms)
    } else {
        gaussian_dual_sum(c, len)
    };
    let peak = g[0];
    for v in &mut g {
        *v /= peak;
    }
    g
}

/// Periodized Gaussian `g_λ` of length `len` at sample rate `rate`.
pub fn periodized_gaussian(lambda: f64, len: usize, rate: u32) -> Result<WindowVec> {
    LambdaSpec::given(lambda)?;
    if len == 0 {
        return Err(Error::arg("window length must be positive"));
    }
    let c = rate as f64 * lambda;
    let terms = periodization_terms(c, len);
    if terms > MAX_PERIODIZATION_TERMS {
        return Err(Error::PeriodizationTooWide {
            required: terms,
            limit: MAX_PERIODIZATION_TERMS,
        });
    }
    let taps = gaussian_direct(c, len, terms);
    Ok(WindowVec::new(taps, WindowFamily::Gaussian, WindowRole::Analysis)?.with_lambda(lambda))
}

/// The λ at which a Gaussian is matched to the lattice, `aM / ξ_s`.
pub fn grid_matched_lambda(grid: &StftGrid, rate: u32) -> LambdaSpec {
    LambdaSpec {
        value: (grid.hop() * grid.channels()) as f64 / rate as f64,
        source: LambdaSource::FromGrid,
    }
}

fn named_tap(family: WindowFamily, support: usize, offset: i64) -> f64 {
    let n = support as f64;
    let x = 2.0 * PI * offset as f64 / n;
    match family {
        WindowFamily::Hann => 0.5 + 0.5 * x.cos(),
        WindowFamily::Blackman => 0.42 + 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
        WindowFamily::Bartlett => {
            let half = (support / 2) as f64;
            if half == 0.0 {
                1.0
            } else {
                (1.0 - offset.unsigned_abs() as f64 / half).max(0.0)
            }
        }
        WindowFamily::Gaussian | WindowFamily::Custom => unreachable!("not a named family"),
    }
}

/// Offsets covered by a named window of the given support, `[-⌊N/2⌋, ⌈N/2⌉ - 1]`.
fn named_offsets(support: usize) -> std::ops::RangeInclusive<i64> {
    let lo = -((support / 2) as i64);
    let hi = support.div_ceil(2) as i64 - 1;
    lo..=hi
}

/// Periodic (DFT-even) Hann, Blackman or Bartlett window of `support` taps,
/// centred at index 0 of a length-`len` vector and peak-normalized.
pub fn named_window(family: WindowFamily, support: usize, len: usize) -> Result<WindowVec> {
    if !WindowFamily::NAMED.contains(&family) {
        return Err(Error::arg(format!("{family} is not a named window family")));
    }
    if support == 0 {
        return Err(Error::arg("window support must be positive"));
    }
    if support > len {
        return Err(Error::arg(format!(
            "window support {support} exceeds signal length {len}"
        )));
    }
    let mut taps = vec![0.0; len];
    for j in named_offsets(support) {
        taps[j.rem_euclid(len as i64) as usize] = named_tap(family, support, j);
    }
    let peak = taps[0];
    for t in &mut taps {
        *t /= peak;
    }
    WindowVec::new(taps, family, WindowRole::Analysis)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// λ minimizing `‖g - g_λ‖` for a peak-normalized `g`, searched on log-λ
/// over `[1e-6, 1e6]`.
pub fn fit_lambda(window: &WindowVec, rate: u32) -> Result<LambdaSpec> {
    if window.nonzero_taps() <= 1 {
        return Err(Error::DegenerateWindow);
    }
    let g = window.peak_normalized();
    let len = g.len();
    let rate = rate as f64;
    let objective = |u: f64| distance(g.taps(), &gaussian_normalized(rate * u.exp(), len));

    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    // Coarse scan first: both tails of the objective are flat, which would
    // mislead a bare golden-section search.
    const COARSE: usize = 97;
    let step = (hi - lo) / (COARSE - 1) as f64;
    let mut best = (f64::INFINITY, 0);
    for i in 0..COARSE {
        let v = objective(lo + step * i as f64);
        if v < best.0 {
            best = (v, i);
        }
    }
    let mut a = lo + step * best.1.saturating_sub(1) as f64;
    let mut b = (lo + step * (best.1 + 1) as f64).min(hi);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    // Relative tolerance 1e-6 on λ is an absolute 1e-6 on ln λ.
    while b - a > 1e-6 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    Ok(LambdaSpec {
        value: (0.5 * (a + b)).exp(),
        source: LambdaSource::FittedFromWindow,
    })
}

/// Window of the given family closest to `g_λ`. Gaussians are returned as is;
/// named families get the support minimizing `‖g - g_λ‖`.
pub fn window_for_lambda(
    family: WindowFamily,
    lambda: f64,
    rate: u32,
    len: usize,
) -> Result<WindowVec> {
    LambdaSpec::given(lambda)?;
    match family {
        WindowFamily::Gaussian => return periodized_gaussian(lambda, len, rate),
        WindowFamily::Custom => {
            return Err(Error::arg("a custom window cannot be built from λ"));
        }
        _ => {}
    }
    if len < MIN_NAMED_SUPPORT {
        return Err(Error::arg(format!(
            "signal length {len} is below the minimum window support {MIN_NAMED_SUPPORT}"
        )));
    }
    let target = gaussian_normalized(rate as f64 * lambda, len);
    let total: f64 = target.iter().map(|t| t * t).sum();
    let objective = |support: usize| -> f64 {
        let mut inside = 0.0;
        let mut covered = 0.0;
        for j in named_offsets(support) {
            let t = target[j.rem_euclid(len as i64) as usize];
            let w = named_tap(family, support, j);
            inside += (w - t) * (w - t);
            covered += t * t;
        }
        (inside + (total - covered).max(0.0)).sqrt()
    };

    let (mut lo, mut hi) = (MIN_NAMED_SUPPORT, len);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut best = (f64::INFINITY, lo);
    let scan_lo = lo.saturating_sub(2).max(MIN_NAMED_SUPPORT);
    let scan_hi = (hi + 2).min(len);
    for support in scan_lo..=scan_hi {
        let v = objective(support);
        if v < best.0 {
            best = (v, support);
        }
    }
    let support = best.1;
    if support == len && len > MIN_NAMED_SUPPORT {
        return Err(Error::SupportTooLarge { lambda, len });
    }
    let mut w = named_window(family, support, len)?.with_lambda(lambda);
    w.clamped = support == MIN_NAMED_SUPPORT;
    Ok(w)
}
