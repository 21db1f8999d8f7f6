//! λ × D × window sweeps over a corpus.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SignalBuffer, StftGrid};
use crate::metrics::{snr_ms, SnrMsConfig};
use crate::phase::{self, FglaConfig, PghiConfig};
use crate::stft::{ComplexStft, Gabor, MagnitudeStft};
use crate::windows::{window_for_lambda, WindowFamily};

/// Bounds of the λ axis accepted by sweeps.
pub const LAMBDA_RANGE: (f64, f64) = (1e-3, 1e4);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum AlgoSpec {
    Pghi,
    Fgla { iterations: usize },
    Spsi,
    ZeroPhase,
    PhaseNoise { sigma: f64 },
}

impl AlgoSpec {
    pub fn iterations(&self) -> usize {
        match self {
            AlgoSpec::Fgla { iterations } => *iterations,
            AlgoSpec::Pghi | AlgoSpec::Spsi => 1,
            AlgoSpec::ZeroPhase | AlgoSpec::PhaseNoise { .. } => 0,
        }
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoSpec::Pghi => f.write_str("pghi"),
            AlgoSpec::Fgla { .. } => f.write_str("fgla"),
            AlgoSpec::Spsi => f.write_str("spsi"),
            AlgoSpec::ZeroPhase => f.write_str("zerophase"),
            AlgoSpec::PhaseNoise { sigma } => write!(f, "noise:{sigma}"),
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = Error;

    /// `pghi`, `fgla`, `fgla:<iterations>`, `spsi`, `zero`, `noise:<σ>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = || Error::arg(format!("cannot parse algorithm '{s}'"));
        match (name.to_ascii_lowercase().as_str(), arg) {
            ("pghi", None) => Ok(AlgoSpec::Pghi),
            ("spsi", None) => Ok(AlgoSpec::Spsi),
            ("zero" | "zerophase", None) => Ok(AlgoSpec::ZeroPhase),
            ("fgla", None) => Ok(AlgoSpec::Fgla { iterations: 100 }),
            ("fgla", Some(n)) => Ok(AlgoSpec::Fgla {
                iterations: n.parse().map_err(|_| bad())?,
            }),
            ("noise", Some(x)) => Ok(AlgoSpec::PhaseNoise {
                sigma: x.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrimPolicy {
    /// Drop `M` samples at both ends before measuring.
    #[default]
    On,
    Off,
}

impl FromStr for TrimPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" | "true" | "yes" => Ok(TrimPolicy::On),
            "off" | "false" | "no" => Ok(TrimPolicy::Off),
            _ => Err(Error::arg(format!("trim must be on or off, got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub algorithms: Vec<AlgoSpec>,
    pub lambdas: Vec<f64>,
    pub redundancies: Vec<usize>,
    pub windows: Vec<WindowFamily>,
    pub seed: u64,
    pub trim: TrimPolicy,
    pub threads: usize,
    pub fgla_alpha: f64,
    /// Record per-cell wall time. Off gives byte-reproducible output.
    pub timing: bool,
    pub snr: SnrMsConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            algorithms: vec![AlgoSpec::Pghi],
            lambdas: vec![SnrMsConfig::default().lambda(22050)],
            redundancies: vec![8],
            windows: vec![WindowFamily::Gaussian],
            seed: 0,
            trim: TrimPolicy::On,
            threads: 1,
            fgla_alpha: 0.99,
            timing: true,
            snr: SnrMsConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty()
            || self.lambdas.is_empty()
            || self.redundancies.is_empty()
            || self.windows.is_empty()
        {
            return Err(Error::arg("sweep lists must be non-empty"));
        }
        for &l in &self.lambdas {
            if !(LAMBDA_RANGE.0..=LAMBDA_RANGE.1).contains(&l) {
                return Err(Error::arg(format!(
                    "λ = {l} outside the sweep range [{}, {}]",
                    LAMBDA_RANGE.0, LAMBDA_RANGE.1
                )));
            }
        }
        if self.redundancies.contains(&0) {
            return Err(Error::arg("redundancy must be at least 1"));
        }
        if self.windows.contains(&WindowFamily::Custom) {
            return Err(Error::arg("sweeps need a named or Gaussian window family"));
        }
        for a in &self.algorithms {
            match *a {
                AlgoSpec::Fgla { iterations: 0 } => {
                    return Err(Error::arg("FGLA needs at least one iteration"));
                }
                AlgoSpec::PhaseNoise { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                    return Err(Error::arg(format!("σ must be non-negative, got {sigma}")));
                }
                _ => {}
            }
        }
        if self.threads == 0 {
            return Err(Error::arg("thread count must be at least 1"));
        }
        Ok(())
    }
}

/// Named signals of a common length and sample rate.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub signals: Vec<(String, SignalBuffer)>,
}

impl Corpus {
    pub fn new(signals: Vec<(String, SignalBuffer)>) -> Result<Self> {
        let Some((_, first)) = signals.first() else {
            return Err(Error::arg("corpus is empty"));
        };
        let (len, rate) = (first.len(), first.sample_rate());
        for (id, s) in &signals {
            if s.len() != len || s.sample_rate() != rate {
                return Err(Error::dim(format!(
                    "signal {id} has length {} at {} Hz, corpus uses {len} at {rate} Hz",
                    s.len(),
                    s.sample_rate()
                )));
            }
        }
        Ok(Self { signals })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.signals[0].1.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.signals[0].1.sample_rate()
    }
}

/// One output row: a cell evaluated on one signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub window: WindowFamily,
    pub lambda_requested: f64,
    pub lambda_realized: f64,
    #[serde(rename = "D")]
    pub redundancy: usize,
    pub a: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub signal_id: String,
    pub snr_ms_db: f64,
    pub projection_error: f64,
    pub wall_time_s: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub odg: Option<f64>,
    pub error: Option<String>,
}

pub const CSV_HEADER: [&str; 15] = [
    "algorithm",
    "window",
    "lambda_requested",
    "lambda_realized",
    "D",
    "a",
    "M",
    "signal_id",
    "snr_ms_db",
    "projection_error",
    "wall_time_s",
    "iterations",
    "seed",
    "odg",
    "error",
];

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.algorithm.clone(),
            self.window.to_string(),
            self.lambda_requested.to_string(),
            self.lambda_realized.to_string(),
            self.redundancy.to_string(),
            self.a.to_string(),
            self.m.to_string(),
            self.signal_id.clone(),
            self.snr_ms_db.to_string(),
            self.projection_error.to_string(),
            opt(self.wall_time_s),
            self.iterations.to_string(),
            self.seed.to_string(),
            opt(self.odg),
            self.error.clone().unwrap_or_default(),
        ]
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Lattice for a requested (λ, D): `M` is the divisor of `L` that is a
/// multiple of `D`, lies in `[max(D, 4), L/4]` and is closest to
/// `sqrt(λ ξ_s D)` on a log scale; `a = M / D`.
pub fn realize_grid(lambda: f64, redundancy: usize, len: usize, rate: u32) -> Result<StftGrid> {
    if redundancy == 0 || !(lambda > 0.0) {
        return Err(Error::arg("λ and D must be positive"));
    }
    let target = (lambda * rate as f64 * redundancy as f64).sqrt();
    let lo = redundancy.max(4);
    let hi = len / 4;
    let best = (lo..=hi)
        .filter(|m| m % redundancy == 0 && len.is_multiple_of(*m))
        .min_by(|x, y| {
            let dx = ((*x as f64) / target).ln().abs();
            let dy = ((*y as f64) / target).ln().abs();
            dx.total_cmp(&dy).then(x.cmp(y))
        })
        .ok_or_else(|| {
            Error::InvalidGrid(format!(
                "no channel count in [{lo}, {hi}] divides L = {len} with D = {redundancy}"
            ))
        })?;
    let grid = StftGrid::new(best / redundancy, best, len)?;
    let realized = (grid.hop() * grid.channels()) as f64 / rate as f64;
    if !(0.5..=2.0).contains(&(realized / lambda)) {
        return Err(Error::InvalidGrid(format!(
            "λ = {lambda} at D = {redundancy} is not realizable for L = {len}: closest is {realized:.4}"
        )));
    }
    Ok(grid)
}

/// Seed for one cell, independent of evaluation order.
pub fn cell_seed(master: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in master.to_le_bytes().iter().chain(id.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Analysis system for a (window, λ, D) cell on a corpus geometry.
#[derive(Clone, Debug)]
pub struct CellSystem {
    pub system: Arc<Gabor>,
    pub lambda_requested: f64,
    pub lambda_realized: f64,
}

pub fn cell_system(
    family: WindowFamily,
    lambda: f64,
    redundancy: usize,
    len: usize,
    rate: u32,
) -> Result<CellSystem> {
    let grid = realize_grid(lambda, redundancy, len, rate)?;
    let realized = (grid.hop() * grid.channels()) as f64 / rate as f64;
    let window = window_for_lambda(family, realized, rate, len)?;
    Ok(CellSystem {
        system: Arc::new(Gabor::new(grid, window, rate)?),
        lambda_requested: lambda,
        lambda_realized: realized,
    })
}

/// Reconstruction and the coefficients it was synthesized from.
pub struct Estimate {
    pub signal: SignalBuffer,
    pub coeffs: ComplexStft,
    pub iterations: usize,
    pub wall_time: f64,
}

/// Runs one algorithm on magnitudes (or, for phase noise, on the complex
/// coefficients).
pub fn estimate(
    algo: &AlgoSpec,
    cell: &CellSystem,
    coeffs: &ComplexStft,
    mags: &MagnitudeStft,
    seed: u64,
    alpha: f64,
) -> Result<Estimate> {
    let system = &cell.system;
    let start = Instant::now();
    let (result_coeffs, signal, iterations) = match *algo {
        AlgoSpec::PhaseNoise { sigma } => {
            let noisy = phase::distort_phase(coeffs, sigma, seed)?;
            let s = system.synthesize(&noisy)?;
            (noisy, s, 0)
        }
        _ => {
            let r = match *algo {
                AlgoSpec::Pghi => phase::pghi(
                    mags,
                    system,
                    cell.lambda_realized,
                    &PghiConfig {
                        seed,
                        ..Default::default()
                    },
                )?,
                AlgoSpec::Fgla { iterations } => phase::fgla(
                    mags,
                    system,
                    &FglaConfig {
                        alpha,
                        iterations,
                        record_every: 0,
                    },
                )?,
                AlgoSpec::Spsi => phase::spsi(mags, system)?,
                AlgoSpec::ZeroPhase => phase::zero_phase_baseline(mags, system)?,
                AlgoSpec::PhaseNoise { .. } => unreachable!(),
            };
            let c = ComplexStft::from_polar(mags, &r.estimated_phase)?;
            (c, r.reconstructed, r.iterations_run)
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    Ok(Estimate {
        signal,
        coeffs: result_coeffs,
        iterations,
        wall_time,
    })
}

/// SNR_MS after the trim policy has been applied to both signals.
pub fn trimmed_snr(
    reference: &SignalBuffer,
    estimate: &SignalBuffer,
    trim: TrimPolicy,
    channels: usize,
    cfg: SnrMsConfig,
) -> Result<f64> {
    match trim {
        TrimPolicy::On => snr_ms(
            &reference.trimmed(channels)?,
            &estimate.trimmed(channels)?,
            cfg,
        ),
        TrimPolicy::Off => snr_ms(reference, estimate, cfg),
    }
}

pub(crate) struct RowContext<'a> {
    pub algorithm: String,
    pub family: WindowFamily,
    pub lambda: f64,
    pub redundancy: usize,
    pub signal_id: &'a str,
    pub seed: u64,
    pub iterations: usize,
}

pub(crate) fn error_row(ctx: &RowContext<'_>, err: &Error) -> SweepRow {
    SweepRow {
        algorithm: ctx.algorithm.clone(),
        window: ctx.family,
        lambda_requested: ctx.lambda,
        lambda_realized: f64::NAN,
        redundancy: ctx.redundancy,
        a: 0,
        m: 0,
        signal_id: ctx.signal_id.to_string(),
        snr_ms_db: f64::NAN,
        projection_error: f64::NAN,
        wall_time_s: None,
        iterations: ctx.iterations,
        seed: ctx.seed,
        odg: None,
        error: Some(err.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn measured_row(
    ctx: &RowContext<'_>,
    cell: &CellSystem,
    reference: &SignalBuffer,
    est: &Estimate,
    trim: TrimPolicy,
    snr: SnrMsConfig,
    timing: bool,
) -> Result<SweepRow> {
    let grid = cell.system.grid();
    let snr_ms_db = trimmed_snr(reference, &est.signal, trim, grid.channels(), snr)?;
    let projected = cell.system.project(&est.coeffs)?;
    let projection_error = est.coeffs.full_distance(&projected)?;
    Ok(SweepRow {
        algorithm: ctx.algorithm.clone(),
        window: ctx.family,
        lambda_requested: cell.lambda_requested,
        lambda_realized: cell.lambda_realized,
        redundancy: grid.redundancy(),
        a: grid.hop(),
        m: grid.channels(),
        signal_id: ctx.signal_id.to_string(),
        snr_ms_db,
        projection_error,
        wall_time_s: timing.then_some(est.wall_time),
        iterations: est.iterations,
        seed: ctx.seed,
        odg: None,
        error: None,
    })
}

pub(crate) fn cell_id(algo: &str, family: WindowFamily, lambda: f64, d: usize, signal: &str) -> String {
    format!("{algo}|{family}|{lambda}|{d}|{signal}")
}

pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::arg(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) type CellGroup = (WindowFamily, f64, usize);
pub(crate) type SystemSlot = std::result::Result<CellSystem, String>;

pub(crate) fn cell_groups(spec: &SweepSpec) -> Vec<CellGroup> {
    let mut groups = Vec::new();
    for &family in &spec.windows {
        for &lambda in &spec.lambdas {
            for &d in &spec.redundancies {
                groups.push((family, lambda, d));
            }
        }
    }
    groups
}

/// One analysis system per group, built once and shared across signals.
pub(crate) fn build_systems(
    groups: &[CellGroup],
    len: usize,
    rate: u32,
    threads: usize,
) -> Result<Vec<SystemSlot>> {
    with_threads(threads, || {
        groups
            .par_iter()
            .map(|&(family, lambda, d)| {
                cell_system(family, lambda, d, len, rate).map_err(|e| e.to_string())
            })
            .collect()
    })
}

/// Evaluates every (window, λ, D, algorithm, signal) combination. Rows come
/// back in that nesting order whatever the thread count; failing cells
/// become rows with the `error` field set.
pub fn run_sweep(spec: &SweepSpec, corpus: &Corpus) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::arg("corpus is empty"));
    }
    let (len, rate) = (corpus.signal_len(), corpus.sample_rate());
    let groups = cell_groups(spec);
    let systems = build_systems(&groups, len, rate, spec.threads)?;

    let units: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..corpus.len()).map(move |s| (g, s)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = with_threads(spec.threads, || {
        units
            .par_iter()
            .map(|&(g, s)| {
                let (family, lambda, d) = groups[g];
                let (id, signal) = &corpus.signals[s];
                evaluate_unit(spec, family, lambda, d, id, signal, &systems[g])
            })
            .collect()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

pub(crate) fn row_contexts<'a>(
    algorithms: &[AlgoSpec],
    master_seed: u64,
    family: WindowFamily,
    lambda: f64,
    d: usize,
    id: &'a str,
) -> Vec<(AlgoSpec, RowContext<'a>)> {
    algorithms
        .iter()
        .map(|algo| {
            let name = algo.to_string();
            let seed = cell_seed(master_seed, &cell_id(&name, family, lambda, d, id));
            (
                *algo,
                RowContext {
                    algorithm: name,
                    family,
                    lambda,
                    redundancy: d,
                    signal_id: id,
                    seed,
                    iterations: algo.iterations(),
                },
            )
        })
        .collect()
}

fn evaluate_unit(
    spec: &SweepSpec,
    family: WindowFamily,
    lambda: f64,
    d: usize,
    id: &str,
    signal: &SignalBuffer,
    sys: &SystemSlot,
) -> Vec<SweepRow> {
    let contexts = row_contexts(&spec.algorithms, spec.seed, family, lambda, d, id);
    let cell = match sys {
        Ok(c) => c,
        Err(msg) => {
            let err = Error::InvalidGrid(msg.clone());
            return contexts.iter().map(|(_, ctx)| error_row(ctx, &err)).collect();
        }
    };
    let coeffs = match cell.system.analyze(signal) {
        Ok(c) => c,
        Err(e) => return contexts.iter().map(|(_, ctx)| error_row(ctx, &e)).collect(),
    };
    let mags = coeffs.magnitude();
    contexts
        .iter()
        .map(|(algo, ctx)| {
            estimate(algo, cell, &coeffs, &mags, ctx.seed, spec.fgla_alpha)
                .and_then(|est| {
                    measured_row(ctx, cell, signal, &est, spec.trim, spec.snr, spec.timing)
                })
                .unwrap_or_else(|e| error_row(ctx, &e))
        })
        .collect()
}

/// Mean SNR_MS per (algorithm, window, λ, D) over the signals, in first
/// appearance order. Error rows are skipped.
pub fn mean_snr(rows: &[SweepRow]) -> Vec<CellMean> {
    let mut order: Vec<CellMean> = Vec::new();
    let mut index: HashMap<(String, WindowFamily, u64, usize), usize> = HashMap::new();
    for r in rows.iter().filter(|r| !r.is_error()) {
        let key = (
            r.algorithm.clone(),
            r.window,
            r.lambda_requested.to_bits(),
            r.redundancy,
        );
        let i = *index.entry(key).or_insert_with(|| {
            order.push(CellMean {
                algorithm: r.algorithm.clone(),
                window: r.window,
                lambda_requested: r.lambda_requested,
                lambda_realized: r.lambda_realized,
                redundancy: r.redundancy,
                a: r.a,
                m: r.m,
                mean_snr_db: 0.0,
                signals: 0,
            });
            order.len() - 1
        });
        order[i].mean_snr_db += r.snr_ms_db;
        order[i].signals += 1;
    }
    for c in &mut order {
        c.mean_snr_db /= c.signals as f64;
    }
    order
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMean {
    pub algorithm: String,
    pub window: WindowFamily,
    pub lambda_requested: f64,
    pub lambda_realized: f64,
    #[serde(rename = "D")]
    pub redundancy: usize,
    pub a: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean_snr_db: f64,
    pub signals: usize,
}

/// Helper for callers that already hold coefficients.
pub fn weighted_coeffs(coeffs: &ComplexStft, weights: &[f64]) -> Result<ComplexStft> {
    let mr = coeffs.grid().half_channels();
    if weights.len() != mr {
        return Err(Error::dim("one weight per stored channel expected"));
    }
    let mut out = coeffs.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= Complex64::new(weights[i % mr], 0.0);
    }
    Ok(out)
}
