//! Search for (λ, D) ranges where an algorithm clears an SNR_MS threshold.
//!
//! Per redundancy: hill-climb on a √2-spaced λ grid to a local maximum of
//! the corpus mean, then widen the range on both sides while the mean stays
//! at or above the threshold. Redundancy is raised until the best value
//! improves by less than [`MIN_GAIN_DB`].

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::sweep::{mean_snr, run_sweep, AlgoSpec, Corpus, SweepSpec, LAMBDA_RANGE};
use crate::error::{Error, Result};
use crate::windows::WindowFamily;

pub const MIN_GAIN_DB: f64 = 0.5;
pub const SCREEN_ITERATIONS: usize = 5;
pub const DEFAULT_THRESHOLD_DB: f64 = 15.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSpec {
    pub algorithm: AlgoSpec,
    pub window: WindowFamily,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Tried in ascending order.
    pub redundancies: Vec<usize>,
    pub threshold_db: f64,
    /// Starting point of the climb; the geometric centre of the range if unset.
    pub seed_lambda: Option<f64>,
    pub time_budget: Option<Duration>,
    /// Sweep settings for each evaluation (seed, trim, threads, FGLA α).
    pub base: SweepSpec,
}

impl OptimizeSpec {
    pub fn new(algorithm: AlgoSpec) -> Self {
        Self {
            algorithm,
            window: WindowFamily::Gaussian,
            lambda_min: 0.1,
            lambda_max: 100.0,
            redundancies: vec![2, 4, 8, 16, 32],
            threshold_db: DEFAULT_THRESHOLD_DB,
            seed_lambda: None,
            time_budget: None,
            base: SweepSpec::default(),
        }
    }

    /// `λ_min · √2^k` up to `λ_max`.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let l = self.lambda_min * 2f64.powf(k as f64 / 2.0);
            if l > self.lambda_max * (1.0 + 1e-12) {
                break;
            }
            out.push(l);
            k += 1;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = LAMBDA_RANGE;
        if !(self.lambda_min >= lo && self.lambda_max <= hi && self.lambda_min <= self.lambda_max) {
            return Err(Error::arg(format!(
                "λ range [{}, {}] must lie within [{lo}, {hi}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.redundancies.is_empty() {
            return Err(Error::arg("redundancy list must be non-empty"));
        }
        if matches!(self.algorithm, AlgoSpec::PhaseNoise { .. } | AlgoSpec::ZeroPhase) {
            return Err(Error::arg("optimize needs a phase retrieval algorithm"));
        }
        if self.threshold_db.is_nan() {
            return Err(Error::arg("threshold must be a number"));
        }
        Ok(())
    }
}

/// Contiguous λ range clearing the threshold at one redundancy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalSet {
    pub algorithm: String,
    #[serde(rename = "D")]
    pub redundancy: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub best_lambda: f64,
    pub best_snr_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub lambda: f64,
    #[serde(rename = "D")]
    pub redundancy: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub iterations: usize,
    pub mean_snr_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub sets: Vec<OptimalSet>,
    /// Best full-count cell seen, whether or not it passed.
    pub best: Option<CellScore>,
    /// No cell reached the threshold.
    pub below_threshold: bool,
    pub budget_exhausted: bool,
    /// Every evaluated cell, in evaluation order.
    pub evaluated: Vec<CellScore>,
}

fn key(algo: AlgoSpec, i: usize, d: usize) -> (String, usize, usize, usize) {
    (algo.to_string(), algo.iterations(), i, d)
}

struct Evaluator<'a> {
    spec: &'a OptimizeSpec,
    corpus: &'a Corpus,
    grid: Vec<f64>,
    memo: HashMap<(String, usize, usize, usize), (f64, usize)>,
    evaluated: Vec<CellScore>,
    deadline: Option<Instant>,
}

impl Evaluator<'_> {
    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Corpus mean at grid point `i`; NaN when any signal failed.
    fn score(&mut self, algo: AlgoSpec, i: usize, d: usize) -> Result<f64> {
        if let Some(&(v, _)) = self.memo.get(&key(algo, i, d)) {
            return Ok(v);
        }
        let sweep = SweepSpec {
            algorithms: vec![algo],
            lambdas: vec![self.grid[i]],
            redundancies: vec![d],
            windows: vec![self.spec.window],
            ..self.spec.base.clone()
        };
        let rows = run_sweep(&sweep, self.corpus)?;
        let means = mean_snr(&rows);
        let (value, m) = match (rows.iter().any(|r| r.is_error()), means.first()) {
            (false, Some(c)) => (c.mean_snr_db, c.m),
            _ => (f64::NAN, 0),
        };
        self.memo.insert(key(algo, i, d), (value, m));
        self.evaluated.push(CellScore {
            lambda: self.grid[i],
            redundancy: d,
            m,
            iterations: algo.iterations(),
            mean_snr_db: value,
        });
        Ok(value)
    }

    fn m_at(&self, algo: AlgoSpec, i: usize, d: usize) -> usize {
        self.memo.get(&key(algo, i, d)).map_or(0, |&(_, m)| m)
    }

    /// Index of a local maximum reached by steepest ascent from `start`.
    fn climb(&mut self, algo: AlgoSpec, start: usize, d: usize) -> Result<usize> {
        let mut at = start;
        let mut here = self.score(algo, at, d)?;
        loop {
            if self.out_of_time() {
                return Ok(at);
            }
            let mut next = None;
            for j in [at.checked_sub(1), Some(at + 1)].into_iter().flatten() {
                if j >= self.grid.len() {
                    continue;
                }
                let v = self.score(algo, j, d)?;
                if v > here || (here.is_nan() && !v.is_nan()) {
                    here = v;
                    next = Some(j);
                }
            }
            match next {
                Some(j) => at = j,
                None => return Ok(at),
            }
        }
    }

    /// Widest run of indices around `best` whose scores clear `threshold`.
    fn widen(&mut self, algo: AlgoSpec, best: usize, d: usize, threshold: f64) -> Result<(usize, usize)> {
        let (mut lo, mut hi) = (best, best);
        while lo > 0 && !self.out_of_time() && self.score(algo, lo - 1, d)? >= threshold {
            lo -= 1;
        }
        while hi + 1 < self.grid.len() && !self.out_of_time() && self.score(algo, hi + 1, d)? >= threshold {
            hi += 1;
        }
        Ok((lo, hi))
    }
}

pub fn optimize_parameters(spec: &OptimizeSpec, corpus: &Corpus) -> Result<OptimizeReport> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::arg("corpus is empty"));
    }
    let grid = spec.lambda_grid();
    let mut redundancies = spec.redundancies.clone();
    redundancies.sort_unstable();
    redundancies.dedup();
    let seed = spec
        .seed_lambda
        .unwrap_or((spec.lambda_min * spec.lambda_max).sqrt());
    let start = (0..grid.len())
        .min_by(|&x, &y| {
            let dx = (grid[x] / seed).ln().abs();
            let dy = (grid[y] / seed).ln().abs();
            dx.total_cmp(&dy)
        })
        .unwrap_or(0);
    let mut ev = Evaluator {
        spec,
        corpus,
        grid,
        memo: HashMap::new(),
        evaluated: Vec::new(),
        deadline: spec.time_budget.map(|b| Instant::now() + b),
    };
    let full = spec.algorithm;
    let screen = match full {
        AlgoSpec::Fgla { iterations } if iterations > SCREEN_ITERATIONS => Some(AlgoSpec::Fgla {
            iterations: SCREEN_ITERATIONS,
        }),
        _ => None,
    };

    let mut sets = Vec::new();
    let mut best: Option<CellScore> = None;
    let mut previous_best: Option<f64> = None;
    let mut budget_exhausted = false;
    for &d in &redundancies {
        if ev.out_of_time() {
            budget_exhausted = true;
            break;
        }
        let peak = match screen {
            Some(s) => {
                let i = ev.climb(s, start, d)?;
                ev.climb(full, i, d)?
            }
            None => ev.climb(full, start, d)?,
        };
        let value = ev.score(full, peak, d)?;
        if !value.is_nan() && best.as_ref().is_none_or(|b| value > b.mean_snr_db) {
            best = Some(CellScore {
                lambda: ev.grid[peak],
                redundancy: d,
                m: ev.m_at(full, peak, d),
                iterations: full.iterations(),
                mean_snr_db: value,
            });
        }
        if value >= spec.threshold_db {
            let (lo, hi) = ev.widen(full, peak, d, spec.threshold_db)?;
            let ms: Vec<usize> = (lo..=hi).map(|i| ev.m_at(full, i, d)).collect();
            sets.push(OptimalSet {
                algorithm: full.to_string(),
                redundancy: d,
                lambda_min: ev.grid[lo],
                lambda_max: ev.grid[hi],
                m_min: ms.iter().copied().min().unwrap_or(0),
                m_max: ms.iter().copied().max().unwrap_or(0),
                best_lambda: ev.grid[peak],
                best_snr_db: value,
            });
        }
        if ev.out_of_time() {
            budget_exhausted = true;
            break;
        }
        if let Some(prev) = previous_best {
            if value.is_nan() || value - prev < MIN_GAIN_DB {
                break;
            }
        }
        if !value.is_nan() {
            previous_best = Some(value);
        }
    }
    Ok(OptimizeReport {
        below_threshold: sets.is_empty(),
        sets,
        best,
        budget_exhausted,
        evaluated: ev.evaluated,
    })
}
