//! Acceptance criteria. One PASS/FAIL line per criterion; the exit status is
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::Serialize;

use common::{brute_istft, brute_stft, complex_noise, max_abs, rel_err, signal, RATE};
use tfpr::harness::{
    cell_seed, mean_snr, optimize_parameters, rows_to_csv, run_filter_experiment,
    run_noise_sensitivity, run_sweep, synth_signal, AlgoSpec, CellMean, Corpus, FilterSpec,
    OptimizeSpec, SweepRow, SweepSpec, SynthKind, TrimPolicy,
};
use tfpr::windows::{named_window, periodized_gaussian};
use tfpr::{
    canonical_dual, istft, stft, ComplexStft, Gabor, StftGrid, WindowFamily, WindowVec,
};

const LEN: usize = 122_880;
const CORPUS_SIZE: usize = 8;
const SEED: u64 = 0;
const THRESHOLD_DB: f64 = 15.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn check(n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took < l);
    let pass = v.pass && in_time;
    let budget = match limit {
        Some(l) => format!("{:.1} s, limit {} s", took.as_secs_f64(), l.as_secs()),
        None => format!("{:.1} s", took.as_secs_f64()),
    };
    println!(
        "{} {n:>2} {name}: {} [{budget}{}]",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        if in_time { "" } else { ", over time" }
    );
    pass
}

fn minutes(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

/// Every sweep of criteria 3 to 9, kept so criterion 10 can run it again.
struct Run {
    label: String,
    bytes: Vec<u8>,
    again: Box<dyn Fn() -> Vec<u8>>,
}

#[derive(Default)]
struct Log(Vec<Run>);

impl Log {
    fn sweep(&mut self, label: &str, f: impl Fn() -> Vec<SweepRow> + 'static) -> Vec<SweepRow> {
        let rows = f();
        self.0.push(Run {
            label: label.into(),
            bytes: rows_to_csv(&rows).unwrap(),
            again: Box::new(move || rows_to_csv(&f()).unwrap()),
        });
        rows
    }

    fn value<T: Serialize>(&mut self, label: &str, f: impl Fn() -> T + 'static) -> T {
        let value = f();
        self.0.push(Run {
            label: label.into(),
            bytes: serde_json::to_vec(&value).unwrap(),
            again: Box::new(move || serde_json::to_vec(&f()).unwrap()),
        });
        value
    }
}

fn speech_corpus() -> Rc<Corpus> {
    let signals = (0..CORPUS_SIZE)
        .map(|i| {
            let id = format!("speech-{i:02}");
            let s = synth_signal(&SynthKind::SpeechLike, LEN, RATE, cell_seed(SEED, &id)).unwrap();
            (id, s)
        })
        .collect();
    Rc::new(Corpus::new(signals).unwrap())
}

fn spec(algorithms: Vec<AlgoSpec>, lambdas: Vec<f64>, redundancies: Vec<usize>) -> SweepSpec {
    SweepSpec {
        algorithms,
        lambdas,
        redundancies,
        seed: SEED,
        threads: 1,
        timing: false,
        ..Default::default()
    }
}

fn fgla100() -> AlgoSpec {
    AlgoSpec::Fgla { iterations: 100 }
}

fn cells(rows: &[SweepRow]) -> Vec<CellMean> {
    assert!(rows.iter().all(|r| !r.is_error()), "sweep produced error rows");
    mean_snr(rows)
}

fn mean_at(cells: &[CellMean], algo: &str, lambda: f64, d: usize) -> f64 {
    cells
        .iter()
        .find(|c| c.algorithm == algo && c.lambda_requested == lambda && c.redundancy == d)
        .unwrap_or_else(|| panic!("no cell {algo} λ {lambda} D {d}"))
        .mean_snr_db
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

fn window(family: WindowFamily, support: usize, lambda: f64, len: usize) -> WindowVec {
    match family {
        WindowFamily::Gaussian => periodized_gaussian(lambda, len, RATE).unwrap(),
        f => named_window(f, support, len).unwrap(),
    }
}

fn perfect_reconstruction() -> Verdict {
    let len = 4096;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for family in WindowFamily::ALL {
        for d in [1, 2, 4, 8, 16, 32] {
            // D = 1 on an even length is singular for every even window
            // unless a = M = 1, where the frame operator is a convolution
            // with the window's autocorrelation. Three taps keep its
            // transform away from zero.
            let (a, m, support) = if d == 1 { (1, 1, 3) } else { (16, 16 * d, 16 * d) };
            let g = window(family, support, (a * m) as f64 / RATE as f64, len);
            let system = Gabor::new(StftGrid::new(a, m, len).unwrap(), g, RATE).unwrap();
            for i in 0..20 {
                let x = signal(len, 1000 + i);
                let y = system.synthesize(&system.analyze(&x).unwrap()).unwrap();
                worst = worst.max(rel_err(y.samples(), x.samples()));
                cases += 1;
            }
        }
    }
    verdict(worst <= 1e-10, format!("max relative error {worst:.2e} over {cases} cases (≤ 1e-10)"))
}

fn oracle_equivalence() -> Verdict {
    let fixtures = [
        (64, 4, 16),
        (128, 8, 32),
        (256, 16, 64),
        (256, 4, 32),
        (512, 8, 64),
        (512, 32, 128),
        (63, 7, 7),
    ];
    let (mut worst_a, mut worst_s): (f64, f64) = (0.0, 0.0);
    let mut cases = 0;
    for (i, &(len, a, m)) in fixtures.iter().enumerate() {
        let grid = StftGrid::new(a, m, len).unwrap();
        for family in WindowFamily::ALL {
            // Named windows of support N have N - 1 nonzero taps; at a = M
            // every residue needs one.
            let support = if a == m { m + 1 } else { m };
            let g = window(family, support, (a * m) as f64 / RATE as f64, len);
            let x = signal(len, 40 + i as u64);
            let c = stft(&x, &g, &grid).unwrap();
            let oracle = brute_stft(x.samples(), g.taps(), a, m);
            let scale = max_abs(&oracle);
            for (p, q) in c.coeffs().iter().zip(&oracle) {
                worst_a = worst_a.max((p - q).norm() / scale);
            }

            let gd = canonical_dual(&g, &grid).unwrap();
            let coeffs =
                ComplexStft::new(grid, RATE, complex_noise(grid.half_size(), 80 + i as u64)).unwrap();
            let y = istft(&coeffs, &gd).unwrap();
            let (re, _) = brute_istft(&coeffs.expand_full(), gd.taps(), a, m);
            let scale = re.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            for (p, q) in y.samples().iter().zip(&re) {
                worst_s = worst_s.max((p - q).abs() / scale);
            }
            cases += 1;
        }
    }
    verdict(
        worst_a <= 1e-9 && worst_s <= 1e-9,
        format!("{cases} fixtures, analysis {worst_a:.2e}, synthesis {worst_s:.2e} (≤ 1e-9)"),
    )
}

fn noise_sensitivity(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let c = corpus.clone();
    let lambdas = log_grid(0.1, 100.0, 7);
    let base = spec(vec![], lambdas.clone(), vec![2, 8, 32]);
    let rows = log.sweep("noise σ = 1", move || run_noise_sensitivity(&[1.0], &base, &c).unwrap());
    let strong = cells(&rows);
    let over: Vec<String> = strong
        .iter()
        .filter(|c| c.mean_snr_db.is_nan() || c.mean_snr_db >= 8.0)
        .map(|c| format!("λ {:.3} D {} {:.3} dB", c.lambda_requested, c.redundancy, c.mean_snr_db))
        .collect();
    let max = strong.iter().map(|c| c.mean_snr_db).fold(f64::NEG_INFINITY, f64::max);

    let c = corpus.clone();
    let base = spec(vec![], vec![10.0], vec![2, 8, 32]);
    let rows = log.sweep("noise σ = 0.1", move || run_noise_sensitivity(&[0.1], &base, &c).unwrap());
    let weak = cells(&rows);
    let at = |d| mean_at(&weak, "noise:0.1", 10.0, d);
    let (d2, d8, d32) = (at(2), at(8), at(32));
    let ordered = d32 > d8 && d8 > d2;

    let mut detail = format!(
        "σ = 1 max {max:.3} dB over {} cells (< 8); σ = 0.1 at λ = 10: D2 {d2:.2}, D8 {d8:.2}, D32 {d32:.2} dB",
        strong.len()
    );
    if !over.is_empty() {
        detail += &format!("; at or above 8 dB: {}", over.join(", "));
    }
    verdict(over.is_empty() && ordered, detail)
}

fn stationary_tone(log: &mut Log) -> Verdict {
    let kind = SynthKind::HarmonicTone {
        f0: 220.0,
        harmonics: 10,
    };
    let id = "harmonic-00";
    let tone = synth_signal(&kind, LEN, RATE, cell_seed(SEED, id)).unwrap();
    let corpus = Corpus::new(vec![(id.to_string(), tone)]).unwrap();
    let lambdas = vec![50.0, 100.0, 200.0, 500.0, 1000.0];
    // The tone is periodic over the signal, so the circular edges are real
    // signal and stay in the score.
    let s = SweepSpec {
        trim: TrimPolicy::Off,
        ..spec(vec![AlgoSpec::Pghi], lambdas, vec![16])
    };
    let rows = log.sweep("harmonic tone", move || run_sweep(&s, &corpus).unwrap());
    let means = cells(&rows);
    let min = means.iter().map(|c| c.mean_snr_db).fold(f64::INFINITY, f64::min);
    verdict(
        min > 100.0,
        format!("PGHI D = 16, λ ∈ [50, 1000]: min {min:.2} dB (> 100)"),
    )
}

fn redundancy_trend(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let c = corpus.clone();
    let s = spec(vec![AlgoSpec::Pghi], vec![5.94], vec![2, 8, 32]);
    let p = cells(&log.sweep("pghi redundancy", move || run_sweep(&s, &c).unwrap()));
    let (p2, p8, p32) = (
        mean_at(&p, "pghi", 5.94, 2),
        mean_at(&p, "pghi", 5.94, 8),
        mean_at(&p, "pghi", 5.94, 32),
    );
    let c = corpus.clone();
    let s = spec(vec![fgla100()], vec![13.37], vec![2, 8]);
    let f = cells(&log.sweep("fgla redundancy", move || run_sweep(&s, &c).unwrap()));
    let (f2, f8) = (mean_at(&f, "fgla", 13.37, 2), mean_at(&f, "fgla", 13.37, 8));
    verdict(
        p32 > p8 && p8 > p2 && f8 - f2 >= 5.0,
        format!(
            "PGHI λ = 5.94: D2 {p2:.2}, D8 {p8:.2}, D32 {p32:.2} dB; FGLA(100) λ = 13.37: D8 − D2 = {:.2} dB (≥ 5)",
            f8 - f2
        ),
    )
}

fn bell_shape(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (algo, peak) in [(AlgoSpec::Pghi, 5.94), (fgla100(), 13.37), (AlgoSpec::Spsi, 1.4)] {
        let c = corpus.clone();
        let s = spec(vec![algo], vec![0.01, peak, 1000.0], vec![8]);
        let means = cells(&log.sweep(&format!("{algo} bell"), move || run_sweep(&s, &c).unwrap()));
        let name = algo.to_string();
        let (lo, mid, hi) = (
            mean_at(&means, &name, 0.01, 8),
            mean_at(&means, &name, peak, 8),
            mean_at(&means, &name, 1000.0, 8),
        );
        pass &= mid > lo && mid > hi;
        parts.push(format!("{name} {lo:.2} < {mid:.2} > {hi:.2}"));
    }
    verdict(pass, format!("λ = 0.01 / peak / 1000 at D = 8: {}", parts.join("; ")))
}

fn filter_experiment(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let c = corpus.clone();
    let lambdas = vec![0.5, 5.0, 50.0];
    let s = spec(vec![AlgoSpec::Pghi, fgla100()], lambdas.clone(), vec![8]);
    let rows = log.sweep("filter", move || {
        run_filter_experiment(&s, &FilterSpec::default(), &c).unwrap()
    });
    let means = cells(&rows);
    let arm = |name: &str| -> Vec<f64> { lambdas.iter().map(|&l| mean_at(&means, name, l, 8)).collect() };
    let r = arm("reference");
    let p = arm("pghi");
    let f = arm("fgla");
    let monotone = r[1] >= r[0] && r[2] >= r[1];
    let interior = |v: &[f64]| v[1] >= v[0] && v[1] >= v[2];
    let fmt = |v: &[f64]| format!("{:.2}/{:.2}/{:.2}", v[0], v[1], v[2]);
    verdict(
        monotone && interior(&p) && interior(&f),
        format!(
            "λ = 0.5/5/50 at D = 8: reference {}, PGHI {}, FGLA(100) {}",
            fmt(&r),
            fmt(&p),
            fmt(&f)
        ),
    )
}

fn fgla_screening(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let lambdas = log_grid(0.1, 100.0, 9);
    let top = |log: &mut Log, iterations: usize| {
        let c = corpus.clone();
        let s = spec(vec![AlgoSpec::Fgla { iterations }], lambdas.clone(), vec![8]);
        let means = cells(&log.sweep(&format!("fgla:{iterations} screening"), move || {
            run_sweep(&s, &c).unwrap()
        }));
        means
            .iter()
            .max_by(|a, b| a.mean_snr_db.total_cmp(&b.mean_snr_db))
            .map(|c| (c.lambda_requested, c.mean_snr_db))
            .unwrap()
    };
    let (l5, s5) = top(log, 5);
    let (l100, s100) = top(log, 100);
    verdict(
        l5 == l100,
        format!("9-point λ grid at D = 8: top λ after 5 iterations {l5:.4} ({s5:.2} dB), after 100 {l100:.4} ({s100:.2} dB)"),
    )
}

fn optimizer_containment(log: &mut Log, corpus: &Rc<Corpus>) -> Verdict {
    let ospec = OptimizeSpec {
        threshold_db: THRESHOLD_DB,
        base: spec(vec![AlgoSpec::Pghi], vec![1.0], vec![8]),
        ..OptimizeSpec::new(AlgoSpec::Pghi)
    };
    let grid = ospec.lambda_grid();
    let c = corpus.clone();
    let s = ospec.clone();
    let report = log.value("optimizer", move || optimize_parameters(&s, &c).unwrap());

    let c = corpus.clone();
    let s = spec(vec![AlgoSpec::Pghi], grid.clone(), ospec.redundancies.clone());
    let exhaustive = cells(&log.sweep("exhaustive", move || run_sweep(&s, &c).unwrap()));
    let passes = |l: f64, d: usize| mean_at(&exhaustive, "pghi", l, d) >= THRESHOLD_DB;

    let mut problems = Vec::new();
    let mut covered = 0;
    for set in &report.sets {
        let inside: Vec<f64> =
            grid.iter().copied().filter(|&l| l >= set.lambda_min && l <= set.lambda_max).collect();
        if inside.is_empty() {
            problems.push(format!("empty set at D {}", set.redundancy));
        }
        for l in inside {
            covered += 1;
            if !passes(l, set.redundancy) {
                problems.push(format!("λ {l:.4} D {} below threshold", set.redundancy));
            }
        }
    }
    for e in &report.evaluated {
        let twin = mean_at(&exhaustive, "pghi", e.lambda, e.redundancy);
        if twin != e.mean_snr_db {
            problems.push(format!("λ {:.4} D {}: {} vs {twin}", e.lambda, e.redundancy, e.mean_snr_db));
        }
    }
    let passing = exhaustive.iter().filter(|c| c.mean_snr_db >= THRESHOLD_DB).count();
    let nonempty = !report.sets.is_empty() || passing == 0;
    if !nonempty {
        problems.push("no sets although cells pass".into());
    }
    let ranges: Vec<String> = report
        .sets
        .iter()
        .map(|s| format!("D{} [{:.3}, {:.3}]", s.redundancy, s.lambda_min, s.lambda_max))
        .collect();
    verdict(
        problems.is_empty(),
        format!(
            "PGHI at {THRESHOLD_DB} dB: {} sets {} covering {covered} grid cells, {passing} of {} exhaustive cells pass{}",
            report.sets.len(),
            ranges.join(" "),
            exhaustive.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    )
}

fn determinism(log: &Log) -> Verdict {
    let differing: Vec<&str> = log
        .0
        .iter()
        .filter(|r| (r.again)() != r.bytes)
        .map(|r| r.label.as_str())
        .collect();
    let detail = format!("{} runs repeated single-threaded", log.0.len());
    if differing.is_empty() {
        verdict(!log.0.is_empty(), format!("{detail}, all byte-identical"))
    } else {
        verdict(false, format!("{detail}, differing: {}", differing.join(", ")))
    }
}

fn main() -> ExitCode {
    let corpus = speech_corpus();
    let mut log = Log::default();
    let results = [
        check(1, "perfect reconstruction", Some(Duration::from_secs(30)), perfect_reconstruction),
        check(2, "oracle equivalence", Some(Duration::from_secs(60)), oracle_equivalence),
        check(3, "noise sensitivity", minutes(5), || noise_sensitivity(&mut log, &corpus)),
        check(4, "stationary tone", minutes(1), || stationary_tone(&mut log)),
        check(5, "redundancy trend", minutes(15), || redundancy_trend(&mut log, &corpus)),
        check(6, "λ bell shape", minutes(15), || bell_shape(&mut log, &corpus)),
        check(7, "filter experiment", minutes(10), || filter_experiment(&mut log, &corpus)),
        check(8, "FGLA screening", minutes(10), || fgla_screening(&mut log, &corpus)),
        check(9, "optimizer containment", minutes(20), || optimizer_containment(&mut log, &corpus)),
        check(10, "determinism", None, || determinism(&log)),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
