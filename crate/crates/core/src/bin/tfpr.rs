#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tfpr::harness::filter::MIN_RESOLVING_CHANNELS;
use tfpr::harness::noise::DEFAULT_SIGMAS;
use tfpr::harness::optimize::DEFAULT_THRESHOLD_DB;
use tfpr::harness::wav::{DEFAULT_LENGTH, DEFAULT_RATE};
use tfpr::harness::{
    cell_seed, ingest_wav, load_corpus, mean_snr, optimize_parameters, realize_grid,
    run_filter_experiment, run_noise_sensitivity, run_sweep, synth_signal, write_results,
    write_wav, AlgoSpec, Corpus, FilterSpec, OptimizeSpec, OutputFormat, SweepRow, SweepSpec,
    SynthKind, TrimPolicy, WavFormat,
};
use tfpr::harness::report::write_file;
use tfpr::harness::sweep::{cell_system, estimate};
use tfpr::metrics::projection_error_with;
use tfpr::windows::WindowFamily;
use tfpr::{snr_ms, Error, Result, SnrMsConfig};

#[derive(Parser)]
#[command(name = "tfpr", version, about = "STFT phase retrieval toolkit and benchmark runner")]
struct Cli {
    /// TOML file of `flag = value` pairs; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the STFT coefficients of one WAV file.
    Stft(Opts),
    /// Reconstruct one WAV file from its STFT magnitude.
    Reconstruct(Opts),
    /// λ × D × window sweep over a corpus.
    Sweep(Opts),
    /// Comb-filter experiment on weighted spectrograms.
    FilterExp(Opts),
    /// Phase-noise sensitivity.
    NoiseExp(Opts),
    /// Search λ and D ranges that clear an SNR_MS threshold.
    Optimize(Opts),
    /// Write synthetic probe signals as WAV files.
    Synth(Opts),
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Opts {
    /// Algorithms: pghi, fgla, fgla:<n>, spsi, zero, noise:<σ> (comma list).
    #[arg(long)]
    algo: Option<String>,
    /// λ values as a comma list or a log range `lo:hi:n`.
    #[arg(long)]
    lambda: Option<String>,
    /// Redundancies D = M / a (comma list).
    #[arg(long)]
    redundancy: Option<String>,
    /// Window families (comma list): gaussian, hann, blackman, bartlett.
    #[arg(long)]
    window: Option<String>,
    /// Directory of WAV files.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Synthetic corpus kind when no corpus directory is given.
    #[arg(long)]
    synth: Option<String>,
    /// Number of synthetic signals.
    #[arg(long)]
    signals: Option<usize>,
    /// Signal length L in samples.
    #[arg(long)]
    length: Option<usize>,
    /// Sample rate in Hz.
    #[arg(long)]
    rate: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// FGLA iteration count.
    #[arg(long)]
    iterations: Option<usize>,
    /// FGLA acceleration α.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// on or off.
    #[arg(long)]
    trim: Option<String>,
    /// Record wall time per row: on or off.
    #[arg(long)]
    timing: Option<String>,
    #[arg(long)]
    snr_threshold_db: Option<f64>,
    /// Phase noise standard deviations in radians (comma list).
    #[arg(long)]
    sigma: Option<String>,
    /// Cosine periods of the comb filter over the full DFT range.
    #[arg(long)]
    filter_periods: Option<f64>,
    /// Input WAV file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Optimizer time budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// pcm16 or float32.
    #[arg(long)]
    wav_format: Option<String>,
}

macro_rules! merge {
    ($a:expr, $b:expr, $($f:ident),*) => {
        Opts { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Opts {
    fn merged(self, file: Opts) -> Opts {
        merge!(
            self, file, algo, lambda, redundancy, window, corpus, synth, signals, length, rate,
            seed, iterations, alpha, threads, out, format, trim, timing, snr_threshold_db, sigma,
            filter_periods, input, time_budget, wav_format
        )
    }

    fn rate(&self) -> u32 {
        self.rate.unwrap_or(DEFAULT_RATE)
    }

    fn length(&self) -> usize {
        self.length.unwrap_or(DEFAULT_LENGTH)
    }

    fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn format(&self) -> Result<OutputFormat> {
        self.format.as_deref().unwrap_or("csv").parse()
    }

    fn algorithms(&self, default: &str) -> Result<Vec<AlgoSpec>> {
        let text = self.algo.as_deref().unwrap_or(default);
        text.split(',')
            .map(|t| {
                let a: AlgoSpec = t.trim().parse()?;
                Ok(match (a, self.iterations, t.contains(':')) {
                    (AlgoSpec::Fgla { .. }, Some(n), false) => AlgoSpec::Fgla { iterations: n },
                    _ => a,
                })
            })
            .collect()
    }

    fn lambdas(&self, default: &str) -> Result<Vec<f64>> {
        parse_lambdas(self.lambda.as_deref().unwrap_or(default))
    }

    fn redundancies(&self, default: &str) -> Result<Vec<usize>> {
        parse_list(self.redundancy.as_deref().unwrap_or(default), "redundancy")
    }

    fn windows(&self) -> Result<Vec<WindowFamily>> {
        self.window
            .as_deref()
            .unwrap_or("gaussian")
            .split(',')
            .map(|w| w.trim().parse())
            .collect()
    }

    fn sweep_spec(&self, default_algo: &str, default_lambda: &str, default_d: &str) -> Result<SweepSpec> {
        let timing = match self.timing.as_deref() {
            None | Some("on") => true,
            Some("off") => false,
            Some(x) => return Err(Error::InvalidArgument(format!("timing must be on or off, got '{x}'"))),
        };
        Ok(SweepSpec {
            algorithms: self.algorithms(default_algo)?,
            lambdas: self.lambdas(default_lambda)?,
            redundancies: self.redundancies(default_d)?,
            windows: self.windows()?,
            seed: self.seed.unwrap_or(0),
            trim: self.trim.as_deref().map_or(Ok(TrimPolicy::On), str::parse)?,
            threads: self.threads.unwrap_or(1),
            fgla_alpha: self.alpha.unwrap_or(0.99),
            timing,
            snr: SnrMsConfig::default(),
        })
    }

    fn corpus(&self) -> Result<Corpus> {
        let (rate, len) = (self.rate(), self.length());
        if let Some(dir) = &self.corpus {
            return load_corpus(dir, rate, len);
        }
        let kind: SynthKind = self.synth.as_deref().unwrap_or("speech").parse()?;
        let count = self.signals.unwrap_or(8);
        let seed = self.seed.unwrap_or(0);
        let signals = (0..count)
            .map(|i| {
                let id = format!("{}-{i:02}", kind.name());
                let s = synth_signal(&kind, len, rate, cell_seed(seed, &id))?;
                Ok((id, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(signals)
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse {what} value '{t}'")))
        })
        .collect()
}

/// `a,b,c` or `lo:hi:n` (n log-spaced points, ends included).
fn parse_lambdas(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(text, "λ"),
        [lo, hi, n] => {
            let lo: f64 = parse_list(lo, "λ")?[0];
            let hi: f64 = parse_list(hi, "λ")?[0];
            let n: usize = parse_list(n, "point count")?[0];
            if n == 0 || !(lo > 0.0) || !(hi >= lo) {
                return Err(Error::InvalidArgument(format!("bad λ range '{text}'")));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            let step = (hi / lo).ln() / (n - 1) as f64;
            Ok((0..n).map(|i| lo * (step * i as f64).exp()).collect())
        }
        _ => Err(Error::InvalidArgument(format!("bad λ list '{text}'"))),
    }
}

fn print_means(rows: &[SweepRow]) {
    println!("{:<12} {:<9} {:>12} {:>12} {:>3} {:>6} {:>6} {:>10}", "algorithm", "window", "lambda", "realized", "D", "a", "M", "snr_ms_db");
    for c in mean_snr(rows) {
        println!(
            "{:<12} {:<9} {:>12.6} {:>12.6} {:>3} {:>6} {:>6} {:>10.3}",
            c.algorithm,
            c.window.name(),
            c.lambda_requested,
            c.lambda_realized,
            c.redundancy,
            c.a,
            c.m,
            c.mean_snr_db
        );
    }
    let errors = rows.iter().filter(|r| r.is_error()).count();
    if errors > 0 {
        eprintln!("warning: {errors} row(s) failed, see the error column");
    }
}

fn single_input(opts: &Opts) -> Result<(PathBuf, tfpr::SignalBuffer)> {
    let input = opts
        .input
        .clone()
        .ok_or_else(|| Error::InvalidArgument("--input is required".into()))?;
    let signal = ingest_wav(&input, opts.rate(), opts.length())?;
    Ok((input, signal))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "signal".into())
}

fn single_cell(opts: &Opts, len: usize) -> Result<tfpr::harness::sweep::CellSystem> {
    let lambda = opts.lambdas("2.32")?[0];
    let d = opts.redundancies("8")?[0];
    let family = opts.windows()?[0];
    cell_system(family, lambda, d, len, opts.rate())
}

fn cmd_stft(opts: &Opts) -> Result<()> {
    let (input, signal) = single_input(opts)?;
    let cell = single_cell(opts, signal.len())?;
    let coeffs = cell.system.analyze(&signal)?;
    let grid = *coeffs.grid();
    let out = opts.out();
    std::fs::create_dir_all(&out)?;
    let path = match opts.format()? {
        OutputFormat::Csv => {
            let mut text = String::from("frame,channel,re,im\n");
            let mr = grid.half_channels();
            for (i, c) in coeffs.coeffs().iter().enumerate() {
                text += &format!("{},{},{},{}\n", i / mr, i % mr, c.re, c.im);
            }
            let p = out.join(format!("{}.stft.csv", stem(&input)));
            write_file(&p, text.as_bytes())?;
            p
        }
        OutputFormat::Json => {
            let v = serde_json::json!({
                "grid": grid,
                "lambda": cell.lambda_realized,
                "sample_rate": coeffs.sample_rate(),
                "re": coeffs.coeffs().iter().map(|c| c.re).collect::<Vec<_>>(),
                "im": coeffs.coeffs().iter().map(|c| c.im).collect::<Vec<_>>(),
            });
            let p = out.join(format!("{}.stft.json", stem(&input)));
            write_file(&p, v.to_string().as_bytes())?;
            p
        }
    };
    println!(
        "a = {}, M = {}, L = {}, λ = {:.6}: {}",
        grid.hop(),
        grid.channels(),
        grid.len(),
        cell.lambda_realized,
        path.display()
    );
    Ok(())
}

fn cmd_reconstruct(opts: &Opts) -> Result<()> {
    let (input, signal) = single_input(opts)?;
    let algo = opts.algorithms("pghi")?[0];
    let cell = single_cell(opts, signal.len())?;
    let coeffs = cell.system.analyze(&signal)?;
    let seed = cell_seed(opts.seed.unwrap_or(0), &input.to_string_lossy());
    let est = estimate(
        &algo,
        &cell,
        &coeffs,
        &coeffs.magnitude(),
        seed,
        opts.alpha.unwrap_or(0.99),
    )?;
    let out = opts.out();
    std::fs::create_dir_all(&out)?;
    let path = out.join(format!("{}.{}.wav", stem(&input), algo.to_string().replace(':', "-")));
    let format: WavFormat = opts.wav_format.as_deref().unwrap_or("pcm16").parse()?;
    write_wav(&path, &est.signal, format)?;
    let snr = snr_ms(&signal, &est.signal, SnrMsConfig::default())?;
    let perr = projection_error_with(&cell.system, &est.coeffs)?;
    println!(
        "{algo}: snr_ms = {snr:.3} dB, projection error = {perr:.6e}, {:.3} s -> {}",
        est.wall_time,
        path.display()
    );
    Ok(())
}

fn save(opts: &Opts, stem: &str, rows: &[SweepRow], spec: &impl Serialize) -> Result<()> {
    let path = write_results(&opts.out(), stem, rows, opts.format()?, spec)?;
    print_means(rows);
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    corpus: String,
    signals: Vec<&'a str>,
    length: usize,
    rate: u32,
    #[serde(flatten)]
    params: T,
}

fn record<'a, T: Serialize>(opts: &Opts, corpus: &'a Corpus, params: T) -> RunRecord<'a, T> {
    RunRecord {
        corpus: match &opts.corpus {
            Some(p) => p.display().to_string(),
            None => format!("synthetic:{}", opts.synth.as_deref().unwrap_or("speech")),
        },
        signals: corpus.signals.iter().map(|(id, _)| id.as_str()).collect(),
        length: corpus.signal_len(),
        rate: corpus.sample_rate(),
        params,
    }
}

fn cmd_sweep(opts: &Opts) -> Result<()> {
    let spec = opts.sweep_spec("pghi", "0.1:100:7", "8")?;
    let corpus = opts.corpus()?;
    let rows = run_sweep(&spec, &corpus)?;
    save(opts, "sweep", &rows, &record(opts, &corpus, &spec))
}

fn cmd_filter(opts: &Opts) -> Result<()> {
    let spec = opts.sweep_spec("pghi,fgla", "0.5,5,50", "8")?;
    let filter = FilterSpec {
        periods: opts.filter_periods.unwrap_or(FilterSpec::default().periods),
        identity: false,
    };
    let corpus = opts.corpus()?;
    for &l in &spec.lambdas {
        for &d in &spec.redundancies {
            if let Ok(g) = realize_grid(l, d, corpus.signal_len(), corpus.sample_rate()) {
                if g.channels() < MIN_RESOLVING_CHANNELS {
                    eprintln!(
                        "warning: λ = {l}, D = {d} gives M = {} < {MIN_RESOLVING_CHANNELS}; the filter's peaks and valleys are not all resolved",
                        g.channels()
                    );
                }
            }
        }
    }
    let rows = run_filter_experiment(&spec, &filter, &corpus)?;
    #[derive(Serialize)]
    struct P<'a> {
        sweep: &'a SweepSpec,
        filter: FilterSpec,
    }
    save(opts, "filter", &rows, &record(opts, &corpus, P { sweep: &spec, filter }))
}

fn cmd_noise(opts: &Opts) -> Result<()> {
    let sigmas = match &opts.sigma {
        Some(s) => parse_list(s, "σ")?,
        None => DEFAULT_SIGMAS.to_vec(),
    };
    let base = opts.sweep_spec("pghi", "0.1,1,10,100", "2,8,32")?;
    let corpus = opts.corpus()?;
    let rows = run_noise_sensitivity(&sigmas, &base, &corpus)?;
    #[derive(Serialize)]
    struct P<'a> {
        sigmas: &'a [f64],
        sweep: &'a SweepSpec,
    }
    save(opts, "noise", &rows, &record(opts, &corpus, P { sigmas: &sigmas, sweep: &base }))
}

fn cmd_optimize(opts: &Opts) -> Result<()> {
    let algo = opts.algorithms("pghi")?[0];
    let lambdas = opts.lambdas("0.1:100:2")?;
    let (lo, hi) = lambdas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let mut spec = OptimizeSpec::new(algo);
    spec.lambda_min = lo;
    spec.lambda_max = hi;
    spec.redundancies = opts.redundancies("2,4,8,16,32")?;
    spec.window = opts.windows()?[0];
    spec.threshold_db = opts.snr_threshold_db.unwrap_or(DEFAULT_THRESHOLD_DB);
    spec.time_budget = opts.time_budget.map(Duration::from_secs_f64);
    spec.base = opts.sweep_spec("pghi", "1", "8")?;
    let corpus = opts.corpus()?;
    let report = optimize_parameters(&spec, &corpus)?;

    let out = opts.out();
    std::fs::create_dir_all(&out)?;
    let path = match opts.format()? {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| Error::InvalidArgument(e.to_string());
            w.write_record(["algorithm", "D", "lambda_min", "lambda_max", "M_min", "M_max", "best_lambda", "best_snr_ms_db"])
                .map_err(fail)?;
            for s in &report.sets {
                w.write_record([
                    s.algorithm.clone(),
                    s.redundancy.to_string(),
                    s.lambda_min.to_string(),
                    s.lambda_max.to_string(),
                    s.m_min.to_string(),
                    s.m_max.to_string(),
                    s.best_lambda.to_string(),
                    s.best_snr_db.to_string(),
                ])
                .map_err(fail)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let p = out.join("optimize.csv");
            write_file(&p, &bytes)?;
            p
        }
        OutputFormat::Json => {
            let p = out.join("optimize.json");
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            write_file(&p, text.as_bytes())?;
            p
        }
    };
    let sidecar = serde_json::to_string_pretty(&record(opts, &corpus, &spec))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_file(&out.join("optimize.spec.json"), sidecar.as_bytes())?;

    println!("{:<10} {:>3} {:>22} {:>14} {:>10}", "algorithm", "D", "lambda range", "M range", "best dB");
    for s in &report.sets {
        println!(
            "{:<10} {:>3} {:>10.4} - {:<9.4} {:>6} - {:<5} {:>10.3}",
            s.algorithm, s.redundancy, s.lambda_min, s.lambda_max, s.m_min, s.m_max, s.best_snr_db
        );
    }
    if report.below_threshold {
        match &report.best {
            Some(b) => println!(
                "below threshold: best cell λ = {:.4}, D = {}, M = {} at {:.3} dB",
                b.lambda, b.redundancy, b.m, b.mean_snr_db
            ),
            None => println!("below threshold: no cell could be evaluated"),
        }
    }
    if report.budget_exhausted {
        eprintln!("warning: time budget exhausted, search stopped early");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_synth(opts: &Opts) -> Result<()> {
    let kind: SynthKind = opts.synth.as_deref().unwrap_or("speech").parse()?;
    let format: WavFormat = opts.wav_format.as_deref().unwrap_or("float32").parse()?;
    let out = opts.out();
    std::fs::create_dir_all(&out)?;
    let seed = opts.seed.unwrap_or(0);
    for i in 0..opts.signals.unwrap_or(1) {
        let id = format!("{}-{i:02}", kind.name());
        let s = synth_signal(&kind, opts.length(), opts.rate(), cell_seed(seed, &id))?;
        let path = out.join(format!("{id}.wav"));
        write_wav(&path, &s, format)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<Opts> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => Opts::default(),
    };
    match cli.command {
        Command::Stft(o) => cmd_stft(&o.merged(file)),
        Command::Reconstruct(o) => cmd_reconstruct(&o.merged(file)),
        Command::Sweep(o) => cmd_sweep(&o.merged(file)),
        Command::FilterExp(o) => cmd_filter(&o.merged(file)),
        Command::NoiseExp(o) => cmd_noise(&o.merged(file)),
        Command::Optimize(o) => cmd_optimize(&o.merged(file)),
        Command::Synth(o) => cmd_synth(&o.merged(file)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
