use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tfpr-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn tfpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfpr")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&tfpr(&["--help"])), 0);
    assert_eq!(code(&tfpr(&["--version"])), 0);
    assert_eq!(code(&tfpr(&["sweep", "--help"])), 0);
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(code(&tfpr(&["sweep", "--no-such-flag"])), 1);
    assert_eq!(code(&tfpr(&["bogus"])), 1);
    let out = tfpr(&["sweep", "--algo", "bogus", "--length", "4096"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert_eq!(code(&tfpr(&["sweep", "--timing", "maybe", "--length", "4096"])), 1);
    assert_eq!(code(&tfpr(&["reconstruct"])), 1);
}

#[test]
fn missing_corpus_is_a_data_error() {
    let dir = scratch("missing");
    let out = tfpr(&["sweep", "--corpus", dir.join("nope").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let config = dir.join("missing.toml");
    assert_eq!(code(&tfpr(&["--config", config.to_str().unwrap(), "sweep"])), 2);
}

#[test]
fn synth_writes_wav_files() {
    let dir = scratch("synth");
    let out = tfpr(&[
        "synth", "--out", dir.to_str().unwrap(), "--signals", "2", "--length", "8192",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..2 {
        let path = dir.join(format!("speech-{i:02}.wav"));
        let reader = hound::WavReader::open(&path).unwrap();
        assert_eq!(reader.len(), 8192);
        assert_eq!(reader.spec().sample_rate, 22050);
    }
}

#[test]
fn sweep_writes_csv_and_sidecar() {
    let dir = scratch("sweep");
    let out = tfpr(&[
        "sweep", "--length", "8192", "--signals", "1", "--lambda", "1", "--redundancy", "4",
        "--timing", "off", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "pghi");
    assert_eq!(&rows[0][4], "4");
    assert!(rows[0][8].parse::<f64>().unwrap() > 0.0);
    assert_eq!(&rows[0][10], "");
    let spec: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("sweep.spec.json")).unwrap()).unwrap();
    assert_eq!(spec["spec"]["length"], 8192);
    assert_eq!(spec["spec"]["signals"][0], "speech-00");
}

#[test]
fn command_line_overrides_config_file() {
    let dir = scratch("config");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        format!(
            "length = 4096\nsignals = 1\nlambda = \"1\"\nredundancy = \"4\"\ntiming = \"off\"\nout = {:?}\n",
            dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = tfpr(&["--config", config.to_str().unwrap(), "sweep", "--redundancy", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][4], "2");
    let spec: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("sweep.spec.json")).unwrap()).unwrap();
    assert_eq!(spec["spec"]["length"], 4096);

    std::fs::write(&config, "no-such-key = 1\n").unwrap();
    assert_eq!(code(&tfpr(&["--config", config.to_str().unwrap(), "sweep"])), 1);
}

#[test]
fn reconstruct_and_stft_read_a_wav() {
    let dir = scratch("reconstruct");
    let d = dir.to_str().unwrap();
    assert_eq!(code(&tfpr(&["synth", "--out", d, "--length", "8192"])), 0);
    let input = dir.join("speech-00.wav");
    let input = input.to_str().unwrap();

    let out = tfpr(&[
        "reconstruct", "--input", input, "--length", "8192", "--lambda", "1", "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("snr_ms"));
    let wav = hound::WavReader::open(dir.join("speech-00.pghi.wav")).unwrap();
    assert_eq!(wav.len(), 8192);

    let out = tfpr(&[
        "stft", "--input", input, "--length", "8192", "--lambda", "1", "--redundancy", "4",
        "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let coeffs = rows(&dir.join("speech-00.stft.csv"));
    let frames: usize = coeffs.iter().map(|r| r[0].parse::<usize>().unwrap()).max().unwrap() + 1;
    let channels: usize = coeffs.iter().map(|r| r[1].parse::<usize>().unwrap()).max().unwrap() + 1;
    assert_eq!(coeffs.len(), frames * channels);
}

#[test]
fn impossible_grid_exits_with_one() {
    let out = tfpr(&["sweep", "--length", "4096", "--signals", "1", "--lambda", "0", "--timing", "off"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}
