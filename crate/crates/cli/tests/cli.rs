use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gomimo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gomimo"))
        .args(args)
        .env("GOMIMO_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = gomimo(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

const FAST_SWEEP: [&str; 6] = [
    "--set",
    "sweep.snr_db=[130.0, 135.0, 140.0]",
    "--set",
    "sweep.vectors_per_point=2000",
    "--set",
    "sweep.chunk_size=1000",
];

const FAST_TRAINING: [&str; 8] = [
    "--set",
    "training.train_size=2000",
    "--set",
    "training.validation_size=1000",
    "--set",
    "training.epochs=1",
    "--set",
    "experiment.timing_vectors=2000",
];

#[test]
fn ber_sweep_writes_one_row_per_snr_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--preset", "table1_center", "--set", "detector.kind=joint_ml"];
    args.extend(FAST_SWEEP);
    args.push("ber-sweep");
    let o = ok(dir.path(), &args);
    assert!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.contains("dB")).count() >= 3);
    let csv = fs::read_to_string(dir.path().join("ber_sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "detector,scheme,location,snr_db,bits,errors,ber,stderr,censored");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("joint_ml,gosm,center,130,"));
    let manifest = fs::read_to_string(dir.path().join("ber-sweep.manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"ber-sweep\""));
    assert!(manifest.contains("ber_sweep.csv"));

    // a second run reproduces the file byte for byte, whatever the thread count
    let again = tempfile::tempdir().unwrap();
    let mut threaded = args.clone();
    threaded.splice(0..0, ["--threads", "3"]);
    ok(again.path(), &threaded);
    assert_eq!(fs::read(again.path().join("ber_sweep.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn codebook_dump_lists_every_gosmp_codeword() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--set", "scheme.kind=gosmp", "codebook-dump"]);
    let csv = fs::read_to_string(dir.path().join("codebook.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert_eq!(csv.lines().next().unwrap(), "bits,x_0,x_1,x_2,x_3");
}

#[test]
fn channel_dump_is_four_by_four() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--preset", "table1_corner", "channel-dump"]);
    let csv = fs::read_to_string(dir.path().join("channel.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 5));
}

#[test]
fn figure_8_times_four_detectors_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = FAST_TRAINING.to_vec();
    args.extend(["reproduce-figure", "8"]);
    ok(dir.path(), &args);
    let csv = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    for scheme in ["gosm", "gosmp"] {
        let mine: Vec<_> = rows.iter().filter(|r| r.starts_with(&format!("{scheme},"))).collect();
        assert_eq!(mine.len(), 4, "{scheme}: {csv}");
    }
    assert!(dir.path().join("reproduce-figure-8.manifest.toml").exists());
}

#[test]
fn trained_model_drives_a_blind_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut train = vec!["--preset", "table2_gosm_center"];
    train.extend(FAST_TRAINING);
    train.push("train");
    ok(dir.path(), &train);
    assert!(dir.path().join("model.json").exists());
    assert_eq!(fs::read_to_string(dir.path().join("mse_log.csv")).unwrap().lines().count(), 2);

    let mut sweep = vec!["--preset", "table2_gosm_center"];
    sweep.extend(FAST_SWEEP);
    sweep.push("ber-sweep");
    ok(dir.path(), &sweep);
    let csv = fs::read_to_string(dir.path().join("ber_sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("blind_dnn,gosm,center,"));
}

#[test]
fn missing_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gomimo(dir.path(), &["--preset", "table2_gosm_center", "--set", "detector.model=\"nowhere.json\"", "ber-sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.json"));
}

#[test]
fn bad_keys_and_files_name_the_culprit() {
    let dir = tempfile::tempdir().unwrap();
    let o = gomimo(dir.path(), &["--set", "sweep.bogus=1", "channel-dump"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[sweep]\nvectors_per_point = \"many\"\n").unwrap();
    let o = gomimo(dir.path(), &["--config", cfg.to_str().unwrap(), "ber-sweep"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("vectors_per_point"), "{err}");
}

#[test]
fn unbracketed_ablation_exits_with_analysis_status() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = FAST_TRAINING.to_vec();
    // the noise floor never reaches the readout BER
    args.extend(["--set", "sweep.snr_db=[190.0, 200.0]", "--set", "sweep.vectors_per_point=1000", "ablate-input"]);
    let o = gomimo(dir.path(), &args);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("ablation.csv").exists());
    assert!(dir.path().join("ablate-input.manifest.toml").exists());
}
