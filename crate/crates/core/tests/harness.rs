use std::process::Command;
use std::time::Instant;

use cfmc::harness::*;
use cfmc::metrics::{mean, percentile};
use cfmc::Error;

fn spec(algs: &str, trials: usize, dir: &std::path::Path) -> CampaignSpec {
    let mut s = CampaignSpec::default();
    s.algorithms = parse_algorithms(algs).unwrap();
    s.trials = trials;
    s.out_dir = dir.to_path_buf();
    s.params.record_runtime = false;
    s.params.mmf.n_candidates = 10;
    s
}

#[test]
fn single_unicast_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&spec("unicast", 1, dir.path()), 1).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].status, TrialStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(csv.lines().count(), 2);
    let cdf = read_cdf(&cdf_path(dir.path(), Algorithm::Unicast)).unwrap();
    assert_eq!(cdf.len(), 1);
    assert_eq!(cdf[0].1, 1.0);
}

#[test]
fn records_per_trial_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&spec("heuristic,unicast", 4, dir.path()), 1).unwrap();
    assert_eq!(out.records.len(), 8);
    for (i, r) in out.records.iter().enumerate() {
        assert_eq!(r.trial, i / 2);
        assert_eq!(r.seed, trial_seed(1, i / 2));
    }
    for s in &out.summary {
        let v: Vec<f64> = out.records.iter().filter(|r| r.algorithm == s.algorithm).map(|r| r.min_se).collect();
        assert!((s.mean_min_se - mean(&v).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn identical_specs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_campaign(&spec("sea,sdr_g,heuristic,unicast", 3, a.path()), 1).unwrap();
    run_campaign(&spec("sea,sdr_g,heuristic,unicast", 3, b.path()), 2).unwrap();
    for f in ["records.csv", "summary.csv", "cdf_sea.txt", "cdf_sdr_g.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn sdr_baselines_share_the_relaxation() {
    let s = spec("sdr_d,sdr_g,sdr_upper", 1, std::path::Path::new("."));
    let recs = run_trial(&s, 0).unwrap();
    let fps: Vec<_> = recs.iter().map(|r| r.relaxed_fingerprint.unwrap()).collect();
    assert!(fps.windows(2).all(|w| w[0] == w[1]));
    assert!(recs.windows(2).all(|w| w[0].channel_fingerprint == w[1].channel_fingerprint));
}

#[test]
fn cdf_file_matches_percentile() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&spec("heuristic", 9, dir.path()), 1).unwrap();
    let pts = read_cdf(&cdf_path(dir.path(), Algorithm::Heuristic)).unwrap();
    assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    let samples: Vec<f64> = out.records.iter().map(|r| r.min_se).collect();
    // With n points at probabilities i/n, interpolating order statistics at
    // rank q(n−1) is the same as reading the file values directly.
    let from_file: Vec<f64> = pts.iter().map(|p| p.0).collect();
    for q in [0.0, 10.0, 50.0, 90.0, 100.0] {
        assert!((percentile(&from_file, q).unwrap() - percentile(&samples, q).unwrap()).abs() < 1e-12);
    }
    assert!((out.summary[0].p10_min_se - percentile(&samples, 10.0).unwrap()).abs() < 1e-12);
}

#[test]
fn unwritable_output_fails_before_compute() {
    let file = tempfile::NamedTempFile::new().unwrap();
    let mut s = spec("sea", 1000, file.path());
    s.out_dir = file.path().join("sub");
    let start = Instant::now();
    let r = run_campaign(&s, 1);
    assert!(matches!(r, Err(Error::Io(_))));
    assert!(start.elapsed().as_secs() < 5);
}

#[test]
fn toml_config_sections() {
    let text = r#"
        [scenario]
        preset = "paper4x8"
        group_sizes = [2, 2]
        [scenario.pathloss]
        shadow_std_db = 6.0
        [algorithms]
        list = ["heuristic", "unicast", "heuristic"]
        [params]
        trials = 7
        seed = 99
        emphasis = 1.3
        regularizer = "noise"
        n_candidates = 5
    "#;
    let s = CampaignSpec::from_toml_str(text).unwrap();
    assert_eq!(s.scenario.num_aps, 4);
    assert_eq!(s.scenario.antennas_per_ap, 8);
    assert_eq!(s.scenario.max_power_per_ap, 2.0);
    assert_eq!(s.scenario.group_sizes, vec![2, 2]);
    assert_eq!(s.scenario.pathloss.shadow_std_db, 6.0);
    assert_eq!(s.scenario.pathloss.slope_db, 36.7);
    assert_eq!(s.scenario.rng_seed, 99);
    assert_eq!(s.algorithms, vec![Algorithm::Heuristic, Algorithm::Unicast]);
    assert_eq!(s.trials, 7);
    assert_eq!(s.params.emphasis, 1.3);
    assert_eq!(s.params.mmf.n_candidates, 5);
}

#[test]
fn bad_configs_rejected() {
    for text in [
        "[scenario]\nbogus = 1\n",
        "[params]\ntrials = 0\n",
        "[algorithms]\nlist = []\n",
        "[algorithms]\nlist = [\"dca\"]\n",
        "[scenario]\nnum_aps = 5\n",
        "[params]\nemphasis = 0.5\n",
        "[extra]\n",
    ] {
        assert!(matches!(CampaignSpec::from_toml_str(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn desk_scale_campaign_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec("sea,heuristic,unicast", 20, dir.path());
    s.params.record_runtime = true;
    let start = Instant::now();
    let out = run_campaign(&s, 1).unwrap();
    assert!(!out.any_fatal());
    assert!(start.elapsed().as_secs() < 600);
}

#[test]
fn cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[params]\nrecord_runtime = false\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cfmc"))
        .args(["--config", cfg.to_str().unwrap(), "--preset", "small", "--algorithms", "heuristic,unicast"])
        .args(["--trials", "2", "--seed", "5", "--threads", "1", "--out", dir.path().to_str().unwrap()])
        .env("RUST_LOG", "error")
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,5,heuristic,"));

    let bad = Command::new(env!("CARGO_BIN_EXE_cfmc"))
        .args(["--preset", "nope", "--out", dir.path().to_str().unwrap()])
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
