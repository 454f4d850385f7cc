use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use speller::formats::{read_model, read_session_log};
use speller::manifest::RunManifest;

fn speller(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speller"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = speller(args, out);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn value(stdout: &str, key: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key:?} in {stdout}"));
    line.rsplit(':').next().unwrap().trim().parse().unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn itr_reproduces_reference_values() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(&["itr", "--nc", "44", "--t", "207.1", "--alphabet", "42"], d.path());
    assert!((value(&s, "practical ITR") - 1.146).abs() < 1e-3);
    let s = ok(&["itr", "--wolpaw", "--classes", "2", "--pc", "0.857142857"], d.path());
    assert!((value(&s, "Wolpaw") - 0.408).abs() < 5e-4);
    let s = ok(&["itr", "--confusion", "perfect", "--ratio", "1:6"], d.path());
    assert!((value(&s, "mutual information (bits/trial)") - 0.592).abs() < 5e-4);
    let s = ok(&["itr", "--confusion", "1,0,0,1", "--prior", "0.142857142857", "--trials-per-sec", "2"], d.path());
    assert!((value(&s, "mutual information (bits/s)") - 2.0 * 0.5917).abs() < 1e-3);
    assert!(s.contains("Fano lower bound"));
    let m = RunManifest::read(d.path()).unwrap();
    assert!(m.verify(d.path()).unwrap());
}

#[test]
fn itr_rejects_incoherent_flags() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["itr"][..],
        &["itr", "--nc", "44"],
        &["itr", "--t", "10"],
        &["itr", "--nc", "44", "--t", "207.1", "--wolpaw", "--classes", "2", "--pc", "0.9"],
        &["itr", "--classes", "2", "--pc", "0.9"],
        &["itr", "--confusion", "perfect"],
        &["itr", "--confusion", "perfect", "--ratio", "1:6", "--prior", "0.2"],
        &["itr", "--confusion", "0.5,0.5,0.1", "--ratio", "1:6"],
        &["itr", "--confusion", "0.5,0.6,0.1,0.9", "--ratio", "1:6"],
        &["itr", "--nc", "44", "--t", "0"],
    ] {
        let o = speller(args, d.path());
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn mc_group_statistics() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(&["mc", "--runs", "100000"], d.path());
    let row = s.lines().find(|l| l.split_whitespace().nth(1) == Some(">")).unwrap();
    let g: f64 = row.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((1.5..=1.7).contains(&g), "{g}");

    let mut r = csv::Reader::from_path(d.path().join("mc.csv")).unwrap();
    let head = r.headers().unwrap().clone();
    let col = head.iter().position(|h| h == "mean_group").unwrap();
    let first12: Vec<f64> = r.records().take(12).map(|x| x.unwrap()[col].parse().unwrap()).collect();
    assert!(first12.iter().sum::<f64>() / 12.0 <= 2.0);

    let s = ok(&["mc", "--uniform", "--runs", "100000"], d.path());
    let groups: Vec<f64> = s.lines().skip(2).map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(groups.len(), 42);
    assert!(groups.iter().all(|g| (g - 4.0).abs() < 0.05));

    let s = ok(&["mc", "--runs", "1"], d.path());
    for l in s.lines().skip(2) {
        let g: f64 = l.split_whitespace().nth(3).unwrap().parse().unwrap();
        assert_eq!(g.fract(), 0.0);
    }
    let bad = d.path().join("bad.txt");
    fs::write(&bad, "A 1.0\n").unwrap();
    assert!(!speller(&["mc", "--table", bad.to_str().unwrap()], d.path()).status.success());
}

#[test]
fn oracle_train_and_spell() {
    let d = tempfile::tempdir().unwrap();
    let train = d.path().join("train");
    let s = ok(&["train", "--config", "medium_oracle", "--cv-repeats", "2"], &train);
    assert!(s.contains("cv accuracy (10-fold x 2): 100.00%"), "{s}");
    assert!(s.contains("above chance"));
    let model = train.join("model.p3md");
    let m = RunManifest::read(&train).unwrap();
    assert!(m.verify(&train).unwrap());
    assert_eq!(read_model(&model).unwrap().manifest, m.digest);

    let spell = d.path().join("spell");
    let s = ok(&["spell", "--config", "medium_oracle", "--model", model.to_str().unwrap()], &spell);
    assert!(s.contains("N_c = 44, selections = 44"), "{s}");
    assert!(s.contains("+ 129.0 s pauses"));
    // The printed breakdown adds up to the printed total.
    let line = s.lines().find(|l| l.trim_start().starts_with("T = ")).unwrap();
    let nums: Vec<f64> = line
        .split(|c: char| !(c.is_ascii_digit() || c == '.'))
        .filter(|t| !t.is_empty() && *t != ".")
        .map(|t| t.parse().unwrap())
        .collect();
    let (t, trials, iti_ms, overhead_us, pauses) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    assert!((trials * (iti_ms / 1e3 + overhead_us / 1e6) + pauses - t).abs() < 1e-6);
    let (log, digest) = read_session_log(std::io::BufReader::new(fs::File::open(spell.join("session_0.jsonl")).unwrap())).unwrap();
    assert_eq!(digest, RunManifest::read(&spell).unwrap().digest);
    assert_eq!(log.selections().count(), 44);

    let s = ok(&["spell", "--config", "medium_oracle", "--model", model.to_str().unwrap(), "--sentence", "*"], &spell);
    assert!(s.contains("N_c = 1, selections = 1"), "{s}");

    let o = speller(&["spell", "--config", "fast_oracle", "--model", model.to_str().unwrap()], &spell);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ITI"));
}

#[test]
fn noise_preset_is_flagged_at_chance() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(&["train", "--config", "fast_noise_only", "--cv-repeats", "1"], d.path());
    assert!(s.contains("(at chance)"), "{s}");
}

#[test]
fn invalid_configs_fail() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "name = \"x\"\n[subject]\npreset = \"oracle\"\n[protocol]\nduty_cycle = 1.5\n").unwrap();
    let o = speller(&["train", "--config", cfg.to_str().unwrap()], d.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("duty_cycle"));
    assert!(!speller(&["train", "--config", "no_such_preset"], d.path()).status.success());
}

#[test]
fn custom_config_file_with_relative_paths() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("words.txt"), "HI\nHELLO\n").unwrap();
    let cfg = d.path().join("c.toml");
    fs::write(
        &cfg,
        "name = \"custom\"\ndictionary = \"words.txt\"\nsentence = \"HI\"\n[subject]\npreset = \"oracle\"\n[protocol]\niti_ms = 400\n",
    )
    .unwrap();
    let out = d.path().join("o");
    ok(&["train", "--config", cfg.to_str().unwrap(), "--no-cv"], &out);
    let s = ok(&["spell", "--config", cfg.to_str().unwrap(), "--model", out.join("model.p3md").to_str().unwrap()], &out);
    assert!(s.contains("prompt HI*"), "{s}");
    assert!(s.contains("N_c = 3"));
}

#[test]
fn cv_reads_saved_trials_and_subsamples() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a");
    ok(&["train", "--config", "slow_oracle", "--no-cv", "--save-trials", "bin"], &a);
    let trials = a.join("trials.p3ts");
    let s = ok(&["cv", "--config", "slow_oracle", "--trials", trials.to_str().unwrap(), "--repeats", "1", "--subsample", "350"], &d.path().join("b"));
    assert!(s.contains("subsample: 350"));
    assert!(s.contains("100.00%"));
    let csv = fs::read_to_string(d.path().join("b/cv.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",350,50,"), "{csv}");
}

/// Runs `args` twice into fresh directories and compares every output byte.
fn assert_repeatable(args: &[&str]) {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let sa = ok(args, &a);
    let sb = ok(args, &b);
    assert_eq!(sa, sb, "{args:?} stdout differs");
    assert_eq!(files(&a), files(&b), "{args:?} outputs differ");
}

#[test]
fn every_command_is_seed_repeatable() {
    let d = tempfile::tempdir().unwrap();
    let model = d.path().join("m");
    ok(&["train", "--config", "slow_mid_snr", "--no-cv", "--seed", "5"], &model);
    let model = model.join("model.p3md");
    let model = model.to_str().unwrap();
    assert_repeatable(&["train", "--config", "slow_mid_snr", "--cv-repeats", "1", "--seed", "5", "--save-trials", "csv"]);
    assert_repeatable(&["cv", "--config", "slow_mid_snr", "--repeats", "1", "--seed", "6"]);
    assert_repeatable(&["spell", "--config", "slow_mid_snr", "--model", model, "--runs", "2", "--seed", "7"]);
    assert_repeatable(&["itr", "--confusion", "0.9,0.1,0.05,0.95", "--ratio", "1:6", "--seed", "8"]);
    assert_repeatable(&["mc", "--runs", "1000", "--seed", "9"]);

    // A different seed changes the outputs.
    let (a, b) = (d.path().join("x"), d.path().join("y"));
    ok(&["mc", "--runs", "1000", "--seed", "1"], &a);
    ok(&["mc", "--runs", "1000", "--seed", "2"], &b);
    assert_ne!(fs::read(a.join("mc.csv")).unwrap(), fs::read(b.join("mc.csv")).unwrap());
}
