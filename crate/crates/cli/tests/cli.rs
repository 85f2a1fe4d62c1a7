use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multiscale"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn check_schedule_classifies_basic_and_tight_convergent() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["check-schedule", "--growth", "2", "--a0", "0", "--beta", "1", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("Basic"));
    let o = run(&[
        "check-schedule", "--growth", "8", "--a0", "1", "--decay", "2", "--beta", "1", "--out", &out_arg(tmp.path()),
    ]);
    assert_eq!(stdout(&o).lines().next(), Some("TightConvergent"));
    let m = manifest(tmp.path());
    assert_eq!(m["regime"], "TightConvergent");
    // 64 ratio rows plus header.
    let csv = std::fs::read_to_string(tmp.path().join("ratios.csv")).unwrap();
    assert_eq!(csv.lines().count(), 66);
}

#[test]
fn missing_input_is_a_configuration_error_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["decompose-image", "--input", "/no/such/image.pgm", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/image.pgm"));
}

#[test]
fn constant_image_has_one_nonzero_layer() {
    let tmp = tempfile::tempdir().unwrap();
    let img = tmp.path().join("flat.pgm");
    let mut pgm = String::from("P2\n8 6\n255\n");
    for _ in 0..6 {
        pgm.push_str(&vec!["128"; 8].join(" "));
        pgm.push('\n');
    }
    std::fs::write(&img, pgm).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["decompose-image", "--input", &img.to_string_lossy(), "--n-max", "4", "--out", &out_arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut nonzero = 0;
    for n in 0..=4 {
        let text = std::fs::read_to_string(out.join(format!("layer_{n:02}.csv"))).unwrap();
        if text.split([',', '\n']).filter(|t| !t.is_empty()).any(|t| t.parse::<f64>().unwrap() != 0.0) {
            nonzero += 1;
        }
    }
    assert_eq!(nonzero, 1);
    let res = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    let last: f64 = res.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-8);
}

#[test]
fn phantom_energy_identity_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["decompose-image", "--input", "phantom", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f_sq = 19_555_000.0;
    let energy = std::fs::read_to_string(tmp.path().join("energy.csv")).unwrap();
    let mut lines = energy.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "cumulative_gap").unwrap();
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(v <= 1e-5 * f_sq);
        rows += 1;
    }
    assert_eq!(rows, 13);
}

#[test]
fn outputs_are_deterministic_and_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = |dir: &Path, threads: &str| -> Vec<String> {
        ["reconstruct-eit", "--m", "8", "--k", "6", "--n-max", "2", "--noise", "0.05", "--seed", "11"]
            .iter()
            .map(|s| s.to_string())
            .chain(["--threads".into(), threads.into(), "--out".into(), out_arg(dir)])
            .collect()
    };
    let run_in = |dir: &Path, threads: &str| {
        let o = bin().args(args(dir, threads)).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        files(dir)
    };
    let first = run_in(&a, "1");
    let again = run_in(&a, "1");
    assert_eq!(first, again);
    let other = run_in(&b, "3");
    for (name, bytes) in &first {
        if name != "manifest.json" {
            assert_eq!(Some(bytes), other.get(name), "{name}");
        }
    }
    assert_eq!(first.len(), other.len());
}

#[test]
fn noise_seed_changes_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    let mut data = Vec::new();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let o = run(&[
            "reconstruct-eit", "--m", "6", "--k", "4", "--n-max", "0", "--noise", "0.05", "--seed", seed, "--out",
            &out_arg(&dir),
        ]);
        assert!(o.status.success());
        data.push(std::fs::read(dir.join("ntd_data.csv")).unwrap());
    }
    assert_ne!(data[0], data[1]);
}

#[test]
fn manifest_lists_existing_artifacts_and_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["register-shift", "--shift", "0.25", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success());
    let m = manifest(tmp.path());
    assert_eq!(m["command"], "register-shift");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["shift"], "0.25");
    assert_eq!(m["config"]["n_max"], "8");
    let arts = m["artifacts"].as_array().unwrap();
    assert!(!arts.is_empty());
    for a in arts {
        assert!(tmp.path().join(a.as_str().unwrap()).is_file());
    }
    let shifts = std::fs::read_to_string(tmp.path().join("shifts.csv")).unwrap();
    let last: f64 = shifts.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((last - 0.25).abs() < 1e-3);
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# schedule\ngrowth = 8\na0 = 1   # tight\ndecay = 2\nn = 10\n").unwrap();
    let out = tmp.path().join("o");
    let o = run(&["check-schedule", "--config", &cfg.to_string_lossy(), "--growth", "2", "--out", &out_arg(&out)]);
    assert!(o.status.success());
    let m = manifest(&out);
    assert_eq!(m["config"]["growth"], "2");
    assert_eq!(m["config"]["a0"], "1");
    assert_eq!(m["config"]["n"], "10");
    assert_eq!(m["config"]["lambda0"], "1");
    assert_eq!(m["regime"], "Tight");
}

#[test]
fn bad_config_files_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    for text in ["growth = 8\nbogus = 1\n", "growth 8\n", "growth = eight\n", "a0 = 1\na0 = 2\n"] {
        std::fs::write(&cfg, text).unwrap();
        let o = run(&["check-schedule", "--config", &cfg.to_string_lossy(), "--out", &out_arg(tmp.path())]);
        assert_eq!(o.status.code(), Some(2), "{text:?}: {}", stderr(&o));
    }
    let o = run(&["check-schedule", "--config", "/no/such.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_settings_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = out_arg(tmp.path());
    for args in [
        vec!["decompose-image", "--a0", "1", "--decay", "2"],
        vec!["decompose-image", "--growth", "1.5"],
        vec!["reconstruct-eit", "--phantom", "/no/such.json"],
        vec!["reconstruct-eit", "--m", "2", "--k", "9"],
        vec!["reconstruct-eit", "--noise", "-1"],
        vec!["run-counterexample", "planar", "--c", "3"],
        vec!["run-counterexample", "l2", "--version", "1", "--r0", "0.9"],
        vec!["run-counterexample", "l2", "--lambdas", "5,1"],
        vec!["check-schedule", "--lambda0", "-1"],
        vec!["check-schedule", "--threads", "0"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", &d]);
        let o = run(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn planar_replay_reproduces_quarter_turns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run-counterexample", "planar", "--grid", "512", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let theta = header.iter().position(|h| *h == "theta").unwrap();
    let got: Vec<f64> = lines.map(|l| l.split(',').nth(theta).unwrap().parse().unwrap()).collect();
    let h = std::f64::consts::FRAC_PI_2;
    let want = [0.0, 0.0, 0.0, h, h, 2.0 * h, 2.0 * h, 3.0 * h, 3.0 * h];
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-9);
    }
}

#[test]
fn planar_precision_budget_exits_with_code_four() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run-counterexample", "planar", "--grid", "256", "--n-steps", "10", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("scale 9"));
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "precision_abort");
    assert_eq!(m["exit_code"], 4);
    let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn l2_versions_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    for v in ["1", "2"] {
        let dir = tmp.path().join(v);
        let o = run(&["run-counterexample", "l2", "--version", v, "--out", &out_arg(&dir)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = std::fs::read_to_string(dir.join("l2.csv")).unwrap();
        assert!(csv.lines().count() > 1);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("l2.json")).unwrap()).unwrap();
        assert!(json["rows"].as_array().unwrap().len() + 1 == csv.lines().count());
    }
}

#[test]
fn emit_flags_select_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["register-shift", "--emit", "json", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success());
    let names: Vec<String> = files(tmp.path()).into_keys().collect();
    assert_eq!(names, vec!["manifest.json".to_string(), "trace.json".to_string()]);
    let o = run(&["register-shift", "--emit", "xml", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn docs_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/formats.md")
}

/// Every CSV header column written by any subcommand appears in the format docs.
#[test]
fn every_csv_column_is_documented() {
    let docs = std::fs::read_to_string(docs_path()).expect("docs/formats.md exists");
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["decompose-image", "--n-max", "2"],
        vec!["reconstruct-eit", "--m", "6", "--k", "4", "--n-max", "1"],
        vec!["register-shift", "--n-max", "2"],
        vec!["run-counterexample", "planar", "--grid", "128", "--n-steps", "3"],
        vec!["run-counterexample", "l2", "--lambdas", "30,40"],
        vec!["check-schedule", "--n", "3"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let dir = tmp.path().join(i.to_string());
        let mut full = args.clone();
        let d = out_arg(&dir);
        full.extend(["--out", &d]);
        let o = run(&full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        for (name, bytes) in files(&dir) {
            assert!(docs.contains(&format!("`{}`", name.replace(|c: char| c.is_ascii_digit(), "N")))
                || docs.contains(&format!("`{name}`")), "{name} undocumented");
            if !name.ends_with(".csv") {
                continue;
            }
            let text = String::from_utf8(bytes).unwrap();
            let first = text.lines().next().unwrap();
            if first.split(',').all(|t| t.trim().parse::<f64>().is_ok()) {
                continue; // headerless matrix
            }
            for col in first.split(',') {
                assert!(docs.contains(&format!("`{col}`")), "column `{col}` of {name} undocumented");
            }
        }
    }
}
