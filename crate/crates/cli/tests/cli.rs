//! End-to-end behavior of the `gperim` binary: exit codes, config file
//! merging, output format, and rerun determinism. Everything runs the real
//! executable via `CARGO_BIN_EXE_gperim` with small sample counts.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn gperim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gperim"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should not be signalled")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

/// Fresh per-test scratch directory; cleaned up by the caller when it cares.
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gperim-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bad_inputs_exit_2() {
    let shape = gperim(&["profile", "--shape", "nonsense"]);
    assert_eq!(exit_code(&shape), 2, "unknown shape: {}", stderr(&shape));

    let grid = gperim(&["profile", "--levels", "4:1:10"]);
    assert_eq!(exit_code(&grid), 2, "reversed grid: {}", stderr(&grid));
    assert!(stderr(&grid).contains("gperim:"));

    let samples = gperim(&["coarea", "--samples", "100"]);
    assert_eq!(exit_code(&samples), 2, "tiny run: {}", stderr(&samples));

    let dir = scratch("badcfg");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "nmax = 5\n").unwrap();
    let unknown_key = gperim(&["cube", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&unknown_key), 2, "{}", stderr(&unknown_key));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn uncovered_level_grid_exits_4() {
    // the grid stops at u = 1 but most of the level distribution lies above it
    let out = gperim(&[
        "coarea", "--shape", "ball", "--levels", "0:1:9", "--samples", "20000",
    ]);
    assert_eq!(exit_code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("grid misses"), "{}", stderr(&out));
}

#[test]
fn invariant_gate_passes_clean_and_catches_a_seeded_defect() {
    let clean = gperim(&["validate", "--quick"]);
    assert_eq!(exit_code(&clean), 0, "{}", stderr(&clean));
    assert!(stdout(&clean).contains("0 failed"), "{}", stdout(&clean));

    let biased = gperim(&["validate", "--quick", "--inject-gradient-bias", "1e-3"]);
    assert_eq!(exit_code(&biased), 3, "{}", stderr(&biased));
    assert!(stdout(&biased).contains("FAIL"), "{}", stdout(&biased));
    assert!(stderr(&biased).contains("failed invariants"), "{}", stderr(&biased));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = scratch("merge");
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        "shape = \"halfspace:a=1,0\"\nsamples = 5000\nseed = 7\n",
    )
    .unwrap();
    let base = dir.join("profile");
    let out = gperim(&[
        "profile",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["config"]["shape"], "halfspace:a=1,0");
    assert_eq!(json["config"]["samples"], 5000);
    // the flag overrides the file value
    assert_eq!(json["config"]["seed"], 9);
    assert!(json["results"].is_object());
    assert!(json["version"].is_string());

    let csv = fs::read_to_string(base.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# version: "));
    let config_line = lines.next().unwrap();
    assert!(config_line.starts_with("# config: "));
    assert!(config_line.contains("\"seed\":9"), "{config_line}");
    assert_eq!(lines.next().unwrap(), "r,value,std_error");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn cube_csv_has_one_row_per_index() {
    let dir = scratch("cubecsv");
    let base = dir.join("cube");
    let out = gperim(&[
        "cube",
        "--n-max",
        "64",
        "--mc-samples",
        "20000",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let csv = fs::read_to_string(base.with_extension("csv")).unwrap();
    // two comment lines, one column header, then one row per box index
    assert_eq!(csv.lines().count(), 64 + 3, "{csv}");
    assert!(csv.ends_with('\n'));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["results"]["n_max"], 64);
    assert!(json["results"]["limit_enclosure"]["width"].as_f64().unwrap() > 0.0);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn omitting_out_streams_to_stdout() {
    let out = gperim(&["cube", "--n-max", "8", "--mc-samples", "5000"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# version: "), "{text}");
    assert!(text.contains("# config: "));
    assert!(text.contains("\"results\""));
}

#[test]
fn identical_configs_rerun_byte_identical() {
    let dir = scratch("rerun");
    let args = |base: &PathBuf| {
        vec![
            "cube".to_string(),
            "--n-max".into(),
            "32".into(),
            "--mc-samples".into(),
            "20000".into(),
            "--out".into(),
            base.to_str().unwrap().into(),
        ]
    };
    let first = dir.join("a");
    let second = dir.join("b");
    for base in [&first, &second] {
        let out = Command::new(env!("CARGO_BIN_EXE_gperim"))
            .args(args(base))
            .output()
            .unwrap();
        assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    }
    for ext in ["csv", "json"] {
        let a = fs::read(first.with_extension(ext)).unwrap();
        let b = fs::read(second.with_extension(ext)).unwrap();
        assert_eq!(a, b, "{ext} outputs differ between identical runs");
    }
    let _ = fs::remove_dir_all(&dir);
}
