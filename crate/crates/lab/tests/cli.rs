use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nonlocal_lab::config::Config;
use nonlocal_lab::report::{emit_report, read_solution, Format, RECORD_HEADER};
use nonlocal_core::solver::solve;
use sha2::{Digest, Sha256};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn constants_reports_c1_of_the_d1_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["constants"], &configs().join("constants_d1.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("C1 = "));
    let recs = json_lines(&dir.path().join("report.jsonl"));
    let c1 = recs.iter().find(|r| r["check"] == "C1").unwrap();
    // ω1 (1/(2 - 1/2) + 1/(1/2)) + M0/f(1) with ω1 = 2 and M0 = 2∫_1^{16/9} s^{-3/2} ds = 1
    assert!((c1["lhs"].as_f64().unwrap() - 19.0 / 3.0).abs() < 1e-12);
}

#[test]
fn wrong_delta2_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-lemmas"], &configs().join("wrong_delta2.toml"), dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("witness: weak_scaling:upper"));
    let recs = json_lines(&dir.path().join("report.jsonl"));
    let bad = recs.iter().find(|r| r["pass"] == false).unwrap();
    assert!(bad["inputs"]["s"].as_f64().unwrap() > 1.0);
}

#[test]
fn probe_fixture_recovers_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["probe"], &configs().join("probe_fixture.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let recs = json_lines(&dir.path().join("report.jsonl"));
    let fits: Vec<_> = recs.iter().filter(|r| r["check"] == "probe:alpha_fixture").collect();
    assert_eq!(fits.len(), 2);
    assert!(fits.iter().all(|r| r["lhs"].as_f64().unwrap() <= 0.01));
    let profile = std::fs::read_to_string(dir.path().join("profile_0.csv")).unwrap();
    assert!(profile.starts_with("k,radius,osc\n"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[kernel]\nalpah = 0.5\n");
    assert_eq!(run(&["constants"], &bad, dir.path()).status.code(), Some(2));
    assert_eq!(run(&["constants"], &dir.path().join("missing.toml"), dir.path()).status.code(), Some(2));
    assert_eq!(run(&["transmogrify"], &configs().join("example.toml"), dir.path()).status.code(), Some(2));
    let bad_family = write_config(dir.path(), "[kernel]\nfamily = \"gaussian\"\n");
    assert_eq!(run(&["constants"], &bad_family, dir.path()).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-lab")).arg("solve").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_out_dir_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, b"x").unwrap();
    let o = run(&["constants"], &configs().join("example.toml"), &file.join("sub"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("example.toml");
    for cmd in ["verify-lemmas", "solve", "levy"] {
        let oa = run(&[cmd, "--seed", "7"], &cfg, a.path());
        let ob = run(&[cmd, "--seed", "7"], &cfg, b.path());
        assert_eq!(oa.status.code(), Some(0), "{cmd}");
        assert_eq!(ob.status.code(), Some(0), "{cmd}");
        let ra = std::fs::read(a.path().join("report.jsonl")).unwrap();
        let rb = std::fs::read(b.path().join("report.jsonl")).unwrap();
        assert_eq!(ra, rb, "{cmd}");
    }
    let sa = std::fs::read(a.path().join("solution.csv")).unwrap();
    assert_eq!(sa, std::fs::read(b.path().join("solution.csv")).unwrap());
}

#[test]
fn seed_changes_bump_samples() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("example.toml");
    run(&["verify-lemmas", "--seed", "1"], &cfg, a.path());
    run(&["verify-lemmas", "--seed", "2"], &cfg, b.path());
    assert_ne!(std::fs::read(a.path().join("report.jsonl")).unwrap(), std::fs::read(b.path().join("report.jsonl")).unwrap());
}

#[test]
fn json_records_follow_schema() {
    let dir = tempfile::tempdir().unwrap();
    run(&["levy"], &configs().join("example.toml"), dir.path());
    let recs = json_lines(&dir.path().join("report.jsonl"));
    assert!(!recs.is_empty());
    for r in recs {
        let obj = r.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut want = RECORD_HEADER.to_vec();
        want.sort_unstable();
        assert_eq!(keys, want);
        assert!(obj["check"].is_string());
        assert!(obj["pass"].is_boolean());
        assert!(obj["inputs"].as_object().unwrap().values().all(|v| v.is_number() || v.is_null()));
        for k in ["lhs", "rhs", "margin"] {
            assert!(obj[k].is_number() || obj[k].is_null(), "{k}");
        }
    }
}

#[test]
fn manifest_hashes_config_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("constants_d1.toml");
    run(&["constants", "--format", "csv"], &cfg, dir.path());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let want = format!("{:x}", Sha256::digest(std::fs::read(&cfg).unwrap()));
    assert_eq!(m["config_hash"], want.as_str());
    assert_eq!(m["command"], "constants");
    assert_eq!(m["checks_failed"], 0);
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn solution_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = configs().join("midpoint_solve.toml");
    let o = run(&["solve", "--format", "csv"], &path, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rows = read_solution(&dir.path().join("solution.csv")).unwrap();

    let (cfg, _) = Config::load(&path).unwrap();
    let spec = cfg.grid.problem(&cfg.kernel, &cfg.class, &cfg.quadrature.config()).unwrap();
    let u = solve(&spec).unwrap().u;
    assert_eq!(rows.len(), u.grid.len());
    for (n, (coords, v)) in rows.iter().enumerate() {
        assert_eq!(coords[0].to_bits(), u.grid.node(n).x().to_bits());
        assert_eq!(v.to_bits(), u.values[n].to_bits());
    }
}

#[test]
fn empty_report_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = emit_report(&[], Format::Csv, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap(), "check,inputs,lhs,rhs,margin,pass\n");
    let p = emit_report(&[], Format::Json, dir.path()).unwrap();
    assert_eq!(std::fs::read(p).unwrap(), b"");
}
