use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn tcsm(out: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tcsm"));
    cmd.arg("--out").arg(out).args(args).env_remove("TCSM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

/// Run directories under `<out>/<sub>/`, oldest first.
fn run_dirs(out: &Path, sub: &str) -> Vec<PathBuf> {
    let Ok(rd) = fs::read_dir(out.join(sub)) else {
        return Vec::new();
    };
    let mut dirs: Vec<PathBuf> = rd.map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn only_run(out: &Path, sub: &str) -> PathBuf {
    let dirs = run_dirs(out, sub);
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_digests(dir: &Path) -> Value {
    let m = json(&dir.join("manifest.json"));
    let outputs = m["outputs"].as_object().unwrap();
    assert!(!outputs.is_empty());
    for (name, digest) in outputs {
        let bytes = fs::read(dir.join(name)).unwrap();
        assert_eq!(digest.as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)), "{name}");
    }
    m
}

#[test]
fn energy_prints_and_records() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(tmp.path(), &["energy", "--n", "5", "--lambda", "1", "--r", "4"], &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "12.5");
    let dir = only_run(tmp.path(), "energy");
    let e = json(&dir.join("energy.json"));
    assert_eq!(e["energy_exact"], "25/2");
    let m = assert_digests(&dir);
    assert_eq!(m["subcommand"], "energy");
    assert_eq!(m["tool"], "tcsm");
}

#[test]
fn range_defaults_to_full() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(tmp.path(), &["energy", "--n", "3", "--lambda", "1/2"], &[]);
    assert_eq!(stdout(&o), "3");
}

#[test]
fn degeneracy_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(tmp.path(), &["degeneracy", "--s", "4", "--regime", "truncated"], &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3");
    let o = tcsm(tmp.path(), &["degeneracy", "--s", "4", "--regime", "full", "--n", "5"], &[]);
    assert_eq!(stdout(&o), "5");
    let o = tcsm(tmp.path(), &["degeneracy", "--s", "6", "--regime", "full", "--n", "4"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constraints_json_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(tmp.path(), &["constraints", "--n", "4", "--lambda", "1", "--r", "2", "--k", "2"], &[]);
    assert!(o.status.success());
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["dimension"], 1);
    assert_eq!(printed["basis"][0]["2"], "1");
    assert_eq!(printed["basis"][0]["1,1"], "14/5");
    let dir = only_run(tmp.path(), "constraints");
    assert_eq!(json(&dir.join("constraints.json")), printed);
    assert_digests(&dir);
}

#[test]
fn usage_errors_exit_two_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let missing_seed = tcsm(tmp.path(), &["density", "--n", "3", "--lambda", "1"], &[]);
    assert_eq!(missing_seed.status.code(), Some(2));
    let bad_range = tcsm(tmp.path(), &["energy", "--n", "5", "--lambda", "1", "--r", "7"], &[]);
    assert_eq!(bad_range.status.code(), Some(2));
    let negative = tcsm(tmp.path(), &["energy", "--n", "5", "--lambda", "-1"], &[]);
    assert_eq!(negative.status.code(), Some(2));
    let unseeded = tcsm(tmp.path(), &["reproduce", "fig1"], &[]);
    assert_eq!(unseeded.status.code(), Some(2));
    let threads = tcsm(tmp.path(), &["energy", "--n", "3", "--lambda", "1"], &[("TCSM_THREADS", "zero")]);
    assert_eq!(threads.status.code(), Some(2));
    assert!(run_dirs(tmp.path(), "energy").is_empty());
    assert!(run_dirs(tmp.path(), "density").is_empty());
    assert!(run_dirs(tmp.path(), "reproduce").is_empty());
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "n = 3\nlambda = \"2\"\n").unwrap();
    let cfg_arg = cfg.to_str().unwrap();
    let o = tcsm(tmp.path(), &["--config", cfg_arg, "energy"], &[]);
    assert_eq!(stdout(&o), "7.5");
    let o = tcsm(tmp.path(), &["--config", cfg_arg, "energy", "--n", "5", "--lambda", "1"], &[]);
    assert_eq!(stdout(&o), "12.5");
    fs::write(&cfg, "[model]\nn = 3\n").unwrap();
    let o = tcsm(tmp.path(), &["--config", cfg_arg, "energy"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampling_runs_are_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "density", "--n", "4", "--lambda", "1", "--r", "2", "--seed", "11", "--samples", "20000", "--burn-in", "500",
        "--chains", "4", "--write-samples",
    ];
    for threads in ["1", "4"] {
        let o = tcsm(tmp.path(), &args, &[("TCSM_THREADS", threads)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let dirs = run_dirs(tmp.path(), "density");
    assert_eq!(dirs.len(), 2);
    for name in ["density.csv", "samples.csv", "diagnostics.json"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
    let (a, b) = (assert_digests(&dirs[0]), assert_digests(&dirs[1]));
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["threads"], 1);
    assert_eq!(b["threads"], 4);
    assert_eq!(a["seed"], 11);
    assert!(a["rng"].as_str().unwrap().contains("ChaCha8"));
    assert!(a["normalization"].as_str().unwrap().contains("never computed"));
    let runs = a["sampling"].as_array().unwrap();
    assert_eq!(runs[0]["samples"], 20000);
    assert_eq!(runs[0]["chains"], 4);
    let rate = runs[0]["acceptance_rate"].as_f64().unwrap();
    assert!((0.2..=0.7).contains(&rate), "{rate}");

    let csv = fs::read_to_string(dirs[0].join("density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,n,err"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    let integral: f64 = rows.iter().map(|r| r[1]).sum::<f64>() * 0.1;
    assert!((integral - 4.0).abs() < 0.01, "{integral}");
}

#[test]
fn algebra_check_passes_on_small_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(
        tmp.path(),
        &["algebra-check", "--n", "4", "--lambda", "1/2", "--r", "2", "--polys", "3", "--max-degree", "4", "--s-max", "6"],
        &[],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    assert_digests(&only_run(tmp.path(), "algebra-check"));
}

#[test]
fn reproduce_table2_without_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tcsm(tmp.path(), &["reproduce", "table2", "--lambda", "1/3"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).ends_with("0 nonzero residuals"), "{}", stdout(&o));
    let dir = only_run(tmp.path(), "reproduce");
    let relations = fs::read_to_string(dir.join("relations.csv")).unwrap();
    assert!(relations.starts_with("n,r,k,basis,relation,residual\n"));
    assert!(relations.lines().skip(1).all(|l| l.ends_with(",0")));
    assert_digests(&dir);
}
