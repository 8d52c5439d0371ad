use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use distill_lab::seed::{derive_seed, stream};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distill-lab"))
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn small_epl(seed: u64) -> Value {
    json!({
        "seed": seed,
        "distribution": {"family": "clustered-balls", "k": 3, "gamma": 0.4, "lambda": 1.0,
                         "lipschitz_l": 1.0, "atoms_per_ball": 6, "noise": 0.2, "seed": 99},
        "teacher": {"algo": "one-nn", "m": 60, "k": 3},
        "student": {"algo": "one-nn", "m_prime": 200},
        "pipeline": "epl",
        "trials": 20
    })
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_epl(3));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let oa = run_in(tmp.path(), &["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    let ob = run_in(tmp.path(), &["--threads", "1", "run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    assert_eq!(fs::read(a.join("result.json")).unwrap(), fs::read(b.join("result.json")).unwrap());
}

#[test]
fn failing_certificate_exits_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({
            "seed": 1,
            "distribution": {"family": "single-atom", "gamma": 0.4, "b": 1},
            "teacher": {"algo": "constant", "label": 1, "m": 5},
            "pipeline": "certify-sampler",
            "trials": 200,
            "tolerances": {"epsilon": 0.05}
        }),
    );
    let o = run_in(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(tmp.path());
    assert_eq!(r["certificates"][0]["verdict"], "fail");
}

#[test]
fn bad_config_exits_two() {
    let tmp = TempDir::new().unwrap();
    let mut bad = small_epl(1);
    bad["unknown_field"] = json!(1);
    let cfg = write_config(tmp.path(), "c.json", &bad);
    let o = run_in(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let mut dup = small_epl(1);
    dup["pipeline"] = json!("sweep-teachers");
    dup["sweep"] = json!({"k_values": [1, 3, 1], "inner": "epl"});
    let cfg = write_config(tmp.path(), "d.json", &dup);
    let o = run_in(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate k value 1"));
}

#[test]
fn missing_file_exits_four() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["run", "does-not-exist.json"]);
    assert_eq!(code(&o), 4);
    let o = run_in(tmp.path(), &["show", "nope.json"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn single_k_sweep_matches_a_plain_run() {
    let tmp = TempDir::new().unwrap();
    let base = 21;
    let cfg = write_config(tmp.path(), "s.json", &small_epl(base));
    let s_dir = tmp.path().join("sweep");
    let o = run_in(tmp.path(), &["sweep", cfg.to_str().unwrap(), "--k", "3", "--out", s_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(s_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let plain = write_config(tmp.path(), "p.json", &small_epl(derive_seed(base, stream::SWEEP, 0)));
    let p_dir = tmp.path().join("plain");
    let o = run_in(tmp.path(), &["run", plain.to_str().unwrap(), "--out", p_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let swept = result(&s_dir)["sweep_rows"][0]["mean_clean_loss"].as_f64().unwrap();
    let direct = result(&p_dir)["losses"]["mean_student_clean_loss"].as_f64().unwrap();
    assert_eq!(swept, direct);
}

#[test]
fn lower_bound_and_show() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["lower-bound", "--big-m", "50", "--m", "1,10,49"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(tmp.path());
    let rows = r["lower_bound_rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row["expected_error"].as_f64().unwrap() > 0.125);
    }
    assert_eq!(r["losses"]["single_draw_sampler_tv"].as_f64().unwrap(), 0.0);

    let o = run_in(tmp.path(), &["show", "result.json"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("single_draw_sampler_tv"));
    assert!(text.contains("49"));
}

#[test]
fn seed_override_changes_only_the_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_epl(5));
    let out = tmp.path().join("o");
    let o = run_in(tmp.path(), &["run", cfg.to_str().unwrap(), "--seed", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(result(&out)["config"]["seed"], 6);
}
