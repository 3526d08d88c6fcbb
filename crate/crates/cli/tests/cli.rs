use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(cmd: &str, config: &str, out: &Path) -> Output {
    let cfg = out.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_skewprod"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .env("SKEWPROD_OUT_DIR", out)
        .output()
        .unwrap()
}

fn result(out: &Path, cmd: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{cmd}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn check_hypotheses_on_default_pld() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("check-hypotheses", "[model]\nkind = \"pld\"\n", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = result(dir.path(), "check-hypotheses");
    assert_eq!(v["schema_version"], "1");
    let kappa = v["result"]["hypotheses"]["kappa"].as_f64().unwrap();
    assert!((kappa - 2.8218695).abs() < 1e-6);
}

#[test]
fn mme_on_mobius_has_zero_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("mme", "[model]\nkind = \"mobius\"\nbeta = 2.0\n[mme]\nsamples = 1000\nseed = 1\n", dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = result(dir.path(), "mme");
    assert!(v["result"]["exponent"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["result"]["entropy"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nkind = \"mobius\"\nbeta = 2.0\n[boundary_approx]\nn = [6]\ntarget = \"0101\"\n";
    let o = run("boundary-approx", cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("parry", "[model]\nkind = \"pld\"\nbogus = 1\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("density", "[model]\nkind = \"pld\"\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[density]"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = "[model]\nkind = \"mobius\"\nbeta = 2.0\n[boundary_approx]\ndelta = 0.1\nn = [6, 18]\ntarget = \"0101\"\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("boundary-approx", cfg, a.path()).status.code(), Some(0));
    assert_eq!(run("boundary-approx", cfg, b.path()).status.code(), Some(0));
    for f in ["boundary-approx.json", "boundary_trace.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("boundary_trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,distance,chi,N,M,delta_n");
}

#[test]
fn exhausted_budget_exits_with_search_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("density", "[model]\nkind = \"pld\"\n[density]\nx0 = 0.3\nmesh = 0.01\nbudget = 5\n", dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn noncommuting_model_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nkind = \"pld\"\n[reduce_word]\nx = 0.3\nrandom_words = 10\nmax_len = 10\nseed = 1\n";
    let o = run("reduce-word", cfg, dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn occupation_needs_exactly_one_start() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("occupation", "[model]\nkind = \"arctan\"\n[occupation]\neps = 0.05\nn = [10]\nseeds = 2\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        "occupation",
        "[model]\nkind = \"arctan\"\n[occupation]\neps = 0.05\nn = [10, 100]\nseeds = 2\nx0 = 0.5\n",
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("occupation.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,mean_fraction,stderr,seeds");
    assert_eq!(csv.lines().count(), 3);
}
