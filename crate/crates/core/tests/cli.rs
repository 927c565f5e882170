use std::path::Path;
use std::process::{Command, Output};

use chaos_ent::xcli::experiments::example_config;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chaos-ent"));
    c.env_remove("CHAOS_ENT_OUT");
    c
}

fn run_config(text: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    bin().arg("run").arg("--config").arg(&cfg).args(extra).output().unwrap()
}

fn read_tables(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())).collect()
}

#[test]
fn list_shows_every_experiment() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    for name in ["fig1-entgen", "fig5-witness-pdfs", "fig6-dephasing-env", "markov-gap"] {
        assert!(text.contains(name), "{name}");
    }
    assert!(text.contains("Fig. 6"));
}

#[test]
fn same_seed_different_workers_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let text = example_config("fig3-noise-bounds").unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = run_config(text, tmp.path(), &["--workers", "1", "--seed", "5", "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_config(text, tmp.path(), &["--workers", "4", "--seed", "5", "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    let (ta, tb) = (read_tables(&a), read_tables(&b));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    assert!(a.join("fig3-noise-bounds.json").exists());
}

#[test]
fn seed_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = example_config("fig5-witness-pdfs").unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_config(text, tmp.path(), &["--seed", "1", "--out", a.to_str().unwrap()]);
    run_config(text, tmp.path(), &["--seed", "2", "--out", b.to_str().unwrap()]);
    assert_ne!(read_tables(&a), read_tables(&b));
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("from-env");
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, example_config("markov-gap").unwrap()).unwrap();
    let out = bin().env("CHAOS_ENT_OUT", &out_dir).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("markov-gap.csv").exists());
}

#[test]
fn missing_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = \"fig1-entgen\"\nmaster_seed = 1\n[params]\nn_q = [4]\nbig_k = 1.5\n";
    let out = run_config(text, tmp.path(), &["--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.t_max"));

    let out = run_config("experiment = \"fig1-entgen\"\n", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("master_seed"));

    let out = run_config("experiment = \"nope\"\nmaster_seed = 1\n", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_guard_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = \"fig3-noise-bounds\"\nmaster_seed = 1\n[params]\nn_q = [12]\nbig_k = 1.5\nt = 1\nepsilon = [0.01]\n";
    let out = run_config(text, tmp.path(), &["--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn csv_carries_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(example_config("fig1-entgen").unwrap(), tmp.path(), &["--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("fig1-entgen.csv")).unwrap();
    assert!(csv.starts_with("# experiment: fig1-entgen"));
    assert!(csv.contains("config_sha256"));
    assert!(csv.contains("mean_E (bits)"));
}
