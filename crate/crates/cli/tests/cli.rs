use std::path::Path;
use std::process::{Command, Output};

fn diffcodes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffcodes"))
        .args(args)
        .env_remove("DIFFCODES_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body without the timestamp comment line.
fn rows(csv: &str) -> Vec<String> {
    csv.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn generate_then_hgp_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&diffcodes(&["generate", "--kind", "diffusion", "--n", "22", "--m", "18", "--T-exponent", "1", "--seed", "3", "--out", d]));
    let json = dir.path().join("code.json");
    assert!(json.exists());
    assert!(dir.path().join("code.positions").exists());
    let meta: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    assert_eq!(meta["n_bits"], 22);
    assert_eq!(meta["n_checks"], 18);

    let out = dir.path().join("hgp");
    stdout(&diffcodes(&["hgp", "--input", json.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert!(std::fs::read_dir(&out).unwrap().count() > 0);

    let audit = stdout(&diffcodes(&["expansion-audit", "--input", json.to_str().unwrap(), "--delta", "2", "--gamma-num", "1"]));
    let report: serde_json::Value = serde_json::from_str(&audit).unwrap();
    assert!(report["certified"].is_boolean());
}

#[test]
fn decode_bench_is_independent_of_worker_count() {
    let run = |workers: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_diffcodes"))
            .args(["decode-bench", "--decoder", "flip", "--n-grid", "44,88", "--p-grid", "0.02,0.05", "--codes-per-size", "2", "--trials", "60", "--seed", "9"])
            .env("DIFFCODES_WORKERS", workers)
            .output()
            .unwrap();
        rows(&stdout(&o))
    };
    let one = run("1");
    assert_eq!(one.len(), 5);
    assert!(one[0].starts_with("schema_version,decoder,n,m,wbit,wcheck"));
    assert_eq!(one, run("3"));
}

#[test]
fn empty_p_grid_is_rejected() {
    let o = diffcodes(&["decode-bench", "--decoder", "flip", "--n-grid", "44", "--p-grid", "", "--codes-per-size", "1", "--trials", "5"]);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# bench defaults\nworkers = 1\ndecode-bench.decoder = flip\ndecode-bench.n-grid = 44\ndecode-bench.p-grid = 0.03\ndecode-bench.codes-per-size = 1\ndecode-bench.trials = 20\ndecode-bench.seed = 4\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_config = rows(&stdout(&diffcodes(&["--config", cfg, "decode-bench"])));
    assert_eq!(from_config.len(), 2);
    assert!(from_config[1].contains(",44,"));
    assert!(from_config[1].contains(",20,"));

    let overridden = rows(&stdout(&diffcodes(&["--config", cfg, "decode-bench", "--trials", "30"])));
    assert!(overridden[1].contains(",30,"), "{}", overridden[1]);
}

#[test]
fn manifest_accompanies_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("heat.csv");
    stdout(&diffcodes(&[
        "thermal", "--protocol", "heat", "--n", "44", "--tau-start", "0", "--tau-end", "1", "--delta-tau", "0.5", "--sweeps", "20", "--seed", "2", "--out",
        out.to_str().unwrap(),
    ]));
    let csv = read(&out);
    assert!(csv.starts_with("# generated_unix="));
    assert_eq!(rows(&csv).len(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("heat.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "thermal");
}

#[test]
fn selftest_passes() {
    let s = stdout(&diffcodes(&["selftest"]));
    assert!(s.contains("PASS"));
    assert!(!s.contains("FAIL"));
}
