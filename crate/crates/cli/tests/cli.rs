use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pu-risklab"))
        .args(args)
        .current_dir(dir)
        .env_remove("PU_RISKLAB_WORKERS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let schema = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (schema, rows)
}

#[test]
fn bounds_example_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bounds", "--n", "1000", "--V", "2", "--h", "0.2", "--em", "0.5", "--out", "b.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (schema, rows) = csv_rows(&dir.path().join("b.csv"));
    assert_eq!(schema, "#schema=bounds/v1");
    let header = &rows[0];
    let value = |name: &str| rows[1][header.iter().position(|h| h == name).unwrap()].clone();
    let upper: f64 = value("upper").parse().unwrap();
    assert!((upper - 0.004f64.sqrt()).abs() < 1e-12);
    assert!(value("upper").starts_with("0.06324"));
    assert_eq!(value("regime"), "Slow");
    assert_eq!(value("lower_case"), "C1");
}

#[test]
fn manifest_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"n": 50, "V": 3, "p": 0.3, "h": 0.4, "e_m": 0.5, "seed": 3}"#)
        .unwrap();
    let o = run(&["erm", "--config", "cfg.json", "--n", "80", "--out", "e.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "erm");
    assert_eq!(manifest["schema"], "erm/v1");
    assert_eq!(manifest["seed"], 3);
    // The flag overrides the file; defaults that were used are filled in.
    assert_eq!(manifest["config"]["n"], 80);
    assert_eq!(manifest["config"]["loss"], "sar");
    assert_eq!(manifest["config"]["replicates"], 1);
    let (_, rows) = csv_rows(&dir.path().join("e.csv"));
    assert_eq!(rows[1][1], "80");
}

#[test]
fn same_seed_gives_identical_curves() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "curve",
            "--sweep",
            "n",
            "--grid",
            "250,500,1000,2000,4000",
            "--V",
            "4",
            "--h",
            "0.5",
            "--em",
            "0.5",
            "--replicates",
            "100",
            "--seed",
            "9",
            "--out",
            out,
        ]
    };
    assert!(run(&args("a.csv"), dir.path()).status.success());
    assert!(run(&args("b.csv"), dir.path()).status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with(b"#schema=curve/v1\n"));
}

#[test]
fn validate_example_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--seed", "7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for check in ["unbiasedness", "hellinger", "variance_bound", "lemma1_series", "fixed_point_margin"] {
        assert!(stdout.lines().any(|l| l.starts_with(check) && l.contains("PASS")), "{check}: {stdout}");
    }
    assert!(dir.path().join("validate.csv").exists());
}

#[test]
fn config_errors_exit_two_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["erm", "--n", "10", "--V", "3", "--p", "0.3", "--h", "0.4", "--em", "0.5"], "seed"),
        (&["bounds", "--n", "1000", "--V", "2", "--h", "1.5", "--em", "0.5"], "h"),
        (&["bounds", "--n", "1000", "--V", "2", "--h", "0.5"], "em"),
        (&["risk", "--seed", "1", "--n", "10"], "scenario"),
        (&["curve", "--seed", "1", "--sweep", "q", "--grid", "1,2"], "sweep"),
        (
            &["minimax", "--seed", "1", "--n", "100", "--h", "0.3", "--em", "0.5", "--replicates", "10", "--V", "20"],
            "V",
        ),
    ];
    for (args, field) in cases {
        let o = run(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let msg = stderr(&o);
        assert_eq!(msg.trim_end().lines().count(), 1, "{msg}");
        assert!(msg.contains(field), "{args:?}: {msg}");
    }
}

#[test]
fn malformed_config_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    std::fs::write(dir.path().join("extra.json"), r#"{"n": 10, "replicatez": 4}"#).unwrap();
    let o = run(&["bounds", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));
    let o = run(&["bounds", "--config", "extra.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("replicatez"));
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scenario_from_inline_json_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"kind":"continuous_margin","breaks":[0.0,0.5,1.0],"eta":[0.1,0.9],"e":[0.5,0.5],"margin_h":0.8}"#;
    std::fs::write(dir.path().join("s.json"), json).unwrap();
    for spec in [json, "s.json"] {
        let o = run(
            &["erm", "--seed", "2", "--n", "400", "--scenario", spec, "--replicates", "3", "--out", "e.csv"],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let (_, rows) = csv_rows(&dir.path().join("e.csv"));
        assert_eq!(rows.len(), 4);
        assert!(rows[1][5].starts_with("stump"), "{:?}", rows[1]);
    }
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pu-risklab"))
        .args(["cannings", "--seed", "1", "--grid", "500", "--replicates", "20", "--out", "k.csv"])
        .current_dir(dir.path())
        .env("PU_RISKLAB_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("k.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 2);
}
