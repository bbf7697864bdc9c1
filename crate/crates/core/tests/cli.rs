use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn latmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latmax")).args(args).output().expect("spawn latmax")
}

fn demo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/demo.toml")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[[instances]]
id = "tiny"
objective = { family = "separable_concave", coeffs = [2.0, 1.0], powers = [0.5, 1.0], cap = [3, 3] }
constraint = { kind = "cardinality", budget = 3 }

[[experiments]]
instance = "tiny"
algorithm = "dr_cardinality"
epsilon = 0.1
seeds = [4, 5]
"#;

#[test]
fn demo_config_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = latmax(&["--config", demo().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance_id,algorithm,epsilon,seed,value,opt_value,ratio,oracle_calls,wall_time_ms,solution"
    );
    assert_eq!(lines.count(), 9);
    let summary: toml::Value = toml::from_str(&std::fs::read_to_string(out.join("summary.toml")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_integer(), Some(9));
    assert_eq!(summary["all_assertions_passed"].as_bool(), Some(true));
}

#[test]
fn seed_override_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = latmax(&[
        "--config",
        demo().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--algo",
        "polymatroid",
        "--seed",
        "42",
        "--no-timing",
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",polymatroid,0.25,42,")));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}\n[[assertions]]\nmin_ratio = 1.5\n"));
    let o = latmax(&["--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("assertion failed"));
}

#[test]
fn no_bruteforce_leaves_ratio_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}\n[[assertions]]\nmin_ratio = 1.5\n"));
    let out = dir.path().join("o");
    let o = latmax(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-bruteforce"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!((fields[5], fields[6]), ("", ""));
    }
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let unknown = write(dir.path(), "a.toml", &SMALL.replace("epsilon = 0.1", "epsilon = 0.1\nspeed = 3"));
    let o = latmax(&["--config", unknown.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));

    let mismatch = write(dir.path(), "b.toml", &SMALL.replace("\"dr_cardinality\"", "\"knapsack\""));
    let o = latmax(&["--config", mismatch.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = latmax(&["--config", dir.path().join("missing.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn point_limit_turns_cells_into_notes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("o");
    let o = latmax(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--point-limit", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
}
