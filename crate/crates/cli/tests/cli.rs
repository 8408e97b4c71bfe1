use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn distort(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distort"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_writes_first_slot() {
    let dir = tempfile::tempdir().unwrap();
    let o = distort(dir.path(), &["--n-max", "3", "gen"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gadgets.json")).unwrap()).unwrap();
    let slot = &v["data"][0];
    assert_eq!(slot["n"], 1);
    assert_eq!(slot["b"], -10);
    assert!(v["provenance"]["config_hash"].as_str().unwrap().len() == 16);
    assert_eq!(v["provenance"]["alpha"], (5f64.sqrt() - 1.0) / 2.0);
    let g: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("generators.json")).unwrap()).unwrap();
    assert_eq!(g["provenance"]["m"], 4);
    let f2 = fs::read_to_string(dir.path().join("f2.csv")).unwrap();
    assert!(f2.lines().nth(1).unwrap() == "x,value,derivative");
}

#[test]
fn artifacts_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(distort(d.path(), &["--n-max", "2", "gen"]).status.success());
    }
    for name in ["gadgets.json", "generators.json", "f1.csv", "f2.csv", "fields.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn rotnum_of_quarter_turn() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("r.json");
    fs::write(&map, r#"{"node": "rotation", "alpha": 0.25}"#).unwrap();
    let o = distort(dir.path(), &["rotnum", map.to_str().unwrap()]);
    assert!(o.status.success());
    let value: f64 = stdout(&o).split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 0.25).abs() < 1e-12);
}

#[test]
fn bfs_finds_a_generator() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("f.json");
    let inv_f3 = r#"{"node": "inverse", "of": {"node": "rotation", "alpha": 0.6180339887498949}}"#;
    fs::write(&map, inv_f3).unwrap();
    let o = distort(dir.path(), &["bfs", "--radius", "2", map.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("distance 1: F3^-1"), "{}", stdout(&o));
}

#[test]
fn malformed_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[generators]\nlambda = \n").unwrap();
    let o = distort(dir.path(), &["--config", cfg.to_str().unwrap(), "gen"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let map = dir.path().join("m.json");
    fs::write(&map, "{\n \"node\": \"rotation\",\n \"alpha\": x }").unwrap();
    let o = distort(dir.path(), &["rotnum", map.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn config_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let o = distort(dir.path(), &["--lambda", "1.2", "config"]);
    assert!(o.status.success());
    let path = dir.path().join("c.toml");
    fs::write(&path, stdout(&o)).unwrap();
    let o2 = distort(dir.path(), &["--config", path.to_str().unwrap(), "config"]);
    assert_eq!(stdout(&o), stdout(&o2));
    assert!(stdout(&o).contains("lambda = 1.2"));
}
