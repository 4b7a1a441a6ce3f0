use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pontcalc"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn error_kind(o: &Output) -> String {
    json(o)["error"]["kind"].as_str().unwrap().to_string()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn torus_charts_are_valid() {
    let o = run(&["charts", data("torus3x3.json").to_str().unwrap(), "--flavor", "affine"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["charts"]["level"], 1);
    assert_eq!(v["charts"]["cell_count"], 54);
    assert_eq!(v["charts"]["all_valid"], true);
    assert_eq!(v["charts"]["weak_map_audit"]["ok"], true);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.json", "{ not json");
    let o = run(&["charts", &bad, "--flavor", "affine"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "input");
    let extra = write(&dir, "extra.json", r#"{"generator":{"kind":"circle","n":6},"colour":1}"#);
    assert_eq!(run(&["charts", &extra, "--flavor", "affine"], &[]).status.code(), Some(2));
    let circle = data("circle6.json");
    let c = circle.to_str().unwrap();
    assert_eq!(run(&["charts", c], &[]).status.code(), Some(2));
    assert_eq!(run(&["charts", c, "--flavor", "affine", "--samples", "0"], &[]).status.code(), Some(2));
    let o = run(&["charts", c, "--flavor", "affine"], &[("PONTCALC_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["error"]["stage"], "config");
}

#[test]
fn branching_complex_is_rejected() {
    // three triangles on the edge ab
    let pos = [("a", [0, 0]), ("b", [1, 0]), ("c", [0, 1]), ("d", [0, -1]), ("e", [1, 1])];
    let mut atlas = serde_json::Map::new();
    for (v, o) in pos {
        let chart: serde_json::Map<String, Value> = pos.iter().map(|(w, p)| (w.to_string(), serde_json::json!([(p[0] - o[0]).to_string(), (p[1] - o[1]).to_string()]))).collect();
        atlas.insert(v.into(), chart.into());
    }
    let input = serde_json::json!({
        "complex": { "vertices": ["a", "b", "c", "d", "e"], "simplices": [["a", "b", "c"], ["a", "b", "d"], ["a", "b", "e"]] },
        "atlas": atlas,
    });
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "branch.json", &input.to_string());
    let o = run(&["charts", &p, "--flavor", "affine"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_kind(&o), "structure");
}

#[test]
fn circle_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let circle = data("circle6.json");
    let mut outs = vec![];
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}.json"));
        let o = run(&["pipeline", circle.to_str().unwrap(), "--flavor", "affine", "--out", out.to_str().unwrap()], &[("PONTCALC_THREADS", threads)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        outs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let v: Value = serde_json::from_slice(&outs[0]).unwrap();
    assert_eq!(v["fix"]["outcome"], "found");
    assert_eq!(v["fix"]["verify"]["cycle"], true);
    assert_eq!(v["fix"]["verify"]["chain_level"], true);
    assert_eq!(v["fix"]["second_solve"]["comparison"], "homologous");
    assert_eq!(v["pont"]["duals"][0]["homologous_to_fundamental"], true);
    assert_eq!(v["pont"]["duals"][1]["zero"], true);
    assert_eq!(v["assoc"]["quasifibration"]["pass"], true);
}

#[test]
fn corrupted_omega_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let torus = data("torus3x3.json");
    let t = torus.to_str().unwrap();
    let good = dir.path().join("chern.json");
    // the affine Cx Y has 3-simplices, so δ sees every triangle
    let o = run(&["chern", t, "--flavor", "affine", "--out", good.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut v: Value = serde_json::from_slice(&std::fs::read(&good).unwrap()).unwrap();
    let ok = run(&["verify", "--input", t, "--flavor", "affine", "--omega", good.to_str().unwrap(), "--samples", "5"], &[]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(&ok)["omega_file"]["delta_failures"], 0);

    v["chern"]["omega"]["values"][0][1] = Value::String("7/3".into());
    let bad = write(&dir, "bad.json", &v.to_string());
    let o = run(&["verify", "--input", t, "--flavor", "affine", "--omega", &bad, "--samples", "5"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["omega_file"]["ok"], false);
    assert!(r["omega_file"]["delta_failures"].as_u64().unwrap() > 0);
}

#[test]
fn odd_euler_dimension() {
    let o = run(&["verify", "--input", data("circle6.json").to_str().unwrap(), "--euler-a", "5", "--euler-a", "7", "--samples", "5"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["euler"][0]["branch"], "odd");
    assert_eq!(v["euler"][0]["sign"], v["euler"][0]["formula"]);
    assert_eq!(v["corpus"][0]["ok"], true);
}

#[test]
fn three_sphere_needs_stretch() {
    let s = data("sphere3.json");
    let s = s.to_str().unwrap();
    let o = run(&["pipeline", s, "--flavor", "affine"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_kind(&o), "resource");
    // with --stretch the naive sphere atlas is attempted and rejected cleanly
    let o = run(&["pipeline", s, "--flavor", "affine", "--stretch"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["error"]["stage"], "charts");
}
