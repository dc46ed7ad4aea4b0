use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sstlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sstlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const SPEC: &str = r#"{
  "kind": "static",
  "interval": ["-inf", "inf"],
  "dim": 2,
  "coords": ["x", "y"],
  "domain": [[-1, 1], [-1, 1]],
  "metric": [["1", "0"], ["1"]],
  "warping": "WARP"
}"#;

fn write_spec(dir: &Path, name: &str, warp: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, SPEC.replace("WARP", warp)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(sstlab(&["audit", "catalog:minkowski"]).status.code(), Some(0));
    assert_eq!(sstlab(&["audit", "catalog:interior-max-warp"]).status.code(), Some(2));
    assert_eq!(sstlab(&["audit", "catalog:no-such-entry"]).status.code(), Some(1));
    assert_eq!(sstlab(&["audit", "--grid", "many", "catalog:minkowski"]).status.code(), Some(1));
    assert_eq!(sstlab(&["audit", "/nonexistent/spec.json"]).status.code(), Some(1));
    assert_eq!(sstlab(&["--version"]).status.code(), Some(0));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = sstlab(&["audit", "catalog:paraboloid-static", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_ne!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn digest_tracks_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let p2 = write_spec(dir.path(), "p2.json", "2 + x^2");
    let p3 = write_spec(dir.path(), "p3.json", "2 + x^3");
    let d = |p: &str| json(&sstlab(&["audit", p]))["input_digest"].as_str().unwrap().to_string();
    assert_eq!(d(&p2), d(&p2));
    assert_ne!(d(&p2), d(&p3));
    let bytes = std::fs::read(&p2).unwrap();
    assert_eq!(d(&p2), sstlab::report::input_digest(&bytes));

    let cat = |args: &[&str]| json(&sstlab(args))["input_digest"].as_str().unwrap().to_string();
    assert_ne!(
        cat(&["audit", "catalog:paraboloid-static"]),
        cat(&["audit", "catalog:paraboloid-static", "--param", "eps=2"])
    );
}

#[test]
fn report_layout() {
    let r = json(&sstlab(&["audit", "catalog:paraboloid-static"]));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["source"], "catalog:paraboloid-static");
    let names: Vec<&str> = r["conditions"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    for want in ["SEC/TCC", "NCC", "WEC", "DEC", "HE-SEC"] {
        assert!(names.contains(&want), "{names:?}");
    }
    // f = |x|^2/2 + 1: Hess f = g, so Q = g and L*f = -g
    let fired: Vec<&str> = r["hypotheses"]["fired"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for want in ["EcT2", "Main3Item2", "Cor1Item2", "HessianFiber"] {
        assert!(fired.contains(&want), "{fired:?}");
    }
}

#[test]
fn witness_for_interior_maximum() {
    let r = json(&sstlab(&["audit", "catalog:interior-max-warp", "--conditions", "SEC"]));
    let sec = &r["conditions"][0];
    assert_eq!(sec["verdict"], "Violated");
    let w = sec["witnesses"].as_array().unwrap();
    assert!(w.iter().any(|w| w["label"] == "+dt" || w["label"] == "-dt"));
    assert!(sec["min_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn catalog_subcommands() {
    let out = sstlab(&["catalog", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in sstlab::catalog::ENTRY_NAMES {
        assert!(text.contains(name), "{name}");
    }
    let show = json(&sstlab(&["catalog", "show", "sphere", "--param", "radius=2"]));
    assert_eq!(show["name"], "sphere");
    assert_eq!(sstlab(&["catalog", "show", "sphere", "--param", "radius=-1"]).status.code(), Some(1));
}

#[test]
fn einstein_de_sitter_radial_distance() {
    let r = json(&sstlab(&["distance", "catalog:einstein-de-sitter", "--from", "1,0,0,0", "--to", "null-radial"]));
    // closed form of y'' = Ric/(n-2) y along this line over the big-bang-limited range
    let want = 3.5 * 2f64.ln();
    let got = r["value"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-6, "{got}");
    assert_eq!(r["to"][0].as_f64().unwrap().round(), 8.0);
}

#[test]
fn sphere_conjugate_point() {
    // spacelike equatorial geodesic of the unit sphere factor
    let r = json(&sstlab(&[
        "conjugate",
        "catalog:static-over-sphere",
        "--event",
        "0,1.5707963267948966,-2",
        "--velocity",
        "0,0,1",
        "--span",
        "0",
        "4",
    ]));
    let first = r["conjugate"]["crossings"][0].as_f64().unwrap();
    assert!((first - std::f64::consts::PI).abs() < 1e-6, "{first}");
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

#[test]
fn outputs_match_the_shipped_schemas() {
    let report = schema("report.schema.json");
    for entry in ["minkowski", "paraboloid-static", "einstein-de-sitter", "interior-max-warp"] {
        let r = json(&sstlab(&["audit", &format!("catalog:{entry}"), "--grid", "3", "--conditions", "all"]));
        let errors: Vec<String> = report.iter_errors(&r).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{entry}: {errors:?}");
    }
    let spacetime = schema("spacetime.schema.json");
    for name in sstlab::catalog::ENTRY_NAMES {
        let out = sstlab(&["catalog", "show", name]);
        let show = json(&out);
        if let Some(spec) = show.get("spec").filter(|s| !s.is_null()) {
            assert!(spacetime.is_valid(spec), "{name}");
        }
    }
    let bad: Value = serde_json::from_str(&SPEC.replace("WARP", "1").replace("\"dim\"", "\"extra\": 1, \"dim\"")).unwrap();
    assert!(!spacetime.is_valid(&bad));
}
