use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn parvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parvol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_record(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON record")
}

#[test]
fn construct_on_the_line() {
    let v = stdout_json(&parvol(&["construct", "--dim", "1", "--radii", "1,0.5"]));
    let pts: Vec<f64> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_f64().unwrap())
        .collect();
    assert_eq!(pts, vec![0.0, 2.0, 3.0]);
}

#[test]
fn planar_construction_metadata() {
    let v = stdout_json(&parvol(&[
        "construct",
        "--radii",
        "1,0.5",
        "--eps",
        "0.5",
        "--gamma0",
        "0.1",
    ]));
    let radii = v["radii"].as_array().unwrap();
    assert_eq!(radii.len(), 2);
    for r in radii {
        let (s, jump) = (
            r["s"].as_f64().unwrap(),
            r["predicted_jump"].as_f64().unwrap(),
        );
        // γ₀ = 0.1 for the largest radius, halved for the next
        assert!((jump - 0.2 * s).abs() < 1e-12, "{r}");
    }
}

#[test]
fn gallery_gap_sum() {
    let v = stdout_json(&parvol(&["gallery", "--q", "0.111111", "--alpha", "0.5"]));
    let g = v["gap_sum"].as_f64().unwrap();
    assert!((g - 7f64.sqrt()).abs() < 1e-5, "{g}");
    assert_eq!(v["e_q_prime"]["verdict_ii"], Value::Bool(true));
}

#[test]
fn analyze_rect_boundary() {
    let v = stdout_json(&parvol(&[
        "analyze",
        "--geometry",
        "rectboundary:1",
        "--h",
        "0.004",
    ]));
    let det = v["nondiff"]["detected"].as_array().unwrap();
    assert_eq!(det.len(), 1);
    assert!((det[0]["r"].as_f64().unwrap() - 1.0).abs() <= 0.008);
    assert!((det[0]["jump"].as_f64().unwrap() - 2.0).abs() <= 0.2);
    let crit = &v["criticality"][0];
    assert_eq!(crit["verdict"], "non_differentiable");
    assert!((crit["critical_weight"].as_f64().unwrap() - 1.0).abs() < 0.1);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn artifacts_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = parvol(&[
            "analyze",
            "--geometry",
            "construction:1",
            "--h",
            "0.005",
            "--band",
            "0.1,1.3",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        let listed = stdout_json(&out);
        assert_eq!(listed["written"].as_array().unwrap().len(), 4);
    }
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        vec![
            "criticality.json",
            "jumps.csv",
            "nondiff.json",
            "volume.csv"
        ]
    );
    assert_eq!(fa, fb);
    let csv = String::from_utf8(fa[3].1.clone()).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    // seventeen significant digits: d.dddddddddddddddde±x
    assert!(
        row.iter().all(|c| c.split('e').next().unwrap().len() == 18),
        "{row:?}"
    );
}

#[test]
fn line_geometry_uses_exact_volumes() {
    let v = stdout_json(&parvol(&[
        "analyze",
        "--geometry",
        "line:0,2,3",
        "--h",
        "0.01",
    ]));
    let det = v["nondiff"]["detected"].as_array().unwrap();
    let radii: Vec<f64> = det.iter().map(|d| d["r"].as_f64().unwrap()).collect();
    assert_eq!(radii, vec![0.5, 1.0]);
    assert!(det.iter().all(|d| d["jump"].as_f64().unwrap() == 2.0));
}

#[test]
fn convergence_of_disk_measures() {
    let v = stdout_json(&parvol(&[
        "convergence",
        "--geometry",
        "disk:1",
        "--r0",
        "0.5",
        "--h",
        "0.005",
    ]));
    assert_eq!(v["converges"], Value::Bool(true));
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn errors_are_machine_readable() {
    let e = error_record(&parvol(&["analyze", "--geometry", "torus:1"]));
    assert_eq!(e["error"]["kind"], "input");
    let e = error_record(&parvol(&[
        "construct",
        "--dim",
        "1",
        "--radii",
        "cantor:0.2:4",
    ]));
    assert_eq!(e["error"]["kind"], "construction");
    let e = error_record(&parvol(&["gallery", "--q", "0.7"]));
    assert_eq!(e["error"]["kind"], "fractal");
    let e = error_record(&parvol(&[
        "analyze",
        "--geometry",
        "disk:1",
        "--band",
        "0.001,0.5",
    ]));
    assert_eq!(e["error"]["kind"], "engine");
    let e = error_record(&parvol(&["analyze", "--geometry", "@/nonexistent.json"]));
    assert_eq!(e["error"]["kind"], "io");
}

#[test]
fn verify_exits_zero_when_everything_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = parvol(&["verify", "--out", dir.path().to_str().unwrap()]);
    let lines = String::from_utf8_lossy(&out.stderr);
    assert_eq!(lines.lines().count(), 8, "{lines}");
    let report: Value =
        serde_json::from_slice(&fs::read(dir.path().join("acceptance.json")).unwrap()).unwrap();
    let all = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == Value::Bool(true));
    assert_eq!(report["passed"], Value::Bool(all));
    assert_eq!(out.status.success(), all, "{lines}");
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Required keys, following `$ref`s into `$defs`, arrays and `oneOf`
/// branches whose `kind` matches.
fn check_required(root: &Value, s: &Value, v: &Value, at: &str) {
    if let Some(r) = s["$ref"].as_str() {
        let def = r.trim_start_matches("#/$defs/");
        return check_required(root, &root["$defs"][def], v, at);
    }
    if let Some(branches) = s["oneOf"].as_array() {
        let hit = branches.iter().find(|b| {
            let b = match b["$ref"].as_str() {
                Some(r) => &root["$defs"][r.trim_start_matches("#/$defs/")],
                None => b,
            };
            b["properties"]["kind"]["const"] == v["kind"] || b["oneOf"].is_array()
        });
        if let Some(b) = hit {
            check_required(root, b, v, at);
        }
        return;
    }
    if let Some(items) = v.as_array() {
        for (i, x) in items.iter().enumerate() {
            check_required(root, &s["items"], x, &format!("{at}[{i}]"));
        }
        return;
    }
    for key in s["required"].as_array().into_iter().flatten() {
        let key = key.as_str().unwrap();
        assert!(v.get(key).is_some(), "{at} lacks '{key}'");
    }
    if let (Some(props), Some(obj)) = (s["properties"].as_object(), v.as_object()) {
        for (k, sub) in props {
            if let Some(x) = obj.get(k) {
                check_required(root, sub, x, &format!("{at}.{k}"));
            }
        }
    }
}

fn conforms(name: &str, v: &Value) {
    let s = schema(name);
    check_required(&s, &s, v, name);
}

#[test]
fn outputs_follow_the_shipped_schemas() {
    conforms(
        "analyze",
        &stdout_json(&parvol(&[
            "analyze",
            "--geometry",
            "rectboundary:1",
            "--h",
            "0.01",
        ])),
    );
    conforms("gallery", &stdout_json(&parvol(&["gallery", "--q", "0.3"])));
    conforms(
        "convergence",
        &stdout_json(&parvol(&[
            "convergence",
            "--geometry",
            "disk:1",
            "--r0",
            "0.5",
            "--h",
            "0.01",
            "--kmax",
            "2",
        ])),
    );
    let meta = stdout_json(&parvol(&["construct", "--radii", "1,0.5"]));
    conforms("geometry", &meta["geometry"]);
    conforms(
        "set1d",
        &stdout_json(&parvol(&["construct", "--dim", "1", "--radii", "1,0.5"])),
    );
    conforms("error", &error_record(&parvol(&["gallery", "--q", "0.9"])));
}
