//! Runs the built binary end to end.

use std::process::{Command, Output};

use serde_json::Value;

fn pureconn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pureconn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

fn checks(out: &Output) -> Vec<Value> {
    lines(out).into_iter().filter(|l| l["record"] == "check").collect()
}

fn close(v: &Value, want: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= tol
}

#[test]
fn decompose_round_sphere_at_origin() {
    let out = pureconn(&["decompose", "--model", "sphere4", "--point", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let c = &checks(&out)[0];
    assert_eq!(c["name"], "decompose/sphere4");
    assert!(close(&c["values"]["scalar"], 12.0, 1e-9));
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(close(&c["values"]["rplus"][i][j], want, 1e-9));
        }
    }
}

#[test]
fn decompose_flat_and_product() {
    let out = pureconn(&["decompose", "--model", "flat", "--point", "1,1,1,1"]);
    let c = &checks(&out)[0];
    for key in ["rplus", "rminus", "c"] {
        assert!(c["values"][key]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|r| r.as_array().unwrap())
            .all(|v| v == 0.0));
    }
    assert_eq!(c["values"]["scalar"], 0.0);

    let out = pureconn(&["decompose", "--model", "s2xs2", "--point", "0.1,0,0.2,0"]);
    let spec = &checks(&out)[0]["values"]["rplus_spectrum"];
    assert!(close(&spec[0], 0.0, 1e-6) && close(&spec[1], 0.0, 1e-6) && close(&spec[2], 1.0, 1e-6));
}

#[test]
fn negative_coordinates_and_bad_points() {
    let out = pureconn(&["decompose", "--model", "hyperbolic4", "--point", "-0.2,0.1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(pureconn(&["decompose", "--point", "1,2"]).status.code(), Some(2));
    assert_eq!(
        pureconn(&["decompose", "--model", "hyperbolic4", "--point", "2,0,0,0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn identities_are_deterministic_apart_from_the_timestamp() {
    let args = ["check", "identities", "--points", "15", "--seed", "7"];
    let (a, b) = (pureconn(&args), pureconn(&args));
    assert_eq!(a.status.code(), Some(0));
    let strip = |o: &Output| -> Vec<Value> {
        lines(o)
            .into_iter()
            .map(|mut l| {
                if let Some(m) = l.as_object_mut() {
                    m.remove("timestamp");
                }
                l
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let sa = String::from_utf8_lossy(&a.stdout);
    let sb = String::from_utf8_lossy(&b.stdout);
    let body = |s: &str| {
        s.lines()
            .filter(|l| !l.contains("\"summary\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&sa), body(&sb));
    let names: Vec<String> = checks(&a)
        .iter()
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    let seed8 = pureconn(&["check", "identities", "--points", "15", "--seed", "8"]);
    assert_ne!(checks(&a), checks(&seed8));
}

#[test]
fn report_layout() {
    let out = pureconn(&["check", "symbol", "--points", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let l = lines(&out);
    assert_eq!(l[0]["record"], "config");
    assert_eq!(l[0]["settings"]["seed"], 7);
    let last = l.last().unwrap();
    assert_eq!(last["record"], "summary");
    assert_eq!(last["checks"], 5);
    assert_eq!(last["failed"], 0);
    assert!(last["timestamp"]["unix_ms"].as_u64().unwrap() > 0);
    for c in checks(&out) {
        assert_eq!(c["inputs_digest"].as_str().unwrap().len(), 16);
        let d = &c["values"];
        if c["name"].as_str().unwrap().starts_with("symbol/instance") {
            for i in 0..3 {
                assert!(close(&d["direct"][i], d["formula"][i].as_f64().unwrap(), 1e-9));
            }
        }
    }
}

#[test]
fn failing_checks_exit_with_one() {
    let out = pureconn(&["check", "symbol", "--points", "2", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(checks(&out).iter().any(|c| c["pass"] == false));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(pureconn(&["check", "nonsense"]).status.code(), Some(2));
    assert_eq!(
        pureconn(&["check", "identities", "--model", "torus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        pureconn(&["check", "action", "--model", "hyperbolic4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        pureconn(&["check", "plebanski", "--model", "s2xs2"]).status.code(),
        Some(2)
    );
    let dir = std::env::temp_dir().join(format!("pureconn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "points = \"many\"").unwrap();
    assert_eq!(
        pureconn(&["check", "symbol", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pureconn(&[
            "check",
            "symbol",
            "--config",
            dir.join("missing.toml").to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = std::env::temp_dir().join(format!("pureconn-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let report = dir.join("report.jsonl");
    std::fs::write(
        &cfg,
        format!(
            "model = \"hyperbolic4\"\npoints = 3\nseed = 5\nout = {:?}\n",
            report.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = pureconn(&[
        "check",
        "reconstruction",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["settings"]["model"], "hyperbolic4");
    assert_eq!(first["settings"]["points"], 3);
    assert_eq!(first["settings"]["seed"], 9);
    let names: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|l| l["record"] == "check")
        .map(|l| l["name"].clone())
        .collect();
    assert!(names
        .iter()
        .all(|n| n.as_str().unwrap().starts_with("reconstruction/hyperbolic4/")));
}

#[test]
fn round_action_is_reported() {
    let out = pureconn(&["check", "action", "--points", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let c = checks(&out);
    let action = c.iter().find(|c| c["name"] == "action/sphere4/action").unwrap();
    let want = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    assert!(close(&action["values"]["integral"], want, 5e-3 * want));
    assert!(action["values"]["value"].as_f64().unwrap() <= 5e-3);
}
