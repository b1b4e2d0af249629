use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"));
    p.to_str().unwrap().to_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinorspan"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn no_floats(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_i64() || n.is_u64(),
        Value::Array(a) => a.iter().all(no_floats),
        Value::Object(o) => o.values().all(no_floats),
        _ => true,
    }
}

fn keys_sorted(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(keys_sorted),
        Value::Object(o) => {
            o.keys().zip(o.keys().skip(1)).all(|(a, b)| a < b) && o.values().all(keys_sorted)
        }
        _ => true,
    }
}

#[test]
fn output_is_stable_and_integral() {
    let t3 = fixture("t3");
    for cmd in ["resolve", "cohomology", "span"] {
        let args = [cmd, "--spec", &t3, "--max-weight", "4", "--twist", "0,1,0"];
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd} is not deterministic");
        let v = json(&a);
        assert!(no_floats(&v), "{cmd} emitted a float");
        assert!(keys_sorted(&v), "{cmd} keys out of order");
    }
}

#[test]
fn out_flag_matches_stdout() {
    let t1 = fixture("t1");
    let dir = std::env::temp_dir().join(format!("spinorspan-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("span.json");
    let stdout = run(&["span", "--spec", &t1, "--max-weight", "4"]);
    let file = run(&[
        "span",
        "--spec",
        &t1,
        "--max-weight",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(file.status.code(), Some(0));
    assert!(file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout.stdout);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn rationals_are_strings() {
    let v = json(&run(&["resolve", "--spec", &fixture("t1")]));
    let text = v.to_string();
    assert!(!text.contains('.'), "{text}");
}

#[test]
fn exit_codes() {
    let t2 = fixture("t2");
    assert_eq!(
        run(&["resolve", "--spec", &t2, "--max-stage", "2"])
            .status
            .code(),
        Some(3)
    );
    let dir = std::env::temp_dir().join(format!("spinorspan-empty-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let empty = dir.join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(
        run(&["resolve", "--spec", empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(dir).unwrap();
    assert_eq!(
        run(&["resolve", "--spec", "/no/such/file.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["span", "--spec", &t2, "--twist", "1/0,0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["span", "--spec", &t2, "--twist", "1,0,0"])
            .status
            .code(),
        Some(2)
    );
    for f in ["t1", "t2", "t3", "t1_module"] {
        assert_eq!(
            run(&["verify", "--spec", &fixture(f)]).status.code(),
            Some(0),
            "{f}"
        );
    }
}

#[test]
fn t2_second_stage_is_nonempty() {
    let out = run(&[
        "resolve",
        "--spec",
        &fixture("t2"),
        "--max-stage",
        "2",
        "--degree-min",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages[0]["generators"].as_array().unwrap().len(), 3);
    assert_eq!(stages[1]["generators"].as_array().unwrap().len(), 2);
}

#[test]
fn zero_gamma_gives_the_free_algebra() {
    let dir = std::env::temp_dir().join(format!("spinorspan-zero-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("zero.json");
    std::fs::write(
        &spec,
        r#"{"name": "zero", "n_odd": 2, "n_even": 1, "gamma": []}"#,
    )
    .unwrap();
    let out = run(&[
        "cohomology",
        "--spec",
        spec.to_str().unwrap(),
        "--max-weight",
        "5",
    ]);
    std::fs::remove_dir_all(dir).unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // two even generators of weight 1 and one odd one of weight 2 in degree -1
    for row in v["tables"]["ce_t"].as_array().unwrap() {
        let (d, w, dim) = (
            row["degree"].as_i64().unwrap(),
            row["weight"].as_i64().unwrap(),
            row["dim"].as_i64().unwrap(),
        );
        let want = match d {
            0 => w + 1,
            -1 if w >= 2 => w - 1,
            _ => 0,
        };
        assert_eq!(dim, want, "({d},{w})");
    }
}

#[test]
fn shallow_resolution_marks_untrusted_rows() {
    let out = run(&[
        "cohomology",
        "--spec",
        &fixture("t2"),
        "--max-weight",
        "5",
        "--max-stage",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["tables"]["ce_t_tilde"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["untrusted"] == true));
    assert!(rows
        .iter()
        .filter(|r| r["untrusted"] == true)
        .all(|r| r["degree"].as_i64().unwrap() < -1));
    let deep = json(&run(&[
        "cohomology",
        "--spec",
        &fixture("t2"),
        "--max-weight",
        "5",
    ]));
    // with the default depth only rows cut off by the degree window remain
    for (name, rows) in deep["tables"].as_object().unwrap() {
        for r in rows
            .as_array()
            .unwrap()
            .iter()
            .filter(|r| r["untrusted"] == true)
        {
            assert_eq!(r["degree"], -4, "{name} {r}");
        }
    }
}
