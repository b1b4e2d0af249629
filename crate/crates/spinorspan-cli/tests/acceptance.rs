//! The ten acceptance criteria, run end to end through the binary where a
//! report exists and through the library where an independent oracle is
//! needed. Each criterion prints one PASS/FAIL line.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use serde_json::Value;
use spinorspan::multiplets::GammaSpec;
use spinorspan::tate::tate_resolve;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_spinorspan"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("UTF-8 output"),
        stderr: String::from_utf8(out.stderr).expect("UTF-8 diagnostics"),
    }
}

/// `span` report for a fixture, computed once per argument list.
fn span(name: &str, twist: &str, weight: i32) -> Value {
    static CACHE: OnceLock<Mutex<HashMap<String, Value>>> = OnceLock::new();
    let key = format!("{name}|{twist}|{weight}");
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return v.clone();
    }
    let spec = fixture(name);
    let w = weight.to_string();
    let mut args = vec!["span", "--spec", spec.to_str().unwrap(), "--max-weight", &w];
    if !twist.is_empty() {
        args.extend(["--twist", twist]);
    }
    let run = cli(&args);
    let v: Value =
        serde_json::from_str(&run.stdout).unwrap_or_else(|e| panic!("{key}: {e}: {}", run.stderr));
    cache.lock().unwrap().insert(key, v.clone());
    v
}

fn check(report: &Value, path: &[&str]) -> Outcome {
    let mut v = report;
    for p in path {
        v = &v[*p];
    }
    let label = format!(
        "{} {}",
        report["name"].as_str().unwrap_or("?"),
        path.join(".")
    );
    if v.is_null() {
        return Err(format!("{label}: missing"));
    }
    if v["passed"] != Value::Bool(true) {
        return Err(format!("{label}: {}", v["failures"]));
    }
    if v["checked"].as_u64() == Some(0) {
        return Err(format!("{label}: checked nothing"));
    }
    Ok(())
}

fn checks(report: &Value, leg: &str, names: &[&str]) -> Outcome {
    names
        .iter()
        .try_for_each(|n| check(report, &[leg, "checks", n]))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The three fixture runs at the full window: T1 and T3 twisted, T2 not.
fn fixture_runs() -> Vec<Value> {
    vec![
        span("t1", "1,0", 6),
        span("t2", "", 6),
        span("t3", "0,1,0", 6),
    ]
}

fn differential_soundness() -> Outcome {
    let names = [
        "d_t",
        "D",
        "D_Q",
        "d_t_tilde",
        "d_tilde",
        "d_tilde_Q",
        "d_n",
        "d_n_Q",
    ];
    for r in fixture_runs() {
        for n in names {
            check(&r, &["differentials", n])?;
        }
    }
    Ok(())
}

fn retract_identities() -> Outcome {
    for r in fixture_runs() {
        checks(
            &r,
            "left",
            &["base_retract_identities", "retract_identities"],
        )?;
        checks(
            &r,
            "right",
            &[
                "base_retract_identities",
                "retract_identities",
                "base_p_algebra_map",
                "base_h_derivation",
            ],
        )?;
    }
    Ok(())
}

fn tate_correctness() -> Outcome {
    let t2 = tate_resolve(&GammaSpec::t2(), 6, 4);
    let h0 = t2.dense_hilbert(0);
    ensure(h0 == vec![1, 2, 0, 0, 0, 0, 0], || format!("T2 H^0 {h0:?}"))?;
    ensure(t2.h0_hilbert() == h0, || {
        "echelon and dense H^0 disagree".into()
    })?;
    ensure(t2.stage == 4, || {
        format!("T2 stopped at stage {}", t2.stage)
    })?;
    for j in 1..=3 {
        let h = t2.dense_hilbert(-j);
        ensure(h.iter().all(|&d| d == 0), || format!("T2 H^-{j} = {h:?}"))?;
    }
    let t1 = tate_resolve(&GammaSpec::t1(), 6, 4);
    ensure(
        t1.closed && t1.stage == 1 && t1.w_generators().is_empty(),
        || format!("T1: closed {} at stage {}", t1.closed, t1.stage),
    )?;
    let spec = fixture("t1");
    let run = cli(&["resolve", "--spec", spec.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&run.stdout).map_err(|e| e.to_string())?;
    ensure(run.code == 0 && v["n"]["dim"] == 0, || {
        format!("T1 resolve: exit {} n {}", run.code, v["n"])
    })
}

fn untwisted_span() -> Outcome {
    for r in [span("t1", "", 6), span("t2", "", 6)] {
        ensure(r["passed"] == true, || {
            format!("{} did not pass", r["name"])
        })?;
        checks(
            &r,
            "left",
            &[
                "cohomology_iso",
                "transferred_ocha_coherence",
                "no_higher_corrections",
                "strict_entries_match",
                "forbidden_trees_vanish",
            ],
        )?;
        checks(
            &r,
            "right",
            &["cohomology_iso", "transferred_ocha_coherence"],
        )?;
    }
    Ok(())
}

fn vanishing_corrections() -> Outcome {
    for r in fixture_runs() {
        checks(
            &r,
            "left",
            &[
                "no_higher_corrections",
                "forbidden_trees_vanish",
                "w2_h_in_ideal",
                "w2_operations_preserve",
                "w2_p_kills_ideal",
            ],
        )?;
    }
    Ok(())
}

fn twisted_corollary() -> Outcome {
    let r = span("t3", "0,1,0", 5);
    checks(
        &r,
        "right",
        &[
            "d_n_q_equals_d_nq",
            "n_q_structure_constants",
            "weight_parity_intertwines_q",
            "b_n_closed_form",
        ],
    )?;
    let nonzero = r["right"]["info"]["q_corrections_nonzero"]
        .as_u64()
        .unwrap_or(0);
    ensure(nonzero > 0, || {
        "no Q-corrections at weight 5, the comparison is vacuous".into()
    })
}

fn curvature() -> Outcome {
    for r in [span("t1", "1,0", 6), span("t3", "0,1,0", 6)] {
        check(&r, &["curvature"])?;
    }
    Ok(())
}

fn transfer_coherence() -> Outcome {
    let r = span("t2", "", 6);
    checks(&r, "right", &["n_homotopy_jacobi", "transferred_product"])?;
    ensure(
        r["right"]["info"]["n_brackets"].as_u64().unwrap_or(0) > 0,
        || "n is abelian, Jacobi is vacuous".into(),
    )?;
    let spec = fixture("t2");
    let run = cli(&["verify", "--spec", spec.to_str().unwrap(), "--arity", "4"]);
    let v: Value = serde_json::from_str(&run.stdout).map_err(|e| e.to_string())?;
    check(&v, &["checks", "component_fields.a_infinity"])?;
    check(&v, &["checks", "component_fields.binary_product"])?;
    ensure(run.code == 0, || format!("verify T2 exit {}", run.code))
}

fn q_zero_degeneration() -> Outcome {
    for (name, zero) in [("t1", "0,0"), ("t2", "0,0")] {
        let spec = fixture(name);
        let s = spec.to_str().unwrap();
        let plain = cli(&["span", "--spec", s]);
        let twisted = cli(&["span", "--spec", s, "--twist", zero]);
        ensure(plain.code == 0 && twisted.code == 0, || {
            format!("{name}: exits {} {}", plain.code, twisted.code)
        })?;
        ensure(plain.stdout == twisted.stdout, || {
            format!("{name}: reports differ")
        })?;
    }
    Ok(())
}

fn negative_controls() -> Outcome {
    let corrupted = fixture("corrupted_module");
    let run = cli(&["verify", "--spec", corrupted.to_str().unwrap()]);
    ensure(
        run.code == 1 && run.stdout.contains("D^2 != 0 on module elements m0"),
        || format!("corrupted differential: exit {}", run.code),
    )?;
    let asym = fixture("asymmetric_gamma");
    let run = cli(&["resolve", "--spec", asym.to_str().unwrap()]);
    ensure(
        run.code == 2 && run.stderr.contains("Γ^1_{12} = 1/2 but Γ^1_{21} = 1/1"),
        || format!("asymmetric gamma: exit {} {}", run.code, run.stderr),
    )?;
    let t2 = fixture("t2");
    let run = cli(&["span", "--spec", t2.to_str().unwrap(), "--twist", "1,0"]);
    ensure(
        run.code == 2 && run.stderr.contains("not a Maurer-Cartan element"),
        || format!("non-MC twist: exit {} {}", run.code, run.stderr),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("differential soundness", differential_soundness),
        ("retract identities", retract_identities),
        ("Tate correctness", tate_correctness),
        ("untwisted span", untwisted_span),
        ("vanishing corrections", vanishing_corrections),
        ("twisted corollary", twisted_corollary),
        ("curvature", curvature),
        ("transfer coherence", transfer_coherence),
        ("Q = 0 degeneration", q_zero_degeneration),
        ("negative controls", negative_controls),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match &result {
            Ok(()) => println!("criterion {:>2} PASS {name} ({secs:.1}s)", i + 1),
            Err(e) => {
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {e}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
