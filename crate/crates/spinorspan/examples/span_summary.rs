//! Runs the span for one of the built-in examples and prints a line per check.
//!
//! ```text
//! cargo run --example span_summary -- t3 5
//! ```

use spinorspan::multiplets::GammaSpec;
use spinorspan::span::{verify_span, SpanConfig};
use spinorspan::Scalar;

fn main() {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "t2".into());
    let weight: i32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let (gamma, twist) = match which.as_str() {
        "t1" => (GammaSpec::t1(), Some(vec![Scalar::ONE, Scalar::ZERO])),
        "t2" => (GammaSpec::t2(), None),
        "t3" => (
            GammaSpec::t3(),
            Some(vec![Scalar::ZERO, Scalar::ONE, Scalar::ZERO]),
        ),
        other => {
            eprintln!("unknown example {other}, expected t1, t2 or t3");
            std::process::exit(2);
        }
    };
    let config = SpanConfig {
        weight_max: weight,
        ..SpanConfig::default()
    };
    let report =
        verify_span(&which, &gamma, twist.as_deref(), config).expect("window is large enough");
    let v = serde_json::to_value(&report).expect("reports serialize");
    for section in ["differentials", "left", "right"] {
        let checks = if section == "differentials" {
            &v[section]
        } else {
            &v[section]["checks"]
        };
        for (name, c) in checks.as_object().into_iter().flatten() {
            let mark = if c["passed"] == true { "ok  " } else { "FAIL" };
            println!("{mark} {section}.{name} ({} cases)", c["checked"]);
        }
    }
    println!(
        "{}",
        if report.passed {
            "span verified"
        } else {
            "span FAILED"
        }
    );
}
