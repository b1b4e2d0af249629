//! Spec files, run configuration and the JSON reports behind the command
//! line tool.
//!
//! Every command returns an [`Outcome`]: a JSON value plus a [`Status`]. JSON
//! objects are `BTreeMap`s underneath, so keys come out sorted and the same
//! input always produces the same bytes. Rationals are `"p/q"` strings.

use std::collections::BTreeMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::grading::{Bidegree, Poly, TruncationWindow};
use crate::homology::{cohomology, ChainComplex, CohomologyTable};
use crate::multiplets::{
    check_g0, check_twist, complex_on, G0Spec, GammaEntry, GammaSpec, ModuleMultiplet, Multiplet,
    MultipletError, Superspace, TabulatedModule,
};
use crate::scalar::{ParseScalarError, Scalar};
use crate::span::{component_fields, verify_span, Check, SpanConfig, SpanError};
use crate::tate::{extract_n, hilbert_function, tate_resolve, TateError, TateState};

/// Process exit status of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    VerificationFailure,
    InputError,
    WindowExhausted,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::VerificationFailure => 1,
            Status::InputError => 2,
            Status::WindowExhausted => 3,
        }
    }

    fn from_passed(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::VerificationFailure
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("spec is empty")]
    Empty,
    #[error("spec parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("spec needs at least one odd generator")]
    NoOddGenerators,
    #[error("invalid twist: {0}")]
    Twist(#[from] ParseScalarError),
    #[error("invalid window: {0}")]
    Window(String),
    #[error(transparent)]
    Algebra(#[from] MultipletError),
}

/// Contents of a spec file. Gamma entries are one based; an entry for
/// `(α, β)` also sets `(β, α)`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpecFile {
    pub name: String,
    pub n_odd: usize,
    pub n_even: usize,
    pub gamma: Vec<GammaEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<G0Spec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<TabulatedModule>,
}

impl AlgebraSpecFile {
    pub fn parse(text: &str) -> Result<AlgebraSpecFile, InputError> {
        if text.trim().is_empty() {
            return Err(InputError::Empty);
        }
        let spec: AlgebraSpecFile = serde_json::from_str(text).map_err(|e| InputError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if spec.n_odd == 0 {
            return Err(InputError::NoOddGenerators);
        }
        Ok(spec)
    }

    pub fn gamma(&self) -> Result<GammaSpec, InputError> {
        Ok(GammaSpec::from_entries(
            self.n_odd,
            self.n_even,
            &self.gamma,
        )?)
    }
}

/// Window, cutoffs and twist for one run.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct RunConfig {
    pub degree_min: i32,
    pub degree_max: i32,
    pub weight_max: i32,
    pub stage_max: usize,
    pub arity_max: usize,
    /// Empty means untwisted.
    pub twist: Vec<Scalar>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            degree_min: -4,
            degree_max: 2,
            weight_max: 6,
            stage_max: 4,
            arity_max: 4,
            twist: Vec::new(),
        }
    }
}

/// `"q1,q2,..."`; the empty string is no twist.
pub fn parse_twist(s: &str) -> Result<Vec<Scalar>, InputError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(s.split(',').map(str::parse).collect::<Result<_, _>>()?)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), InputError> {
        if self.degree_min > self.degree_max {
            return Err(InputError::Window(format!(
                "degree_min {} > degree_max {}",
                self.degree_min, self.degree_max
            )));
        }
        if self.weight_max < 1 {
            return Err(InputError::Window(format!(
                "weight_max must be positive, got {}",
                self.weight_max
            )));
        }
        if self.stage_max < 1 {
            return Err(InputError::Window("stage_max must be at least 1".into()));
        }
        if self.arity_max < 2 {
            return Err(InputError::Window(format!(
                "arity_max must be at least 2, got {}",
                self.arity_max
            )));
        }
        Ok(())
    }

    fn window(&self) -> TruncationWindow {
        TruncationWindow::new(self.degree_min, self.degree_max, self.weight_max)
    }

    fn span_config(&self) -> SpanConfig {
        SpanConfig {
            degree_min: self.degree_min,
            degree_max: self.degree_max,
            weight_max: self.weight_max,
            arity_max: self.arity_max,
            ..SpanConfig::default()
        }
    }

    fn twist(&self) -> Option<&[Scalar]> {
        if self.twist.is_empty() {
            None
        } else {
            Some(&self.twist)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Resolve,
    Cohomology,
    Span,
    Verify,
}

/// A report and the status it maps to.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub report: Value,
}

impl Outcome {
    fn new(status: Status, report: Value) -> Outcome {
        Outcome { status, report }
    }

    fn error(status: Status, kind: &str, message: String) -> Outcome {
        Outcome::new(
            status,
            json!({ "error": { "kind": kind, "message": message } }),
        )
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

impl From<InputError> for Outcome {
    fn from(e: InputError) -> Outcome {
        Outcome::error(Status::InputError, "input", e.to_string())
    }
}

impl From<SpanError> for Outcome {
    fn from(e: SpanError) -> Outcome {
        match e {
            SpanError::WindowExhausted { .. } => {
                Outcome::error(Status::WindowExhausted, "window_exhausted", e.to_string())
            }
            SpanError::Multiplet(m) => InputError::from(m).into(),
            other => Outcome::error(Status::VerificationFailure, "homology", other.to_string()),
        }
    }
}

impl From<TateError> for Outcome {
    fn from(e: TateError) -> Outcome {
        Outcome::error(Status::WindowExhausted, "window_exhausted", e.to_string())
    }
}

/// Parse the spec, validate the configuration and run one command.
pub fn run(command: Command, spec_text: &str, config: &RunConfig) -> Outcome {
    let prepared = AlgebraSpecFile::parse(spec_text).and_then(|spec| {
        config.validate()?;
        let gamma = spec.gamma()?;
        if let Some(q) = config.twist() {
            if q.len() != gamma.n_odd {
                return Err(MultipletError::TwistLength {
                    expected: gamma.n_odd,
                    found: q.len(),
                }
                .into());
            }
            check_twist(&gamma, q)?;
        }
        Ok((spec, gamma))
    });
    let (spec, gamma) = match prepared {
        Ok(x) => x,
        Err(e) => return e.into(),
    };
    let out = match command {
        Command::Resolve => cmd_resolve(&spec, &gamma, config),
        Command::Cohomology => cmd_cohomology(&spec, &gamma, config),
        Command::Span => cmd_span(&spec, &gamma, config),
        Command::Verify => cmd_verify(&spec, &gamma, config),
    };
    out.unwrap_or_else(|e| e)
}

fn bidegree_key(b: Bidegree) -> String {
    format!("{},{}", b.degree, b.weight)
}

fn stage_log(tate: &TateState) -> Value {
    let mut stages: Vec<Value> = tate
        .log
        .iter()
        .map(|l| {
            let counts: BTreeMap<String, usize> = l
                .counts
                .iter()
                .map(|(b, c)| (bidegree_key(*b), *c))
                .collect();
            json!({ "stage": l.stage, "generators": l.names, "counts": counts })
        })
        .collect();
    if tate.closed {
        // the stage that found nothing to kill
        stages.push(json!({ "stage": tate.stage + 1, "generators": [], "counts": {} }));
    }
    Value::Array(stages)
}

fn resolution(gamma: &GammaSpec, config: &RunConfig) -> TateState {
    tate_resolve(gamma, config.weight_max, config.stage_max)
}

pub fn cmd_resolve(
    spec: &AlgebraSpecFile,
    gamma: &GammaSpec,
    config: &RunConfig,
) -> Result<Outcome, Outcome> {
    let tate = resolution(gamma, config);
    let ideal = extract_n(&tate, config.arity_max);
    let differential: BTreeMap<String, String> = tate
        .w_indices()
        .map(|i| {
            let name = tate.ce.generator(i).name.clone();
            let image = tate
                .d
                .image(i)
                .map(|p| tate.ce.fmt_poly(p))
                .unwrap_or_else(|| "0".into());
            (name, image)
        })
        .collect();
    let remaining: BTreeMap<String, usize> = tate
        .remaining
        .iter()
        .map(|(b, c)| (bidegree_key(*b), *c))
        .collect();
    let mut report = json!({
        "name": spec.name,
        "config": config,
        "stages": stage_log(&tate),
        "closed": tate.closed,
        "stage_reached": tate.stage,
        "differential": differential,
        "remaining": remaining,
        "h0_hilbert": tate.h0_hilbert(),
        "ring_hilbert": hilbert_function(gamma, config.weight_max),
        "trusted_degree_min": tate.trusted_degree_min(),
        "n": ideal.report,
    });
    let status = match tate.require_trusted(config.degree_min) {
        Ok(()) => Status::from_passed(ideal.report.passed()),
        Err(e) => {
            report["error"] = json!({ "kind": "window_exhausted", "message": e.to_string() });
            Status::WindowExhausted
        }
    };
    Ok(Outcome::new(status, report))
}

fn table_json(t: &CohomologyTable, extra_untrusted: impl Fn(Bidegree) -> bool) -> Value {
    let rows: Vec<Value> = t
        .dims
        .iter()
        .map(|(b, d)| {
            let mut row = json!({ "degree": b.degree, "weight": b.weight, "dim": d });
            if t.untrusted.contains(b) || extra_untrusted(*b) {
                row["untrusted"] = json!(true);
            }
            row
        })
        .collect();
    Value::Array(rows)
}

fn ce_complex(tate: &TateState) -> ChainComplex {
    let basis: Vec<_> = tate.bases().into_values().flatten().collect();
    let (ce, d) = (tate.ce.clone(), tate.d.clone());
    let alg = ce.clone();
    complex_on(
        &ce,
        &basis,
        Rc::new(move |m| d.act(&alg, &Poly::monomial(m.clone(), Scalar::ONE))),
        false,
    )
}

fn windowed(c: &ChainComplex, config: &RunConfig) -> CohomologyTable {
    cohomology(&c.truncated(&config.window()))
}

pub fn cmd_cohomology(
    spec: &AlgebraSpecFile,
    gamma: &GammaSpec,
    config: &RunConfig,
) -> Result<Outcome, Outcome> {
    let w = config.weight_max;
    let mut tables = BTreeMap::new();
    let tate = resolution(gamma, config);
    let ce_t = ce_complex(&TateState::stage_one(gamma, w, 1));
    tables.insert("ce_t", table_json(&windowed(&ce_t, config), |_| false));
    let resolved = ce_complex(&tate);
    let edge = tate.trusted_degree_min();
    tables.insert(
        "ce_t_tilde",
        table_json(&windowed(&resolved, config), |b| {
            edge.is_some_and(|e| b.degree < e)
        }),
    );

    let space = Superspace::new(gamma, vec![]);
    tables.insert(
        "multiplet_d0",
        table_json(
            &windowed(&Multiplet::canonical_d0(&space, w).complex(false), config),
            |_| false,
        ),
    );
    let canonical = Multiplet::canonical(&space, w);
    tables.insert(
        "multiplet",
        table_json(&windowed(&canonical.complex(false), config), |_| false),
    );
    if let Some(q) = config.twist() {
        let twisted = canonical
            .twisted(q)
            .map_err(|e| Outcome::from(InputError::from(e)))?;
        tables.insert(
            "multiplet_twisted",
            table_json(&windowed(&twisted.complex(true), config), |_| false),
        );
    }
    let mut modules = BTreeMap::new();
    for m in &spec.modules {
        let mm = ModuleMultiplet::new(gamma, m).map_err(|e| Outcome::from(InputError::from(e)))?;
        let sq = mm.square_zero(w);
        if !sq.violations.is_empty() {
            modules.insert(
                m.name.clone(),
                json!({ "not_square_zero": mm.violating_elements(w) }),
            );
            continue;
        }
        let mm = Rc::new(mm);
        let basis = mm.basis(w);
        let inner = mm.clone();
        let c = complex_on(
            &mm.alg,
            &basis,
            Rc::new(move |x| inner.differential(x)),
            false,
        );
        modules.insert(m.name.clone(), table_json(&windowed(&c, config), |_| false));
    }
    let all_modules_ok = modules.values().all(|v| v.get("not_square_zero").is_none());
    let mut report = json!({ "name": spec.name, "config": config, "tables": tables });
    if !modules.is_empty() {
        report["modules"] = json!(modules);
    }
    Ok(Outcome::new(Status::from_passed(all_modules_ok), report))
}

pub fn cmd_span(
    spec: &AlgebraSpecFile,
    gamma: &GammaSpec,
    config: &RunConfig,
) -> Result<Outcome, Outcome> {
    let rep = verify_span(&spec.name, gamma, config.twist(), config.span_config())?;
    let status = Status::from_passed(rep.passed);
    Ok(Outcome::new(
        status,
        serde_json::to_value(&rep).expect("reports serialize"),
    ))
}

/// Vanishing of `H^{-j}` for `0 < j < stage` and `H^0` against the ring,
/// both by dense ranks.
fn tate_checks(gamma: &GammaSpec, tate: &TateState) -> BTreeMap<String, Check> {
    let mut out = BTreeMap::new();
    let ring = hilbert_function(gamma, tate.weight_max);
    let h0 = tate.dense_hilbert(0);
    out.insert(
        "h0_equals_ring".to_string(),
        Check::from_bool(h0 == ring && tate.h0_hilbert() == ring, || {
            format!("{h0:?} vs {ring:?}")
        }),
    );
    let top = if tate.closed {
        tate.stage + 1
    } else {
        tate.stage
    };
    let mut neg = Vec::new();
    for j in 1..top {
        let h = tate.dense_hilbert(-(j as i32));
        if h.iter().any(|&d| d > 0) {
            neg.push(format!("H^-{j} = {h:?}"));
        }
    }
    out.insert(
        "negative_cohomology_vanishes".to_string(),
        Check::from_bool(neg.is_empty(), || neg.join("; ")),
    );
    out
}

pub fn cmd_verify(
    spec: &AlgebraSpecFile,
    gamma: &GammaSpec,
    config: &RunConfig,
) -> Result<Outcome, Outcome> {
    let w = config.weight_max;
    let mut checks: BTreeMap<String, Value> = BTreeMap::new();
    let mut passed = true;
    let mut put = |name: &str, ok: bool, v: Value| {
        passed &= ok;
        checks.insert(name.to_string(), v);
    };

    let tate = resolution(gamma, config);
    tate.require_trusted(config.degree_min)?;
    for (k, c) in tate_checks(gamma, &tate) {
        put(&format!("tate.{k}"), c.passed, json!(c));
    }
    let ideal = extract_n(&tate, config.arity_max);
    put(
        "tate.n_is_minimal_ideal",
        ideal.report.passed(),
        json!(ideal.report),
    );

    for m in &spec.modules {
        let mm = ModuleMultiplet::new(gamma, m).map_err(|e| Outcome::from(InputError::from(e)))?;
        let sq = mm.square_zero(w);
        let bad = mm.violating_elements(w);
        let c = Check::from_bool(sq.violations.is_empty(), || {
            format!("D^2 != 0 on module elements {}", bad.join(", "))
        });
        put(
            &format!("module.{}.square_zero", m.name),
            c.passed,
            json!(c),
        );
    }
    if let Some(g0) = &spec.g0 {
        let r = check_g0(gamma, g0, w).map_err(|e| Outcome::from(InputError::from(e)))?;
        put("g0", r.passed(), json!(r));
    }

    let span = verify_span(&spec.name, gamma, config.twist(), config.span_config())?;
    put(
        "span",
        span.passed,
        serde_json::to_value(&span).expect("reports serialize"),
    );

    let cfg = config.span_config();
    let (coherence, binary, dim) = component_fields(
        gamma,
        w.min(cfg.coherence_weight),
        config.arity_max,
        cfg.coherence_weight,
    )?;
    put(
        "component_fields.a_infinity",
        coherence.passed,
        json!(coherence),
    );
    put(
        "component_fields.binary_product",
        binary.passed,
        json!(binary),
    );
    checks.insert("component_fields.dim".into(), json!(dim));

    let report = json!({
        "name": spec.name,
        "config": config,
        "checks": checks,
        "passed": passed,
    });
    Ok(Outcome::new(Status::from_passed(passed), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: &str = r#"{"name": "T1", "n_odd": 2, "n_even": 1,
        "gamma": [{"alpha": 1, "beta": 2, "mu": 1, "coeff": "1/2"}]}"#;

    #[test]
    fn spec_round_trip_fills_symmetric_entries() {
        let spec = AlgebraSpecFile::parse(T1).unwrap();
        let g = spec.gamma().unwrap();
        assert_eq!(g, GammaSpec::t1());
        assert_eq!(g.coeff(0, 1, 0), Scalar::new(1, 2));
    }

    #[test]
    fn parse_errors_carry_a_line() {
        match AlgebraSpecFile::parse("{\n\"name\": 3}") {
            Err(InputError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            AlgebraSpecFile::parse("  "),
            Err(InputError::Empty)
        ));
    }

    #[test]
    fn twist_strings() {
        assert_eq!(parse_twist("").unwrap(), vec![]);
        assert_eq!(
            parse_twist("0, 1/2").unwrap(),
            vec![Scalar::ZERO, Scalar::new(1, 2)]
        );
        assert!(parse_twist("1,x").is_err());
    }

    #[test]
    fn resolve_t1_closes_after_stage_one() {
        let out = run(Command::Resolve, T1, &RunConfig::default());
        assert_eq!(out.status, Status::Pass);
        let stages = out.report["stages"].as_array().unwrap();
        assert_eq!(stages[0]["counts"], json!({"-1,2": 1}));
        assert_eq!(stages[1]["generators"], json!([]));
    }
}
