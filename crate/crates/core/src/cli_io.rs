//! File formats, command bodies and exit codes for the `slp` binary.
//!
//! Angles anywhere in the JSON input may be written as `{"pi_mult": x}`.
//! Multiples of π/4 then use exact sines and cosines so fixtures can land
//! on the measure-zero sets.

use crate::bc_manifold::{self, CanonicalForm, Chart, ChartCoordinates};
use crate::branch_lab::{self, BranchTrace, Builtin, Coordinate, Family, FamilyKind, JumpEvent};
use crate::core_model::{BoundaryCondition, Equation, Problem};
use crate::linalg::Mat24;
use crate::scalar::Cx;
use crate::singular_sets::{self, EquationMembership, MinorCase, Side};
use crate::spectral_engine::{self, Spectrum};
use crate::tolerances::Tolerances;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("{0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Validation(_) | CliError::UnknownExample(_) => 2,
            CliError::Io(_) | CliError::Parse(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::UnknownExample(_) => "unknown_example",
            CliError::VerificationFailed(_) => "verification_failed",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        json!({"error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code()})
    }
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// Tolerances with overrides from a JSON object of name → value.
pub fn tolerances_from_json(text: Option<&str>) -> Result<Tolerances, CliError> {
    let Some(text) = text else {
        return Ok(Tolerances::default());
    };
    let map: BTreeMap<String, f64> =
        serde_json::from_str(text).map_err(|e| parse_err(format!("SLP_TOL_OVERRIDES: {e}")))?;
    Tolerances::default().with_overrides(&map).map_err(invalid)
}

/// Tolerances from the `SLP_TOL_OVERRIDES` environment variable.
pub fn tolerances_from_env() -> Result<Tolerances, CliError> {
    tolerances_from_json(std::env::var("SLP_TOL_OVERRIDES").ok().as_deref())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, CliError> {
    v.get(key).ok_or_else(|| parse_err(format!("missing field `{key}`")))
}

fn number(v: &Value, what: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| parse_err(format!("`{what}` must be a number")))
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("`{what}` must be an array")))?
        .iter()
        .map(|x| number(x, what))
        .collect()
}

fn complex(v: &Value, what: &str) -> Result<Cx<f64>, CliError> {
    if let Some(x) = v.as_f64() {
        return Ok(Cx::new(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Cx::new(number(re, what)?, number(im, what)?)),
        _ => Err(parse_err(format!("`{what}` must be a number or [re, im]"))),
    }
}

/// Cosine and sine of an angle given as a number or `{"pi_mult": x}`.
pub fn angle_trig(v: &Value, what: &str) -> Result<(f64, f64, f64), CliError> {
    if let Some(m) = v.get("pi_mult") {
        let m = number(m, what)?;
        let quarters = 4.0 * m;
        if quarters.fract() == 0.0 && quarters.abs() < 1e15 {
            let h = FRAC_1_SQRT_2;
            let table = [(1.0, 0.0), (h, h), (0.0, 1.0), (-h, h), (-1.0, 0.0), (-h, -h), (0.0, -1.0), (h, -h)];
            let (c, s) = table[(quarters as i64).rem_euclid(8) as usize];
            return Ok((m * PI, c, s));
        }
        let a = m * PI;
        return Ok((a, a.cos(), a.sin()));
    }
    let a = number(v, what)?;
    Ok((a, a.cos(), a.sin()))
}

pub fn angle(v: &Value, what: &str) -> Result<f64, CliError> {
    Ok(angle_trig(v, what)?.0)
}

pub fn parse_equation(v: &Value) -> Result<Equation<f64>, CliError> {
    let n = field(v, "N")?.as_u64().ok_or_else(|| parse_err("`N` must be a non-negative integer"))? as usize;
    let f = numbers(field(v, "f")?, "f")?;
    let q = numbers(field(v, "q")?, "q")?;
    let w = numbers(field(v, "w")?, "w")?;
    if f.len() != n + 1 || q.len() != n || w.len() != n {
        return Err(invalid(format!(
            "N = {n} needs {} f, {n} q and {n} w values; got {}, {}, {}",
            n + 1,
            f.len(),
            q.len(),
            w.len()
        )));
    }
    Equation::new(f, q, w).map_err(invalid)
}

pub fn parse_chart_coordinates(v: &Value) -> Result<ChartCoordinates<f64>, CliError> {
    let name = field(v, "chart")?.as_str().ok_or_else(|| parse_err("`chart` must be a string"))?;
    let chart = Chart::parse(name).ok_or_else(|| invalid(format!("unknown chart `{name}`")))?;
    Ok(ChartCoordinates::new(
        chart,
        number(field(v, "first")?, "first")?,
        complex(field(v, "z")?, "z")?,
        number(field(v, "second")?, "second")?,
    ))
}

pub fn parse_bc(v: &Value) -> Result<BoundaryCondition<f64>, CliError> {
    if let Some(m) = v.get("matrix") {
        let rows = m.as_array().filter(|r| r.len() == 2).ok_or_else(|| parse_err("`matrix` must have 2 rows"))?;
        let mut out: Mat24<f64> = [[Cx::new(0.0, 0.0); 4]; 2];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_array().filter(|r| r.len() == 4).ok_or_else(|| parse_err("matrix rows need 4 entries"))?;
            for (j, e) in row.iter().enumerate() {
                out[i][j] = complex(e, "matrix entry")?;
            }
        }
        return BoundaryCondition::new(out).map_err(invalid);
    }
    if let Some(s) = v.get("separated") {
        let (alpha, ca, sa) = angle_trig(field(s, "alpha")?, "alpha")?;
        let (beta, cb, sb) = angle_trig(field(s, "beta")?, "beta")?;
        if !(0.0..PI).contains(&alpha) || !(beta > 0.0 && beta <= PI) {
            return Err(invalid(format!("separated angles need α in [0, π) and β in (0, π], got {alpha}, {beta}")));
        }
        let m = crate::core_model::real_matrix([[ca, -sa, 0.0, 0.0], [0.0, 0.0, cb, -sb]]);
        return BoundaryCondition::new(m).map_err(invalid);
    }
    if let Some(c) = v.get("coupled") {
        let gamma = angle(field(c, "gamma")?, "gamma")?;
        let k = field(c, "K")?.as_array().filter(|r| r.len() == 2).ok_or_else(|| parse_err("`K` must be 2x2"))?;
        let mut kk = [[0.0; 2]; 2];
        for (i, row) in k.iter().enumerate() {
            let row = numbers(row, "K")?;
            if row.len() != 2 {
                return Err(parse_err("`K` must be 2x2"));
            }
            kk[i] = [row[0], row[1]];
        }
        return bc_manifold::coupled_matrix(gamma, kk).map_err(invalid);
    }
    if v.get("chart").is_some() {
        return Ok(parse_chart_coordinates(v)?.to_bc());
    }
    Err(parse_err("bc needs one of `matrix`, `separated`, `coupled` or `chart`"))
}

pub fn parse_problem(v: &Value) -> Result<Problem<f64>, CliError> {
    if let Some(name) = v.get("builtin") {
        let name = name.as_str().ok_or_else(|| parse_err("`builtin` must be a string"))?;
        let b = Builtin::parse(name).ok_or_else(|| CliError::UnknownExample(name.into()))?;
        let nu = angle(field(v, "nu")?, "nu")?;
        return b.problem(nu).map_err(invalid);
    }
    let eq = parse_equation(field(v, "equation")?)?;
    let bc = parse_bc(field(v, "bc")?)?;
    Ok(Problem::new(eq, bc))
}

pub fn parse_json(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("malformed JSON: {e}")))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cx_json(z: Cx<f64>) -> Value {
    json!([z.re, z.im])
}

pub fn equation_to_json(eq: &Equation<f64>) -> Value {
    json!({"N": eq.len(), "f": eq.f(), "q": eq.q(), "w": eq.w()})
}

pub fn bc_to_json(bc: &BoundaryCondition<f64>) -> Value {
    let rows: Vec<Value> = bc.matrix().iter().map(|r| Value::Array(r.iter().map(|z| cx_json(*z)).collect())).collect();
    json!({"matrix": rows})
}

pub fn problem_to_json(p: &Problem<f64>) -> Value {
    json!({"equation": equation_to_json(&p.equation), "bc": bc_to_json(&p.bc)})
}

pub fn canonical_to_json(c: &CanonicalForm<f64>) -> Value {
    match c {
        CanonicalForm::Separated { alpha, beta } => json!({"separated": {"alpha": alpha, "beta": beta}}),
        CanonicalForm::Coupled { gamma, k } => json!({"coupled": {"gamma": gamma, "K": k}}),
    }
}

pub fn spectrum_to_json(s: &Spectrum<f64>) -> Value {
    let eig: Vec<Value> =
        s.eigenvalues.iter().map(|e| json!({"value": e.value, "multiplicity": e.multiplicity})).collect();
    let mut out = json!({
        "count": s.total_multiplicity(),
        "r": s.r,
        "theta": cx_json(s.theta),
        "eigenvalues": eig,
        "near_singular": s.near_singular,
    });
    if !s.warnings.is_empty() {
        out["warnings"] = json!(s.warnings);
    }
    out
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::On => "on",
        Side::Plus => "plus",
        Side::Minus => "minus",
    }
}

/// Which part of the problem is held fixed when classifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixed {
    Equation,
    Condition,
}

impl Fixed {
    pub fn parse(s: &str) -> Option<Fixed> {
        match s {
            "eq" => Some(Fixed::Equation),
            "bc" => Some(Fixed::Condition),
            _ => None,
        }
    }
}

pub fn classification_to_json(p: &Problem<f64>, fixed: Option<Fixed>, tol: &Tolerances) -> Value {
    let mut out = Map::new();
    if fixed != Some(Fixed::Equation) {
        let c = singular_sets::classify_equation_side_with(&p.bc, &p.equation, tol);
        let case = match c.case {
            MinorCase::BothNonzero => "both_nonzero",
            MinorCase::OneZero => "one_zero",
            MinorCase::BothZero => "both_zero",
        };
        out.insert(
            "equation_side".into(),
            json!({
                "mu1": cx_json(c.mu1),
                "mu2": cx_json(c.mu2),
                "eta": c.eta,
                "case": case,
                "membership": c.membership.label(),
                "in_set": c.membership.is_singular(),
                "reachable": !matches!(c.membership, EquationMembership::NotSingularCaseII | EquationMembership::NotSingularCaseIIIa0),
                "distance": c.distance,
                "warnings": c.warnings,
            }),
        );
    }
    if fixed != Some(Fixed::Condition) {
        let c = singular_sets::classify_bc_side_with(&p.equation, &p.bc, tol);
        let charts: Vec<Value> = c
            .charts
            .iter()
            .map(|m| json!({"chart": m.coords.chart.to_string(), "coords": m.coords.coords, "label": m.label("B"), "residual": m.residual}))
            .collect();
        out.insert(
            "bc_side".into(),
            json!({
                "xi": c.xi,
                "labels": c.labels(),
                "in_set": c.in_set(),
                "in_canonical_set": c.in_canonical_set(),
                "is_c_point": c.is_c_point,
                "charts": charts,
                "separated": c.separated.as_ref().map(|s| json!({
                    "alpha": s.alpha, "beta": s.beta, "alpha_side": side_name(s.alpha_side), "beta_is_pi": s.beta_is_pi,
                })),
                "coupled": c.coupled.as_ref().map(|k| json!({
                    "gamma": k.gamma, "K": k.k, "side": k.side.map(side_name),
                })),
                "distance": c.distance,
            }),
        );
    }
    let c = singular_sets::classify_product_with(p, tol);
    out.insert(
        "product".into(),
        json!({
            "labels": c.labels(),
            "in_set": c.in_set(),
            "is_p5": c.is_p5,
            "theta": cx_json(c.theta),
            "theta_vanishes": c.theta_vanishes,
            "count": c.count,
            "distance": c.distance,
        }),
    );
    let charts: Vec<String> = bc_manifold::covering_charts(&p.bc).iter().map(|c| c.to_string()).collect();
    out.insert("covering_charts".into(), json!(charts));
    out.insert("canonical_form".into(), canonical_to_json(&bc_manifold::canonical_form_with(&p.bc, tol)));
    Value::Object(out)
}

pub fn parse_coordinate(s: &str) -> Option<Coordinate> {
    let index = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.parse::<usize>().ok());
    match s {
        "fN" => return Some(Coordinate::FN),
        "alpha" => return Some(Coordinate::Alpha),
        "beta" => return Some(Coordinate::Beta),
        _ => {}
    }
    if let Some(j) = index("invf") {
        return Some(Coordinate::InvF(j));
    }
    if let Some(n) = index("q") {
        return Some(Coordinate::Q(n));
    }
    if let Some(n) = index("w") {
        return Some(Coordinate::W(n));
    }
    let (chart, which) = s.split_once('.')?;
    let chart = Chart::parse(chart)?;
    match which {
        "first" => Some(Coordinate::ChartFirst(chart)),
        "second" => Some(Coordinate::ChartSecond(chart)),
        _ => None,
    }
}

fn parse_domain(v: &Value) -> Result<(f64, f64), CliError> {
    let d = numbers(field(v, "domain")?, "domain")?;
    match d.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        [_, _] => Err(invalid("domain needs a < b")),
        _ => Err(parse_err("`domain` must be [a, b]")),
    }
}

fn normalise(bc: &BoundaryCondition<f64>, chart: Chart) -> Result<ChartCoordinates<f64>, CliError> {
    bc_manifold::normalize_to_chart(bc, chart).map_err(invalid)
}

pub fn parse_family(v: &Value) -> Result<Family, CliError> {
    let kind = field(v, "kind")?.as_str().ok_or_else(|| parse_err("`kind` must be a string"))?;
    let right_open = v.get("right_open").and_then(Value::as_bool).unwrap_or(false);
    let family_kind = match kind {
        "builtin" => {
            let name = field(v, "builtin")?.as_str().ok_or_else(|| parse_err("`builtin` must be a string"))?;
            let b = Builtin::parse(name).ok_or_else(|| CliError::UnknownExample(name.into()))?;
            let mut fam = b.family();
            if v.get("domain").is_some() {
                fam.domain = parse_domain(v)?;
                fam.right_open = right_open;
            }
            return Ok(fam);
        }
        "equation-affine" => {
            let from = parse_problem(field(v, "from")?)?;
            let to_v = field(v, "to")?;
            let to = match to_v.get("equation") {
                Some(eq) => parse_equation(eq)?,
                None => parse_equation(to_v)?,
            };
            if let Some(bc) = to_v.get("bc") {
                if !parse_bc(bc)?.same_condition(&from.bc, 1e-12) {
                    return Err(invalid("equation-affine families keep the boundary condition fixed"));
                }
            }
            FamilyKind::EquationAffine { from: from.equation, to, bc: from.bc }
        }
        "chart-affine" => {
            let from = parse_problem(field(v, "from")?)?;
            let to = parse_chart_coordinates(field(v, "to")?)?;
            FamilyKind::ChartAffine { from: normalise(&from.bc, to.chart)?, to, equation: from.equation }
        }
        "product-affine" => {
            let name = field(v, "chart")?.as_str().ok_or_else(|| parse_err("`chart` must be a string"))?;
            let chart = Chart::parse(name).ok_or_else(|| invalid(format!("unknown chart `{name}`")))?;
            let from = parse_problem(field(v, "from")?)?;
            let to = parse_problem(field(v, "to")?)?;
            FamilyKind::ProductAffine {
                from: (from.equation, normalise(&from.bc, chart)?),
                to: (to.equation, normalise(&to.bc, chart)?),
            }
        }
        "separated-angle" => {
            let equation = parse_equation(field(v, "equation")?)?;
            match field(v, "angle")?.as_str() {
                Some("alpha") => FamilyKind::SeparatedAlpha { equation, beta: angle(field(v, "beta")?, "beta")? },
                Some("beta") => FamilyKind::SeparatedBeta { equation, alpha: angle(field(v, "alpha")?, "alpha")? },
                _ => return Err(parse_err("`angle` must be \"alpha\" or \"beta\"")),
            }
        }
        "coupled-sweep" => {
            let equation = parse_equation(field(v, "equation")?)?;
            match field(v, "entry")?.as_str() {
                Some("k11") => {
                    let k12 = number(field(v, "k12")?, "k12")?;
                    if k12 == 0.0 {
                        return Err(invalid("k11 sweeps need k12 ≠ 0"));
                    }
                    FamilyKind::CoupledK11 {
                        equation,
                        gamma: angle(field(v, "gamma")?, "gamma")?,
                        k12,
                        k22: number(field(v, "k22")?, "k22")?,
                    }
                }
                Some("gamma") => {
                    let k = field(v, "K")?;
                    let rows: Vec<Vec<f64>> = k
                        .as_array()
                        .ok_or_else(|| parse_err("`K` must be 2x2"))?
                        .iter()
                        .map(|r| numbers(r, "K"))
                        .collect::<Result<_, _>>()?;
                    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                        return Err(parse_err("`K` must be 2x2"));
                    }
                    FamilyKind::CoupledGamma { equation, k: [[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]] }
                }
                _ => return Err(parse_err("`entry` must be \"k11\" or \"gamma\"")),
            }
        }
        "axis" => {
            let base = parse_problem(field(v, "base")?)?;
            let name = field(v, "coordinate")?.as_str().ok_or_else(|| parse_err("`coordinate` must be a string"))?;
            let coordinate = parse_coordinate(name).ok_or_else(|| invalid(format!("unknown coordinate `{name}`")))?;
            FamilyKind::Axis { base, coordinate }
        }
        other => return Err(invalid(format!("unknown family kind `{other}`"))),
    };
    let mut fam = Family::new(family_kind, parse_domain(v)?);
    fam.right_open = right_open;
    // resolving both ends catches malformed families before a long sweep
    let (a, b) = fam.domain;
    fam.resolve(a).map_err(invalid)?;
    if !right_open {
        fam.resolve(b).map_err(invalid)?;
    }
    Ok(fam)
}

/// The trace as CSV: ν, λ_0..λ_{k_max-1} with empty cells, count.
pub fn trace_to_csv<W: Write>(trace: &BranchTrace, out: W) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["nu".to_string()];
    header.extend((0..trace.max_count()).map(|n| format!("lambda_{n}")));
    header.push("count".into());
    w.write_record(&header).map_err(io)?;
    for (i, nu) in trace.grid.iter().enumerate() {
        let mut row = vec![format!("{nu:?}")];
        row.extend(trace.values.iter().map(|v| v[i].map(|x| format!("{x:?}")).unwrap_or_default()));
        row.push(trace.counts[i].map(|c| c.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn event_kinds(e: &JumpEvent) -> Vec<String> {
    let mut kinds = Vec::new();
    if e.is_count_drop() {
        kinds.push("count-drop".to_string());
    }
    for s in e.sides() {
        for (sign, label) in [(-1, "-inf"), (1, "+inf")] {
            for n in s.diverging(sign) {
                kinds.push(format!("divergence({label}, {}, {n})", s.side));
            }
        }
        let mut shifts = s.shifts();
        shifts.dedup();
        for k in shifts.into_iter().filter(|k| *k > 0) {
            kinds.push(format!("index-shift({}, {k})", s.side));
        }
        for n in s.unclassified() {
            kinds.push(format!("unclassified({}, {n})", s.side));
        }
    }
    kinds
}

pub fn events_to_json(trace: &BranchTrace) -> Value {
    let events: Vec<Value> = trace
        .events
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("events serialise");
            v["kinds"] = json!(event_kinds(e));
            v
        })
        .collect();
    json!({"candidates": trace.candidates, "events": events})
}

/// Result of comparing engine eigenvalues with a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub points: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// count and eigenvalues at the singular parameter
    pub singular_count: usize,
    pub singular_values: Vec<f64>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "points": self.points,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "singular_parameter": {"count": self.singular_count, "eigenvalues": self.singular_values},
            "passed": self.passed(),
        })
    }
}

/// Engine against closed form at the 256 midpoints (i + 1/2)/256 of the domain.
pub fn verify_example(name: &str, tol: &Tolerances) -> Result<VerifyReport, CliError> {
    let b = Builtin::parse(name).ok_or_else(|| CliError::UnknownExample(name.into()))?;
    let (lo, hi, _) = b.domain();
    let points = 256;
    let mut max_error = 0.0f64;
    for i in 0..points {
        let nu = lo + (hi - lo) * (i as f64 + 0.5) / points as f64;
        let p = b.problem(nu).map_err(invalid)?;
        let expected = b.closed_form(nu);
        let err = match spectral_engine::eigenvalues_with(&p, tol) {
            Ok(s) if s.values().len() == expected.len() => {
                s.values().iter().zip(&expected).fold(0.0f64, |m, (a, e)| m.max((a - e).abs()))
            }
            _ => f64::INFINITY,
        };
        max_error = max_error.max(err);
    }
    let p = b.problem(b.singular_parameter()).map_err(invalid)?;
    let s = spectral_engine::eigenvalues_by_degree_with(&p, tol).map_err(invalid)?;
    Ok(VerifyReport {
        name: b.name().into(),
        points,
        max_error,
        tolerance: 1e-9,
        singular_count: s.total_multiplicity(),
        singular_values: s.values(),
    })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialise")
}

/// `slp spectrum`: returns the JSON text, also written to `output` if given.
pub fn cmd_spectrum(input: &Path, output: Option<&Path>, tol: &Tolerances) -> Result<String, CliError> {
    let p = parse_problem(&parse_json(&read_file(input)?)?)?;
    let s = spectral_engine::eigenvalues_with(&p, tol).map_err(invalid)?;
    let text = pretty(&spectrum_to_json(&s));
    if let Some(path) = output {
        write_file(path, &text)?;
    }
    Ok(text)
}

pub fn cmd_classify(input: &Path, fixed: Option<Fixed>, tol: &Tolerances) -> Result<String, CliError> {
    let p = parse_problem(&parse_json(&read_file(input)?)?)?;
    Ok(pretty(&classification_to_json(&p, fixed, tol)))
}

/// `slp sweep`: writes the CSV and optional events file, returns a summary.
pub fn cmd_sweep(
    family: &Path,
    grid: usize,
    output: &Path,
    events: Option<&Path>,
    tol: &Tolerances,
) -> Result<String, CliError> {
    let fam = parse_family(&parse_json(&read_file(family)?)?)?;
    let tr = branch_lab::trace_with(&fam, grid, tol).map_err(invalid)?;
    let file = std::fs::File::create(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    trace_to_csv(&tr, file)?;
    let ev = events_to_json(&tr);
    if let Some(path) = events {
        write_file(path, &pretty(&ev))?;
    }
    let unclassified = tr.events.iter().filter(|e| e.has_unclassified()).count();
    Ok(pretty(&json!({
        "grid": grid,
        "csv": output.display().to_string(),
        "events": tr.events.len(),
        "candidates": tr.candidates,
        "unclassified_events": unclassified,
    })))
}

/// `slp verify-example`: the report text, or `VerificationFailed` carrying it.
pub fn cmd_verify_example(name: &str, tol: &Tolerances) -> Result<String, CliError> {
    let report = verify_example(name, tol)?;
    let text = pretty(&report.to_json());
    if report.passed() {
        Ok(text)
    } else {
        Err(CliError::VerificationFailed(text))
    }
}
