//! The command line front end: JSON input schema, the `analyze` pipeline,
//! report rendering and the subcommand table.
//!
//! Reports are built as `serde_json::Value` trees. Object keys come out
//! sorted, so identical inputs give byte-identical output.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::degeneration::{central_fibre_report, ke_test_with, stability_verdict, CentralFibreReport, KeTest, KeVerdict, StabilityVerdict};
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::expint::ExpIntOptions;
use crate::hfun::{HBreakdown, HFunctional, HSource, PLConcave, PLPiece};
use crate::minimize::{minimize_with, MinimizeOptions, MinimizerReport};
use crate::oracle::{mc_integrate, McConfig};
use crate::polytope::{build_polytope, standard_lattice, ConvexPolytope, HalfSpace, PolytopeInput};
use crate::presets::{self, PRESET_NAMES};
use crate::rootsys::{build_root_system, root_label, Entry, RootSystem, RootSystemSpec};
use crate::testconfig::{approximate_p, filtration_table, filtration_table_from_values, FiltrationTable, RankMethod, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub tol_wall: f64,
    pub tol_kkt: f64,
    pub ke_tol: f64,
    pub mc_check: Option<u64>,
    pub seed: u64,
    pub precision_target: Option<f64>,
    pub format: Format,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { tol_wall: 1e-7, tol_kkt: 1e-8, ke_tol: 1e-8, mc_check: None, seed: 0, precision_target: None, format: Format::Json }
    }
}

impl AnalysisOptions {
    pub fn expint(&self) -> ExpIntOptions {
        match self.precision_target {
            Some(t) => ExpIntOptions::default().with_precision_target(t),
            None => ExpIntOptions::default(),
        }
    }

    pub fn minimize(&self) -> MinimizeOptions {
        MinimizeOptions { tol_wall: self.tol_wall, tol_kkt: self.tol_kkt, expint: self.expint(), ..MinimizeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisInput {
    pub root_system: RootSystemSpec,
    pub polytope: PolytopeInput,
    /// The polytope is the W-invariant P; intersect it with the chamber.
    pub append_chamber: bool,
    pub options: AnalysisOptions,
}

// ---------- number formatting ----------

/// Decimal string with 15 significant digits.
pub fn sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..15).contains(&e) {
        format!("{:.*}", (14 - e).max(0) as usize, x)
    } else {
        format!("{x:.14e}")
    }
}

fn num(x: f64) -> Value {
    Value::String(sig15(x))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn qnum(x: &Q) -> Value {
    json!({ "decimal": sig15(exact::to_f64(x)), "exact": exact::fmt_rational(x) })
}

fn qvec(xs: &[Q]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(exact::fmt_rational(x))).collect())
}

// ---------- input parsing ----------

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn parse_q(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => exact::parse_rational(s),
        Value::Number(n) => exact::parse_rational(&n.to_string()),
        other => Err(schema(format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

fn parse_qvec(v: &Value) -> Result<Vec<Q>> {
    v.as_array().ok_or_else(|| schema(format!("expected an array, got {v}")))?.iter().map(parse_q).collect()
}

fn parse_entry(v: &Value) -> Result<Entry> {
    if let Some(f) = v.get("float") {
        return f.as_f64().map(Entry::Float).ok_or_else(|| schema("\"float\" entries must be JSON numbers"));
    }
    parse_q(v).map(Entry::Exact)
}

fn parse_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema(format!("bad number for {key}"))),
        Value::String(s) => s.trim().parse().map_err(|_| schema(format!("bad number for {key}: `{s}`"))),
        _ => Err(schema(format!("{key} must be a number"))),
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(format!("unknown key `{k}` in {what}"))),
        None => Ok(()),
    }
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(format!("{what} must be a JSON object")))
}

pub fn parse_root_system(v: &Value) -> Result<RootSystemSpec> {
    let obj = as_object(v, "root_system")?;
    check_keys(obj, &["catalog", "catalog_name", "simple_roots", "central_rank"], "root_system")?;
    let catalog_name = match obj.get("catalog").or_else(|| obj.get("catalog_name")) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(schema("catalog must be a string")),
        None => None,
    };
    let simple_roots = match obj.get("simple_roots") {
        Some(rows) => Some(
            rows.as_array()
                .ok_or_else(|| schema("simple_roots must be an array of rows"))?
                .iter()
                .map(|r| r.as_array().ok_or_else(|| schema("each simple root must be an array"))?.iter().map(parse_entry).collect())
                .collect::<Result<Vec<Vec<Entry>>>>()?,
        ),
        None => None,
    };
    let central_rank = match obj.get("central_rank") {
        Some(v) => v.as_u64().ok_or_else(|| schema("central_rank must be a nonnegative integer"))? as usize,
        None => 0,
    };
    Ok(RootSystemSpec { catalog_name, simple_roots, central_rank })
}

pub fn parse_polytope(v: &Value) -> Result<(PolytopeInput, bool)> {
    let obj = as_object(v, "polytope")?;
    check_keys(obj, &["vertices", "inequalities", "append_chamber"], "polytope")?;
    let append = match obj.get("append_chamber") {
        Some(b) => b.as_bool().ok_or_else(|| schema("append_chamber must be a boolean"))?,
        None => false,
    };
    let input = match (obj.get("vertices"), obj.get("inequalities")) {
        (Some(vs), None) => PolytopeInput::Vertices(
            vs.as_array().ok_or_else(|| schema("vertices must be an array"))?.iter().map(parse_qvec).collect::<Result<_>>()?,
        ),
        (None, Some(hs)) => PolytopeInput::Halfspaces(
            hs.as_array()
                .ok_or_else(|| schema("inequalities must be an array"))?
                .iter()
                .map(|h| {
                    let o = as_object(h, "inequality")?;
                    check_keys(o, &["normal", "offset"], "inequality")?;
                    let normal = parse_qvec(o.get("normal").ok_or_else(|| schema("inequality without normal"))?)?;
                    let offset = parse_q(o.get("offset").ok_or_else(|| schema("inequality without offset"))?)?;
                    if normal.iter().all(Zero::is_zero) {
                        return Err(schema("inequality normal must be nonzero"));
                    }
                    Ok(HalfSpace::new(normal, offset))
                })
                .collect::<Result<_>>()?,
        ),
        _ => return Err(schema("polytope needs exactly one of \"vertices\" / \"inequalities\"")),
    };
    Ok((input, append))
}

pub fn parse_options(v: &Value) -> Result<AnalysisOptions> {
    let obj = as_object(v, "options")?;
    check_keys(obj, &["tol_wall", "tol_kkt", "ke_tol", "mc_check", "seed", "precision_target", "format"], "options")?;
    let mut o = AnalysisOptions::default();
    // null means "use the default"
    let obj: Map<String, Value> = obj.iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k.clone(), v.clone())).collect();
    if let Some(x) = obj.get("tol_wall") {
        o.tol_wall = parse_f64(x, "tol_wall")?;
    }
    if let Some(x) = obj.get("tol_kkt") {
        o.tol_kkt = parse_f64(x, "tol_kkt")?;
    }
    if let Some(x) = obj.get("ke_tol") {
        o.ke_tol = parse_f64(x, "ke_tol")?;
    }
    if let Some(x) = obj.get("precision_target") {
        o.precision_target = Some(parse_f64(x, "precision_target")?);
    }
    if let Some(x) = obj.get("mc_check") {
        o.mc_check = Some(x.as_u64().ok_or_else(|| schema("mc_check must be a sample count"))?);
    }
    if let Some(x) = obj.get("seed") {
        o.seed = x.as_u64().ok_or_else(|| schema("seed must be a nonnegative integer"))?;
    }
    if let Some(x) = obj.get("format") {
        o.format = match x.as_str() {
            Some("json") => Format::Json,
            Some("text") => Format::Text,
            _ => return Err(schema("format must be \"json\" or \"text\"")),
        };
    }
    Ok(o)
}

pub fn parse_input(text: &str) -> Result<AnalysisInput> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema(format!("malformed JSON: {e}")))?;
    let obj = as_object(&v, "input")?;
    check_keys(obj, &["root_system", "polytope", "options"], "input")?;
    let root_system = parse_root_system(obj.get("root_system").ok_or_else(|| schema("missing root_system"))?)?;
    let (polytope, append_chamber) = parse_polytope(obj.get("polytope").ok_or_else(|| schema("missing polytope"))?)?;
    let options = match obj.get("options") {
        Some(o) => parse_options(o)?,
        None => AnalysisOptions::default(),
    };
    Ok(AnalysisInput { root_system, polytope, append_chamber, options })
}

/// The normalized input, in the same schema [`parse_input`] reads.
pub fn input_json(input: &AnalysisInput) -> Value {
    let spec = &input.root_system;
    let mut rs = Map::new();
    if let Some(c) = &spec.catalog_name {
        rs.insert("catalog".into(), Value::String(c.clone()));
    }
    if let Some(rows) = &spec.simple_roots {
        let rows = rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|e| match e {
                            Entry::Exact(q) => Value::String(exact::fmt_rational(q)),
                            Entry::Float(x) => json!({ "float": x }),
                        })
                        .collect(),
                )
            })
            .collect();
        rs.insert("simple_roots".into(), Value::Array(rows));
    }
    rs.insert("central_rank".into(), json!(spec.central_rank));
    let mut poly = match &input.polytope {
        PolytopeInput::Vertices(vs) => json!({ "vertices": vs.iter().map(|v| qvec(v)).collect::<Vec<_>>() }),
        PolytopeInput::Halfspaces(hs) => json!({
            "inequalities": hs.iter().map(|h| json!({ "normal": qvec(&h.normal), "offset": exact::fmt_rational(&h.offset) })).collect::<Vec<_>>()
        }),
    };
    poly["append_chamber"] = Value::Bool(input.append_chamber);
    let o = &input.options;
    json!({
        "root_system": rs,
        "polytope": poly,
        "options": {
            "tol_wall": num(o.tol_wall),
            "tol_kkt": num(o.tol_kkt),
            "ke_tol": num(o.ke_tol),
            "mc_check": o.mc_check,
            "seed": o.seed,
            "precision_target": o.precision_target.map(num),
        }
    })
}

// ---------- analysis pipeline ----------

#[derive(Debug, Clone, PartialEq)]
pub struct McCheck {
    pub samples: u64,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub expint_value: f64,
    pub z_score: f64,
}

impl McCheck {
    pub fn passed(&self) -> bool {
        self.z_score <= 3.0
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub input: AnalysisInput,
    pub root_system: RootSystem,
    pub polytope: ConvexPolytope,
    pub ke: KeTest,
    pub minimizer: MinimizerReport,
    pub fibre: CentralFibreReport,
    pub verdict: StabilityVerdict,
    pub h_at_zero: HBreakdown,
    pub h_at_min: HBreakdown,
    pub mc: Option<McCheck>,
}

/// KE test, minimization, central fibre and verdict.
///
/// The minimizer runs even when the KE test passes, so the multipliers at
/// `Λ₀ = 0` are always reported.
pub fn run_analyze(input: &AnalysisInput) -> Result<AnalysisReport> {
    let rs = build_root_system(&input.root_system)?;
    let p = build_polytope(&input.polytope, &rs, input.append_chamber)?;
    let opts = &input.options;
    let hf = HFunctional::new(&rs, &p, opts.expint())?;
    let ke = ke_test_with(&hf, opts.ke_tol)?;
    let minimizer = minimize_with(&hf, &opts.minimize())?;
    let fibre = central_fibre_report(&rs, &p, &minimizer);
    let verdict = stability_verdict(&rs, &minimizer, &fibre)?;
    let h_at_zero = hf.h_vector(&vec![0.0; rs.dim])?;
    let h_at_min = hf.h_vector(&minimizer.lambda0)?;
    let mc = match opts.mc_check {
        Some(n) => Some(mc_check(&hf, &minimizer.lambda0, n, opts.seed)?),
        None => None,
    };
    Ok(AnalysisReport { input: input.clone(), root_system: rs.clone(), polytope: p.clone(), ke, minimizer, fibre, verdict, h_at_zero, h_at_min, mc })
}

/// Monte Carlo estimate of `∫_{P₊} e^{⟨Λ₀,y⟩} π dy` against the exact engine.
pub fn mc_check(hf: &HFunctional, lambda: &[f64], samples: u64, seed: u64) -> Result<McCheck> {
    let pi = hf.density();
    let est = mc_integrate(hf.p_plus, |y| crate::rootsys::dot(lambda, y).exp() * pi.eval(y), &McConfig::new(samples, seed))?;
    let expint_value = hf.moments(lambda)?.ln_z().exp();
    Ok(McCheck { samples, seed, estimate: est.estimate, std_error: est.std_error, expint_value, z_score: est.z_score(expint_value) })
}

fn ke_name(v: KeVerdict) -> &'static str {
    match v {
        KeVerdict::Stable => "Stable",
        KeVerdict::SemistableBoundary => "SemistableBoundary",
        KeVerdict::Unstable => "Unstable",
    }
}

fn simple_label(i: usize) -> String {
    format!("alpha{}", i + 1)
}

fn polytope_json(p: &ConvexPolytope) -> Value {
    json!({
        "dim": p.dim,
        "vertices": p.vertices.iter().map(|v| qvec(v)).collect::<Vec<_>>(),
        "halfspaces": p.halfspaces.iter().map(|h| json!({
            "normal": qvec(&h.normal),
            "offset": exact::fmt_rational(&h.offset),
            "redundant": h.redundant,
        })).collect::<Vec<_>>(),
        "volume": qnum(&p.volume()),
    })
}

fn root_system_json(rs: &RootSystem) -> Value {
    json!({
        "name": rs.name,
        "dim": rs.dim,
        "rank": rs.rank,
        "central_dim": rs.central_dim(),
        "simple_roots": rs.simple_roots.iter().map(|r| nums(r)).collect::<Vec<_>>(),
        "positive_roots": rs.positive_roots.iter().map(|r| root_label(&r.coeffs)).collect::<Vec<_>>(),
        "two_rho": match rs.two_rho_exact() {
            Some(t) => qvec(&t),
            None => nums(&rs.two_rho),
        },
    })
}

fn multipliers_json(m: &[(usize, f64)]) -> Value {
    Value::Array(m.iter().map(|&(i, x)| json!({ "root": simple_label(i), "value": num(x) })).collect())
}

pub fn minimizer_json(rs: &RootSystem, m: &MinimizerReport) -> Value {
    // ⟨α_i^∨, Λ₀⟩, the coordinates of Λ₀ over the fundamental weights
    let coroot: Vec<f64> = (0..rs.rank)
        .map(|i| 2.0 * rs.simple_pairing(i, &m.lambda0) / crate::rootsys::dot(&rs.simple_roots[i], &rs.simple_roots[i]))
        .collect();
    json!({
        "lambda0": nums(&m.lambda0),
        "lambda0_fundamental_coords": nums(&coroot),
        "active_set": m.active_set.iter().map(|&i| simple_label(i)).collect::<Vec<_>>(),
        "accepted_face": m.accepted_face.iter().map(|&i| simple_label(i)).collect::<Vec<_>>(),
        "grad_norm": num(m.grad_norm),
        "multipliers": multipliers_json(&m.multipliers),
        "kkt_residual": num(m.kkt_residual),
        "b_lambda0": nums(&m.b_lambda0),
        "h_min": num(m.h_min),
        "iterations": m.iterations,
        "face_visits": m.face_visits,
        "reduced_hessian_pd": m.reduced_hessian_pd,
        "coercivity_margin": num(m.coercivity_margin),
        "faces": m.faces.iter().map(|f| json!({
            "face": f.face.iter().map(|&i| simple_label(i)).collect::<Vec<_>>(),
            "lambda": nums(&f.lambda),
            "h": num(f.h),
            "converged": f.converged,
            "feasible": f.feasible,
            "multipliers": nums(&f.multipliers),
            "residual": num(f.residual),
            "accepted": f.accepted(m.tol_kkt),
        })).collect::<Vec<_>>(),
    })
}

fn h_json(h: &HBreakdown) -> Value {
    json!({
        "h": num(h.h),
        "s_na": num(h.s_na),
        "l_na": num(h.l_na),
        "normalization": num(h.normalization),
        "source": match &h.source {
            HSource::Vector(v) => json!({ "vector": nums(v) }),
            HSource::PiecewiseLinear => json!("piecewise_linear"),
        },
        "redundant_pieces": h.redundant_pieces,
        "grad": h.grad.as_deref().map(nums),
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> Value {
        let rs = &self.root_system;
        let f = &self.fibre;
        let o = &self.input.options;
        let expint = o.expint();
        let mut out = json!({
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "input": input_json(&self.input),
            "root_system": root_system_json(rs),
            "polytope": polytope_json(&self.polytope),
            "precision": {
                "tol_wall": num(o.tol_wall),
                "tol_kkt": num(o.tol_kkt),
                "ke_tol": num(o.ke_tol),
                "integration_relative_target": num(o.precision_target.unwrap_or(1e-12)),
                "cancellation_limit": num(expint.cancellation_limit),
                "number_format": "15 significant digits; exact p/q where the value is rational",
            },
            "ke_test": {
                "verdict": ke_name(self.ke.verdict),
                "barycenter": nums(&self.ke.barycenter),
                "coefficients": nums(&self.ke.coefficients),
                "residual": num(self.ke.residual),
                "tol": num(self.ke.tol),
            },
            "minimizer": minimizer_json(rs, &self.minimizer),
            "degeneration": {
                "active_roots": f.active_simple_roots.iter().map(|&i| simple_label(i)).collect::<Vec<_>>(),
                "levi_roots": f.levi_positive_roots.iter().map(|&k| root_label(&rs.positive_roots[k].coeffs)).collect::<Vec<_>>(),
                "valuation_cone": f.valuation_cone.iter().map(|n| nums(n)).collect::<Vec<_>>(),
                "horospherical": f.horospherical,
                "isotropy_character": f.isotropy_character.iter().map(|&k| root_label(&rs.positive_roots[k].coeffs)).collect::<Vec<_>>(),
                "h0": {
                    "diagonal_dim": f.h0.diagonal_dim,
                    "lambda_line": f.h0.lambda_line.as_deref().map(nums),
                    "paired": f.h0.paired,
                    "split": f.h0.split,
                },
                "aut_rank": f.aut_rank,
                "counting_identity": f.counting_identity_holds(rs),
                "verdict": self.verdict.kind.name(),
                "multipliers": multipliers_json(&self.verdict.multipliers),
                "residual": num(self.verdict.residual),
                "flow_statement": self.verdict.flow_statement,
                "notes": self.verdict.notes,
            },
            "h": { "at_zero": h_json(&self.h_at_zero), "at_minimizer": h_json(&self.h_at_min) },
        });
        if let Some(mc) = &self.mc {
            out["oracle"] = json!({
                "integrand": "exp(<lambda0, y>) * pi(y) over P+",
                "samples": mc.samples,
                "seed": mc.seed,
                "estimate": num(mc.estimate),
                "std_error": num(mc.std_error),
                "expint_value": num(mc.expint_value),
                "z_score": num(mc.z_score),
                "passed": mc.passed(),
            });
        }
        out
    }
}

// ---------- filtration and approximation reports ----------

pub fn filtration_json(t: &FiltrationTable) -> Value {
    let viol = |k: ViolationKind| {
        Value::Array(
            t.violations_of(k)
                .map(|v| json!({ "points": v.points.iter().map(|p| qvec(p)).collect::<Vec<_>>(), "lhs": num(v.lhs), "rhs": num(v.rhs) }))
                .collect(),
        )
    };
    let g = &t.gamma;
    json!({
        "k": t.k,
        "entries": t.entries.iter().map(|e| json!({
            "lambda": qvec(&e.lambda),
            "s": match &e.s_exact { Some(q) => qnum(q), None => num(e.s) },
        })).collect::<Vec<_>>(),
        "gamma": {
            "values": nums(&g.values),
            "shifted": nums(&g.shifted),
            "exact_values": g.exact_values.as_deref().map(qvec),
            "rank": g.rank,
            "rank_method": match g.method { RankMethod::Exact => "exact", RankMethod::Numeric => "numeric" },
            "rank_tol": g.tol.map(num),
        },
        "violations": {
            "concavity": viol(ViolationKind::Concavity),
            "dominance": viol(ViolationKind::Dominance),
            "w_compatibility": viol(ViolationKind::WCompatibility),
        },
        "valid": t.violations.is_empty(),
    })
}

fn pl_json(f: &PLConcave) -> Value {
    json!({
        "pieces": f.pieces.iter().map(|p| json!({ "c": qnum(&p.c), "lambda": nums(&p.lambda_f64()) })).collect::<Vec<_>>(),
        "rational": f.rational_flag,
    })
}

/// `linear:<λ>` (one piece through 0), `pieces:<c>|<λ>;<c>|<λ>…`, or inline
/// JSON `{"pieces": [{"c": …, "lambda": […]}]}`. Coordinates are comma separated.
pub fn parse_pl(spec: &str, dim: usize) -> Result<PLConcave> {
    let spec = spec.trim();
    let vec = |s: &str| -> Result<Vec<Q>> {
        let v: Vec<Q> = s.split(',').map(exact::parse_rational).collect::<Result<_>>()?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        Ok(v)
    };
    let pieces = if spec.starts_with('{') {
        let v: Value = serde_json::from_str(spec).map_err(|e| schema(format!("malformed PL function JSON: {e}")))?;
        v.get("pieces")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("PL function JSON needs a \"pieces\" array"))?
            .iter()
            .map(|p| {
                let c = parse_q(p.get("c").ok_or_else(|| schema("piece without c"))?)?;
                let lambda = parse_qvec(p.get("lambda").ok_or_else(|| schema("piece without lambda"))?)?;
                if lambda.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: lambda.len() });
                }
                Ok(PLPiece { c, lambda })
            })
            .collect::<Result<Vec<_>>>()?
    } else if let Some(rest) = spec.strip_prefix("linear:") {
        vec![PLPiece { c: Q::zero(), lambda: vec(rest)? }]
    } else if let Some(rest) = spec.strip_prefix("pieces:") {
        rest.split(';')
            .map(|p| {
                let (c, l) = p.split_once('|').ok_or_else(|| schema(format!("piece `{p}` must read c|l1,l2,…")))?;
                Ok(PLPiece { c: exact::parse_rational(c)?, lambda: vec(l)? })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(schema(format!("unrecognized PL function `{spec}`; use linear:…, pieces:… or JSON")));
    };
    PLConcave::new(pieces, true)
}

fn parse_list_f64(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| schema(format!("bad number `{x}`")))).collect()
}

// ---------- text rendering ----------

/// Indented `key: value` lines carrying the same content as the JSON.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    text_into(v, 0, &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Array(a) if a.iter().all(|x| x.as_array().is_some_and(|r| r.iter().all(|y| !y.is_object() && !y.is_array()))) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Object(o) if o.len() == 2 && o.contains_key("decimal") && o.contains_key("exact") => {
            Some(format!("{} ({})", o["exact"].as_str().unwrap_or(""), o["decimal"].as_str().unwrap_or("")))
        }
        _ => None,
    }
}

fn text_into(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_into(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        text_into(x, depth + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

// ---------- command line ----------

#[derive(Debug, Parser)]
#[command(name = "gcdeg", version, about = "Semistable degenerations of group compactifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Common {
    /// JSON input file
    #[arg(long, value_name = "PATH")]
    input: Option<std::path::PathBuf>,
    /// Named example input
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    tol_wall: Option<f64>,
    #[arg(long)]
    tol_kkt: Option<f64>,
    /// Cross-check the partition function at Λ₀ with N Monte Carlo samples
    #[arg(long, value_name = "N")]
    mc_check: Option<u64>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long)]
    precision_target: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline on an input file or preset
    Analyze(Common),
    /// List the presets, or analyze one
    Example {
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate H at a dominant vector or a concave PL function
    HEval {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "f")]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
    },
    /// Minimize H over the dominant cone
    Minimize(Common),
    /// Filtration table of a PL function, or of raw values
    Filtration {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "values")]
        f: Option<String>,
        /// Raw table values in lattice enumeration order
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Rational approximation f_p of a PL function
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long)]
        p: u32,
        /// Sampling denominator; defaults to 4p
        #[arg(long)]
        q: Option<u32>,
    },
}

impl Common {
    fn load(&self, default_preset: Option<&str>) -> Result<AnalysisInput> {
        let mut input = match (&self.input, &self.preset) {
            (Some(_), Some(_)) => return Err(schema("give at most one of --input / --preset")),
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
                parse_input(&text)?
            }
            (None, Some(name)) => presets::preset(name)?,
            (None, None) => match default_preset {
                Some(name) => presets::preset(name)?,
                None => return Err(schema("give --input PATH or --preset NAME")),
            },
        };
        let o = &mut input.options;
        if let Some(x) = self.tol_wall {
            o.tol_wall = x;
        }
        if let Some(x) = self.tol_kkt {
            o.tol_kkt = x;
        }
        if let Some(x) = self.mc_check {
            o.mc_check = Some(x);
        }
        if let Some(x) = self.seed {
            o.seed = x;
        }
        if let Some(x) = self.precision_target {
            o.precision_target = Some(x);
        }
        if let Some(f) = self.format {
            o.format = f;
        }
        Ok(input)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

/// What the binary prints: stdout text and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn emit(v: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("reports serialize") + "\n",
        Format::Text => render_text(v),
    }
}

fn error_value(e: &Error) -> Value {
    json!({ "error": { "stage": e.stage(), "message": e.to_string(), "exit_code": e.exit_code() } })
}

/// Parses `args` (program name first) and runs the chosen subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    let format = match &cli.command {
        Command::Analyze(c) | Command::Minimize(c) => c.format(),
        Command::Example { common, .. }
        | Command::HEval { common, .. }
        | Command::Filtration { common, .. }
        | Command::Approx { common, .. } => common.format(),
    };
    match dispatch(cli.command) {
        Ok((v, fmt)) => Outcome { stdout: emit(&v, fmt.unwrap_or(format)), stderr: String::new(), code: 0 },
        Err(e) => Outcome { stdout: String::new(), stderr: emit(&error_value(&e), format), code: e.exit_code() },
    }
}

fn dispatch(cmd: Command) -> Result<(Value, Option<Format>)> {
    match cmd {
        Command::Analyze(c) => {
            let input = c.load(None)?;
            let fmt = input.options.format;
            Ok((run_analyze(&input)?.to_json(), Some(fmt)))
        }
        Command::Example { name: None, .. } => {
            let list: Map<String, Value> = PRESET_NAMES.iter().map(|n| (n.to_string(), json!(presets::describe(n)))).collect();
            Ok((json!({ "presets": list }), None))
        }
        Command::Example { name: Some(name), common } => {
            if common.preset.is_some() || common.input.is_some() {
                return Err(schema("`example NAME` takes the preset as its argument"));
            }
            let input = Common { preset: Some(name), ..common }.load(None)?;
            let fmt = input.options.format;
            Ok((run_analyze(&input)?.to_json(), Some(fmt)))
        }
        Command::HEval { common, lambda, f } => {
            let input = common.load(Some("so4-case1"))?;
            let rs = build_root_system(&input.root_system)?;
            let p = build_polytope(&input.polytope, &rs, input.append_chamber)?;
            let hf = HFunctional::new(&rs, &p, input.options.expint())?;
            let (h, what) = match (lambda, f) {
                (Some(l), None) => {
                    let lam = parse_list_f64(&l)?;
                    if lam.len() != rs.dim {
                        return Err(Error::DimensionMismatch { expected: rs.dim, got: lam.len() });
                    }
                    (hf.h_vector(&lam)?, json!({ "lambda": nums(&lam) }))
                }
                (None, Some(spec)) => {
                    let f = parse_pl(&spec, rs.dim)?;
                    (hf.h_plfunction(&f)?, json!({ "f": pl_json(&f) }))
                }
                _ => return Err(schema("h-eval needs exactly one of --lambda / --f")),
            };
            Ok((json!({ "input": input_json(&input), "argument": what, "result": h_json(&h) }), None))
        }
        Command::Minimize(c) => {
            let input = c.load(Some("so4-case1"))?;
            let rs = build_root_system(&input.root_system)?;
            let p = build_polytope(&input.polytope, &rs, input.append_chamber)?;
            let hf = HFunctional::new(&rs, &p, input.options.expint())?;
            let m = minimize_with(&hf, &input.options.minimize())?;
            Ok((json!({ "input": input_json(&input), "minimizer": minimizer_json(&rs, &m) }), None))
        }
        Command::Filtration { common, f, values, k } => {
            let input = common.load(Some("so4-case1"))?;
            let rs = build_root_system(&input.root_system)?;
            let p = build_polytope(&input.polytope, &rs, input.append_chamber)?;
            let lattice = standard_lattice(rs.dim);
            let table = match (f, values) {
                (Some(spec), None) => filtration_table(&rs, &p, &parse_pl(&spec, rs.dim)?, k, &lattice)?,
                (None, Some(vals)) => {
                    let v: Vec<Q> = vals.split(',').map(exact::parse_rational).collect::<Result<_>>()?;
                    filtration_table_from_values(&rs, &p, k, &lattice, &v)?
                }
                _ => return Err(schema("filtration needs exactly one of --f / --values")),
            };
            Ok((json!({ "input": input_json(&input), "table": filtration_json(&table) }), None))
        }
        Command::Approx { common, f, p: pp, q } => {
            let input = common.load(Some("so4-case1"))?;
            let rs = build_root_system(&input.root_system)?;
            let p = build_polytope(&input.polytope, &rs, input.append_chamber)?;
            let f = parse_pl(&f, rs.dim)?;
            let a = approximate_p(&p, &f, pp, q)?;
            let bound = 1.0 / f64::from(pp);
            Ok((
                json!({
                    "input": input_json(&input),
                    "f": pl_json(&f),
                    "p": a.p,
                    "q": a.q,
                    "f_p": pl_json(&a.f_p),
                    "samples": a.samples.len(),
                    "min_gap": num(a.min_gap),
                    "max_gap": num(a.max_gap),
                    "bound": num(bound),
                    "sandwich_holds": a.min_gap >= -1e-9 && a.max_gap <= bound + 1e-9,
                }),
                None,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> Value {
        let mut full = vec!["gcdeg"];
        full.extend_from_slice(args);
        let o = run(full);
        assert_eq!(o.code, 0, "{}", o.stderr);
        serde_json::from_str(&o.stdout).unwrap()
    }

    #[test]
    fn sig15_format() {
        assert_eq!(sig15(0.0), "0");
        assert_eq!(sig15(2.25), "2.25000000000000");
        assert_eq!(sig15(-0.0956930604910000), "-0.0956930604910000");
        assert_eq!(sig15(1e-20), "1.00000000000000e-20");
    }

    #[test]
    fn input_round_trip() {
        for name in PRESET_NAMES {
            let i = presets::preset(name).unwrap();
            let text = input_json(&i).to_string();
            let back = parse_input(&text).unwrap();
            assert_eq!(back.polytope, i.polytope, "{name}");
            assert_eq!(back.root_system, i.root_system);
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_input("{not json"), Err(Error::Schema(_))));
        assert!(matches!(parse_input(r#"{"root_system": {"catalog": "A1"}}"#), Err(Error::Schema(_))));
        assert!(matches!(
            parse_input(r#"{"root_system": {"catalog": "A1"}, "polytope": {"vertices": [["0"], ["3"]]}, "extra": 1}"#),
            Err(Error::Schema(_))
        ));
        let ok = parse_input(r#"{"root_system": {"catalog": "A1"}, "polytope": {"vertices": [[0], ["3"]]}, "options": {"seed": 5}}"#).unwrap();
        assert_eq!(ok.options.seed, 5);
    }

    #[test]
    fn parse_pl_forms() {
        let f = parse_pl("linear:1/2", 1).unwrap();
        assert_eq!(f.pieces[0].lambda, vec![exact::q_frac(1, 2)]);
        let g = parse_pl("pieces:0|1,0;1/2|0,0", 2).unwrap();
        assert_eq!(g.pieces.len(), 2);
        let h = parse_pl(r#"{"pieces": [{"c": "1/3", "lambda": [0.5, "-1/2"]}]}"#, 2).unwrap();
        assert_eq!(h.pieces[0].c, exact::q_frac(1, 3));
        assert!(parse_pl("linear:1,2", 1).is_err());
    }

    #[test]
    fn h_eval_at_zero_is_zero() {
        let v = run_ok(&["h-eval", "--lambda", "0,0"]);
        assert_eq!(v["result"]["h"], "0");
    }

    #[test]
    fn filtration_subcommand() {
        let v = run_ok(&["filtration", "--preset", "sl2", "--f", "linear:0.5", "--k", "2"]);
        let s: Vec<&str> = v["table"]["entries"].as_array().unwrap().iter().map(|e| e["s"]["exact"].as_str().unwrap()).collect();
        assert_eq!(s, ["0", "-1/2", "-1", "-3/2", "-2", "-5/2", "-3"]);
        let v = run_ok(&["filtration", "--preset", "sl2", "--values", "1,0,1,0"]);
        assert_eq!(v["table"]["valid"], false);
        assert!(!v["table"]["violations"]["concavity"].as_array().unwrap().is_empty());
    }

    #[test]
    fn sl2_analyze_and_text() {
        let v = run_ok(&["example", "sl2"]);
        assert_eq!(v["degeneration"]["verdict"], "KahlerEinstein");
        assert_eq!(v["ke_test"]["verdict"], "Stable");
        let o = run(["gcdeg", "example", "sl2", "--format", "text"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("verdict: KahlerEinstein"));
    }

    #[test]
    fn exit_codes() {
        let dir = std::env::temp_dir().join(format!("gcdeg-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let bad = dir.join("bad.json");
        std::fs::write(&bad, "{ nope").unwrap();
        assert_eq!(run(["gcdeg", "analyze", "--input", bad.to_str().unwrap()]).code, 2);
        assert_eq!(run(["gcdeg", "frobnicate"]).code, 2);
        assert_eq!(run(["gcdeg", "example", "so4-case1-ineqlist"]).code, 4);
        assert_eq!(run(["gcdeg", "h-eval", "--lambda", "-1,0"]).code, 3);
        let list = run_ok(&["example"]);
        assert_eq!(list["presets"].as_object().unwrap().len(), 6);
    }
}
