//! Concave piecewise-linear functions as filtrations: the tables
//! `s_λ^(k) = k·f(λ/k)`, their structural checks, semivaluations and the
//! rational approximation `f_p`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::exec;
use crate::hfun::{PLConcave, PLPiece, DOMINANCE_TOL};
use crate::lp::{Cmp, LinearProgram};
use crate::polytope::{lattice_points, ConvexPolytope};
use crate::rootsys::{dot, RootSystem};

/// Slack for comparisons involving floating-point table values.
pub const VALUE_TOL: f64 = 1e-9;

/// A PL function together with the shape of its central fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct RTestConfiguration {
    pub f: PLConcave,
    /// One affine piece, so the central fibre is irreducible.
    pub irreducible_central_fibre: bool,
}

/// The configuration induced by a dominant vector: `f(y) = c0 − ⟨lam, y⟩`.
pub fn from_vector(rs: &RootSystem, lam: &[f64], c0: f64) -> Result<RTestConfiguration> {
    if lam.len() != rs.dim {
        return Err(Error::DimensionMismatch { expected: rs.dim, got: lam.len() });
    }
    let tol = DOMINANCE_TOL * (1.0 + lam.iter().map(|x| x * x).sum::<f64>().sqrt());
    if !rs.is_dominant(lam, tol) {
        return Err(Error::NotDominant(lam.to_vec()));
    }
    Ok(RTestConfiguration { f: PLConcave::from_vector(lam, c0), irreducible_central_fibre: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationEntry {
    pub lambda: Vec<Q>,
    pub s: f64,
    pub s_exact: Option<Q>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Concavity,
    Dominance,
    WCompatibility,
    Superadditivity,
}

impl ViolationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Concavity => "concavity",
            Self::Dominance => "dominance",
            Self::WCompatibility => "w_compatibility",
            Self::Superadditivity => "superadditivity",
        }
    }
}

/// A failed inequality `lhs ≥ rhs` at the listed lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub points: Vec<Vec<Q>>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    Exact,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaData {
    /// Sorted distinct values.
    pub values: Vec<f64>,
    /// The same values minus their minimum.
    pub shifted: Vec<f64>,
    pub exact_values: Option<Vec<Q>>,
    pub rank: usize,
    pub method: RankMethod,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationTable {
    pub k: u32,
    /// Ordered lexicographically by lattice coordinates.
    pub entries: Vec<FiltrationEntry>,
    pub gamma: GammaData,
    pub violations: Vec<Violation>,
}

impl FiltrationTable {
    pub fn get(&self, lambda: &[Q]) -> Option<&FiltrationEntry> {
        self.entries.binary_search_by(|e| exact::lex_cmp(&e.lambda, lambda)).ok().map(|i| &self.entries[i]).or_else(|| {
            // entries come from lattice enumeration, which need not be lex ordered
            self.entries.iter().find(|e| e.lambda == lambda)
        })
    }

    fn index(&self) -> BTreeMap<Vec<Q>, usize> {
        self.entries.iter().enumerate().map(|(i, e)| (e.lambda.clone(), i)).collect()
    }

    pub fn violations_of(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

/// `a ≥ b` with exact comparison when both sides are exact.
fn geq(a: &FiltrationEntry, b_exact: Option<&Q>, b: f64) -> bool {
    match (&a.s_exact, b_exact) {
        (Some(x), Some(y)) => x >= y,
        _ => a.s >= b - VALUE_TOL * (1.0 + b.abs()),
    }
}

/// `s_λ^(k) = k f(λ/k)` over `kP₊ ∩ 𝔐`, with every structural check run.
pub fn filtration_table(rs: &RootSystem, p_plus: &ConvexPolytope, f: &PLConcave, k: u32, lattice: &[Vec<i64>]) -> Result<FiltrationTable> {
    if k == 0 {
        return Err(Error::Schema("k must be at least 1".into()));
    }
    if f.dim() != rs.dim {
        return Err(Error::DimensionMismatch { expected: rs.dim, got: f.dim() });
    }
    let pts = lattice_points(p_plus, k, lattice)?;
    let kq = exact::q(i64::from(k));
    let entries: Vec<FiltrationEntry> = exec::map_indexed(pts.len(), |i| {
        let lam = &pts[i];
        let s = f.pieces.iter().map(|p| &kq * &p.c - exact::dot(&p.lambda, lam)).min().expect("nonempty");
        FiltrationEntry { lambda: lam.clone(), s: exact::to_f64(&s), s_exact: Some(s) }
    });
    Ok(finish_table(rs, k, entries, f.rational_flag))
}

/// A table from raw values listed in lattice-enumeration order.
pub fn filtration_table_from_values(
    rs: &RootSystem,
    p_plus: &ConvexPolytope,
    k: u32,
    lattice: &[Vec<i64>],
    values: &[Q],
) -> Result<FiltrationTable> {
    let pts = lattice_points(p_plus, k, lattice)?;
    if pts.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: pts.len(), got: values.len() });
    }
    let entries = pts
        .into_iter()
        .zip(values)
        .map(|(lambda, v)| FiltrationEntry { lambda, s: exact::to_f64(v), s_exact: Some(v.clone()) })
        .collect();
    Ok(finish_table(rs, k, entries, true))
}

fn finish_table(rs: &RootSystem, k: u32, entries: Vec<FiltrationEntry>, rational: bool) -> FiltrationTable {
    let gamma = gamma_data(&entries, rational);
    let mut t = FiltrationTable { k, entries, gamma, violations: Vec::new() };
    let mut v = concavity_violations(&t);
    v.extend(dominance_violations(rs, &t));
    v.extend(w_violations(rs, &t));
    t.violations = v;
    t
}

/// Midpoint concavity on every collinear lattice triple `(λ, (λ+μ)/2, μ)`.
fn concavity_violations(t: &FiltrationTable) -> Vec<Violation> {
    let idx = t.index();
    let half = exact::q_frac(1, 2);
    let mut out = Vec::new();
    for (i, a) in t.entries.iter().enumerate() {
        for b in &t.entries[i + 1..] {
            let mid = exact::scale(&exact::add(&a.lambda, &b.lambda), &half);
            let Some(&m) = idx.get(&mid) else { continue };
            let me = &t.entries[m];
            let rhs_exact = match (&a.s_exact, &b.s_exact) {
                (Some(x), Some(y)) => Some((x + y) * &half),
                _ => None,
            };
            let rhs = 0.5 * (a.s + b.s);
            if !geq(me, rhs_exact.as_ref(), rhs) {
                out.push(Violation { kind: ViolationKind::Concavity, points: vec![a.lambda.clone(), mid, b.lambda.clone()], lhs: me.s, rhs });
            }
        }
    }
    out
}

/// Coefficients `c` with `v = Σ c_i α_i`, or `None` when `v` leaves the root span.
pub fn root_coordinates(rs: &RootSystem, v: &[Q]) -> Option<Vec<Q>> {
    if let Some(sr) = &rs.simple_roots_exact {
        // least-squares normal equations are exact here
        let gram: Vec<Vec<Q>> = sr.iter().map(|a| sr.iter().map(|b| exact::dot(a, b)).collect()).collect();
        let rhs: Vec<Q> = sr.iter().map(|a| exact::dot(a, v)).collect();
        let c = exact::solve(&gram, &rhs)?;
        let mut back = vec![Q::zero(); v.len()];
        for (ci, a) in c.iter().zip(sr) {
            back = exact::add(&back, &exact::scale(a, ci));
        }
        (back == v).then_some(c)
    } else {
        let vf = exact::vec_to_f64(v);
        let all: Vec<usize> = (0..rs.rank).collect();
        let g: Vec<f64> = vf.iter().zip(&rs.two_rho).map(|(a, b)| a + b).collect();
        let (c, res) = crate::minimize::kkt_multipliers(rs, &g, &all).ok()?;
        (res <= 1e-9 * (1.0 + crate::rootsys::norm(&vf))).then(|| exact::vec_from_f64(&c))
    }
}

/// `λ = μ − Σ c_i α_i` with `c ≥ 0` must give `s_λ ≥ s_μ`.
fn dominance_violations(rs: &RootSystem, t: &FiltrationTable) -> Vec<Violation> {
    let mut out = Vec::new();
    let exact_roots = rs.simple_roots_exact.is_some();
    for a in &t.entries {
        for b in &t.entries {
            if a.lambda == b.lambda {
                continue;
            }
            let Some(c) = root_coordinates(rs, &exact::sub(&b.lambda, &a.lambda)) else { continue };
            let nonneg = if exact_roots {
                c.iter().all(|x| !x.is_negative())
            } else {
                c.iter().all(|x| exact::to_f64(x) >= -1e-9)
            };
            if nonneg && !geq(a, b.s_exact.as_ref(), b.s) {
                out.push(Violation { kind: ViolationKind::Dominance, points: vec![a.lambda.clone(), b.lambda.clone()], lhs: a.s, rhs: b.s });
            }
        }
    }
    out
}

/// Table points whose Weyl images are also table points must carry equal values.
fn w_violations(rs: &RootSystem, t: &FiltrationTable) -> Vec<Violation> {
    let idx = t.index();
    let Some(sr) = &rs.simple_roots_exact else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for e in &t.entries {
        for (i, a) in sr.iter().enumerate() {
            // s_i(λ) = λ − (2⟨α,λ⟩/⟨α,α⟩) α
            let coef = exact::q(2) * exact::dot(a, &e.lambda) / exact::dot(a, a);
            if coef.is_zero() {
                continue;
            }
            let img = exact::sub(&e.lambda, &exact::scale(a, &coef));
            if let Some(&j) = idx.get(&img) {
                let other = &t.entries[j];
                let same = match (&e.s_exact, &other.s_exact) {
                    (Some(x), Some(y)) => x == y,
                    _ => (e.s - other.s).abs() <= VALUE_TOL * (1.0 + e.s.abs()),
                };
                if !same {
                    let _ = i;
                    out.push(Violation {
                        kind: ViolationKind::WCompatibility,
                        points: vec![e.lambda.clone(), img],
                        lhs: e.s,
                        rhs: other.s,
                    });
                }
            }
        }
    }
    out
}

/// `s_{λ₁+λ₂}^{(k₁+k₂)} ≥ s_{λ₁}^{(k₁)} + s_{λ₂}^{(k₂)}` over all pairs landing in the third table.
pub fn superadditivity_violations(t1: &FiltrationTable, t2: &FiltrationTable, t12: &FiltrationTable) -> Result<Vec<Violation>> {
    if t12.k != t1.k + t2.k {
        return Err(Error::InconsistentInputs(format!("table degrees {} + {} != {}", t1.k, t2.k, t12.k)));
    }
    let idx = t12.index();
    let mut out = Vec::new();
    for a in &t1.entries {
        for b in &t2.entries {
            let sum = exact::add(&a.lambda, &b.lambda);
            let Some(&j) = idx.get(&sum) else { continue };
            let c = &t12.entries[j];
            let rhs_exact = match (&a.s_exact, &b.s_exact) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            let rhs = a.s + b.s;
            if !geq(c, rhs_exact.as_ref(), rhs) {
                out.push(Violation {
                    kind: ViolationKind::Superadditivity,
                    points: vec![a.lambda.clone(), b.lambda.clone()],
                    lhs: c.s,
                    rhs,
                });
            }
        }
    }
    Ok(out)
}

/// Numeric tolerance and coefficient height for integer-relation search.
const RELATION_TOL: f64 = 1e-9;
const RELATION_HEIGHT: i64 = 12;

fn gamma_data(entries: &[FiltrationEntry], rational: bool) -> GammaData {
    if rational && entries.iter().all(|e| e.s_exact.is_some()) {
        let mut vals: Vec<Q> = entries.iter().filter_map(|e| e.s_exact.clone()).collect();
        vals.sort();
        vals.dedup();
        let fl: Vec<f64> = vals.iter().map(exact::to_f64).collect();
        let min = vals.first().cloned().unwrap_or_else(Q::zero);
        let shifted = vals.iter().map(|v| exact::to_f64(&(v - &min))).collect();
        return GammaData {
            rank: usize::from(vals.len() > 1),
            values: fl,
            shifted,
            exact_values: Some(vals),
            method: RankMethod::Exact,
            tol: None,
        };
    }
    let mut vals: Vec<f64> = entries.iter().map(|e| e.s).collect();
    vals.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for v in vals {
        if distinct.last().is_none_or(|&l| (v - l).abs() > RELATION_TOL * (1.0 + v.abs())) {
            distinct.push(v);
        }
    }
    let min = distinct.first().copied().unwrap_or(0.0);
    let shifted: Vec<f64> = distinct.iter().map(|v| v - min).collect();
    let rank = numeric_rank(&shifted[shifted.len().min(1)..]);
    GammaData { values: distinct, shifted, exact_values: None, rank, method: RankMethod::Numeric, tol: Some(RELATION_TOL) }
}

/// Rank over ℚ of the group generated by `xs`, detecting relations with
/// bounded-height coefficients (see [`has_relation`]). Capped at 4.
pub fn numeric_rank(xs: &[f64]) -> usize {
    let mut basis: Vec<f64> = Vec::new();
    for &x in xs {
        if x.abs() <= RELATION_TOL {
            continue;
        }
        if !has_relation(x, &basis) {
            basis.push(x);
            if basis.len() == 4 {
                break;
            }
        }
    }
    basis.len()
}

/// Looks for `m₀ x = Σ m_j b_j` with `1 ≤ m₀ ≤ H`, `|m_j| ≤ H` for all but the
/// last basis element, whose coefficient is found by rounding.
fn has_relation(x: f64, basis: &[f64]) -> bool {
    let Some((&last, head)) = basis.split_last() else {
        return false;
    };
    let h = RELATION_HEIGHT;
    let mut coeffs = vec![-h; head.len()];
    loop {
        let combo: f64 = coeffs.iter().zip(head).map(|(&c, b)| c as f64 * b).sum();
        let size: f64 = coeffs.iter().zip(head).map(|(&c, b)| (c as f64 * b).abs()).sum();
        for m0 in 1..=h {
            let rest = m0 as f64 * x - combo;
            let m_last = (rest / last).round();
            let scale = (m0 as f64 * x).abs() + size + (m_last * last).abs();
            if (rest - m_last * last).abs() <= RELATION_TOL * scale.max(1.0) {
                return true;
            }
        }
        // odometer over [−h, h]^(r−1)
        let mut i = 0;
        loop {
            if i == coeffs.len() {
                return false;
            }
            if coeffs[i] < h {
                coeffs[i] += 1;
                break;
            }
            coeffs[i] = -h;
            i += 1;
        }
    }
}

/// `σ = Σ σ_m` with each component in `End(V_μ) ⊂ R_k`, recorded as `(μ, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedElement {
    pub components: Vec<(Vec<Q>, u32)>,
}

impl WeightedElement {
    pub fn new(components: Vec<(Vec<Q>, u32)>) -> Self {
        Self { components }
    }

    /// The components of a product: all sums `(μ_i + ν_j, k_i + l_j)`, deduplicated.
    pub fn product(&self, other: &Self) -> Self {
        let mut comps: Vec<(Vec<Q>, u32)> = Vec::new();
        for (m, k) in &self.components {
            for (n, l) in &other.components {
                let c = (exact::add(m, n), k + l);
                if !comps.contains(&c) {
                    comps.push(c);
                }
            }
        }
        Self { components: comps }
    }
}

/// `min` over components of `k f(μ/k)`.
pub fn semivaluation_eval(p_plus: &ConvexPolytope, f: &PLConcave, sigma: &WeightedElement) -> Result<Q> {
    if sigma.components.is_empty() {
        return Err(Error::Schema("semivaluation of an empty element".into()));
    }
    let mut best: Option<Q> = None;
    for (mu, k) in &sigma.components {
        if *k == 0 || mu.len() != p_plus.dim || !p_plus.dilate(*k).contains(mu) {
            return Err(Error::ComponentOutsidePolytope { point: mu.iter().map(exact::fmt_rational).collect(), k: *k });
        }
        let kq = exact::q(i64::from(*k));
        let v = f.pieces.iter().map(|p| &kq * &p.c - exact::dot(&p.lambda, mu)).min().expect("nonempty");
        best = Some(match best {
            Some(b) if b <= v => b,
            _ => v,
        });
    }
    Ok(best.expect("nonempty"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSample {
    pub point: Vec<Q>,
    pub f: f64,
    /// `⌈p f⌉ / p`.
    pub rounded: f64,
    pub f_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub p: u32,
    pub q: u32,
    pub f_p: PLConcave,
    pub samples: Vec<ApproxSample>,
    /// `min (f_p − f)` and `max (f_p − f)` over the samples.
    pub min_gap: f64,
    pub max_gap: f64,
}

/// Upper concave envelope of `⌈p f⌉/p` sampled on `P₊ ∩ (1/q)ℤ^d` (default `q = 4p`).
pub fn approximate_p(p_plus: &ConvexPolytope, f: &PLConcave, p: u32, q: Option<u32>) -> Result<Approximation> {
    if p == 0 {
        return Err(Error::Schema("p must be at least 1".into()));
    }
    let q = q.unwrap_or(4 * p);
    let d = p_plus.dim;
    let grid = lattice_points(p_plus, q, &crate::polytope::standard_lattice(d))?;
    let inv_q = exact::q_frac(1, i64::from(q));
    let pts: Vec<Vec<Q>> = grid.iter().map(|g| exact::scale(g, &inv_q)).collect();
    let pq = exact::q(i64::from(p));
    let fvals: Vec<Q> = pts.iter().map(|x| f.eval_exact(x)).collect();
    let rounded: Vec<Q> = fvals.iter().map(|v| Q::from_integer((v * &pq).ceil().to_integer()) / &pq).collect();
    let xs: Vec<Vec<f64>> = pts.iter().map(|x| exact::vec_to_f64(x)).collect();
    let gs: Vec<f64> = rounded.iter().map(exact::to_f64).collect();

    // seed constraints: samples nearest the polytope vertices, whose hull contains every sample
    let mut seed: Vec<usize> = Vec::new();
    for v in p_plus.vertices_f64() {
        let j = (0..xs.len())
            .min_by(|&a, &b| dist2(&xs[a], &v).total_cmp(&dist2(&xs[b], &v)))
            .expect("grid is nonempty");
        if !seed.contains(&j) {
            seed.push(j);
        }
    }
    let planes = exec::try_map_indexed(xs.len(), |i| envelope_plane(&xs, &gs, i, &seed))?;

    let mut pieces: Vec<PLPiece> = Vec::new();
    for (a, beta) in &planes {
        // f_p(y) = min (β + ⟨a, y⟩) = min (β − ⟨−a, y⟩)
        let piece = PLPiece { c: exact::from_f64(*beta), lambda: a.iter().map(|x| exact::from_f64(-x)).collect() };
        let dup = pieces.iter().any(|p| {
            (exact::to_f64(&p.c) - beta).abs() <= 1e-9 && p.lambda.iter().zip(a).all(|(l, x)| (exact::to_f64(l) + x).abs() <= 1e-9)
        });
        if !dup {
            pieces.push(piece);
        }
    }
    let f_p = PLConcave::new(pieces, false)?;
    let samples: Vec<ApproxSample> = (0..xs.len())
        .map(|i| ApproxSample { point: pts[i].clone(), f: exact::to_f64(&fvals[i]), rounded: gs[i], f_p: f_p.eval(&xs[i]) })
        .collect();
    let gaps = samples.iter().map(|s| s.f_p - s.f);
    let (min_gap, max_gap) = gaps.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)));
    Ok(Approximation { p, q, f_p, samples, min_gap, max_gap })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The supporting plane `(a, β)` of the upper hull above `xs[i]`, by cutting planes.
fn envelope_plane(xs: &[Vec<f64>], gs: &[f64], i: usize, seed: &[usize]) -> Result<(Vec<f64>, f64)> {
    let d = xs[i].len();
    let mut active: Vec<usize> = seed.to_vec();
    if !active.contains(&i) {
        active.push(i);
    }
    for _ in 0..xs.len() {
        let mut obj = xs[i].clone();
        obj.push(1.0);
        let mut lp = LinearProgram::new(obj);
        for v in 0..=d {
            lp = lp.free_var(v);
        }
        for &j in &active {
            let mut row = xs[j].clone();
            row.push(1.0);
            lp = lp.constraint(row, Cmp::Ge, gs[j]);
        }
        let sol = lp.solve()?;
        let (a, beta) = (sol.x[..d].to_vec(), sol.x[d]);
        let worst = (0..xs.len())
            .map(|j| (gs[j] - dot(&a, &xs[j]) - beta, j))
            .fold((0.0, usize::MAX), |acc, x| if x.0 > acc.0 { x } else { acc });
        if worst.0 <= 1e-12 {
            return Ok((a, beta));
        }
        active.push(worst.1);
    }
    Err(Error::LinearProgram("envelope cutting planes did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, q_frac};
    use crate::hfun::tests::{case1, so4};
    use crate::polytope::{standard_lattice, HalfSpace};
    use crate::rootsys::{build_root_system, RootSystemSpec};
    use proptest::prelude::*;

    fn sl2() -> (RootSystem, ConvexPolytope) {
        let rs = build_root_system(&RootSystemSpec::catalog("A1")).unwrap();
        let p = ConvexPolytope::from_halfspaces(1, vec![HalfSpace::new(vec![q(1)], q(3)), HalfSpace::new(vec![q(-1)], q(0))]).unwrap();
        (rs, p)
    }

    fn half_linear() -> PLConcave {
        PLConcave::new(vec![PLPiece { c: q(0), lambda: vec![q_frac(1, 2)] }], true).unwrap()
    }

    #[test]
    fn from_vector_examples() {
        let rs = so4();
        let t = from_vector(&rs, &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(t.f.pieces.len(), 1);
        assert!(t.irreducible_central_fibre);
        assert_eq!(from_vector(&rs, &[-1.0, 0.0], 0.0), Err(Error::NotDominant(vec![-1.0, 0.0])));
    }

    #[test]
    fn sl2_linear_table() {
        let (rs, p) = sl2();
        let t = filtration_table(&rs, &p, &half_linear(), 2, &standard_lattice(1)).unwrap();
        let s: Vec<Q> = t.entries.iter().map(|e| e.s_exact.clone().unwrap()).collect();
        let expect: Vec<Q> = (0..=6).map(|i| q_frac(-i, 2)).collect();
        assert_eq!(s, expect);
        assert!(t.violations.is_empty());
        assert_eq!(t.gamma.rank, 1);
        assert_eq!(t.gamma.method, RankMethod::Exact);
    }

    #[test]
    fn non_normal_values_violate_concavity() {
        let (rs, p) = sl2();
        let vals = [q(1), q(0), q(1), q(0)];
        let t = filtration_table_from_values(&rs, &p, 1, &standard_lattice(1), &vals).unwrap();
        let conc: Vec<_> = t.violations_of(ViolationKind::Concavity).collect();
        assert!(!conc.is_empty());
        assert!(conc.iter().any(|v| v.points[1] == vec![q(1)]));
        assert_eq!(t.gamma.values, vec![0.0, 1.0]);
    }

    #[test]
    fn dominance_violation_detected() {
        let (rs, p) = sl2();
        // increasing values break s_λ ≥ s_{λ+α}
        let vals = [q(0), q(1), q(2), q(3)];
        let t = filtration_table_from_values(&rs, &p, 1, &standard_lattice(1), &vals).unwrap();
        assert!(t.violations_of(ViolationKind::Dominance).count() > 0);
    }

    #[test]
    fn w_compatibility_on_walls() {
        // a polytope straddling the wall x = y of A1×A1: reflections stay inside
        let rs = so4();
        let sq = ConvexPolytope::from_vertices(2, vec![vec![q(0), q(-1)], vec![q(2), q(1)], vec![q(1), q(-2)], vec![q(3), q(0)]]).unwrap();
        let vals: Vec<Q> = lattice_points(&sq, 1, &standard_lattice(2)).unwrap().iter().map(|v| v[0].clone()).collect();
        let t = filtration_table_from_values(&rs, &sq, 1, &standard_lattice(2), &vals).unwrap();
        assert!(t.violations_of(ViolationKind::WCompatibility).count() > 0);
        let f = PLConcave::from_f64(&[(0.0, vec![0.5, -0.5])]).unwrap();
        let t = filtration_table(&rs, &sq, &f, 1, &standard_lattice(2)).unwrap();
        assert_eq!(t.violations_of(ViolationKind::WCompatibility).count(), 0);
    }

    #[test]
    fn numeric_gamma_rank() {
        assert_eq!(numeric_rank(&[0.5, 1.0, 1.5]), 1);
        assert_eq!(numeric_rank(&[1.0, 2f64.sqrt(), 1.0 + 2f64.sqrt()]), 2);
        assert_eq!(numeric_rank(&[]), 0);
        assert_eq!(numeric_rank(&[0.0625, 2.3125, 7.0 * 0.0625]), 1);
        let s = 0.0956930604914678;
        assert_eq!(numeric_rank(&[s, 17.0 * s, 0.5, 0.5 + 3.0 * s]), 2);
        let rs = so4();
        let p = case1();
        let f = from_vector(&rs, &[0.5, -0.5], 0.0).unwrap().f;
        let t = filtration_table(&rs, &p, &f, 2, &standard_lattice(2)).unwrap();
        assert_eq!(t.gamma.method, RankMethod::Numeric);
        assert_eq!(t.gamma.rank, 1);
        assert_eq!(t.gamma.shifted[0], 0.0);
    }

    #[test]
    fn round_trip_from_vector() {
        let rs = so4();
        let p = case1();
        let f = from_vector(&rs, &[0.25, -0.125], 1.5).unwrap().f;
        let t = filtration_table(&rs, &p, &f, 3, &standard_lattice(2)).unwrap();
        for e in &t.entries {
            let expect = q(3) * exact::from_f64(1.5) - exact::dot(&exact::vec_from_f64(&[0.25, -0.125]), &e.lambda);
            assert_eq!(e.s_exact.as_ref().unwrap(), &expect);
        }
    }

    #[test]
    fn semivaluation_examples() {
        let (_, p) = sl2();
        let f = half_linear();
        let one = WeightedElement::new(vec![(vec![q(2)], 1)]);
        assert_eq!(semivaluation_eval(&p, &f, &one).unwrap(), q(-1));
        let two = WeightedElement::new(vec![(vec![q(2)], 1), (vec![q(4)], 2)]);
        assert_eq!(semivaluation_eval(&p, &f, &two).unwrap(), q(-2));
        let out = WeightedElement::new(vec![(vec![q(4)], 1)]);
        assert!(matches!(semivaluation_eval(&p, &f, &out), Err(Error::ComponentOutsidePolytope { k: 1, .. })));
    }

    #[test]
    fn approximation_of_half_linear_is_exact_on_integers() {
        let (_, p) = sl2();
        let a = approximate_p(&p, &half_linear(), 2, Some(1)).unwrap();
        for s in &a.samples {
            assert!((s.f_p - s.f).abs() < 1e-12);
        }
        let a = approximate_p(&p, &half_linear(), 1, None).unwrap();
        assert!(a.min_gap >= -1e-9 && a.max_gap <= 1.0 + 1e-9);
    }

    #[test]
    fn approximation_sandwich_on_case1() {
        let p = case1();
        let f = PLConcave::from_f64(&[(0.0, vec![0.0956930605, -0.0956930605]), (0.4, vec![0.3, -0.1])]).unwrap();
        let a = approximate_p(&p, &f, 10, Some(8)).unwrap();
        assert!(a.min_gap >= -1e-9, "{}", a.min_gap);
        assert!(a.max_gap <= 0.1 + 1e-9, "{}", a.max_gap);
    }

    fn random_pl() -> impl Strategy<Value = PLConcave> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, -0.5f64..0.5), 1..4).prop_map(|v| {
            let pieces: Vec<(f64, Vec<f64>)> = v.iter().map(|&(a, b, c)| (c, vec![0.5 * (a + b), 0.5 * (b - a)])).collect();
            PLConcave::from_f64(&pieces).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn concave_tables_pass_all_checks(f in random_pl()) {
            let rs = so4();
            let p = case1();
            let l = standard_lattice(2);
            let t1 = filtration_table(&rs, &p, &f, 1, &l).unwrap();
            let t2 = filtration_table(&rs, &p, &f, 2, &l).unwrap();
            let t3 = filtration_table(&rs, &p, &f, 3, &l).unwrap();
            prop_assert!(t1.violations.is_empty());
            prop_assert!(t2.violations.is_empty());
            prop_assert!(superadditivity_violations(&t1, &t2, &t3).unwrap().is_empty());
            prop_assert!(superadditivity_violations(&t1, &t1, &t2).unwrap().is_empty());
        }

        #[test]
        fn semivaluation_superadditive(f in random_pl()) {
            let p = case1();
            let a = WeightedElement::new(vec![(vec![q(1), q(0)], 1), (vec![q(2), q(1)], 1)]);
            let b = WeightedElement::new(vec![(vec![q(2), q(0)], 1), (vec![q(3), q(-1)], 2)]);
            let va = semivaluation_eval(&p, &f, &a).unwrap();
            let vb = semivaluation_eval(&p, &f, &b).unwrap();
            let vab = semivaluation_eval(&p, &f, &a.product(&b)).unwrap();
            prop_assert!(vab >= va + vb);
        }
    }
}
