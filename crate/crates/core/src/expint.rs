//! Integrals of polynomial × exponential-of-linear densities over simplices and
//! polytopes.
//!
//! A simplex is mapped onto the standard simplex `Δ_n = {t ≥ 0, Σt ≤ 1}` and
//! the variables are integrated out one at a time, last first. Intermediate
//! integrands are kept as sums of `coeff · t^a · u^b · e^{⟨c,t⟩ + σu}` with
//! `u = 1 − Σt` the remaining slack, so each fiber step is a one-variable
//! binomial expansion and `σ` only ever takes values among `0` and the `c_i`.
//!
//! Every coefficient carries a running absolute magnitude next to its value;
//! their ratio at the end bounds the cancellation the result went through.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::exec::{self, KahanSum};
use crate::poly::Polynomial;
use crate::polytope::{triangulate, ConvexPolytope, Simplex, Triangulation};
use crate::rootsys::dot;

/// `coeff · y^monomial · e^{⟨linform, y⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyExpTerm {
    pub coeff: f64,
    pub monomial: Vec<u32>,
    pub linform: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpIntOptions {
    pub degree_cap: u32,
    /// Below this `|c|` (per unit fiber length) the closed form is replaced by a series.
    pub eps_switch: f64,
    pub series_terms: u32,
    /// Largest tolerated ratio of absolute to signed magnitude.
    pub cancellation_limit: f64,
    pub max_subdivision_depth: u32,
}

impl Default for ExpIntOptions {
    fn default() -> Self {
        Self { degree_cap: 24, eps_switch: 1.0, series_terms: 30, cancellation_limit: 1e3, max_subdivision_depth: 12 }
    }
}

impl ExpIntOptions {
    /// Derives the cancellation limit from a relative precision target.
    pub fn with_precision_target(mut self, target: f64) -> Self {
        self.cancellation_limit = (target / 1e-15).clamp(1.0, 1e12);
        self
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    val: f64,
    mag: f64,
}

impl Acc {
    fn push(&mut self, mult: f64, src: Acc) {
        self.val += mult * src.val;
        self.mag += mult.abs() * src.mag;
    }
}

type Key = (Vec<u32>, u32, u64);

fn key_sigma(s: f64) -> u64 {
    if s == 0.0 {
        0.0f64.to_bits()
    } else {
        s.to_bits()
    }
}

/// `∫₀¹ t^k (1−t)^b dt = k! b! / (k+b+1)!`.
fn beta(k: u32, b: u32) -> f64 {
    let (lo, hi) = if k < b { (k, b) } else { (b, k) };
    // lo! / ((hi+1)⋯(hi+lo+1))
    (1..=lo).fold(1.0 / f64::from(hi + 1), |acc, i| acc * f64::from(i) / f64::from(hi + 1 + i))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `∫_{Δ_n} p(t) e^{⟨c,t⟩} dt` together with the accumulated absolute magnitude.
fn integrate_standard(p: &Polynomial, c: &[f64], opts: &ExpIntOptions) -> Result<(f64, f64)> {
    let n = c.len();
    let mut terms: BTreeMap<Key, Acc> = BTreeMap::new();
    for (e, &coef) in p.terms() {
        terms.insert((e.clone(), 0, key_sigma(0.0)), Acc { val: coef, mag: coef.abs() });
    }
    for var in (0..n).rev() {
        let cv = c[var];
        let mut next: BTreeMap<Key, Acc> = BTreeMap::new();
        for ((a, b, sbits), acc) in terms {
            let sigma = f64::from_bits(sbits);
            let rest = a[..var].to_vec();
            let cc = cv - sigma;
            let k0 = a[var];
            if cc == 0.0 || cc.abs() < opts.eps_switch {
                // ∫₀ᵘ t^k (u−t)^b e^{cc·t} = Σ_r cc^r/r! · B(k+r+1, b+1) u^{k+r+b+1}
                let mut w = 1.0;
                let mut r = 0u32;
                loop {
                    let mult = w * beta(k0 + r, b);
                    next.entry((rest.clone(), k0 + r + b + 1, sbits)).or_default().push(mult, acc);
                    if cc == 0.0 {
                        break;
                    }
                    let w_next = w * cc / f64::from(r + 1);
                    if w_next.abs() < 1e-18 {
                        break;
                    }
                    if r == opts.series_terms {
                        return Err(Error::PrecisionLoss { ratio: w_next.abs() * 1e15 });
                    }
                    w = w_next;
                    r += 1;
                }
                continue;
            }
            for j in 0..=b {
                let lead = binomial(b, j) * if j % 2 == 1 { -1.0 } else { 1.0 };
                let k = k0 + j;
                let bpow = b - j;
                // ∫₀ᵘ t^k e^{cc·t} = Σ_i (−1)^i k!/(k−i)! cc^{−i−1} u^{k−i} e^{cc·u} + (−1)^{k+1} k! cc^{−k−1}
                let mut falling = 1.0;
                for i in 0..=k {
                    let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
                    let mult = lead * sign * falling / cc.powi(i as i32 + 1);
                    next.entry((rest.clone(), bpow + k - i, key_sigma(cv))).or_default().push(mult, acc);
                    falling *= f64::from(k - i);
                }
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                let mult = lead * sign * exact::factorial(k) / cc.powi(k as i32 + 1);
                next.entry((rest.clone(), bpow, sbits)).or_default().push(mult, acc);
            }
        }
        terms = next;
    }
    let mut val = KahanSum::default();
    let mut mag = KahanSum::default();
    for ((_, _, sbits), acc) in &terms {
        let e = f64::from_bits(*sbits).exp();
        val.add(acc.val * e);
        mag.add(acc.mag * e);
    }
    Ok((val.value(), mag.value()))
}

/// Scale of `∫_{Δ_n} |p| e^{⟨c,t⟩}` used to judge cancellation for integrands that change sign.
fn reference_scale(p: &Polynomial, c: &[f64]) -> f64 {
    let n = c.len() as u32;
    let emin = c.iter().fold(0.0f64, |m, &x| m.min(x)).exp();
    let s: f64 = p
        .terms()
        .map(|(e, coef)| {
            let deg: u32 = e.iter().sum();
            let num: f64 = e.iter().map(|&k| exact::factorial(k)).product();
            coef.abs() * num / exact::factorial(n + deg)
        })
        .sum();
    emin * s
}

fn check_degree(p: &Polynomial, opts: &ExpIntOptions) -> Result<()> {
    let degree = p.degree();
    if degree > opts.degree_cap {
        return Err(Error::DegreeCapExceeded { degree, cap: opts.degree_cap });
    }
    Ok(())
}

struct SimplexFrame {
    origin: Vec<f64>,
    cols: Vec<Vec<f64>>,
    jac: f64,
}

fn frame(s: &Simplex) -> Result<SimplexFrame> {
    let v = s.vertices_f64();
    let n = v.len() - 1;
    if v.iter().any(|x| x.len() != n) {
        return Err(Error::DegenerateSimplex);
    }
    let origin = v[0].clone();
    let cols: Vec<Vec<f64>> = v[1..].iter().map(|x| x.iter().zip(&origin).map(|(a, b)| a - b).collect()).collect();
    let jac = exact::to_f64(&(s.volume() * Q::from_integer(factorial_int(n))));
    if jac == 0.0 {
        return Err(Error::DegenerateSimplex);
    }
    Ok(SimplexFrame { origin, cols, jac })
}

fn factorial_int(n: usize) -> num_bigint::BigInt {
    (1..=n).fold(num_bigint::BigInt::from(1), |a, k| a * num_bigint::BigInt::from(k))
}

/// `∫_s p(y) e^{⟨lam,y⟩} dy`.
pub fn integrate_simplex(p: &Polynomial, lam: &[f64], s: &Simplex, opts: &ExpIntOptions) -> Result<f64> {
    check_degree(p, opts)?;
    let fr = frame(s)?;
    integrate_in_frame(p, lam, 0.0, &fr, opts)
}

/// The integral times `e^{−log_shift}`.
fn integrate_in_frame(p: &Polynomial, lam: &[f64], log_shift: f64, fr: &SimplexFrame, opts: &ExpIntOptions) -> Result<f64> {
    let pt = p.compose_affine(&fr.origin, &fr.cols);
    let c: Vec<f64> = fr.cols.iter().map(|col| dot(lam, col)).collect();
    let (val, mag) = integrate_standard(&pt, &c, opts)?;
    let scale = reference_scale(&pt, &c);
    let ratio = mag / val.abs().max(scale);
    if !(ratio <= opts.cancellation_limit) {
        return Err(Error::PrecisionLoss { ratio });
    }
    Ok(fr.jac * (dot(lam, &fr.origin) - log_shift).exp() * val)
}

/// Term-by-term integral of a sum of polynomial-exponential terms.
pub fn integrate_terms(terms: &[PolyExpTerm], s: &Simplex, opts: &ExpIntOptions) -> Result<f64> {
    let mut groups: BTreeMap<Vec<u64>, (Vec<f64>, Polynomial)> = BTreeMap::new();
    let n = s.dim();
    for t in terms {
        if t.monomial.len() != n || t.linform.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: t.monomial.len() });
        }
        let key: Vec<u64> = t.linform.iter().map(|&x| key_sigma(x)).collect();
        let entry = groups.entry(key).or_insert_with(|| (t.linform.clone(), Polynomial::zero(n)));
        entry.1.add_term(t.monomial.clone(), t.coeff);
    }
    let mut sum = KahanSum::default();
    for (lam, p) in groups.values() {
        sum.add(integrate_simplex(p, lam, s, opts)?);
    }
    Ok(sum.value())
}

/// Splits a simplex at the midpoint of its longest edge (first such edge in index order).
pub fn bisect(s: &Simplex) -> [Simplex; 2] {
    let v = &s.vertices;
    let mut best = (0, 1);
    let mut best_len = Q::zero();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = exact::sub(&v[i], &v[j]);
            let len = exact::dot(&d, &d);
            if len > best_len {
                best_len = len;
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let mid = exact::scale(&exact::add(&v[i], &v[j]), &exact::q_frac(1, 2));
    let mut a = v.clone();
    a[j] = mid.clone();
    let mut b = v.clone();
    b[i] = mid;
    [Simplex { vertices: a }, Simplex { vertices: b }]
}

/// Edgewise subdivision of a simplex into `2^n` congruent pieces.
pub fn uniform_subdivide(s: &Simplex) -> Vec<Simplex> {
    let n = s.dim();
    let v = &s.vertices;
    // points z of {2 ≥ z_1 ≥ … ≥ z_n ≥ 0} map to v_0 + Σ (z_i/2)(v_i − v_{i−1})
    let map = |z: &[i64]| -> Vec<Q> {
        let mut y = v[0].clone();
        for i in 0..n {
            let step = exact::scale(&exact::sub(&v[i + 1], &v[i]), &exact::q_frac(z[i], 2));
            y = exact::add(&y, &step);
        }
        y
    };
    let inside = |z: &[i64]| z.windows(2).all(|w| w[0] >= w[1]) && z.iter().all(|&x| (0..=2).contains(&x));
    let mut out = Vec::new();
    for corner in 0..(1u32 << n) {
        let base: Vec<i64> = (0..n).map(|i| i64::from((corner >> i) & 1)).collect();
        for perm in permutations(n) {
            let mut z = base.clone();
            let mut pts = vec![z.clone()];
            for &k in &perm {
                z[k] += 1;
                pts.push(z.clone());
            }
            if pts.iter().all(|p| inside(p)) {
                out.push(Simplex { vertices: pts.iter().map(|p| map(p)).collect() });
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Integrates every polynomial in `family` against `e^{⟨lam,y⟩}` over `s`,
/// bisecting on cancellation up to the configured depth.
fn integrate_family(family: &[Polynomial], lam: &[f64], log_shift: f64, s: &Simplex, opts: &ExpIntOptions, depth: u32) -> Result<Vec<f64>> {
    let fr = frame(s)?;
    let attempt: Result<Vec<f64>> = family.iter().map(|p| integrate_in_frame(p, lam, log_shift, &fr, opts)).collect();
    match attempt {
        Err(Error::PrecisionLoss { .. }) if depth < opts.max_subdivision_depth => {
            let [a, b] = bisect(s);
            let ra = integrate_family(family, lam, log_shift, &a, opts, depth + 1)?;
            let rb = integrate_family(family, lam, log_shift, &b, opts, depth + 1)?;
            Ok(ra.iter().zip(&rb).map(|(x, y)| x + y).collect())
        }
        other => other,
    }
}

/// Sums `e^{−log_shift} ∫ p e^{⟨lam,y⟩}` over simplices for each `p` in `family`, in simplex order.
pub fn integrate_over(
    simplices: &[Simplex],
    family: &[Polynomial],
    lam: &[f64],
    log_shift: f64,
    opts: &ExpIntOptions,
) -> Result<Vec<f64>> {
    for p in family {
        check_degree(p, opts)?;
    }
    let parts = exec::try_map_indexed(simplices.len(), |i| integrate_family(family, lam, log_shift, &simplices[i], opts, 0))?;
    Ok((0..family.len())
        .map(|k| exec::compensated_sum(parts.iter().map(|v| v[k])))
        .collect())
}

/// Zeroth, first and second moments of `e^{⟨lam,y⟩} π(y) dy` over a region.
///
/// When `⟨lam, y⟩` is large on the region the stored moments are all scaled by
/// `e^{−log_scale}`; ratios such as the barycenter are unaffected.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMoments {
    pub z: f64,
    pub first: Vec<f64>,
    pub second: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub log_scale: f64,
}

impl RegionMoments {
    pub fn ln_z(&self) -> f64 {
        self.z.ln() + self.log_scale
    }

    pub fn barycenter(&self) -> Vec<f64> {
        self.first.iter().map(|x| x / self.z).collect()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let b = self.barycenter();
        let n = b.len();
        DMatrix::from_fn(n, n, |i, j| self.second[(i, j)] / self.z - b[i] * b[j])
    }
}

/// The integrand family `π, y_i π, y_i y_j π (i ≤ j)`.
fn moment_family(pi: &Polynomial) -> Vec<Polynomial> {
    let n = pi.nvars();
    let mut fam = vec![pi.clone()];
    let ys: Vec<Polynomial> = (0..n).map(|i| pi.mul_var(i)).collect();
    for i in 0..n {
        for j in i..n {
            fam.push(ys[i].mul_var(j));
        }
    }
    fam.splice(1..1, ys);
    fam
}

fn assemble(n: usize, vals: &[f64], lam: &[f64], log_scale: f64) -> RegionMoments {
    let z = vals[0];
    let first = vals[1..=n].to_vec();
    let mut second = DMatrix::zeros(n, n);
    let mut k = n + 1;
    for i in 0..n {
        for j in i..n {
            second[(i, j)] = vals[k];
            second[(j, i)] = vals[k];
            k += 1;
        }
    }
    RegionMoments { z, first, second, lambda: lam.to_vec(), log_scale }
}

pub fn region_moments(p: &ConvexPolytope, pi: &Polynomial, lam: &[f64], opts: &ExpIntOptions) -> Result<RegionMoments> {
    region_moments_tri(&triangulate(p), pi, lam, opts)
}

/// As [`region_moments`] with a precomputed triangulation.
pub fn region_moments_tri(t: &Triangulation, pi: &Polynomial, lam: &[f64], opts: &ExpIntOptions) -> Result<RegionMoments> {
    let n = pi.nvars();
    if lam.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lam.len() });
    }
    let shift = log_shift(t, lam);
    let vals = integrate_over(&t.simplices, &moment_family(pi), lam, shift, opts)?;
    Ok(assemble(n, &vals, lam, shift))
}

/// Exponent offset keeping `e^{⟨lam,y⟩}` representable: the maximum over the
/// vertices when that is large, zero otherwise.
fn log_shift(t: &Triangulation, lam: &[f64]) -> f64 {
    let m = t
        .simplices
        .iter()
        .flat_map(|s| s.vertices_f64())
        .map(|v| dot(lam, &v))
        .fold(f64::NEG_INFINITY, f64::max);
    if m.is_finite() && m.abs() > 50.0 {
        m
    } else {
        0.0
    }
}

/// `ln ∫ π e^{⟨lam,y⟩}` over the triangulated region.
pub fn ln_region_integral(t: &Triangulation, pi: &Polynomial, lam: &[f64], opts: &ExpIntOptions) -> Result<f64> {
    let shift = log_shift(t, lam);
    Ok(integrate_over(&t.simplices, std::slice::from_ref(pi), lam, shift, opts)?[0].ln() + shift)
}
