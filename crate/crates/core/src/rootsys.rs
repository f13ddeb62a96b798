//! Root systems in orthonormal coordinates of a*: positive roots, fundamental
//! weights, 2ρ, simple reflections and the Duistermaat–Heckman density.
//!
//! Positive roots are stored as integer coefficient vectors over the simple
//! roots, so everything combinatorial (closure, 2ρ, Levi subsystems) is exact.
//! Coordinates are carried in `f64`, plus an exact rational copy whenever the
//! simple roots themselves are rational.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::poly::Polynomial;

/// How a root system is requested: a catalog name or explicit simple roots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootSystemSpec {
    pub catalog_name: Option<String>,
    /// Rows are simple roots; each entry is an exact rational (`"p/q"`,
    /// decimal) or a float-only value.
    pub simple_roots: Option<Vec<Vec<Entry>>>,
    pub central_rank: usize,
}

/// One coordinate of an explicitly supplied simple root.
#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Exact(Q),
    Float(f64),
}

impl Entry {
    pub fn to_f64(&self) -> f64 {
        match self {
            Entry::Exact(q) => exact::to_f64(q),
            Entry::Float(x) => *x,
        }
    }
}

impl RootSystemSpec {
    pub fn catalog(name: &str) -> Self {
        Self { catalog_name: Some(name.to_string()), ..Default::default() }
    }

    pub fn with_central_rank(mut self, k: usize) -> Self {
        self.central_rank = k;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    /// Coefficients over the simple roots.
    pub coeffs: Vec<i64>,
    pub coords: Vec<f64>,
}

impl Root {
    pub fn height(&self) -> i64 {
        self.coeffs.iter().sum()
    }

    pub fn label(&self) -> String {
        root_label(&self.coeffs)
    }
}

/// `alpha1+2alpha2`-style label of a coefficient vector.
pub fn root_label(coeffs: &[i64]) -> String {
    let parts: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| match c {
            1 => format!("alpha{}", i + 1),
            -1 => format!("-alpha{}", i + 1),
            c => format!("{c}alpha{}", i + 1),
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+").replace("+-", "-")
    }
}

#[derive(Debug, Clone)]
pub struct RootSystem {
    pub name: String,
    pub dim: usize,
    pub rank: usize,
    pub simple_roots: Vec<Vec<f64>>,
    pub simple_roots_exact: Option<Vec<Vec<Q>>>,
    /// `cartan[i][j] = 2⟨α_i, α_j⟩ / ⟨α_j, α_j⟩`.
    pub cartan: Vec<Vec<i64>>,
    /// Ordered by height, then lexicographically by coefficients.
    pub positive_roots: Vec<Root>,
    pub fundamental_weights: Vec<Vec<f64>>,
    pub fundamental_weights_exact: Option<Vec<Vec<Q>>>,
    pub two_rho: Vec<f64>,
    pub two_rho_coeffs: Vec<i64>,
    pub weyl_generators: Vec<Vec<Vec<f64>>>,
}

const CARTAN_TOL: f64 = 1e-9;
const MAX_ROOTS: usize = 10_000;

impl RootSystem {
    /// Directions of a* orthogonal to every root.
    pub fn central_dim(&self) -> usize {
        self.dim - self.rank
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    pub fn simple_pairing(&self, i: usize, y: &[f64]) -> f64 {
        dot(&self.simple_roots[i], y)
    }

    pub fn is_dominant(&self, y: &[f64], tol: f64) -> bool {
        let scale = 1.0 + norm(y);
        (0..self.rank).all(|i| self.simple_pairing(i, y) >= -tol * scale)
    }

    pub fn reflect(&self, i: usize, y: &[f64]) -> Vec<f64> {
        let a = &self.simple_roots[i];
        let f = 2.0 * dot(a, y) / dot(a, a);
        y.iter().zip(a).map(|(yi, ai)| yi - f * ai).collect()
    }

    pub fn apply_word(&self, word: &[usize], y: &[f64]) -> Vec<f64> {
        // word lists reflections in the order they were applied
        word.iter().fold(y.to_vec(), |acc, &i| self.reflect(i, &acc))
    }

    pub fn two_rho_exact(&self) -> Option<Vec<Q>> {
        let sr = self.simple_roots_exact.as_ref()?;
        Some(self.combine_exact(sr, &self.two_rho_coeffs))
    }

    pub fn positive_root_exact(&self, idx: usize) -> Option<Vec<Q>> {
        let sr = self.simple_roots_exact.as_ref()?;
        Some(self.combine_exact(sr, &self.positive_roots[idx].coeffs))
    }

    fn combine_exact(&self, sr: &[Vec<Q>], coeffs: &[i64]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim];
        for (c, row) in coeffs.iter().zip(sr) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x * exact::q(*c);
            }
        }
        out
    }

    /// Duistermaat–Heckman density `π(y) = ∏_{α∈Φ₊} ⟨α, y⟩²`.
    pub fn dh_density(&self) -> Polynomial {
        let mut p = Polynomial::one(self.dim);
        for root in &self.positive_roots {
            let l = Polynomial::linear(&root.coords, 0.0);
            p = &p * &(&l * &l);
        }
        p
    }

    /// Reflects `y` into the closed dominant chamber; returns the image and the
    /// sequence of simple reflections used.
    pub fn dominant_representative(&self, y: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let mut v = y.to_vec();
        let mut word = Vec::new();
        for _ in 0..100_000 {
            let scale = 1.0 + norm(&v);
            let bad = (0..self.rank).find(|&i| {
                let a = &self.simple_roots[i];
                dot(a, &v) < -1e-13 * norm(a) * scale
            });
            match bad {
                Some(i) => {
                    v = self.reflect(i, &v);
                    word.push(i);
                }
                None => break,
            }
        }
        (v, word)
    }

    /// Order of the Weyl group, via the orbit of a regular dominant point.
    pub fn weyl_group_order(&self) -> usize {
        let mut start = vec![0.0; self.dim];
        for w in &self.fundamental_weights {
            for (s, x) in start.iter_mut().zip(w) {
                *s += x;
            }
        }
        let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x * 1e8).round() as i64).collect() };
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(key(&start));
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for i in 0..self.rank {
                let w = self.reflect(i, &v);
                if seen.insert(key(&w)) {
                    queue.push_back(w);
                }
                if seen.len() > 1_000_000 {
                    return seen.len();
                }
            }
        }
        seen.len()
    }

    /// Index of the positive root with the given coefficient vector.
    pub fn root_index(&self, coeffs: &[i64]) -> Option<usize> {
        self.positive_roots.iter().position(|r| r.coeffs == coeffs)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Simple roots of a catalog entry, in their own coordinates.
fn catalog_block(name: &str) -> Result<Vec<Vec<Entry>>> {
    let ex = |n: i64, d: i64| Entry::Exact(exact::q_frac(n, d));
    let s3 = 3f64.sqrt() / 2.0;
    Ok(match name {
        // SL2 normalization: a* ≅ ℝ with the positive root at 2
        "A1" => vec![vec![ex(2, 1)]],
        "A1xA1" => vec![vec![ex(1, 1), ex(-1, 1)], vec![ex(1, 1), ex(1, 1)]],
        "A2" => vec![vec![ex(1, 1), ex(0, 1)], vec![ex(-1, 2), Entry::Float(s3)]],
        "B2" => vec![vec![ex(1, 1), ex(-1, 1)], vec![ex(0, 1), ex(1, 1)]],
        "G2" => vec![vec![ex(1, 1), ex(0, 1)], vec![ex(-3, 2), Entry::Float(s3)]],
        other => return Err(Error::UnknownCatalogName(other.to_string())),
    })
}

fn catalog_roots(name: &str) -> Result<Vec<Vec<Entry>>> {
    let name = name.trim();
    if let Ok(block) = catalog_block(name) {
        return Ok(block);
    }
    let factors: Vec<&str> = name.split(['x', '+']).map(str::trim).collect();
    if factors.len() < 2 || factors.iter().any(|f| f.is_empty()) {
        return Err(Error::UnknownCatalogName(name.to_string()));
    }
    let blocks = factors
        .iter()
        .map(|f| catalog_block(f).map_err(|_| Error::UnknownCatalogName(name.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = blocks.iter().map(|b| b[0].len()).sum();
    let mut rows = Vec::new();
    let mut offset = 0;
    for b in blocks {
        let w = b[0].len();
        for r in b {
            let mut row = vec![Entry::Exact(Q::zero()); total];
            for (k, e) in r.into_iter().enumerate() {
                row[offset + k] = e;
            }
            rows.push(row);
        }
        offset += w;
    }
    Ok(rows)
}

pub fn build_root_system(spec: &RootSystemSpec) -> Result<RootSystem> {
    let (name, rows) = match (&spec.catalog_name, &spec.simple_roots) {
        (Some(n), None) => (n.trim().to_string(), catalog_roots(n)?),
        (None, Some(r)) => ("custom".to_string(), r.clone()),
        (Some(_), Some(_)) => {
            return Err(Error::Schema("give exactly one of catalog_name / simple_roots".into()))
        }
        (None, None) => {
            if spec.central_rank == 0 {
                return Err(Error::Schema("give exactly one of catalog_name / simple_roots".into()));
            }
            ("torus".to_string(), Vec::new())
        }
    };
    let root_dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != root_dim) {
        return Err(Error::Schema("simple roots have inconsistent lengths".into()));
    }
    let dim = root_dim + spec.central_rank;
    let rank = rows.len();

    let pad = |v: Vec<f64>| -> Vec<f64> {
        let mut v = v;
        v.resize(dim, 0.0);
        v
    };
    let simple: Vec<Vec<f64>> = rows.iter().map(|r| pad(r.iter().map(Entry::to_f64).collect())).collect();
    let simple_exact: Option<Vec<Vec<Q>>> = rows
        .iter()
        .map(|r| {
            let mut v: Vec<Q> = r
                .iter()
                .map(|e| match e {
                    Entry::Exact(q) => Some(q.clone()),
                    Entry::Float(_) => None,
                })
                .collect::<Option<Vec<Q>>>()?;
            v.resize(dim, Q::zero());
            Some(v)
        })
        .collect();

    // independence
    if rank > 0 {
        let independent = match &simple_exact {
            Some(sr) => exact::rank(sr) == rank,
            None => {
                let g = gram(&simple);
                let m = nalgebra::DMatrix::from_fn(rank, rank, |i, j| g[i][j]);
                let scale: f64 = (0..rank).map(|i| g[i][i]).product();
                m.determinant().abs() > 1e-10 * scale
            }
        };
        if !independent {
            return Err(Error::InvalidCartanDatum("simple roots are linearly dependent".into()));
        }
    }

    let cartan = cartan_matrix(&simple, simple_exact.as_deref())?;
    let coeff_roots = positive_root_coeffs(&cartan)?;
    let positive_roots: Vec<Root> = coeff_roots
        .into_iter()
        .map(|c| {
            let mut coords = vec![0.0; dim];
            for (k, &ck) in c.iter().enumerate() {
                for (x, a) in coords.iter_mut().zip(&simple[k]) {
                    *x += ck as f64 * a;
                }
            }
            Root { coeffs: c, coords }
        })
        .collect();

    let mut two_rho_coeffs = vec![0i64; rank];
    for r in &positive_roots {
        for (t, c) in two_rho_coeffs.iter_mut().zip(&r.coeffs) {
            *t += c;
        }
    }
    let mut two_rho = vec![0.0; dim];
    for (k, &c) in two_rho_coeffs.iter().enumerate() {
        for (x, a) in two_rho.iter_mut().zip(&simple[k]) {
            *x += c as f64 * a;
        }
    }

    let (fundamental_weights, fundamental_weights_exact) = fundamental_weights(&simple, simple_exact.as_deref(), dim);
    let weyl_generators = simple
        .iter()
        .map(|a| {
            let aa = dot(a, a);
            (0..dim)
                .map(|i| (0..dim).map(|j| f64::from(u8::from(i == j)) - 2.0 * a[i] * a[j] / aa).collect())
                .collect()
        })
        .collect();

    let rs = RootSystem {
        name,
        dim,
        rank,
        simple_roots: simple,
        simple_roots_exact: simple_exact,
        cartan,
        positive_roots,
        fundamental_weights,
        fundamental_weights_exact,
        two_rho,
        two_rho_coeffs,
        weyl_generators,
    };
    check_reflections_permute(&rs)?;
    Ok(rs)
}

fn gram(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|a| rows.iter().map(|b| dot(a, b)).collect()).collect()
}

fn cartan_matrix(simple: &[Vec<f64>], exact_roots: Option<&[Vec<Q>]>) -> Result<Vec<Vec<i64>>> {
    let r = simple.len();
    let mut a = vec![vec![0i64; r]; r];
    for i in 0..r {
        for j in 0..r {
            let value = match exact_roots {
                Some(sr) => {
                    let c = exact::q(2) * exact::dot(&sr[i], &sr[j]) / exact::dot(&sr[j], &sr[j]);
                    if !c.is_integer() {
                        return Err(Error::InvalidCartanDatum(format!(
                            "Cartan number A[{i}][{j}] = {} is not an integer",
                            exact::fmt_rational(&c)
                        )));
                    }
                    c.to_integer().to_i64().unwrap_or(i64::MAX)
                }
                None => {
                    let c = 2.0 * dot(&simple[i], &simple[j]) / dot(&simple[j], &simple[j]);
                    let rc = c.round();
                    if (c - rc).abs() > CARTAN_TOL {
                        return Err(Error::InvalidCartanDatum(format!(
                            "Cartan number A[{i}][{j}] = {c} is not an integer"
                        )));
                    }
                    rc as i64
                }
            };
            if i != j && value > 0 {
                return Err(Error::InvalidCartanDatum(format!(
                    "off-diagonal Cartan number A[{i}][{j}] = {value} is positive"
                )));
            }
            a[i][j] = value;
        }
    }
    Ok(a)
}

/// Breadth-first closure by height using root strings: `β + α_i` is a root
/// iff `q = p − ⟨β, α_i^∨⟩ > 0`, where `p` is the length of the downward string.
fn positive_root_coeffs(cartan: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let r = cartan.len();
    let unit = |i: usize| -> Vec<i64> { (0..r).map(|k| i64::from(k == i)).collect() };
    let mut all: BTreeSet<Vec<i64>> = (0..r).map(unit).collect();
    let mut layer: Vec<Vec<i64>> = (0..r).map(unit).collect();
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for beta in &layer {
            for i in 0..r {
                if *beta == unit(i) {
                    continue;
                }
                let mut p = 0;
                loop {
                    let mut down = beta.clone();
                    down[i] -= p + 1;
                    if all.contains(&down) {
                        p += 1;
                    } else {
                        break;
                    }
                }
                let pairing: i64 = (0..r).map(|j| beta[j] * cartan[j][i]).sum();
                if p - pairing > 0 {
                    let mut up = beta.clone();
                    up[i] += 1;
                    if !all.contains(&up) {
                        next.insert(up);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        if all.len() > MAX_ROOTS {
            return Err(Error::InvalidCartanDatum("root closure does not terminate".into()));
        }
        layer = next.into_iter().collect();
    }
    let mut roots: Vec<Vec<i64>> = all.into_iter().collect();
    roots.sort_by(|a, b| a.iter().sum::<i64>().cmp(&b.iter().sum::<i64>()).then_with(|| b.cmp(a)));
    Ok(roots)
}

/// `ϖ_i` in the root span with `⟨ϖ_i, α_j⟩ = ½|α_j|² δ_ij`.
fn fundamental_weights(
    simple: &[Vec<f64>],
    exact_roots: Option<&[Vec<Q>]>,
    dim: usize,
) -> (Vec<Vec<f64>>, Option<Vec<Vec<Q>>>) {
    let r = simple.len();
    if r == 0 {
        return (Vec::new(), exact_roots.map(|_| Vec::new()));
    }
    if let Some(sr) = exact_roots {
        let g: Vec<Vec<Q>> = sr.iter().map(|a| sr.iter().map(|b| exact::dot(a, b)).collect()).collect();
        let mut ws = Vec::with_capacity(r);
        for i in 0..r {
            let mut rhs = vec![Q::zero(); r];
            rhs[i] = exact::dot(&sr[i], &sr[i]) / exact::q(2);
            // G symmetric: coefficients m solve G m = rhs
            let m = exact::solve(&g, &rhs).expect("independent simple roots");
            let mut w = vec![Q::zero(); dim];
            for (k, mk) in m.iter().enumerate() {
                for (x, a) in w.iter_mut().zip(&sr[k]) {
                    *x += mk * a;
                }
            }
            ws.push(w);
        }
        let f = ws.iter().map(|w| exact::vec_to_f64(w)).collect();
        return (f, Some(ws));
    }
    let g = gram(simple);
    let gm = nalgebra::DMatrix::from_fn(r, r, |i, j| g[i][j]);
    let inv = gm.try_inverse().expect("independent simple roots");
    let ws = (0..r)
        .map(|i| {
            let half = 0.5 * g[i][i];
            let mut w = vec![0.0; dim];
            for k in 0..r {
                let mk = inv[(k, i)] * half;
                for (x, a) in w.iter_mut().zip(&simple[k]) {
                    *x += mk * a;
                }
            }
            w
        })
        .collect();
    (ws, None)
}

fn check_reflections_permute(rs: &RootSystem) -> Result<()> {
    let set: HashSet<&Vec<i64>> = rs.positive_roots.iter().map(|r| &r.coeffs).collect();
    for i in 0..rs.rank {
        for root in &rs.positive_roots {
            if root.coeffs.iter().enumerate().all(|(k, &c)| c == i64::from(k == i)) {
                continue;
            }
            let pairing: i64 = (0..rs.rank).map(|j| root.coeffs[j] * rs.cartan[j][i]).sum();
            let mut image = root.coeffs.clone();
            image[i] -= pairing;
            if !set.contains(&image) {
                return Err(Error::InvalidCartanDatum(format!(
                    "reflection s{} does not permute the positive roots",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rs(name: &str) -> RootSystem {
        build_root_system(&RootSystemSpec::catalog(name)).unwrap()
    }

    #[test]
    fn a1_sl2_normalization() {
        let r = rs("A1");
        assert_eq!(r.dim, 1);
        assert_eq!(r.positive_roots.len(), 1);
        assert_eq!(r.positive_roots[0].coords, vec![2.0]);
        assert_eq!(r.two_rho, vec![2.0]);
        assert_eq!(r.fundamental_weights, vec![vec![1.0]]);
    }

    #[test]
    fn a1xa1_so4_coordinates() {
        let r = rs("A1xA1");
        let coords: Vec<_> = r.positive_roots.iter().map(|x| x.coords.clone()).collect();
        assert_eq!(coords, vec![vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert_eq!(r.two_rho, vec![2.0, 0.0]);
        assert_eq!(r.two_rho_exact().unwrap(), vec![exact::q(2), exact::q(0)]);
        assert_eq!(r.weyl_group_order(), 4);
    }

    #[test]
    fn a2_adds_sum_root() {
        let r = rs("A2");
        assert_eq!(r.positive_roots.len(), 3);
        let top = &r.positive_roots[2];
        assert_eq!(top.coeffs, vec![1, 1]);
        assert!((top.coords[0] - 0.5).abs() < 1e-15);
        assert!((top.coords[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((r.two_rho[0] - 1.0).abs() < 1e-15);
        assert!((r.two_rho[1] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.weyl_group_order(), 6);
        assert!(r.simple_roots_exact.is_none());
    }

    #[test]
    fn b2_g2_counts() {
        let b2 = rs("B2");
        assert_eq!(b2.positive_roots.len(), 4);
        assert_eq!(b2.cartan, vec![vec![2, -2], vec![-1, 2]]);
        assert_eq!(b2.weyl_group_order(), 8);
        let g2 = rs("G2");
        assert_eq!(g2.positive_roots.len(), 6);
        assert_eq!(g2.weyl_group_order(), 12);
        let hmax: i64 = g2.positive_roots.iter().map(Root::height).max().unwrap();
        assert_eq!(hmax, 5);
    }

    #[test]
    fn direct_sums_and_central_part() {
        let r = build_root_system(&RootSystemSpec::catalog("A2xA1").with_central_rank(1)).unwrap();
        assert_eq!(r.dim, 4);
        assert_eq!(r.rank, 3);
        assert_eq!(r.positive_roots.len(), 4);
        assert_eq!(r.central_dim(), 1);
        for w in &r.fundamental_weights {
            assert_eq!(w[3], 0.0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_root_system(&RootSystemSpec::catalog("E9")),
            Err(Error::UnknownCatalogName(_))
        ));
        let bad = RootSystemSpec {
            simple_roots: Some(vec![
                vec![Entry::Exact(exact::q(1)), Entry::Exact(exact::q(0))],
                vec![Entry::Exact(exact::q(1)), Entry::Exact(exact::q(1))],
            ]),
            ..Default::default()
        };
        assert!(matches!(build_root_system(&bad), Err(Error::InvalidCartanDatum(_))));
        let non_int = RootSystemSpec {
            simple_roots: Some(vec![
                vec![Entry::Exact(exact::q(1)), Entry::Exact(exact::q(0))],
                vec![Entry::Exact(exact::q_frac(-1, 3)), Entry::Exact(exact::q(1))],
            ]),
            ..Default::default()
        };
        assert!(matches!(build_root_system(&non_int), Err(Error::InvalidCartanDatum(_))));
        let both = RootSystemSpec {
            catalog_name: Some("A1".into()),
            simple_roots: Some(vec![vec![Entry::Exact(exact::q(2))]]),
            central_rank: 0,
        };
        assert!(matches!(build_root_system(&both), Err(Error::Schema(_))));
    }

    #[test]
    fn density_examples() {
        let p = rs("A1xA1").dh_density();
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let d = &x - &y;
        let s = &x + &y;
        let expect = &(&d * &d) * &(&s * &s);
        assert_eq!(p, expect);
        assert_eq!(rs("A1").dh_density(), Polynomial::from_terms(1, [(vec![2], 4.0)]));
        let torus = build_root_system(&RootSystemSpec { central_rank: 2, ..Default::default() }).unwrap();
        assert_eq!(torus.dh_density(), Polynomial::one(2));
        assert_eq!(rs("G2").dh_density().degree(), 12);
    }

    #[test]
    fn fundamental_weight_duality_exact() {
        for name in ["A1", "A1xA1", "B2", "A1xB2"] {
            let r = rs(name);
            let sr = r.simple_roots_exact.as_ref().unwrap();
            let fw = r.fundamental_weights_exact.as_ref().unwrap();
            for i in 0..r.rank {
                for j in 0..r.rank {
                    let lhs = exact::dot(&fw[i], &sr[j]);
                    let rhs = if i == j { exact::dot(&sr[j], &sr[j]) / exact::q(2) } else { Q::zero() };
                    assert_eq!(lhs, rhs, "{name} ({i},{j})");
                }
            }
            let sum: Vec<Q> = (0..r.positive_roots.len())
                .map(|k| r.positive_root_exact(k).unwrap())
                .fold(vec![Q::zero(); r.dim], |acc, v| exact::add(&acc, &v));
            assert_eq!(sum, r.two_rho_exact().unwrap());
        }
    }

    #[test]
    fn dominant_representative_examples() {
        let r = rs("A1xA1");
        let (v, _) = r.dominant_representative(&[-1.0, 0.0]);
        assert_eq!(v, vec![1.0, 0.0]);
        let (v, w) = r.dominant_representative(&[2.0, 1.0]);
        assert_eq!(v, vec![2.0, 1.0]);
        assert!(w.is_empty());
        let (v, w) = rs("A1").dominant_representative(&[-3.0]);
        assert_eq!(v, vec![3.0]);
        assert_eq!(w, vec![0]);
    }

    proptest! {
        #[test]
        fn density_is_weyl_invariant(name in prop::sample::select(vec!["A1xA1", "A2", "B2", "G2"]),
                                     y in prop::collection::vec(-3.0f64..3.0, 2)) {
            let r = rs(name);
            let p = r.dh_density();
            let base = p.eval(&y);
            for i in 0..r.rank {
                let img = r.reflect(i, &y);
                prop_assert!((p.eval(&img) - base).abs() <= 1e-9 * (1.0 + base.abs()));
            }
        }

        #[test]
        fn dominant_rep_is_idempotent(name in prop::sample::select(vec!["A1xA1", "A2", "B2", "G2"]),
                                      y in prop::collection::vec(-5.0f64..5.0, 2)) {
            let r = rs(name);
            let (v, word) = r.dominant_representative(&y);
            prop_assert!(r.is_dominant(&v, 1e-12));
            let img = r.apply_word(&word, &y);
            for (a, b) in img.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let (v2, w2) = r.dominant_representative(&v);
            prop_assert!(w2.is_empty());
            prop_assert_eq!(v2, v);
        }
    }
}
