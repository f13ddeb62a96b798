//! Exact convex polytopes over ℚ: inequality/vertex conversion, fan
//! triangulation and lattice-point enumeration of dilates.
//!
//! Vertex enumeration intersects every `dim`-subset of the bounding
//! hyperplanes and keeps the feasible points; facet enumeration does the dual
//! thing on vertex subsets. Both are exhaustive and meant for rank ≤ 4.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::rootsys::RootSystem;

/// `⟨normal, y⟩ ≤ offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpace {
    pub normal: Vec<Q>,
    pub offset: Q,
    /// Set when the inequality does not support a facet (or repeats one).
    pub redundant: bool,
}

impl HalfSpace {
    pub fn new(normal: Vec<Q>, offset: Q) -> Self {
        Self { normal, offset, redundant: false }
    }

    pub fn slack(&self, y: &[Q]) -> Q {
        &self.offset - exact::dot(&self.normal, y)
    }

    pub fn normal_f64(&self) -> Vec<f64> {
        exact::vec_to_f64(&self.normal)
    }

    pub fn offset_f64(&self) -> f64 {
        exact::to_f64(&self.offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolytopeInput {
    Halfspaces(Vec<HalfSpace>),
    Vertices(Vec<Vec<Q>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolytope {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace>,
    /// Lexicographically sorted.
    pub vertices: Vec<Vec<Q>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<Q>>,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<Q>>) -> Result<Self> {
        let s = Self { vertices };
        if s.signed_det().is_zero() {
            return Err(Error::DegenerateSimplex);
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    fn edge_rows(&self) -> Vec<Vec<Q>> {
        let v0 = &self.vertices[0];
        self.vertices[1..].iter().map(|v| exact::sub(v, v0)).collect()
    }

    fn signed_det(&self) -> Q {
        let rows = self.edge_rows();
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Q::zero();
        }
        exact::det(&rows)
    }

    pub fn volume(&self) -> Q {
        self.signed_det().abs() / Q::from_integer(factorial_big(self.dim()))
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| exact::vec_to_f64(v)).collect()
    }

    pub fn barycenter(&self) -> Vec<Q> {
        let n = exact::q(self.vertices.len() as i64);
        let mut c = vec![Q::zero(); self.vertices[0].len()];
        for v in &self.vertices {
            c = exact::add(&c, v);
        }
        exact::scale(&c, &(Q::from_integer(1.into()) / n))
    }
}

fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub simplices: Vec<Simplex>,
}

impl Triangulation {
    pub fn volume(&self) -> Q {
        self.simplices.iter().fold(Q::zero(), |acc, s| acc + s.volume())
    }
}

impl ConvexPolytope {
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::Schema("polytope input is empty".into()));
        }
        for h in &halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: h.normal.len() });
            }
            if h.normal.iter().all(Zero::is_zero) {
                return Err(Error::Schema("halfspace with zero normal".into()));
            }
        }
        let normals: Vec<Vec<Q>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        let vertices = enumerate_vertices(dim, &halfspaces);
        if exact::rank(&normals) < dim {
            // the region contains a line when nonempty
            return Err(if region_nonempty_with_lines(dim, &halfspaces) { Error::Unbounded } else { Error::Empty });
        }
        if vertices.is_empty() {
            return Err(Error::Empty);
        }
        if has_recession_ray(dim, &halfspaces) {
            return Err(Error::Unbounded);
        }
        let adim = affine_dim(&vertices);
        if adim < dim {
            return Err(Error::LowerDimensional { affine_dim: adim, dim });
        }
        let mut p = Self { dim, halfspaces, vertices };
        p.flag_redundant();
        Ok(p)
    }

    pub fn from_vertices(dim: usize, points: Vec<Vec<Q>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        for v in &points {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        let pts: Vec<Vec<Q>> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let adim = affine_dim(&pts);
        if adim < dim {
            return Err(Error::LowerDimensional { affine_dim: adim, dim });
        }
        let facets = hull_facets(&pts);
        let halfspaces: Vec<HalfSpace> = facets.into_iter().map(|(n, o)| HalfSpace::new(n, o)).collect();
        let vertices: Vec<Vec<Q>> = pts
            .into_iter()
            .filter(|v| {
                let tight: Vec<Vec<Q>> = halfspaces
                    .iter()
                    .filter(|h| h.slack(v).is_zero())
                    .map(|h| h.normal.clone())
                    .collect();
                exact::rank(&tight) == dim
            })
            .collect();
        Ok(Self { dim, halfspaces, vertices })
    }

    /// Adds `⟨α_i, y⟩ ≥ 0` for every simple root.
    pub fn intersect_chamber(&self, rs: &RootSystem) -> Result<Self> {
        let sr = rs
            .simple_roots_exact
            .as_ref()
            .ok_or_else(|| Error::Schema("chamber intersection needs rational simple roots".into()))?;
        let mut hs: Vec<HalfSpace> = self.halfspaces.iter().map(|h| HalfSpace::new(h.normal.clone(), h.offset.clone())).collect();
        for a in sr {
            let neg: Vec<Q> = a.iter().map(|x| -x).collect();
            let (n, o) = exact::primitive(&neg, &Q::zero());
            hs.push(HalfSpace::new(n, o));
        }
        Self::from_halfspaces(self.dim, hs)
    }

    pub fn contains(&self, y: &[Q]) -> bool {
        self.halfspaces.iter().all(|h| !h.slack(y).is_negative())
    }

    pub fn contains_f64(&self, y: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| {
            let n = h.normal_f64();
            crate::rootsys::dot(&n, y) <= h.offset_f64() + tol
        })
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| exact::vec_to_f64(v)).collect()
    }

    pub fn facets(&self) -> impl Iterator<Item = &HalfSpace> {
        self.halfspaces.iter().filter(|h| !h.redundant)
    }

    pub fn dilate(&self, k: u32) -> Self {
        let kq = exact::q(k as i64);
        Self {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| HalfSpace { normal: h.normal.clone(), offset: &h.offset * &kq, redundant: h.redundant })
                .collect(),
            vertices: self.vertices.iter().map(|v| exact::scale(v, &kq)).collect(),
        }
    }

    pub fn volume(&self) -> Q {
        triangulate(self).volume()
    }

    /// Axis-aligned bounding box as `(lo, hi)` per coordinate.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|i| {
                let lo = self.vertices.iter().map(|v| exact::to_f64(&v[i])).fold(f64::INFINITY, f64::min);
                let hi = self.vertices.iter().map(|v| exact::to_f64(&v[i])).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect()
    }

    fn flag_redundant(&mut self) {
        let mut seen: BTreeSet<(Vec<Q>, Q)> = BTreeSet::new();
        for h in &mut self.halfspaces {
            let tight: Vec<Vec<Q>> = self.vertices.iter().filter(|v| h.slack(v).is_zero()).cloned().collect();
            let supports_facet = tight.len() >= self.dim && affine_dim(&tight) + 1 == self.dim;
            let key = exact::primitive(&h.normal, &h.offset);
            h.redundant = !supports_facet || !seen.insert(key);
        }
    }
}

/// Builds P₊ from user input, optionally intersecting with the dominant chamber
/// (for when the W-invariant polytope P is supplied instead of P₊).
pub fn build_polytope(input: &PolytopeInput, rs: &RootSystem, append_chamber: bool) -> Result<ConvexPolytope> {
    let p = match input {
        PolytopeInput::Halfspaces(hs) => {
            if append_chamber {
                let sr = rs
                    .simple_roots_exact
                    .as_ref()
                    .ok_or_else(|| Error::Schema("chamber intersection needs rational simple roots".into()))?;
                let mut all = hs.clone();
                for a in sr {
                    let neg: Vec<Q> = a.iter().map(|x| -x).collect();
                    let (n, o) = exact::primitive(&neg, &Q::zero());
                    all.push(HalfSpace::new(n, o));
                }
                ConvexPolytope::from_halfspaces(rs.dim, all)?
            } else {
                ConvexPolytope::from_halfspaces(rs.dim, hs.clone())?
            }
        }
        PolytopeInput::Vertices(vs) => {
            let p = ConvexPolytope::from_vertices(rs.dim, vs.clone())?;
            if append_chamber {
                p.intersect_chamber(rs)?
            } else {
                p
            }
        }
    };
    if p.dim != rs.dim {
        return Err(Error::DimensionMismatch { expected: rs.dim, got: p.dim });
    }
    Ok(p)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn enumerate_vertices(dim: usize, hs: &[HalfSpace]) -> Vec<Vec<Q>> {
    let mut out = BTreeSet::new();
    for subset in combinations(hs.len(), dim) {
        let a: Vec<Vec<Q>> = subset.iter().map(|&i| hs[i].normal.clone()).collect();
        let b: Vec<Q> = subset.iter().map(|&i| hs[i].offset.clone()).collect();
        if let Some(x) = exact::solve(&a, &b) {
            if hs.iter().all(|h| !h.slack(&x).is_negative()) {
                out.insert(x);
            }
        }
    }
    out.into_iter().collect()
}

/// Whether `{r : ⟨n_i, r⟩ ≤ 0}` has an extreme ray (normals assumed full rank).
fn has_recession_ray(dim: usize, hs: &[HalfSpace]) -> bool {
    for subset in combinations(hs.len(), dim - 1) {
        let rows: Vec<Vec<Q>> = subset.iter().map(|&i| hs[i].normal.clone()).collect();
        let Some(r) = exact::null_vector(&rows, dim) else { continue };
        for sign in [1, -1] {
            let rr = exact::scale(&r, &exact::q(sign));
            if hs.iter().all(|h| !exact::dot(&h.normal, &rr).is_positive()) {
                return true;
            }
        }
    }
    false
}

/// Feasibility when the normals do not span: restrict to the row space, which
/// meets every nonempty such region.
fn region_nonempty_with_lines(dim: usize, hs: &[HalfSpace]) -> bool {
    let normals: Vec<Vec<Q>> = hs.iter().map(|h| h.normal.clone()).collect();
    let (ech, pivots) = exact::row_echelon(&normals);
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    let mut extra = Vec::new();
    for &f in &free {
        // null-space basis vector for free column f
        let mut v = vec![Q::zero(); dim];
        v[f] = exact::q(1);
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -ech[r][f].clone();
        }
        extra.push(HalfSpace::new(v.clone(), Q::zero()));
        extra.push(HalfSpace::new(v.iter().map(|x| -x).collect(), Q::zero()));
    }
    let mut all = hs.to_vec();
    all.extend(extra);
    !enumerate_vertices(dim, &all).is_empty()
}

pub(crate) fn affine_dim(points: &[Vec<Q>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<Q>> = points[1..].iter().map(|p| exact::sub(p, &points[0])).collect();
    exact::rank(&rows)
}

/// Facets `(normal, offset)` of the full-dimensional hull of `pts`, with primitive normals.
fn hull_facets(pts: &[Vec<Q>]) -> Vec<(Vec<Q>, Q)> {
    let dim = pts[0].len();
    let mut facets = BTreeSet::new();
    for subset in combinations(pts.len(), dim) {
        let base = &pts[subset[0]];
        let rows: Vec<Vec<Q>> = subset[1..].iter().map(|&i| exact::sub(&pts[i], base)).collect();
        let Some(n) = exact::null_vector(&rows, dim) else { continue };
        let o = exact::dot(&n, base);
        let vals: Vec<Q> = pts.iter().map(|p| exact::dot(&n, p) - &o).collect();
        let (n, o) = if vals.iter().all(|v| !v.is_positive()) {
            (n, o)
        } else if vals.iter().all(|v| !v.is_negative()) {
            (n.iter().map(|x| -x).collect(), -o)
        } else {
            continue;
        };
        facets.insert(exact::primitive(&n, &o));
    }
    facets.into_iter().collect()
}

/// Fan triangulation from the lexicographically smallest vertex, recursing on
/// the facets that avoid it.
pub fn triangulate(p: &ConvexPolytope) -> Triangulation {
    let simplices = triangulate_points(p.vertices.clone())
        .into_iter()
        .map(|vs| Simplex { vertices: vs })
        .collect();
    Triangulation { simplices }
}

fn triangulate_points(mut points: Vec<Vec<Q>>) -> Vec<Vec<Vec<Q>>> {
    points.sort_by(|a, b| exact::lex_cmp(a, b));
    let m = affine_dim(&points);
    if points.len() == m + 1 {
        return vec![points];
    }
    // coordinates on which projection of the affine hull is injective
    let diffs: Vec<Vec<Q>> = points[1..].iter().map(|p| exact::sub(p, &points[0])).collect();
    let (_, pivots) = exact::row_echelon(&diffs);
    let local: Vec<Vec<Q>> = points.iter().map(|p| pivots.iter().map(|&c| p[c].clone()).collect()).collect();
    let mut out = Vec::new();
    let apex = &points[0];
    for (n, o) in hull_facets(&local) {
        let on: Vec<usize> = (0..points.len()).filter(|&i| exact::dot(&n, &local[i]) == o).collect();
        if on.contains(&0) {
            continue;
        }
        let face: Vec<Vec<Q>> = on.iter().map(|&i| points[i].clone()).collect();
        for s in triangulate_points(face) {
            let mut simplex = vec![apex.clone()];
            simplex.extend(s);
            out.push(simplex);
        }
    }
    out
}

/// Standard integer lattice basis.
pub fn standard_lattice(dim: usize) -> Vec<Vec<i64>> {
    (0..dim).map(|i| (0..dim).map(|j| i64::from(i == j)).collect()).collect()
}

/// All points of the lattice spanned by the rows of `basis` lying in `k·p`,
/// ordered lexicographically by lattice coordinates.
pub fn lattice_points(p: &ConvexPolytope, k: u32, basis: &[Vec<i64>]) -> Result<Vec<Vec<Q>>> {
    if k == 0 {
        return Err(Error::Schema("dilation factor must be positive".into()));
    }
    let d = p.dim;
    if basis.len() != d || basis.iter().any(|b| b.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: basis.len() });
    }
    let bt: Vec<Vec<Q>> = (0..d).map(|i| (0..d).map(|j| exact::q(basis[j][i])).collect()).collect();
    let kp = p.dilate(k);
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for v in &kp.vertices {
        let z = exact::solve(&bt, v).ok_or_else(|| Error::Schema("singular lattice basis".into()))?;
        for i in 0..d {
            let f = z[i].floor().to_integer();
            let c = z[i].ceil().to_integer();
            lo[i] = lo[i].min(i64::try_from(f).unwrap_or(i64::MIN));
            hi[i] = hi[i].max(i64::try_from(c).unwrap_or(i64::MAX));
        }
    }
    let mut out = Vec::new();
    let mut z = lo.clone();
    loop {
        let y: Vec<Q> = (0..d).map(|i| (0..d).fold(Q::zero(), |acc, j| acc + exact::q(basis[j][i] * z[j]))).collect();
        if kp.contains(&y) {
            out.push(y);
        }
        // odometer, last coordinate fastest
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if z[i] < hi[i] {
                z[i] += 1;
                for zj in z.iter_mut().skip(i + 1) {
                    *zj = 0;
                }
                for j in i + 1..d {
                    z[j] = lo[j];
                }
                break;
            }
        }
    }
}
