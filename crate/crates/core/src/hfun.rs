//! The reduced H-functional and its non-Archimedean pieces.
//!
//! `𝓗(Λ) = ln ∫_{P₊} e^{⟨Λ, y − 2ρ⟩} π dy − ln V` with `V = ∫_{P₊} π dy`, and for a
//! concave piecewise-linear `f` the pair `L^NA = f(2ρ)`,
//! `S^NA = −ln (1/V) ∫_{P₊} e^{−f} π dy`. The additive constant
//! `ln ∏⟨α, ρ⟩²` that appears in some normalizations is dropped throughout.

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::expint::{self, ExpIntOptions, RegionMoments};
use crate::poly::Polynomial;
use crate::polytope::{triangulate, ConvexPolytope, HalfSpace, Triangulation};
use crate::rootsys::{dot, RootSystem};

/// Relative slack used when testing membership in the dominant chamber.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// One affine piece `y ↦ c − ⟨lambda, y⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PLPiece {
    pub c: Q,
    pub lambda: Vec<Q>,
}

impl PLPiece {
    pub fn eval(&self, y: &[Q]) -> Q {
        &self.c - exact::dot(&self.lambda, y)
    }

    pub fn lambda_f64(&self) -> Vec<f64> {
        exact::vec_to_f64(&self.lambda)
    }
}

/// `f(y) = min_a (C_a − ⟨Λ_a, y⟩)`, concave by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PLConcave {
    pub pieces: Vec<PLPiece>,
    /// Set when the data were given as exact rationals rather than floats.
    pub rational_flag: bool,
}

impl PLConcave {
    pub fn new(pieces: Vec<PLPiece>, rational_flag: bool) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Schema("PL function needs at least one piece".into()));
        };
        let n = first.lambda.len();
        if let Some(bad) = pieces.iter().find(|p| p.lambda.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.lambda.len() });
        }
        Ok(Self { pieces, rational_flag })
    }

    /// Floats are taken at their exact binary value.
    pub fn from_f64(pieces: &[(f64, Vec<f64>)]) -> Result<Self> {
        Self::new(
            pieces
                .iter()
                .map(|(c, l)| PLPiece { c: exact::from_f64(*c), lambda: exact::vec_from_f64(l) })
                .collect(),
            false,
        )
    }

    /// The one-piece function `c − ⟨lam, y⟩`.
    pub fn from_vector(lam: &[f64], c: f64) -> Self {
        Self { pieces: vec![PLPiece { c: exact::from_f64(c), lambda: exact::vec_from_f64(lam) }], rational_flag: false }
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].lambda.len()
    }

    pub fn eval_exact(&self, y: &[Q]) -> Q {
        self.pieces.iter().map(|p| p.eval(y)).min().expect("nonempty")
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| exact::to_f64(&p.c) - dot(&p.lambda_f64(), y))
            .fold(f64::INFINITY, f64::min)
    }

    /// First piece attaining the minimum at `y`.
    pub fn active_piece(&self, y: &[Q]) -> usize {
        let vals: Vec<Q> = self.pieces.iter().map(|p| p.eval(y)).collect();
        let m = vals.iter().min().expect("nonempty");
        vals.iter().position(|v| v == m).expect("min present")
    }

    pub fn shifted(&self, c: &Q) -> Self {
        Self {
            pieces: self.pieces.iter().map(|p| PLPiece { c: &p.c + c, lambda: p.lambda.clone() }).collect(),
            rational_flag: self.rational_flag,
        }
    }

    /// The polyhedral cells on which each piece attains the minimum; `None`
    /// for pieces that never do on a full-dimensional set (or repeat an earlier one).
    pub fn cells(&self, domain: &ConvexPolytope) -> Result<Vec<Option<ConvexPolytope>>> {
        let mut out = Vec::with_capacity(self.pieces.len());
        for (a, pa) in self.pieces.iter().enumerate() {
            if self.pieces[..a].contains(pa) {
                out.push(None);
                continue;
            }
            let mut hs: Vec<HalfSpace> =
                domain.halfspaces.iter().map(|h| HalfSpace::new(h.normal.clone(), h.offset.clone())).collect();
            for (b, pb) in self.pieces.iter().enumerate() {
                if b == a || pb == pa {
                    continue;
                }
                // f_a ≤ f_b  ⇔  ⟨Λ_b − Λ_a, y⟩ ≤ C_b − C_a
                let normal = exact::sub(&pb.lambda, &pa.lambda);
                let offset = &pb.c - &pa.c;
                if normal.iter().all(Zero::is_zero) {
                    if offset.is_negative() {
                        hs.clear();
                        break;
                    }
                    continue;
                }
                hs.push(HalfSpace::new(normal, offset));
            }
            if hs.is_empty() {
                out.push(None);
                continue;
            }
            match ConvexPolytope::from_halfspaces(domain.dim, hs) {
                Ok(cell) => out.push(Some(cell)),
                Err(Error::Empty | Error::LowerDimensional { .. }) => out.push(None),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// What an [`HBreakdown`] was computed from.
#[derive(Debug, Clone, PartialEq)]
pub enum HSource {
    Vector(Vec<f64>),
    PiecewiseLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HBreakdown {
    pub h: f64,
    pub s_na: f64,
    pub l_na: f64,
    pub source: HSource,
    /// `V = ∫_{P₊} π dy`.
    pub normalization: f64,
    /// Pieces that never attain the minimum on a full-dimensional set.
    pub redundant_pieces: Vec<usize>,
    /// `b(Λ) − 2ρ`, reported for vector inputs.
    pub grad: Option<Vec<f64>>,
}

/// Precomputed data for repeated evaluations on a fixed `(G, P₊)`.
#[derive(Debug, Clone)]
pub struct HFunctional<'a> {
    pub rs: &'a RootSystem,
    pub p_plus: &'a ConvexPolytope,
    pub opts: ExpIntOptions,
    tri: Triangulation,
    pi: Polynomial,
    ln_v: f64,
    two_rho_q: Vec<Q>,
}

impl<'a> HFunctional<'a> {
    pub fn new(rs: &'a RootSystem, p_plus: &'a ConvexPolytope, opts: ExpIntOptions) -> Result<Self> {
        if p_plus.dim != rs.dim {
            return Err(Error::DimensionMismatch { expected: rs.dim, got: p_plus.dim });
        }
        let tri = triangulate(p_plus);
        let pi = rs.dh_density();
        let ln_v = expint::ln_region_integral(&tri, &pi, &vec![0.0; rs.dim], &opts)?;
        let two_rho_q = rs.two_rho_exact().unwrap_or_else(|| exact::vec_from_f64(&rs.two_rho));
        Ok(Self { rs, p_plus, opts, tri, pi, ln_v, two_rho_q })
    }

    pub fn normalization(&self) -> f64 {
        self.ln_v.exp()
    }

    pub fn ln_normalization(&self) -> f64 {
        self.ln_v
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn density(&self) -> &Polynomial {
        &self.pi
    }

    /// Moments of `e^{⟨lam,y⟩} π dy` on P₊; `lam` is unrestricted.
    pub fn moments(&self, lam: &[f64]) -> Result<RegionMoments> {
        self.check_dim(lam.len())?;
        expint::region_moments_tri(&self.tri, &self.pi, lam, &self.opts)
    }

    /// `𝓗(lam)` without the dominance check; the minimizer steps outside the chamber.
    pub fn value_unrestricted(&self, lam: &[f64]) -> Result<f64> {
        self.check_dim(lam.len())?;
        let ln_z = expint::ln_region_integral(&self.tri, &self.pi, lam, &self.opts)?;
        Ok(ln_z - dot(lam, &self.rs.two_rho) - self.ln_v)
    }

    /// Value, gradient `b − 2ρ` and Hessian (covariance) at an unrestricted `lam`.
    pub fn value_grad_hess(&self, lam: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let m = self.moments(lam)?;
        let h = m.ln_z() - dot(lam, &self.rs.two_rho) - self.ln_v;
        let b = m.barycenter();
        let grad = b.iter().zip(&self.rs.two_rho).map(|(x, r)| x - r).collect();
        Ok((h, grad, m.covariance()))
    }

    pub fn barycenter_grad_hess(&self, lam: &[f64]) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
        let m = self.moments(lam)?;
        let b = m.barycenter();
        let grad = b.iter().zip(&self.rs.two_rho).map(|(x, r)| x - r).collect();
        Ok((b, grad, m.covariance()))
    }

    pub fn check_dominant(&self, lam: &[f64]) -> Result<()> {
        let tol = DOMINANCE_TOL * (1.0 + lam.iter().map(|x| x * x).sum::<f64>().sqrt());
        if self.rs.is_dominant(lam, tol) {
            Ok(())
        } else {
            Err(Error::NotDominant(lam.to_vec()))
        }
    }

    /// `𝓗(lam)` for dominant `lam`, evaluated as the one-piece PL function `−⟨lam, y⟩`.
    pub fn h_vector(&self, lam: &[f64]) -> Result<HBreakdown> {
        self.check_dim(lam.len())?;
        self.check_dominant(lam)?;
        let mut out = self.h_plfunction(&PLConcave::from_vector(lam, 0.0))?;
        let (_, grad, _) = self.barycenter_grad_hess(lam)?;
        out.source = HSource::Vector(lam.to_vec());
        out.grad = Some(grad);
        Ok(out)
    }

    pub fn h_plfunction(&self, f: &PLConcave) -> Result<HBreakdown> {
        self.check_dim(f.dim())?;
        if !self.p_plus.contains(&self.two_rho_q) {
            return Err(Error::TwoRhoOutsideDomain);
        }
        for (index, p) in f.pieces.iter().enumerate() {
            let l = p.lambda_f64();
            let tol = DOMINANCE_TOL * (1.0 + l.iter().map(|x| x * x).sum::<f64>().sqrt());
            if !self.rs.is_dominant(&l, tol) {
                return Err(Error::NotDominantPiece { index });
            }
        }
        let f_2rho = f.eval_exact(&self.two_rho_q);
        let cells = f.cells(self.p_plus)?;
        let mut logs = Vec::new();
        let mut redundant = Vec::new();
        for (a, cell) in cells.iter().enumerate() {
            let Some(cell) = cell else {
                redundant.push(a);
                continue;
            };
            let piece = &f.pieces[a];
            // e^{−f_a(y) + f(2ρ)} = e^{−C_a + f(2ρ)} e^{⟨Λ_a, y⟩}, offset exact
            let offset = exact::to_f64(&(&f_2rho - &piece.c));
            let tri = if cells.len() == 1 { self.tri.clone() } else { triangulate(cell) };
            let ln_i = expint::ln_region_integral(&tri, &self.pi, &piece.lambda_f64(), &self.opts)?;
            logs.push(offset + ln_i);
        }
        let h = log_sum_exp(&logs) - self.ln_v;
        let l_na = exact::to_f64(&f_2rho);
        Ok(HBreakdown {
            h,
            s_na: l_na - h,
            l_na,
            source: HSource::PiecewiseLinear,
            normalization: self.normalization(),
            redundant_pieces: redundant,
            grad: None,
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.rs.dim {
            return Err(Error::DimensionMismatch { expected: self.rs.dim, got: n });
        }
        Ok(())
    }
}

/// Summed in slice order.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + crate::exec::compensated_sum(xs.iter().map(|x| (x - m).exp())).ln()
}

pub fn h_vector(rs: &RootSystem, p_plus: &ConvexPolytope, lam: &[f64]) -> Result<HBreakdown> {
    HFunctional::new(rs, p_plus, ExpIntOptions::default())?.h_vector(lam)
}

pub fn h_plfunction(rs: &RootSystem, p_plus: &ConvexPolytope, f: &PLConcave) -> Result<HBreakdown> {
    HFunctional::new(rs, p_plus, ExpIntOptions::default())?.h_plfunction(f)
}

pub fn barycenter_grad_hess(rs: &RootSystem, p_plus: &ConvexPolytope, lam: &[f64]) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    HFunctional::new(rs, p_plus, ExpIntOptions::default())?.barycenter_grad_hess(lam)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exact::{q, q_frac};
    use crate::rootsys::{build_root_system, RootSystemSpec};
    use proptest::prelude::*;

    pub(crate) fn so4() -> RootSystem {
        build_root_system(&RootSystemSpec::catalog("A1xA1")).unwrap()
    }

    pub(crate) fn case1() -> ConvexPolytope {
        ConvexPolytope::from_vertices(2, vec![vec![q(0), q(0)], vec![q(3), q(3)], vec![q(3), q(0)], vec![q_frac(3, 2), q_frac(-3, 2)]])
            .unwrap()
    }

    fn sl2() -> (RootSystem, ConvexPolytope) {
        let rs = build_root_system(&RootSystemSpec::catalog("A1")).unwrap();
        let p = ConvexPolytope::from_halfspaces(1, vec![HalfSpace::new(vec![q(1)], q(3)), HalfSpace::new(vec![q(-1)], q(0))]).unwrap();
        (rs, p)
    }

    #[test]
    fn trivial_configuration_is_zero() {
        let rs = so4();
        let p = case1();
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        assert_eq!(hf.h_vector(&[0.0, 0.0]).unwrap().h, 0.0);
        let five = PLConcave::from_vector(&[0.0, 0.0], 5.0);
        let b = hf.h_plfunction(&five).unwrap();
        assert_eq!(b.h, 0.0);
        assert_eq!(b.s_na, 5.0);
        assert_eq!(b.l_na, 5.0);
    }

    #[test]
    fn sl2_gradient_at_zero() {
        let (rs, p) = sl2();
        let b = h_vector(&rs, &p, &[0.0]).unwrap();
        let g = b.grad.unwrap();
        // b(0) = 81/36 = 9/4, 2ρ = 2
        assert!((g[0] - 0.25).abs() < 1e-14);
        let (bary, grad, hess) = barycenter_grad_hess(&rs, &p, &[0.0]).unwrap();
        assert!((bary[0] - 2.25).abs() < 1e-14);
        assert!((grad[0] - 0.25).abs() < 1e-14);
        // Var = E[y²] − 81/16 with E[y²] = (4·3⁵/5)/36 = 27/5
        assert!((hess[(0, 0)] - (27.0 / 5.0 - 81.0 / 16.0)).abs() < 1e-13);
    }

    #[test]
    fn one_piece_matches_vector_exactly() {
        let rs = so4();
        let p = case1();
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        let lam = [0.3, -0.1];
        let v = hf.h_vector(&lam).unwrap().h;
        for c in [0.0, 1.5, -7.25, 1e3] {
            let f = PLConcave::from_vector(&lam, c);
            assert_eq!(hf.h_plfunction(&f).unwrap().h, v);
        }
    }

    #[test]
    fn errors() {
        let rs = so4();
        let p = case1();
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        assert!(matches!(hf.h_vector(&[-0.1, 0.3]), Err(Error::NotDominant(_))));
        let f = PLConcave::from_f64(&[(0.0, vec![0.1, -0.1]), (1.0, vec![-1.0, 0.0])]).unwrap();
        assert_eq!(hf.h_plfunction(&f), Err(Error::NotDominantPiece { index: 1 }));
        let small = ConvexPolytope::from_vertices(2, vec![vec![q(0), q(0)], vec![q(1), q(1)], vec![q(1), q(-1)]]).unwrap();
        let hf2 = HFunctional::new(&rs, &small, ExpIntOptions::default()).unwrap();
        assert_eq!(hf2.h_plfunction(&PLConcave::from_vector(&[0.0, 0.0], 0.0)), Err(Error::TwoRhoOutsideDomain));
        assert!(matches!(hf.h_vector(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_piece_cells_cover_the_polytope() {
        let rs = so4();
        let p = case1();
        let f = PLConcave::from_f64(&[(0.0, vec![0.05, -0.05]), (0.3, vec![0.15, -0.15])]).unwrap();
        let cells = f.cells(&p).unwrap();
        let total: Q = cells.iter().flatten().map(|c| c.volume()).fold(Q::zero(), |a, b| a + b);
        assert_eq!(total, q_frac(27, 4));
        // ⟨(0.1,−0.1), y⟩ = 0.3 ⇔ x − y = 3: the second piece wins only on a facet, so it is redundant
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        let b = hf.h_plfunction(&f).unwrap();
        assert_eq!(b.redundant_pieces, vec![1]);
    }

    #[test]
    fn mini_h_example() {
        let rs = so4();
        let p = case1();
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        let f = PLConcave::from_f64(&[(0.0, vec![0.05, -0.05]), (0.3, vec![0.15, -0.15])]).unwrap();
        let f2 = PLConcave::from_f64(&[(0.0, vec![0.05, -0.05]), (0.15, vec![0.15, -0.15])]).unwrap();
        for f in [f, f2] {
            let two_rho = exact::vec_from_f64(&rs.two_rho);
            let a = f.active_piece(&two_rho);
            let single = hf.h_vector(&f.pieces[a].lambda_f64()).unwrap().h;
            assert!(hf.h_plfunction(&f).unwrap().h >= single - 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rs = so4();
        let p = case1();
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        for lam in [[0.0, 0.0], [0.3, -0.1], [0.8, 0.2]] {
            let (_, g, hess) = hf.value_grad_hess(&lam).unwrap();
            let h = 1e-5;
            for i in 0..2 {
                let mut lp = lam;
                let mut lm = lam;
                lp[i] += h;
                lm[i] -= h;
                let fd = (hf.value_unrestricted(&lp).unwrap() - hf.value_unrestricted(&lm).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3), "{fd} vs {}", g[i]);
                let gp = hf.value_grad_hess(&lp).unwrap().1;
                let gm = hf.value_grad_hess(&lm).unwrap().1;
                for j in 0..2 {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd2 - hess[(i, j)]).abs() <= 1e-4 * hess[(i, j)].abs().max(1e-2));
                }
            }
        }
    }

    fn dominant() -> impl Strategy<Value = Vec<f64>> {
        // Λ = a ϖ₁ + b ϖ₂ with ϖ₁ = (1/2,−1/2), ϖ₂ = (1/2,1/2)
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| vec![0.5 * (a + b), 0.5 * (b - a)])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn convex_along_segments(l1 in dominant(), l2 in dominant(), t in 0.05f64..0.95) {
            let rs = so4();
            let p = case1();
            let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
            let mid: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let hm = hf.h_vector(&mid).unwrap().h;
            let h1 = hf.h_vector(&l1).unwrap().h;
            let h2 = hf.h_vector(&l2).unwrap().h;
            prop_assert!(hm <= t * h1 + (1.0 - t) * h2 + 1e-10);
        }

        #[test]
        fn shift_invariance(c in -50.0f64..50.0, l in dominant(), l2 in dominant()) {
            let rs = so4();
            let p = case1();
            let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
            let f = PLConcave::from_f64(&[(0.0, l.clone()), (0.2, l2.clone())]).unwrap();
            let g = f.shifted(&exact::from_f64(c));
            prop_assert_eq!(hf.h_plfunction(&f).unwrap().h, hf.h_plfunction(&g).unwrap().h);
        }

        #[test]
        fn redundant_piece_is_harmless(l in dominant()) {
            let rs = so4();
            let p = case1();
            let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
            let f = PLConcave::from_f64(&[(0.0, l.clone())]).unwrap();
            // never below the first piece on P₊ ⊂ {|y| ≤ 5}
            let g = PLConcave::from_f64(&[(0.0, l.clone()), (100.0, vec![0.0, 0.0])]).unwrap();
            let a = hf.h_plfunction(&f).unwrap().h;
            let b = hf.h_plfunction(&g).unwrap();
            prop_assert!((a - b.h).abs() <= 1e-12);
            prop_assert_eq!(b.redundant_pieces, vec![1]);
        }

        #[test]
        fn mini_h_random(l1 in dominant(), l2 in dominant(), c in -0.5f64..0.5) {
            let rs = so4();
            let p = case1();
            let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
            let f = PLConcave::from_f64(&[(0.0, l1), (c, l2)]).unwrap();
            let two_rho = exact::vec_from_f64(&rs.two_rho);
            let a = f.active_piece(&two_rho);
            let single = hf.h_vector(&f.pieces[a].lambda_f64()).unwrap().h;
            prop_assert!(hf.h_plfunction(&f).unwrap().h >= single - 1e-10);
        }
    }
}
