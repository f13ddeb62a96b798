//! Geometric verdicts read off the minimizer: the Kähler–Einstein test at
//! Λ = 0, the structure of the central fibre and the stability verdict.

use crate::error::{Error, Result};
use crate::expint::ExpIntOptions;
use crate::hfun::HFunctional;
use crate::minimize::{kkt_multipliers, MinimizerReport};
use crate::polytope::ConvexPolytope;
use crate::rootsys::{norm, root_label, RootSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeVerdict {
    Stable,
    SemistableBoundary,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeTest {
    pub verdict: KeVerdict,
    /// `b(0)`.
    pub barycenter: Vec<f64>,
    /// Coordinates of `b(0) − 2ρ` in the simple-root basis.
    pub coefficients: Vec<f64>,
    /// Component of `b(0) − 2ρ` off the root span.
    pub residual: f64,
    pub tol: f64,
}

/// Decides whether `b(0) − 2ρ` lies in the open cone spanned by the simple roots.
pub fn ke_test(rs: &RootSystem, p_plus: &ConvexPolytope, tol: f64) -> Result<KeTest> {
    let hf = HFunctional::new(rs, p_plus, ExpIntOptions::default())?;
    ke_test_with(&hf, tol)
}

pub fn ke_test_with(hf: &HFunctional, tol: f64) -> Result<KeTest> {
    let rs = hf.rs;
    let (b, _, _) = hf.barycenter_grad_hess(&vec![0.0; rs.dim])?;
    let all: Vec<usize> = (0..rs.rank).collect();
    let (coefficients, residual) = kkt_multipliers(rs, &b, &all)?;
    let verdict = if residual > tol || coefficients.iter().any(|&c| c < -tol) {
        KeVerdict::Unstable
    } else if coefficients.iter().all(|&c| c > tol) {
        KeVerdict::Stable
    } else {
        KeVerdict::SemistableBoundary
    };
    Ok(KeTest { verdict, barycenter: b, coefficients, residual, tol })
}

/// Symbolic description of the Lie algebra 𝔥₀ of the central fibre's generic stabilizer.
#[derive(Debug, Clone, PartialEq)]
pub struct H0Description {
    /// Dimension of the diagonal copy of `Λ₀^⊥ ⊂ 𝔱`.
    pub diagonal_dim: usize,
    /// The line through `(Λ₀, 0)`, absent when Λ₀ = 0.
    pub lambda_line: Option<Vec<f64>>,
    /// `(X_α, X_α)` and `(X_{−α}, X_{−α})` for Levi roots.
    pub paired: Vec<String>,
    /// `(0, X_α)` and `(X_{−α}, 0)` for the remaining positive roots.
    pub split: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralFibreReport {
    pub lambda0: Vec<f64>,
    pub active_simple_roots: Vec<usize>,
    /// Indices into `rs.positive_roots`.
    pub levi_positive_roots: Vec<usize>,
    /// Normals `α` of the inequalities `⟨α, y⟩ ≥ 0`, one per active simple root.
    pub valuation_cone: Vec<Vec<f64>>,
    pub horospherical: bool,
    /// Positive roots `α` contributing the pair `(α, −α)`.
    pub isotropy_character: Vec<usize>,
    pub h0: H0Description,
    pub aut_rank: usize,
    pub moment_polytope: ConvexPolytope,
}

impl CentralFibreReport {
    /// `|Φ₊| = |Φ_{L,+}| + |split pairs|`.
    pub fn counting_identity_holds(&self, rs: &RootSystem) -> bool {
        rs.positive_roots.len() == self.levi_positive_roots.len() + self.isotropy_character.len()
    }
}

pub fn active_walls(rs: &RootSystem, lambda0: &[f64], tol_wall: f64) -> Vec<usize> {
    let scale = 1.0 + norm(lambda0);
    (0..rs.rank).filter(|&i| rs.simple_pairing(i, lambda0).abs() <= tol_wall * scale).collect()
}

pub fn central_fibre_report(rs: &RootSystem, p_plus: &ConvexPolytope, min: &MinimizerReport) -> CentralFibreReport {
    let active = active_walls(rs, &min.lambda0, min.tol_wall);
    let in_levi = |coeffs: &[i64]| coeffs.iter().enumerate().all(|(i, &c)| c == 0 || active.contains(&i));
    let (levi, split): (Vec<usize>, Vec<usize>) = (0..rs.positive_roots.len()).partition(|&k| in_levi(&rs.positive_roots[k].coeffs));
    let lambda_zero = norm(&min.lambda0) <= min.tol_wall;
    let mut paired = Vec::new();
    for &k in &levi {
        let l = root_label(&rs.positive_roots[k].coeffs);
        paired.push(format!("(X_{l}, X_{l})"));
        paired.push(format!("(X_-{l}, X_-{l})"));
    }
    let mut split_vecs = Vec::new();
    for &k in &split {
        let l = root_label(&rs.positive_roots[k].coeffs);
        split_vecs.push(format!("(0, X_{l})"));
        split_vecs.push(format!("(X_-{l}, 0)"));
    }
    CentralFibreReport {
        lambda0: min.lambda0.clone(),
        valuation_cone: active.iter().map(|&i| rs.simple_roots[i].clone()).collect(),
        horospherical: levi.is_empty(),
        isotropy_character: split,
        h0: H0Description {
            diagonal_dim: if lambda_zero { rs.dim } else { rs.dim - 1 },
            lambda_line: (!lambda_zero).then(|| min.lambda0.clone()),
            paired,
            split: split_vecs,
        },
        aut_rank: rs.rank - active.len() + rs.central_dim(),
        levi_positive_roots: levi,
        active_simple_roots: active,
        moment_polytope: p_plus.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    KahlerEinstein,
    KRSolitonProduct,
    ModifiedKStable,
    ModifiedKSemistableOnly,
    Indeterminate,
}

impl VerdictKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KahlerEinstein => "KahlerEinstein",
            Self::KRSolitonProduct => "KRSolitonProduct",
            Self::ModifiedKStable => "ModifiedKStable",
            Self::ModifiedKSemistableOnly => "ModifiedKSemistableOnly",
            Self::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub kind: VerdictKind,
    pub multipliers: Vec<(usize, f64)>,
    pub residual: f64,
    pub flow_statement: Option<String>,
    pub notes: Vec<String>,
}

pub fn stability_verdict(rs: &RootSystem, min: &MinimizerReport, fibre: &CentralFibreReport) -> Result<StabilityVerdict> {
    if fibre.lambda0 != min.lambda0 || fibre.active_simple_roots != min.active_set {
        return Err(Error::InconsistentInputs("minimizer and central fibre report disagree on Λ₀ or I₀".into()));
    }
    let tol = min.tol_kkt;
    let mut notes = Vec::new();
    let lambda_zero = norm(&min.lambda0) <= min.tol_wall;
    let strict = min.multipliers.iter().all(|&(_, m)| m > tol);
    let kind = if min.kkt_residual > tol || min.multipliers.iter().any(|&(_, m)| m < -tol) {
        notes.push("stationarity or multiplier sign test failed at the reported tolerance".into());
        VerdictKind::Indeterminate
    } else if lambda_zero {
        if strict {
            VerdictKind::KahlerEinstein
        } else {
            notes.push("b(0) lies on the boundary of 2rho + cone; the polystable step is out of scope".into());
            VerdictKind::ModifiedKSemistableOnly
        }
    } else if fibre.active_simple_roots.len() == rs.rank {
        VerdictKind::KRSolitonProduct
    } else if strict {
        VerdictKind::ModifiedKStable
    } else {
        notes.push("a multiplier vanishes within tolerance; the polystable step is out of scope".into());
        VerdictKind::ModifiedKSemistableOnly
    };
    let flow_statement = match kind {
        VerdictKind::ModifiedKStable => Some(format!(
            "the Kahler-Ricci flow converges to (X0, Lambda0) with Lambda0 = {:?}",
            min.lambda0
        )),
        VerdictKind::KRSolitonProduct => Some("the optimal degeneration is a product test configuration".into()),
        VerdictKind::KahlerEinstein => Some("the Kahler-Ricci flow converges to a Kahler-Einstein metric on X".into()),
        _ => None,
    };
    Ok(StabilityVerdict { kind, multipliers: min.multipliers.clone(), residual: min.kkt_residual, flow_statement, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, q_frac};
    use crate::hfun::tests::{case1, so4};
    use crate::minimize::{minimize_h, MinimizeOptions};
    use crate::polytope::HalfSpace;
    use crate::rootsys::{build_root_system, RootSystemSpec};

    fn interval(hi: crate::exact::Q) -> (RootSystem, ConvexPolytope) {
        let rs = build_root_system(&RootSystemSpec::catalog("A1")).unwrap();
        let p = ConvexPolytope::from_halfspaces(1, vec![HalfSpace::new(vec![q(1)], hi), HalfSpace::new(vec![q(-1)], q(0))]).unwrap();
        (rs, p)
    }

    #[test]
    fn ke_examples() {
        let (rs, p) = interval(q(3));
        let t = ke_test(&rs, &p, 1e-8).unwrap();
        assert_eq!(t.verdict, KeVerdict::Stable);
        assert!((t.coefficients[0] - 0.125).abs() < 1e-12);
        let (rs, p) = interval(q_frac(8, 3));
        let t = ke_test(&rs, &p, 1e-8).unwrap();
        assert_eq!(t.verdict, KeVerdict::SemistableBoundary);
        assert!((t.barycenter[0] - 2.0).abs() < 1e-12);
        assert_eq!(ke_test(&so4(), &case1(), 1e-8).unwrap().verdict, KeVerdict::Unstable);
    }

    #[test]
    fn sl2_chain_is_kahler_einstein() {
        let (rs, p) = interval(q(3));
        let m = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap();
        let f = central_fibre_report(&rs, &p, &m);
        assert_eq!(f.active_simple_roots, vec![0]);
        assert!(!f.horospherical);
        assert_eq!(f.aut_rank, 0);
        assert!(f.counting_identity_holds(&rs));
        let v = stability_verdict(&rs, &m, &f).unwrap();
        assert_eq!(v.kind, VerdictKind::KahlerEinstein);
        let (rs, p) = interval(q_frac(8, 3));
        let m = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap();
        let f = central_fibre_report(&rs, &p, &m);
        assert_eq!(stability_verdict(&rs, &m, &f).unwrap().kind, VerdictKind::ModifiedKSemistableOnly);
    }

    #[test]
    fn case1_fibre_structure() {
        let rs = so4();
        let p = case1();
        let m = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap();
        let f = central_fibre_report(&rs, &p, &m);
        assert_eq!(f.active_simple_roots, vec![1]);
        assert_eq!(f.levi_positive_roots.len(), 1);
        assert_eq!(rs.positive_roots[f.levi_positive_roots[0]].coeffs, vec![0, 1]);
        assert_eq!(f.valuation_cone, vec![vec![1.0, 1.0]]);
        assert!(!f.horospherical);
        assert_eq!(f.aut_rank, 1);
        assert_eq!(f.h0.paired, vec!["(X_alpha2, X_alpha2)", "(X_-alpha2, X_-alpha2)"]);
        assert_eq!(f.h0.split, vec!["(0, X_alpha1)", "(X_-alpha1, 0)"]);
        assert!(f.counting_identity_holds(&rs));
        let v = stability_verdict(&rs, &m, &f).unwrap();
        assert_eq!(v.kind, VerdictKind::ModifiedKStable);
        assert!(v.flow_statement.is_some());
    }

    #[test]
    fn inconsistent_inputs() {
        let rs = so4();
        let p = case1();
        let m = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap();
        let mut f = central_fibre_report(&rs, &p, &m);
        f.lambda0[0] += 1.0;
        assert!(matches!(stability_verdict(&rs, &m, &f), Err(Error::InconsistentInputs(_))));
    }

    #[test]
    fn walls_are_stable_under_small_perturbation() {
        let rs = so4();
        let lam = [0.1, -0.1];
        let tol = 1e-7;
        assert_eq!(active_walls(&rs, &lam, tol), vec![1]);
        // 10·tol along α₁'s direction keeps ⟨α₂, Λ⟩ = 0
        let pert = [0.1 + 10.0 * tol / 2f64.sqrt(), -0.1 - 10.0 * tol / 2f64.sqrt()];
        assert_eq!(active_walls(&rs, &pert, tol), vec![1]);
    }
}
