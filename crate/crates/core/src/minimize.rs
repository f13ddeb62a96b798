//! Minimizing 𝓗 over the closed dominant cone.
//!
//! Every face `{⟨α_i, Λ⟩ = 0, i ∈ S}` of the cone gets its own Newton run on
//! the linear subspace it spans; a face is accepted when its stationary point
//! is feasible and the gradient `b(Λ) − 2ρ` is a nonnegative combination of the
//! `α_i`, `i ∈ S`. Strict convexity makes the accepted point unique, so the
//! smallest accepted face (lexicographic among equals) is reported.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::expint::ExpIntOptions;
use crate::hfun::HFunctional;
use crate::lp::{Cmp, LinearProgram};
use crate::polytope::ConvexPolytope;
use crate::rootsys::{dot, norm, RootSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Relative slack for declaring `⟨α_i, Λ⟩ = 0`.
    pub tol_wall: f64,
    pub tol_kkt: f64,
    /// Newton stops once the projected gradient is this small.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub expint: ExpIntOptions,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { tol_wall: 1e-7, tol_kkt: 1e-8, grad_tol: 1e-10, max_iter: 100, armijo: 1e-4, expint: ExpIntOptions::default() }
    }
}

/// Outcome of one Newton run on one face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceResult {
    pub face: Vec<usize>,
    pub lambda: Vec<f64>,
    pub h: f64,
    pub grad: Vec<f64>,
    pub projected_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `min_{j ∉ S} ⟨α_j, Λ⟩`, `+∞` when every root is active.
    pub min_inactive_pairing: f64,
    pub feasible: bool,
    pub multipliers: Vec<f64>,
    pub residual: f64,
    pub reduced_hessian_pd: bool,
}

impl FaceResult {
    pub fn accepted(&self, tol_kkt: f64) -> bool {
        self.converged && self.feasible && self.residual <= tol_kkt && self.multipliers.iter().all(|&m| m >= -tol_kkt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport {
    pub lambda0: Vec<f64>,
    /// `I₀`, recomputed from Λ₀ with the wall tolerance.
    pub active_set: Vec<usize>,
    /// The face whose Newton run produced Λ₀.
    pub accepted_face: Vec<usize>,
    pub grad_norm: f64,
    /// `(i, λ_i)` for `i ∈ I₀` with `b(Λ₀) − 2ρ = Σ λ_i α_i`.
    pub multipliers: Vec<(usize, f64)>,
    pub kkt_residual: f64,
    pub b_lambda0: Vec<f64>,
    pub h_min: f64,
    pub iterations: usize,
    pub face_visits: usize,
    pub reduced_hessian_pd: bool,
    /// Worst-case `min_d max_{y∈P₊} ⟨d, y − 2ρ⟩` over unit cone directions.
    pub coercivity_margin: f64,
    pub tol_wall: f64,
    pub tol_kkt: f64,
    pub faces: Vec<FaceResult>,
}

/// Least-squares multipliers for `b − 2ρ ≈ Σ_{i∈active} λ_i α_i` and the residual norm.
pub fn kkt_multipliers(rs: &RootSystem, b: &[f64], active: &[usize]) -> Result<(Vec<f64>, f64)> {
    let g: Vec<f64> = b.iter().zip(&rs.two_rho).map(|(x, r)| x - r).collect();
    multipliers_for_gradient(rs, &g, active)
}

fn multipliers_for_gradient(rs: &RootSystem, g: &[f64], active: &[usize]) -> Result<(Vec<f64>, f64)> {
    if active.is_empty() {
        return Ok((Vec::new(), norm(g)));
    }
    let k = active.len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&rs.simple_roots[active[i]], &rs.simple_roots[active[j]]));
    let rhs = DVector::from_fn(k, |i, _| dot(&rs.simple_roots[active[i]], g));
    let chol = gram.cholesky().ok_or(Error::DependentActiveRoots)?;
    let lam = chol.solve(&rhs);
    let mut r = g.to_vec();
    for (i, &a) in active.iter().enumerate() {
        for (x, s) in r.iter_mut().zip(&rs.simple_roots[a]) {
            *x -= lam[i] * s;
        }
    }
    Ok((lam.iter().copied().collect(), norm(&r)))
}

/// Orthonormal basis of `{Λ : ⟨α_i, Λ⟩ = 0, i ∈ face}`.
fn face_basis(rs: &RootSystem, face: &[usize]) -> Result<Vec<Vec<f64>>> {
    let d = rs.dim;
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let project_out = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for q in basis {
            let c = dot(v, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    };
    for &i in face {
        let mut v = rs.simple_roots[i].clone();
        project_out(&mut v, &ortho);
        let n = norm(&v);
        if n < 1e-10 {
            return Err(Error::DependentActiveRoots);
        }
        ortho.push(v.iter().map(|x| x / n).collect());
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        project_out(&mut v, &ortho);
        project_out(&mut v, &basis);
        // twice for stability
        project_out(&mut v, &ortho);
        project_out(&mut v, &basis);
        let n = norm(&v);
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
        if basis.len() + ortho.len() == d {
            break;
        }
    }
    Ok(basis)
}

fn embed(basis: &[Vec<f64>], x: &DVector<f64>, d: usize) -> Vec<f64> {
    let mut lam = vec![0.0; d];
    for (b, &c) in basis.iter().zip(x.iter()) {
        for (l, bi) in lam.iter_mut().zip(b) {
            *l += c * bi;
        }
    }
    lam
}

/// Damped Newton on one face, starting from the orthogonal projection of `start`.
pub fn newton_on_face(hf: &HFunctional, face: &[usize], start: &[f64], opts: &MinimizeOptions) -> Result<FaceResult> {
    let rs = hf.rs;
    let d = rs.dim;
    let basis = face_basis(rs, face)?;
    let m = basis.len();
    let mut x = DVector::from_fn(m, |i, _| dot(&basis[i], start));
    let mut iterations = 0;
    let mut converged = false;
    let (mut h, mut grad, mut hess) = hf.value_grad_hess(&embed(&basis, &x, d))?;
    let reduce = |grad: &[f64], hess: &DMatrix<f64>| {
        let g = DVector::from_fn(m, |i, _| dot(&basis[i], grad));
        let hr = DMatrix::from_fn(m, m, |i, j| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += basis[i][a] * hess[(a, b)] * basis[j][b];
                }
            }
            s
        });
        (g, hr)
    };
    let (mut g, mut hr) = reduce(&grad, &hess);
    while iterations < opts.max_iter {
        if g.norm() <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let step = match hr.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut next = &x + &step * t;
        // near the optimum h changes below its own rounding, so trust the full step
        if -slope > 1e-20 {
            let mut tries = 0;
            loop {
                let ht = hf.value_unrestricted(&embed(&basis, &next, d))?;
                if ht <= h + opts.armijo * t * slope || tries == 60 {
                    break;
                }
                t *= 0.5;
                tries += 1;
                next = &x + &step * t;
            }
        }
        x = next;
        (h, grad, hess) = hf.value_grad_hess(&embed(&basis, &x, d))?;
        (g, hr) = reduce(&grad, &hess);
    }
    if !converged && g.norm() <= opts.grad_tol {
        converged = true;
    }
    let lambda = embed(&basis, &x, d);
    let lnorm = norm(&lambda);
    let min_inactive = (0..rs.rank)
        .filter(|i| !face.contains(i))
        .map(|i| rs.simple_pairing(i, &lambda))
        .fold(f64::INFINITY, f64::min);
    let feasible = min_inactive >= -opts.tol_wall * (1.0 + lnorm);
    let (multipliers, residual) = multipliers_for_gradient(rs, &grad, face)?;
    let reduced_hessian_pd = m == 0 || hr.clone().cholesky().is_some();
    Ok(FaceResult {
        face: face.to_vec(),
        lambda,
        h,
        projected_grad_norm: g.norm(),
        grad,
        iterations,
        converged,
        min_inactive_pairing: min_inactive,
        feasible,
        multipliers,
        residual,
        reduced_hessian_pd,
    })
}

/// Orthonormal basis of the orthogonal complement of the root span.
pub fn central_basis(rs: &RootSystem) -> Vec<Vec<f64>> {
    face_basis(rs, &(0..rs.rank).collect::<Vec<_>>()).expect("simple roots are independent")
}

/// `min_d max_{v} ⟨d, v − 2ρ⟩` over cone directions `d = Σ c_i ϖ_i + Σ e_k z_k`
/// normalized by `Σ c_i + Σ |e_k| = 1`, together with the minimizing `d`.
pub fn coercivity_margin(rs: &RootSystem, p_plus: &ConvexPolytope) -> Result<(f64, Vec<f64>)> {
    let central = central_basis(rs);
    let gens: Vec<Vec<f64>> = rs
        .fundamental_weights
        .iter()
        .cloned()
        .chain(central.iter().cloned())
        .chain(central.iter().map(|z| z.iter().map(|x| -x).collect()))
        .collect();
    let nv = gens.len();
    // variables: coefficients (nonnegative) then t (free); minimize t
    let mut obj = vec![0.0; nv + 1];
    obj[nv] = 1.0;
    let mut lp = LinearProgram::new(obj).free_var(nv);
    for v in p_plus.vertices_f64() {
        let shifted: Vec<f64> = v.iter().zip(&rs.two_rho).map(|(a, b)| a - b).collect();
        let mut row: Vec<f64> = gens.iter().map(|g| dot(g, &shifted)).collect();
        row.push(-1.0);
        lp = lp.constraint(row, Cmp::Le, 0.0);
    }
    let mut norm_row = vec![1.0; nv];
    norm_row.push(0.0);
    lp = lp.constraint(norm_row, Cmp::Eq, 1.0);
    let sol = lp.solve()?;
    let mut d = vec![0.0; rs.dim];
    for (g, &c) in gens.iter().zip(&sol.x) {
        for (x, y) in d.iter_mut().zip(g) {
            *x += c * y;
        }
    }
    Ok((sol.objective, d))
}

/// Faces ordered by size, then lexicographically.
fn faces(rank: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..(1 << rank)).map(|mask| (0..rank).filter(|i| mask & (1 << i) != 0).collect()).collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

pub fn minimize_h(rs: &RootSystem, p_plus: &ConvexPolytope, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let hf = HFunctional::new(rs, p_plus, opts.expint)?;
    minimize_with(&hf, opts)
}

pub fn minimize_with(hf: &HFunctional, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let rs = hf.rs;
    let (margin, direction) = coercivity_margin(rs, hf.p_plus)?;
    if margin <= 1e-12 {
        return Err(Error::DivergentMinimizer { direction });
    }
    let all = faces(rs.rank);
    let zero = vec![0.0; rs.dim];
    let results = exec::try_map_indexed(all.len(), |i| newton_on_face(hf, &all[i], &zero, opts))?;
    let Some(best) = results.iter().find(|r| r.accepted(opts.tol_kkt)) else {
        let mut near: Vec<&FaceResult> = results.iter().filter(|r| r.converged).collect();
        near.sort_by(|a, b| {
            let score = |r: &FaceResult| r.residual + r.multipliers.iter().map(|m| (-m).max(0.0)).sum::<f64>() + (-r.min_inactive_pairing).max(0.0);
            score(a).total_cmp(&score(b))
        });
        let desc: Vec<String> = near
            .iter()
            .take(3)
            .map(|r| format!("face {:?}: lambda {:?}, multipliers {:?}, residual {:.3e}", r.face, r.lambda, r.multipliers, r.residual))
            .collect();
        return Err(Error::NoFaceAccepted(desc.join("; ")));
    };
    let lambda0 = best.lambda.clone();
    let lnorm = norm(&lambda0);
    let active_set: Vec<usize> =
        (0..rs.rank).filter(|&i| rs.simple_pairing(i, &lambda0).abs() <= opts.tol_wall * (1.0 + lnorm)).collect();
    let (mults, kkt_residual) = multipliers_for_gradient(rs, &best.grad, &active_set)?;
    let b_lambda0: Vec<f64> = best.grad.iter().zip(&rs.two_rho).map(|(g, r)| g + r).collect();
    Ok(MinimizerReport {
        lambda0,
        multipliers: active_set.iter().copied().zip(mults).collect(),
        active_set,
        accepted_face: best.face.clone(),
        grad_norm: best.projected_grad_norm,
        kkt_residual,
        b_lambda0,
        h_min: best.h,
        iterations: results.iter().map(|r| r.iterations).sum(),
        face_visits: results.len(),
        reduced_hessian_pd: best.reduced_hessian_pd,
        coercivity_margin: margin,
        tol_wall: opts.tol_wall,
        tol_kkt: opts.tol_kkt,
        faces: results,
    })
}
