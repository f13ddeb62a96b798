//! A small dense two-phase simplex solver (Bland's rule) for the handful of
//! low-dimensional linear programs the crate needs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Minimize `objective · x` subject to the constraints; variables are
/// nonnegative unless flagged free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<(Vec<f64>, Cmp, f64)>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const EPS: f64 = 1e-11;

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, constraints: Vec::new(), free: vec![false; n] }
    }

    pub fn constraint(mut self, row: Vec<f64>, cmp: Cmp, rhs: f64) -> Self {
        self.constraints.push((row, cmp, rhs));
        self
    }

    pub fn free_var(mut self, i: usize) -> Self {
        self.free[i] = true;
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        // column layout: original (free ones split into ±), slacks, artificials
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
        let mut ncols = 0;
        for &f in &self.free {
            if f {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                col_of.push((ncols, None));
                ncols += 1;
            }
        }
        let m = self.constraints.len();
        let n_slack = self.constraints.iter().filter(|c| c.1 != Cmp::Eq).count();
        let art0 = ncols + n_slack;
        let width = art0 + m + 1;
        let mut t = vec![vec![0.0; width]; m];
        let mut basis = vec![0usize; m];
        let mut slack = ncols;
        for (r, (row, cmp, rhs)) in self.constraints.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LinearProgram(format!("row {r} has {} entries, expected {n}", row.len())));
            }
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            for (j, &a) in row.iter().enumerate() {
                let (p, q) = col_of[j];
                t[r][p] += sign * a;
                if let Some(q) = q {
                    t[r][q] -= sign * a;
                }
            }
            match cmp {
                Cmp::Le => {
                    t[r][slack] = sign;
                    slack += 1;
                }
                Cmp::Ge => {
                    t[r][slack] = -sign;
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            t[r][art0 + r] = 1.0;
            t[r][width - 1] = sign * rhs;
            basis[r] = art0 + r;
        }

        // phase 1: minimize the artificial sum
        let mut cost1 = vec![0.0; width - 1];
        for c in cost1.iter_mut().skip(art0) {
            *c = 1.0;
        }
        run_simplex(&mut t, &mut basis, &cost1, width - 1)?;
        let infeas: f64 = basis.iter().enumerate().filter(|(_, &b)| b >= art0).map(|(r, _)| t[r][width - 1]).sum();
        if infeas > 1e-9 {
            return Err(Error::LinearProgram("infeasible".into()));
        }
        // pivot remaining (zero-level) artificials out where possible
        let mut r = 0;
        while r < t.len() {
            if basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&c| t[r][c].abs() > EPS) {
                    pivot(&mut t, &mut basis, r, c);
                } else {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }

        // phase 2 over the non-artificial columns
        let mut cost2 = vec![0.0; art0];
        for (j, &c) in self.objective.iter().enumerate() {
            let (p, q) = col_of[j];
            cost2[p] = c;
            if let Some(q) = q {
                cost2[q] = -c;
            }
        }
        run_simplex(&mut t, &mut basis, &cost2, art0)?;
        let mut xs = vec![0.0; width - 1];
        for (r, &b) in basis.iter().enumerate() {
            xs[b] = t[r][width - 1];
        }
        let x: Vec<f64> = col_of.iter().map(|&(p, q)| xs[p] - q.map_or(0.0, |q| xs[q])).collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let inv = 1.0 / t[r][c];
    for x in t[r].iter_mut() {
        *x *= inv;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && row[c] != 0.0 {
            let f = row[c];
            for (x, p) in row.iter_mut().zip(&prow) {
                *x -= f * p;
            }
        }
    }
    basis[r] = c;
}

/// Minimizes `cost` using columns `< allowed`; the tableau holds `B⁻¹[A | b]`.
fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> Result<()> {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    for _ in 0..10_000 {
        // reduced costs c_j − c_B B⁻¹ A_j
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: f64 = basis.iter().enumerate().map(|(r, &b)| cost.get(b).copied().unwrap_or(0.0) * t[r][j]).sum();
            cost[j] - z < -EPS
        });
        let Some(c) = entering else {
            return Ok(());
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[c] > EPS {
                let ratio = row[rhs] / row[c];
                let better = match best {
                    None => true,
                    Some((br, _, bb)) => ratio < br - EPS || (ratio <= br + EPS && basis[r] < bb),
                };
                if better {
                    best = Some((ratio, r, basis[r]));
                }
            }
        }
        let Some((_, r, _)) = best else {
            return Err(Error::LinearProgram("unbounded".into()));
        };
        pivot(t, basis, r, c);
    }
    Err(Error::LinearProgram("iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let s = LinearProgram::new(vec![-3.0, -5.0])
            .constraint(vec![1.0, 0.0], Cmp::Le, 4.0)
            .constraint(vec![0.0, 2.0], Cmp::Le, 12.0)
            .constraint(vec![3.0, 2.0], Cmp::Le, 18.0)
            .solve()
            .unwrap();
        assert!((s.objective + 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min t s.t. t ≥ x − 3, t ≥ −x + 1, x = 0.5, t free → t = 0.5
        let s = LinearProgram::new(vec![0.0, 1.0])
            .free_var(0)
            .free_var(1)
            .constraint(vec![-1.0, 1.0], Cmp::Ge, -3.0)
            .constraint(vec![1.0, 1.0], Cmp::Ge, 1.0)
            .constraint(vec![1.0, 0.0], Cmp::Eq, 0.5)
            .solve()
            .unwrap();
        assert!((s.objective - 0.5).abs() < 1e-12);
        let neg = LinearProgram::new(vec![1.0]).free_var(0).constraint(vec![1.0], Cmp::Ge, -2.0).solve().unwrap();
        assert!((neg.x[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = LinearProgram::new(vec![1.0]).constraint(vec![1.0], Cmp::Le, -1.0).solve();
        assert_eq!(inf, Err(Error::LinearProgram("infeasible".into())));
        let unb = LinearProgram::new(vec![-1.0]).constraint(vec![1.0], Cmp::Ge, 1.0).solve();
        assert_eq!(unb, Err(Error::LinearProgram("unbounded".into())));
    }

    #[test]
    fn redundant_equalities() {
        let s = LinearProgram::new(vec![1.0, 1.0])
            .constraint(vec![1.0, 1.0], Cmp::Eq, 2.0)
            .constraint(vec![2.0, 2.0], Cmp::Eq, 4.0)
            .solve()
            .unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }
}
