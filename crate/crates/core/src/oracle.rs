//! Brute-force cross-checks: Monte Carlo integration over a polytope and
//! exhaustive grid minimization of 𝓗.
//!
//! Sampling is split into fixed-size chunks; chunk `c` draws from a ChaCha8
//! stream selected by `c`, so estimates depend on the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, KahanSum};
use crate::hfun::HFunctional;
use crate::minimize::central_basis;
use crate::polytope::ConvexPolytope;

pub const MIN_SAMPLES: u64 = 10_000;
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Per-axis sampling intervals; `None` uses the polytope's bounding box.
    pub bounding_box: Option<Vec<(f64, f64)>>,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, bounding_box: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub accepted: u64,
    pub samples: u64,
}

impl McEstimate {
    /// `|estimate − value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value).abs() / self.std_error.max(f64::MIN_POSITIVE)
    }
}

struct ChunkSums {
    sum: KahanSum,
    sum_sq: KahanSum,
    accepted: u64,
    /// Acceptances among the first [`MIN_SAMPLES`] draws of the chunk.
    early: u64,
}

/// Rejection-sampling estimate of `∫_P g` with its standard error.
pub fn mc_integrate<G>(p: &ConvexPolytope, integrand: G, cfg: &McConfig) -> Result<McEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync + Send,
{
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::Schema(format!("Monte Carlo needs at least {MIN_SAMPLES} samples, got {}", cfg.samples)));
    }
    let bbox = cfg.bounding_box.clone().unwrap_or_else(|| p.bounding_box());
    if bbox.len() != p.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, got: bbox.len() });
    }
    for v in p.vertices_f64() {
        if v.iter().zip(&bbox).any(|(x, (lo, hi))| x < lo || x > hi) {
            return Err(Error::InconsistentInputs("sampling box does not contain the polytope".into()));
        }
    }
    let normals: Vec<(Vec<f64>, f64)> = p.facets().map(|h| (h.normal_f64(), h.offset_f64())).collect();
    let inside = |y: &[f64]| normals.iter().all(|(a, b)| a.iter().zip(y).map(|(x, z)| x * z).sum::<f64>() <= *b);

    let chunks = cfg.samples.div_ceil(CHUNK);
    let sums = exec::map_indexed(chunks as usize, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let n = CHUNK.min(cfg.samples - c as u64 * CHUNK);
        let mut s = ChunkSums { sum: KahanSum::default(), sum_sq: KahanSum::default(), accepted: 0, early: 0 };
        let mut y = vec![0.0; bbox.len()];
        for i in 0..n {
            for (yi, (lo, hi)) in y.iter_mut().zip(&bbox) {
                *yi = lo + (hi - lo) * rng.random::<f64>();
            }
            if inside(&y) {
                let g = integrand(&y);
                s.sum.add(g);
                s.sum_sq.add(g * g);
                s.accepted += 1;
                if i < MIN_SAMPLES {
                    s.early += 1;
                }
            }
        }
        s
    });
    if sums[0].early == 0 {
        return Err(Error::BoxTooTight(MIN_SAMPLES));
    }
    let (mut sum, mut sum_sq, mut accepted) = (KahanSum::default(), KahanSum::default(), 0);
    for s in &sums {
        sum.add(s.sum.value());
        sum_sq.add(s.sum_sq.value());
        accepted += s.accepted;
    }
    let vol: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let n = cfg.samples as f64;
    let mean = sum.value() / n;
    let var = (sum_sq.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { estimate: vol * mean, std_error: vol * (var / n).sqrt(), accepted, samples: cfg.samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    /// Minimizer in ambient coordinates.
    pub lambda: Vec<f64>,
    /// Minimizer in box coordinates (fundamental weights, then central basis).
    pub coords: Vec<f64>,
    pub value: f64,
    pub spacing: Vec<f64>,
    /// Argmin of the 2× refined grid around the coarse argmin.
    pub refined_coords: Vec<f64>,
    /// Whether refinement moved the argmin by less than one coarse cell on every axis.
    pub certified: bool,
}

/// Exhaustive evaluation of `𝓗` on a `(steps + 1)^n` grid over `box_`, given in
/// fundamental-weight coordinates followed by central coordinates.
pub fn grid_minimize(hf: &HFunctional, box_: &[(f64, f64)], steps: usize) -> Result<GridMinimum> {
    let rs = hf.rs;
    let n = rs.rank + rs.central_dim();
    if box_.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: box_.len() });
    }
    if steps == 0 {
        return Err(Error::Schema("grid needs at least one step".into()));
    }
    if let Some(&(lo, _)) = box_[..rs.rank].iter().find(|(lo, _)| *lo < 0.0) {
        return Err(Error::NotDominant(vec![lo]));
    }
    let mut gens = rs.fundamental_weights.clone();
    gens.extend(central_basis(rs));
    let to_ambient = |x: &[f64]| {
        let mut lam = vec![0.0; rs.dim];
        for (g, c) in gens.iter().zip(x) {
            for (l, gi) in lam.iter_mut().zip(g) {
                *l += c * gi;
            }
        }
        lam
    };

    let spacing: Vec<f64> = box_.iter().map(|(lo, hi)| (hi - lo) / steps as f64).collect();
    let coarse = scan(hf, &to_ambient, box_, steps)?;

    // 2× refinement over ±2 coarse cells, clipped to the box
    let local: Vec<(f64, f64)> = coarse
        .0
        .iter()
        .zip(box_)
        .zip(&spacing)
        .map(|((x, (lo, hi)), h)| ((x - 2.0 * h).max(*lo), (x + 2.0 * h).min(*hi)))
        .collect();
    let fine_steps: Vec<usize> = local.iter().zip(&spacing).map(|((lo, hi), h)| ((hi - lo) / (0.5 * h)).round() as usize).collect();
    let fine = scan_steps(hf, &to_ambient, &local, &fine_steps)?;
    let certified = coarse.0.iter().zip(&fine.0).zip(&spacing).all(|((a, b), h)| (a - b).abs() < h * (1.0 + 1e-9));

    Ok(GridMinimum { lambda: to_ambient(&coarse.0), coords: coarse.0, value: coarse.1, spacing, refined_coords: fine.0, certified })
}

type ToAmbient<'a> = dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a;

fn scan(hf: &HFunctional, to_ambient: &ToAmbient, box_: &[(f64, f64)], steps: usize) -> Result<(Vec<f64>, f64)> {
    scan_steps(hf, to_ambient, box_, &vec![steps; box_.len()])
}

/// Argmin over the grid; ties resolve to the first point in odometer order.
fn scan_steps(hf: &HFunctional, to_ambient: &ToAmbient, box_: &[(f64, f64)], steps: &[usize]) -> Result<(Vec<f64>, f64)> {
    let total: usize = steps.iter().map(|s| s + 1).product();
    let point = |mut idx: usize| -> Vec<f64> {
        box_.iter()
            .zip(steps)
            .map(|((lo, hi), &s)| {
                let i = idx % (s + 1);
                idx /= s + 1;
                if s == 0 {
                    *lo
                } else {
                    lo + (hi - lo) * i as f64 / s as f64
                }
            })
            .collect()
    };
    let values = exec::try_map_indexed(total, |i| hf.value_unrestricted(&to_ambient(&point(i))))?;
    let (best, v) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    Ok((point(best), v))
}
