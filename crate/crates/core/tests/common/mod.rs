#![allow(dead_code)]

use gcdeg::exact::{q_frac, Q};
use gcdeg::hfun::{PLConcave, PLPiece};
use gcdeg::polytope::{build_polytope, ConvexPolytope};
use gcdeg::presets::preset;
use gcdeg::rootsys::{build_root_system, RootSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn load(name: &str) -> (RootSystem, ConvexPolytope) {
    let i = preset(name).unwrap();
    let rs = build_root_system(&i.root_system).unwrap();
    let p = build_polytope(&i.polytope, &rs, false).unwrap();
    (rs, p)
}

fn dyadic(x: f64) -> Q {
    q_frac((x * 64.0).round() as i64, 64)
}

/// Concave PL functions on A1×A1 data with one to three pieces, dominant
/// slopes `a ϖ₁ + b ϖ₂` (a, b ∈ [0, 1]) and offsets in [−1/2, 1/2], all
/// multiples of 1/64 so that every table value is exact.
pub fn random_pl(rs: &RootSystem, n: usize, seed: u64) -> Vec<PLConcave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let k = rng.random_range(1..=3);
            let pieces = (0..k)
                .map(|_| {
                    let (a, b): (f64, f64) = (rng.random(), rng.random());
                    let lam: Vec<f64> = (0..rs.dim).map(|j| a * rs.fundamental_weights[0][j] + b * rs.fundamental_weights[1][j]).collect();
                    PLPiece { c: dyadic(rng.random_range(-0.5..0.5)), lambda: lam.into_iter().map(dyadic).collect() }
                })
                .collect();
            PLConcave::new(pieces, true).unwrap()
        })
        .collect()
}

/// Random dominant vectors `c₁ ϖ₁ + c₂ ϖ₂` with `c_i ∈ [lo, hi]`.
pub fn random_chamber(rs: &RootSystem, n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c: Vec<f64> = (0..rs.rank).map(|_| rng.random_range(lo..hi)).collect();
            (0..rs.dim).map(|j| (0..rs.rank).map(|i| c[i] * rs.fundamental_weights[i][j]).sum()).collect()
        })
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
