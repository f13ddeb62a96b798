//! End-to-end runs of the analysis pipeline and the command line binary,
//! cross-checked against the brute-force oracles.

mod common;

use std::process::Command;

use gcdeg::cli::{run_analyze, AnalysisInput};
use gcdeg::degeneration::VerdictKind;
use gcdeg::expint::ExpIntOptions;
use gcdeg::hfun::{HFunctional, PLConcave};
use gcdeg::minimize::{minimize_h, MinimizeOptions};
use gcdeg::oracle::{grid_minimize, mc_integrate, McConfig};
use gcdeg::polytope::{lattice_points, standard_lattice};
use gcdeg::presets::preset;
use gcdeg::testconfig::approximate_p;
use serde_json::Value;

use common::load;

fn gcdeg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gcdeg")).args(args).output().unwrap()
}

fn json(out: &[u8]) -> Value {
    serde_json::from_slice(out).unwrap()
}

#[test]
fn report_has_stable_fields() {
    let out = gcdeg(&["example", "so4-case1"]);
    assert!(out.status.success());
    let v = json(&out.stdout);
    for key in ["active_roots", "levi_roots", "valuation_cone", "horospherical", "isotropy_character", "h0", "aut_rank", "verdict", "multipliers"] {
        assert!(v["degeneration"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["degeneration"]["active_roots"], serde_json::json!(["alpha2"]));
    assert_eq!(v["degeneration"]["levi_roots"], serde_json::json!(["alpha2"]));
    assert_eq!(v["degeneration"]["aut_rank"], 1);
    assert_eq!(v["degeneration"]["counting_identity"], true);
    assert_eq!(v["ke_test"]["verdict"], "Unstable");
    assert_eq!(v["h"]["at_zero"]["h"], "0");
}

#[test]
fn case2_report_is_self_consistent() {
    let v = json(&gcdeg(&["example", "so4-case2"]).stdout);
    let d = &v["degeneration"];
    // the fibre is horospherical exactly when no wall is active
    assert_eq!(d["horospherical"].as_bool().unwrap(), d["active_roots"].as_array().unwrap().is_empty());
    assert_eq!(d["verdict"], "ModifiedKStable");
}

#[test]
fn input_file_and_exit_codes() {
    let dir = std::env::temp_dir().join(format!("gcdeg-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("sl2.json");
    std::fs::write(&good, r#"{"root_system": {"catalog": "A1"}, "polytope": {"inequalities": [{"normal": [1], "offset": 3}, {"normal": [-1], "offset": 0}]}}"#).unwrap();
    let out = gcdeg(&["analyze", "--input", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["degeneration"]["verdict"], "KahlerEinstein");

    let bad = dir.join("bad.json");
    std::fs::write(&bad, "[1, 2").unwrap();
    let out = gcdeg(&["analyze", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"]["stage"], "input");

    let unbounded = dir.join("unbounded.json");
    std::fs::write(&unbounded, r#"{"root_system": {"catalog": "A1"}, "polytope": {"inequalities": [{"normal": [-1], "offset": 0}]}}"#).unwrap();
    assert_eq!(gcdeg(&["analyze", "--input", unbounded.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(gcdeg(&["example", "so4-case2-ineqlist"]).status.code(), Some(4));
    assert_eq!(gcdeg(&["bogus"]).status.code(), Some(2));
}

#[test]
fn text_mirrors_json() {
    let j = json(&gcdeg(&["h-eval", "--lambda", "0.1,-0.1"]).stdout);
    let t = String::from_utf8(gcdeg(&["h-eval", "--lambda", "0.1,-0.1", "--format", "text"]).stdout).unwrap();
    assert!(t.contains(&format!("h: {}", j["result"]["h"].as_str().unwrap())));
    assert!(t.contains(&format!("s_na: {}", j["result"]["s_na"].as_str().unwrap())));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = gcdeg(&["example", "so4-case1", "--mc-check", "20000", "--seed", "9"]);
    let b = gcdeg(&["example", "so4-case1", "--mc-check", "20000", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a.stdout);
    assert_eq!(v["oracle"]["samples"], 20000);
}

#[test]
fn analyze_mc_check_block() {
    let mut input: AnalysisInput = preset("so4-case1").unwrap();
    input.options.mc_check = Some(2_000_000);
    input.options.seed = 4;
    let r = run_analyze(&input).unwrap();
    let mc = r.mc.unwrap();
    assert!(mc.passed(), "{mc:?}");
}

#[test]
fn h_matches_monte_carlo() {
    let (rs, p) = load("so4-case1");
    let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
    let pi = rs.dh_density();
    for lam in [[0.152108, -0.152108], [0.0956930604914678, -0.0956930604914678]] {
        let h = hf.h_vector(&lam).unwrap().h;
        let z = mc_integrate(&p, |y| (lam[0] * y[0] + lam[1] * y[1]).exp() * pi.eval(y), &McConfig::new(10_000_000, 17)).unwrap();
        let v = mc_integrate(&p, |y| pi.eval(y), &McConfig::new(10_000_000, 17)).unwrap();
        // same draws for both, so the ratio error is dominated by z's
        let h_mc = z.estimate.ln() - (lam[0] * rs.two_rho[0] + lam[1] * rs.two_rho[1]) - v.estimate.ln();
        let sigma = z.std_error / z.estimate + v.std_error / v.estimate;
        assert!((h - h_mc).abs() <= 3.0 * sigma, "h = {h}, MC = {h_mc} ± {sigma}");
    }
}

#[test]
fn grid_argmin_agrees_with_minimizer() {
    let cases: [(&str, Vec<(f64, f64)>, usize); 3] = [
        ("so4-case1", vec![(0.0, 0.5), (0.0, 0.5)], 200),
        ("so4-case2", vec![(0.0, 3.0), (0.0, 0.5)], 120),
        ("sl2", vec![(0.0, 1.0)], 200),
    ];
    for (name, bx, steps) in cases {
        let (rs, p) = load(name);
        let hf = HFunctional::new(&rs, &p, ExpIntOptions::default()).unwrap();
        let g = grid_minimize(&hf, &bx, steps).unwrap();
        let m = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap();
        assert!(g.certified, "{name}: {g:?}");
        let cell: f64 = g.spacing.iter().map(|h| h * h).sum::<f64>().sqrt();
        let dist: f64 = g.lambda.iter().zip(&m.lambda0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(dist <= cell, "{name}: grid {:?} vs minimizer {:?}", g.lambda, m.lambda0);
        assert!(g.value >= m.h_min - 1e-12);
        if name == "so4-case1" {
            assert!(dist <= 5e-3);
        }
    }
}

#[test]
fn lattice_points_match_brute_force_scan() {
    let (_, p) = load("so4-case1");
    for k in 1..=3u32 {
        let pts = lattice_points(&p, k, &standard_lattice(2)).unwrap();
        let kp = p.dilate(k);
        let mut scan = Vec::new();
        for x in -10i64..=10 {
            for y in -10i64..=10 {
                let v = vec![gcdeg::exact::q(x), gcdeg::exact::q(y)];
                if kp.contains(&v) {
                    scan.push(v);
                }
            }
        }
        let mut a = pts.clone();
        a.sort();
        scan.sort();
        assert_eq!(a, scan, "k = {k}");
    }
}

#[test]
fn approximation_with_optimal_piece() {
    let (rs, p) = load("so4-case1");
    let lam = minimize_h(&rs, &p, &MinimizeOptions::default()).unwrap().lambda0;
    let f = PLConcave::from_f64(&[(0.0, lam)]).unwrap();
    let a = approximate_p(&p, &f, 10, Some(8)).unwrap();
    assert!(a.min_gap >= -1e-9 && a.max_gap <= 0.1 + 1e-9, "{} {}", a.min_gap, a.max_gap);
}

#[test]
fn sl2_chain_verdicts() {
    let r = run_analyze(&preset("sl2").unwrap()).unwrap();
    assert_eq!(r.verdict.kind, VerdictKind::KahlerEinstein);
    let r = run_analyze(&preset("sl2-balanced").unwrap()).unwrap();
    assert_eq!(r.verdict.kind, VerdictKind::ModifiedKSemistableOnly);
    assert!(r.minimizer.lambda0[0].abs() <= 1e-7);
}
