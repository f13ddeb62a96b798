//! Named example inputs shipped with the command line tool.

use crate::cli::{AnalysisInput, AnalysisOptions};
use crate::error::{Error, Result};
use crate::exact::{q, q_frac, Q};
use crate::polytope::{HalfSpace, PolytopeInput};
use crate::rootsys::RootSystemSpec;

pub const PRESET_NAMES: [&str; 6] = ["so4-case1", "so4-case2", "so4-case1-ineqlist", "so4-case2-ineqlist", "sl2", "sl2-balanced"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "so4-case1" => "SO4 (A1xA1), P+ with vertices (0,0), (3,3), (3,0), (3/2,-3/2)",
        "so4-case2" => "SO4 (A1xA1), P+ with vertices (0,0), (3,3), (3,1), (2,-1), (3/2,-3/2)",
        "so4-case1-ineqlist" => "SO4 (A1xA1), P+ = {y > -x, x > y, x < 2, y > -2, x - y < 3}",
        "so4-case2-ineqlist" => "SO4 (A1xA1), the case-1 inequality list plus 2x - y < 5",
        "sl2" => "SL2 (A1), P+ = [0, 3]",
        "sl2-balanced" => "SL2 (A1), P+ = [0, 8/3], barycenter exactly at 2rho",
        _ => return None,
    })
}

fn pt(x: Q, y: Q) -> Vec<Q> {
    vec![x, y]
}

fn hs(a: i64, b: i64, c: i64) -> HalfSpace {
    HalfSpace::new(vec![q(a), q(b)], q(c))
}

fn case1_ineqs() -> Vec<HalfSpace> {
    vec![hs(-1, -1, 0), hs(-1, 1, 0), hs(1, 0, 2), hs(0, -1, 2), hs(1, -1, 3)]
}

pub fn preset(name: &str) -> Result<AnalysisInput> {
    let so4 = RootSystemSpec::catalog("A1xA1");
    let a1 = RootSystemSpec::catalog("A1");
    let (root_system, polytope) = match name {
        "so4-case1" => (so4, PolytopeInput::Vertices(vec![pt(q(0), q(0)), pt(q(3), q(3)), pt(q(3), q(0)), pt(q_frac(3, 2), q_frac(-3, 2))])),
        "so4-case2" => (
            so4,
            PolytopeInput::Vertices(vec![
                pt(q(0), q(0)),
                pt(q(3), q(3)),
                pt(q(3), q(1)),
                pt(q(2), q(-1)),
                pt(q_frac(3, 2), q_frac(-3, 2)),
            ]),
        ),
        "so4-case1-ineqlist" => (so4, PolytopeInput::Halfspaces(case1_ineqs())),
        "so4-case2-ineqlist" => {
            let mut h = case1_ineqs();
            h.push(hs(2, -1, 5));
            (so4, PolytopeInput::Halfspaces(h))
        }
        "sl2" => (a1, PolytopeInput::Halfspaces(vec![HalfSpace::new(vec![q(-1)], q(0)), HalfSpace::new(vec![q(1)], q(3))])),
        "sl2-balanced" => (
            a1,
            PolytopeInput::Halfspaces(vec![HalfSpace::new(vec![q(-1)], q(0)), HalfSpace::new(vec![q(1)], q_frac(8, 3))]),
        ),
        other => return Err(Error::Schema(format!("unknown preset `{other}`; known: {}", PRESET_NAMES.join(", ")))),
    };
    Ok(AnalysisInput { root_system, polytope, append_chamber: false, options: AnalysisOptions::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::build_polytope;
    use crate::rootsys::build_root_system;

    #[test]
    fn every_preset_builds() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            let rs = build_root_system(&p.root_system).unwrap();
            let poly = build_polytope(&p.polytope, &rs, false).unwrap();
            assert_eq!(poly.dim, rs.dim, "{name}");
            assert!(describe(name).is_some());
        }
        assert!(matches!(preset("so5"), Err(Error::Schema(_))));
    }

    #[test]
    fn ineqlist_vertices() {
        let p = preset("so4-case1-ineqlist").unwrap();
        let rs = build_root_system(&p.root_system).unwrap();
        let poly = build_polytope(&p.polytope, &rs, false).unwrap();
        // y > -2 is implied by the others
        assert_eq!(poly.vertices.len(), 4);
        assert!(poly.vertices.contains(&vec![q(2), q(-1)]));
        assert!(poly.vertices.contains(&vec![q(2), q(2)]));
        assert!(poly.vertices.contains(&vec![q_frac(3, 2), q_frac(-3, 2)]));
    }
}
