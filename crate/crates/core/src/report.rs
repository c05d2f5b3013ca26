//! Run summaries shared by the command line tool and the acceptance suite.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instances::RegularGraph;
use crate::lift::{objective_lower_bound, LiftedSolution};
use crate::linalg;
use crate::moments::objective_deg2;

/// Best known Sherrington–Kirkpatrick value per n^{3/2}, display only.
pub const P_STAR: f64 = 0.763166;

/// 2√(d−1)/d, display only.
pub fn ramanujan_ratio(d: usize) -> f64 {
    let df = d as f64;
    2.0 * (df - 1.0).sqrt() / df
}

/// Objective before and after a lift, with the guaranteed lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    pub objective_deg2: f64,
    pub objective_deg4: f64,
    pub lower_bound: f64,
    /// objective_deg4 ≥ lower_bound − tol·max(1, |lower_bound|).
    pub bound_holds: bool,
    pub tol: f64,
}

pub fn objective_summary(a: &DMatrix<f64>, lifted: &LiftedSolution, tol: f64) -> Result<ObjectiveSummary> {
    let objective_deg2 = objective_deg2(a, &lifted.x)?;
    let objective_deg4 = lifted.objective_deg4(a)?;
    let lower_bound = objective_lower_bound(a, &lifted.x, &lifted.params)?;
    Ok(ObjectiveSummary {
        objective_deg2,
        objective_deg4,
        lower_bound,
        bound_holds: objective_deg4 >= lower_bound - tol * lower_bound.abs().max(1.0),
        tol,
    })
}

/// MaxCut view of a lifted solution for a d-regular graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub lambda_2: f64,
    pub alpha: f64,
    pub eta: f64,
    /// ⟨−A, ·⟩ for the degree-2 seed and the lifted singleton block.
    pub objective: ObjectiveSummary,
    pub cut_fraction_deg2: f64,
    pub cut_fraction_deg4: f64,
    /// ((1−2ε) − (LB/(2nd))·d/√(d−1))/α, absent when α = 0.
    pub c_report: Option<f64>,
    /// 1/2 + (√(d−1)/d)·(1 − 2ε − α·c_report).
    pub cut_fraction_bound: f64,
    pub ramanujan_ratio: f64,
}

pub fn cut_summary(g: &RegularGraph, lifted: &LiftedSolution, epsilon: f64, tol: f64) -> Result<CutSummary> {
    let (n, d) = (g.n, g.d);
    let a = g.adjacency();
    let ev = linalg::sym_eigenvalues(&a);
    let lambda_2 = if ev.len() >= 2 { ev[ev.len() - 2] } else { 0.0 };
    let objective = objective_summary(&(-&a), lifted, tol)?;
    let edges2 = 2.0 * (n * d) as f64;
    let df = d as f64;
    let root = (df - 1.0).sqrt();
    let alpha = lifted.params.alpha;
    let c_report =
        (alpha > 0.0).then(|| ((1.0 - 2.0 * epsilon) - objective.lower_bound / edges2 * df / root) / alpha);
    let cut_fraction_bound = 0.5 + root / df * (1.0 - 2.0 * epsilon - c_report.map_or(0.0, |c| alpha * c));
    Ok(CutSummary {
        n,
        d,
        epsilon,
        lambda_2,
        alpha,
        eta: lifted.params.eta,
        cut_fraction_deg2: 0.5 + objective.objective_deg2 / edges2,
        cut_fraction_deg4: 0.5 + objective.objective_deg4 / edges2,
        objective,
        c_report,
        cut_fraction_bound,
        ramanujan_ratio: ramanujan_ratio(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::sample_regular_graph;
    use crate::lift::{lift_implicit, Mode};
    use crate::seeds::seed_maxcut;

    #[test]
    fn ratio_values() {
        assert_eq!(ramanujan_ratio(2), 1.0);
        assert!((ramanujan_ratio(3) - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cut_bound_matches_lower_bound() {
        let g = sample_regular_graph(40, 3, 5).unwrap();
        let (x, _) = seed_maxcut(&g, 0.3).unwrap();
        let lifted = lift_implicit(&x, Mode::Certified).unwrap();
        let s = cut_summary(&g, &lifted, 0.3, 1e-6).unwrap();
        assert!(s.objective.bound_holds);
        if s.alpha > 0.0 {
            let lb = 0.5 + s.objective.lower_bound / (2.0 * 40.0 * 3.0);
            assert!((s.cut_fraction_bound - lb).abs() < 1e-12);
            assert!(s.cut_fraction_deg4 >= s.cut_fraction_bound - 1e-9);
        } else {
            assert_eq!(s.c_report, None);
        }
    }
}
