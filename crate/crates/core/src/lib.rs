//! Lifting degree-2 SoS solutions for Boolean quadratic problems to degree-4
//! pseudomoment matrices, with the instance families and seeds used to
//! exercise the lift.

pub mod error;
pub mod glyph;
pub mod instances;
pub mod json;
pub mod lift;
pub mod linalg;
pub mod moments;
pub mod pseudocal;
pub mod report;
pub mod seeds;

pub use error::{Error, Result};
pub use lift::{
    cholesky_rows, lift, lift_implicit, lift_m1, objective_lower_bound, solution_params, CholeskyRows,
    LiftReport, LiftedSolution, Mode, SolutionParams,
};
pub use moments::{
    check_sos2_feasible, check_sos4_feasible, objective_deg2, objective_deg4, Degree2Solution,
    Degree4MomentMatrix, MomentIndexMap, Subset,
};
pub use instances::{GoeInstance, RegularGraph, SubspaceInstance};
pub use seeds::{BvsReport, MaxCutReport, SkReport};
