//! Symbolic monomial families, exact finite-κ and limit expectations, the
//! truncated moment matrix M^(2), the error split E = M^(1) − M^(2) and
//! factorization certificates for its pieces.

pub mod certify;
pub mod components;
pub mod family;
pub mod finite;
pub mod poly;

pub use certify::{component_certificate, e3_sparse_bound, factorization_norm_bound, Certificate, NormParams, Step};
pub use components::{error_components, error_polynomial, m2_matrix, ErrorComponents, M2_MAX_N};
pub use family::{
    limit_expectation, limit_polynomial, seed_families, set_expectation, set_polynomial,
    truncated_polynomial_families, MonomialFamily, Slot,
};
pub use finite::{finite_kappa_expectation, kappa_convergence_study, seed_polynomial_eval, ConvergenceStudy, KAPPA_MAX};
pub use poly::{Coef, Poly};
