//! Dense symmetric eigen-solvers (backed by faer) over nalgebra storage.

use faer::Side;
use nalgebra::{DMatrix, DVector};

fn view(m: &DMatrix<f64>) -> faer::MatRef<'_, f64> {
    faer::mat::from_column_major_slice::<f64>(m.as_slice(), m.nrows(), m.ncols())
}

/// Eigenvalues of a symmetric matrix in ascending order (lower triangle is read).
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    assert!(m.is_square());
    if m.nrows() == 0 {
        return Vec::new();
    }
    view(m).selfadjoint_eigenvalues(Side::Lower)
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (as columns).
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert!(m.is_square());
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = view(m).selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let vals = DVector::from_fn(n, |i, _| s.read(i));
    let vecs = DMatrix::from_fn(n, n, |i, j| u.read(i, j));
    (vals, vecs)
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(a), Some(b)) => a.abs().max(b.abs()),
        _ => 0.0,
    }
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_known_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let ev = sym_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let (vals, vecs) = sym_eigen(&m);
        let back = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((back - m).abs().max() < 1e-14);
    }
}
