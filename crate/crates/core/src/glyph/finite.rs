//! Exact expectations at finite κ by enumerating z ∈ {±1}^κ.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::CholeskyRows;

/// Largest κ accepted by the enumeration oracle.
pub const KAPPA_MAX: usize = 20;

const CHUNK_BITS: usize = 12;

/// q(z) = Σ_j r_j z_j − 2·Σ_{j1<j2<j3} r_j1 r_j2 r_j3 z_j1 z_j2 z_j3.
///
/// The cubic sum is e₃ of y_j = r_j z_j, via power sums.
pub fn seed_polynomial_eval(row: &[f64], z: &[f64]) -> Result<f64> {
    if row.len() != z.len() {
        return Err(Error::Dimension {
            expected: row.len(),
            got: z.len(),
        });
    }
    let (mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0);
    for (r, s) in row.iter().zip(z) {
        let y = r * s;
        p1 += y;
        p2 += y * y;
        p3 += y * y * y;
    }
    let e3 = (p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0;
    Ok(p1 - 2.0 * e3)
}

fn is_prime(q: usize) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

/// A ±1 Hadamard matrix of order κ: Sylvester for powers of 2, Paley I when
/// κ − 1 is a prime ≡ 3 (mod 4).
pub(crate) fn oracle_hadamard(kappa: usize) -> Result<DMatrix<f64>> {
    if kappa.is_power_of_two() {
        let mut h = DMatrix::from_element(1, 1, 1.0);
        while h.nrows() < kappa {
            let k = h.nrows();
            let mut next = DMatrix::zeros(2 * k, 2 * k);
            for i in 0..k {
                for j in 0..k {
                    let v = h[(i, j)];
                    next[(i, j)] = v;
                    next[(i, j + k)] = v;
                    next[(i + k, j)] = v;
                    next[(i + k, j + k)] = -v;
                }
            }
            h = next;
        }
        return Ok(h);
    }
    let q = kappa.wrapping_sub(1);
    if kappa >= 4 && q % 4 == 3 && is_prime(q) {
        let mut residue = vec![false; q];
        for x in 1..q {
            residue[x * x % q] = true;
        }
        let chi = |a: usize| -> f64 {
            if a == 0 {
                0.0
            } else if residue[a] {
                1.0
            } else {
                -1.0
            }
        };
        let mut h = DMatrix::identity(kappa, kappa);
        for j in 1..kappa {
            h[(0, j)] += 1.0;
            h[(j, 0)] -= 1.0;
        }
        for i in 0..q {
            for j in 0..q {
                h[(i + 1, j + 1)] += chi((j + q - i) % q);
            }
        }
        return Ok(h);
    }
    Err(Error::Param(format!("no Hadamard matrix of order {kappa} available")))
}

/// Rows M_κ = M·H_κ^{≤r}/√κ for the labels in `labels`.
fn kappa_rows(rows: &CholeskyRows, labels: &[usize], kappa: usize) -> Result<Vec<Vec<f64>>> {
    if kappa > KAPPA_MAX {
        return Err(Error::Ceiling {
            what: "kappa for exact enumeration",
            value: kappa,
            limit: KAPPA_MAX,
        });
    }
    if kappa < rows.rank {
        return Err(Error::Param(format!(
            "kappa {kappa} is smaller than the factor rank {}",
            rows.rank
        )));
    }
    let h = oracle_hadamard(kappa)?;
    let scale = 1.0 / (kappa as f64).sqrt();
    labels
        .iter()
        .map(|&u| {
            if u >= rows.n {
                return Err(Error::IndexOutOfRange { index: u, len: rows.n });
            }
            Ok((0..kappa)
                .map(|a| (0..rows.rank).map(|r| rows.rows[(u, r)] * h[(r, a)]).sum::<f64>() * scale)
                .collect())
        })
        .collect()
}

/// E_z[∏_{u ∈ S} q_{u,κ}(z)] for a multiset S, by full enumeration.
pub fn finite_kappa_expectation(rows: &CholeskyRows, s: &[usize], kappa: usize) -> Result<f64> {
    let mk = kappa_rows(rows, s, kappa)?;
    if s.is_empty() {
        return Ok(1.0);
    }
    let total: u64 = 1 << kappa;
    let chunk: u64 = 1 << CHUNK_BITS.min(kappa);
    let chunks = total / chunk;
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut z = vec![0.0; kappa];
            let mut acc = 0.0;
            for idx in c * chunk..(c + 1) * chunk {
                for (b, zb) in z.iter_mut().enumerate() {
                    *zb = if idx >> b & 1 == 1 { -1.0 } else { 1.0 };
                }
                let mut prod = 1.0;
                for r in &mk {
                    prod *= seed_polynomial_eval(r, &z).expect("lengths agree");
                }
                acc += prod;
            }
            acc
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / total as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub subset: Vec<usize>,
    pub kappas: Vec<usize>,
    pub oracle: Vec<f64>,
    pub limit: f64,
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log κ over positive errors.
    pub slope: Option<f64>,
}

pub fn kappa_convergence_study(rows: &CholeskyRows, s: &[usize], kappas: &[usize]) -> Result<ConvergenceStudy> {
    let gram = rows.gram();
    let limit = super::family::set_expectation(s, &|u, v| gram[(u, v)]);
    let oracle = kappas
        .iter()
        .map(|&k| finite_kappa_expectation(rows, s, k))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = oracle.iter().map(|v| (v - limit).abs()).collect();
    let pts: Vec<(f64, f64)> = kappas
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&k, &e)| ((k as f64).ln(), e.ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(ConvergenceStudy {
        subset: s.to_vec(),
        kappas: kappas.to_vec(),
        oracle,
        limit,
        errors,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::cholesky_rows;
    use crate::moments::Degree2Solution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use serde_json::Value;

    fn brute(row: &[f64], z: &[f64]) -> f64 {
        let k = row.len();
        let mut lin = 0.0;
        let mut cub = 0.0;
        for a in 0..k {
            lin += row[a] * z[a];
            for b in a + 1..k {
                for c in b + 1..k {
                    cub += row[a] * row[b] * row[c] * z[a] * z[b] * z[c];
                }
            }
        }
        lin - 2.0 * cub
    }

    #[test]
    fn seed_eval_examples() {
        let mut row = vec![0.0; 8];
        row[0] = 1.0;
        let z = [-1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        assert_eq!(seed_polynomial_eval(&row, &z).unwrap(), -1.0);
        row[3] = 0.5;
        assert!((seed_polynomial_eval(&row, &z).unwrap() - (-1.0 - 0.5)).abs() < 1e-15);
        assert!(seed_polynomial_eval(&row, &z[..3]).is_err());

        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..20 {
            let row: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
            let z: Vec<f64> = (0..16).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            assert!((seed_polynomial_eval(&row, &z).unwrap() - brute(&row, &z)).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamards_are_orthogonal() {
        for k in [1, 2, 4, 8, 12, 16, 20] {
            let h = oracle_hadamard(k).unwrap();
            assert!(h.iter().all(|&v| v == 1.0 || v == -1.0));
            let g = &h * h.transpose();
            assert_eq!(g, DMatrix::identity(k, k) * k as f64, "order {k}");
        }
        assert!(oracle_hadamard(6).is_err());
    }

    fn rows3() -> CholeskyRows {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, -0.3, 0.4, 1.0, 0.2, -0.3, 0.2, 1.0]);
        cholesky_rows(&Degree2Solution::new(x, Value::Null).unwrap()).unwrap()
    }

    #[test]
    fn finite_examples() {
        let r = rows3();
        assert_eq!(finite_kappa_expectation(&r, &[], 8).unwrap(), 1.0);
        assert!(finite_kappa_expectation(&r, &[1], 8).unwrap().abs() < 1e-15);
        assert!(finite_kappa_expectation(&r, &[0, 1, 2], 8).unwrap().abs() < 1e-14);
        assert!(matches!(finite_kappa_expectation(&r, &[0], 32), Err(Error::Ceiling { .. })));
        // E[q_u²] → 1 only in the limit, but the linear part is exact at every κ
        let e = finite_kappa_expectation(&r, &[0, 1], 16).unwrap();
        let c: f64 = 0.4;
        assert!((e - (c + 2.0 / 3.0 * c.powi(3))).abs() < 0.05);
    }

    #[test]
    fn pair_error_decays_like_one_over_kappa() {
        let study = kappa_convergence_study(&rows3(), &[0, 1], &[8, 12, 16, 20]).unwrap();
        let slope = study.slope.unwrap();
        assert!((-1.4..=-0.6).contains(&slope), "{study:?}");
    }

    #[test]
    fn identity_study_has_no_slope() {
        let r = cholesky_rows(&Degree2Solution::identity(3)).unwrap();
        let study = kappa_convergence_study(&r, &[0, 1], &[4, 8]).unwrap();
        assert!(study.errors.iter().all(|&e| e <= 1e-12));
    }
}
