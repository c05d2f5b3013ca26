//! The lift Φ: degree-2 solution X ↦ degree-4 moment matrix
//! M = (1−η)·M^(1) + η·Id, with η chosen from the error certificate.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glyph::certify::{self, NormParams};
use crate::linalg;
use crate::moments::{
    binom, check_sos2_feasible, colex_rank, Degree2Solution, Degree4MomentMatrix, MomentIndexMap,
    Subset, SymDiff, TOL_PSD,
};

/// Largest n for which a dense moment matrix is materialized.
pub const DENSE_LIFT_MAX_N: usize = 120;

/// Safety margin added to η in tight mode.
pub const TIGHT_MARGIN: f64 = 1e-9;

/// Tag for the entry formulas, embedded in artifacts: pair entries
/// c + (2/3)c³ and the 47-term table for four labels.
pub const ENTRY_TABLE_VERSION: &str = "pair:c+2/3c^3;quad:47-term;v1";

/// Eigenvalues below this are clamped to 0 when factoring X.
const RANK_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Certified,
    Tight,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(Mode::Certified),
            "tight" => Ok(Mode::Tight),
            _ => Err(Error::Param(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Certified => "certified",
            Mode::Tight => "tight",
        })
    }
}

/// Unit rows M[0..n] with X = M·Mᵀ.
#[derive(Clone, Debug)]
pub struct CholeskyRows {
    pub n: usize,
    /// n × rank.
    pub rows: DMatrix<f64>,
    pub rank: usize,
}

impl CholeskyRows {
    pub fn inner(&self, u: usize, v: usize) -> f64 {
        self.rows.row(u).dot(&self.rows.row(v))
    }

    /// Exactly symmetric Gram matrix of the rows.
    pub fn gram(&self) -> DMatrix<f64> {
        let g = &self.rows * self.rows.transpose();
        DMatrix::from_fn(self.n, self.n, |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] })
    }
}

/// Fails unless X passes the SoS_2 check at the default tolerance.
pub(crate) fn require_feasible(x: &Degree2Solution) -> Result<()> {
    let r = check_sos2_feasible(&x.x, TOL_PSD)?;
    if r.lambda_min < -TOL_PSD {
        return Err(Error::Infeasible {
            lambda_min: r.lambda_min,
            tol: TOL_PSD,
        });
    }
    if !r.ok {
        return Err(Error::Malformed(format!(
            "diagonal deviates from 1 by {:e}",
            r.max_diag_error
        )));
    }
    Ok(())
}

/// Factor X through its eigendecomposition, clamping tiny eigenvalues.
pub fn cholesky_rows(x: &Degree2Solution) -> Result<CholeskyRows> {
    require_feasible(x)?;
    let (vals, vecs) = linalg::sym_eigen(&x.x);
    let keep: Vec<usize> = (0..x.n).filter(|&k| vals[k] > RANK_THRESHOLD).collect();
    let mut rows = DMatrix::from_fn(x.n, keep.len(), |i, c| vecs[(i, keep[c])] * vals[keep[c]].sqrt());
    for i in 0..x.n {
        let norm = rows.row(i).norm();
        if norm > 0.0 {
            rows.row_mut(i).scale_mut(1.0 / norm);
        }
    }
    Ok(CholeskyRows {
        n: x.n,
        rank: keep.len(),
        rows,
    })
}

/// Limit entry for |SΔT| = 2: c + (2/3)c³.
pub fn pair_entry(c: f64) -> f64 {
    c + 2.0 / 3.0 * c * c * c
}

/// Limit entry for |SΔT| = 4 as a function of c01, c02, c03, c12, c13, c23.
///
/// Sum over loopless multigraphs on four vertices with every degree 1 or 3,
/// weighted by (−2) per degree-3 vertex and ∏ c^m / m! per edge bundle.
pub fn quad_entry(c: &[f64; 6]) -> f64 {
    let [ab, ac, ad, bc, bd, cd] = *c;
    // edge between vertices u < v
    let e = |u: usize, v: usize| -> f64 {
        match (u.min(v), u.max(v)) {
            (0, 1) => ab,
            (0, 2) => ac,
            (0, 3) => ad,
            (1, 2) => bc,
            (1, 3) => bd,
            (2, 3) => cd,
            _ => unreachable!(),
        }
    };

    let mut total = ab * cd + ac * bd + ad * bc;

    total -= 2.0 * (ab * ac * ad + ab * bc * bd + ac * bc * cd + ad * bd * cd);

    for (u, v) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut rest = (0..4).filter(|&w| w != u && w != v);
        let (w, x) = (rest.next().unwrap(), rest.next().unwrap());
        let uv = e(u, v);
        total += 4.0
            * (uv * uv * uv * e(w, x) / 6.0
                + uv * uv / 2.0 * (e(u, w) * e(v, x) + e(u, x) * e(v, w)));
    }

    for leaf in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&w| w != leaf).collect();
        for &hub in &others {
            let mut rest = others.iter().copied().filter(|&w| w != hub);
            let (b, cc) = (rest.next().unwrap(), rest.next().unwrap());
            let bcv = e(b, cc);
            total -= 8.0 * e(hub, leaf) * e(hub, b) * e(hub, cc) * bcv * bcv / 2.0;
        }
    }

    let p = [ab * cd, ac * bd, ad * bc];
    let fact: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
    for x in 0..=3usize {
        for y in 0..=3 - x {
            let w = 3 - x - y;
            let denom = (fact[x] * fact[y] * fact[w]).powi(2);
            total += 16.0 * p[0].powi(x as i32) * p[1].powi(y as i32) * p[2].powi(w as i32) / denom;
        }
    }
    total
}

/// Limit entry E[q_{SΔT}] for a sorted symmetric difference.
pub fn entry_value(delta: &[usize], gram: &dyn Fn(usize, usize) -> Option<f64>) -> Result<f64> {
    let get = |u: usize, v: usize| gram(u, v).ok_or(Error::MissingGram(u, v));
    match delta.len() {
        0 => Ok(1.0),
        1 | 3 => Ok(0.0),
        2 => Ok(pair_entry(get(delta[0], delta[1])?)),
        4 => {
            let [a, b, c, d] = [delta[0], delta[1], delta[2], delta[3]];
            Ok(quad_entry(&[
                get(a, b)?,
                get(a, c)?,
                get(a, d)?,
                get(b, c)?,
                get(b, d)?,
                get(c, d)?,
            ]))
        }
        _ => Err(Error::Param(format!(
            "symmetric difference {delta:?} has more than 4 elements"
        ))),
    }
}

/// Dense M^(1) built from a symmetric-difference entry table over `gram`.
pub(crate) fn m1_entries(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let n = gram.nrows();
    let map = MomentIndexMap::new(n);
    let subsets = map.subsets();
    let len = subsets.len();

    let mut quad = vec![0.0; binom(n, 4)];
    for d in 0..n {
        for c in 0..d {
            for b in 0..c {
                for a in 0..b {
                    quad[colex_rank(&[a, b, c, d])] = quad_entry(&[
                        gram[(a, b)],
                        gram[(a, c)],
                        gram[(a, d)],
                        gram[(b, c)],
                        gram[(b, d)],
                        gram[(c, d)],
                    ]);
                }
            }
        }
    }

    let mut m = DMatrix::zeros(len, len);
    m.as_mut_slice()
        .par_chunks_mut(len.max(1))
        .enumerate()
        .for_each(|(col, out)| {
            let t = subsets[col];
            for (row, &s) in subsets.iter().enumerate() {
                let d = SymDiff::of(s, t);
                let e = d.as_slice();
                out[row] = match e.len() {
                    0 => 1.0,
                    2 => pair_entry(gram[(e[0], e[1])]),
                    4 => quad[colex_rank(e)],
                    _ => 0.0,
                };
            }
        });
    m
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIFT_MAX_N {
        return Err(Error::Ceiling {
            what: "n for a dense moment matrix",
            value: n,
            limit: DENSE_LIFT_MAX_N,
        });
    }
    Ok(())
}

/// The raw limit matrix M^(1) (η = 0).
pub fn lift_m1(x: &Degree2Solution) -> Result<Degree4MomentMatrix> {
    require_feasible(x)?;
    check_dense(x.n)?;
    Ok(Degree4MomentMatrix {
        n: x.n,
        eta: 0.0,
        entries: m1_entries(&x.x),
    })
}

/// Norm parameters, the assembled certificate and the mixing weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionParams {
    pub alpha_mag: f64,
    pub alpha_row: f64,
    pub alpha_op: f64,
    /// Certified bounds B1..B4 on ‖E^(k)‖.
    pub bounds: [f64; 4],
    /// B1 + B2 + B3 + B4 (reported in both modes).
    pub alpha: f64,
    pub eta: f64,
    pub mode: Mode,
    pub lambda_min_m1: Option<f64>,
}

impl SolutionParams {
    pub fn norms(&self) -> NormParams {
        NormParams {
            alpha_mag: self.alpha_mag,
            alpha_row: self.alpha_row,
            alpha_op: self.alpha_op,
        }
    }
}

fn params_with_m1(x: &Degree2Solution, mode: Mode) -> Result<(SolutionParams, Option<DMatrix<f64>>)> {
    require_feasible(x)?;
    let norms = NormParams::from_matrix(&x.x);
    let mut bounds = [0.0; 4];
    for (k, b) in bounds.iter_mut().enumerate() {
        *b = certify::factorization_norm_bound(k + 1, &norms)?;
    }
    let alpha: f64 = bounds.iter().sum();
    let (eta, lambda_min_m1, m1) = match mode {
        Mode::Certified => (alpha / (1.0 + alpha), None, None),
        Mode::Tight => {
            let (lam, m1) = if norms.alpha_mag == 0.0 {
                // every off-pattern inner product vanishes, so M^(1) = Id
                (1.0, None)
            } else {
                check_dense(x.n)?;
                let m1 = m1_entries(&x.x);
                (linalg::lambda_min(&m1), Some(m1))
            };
            let t = (-lam).max(0.0);
            let eta = if t > 0.0 { t / (1.0 + t) + TIGHT_MARGIN } else { 0.0 };
            (eta, Some(lam), m1)
        }
    };
    let params = SolutionParams {
        alpha_mag: norms.alpha_mag,
        alpha_row: norms.alpha_row,
        alpha_op: norms.alpha_op,
        bounds,
        alpha,
        eta,
        mode,
        lambda_min_m1,
    };
    Ok((params, m1))
}

/// Solution parameters. Tight mode needs λ_min(M^(1)) and hence a dense lift
/// unless X has no off-diagonal mass.
pub fn solution_params(x: &Degree2Solution, mode: Mode) -> Result<SolutionParams> {
    params_with_m1(x, mode).map(|(p, _)| p)
}

fn mix(m1: DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let mut m = m1 * (1.0 - eta);
    m.fill_diagonal(1.0);
    m
}

/// Dense lift M = (1−η)·M^(1) + η·Id.
pub fn lift(x: &Degree2Solution, mode: Mode) -> Result<(Degree4MomentMatrix, SolutionParams)> {
    check_dense(x.n)?;
    let (params, m1) = params_with_m1(x, mode)?;
    let m1 = m1.unwrap_or_else(|| m1_entries(&x.x));
    let m = Degree4MomentMatrix {
        n: x.n,
        eta: params.eta,
        entries: mix(m1, params.eta),
    };
    Ok((m, params))
}

/// A lift kept in implicit form: every entry is computed on demand from X.
#[derive(Clone, Debug)]
pub struct LiftedSolution {
    pub x: Degree2Solution,
    pub params: SolutionParams,
}

pub fn lift_implicit(x: &Degree2Solution, mode: Mode) -> Result<LiftedSolution> {
    let params = solution_params(x, mode)?;
    Ok(LiftedSolution {
        x: x.clone(),
        params,
    })
}

impl LiftedSolution {
    pub fn n(&self) -> usize {
        self.x.n
    }

    pub fn eta(&self) -> f64 {
        self.params.eta
    }

    pub fn entry(&self, s: Subset, t: Subset) -> f64 {
        let d = SymDiff::of(s, t);
        if d.is_empty() {
            return 1.0;
        }
        let x = &self.x.x;
        let v = entry_value(d.as_slice(), &|u, v| Some(x[(u, v)])).expect("at most 4 elements");
        (1.0 - self.params.eta) * v
    }

    /// M[{i},{j}] for all i, j.
    pub fn singleton_block(&self) -> DMatrix<f64> {
        let n = self.n();
        let eta = self.params.eta;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                (1.0 - eta) * pair_entry(self.x.x[(i, j)])
            }
        })
    }

    /// Σ A[i,j]·M[{i},{j}] without forming M.
    pub fn objective_deg4(&self, a: &DMatrix<f64>) -> Result<f64> {
        let n = self.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: a.nrows(),
            });
        }
        Ok(a.dot(&self.singleton_block()))
    }

    pub fn to_dense(&self) -> Result<Degree4MomentMatrix> {
        check_dense(self.n())?;
        Ok(Degree4MomentMatrix {
            n: self.n(),
            eta: self.params.eta,
            entries: mix(m1_entries(&self.x.x), self.params.eta),
        })
    }
}

/// (1−η)(⟨A,X⟩ − α√n‖A‖_F) + η·Tr A.
pub fn objective_lower_bound(a: &DMatrix<f64>, x: &Degree2Solution, params: &SolutionParams) -> Result<f64> {
    let n = x.n;
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.nrows(),
        });
    }
    let eta = params.eta;
    let inner = a.dot(&x.x);
    Ok((1.0 - eta) * (inner - params.alpha * (n as f64).sqrt() * a.norm()) + eta * a.trace())
}

/// Lift summary written next to lifted artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub n: usize,
    pub alpha_mag: f64,
    pub alpha_row: f64,
    pub alpha_op: f64,
    pub bounds: [f64; 4],
    pub alpha: f64,
    pub eta: f64,
    pub mode: Mode,
    pub lambda_min_m1: Option<f64>,
    pub lambda_min_m: Option<f64>,
    pub objective_in: Option<f64>,
    pub objective_out: Option<f64>,
    pub bound: Option<f64>,
}

impl LiftReport {
    /// Summarize a lift. `dense` supplies λ_min(M) when the matrix exists;
    /// `a` supplies the objective.
    pub fn new(lifted: &LiftedSolution, dense: Option<&Degree4MomentMatrix>, a: Option<&DMatrix<f64>>) -> Result<Self> {
        let p = &lifted.params;
        let lambda_min_m = dense.map(|m| linalg::lambda_min(&m.entries));
        let (objective_in, objective_out, bound) = match a {
            Some(a) => (
                Some(crate::moments::objective_deg2(a, &lifted.x)?),
                Some(lifted.objective_deg4(a)?),
                Some(objective_lower_bound(a, &lifted.x, p)?),
            ),
            None => (None, None, None),
        };
        Ok(LiftReport {
            n: lifted.n(),
            alpha_mag: p.alpha_mag,
            alpha_row: p.alpha_row,
            alpha_op: p.alpha_op,
            bounds: p.bounds,
            alpha: p.alpha,
            eta: p.eta,
            mode: p.mode,
            lambda_min_m1: p.lambda_min_m1,
            lambda_min_m,
            objective_in,
            objective_out,
            bound,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyph::family::set_expectation;
    use crate::moments::{check_sos4_feasible, objective_deg4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use serde_json::Value;

    pub(crate) fn random_gram(n: usize, dim: usize, seed: u64) -> Degree2Solution {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v = DMatrix::from_fn(n, dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let mut g = &v * v.transpose();
        let d: Vec<f64> = (0..n).map(|i| g[(i, i)].sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] /= d[i] * d[j];
            }
            g[(i, i)] = 1.0;
        }
        let g = DMatrix::from_fn(n, n, |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] });
        Degree2Solution::new(g, Value::Null).unwrap()
    }

    #[test]
    fn cholesky_examples() {
        let id = Degree2Solution::identity(4);
        let r = cholesky_rows(&id).unwrap();
        assert!((r.gram() - DMatrix::identity(4, 4)).abs().max() < 1e-12);

        let ones = Degree2Solution::new(DMatrix::from_element(2, 2, 1.0), Value::Null).unwrap();
        let r = cholesky_rows(&ones).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.inner(0, 1) - 1.0).abs() < 1e-12);

        let x = random_gram(12, 5, 3);
        let r = cholesky_rows(&x).unwrap();
        assert!((r.gram() - &x.x).abs().max() <= 1e-8);
        for i in 0..12 {
            assert!((r.rows.row(i).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        let x = Degree2Solution::new(bad, Value::Null).unwrap();
        assert!(matches!(cholesky_rows(&x), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn params_examples() {
        let p = solution_params(&Degree2Solution::identity(5), Mode::Certified).unwrap();
        assert_eq!((p.alpha_mag, p.alpha, p.eta), (0.0, 0.0, 0.0));
        let p = solution_params(&Degree2Solution::identity(5), Mode::Tight).unwrap();
        assert_eq!((p.alpha, p.eta), (0.0, 0.0));

        let ones = Degree2Solution::new(DMatrix::from_element(3, 3, 1.0), Value::Null).unwrap();
        let p = solution_params(&ones, Mode::Certified).unwrap();
        assert_eq!(p.alpha_mag, 1.0);
        assert!((p.alpha_row - 2f64.sqrt()).abs() < 1e-15);
        assert!((p.alpha_op - 3.0).abs() < 1e-12);
        assert!((p.eta - p.alpha / (1.0 + p.alpha)).abs() < 1e-15);
    }

    #[test]
    fn entry_value_cases() {
        let g = |_: usize, _: usize| Some(0.0);
        assert_eq!(entry_value(&[], &g).unwrap(), 1.0);
        assert_eq!(entry_value(&[3], &g).unwrap(), 0.0);
        assert_eq!(entry_value(&[0, 1], &g).unwrap(), 0.0);
        assert_eq!(entry_value(&[0, 1, 2, 3], &g).unwrap(), 0.0);
        assert!(matches!(
            entry_value(&[0, 1], &|_, _| None),
            Err(Error::MissingGram(0, 1))
        ));
        let c = 0.37;
        assert_eq!(entry_value(&[2, 5], &|_, _| Some(c)).unwrap(), c + 4.0 / 6.0 * c * c * c);
    }

    #[test]
    fn quad_entry_matches_pairing_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
            let gram = |u: usize, v: usize| c[crate::glyph::poly::pair_slot(u, v)];
            let want = set_expectation(&[0, 1, 2, 3], &gram);
            assert!((quad_entry(&c) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_identity() {
        let (m, p) = lift(&Degree2Solution::identity(5), Mode::Certified).unwrap();
        assert_eq!(p.eta, 0.0);
        assert_eq!(m.entries, DMatrix::identity(m.entries.nrows(), m.entries.nrows()));
        let m1 = lift_m1(&Degree2Solution::identity(5)).unwrap();
        assert_eq!(m1.entries, m.entries);
    }

    #[test]
    fn lift_m1_pair_anchor() {
        let c = -0.6;
        let x = Degree2Solution::new(DMatrix::from_row_slice(2, 2, &[1.0, c, c, 1.0]), Value::Null).unwrap();
        let m = lift_m1(&x).unwrap();
        let want = c + 2.0 / 3.0 * c * c * c;
        assert_eq!(m.get(Subset::Single(0), Subset::Single(1)), want);
        assert_eq!(m.get(Subset::Pair(0, 1), Subset::Empty), want);
    }

    #[test]
    fn lift_is_feasible_and_diagonal_is_one() {
        for seed in 0..4 {
            let x = random_gram(9, 3, seed);
            for mode in [Mode::Certified, Mode::Tight] {
                let (m, p) = lift(&x, mode).unwrap();
                let r = check_sos4_feasible(&m, TOL_PSD).unwrap();
                assert!(r.ok, "{mode} {r:?}");
                assert!(m.entries.diagonal().iter().all(|&d| d == 1.0));
                if mode == Mode::Tight {
                    assert!(r.lambda_min >= -1e-9);
                    let cert = solution_params(&x, Mode::Certified).unwrap();
                    assert!(p.eta <= cert.eta);
                }
            }
        }
    }

    #[test]
    fn damping_scales_off_diagonal_exactly() {
        let x = random_gram(6, 2, 5);
        let m1 = lift_m1(&x).unwrap();
        let (m, p) = lift(&x, Mode::Certified).unwrap();
        let len = m.entries.nrows();
        for j in 0..len {
            for i in 0..len {
                if i != j {
                    assert_eq!(m.entries[(i, j)], (1.0 - p.eta) * m1.entries[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn objective_deg4_forced_zero_eta() {
        let x = random_gram(7, 3, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let w = DMatrix::from_fn(7, 7, |_, _| rng.random::<f64>() - 0.5);
        let a = &w + w.transpose();
        let m1 = lift_m1(&x).unwrap();
        let mut want = a.trace();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    let c = x.x[(i, j)];
                    want += a[(i, j)] * (c + 2.0 / 3.0 * c.powi(3));
                }
            }
        }
        assert!((objective_deg4(&a, &m1).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn implicit_matches_dense() {
        let x = random_gram(8, 3, 21);
        let (m, p) = lift(&x, Mode::Certified).unwrap();
        let imp = lift_implicit(&x, Mode::Certified).unwrap();
        assert_eq!(imp.params, p);
        let map = m.index_map();
        for (a, s) in map.subsets().into_iter().enumerate() {
            for (b, t) in map.subsets().into_iter().enumerate() {
                assert_eq!(imp.entry(s, t), m.entries[(a, b)]);
            }
        }
        let a = DMatrix::from_fn(8, 8, |i, j| ((i * 3 + j * 3) % 5) as f64 - 2.0);
        assert!((imp.objective_deg4(&a).unwrap() - objective_deg4(&a, &m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_examples() {
        let x = random_gram(6, 2, 2);
        let p = solution_params(&x, Mode::Certified).unwrap();
        let id = DMatrix::identity(6, 6);
        // ⟨Id,X⟩ = n and √n‖Id‖_F = Tr Id, so the bound collapses to n/(1+α)
        let b = objective_lower_bound(&id, &x, &p).unwrap();
        assert!((b - 6.0 / (1.0 + p.alpha)).abs() < 1e-9 * (1.0 + b.abs()));

        let mut p0 = p.clone();
        p0.alpha = 0.0;
        p0.eta = 0.0;
        let a = DMatrix::from_fn(6, 6, |i, j| (i + j) as f64);
        assert!((objective_lower_bound(&a, &x, &p0).unwrap() - a.dot(&x.x)).abs() < 1e-12);
    }

    #[test]
    fn too_large_for_dense() {
        let x = Degree2Solution::identity(DENSE_LIFT_MAX_N + 1);
        assert!(matches!(lift_m1(&x), Err(Error::Ceiling { .. })));
        // implicit lifting of the identity works at any size
        let imp = lift_implicit(&x, Mode::Tight).unwrap();
        assert_eq!(imp.eta(), 0.0);
    }

    fn permute(x: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(perm[i], perm[j])])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lift_commutes_with_relabeling(seed in any::<u64>(), n in 3usize..8) {
            use rand::seq::SliceRandom;
            let x = random_gram(n, 3, seed);
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let px = Degree2Solution::new(permute(&x.x, &perm), Value::Null).unwrap();
            let m = lift_m1(&x).unwrap();
            let pm = lift_m1(&px).unwrap();
            let map = MomentIndexMap::new(n);
            // px[i,j] = x[perm[i], perm[j]], so subset S of px corresponds to perm(S) of x
            let image = |s: Subset| -> Subset {
                Subset::from_slice(&s.elements().iter().map(|&i| perm[i]).collect::<Vec<_>>()).unwrap()
            };
            for s in map.subsets() {
                for t in map.subsets() {
                    prop_assert!((pm.get(s, t) - m.get(image(s), image(t))).abs() <= 1e-14);
                }
            }
        }

        #[test]
        fn tight_never_exceeds_certified(seed in any::<u64>(), n in 3usize..9, dim in 1usize..5) {
            let x = random_gram(n, dim, seed);
            let t = solution_params(&x, Mode::Tight).unwrap();
            let c = solution_params(&x, Mode::Certified).unwrap();
            prop_assert!(t.eta <= c.eta + 1e-12);
            prop_assert!(t.alpha_op >= 1.0 - 1e-12);
        }
    }
}
