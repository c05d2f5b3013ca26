//! The truncated moment matrix M^(2) and the split of E = M^(1) − M^(2) by
//! index pattern.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::certify::{self, NormParams};
use super::family::{expectation_polynomial, set_polynomial, truncated_polynomial_families, MonomialFamily};
use super::poly::{CompiledPoly, Poly};
use crate::error::{Error, Result};
use crate::lift::{self, CholeskyRows};
use crate::linalg;
use crate::moments::{MomentIndexMap, Subset};

/// Ceiling on n for M^(2) and the error split.
pub const M2_MAX_N: usize = 120;

/// Label conventions: pairs use 0,1 / shared x=0, y=1, z=2 / disjoint {0,1},{2,3}.
struct Shapes {
    m2_pair_empty: Poly,
    m2_single: Poly,
    m2_pair_equal: Poly,
    m2_pair_shared: Poly,
    m2_pair_disjoint: Poly,
    e: [Poly; 4],
    e3_sparse: Poly,
    compiled: Compiled,
}

struct Compiled {
    m2_pair_empty: CompiledPoly,
    m2_single: CompiledPoly,
    m2_pair_equal: CompiledPoly,
    m2_pair_shared: CompiledPoly,
    m2_pair_disjoint: CompiledPoly,
    e3_sparse: CompiledPoly,
}

fn p(s: &[usize]) -> Vec<MonomialFamily> {
    if s.is_empty() {
        vec![MonomialFamily::new(1.into(), vec![])]
    } else {
        truncated_polynomial_families(s).expect("|S| ≤ 2")
    }
}

fn m2_poly(s: &[usize], t: &[usize]) -> Poly {
    expectation_polynomial(&[p(s), p(t)])
}

fn shapes() -> &'static Shapes {
    static SHAPES: OnceLock<Shapes> = OnceLock::new();
    SHAPES.get_or_init(|| {
        let m2_pair_empty = m2_poly(&[], &[0, 1]);
        let m2_single = m2_poly(&[0], &[1]);
        let m2_pair_equal = m2_poly(&[0, 1], &[0, 1]);
        let m2_pair_shared = m2_poly(&[0, 1], &[1, 2]);
        let m2_pair_disjoint = m2_poly(&[0, 1], &[2, 3]);
        let e = [
            Poly::one().sub(&m2_pair_equal),
            set_polynomial(&[0, 1]).sub(&m2_single),
            set_polynomial(&[0, 2]).sub(&m2_pair_shared),
            set_polynomial(&[0, 1, 2, 3]).sub(&m2_pair_disjoint),
        ];
        let mut e3_sparse = Poly::zero();
        for (m, c) in e[2].terms() {
            if m.keys().all(|&k| k == (0, 2)) {
                e3_sparse.add_term(m.clone(), *c);
            }
        }
        let compiled = Compiled {
            m2_pair_empty: CompiledPoly::new(&m2_pair_empty),
            m2_single: CompiledPoly::new(&m2_single),
            m2_pair_equal: CompiledPoly::new(&m2_pair_equal),
            m2_pair_shared: CompiledPoly::new(&m2_pair_shared),
            m2_pair_disjoint: CompiledPoly::new(&m2_pair_disjoint),
            e3_sparse: CompiledPoly::new(&e3_sparse),
        };
        Shapes {
            m2_pair_empty,
            m2_single,
            m2_pair_equal,
            m2_pair_shared,
            m2_pair_disjoint,
            e,
            e3_sparse,
            compiled,
        }
    })
}

/// The error polynomial of component k on its canonical labels.
pub fn error_polynomial(k: usize) -> Result<Poly> {
    match k {
        1..=4 => Ok(shapes().e[k - 1].clone()),
        _ => Err(Error::Param(format!("error component {k} does not exist"))),
    }
}

/// The part of E^(3) depending only on the outer inner product c_xz.
pub fn e3_sparse_polynomial() -> Poly {
    shapes().e3_sparse.clone()
}

/// M^(2) polynomials by shape, for inspection: (∅,pair), singletons,
/// equal pairs, pairs sharing one label, disjoint pairs.
pub fn m2_polynomials() -> [Poly; 5] {
    let s = shapes();
    [
        s.m2_pair_empty.clone(),
        s.m2_single.clone(),
        s.m2_pair_equal.clone(),
        s.m2_pair_shared.clone(),
        s.m2_pair_disjoint.clone(),
    ]
}

fn six(g: &DMatrix<f64>, l: &[usize]) -> [f64; 6] {
    let c = |a: usize, b: usize| -> f64 {
        match (l.get(a), l.get(b)) {
            (Some(&u), Some(&v)) => g[(u, v)],
            _ => 0.0,
        }
    };
    [c(0, 1), c(0, 2), c(0, 3), c(1, 2), c(1, 3), c(2, 3)]
}

/// Orders S ∪ T as (S only, shared, T only) for two pairs sharing one label.
fn shared_labels(s: [usize; 2], t: [usize; 2]) -> Option<[usize; 3]> {
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        if s[a] == t[b] && s[1 - a] != t[1 - b] {
            return Some([s[1 - a], s[a], t[1 - b]]);
        }
    }
    None
}

fn m2_entry(g: &DMatrix<f64>, s: Subset, t: Subset) -> f64 {
    let c = &shapes().compiled;
    match (s, t) {
        (Subset::Empty, Subset::Empty) => 1.0,
        (Subset::Empty, Subset::Pair(i, j)) | (Subset::Pair(i, j), Subset::Empty) => {
            c.m2_pair_empty.eval(&six(g, &[i, j]))
        }
        (Subset::Single(i), Subset::Single(j)) => {
            if i == j {
                1.0
            } else {
                c.m2_single.eval(&six(g, &[i, j]))
            }
        }
        (Subset::Pair(a, b), Subset::Pair(x, y)) => {
            if (a, b) == (x, y) {
                c.m2_pair_equal.eval(&six(g, &[a, b]))
            } else if let Some(l) = shared_labels([a, b], [x, y]) {
                c.m2_pair_shared.eval(&six(g, &l))
            } else {
                c.m2_pair_disjoint.eval(&six(g, &[a, b, x, y]))
            }
        }
        _ => 0.0,
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > M2_MAX_N {
        return Err(Error::Ceiling {
            what: "n for M^(2)",
            value: n,
            limit: M2_MAX_N,
        });
    }
    Ok(())
}

/// Dense M^(2)[S,T] = lim E[p_S p_T].
pub fn m2_matrix(rows: &CholeskyRows) -> Result<DMatrix<f64>> {
    check_n(rows.n)?;
    let g = rows.gram();
    let map = MomentIndexMap::new(rows.n);
    let subsets = map.subsets();
    let len = subsets.len();
    let mut m = DMatrix::zeros(len, len);
    m.as_mut_slice()
        .par_chunks_mut(len.max(1))
        .enumerate()
        .for_each(|(col, out)| {
            for (row, &s) in subsets.iter().enumerate() {
                out[row] = m2_entry(&g, s, subsets[col]);
            }
        });
    Ok(m)
}

/// E = M^(1) − M^(2) split by pattern. Each piece is stored on the block
/// where it lives: E1 is diagonal over all of [N], E2 is the singleton
/// block, E3 and E4 are indexed by pairs in moment order.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorComponents {
    pub n: usize,
    #[serde(skip)]
    pub e1: DVector<f64>,
    #[serde(skip)]
    pub e2: DMatrix<f64>,
    #[serde(skip)]
    pub e3: DMatrix<f64>,
    #[serde(skip)]
    pub e4: DMatrix<f64>,
    /// The c_xz-only part of E3, on the same support.
    #[serde(skip)]
    pub e3_sparse: DMatrix<f64>,
    pub numeric_norms: [f64; 4],
    pub analytic_bounds: [f64; 4],
    pub e3_sparse_norm: f64,
    pub e3_sparse_bound: f64,
    /// Largest |E| outside the four patterns (∅ rows and odd patterns).
    pub off_pattern_max: f64,
}

pub fn error_components(rows: &CholeskyRows) -> Result<ErrorComponents> {
    let n = rows.n;
    check_n(n)?;
    let g = rows.gram();
    let map = MomentIndexMap::new(n);
    let subsets = map.subsets();
    let pairs: Vec<Subset> = subsets[1 + n..].to_vec();
    let np = pairs.len();
    let gram = |u: usize, v: usize| Some(g[(u, v)]);
    let m1 = |s: Subset, t: Subset| -> f64 {
        let d = crate::moments::SymDiff::of(s, t);
        lift::entry_value(d.as_slice(), &gram).expect("|SΔT| ≤ 4")
    };
    let e = |s: Subset, t: Subset| m1(s, t) - m2_entry(&g, s, t);

    let e1 = DVector::from_iterator(subsets.len(), subsets.iter().map(|&s| e(s, s)));
    let e2 = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            e(Subset::Single(i), Subset::Single(j))
        }
    });

    let mut e3 = DMatrix::zeros(np, np);
    let mut e4 = DMatrix::zeros(np, np);
    let mut e3_sparse = DMatrix::zeros(np, np);
    let sparse = &shapes().compiled.e3_sparse;
    for (b, &t) in pairs.iter().enumerate() {
        for (a, &s) in pairs.iter().enumerate() {
            if a == b {
                continue;
            }
            let (Subset::Pair(i, j), Subset::Pair(x, y)) = (s, t) else {
                unreachable!()
            };
            let v = e(s, t);
            if let Some(l) = shared_labels([i, j], [x, y]) {
                e3[(a, b)] = v;
                e3_sparse[(a, b)] = sparse.eval(&six(&g, &l));
            } else {
                e4[(a, b)] = v;
            }
        }
    }

    let mut off_pattern_max: f64 = 0.0;
    for &s in &subsets {
        off_pattern_max = off_pattern_max.max(e(Subset::Empty, s).abs());
        if s.len() == 2 {
            for i in 0..n {
                off_pattern_max = off_pattern_max.max(e(Subset::Single(i), s).abs());
            }
        }
    }

    let norms = NormParams::from_matrix(&g);
    let mut analytic_bounds = [0.0; 4];
    for (k, b) in analytic_bounds.iter_mut().enumerate() {
        *b = certify::factorization_norm_bound(k + 1, &norms)?;
    }
    let numeric_norms = [
        e1.amax(),
        linalg::sym_norm(&e2),
        linalg::sym_norm(&e3),
        linalg::sym_norm(&e4),
    ];
    Ok(ErrorComponents {
        n,
        e3_sparse_norm: linalg::sym_norm(&e3_sparse),
        e3_sparse_bound: certify::e3_sparse_bound(&norms),
        e1,
        e2,
        e3,
        e4,
        e3_sparse,
        numeric_norms,
        analytic_bounds,
        off_pattern_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyph::poly::Coef;
    use crate::lift::{cholesky_rows, lift_m1};
    use crate::moments::Degree2Solution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use serde_json::Value;

    fn random_rows(n: usize, dim: usize, seed: u64) -> CholeskyRows {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v = DMatrix::from_fn(n, dim, |_, _| rng.random::<f64>() - 0.5);
        let mut g = &v * v.transpose();
        let d: Vec<f64> = (0..n).map(|i| g[(i, i)].sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] /= d[i] * d[j];
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { g[(i.min(j), i.max(j))] });
        cholesky_rows(&Degree2Solution::new(g, Value::Null).unwrap()).unwrap()
    }

    #[test]
    fn singleton_block_is_x() {
        assert_eq!(shapes().m2_single, crate::glyph::poly::Poly::var(0, 1));
        let r = random_rows(5, 3, 1);
        let m = m2_matrix(&r).unwrap();
        let g = r.gram();
        for i in 0..5 {
            for j in 0..5 {
                assert!((m[(1 + i, 1 + j)] - g[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_gives_identity() {
        let r = cholesky_rows(&Degree2Solution::identity(4)).unwrap();
        let m = m2_matrix(&r).unwrap();
        assert_eq!(m, DMatrix::identity(m.nrows(), m.nrows()));
        let e = error_components(&r).unwrap();
        assert_eq!(e.numeric_norms, [0.0; 4]);
        assert_eq!(e.analytic_bounds, [0.0; 4]);
    }

    #[test]
    fn m2_is_psd() {
        for seed in 0..3 {
            let m = m2_matrix(&random_rows(5, 2, seed)).unwrap();
            assert!(linalg::lambda_min(&m) >= -1e-8);
        }
    }

    #[test]
    fn e_components_match_closed_forms() {
        let e2 = error_polynomial(2).unwrap();
        assert_eq!(e2, Poly::monomial(&[(0, 1, 3)], Coef::new(2, 3)));
        let e1 = error_polynomial(1).unwrap();
        let want = Poly::monomial(&[(0, 1, 2)], Coef::from_integer(-2))
            .add(&Poly::monomial(&[(0, 1, 4)], Coef::new(8, 3)))
            .add(&Poly::monomial(&[(0, 1, 6)], Coef::new(-40, 9)));
        assert_eq!(e1, want);
        assert_eq!(e3_sparse_polynomial(), Poly::monomial(&[(0, 2, 3)], Coef::new(2, 3)));
        // E3 and E4 have the pair symmetry of their index sets
        let e4 = error_polynomial(4).unwrap();
        assert_eq!(e4.relabel(|u| [1, 0, 2, 3][u]), e4);
        assert_eq!(e4.relabel(|u| [0, 1, 3, 2][u]), e4);
        assert_eq!(e4.relabel(|u| [2, 3, 0, 1][u]), e4);
        assert_eq!(e4.len(), 23);
        let e3 = error_polynomial(3).unwrap();
        assert_eq!(e3.relabel(|u| [2, 1, 0][u]), e3);
        assert!(error_polynomial(0).is_err());
    }

    #[test]
    fn split_reassembles_e() {
        let r = random_rows(6, 3, 7);
        let x = Degree2Solution::new(r.gram(), Value::Null).unwrap();
        let m1 = lift_m1(&x).unwrap().entries;
        let m2 = m2_matrix(&r).unwrap();
        let e = error_components(&r).unwrap();
        let n = 6;
        let len = m1.nrows();
        let mut sum = DMatrix::from_diagonal(&e.e1);
        sum.view_mut((1, 1), (n, n)).copy_from(&e.e2);
        let np = len - 1 - n;
        let block = sum.view((1 + n, 1 + n), (np, np)) + &e.e3 + &e.e4;
        sum.view_mut((1 + n, 1 + n), (np, np)).copy_from(&block);
        let diff = (&m1 - &m2 - sum).amax();
        assert!(diff <= 1e-12, "{diff}");
        assert!(e.off_pattern_max <= 1e-12);
    }

    #[test]
    fn norms_are_certified() {
        for seed in 0..4 {
            let e = error_components(&random_rows(6, 2 + seed as usize % 3, seed)).unwrap();
            for k in 0..4 {
                assert!(e.numeric_norms[k] <= e.analytic_bounds[k] * (1.0 + 1e-12), "{k} {e:?}");
            }
            assert!(e.e3_sparse_norm <= e.e3_sparse_bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn e2_entries_are_cubes() {
        let r = random_rows(6, 3, 9);
        let g = r.gram();
        let e = error_components(&r).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!((e.e2[(i, j)] - 4.0 / 6.0 * g[(i, j)].powi(3)).abs() < 1e-12);
                }
            }
        }
    }
}
