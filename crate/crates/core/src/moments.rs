//! Degree-2 and degree-4 pseudomoment objects, the canonical subset index and
//! feasibility checks.
//!
//! Vertices are 0-based. The moment index enumerates ∅, then the singletons
//! {0},…,{n−1}, then the pairs {i,j} (i<j) in lexicographic order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::json::{self, SCHEMA};
use crate::linalg;

/// Default PSD tolerance.
pub const TOL_PSD: f64 = 1e-8;

/// Symmetry tolerance below which an input counts as symmetric.
pub const TOL_SYMMETRY: f64 = 1e-12;

/// A subset of size at most 2, normalized so that pairs satisfy `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subset {
    Empty,
    Single(usize),
    Pair(usize, usize),
}

impl Subset {
    /// Normalize a slice of at most two distinct elements.
    pub fn from_slice(s: &[usize]) -> Result<Subset> {
        match *s {
            [] => Ok(Subset::Empty),
            [i] => Ok(Subset::Single(i)),
            [i, j] if i < j => Ok(Subset::Pair(i, j)),
            [i, j] if j < i => Ok(Subset::Pair(j, i)),
            _ => Err(Error::BadSubset(s.to_vec())),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Subset::Empty => 0,
            Subset::Single(_) => 1,
            Subset::Pair(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Subset::Empty)
    }

    pub(crate) fn raw(&self) -> ([usize; 2], usize) {
        match *self {
            Subset::Empty => ([0, 0], 0),
            Subset::Single(i) => ([i, 0], 1),
            Subset::Pair(i, j) => ([i, j], 2),
        }
    }

    pub fn elements(&self) -> Vec<usize> {
        match *self {
            Subset::Empty => vec![],
            Subset::Single(i) => vec![i],
            Subset::Pair(i, j) => vec![i, j],
        }
    }
}

/// Sorted symmetric difference of two subsets of size ≤ 2 (at most 4 elements).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SymDiff {
    len: usize,
    elems: [usize; 4],
}

impl SymDiff {
    pub fn of(s: Subset, t: Subset) -> SymDiff {
        let (a, la) = s.raw();
        let (b, lb) = t.raw();
        let (a, b) = (&a[..la], &b[..lb]);
        let mut elems = [0usize; 4];
        let mut len = 0;
        for &x in a {
            if !b.contains(&x) {
                elems[len] = x;
                len += 1;
            }
        }
        for &x in b {
            if !a.contains(&x) {
                elems[len] = x;
                len += 1;
            }
        }
        // insertion sort on at most four elements
        for i in 1..len {
            let mut k = i;
            while k > 0 && elems[k - 1] > elems[k] {
                elems.swap(k - 1, k);
                k -= 1;
            }
        }
        SymDiff { len, elems }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.elems[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Rank of a sorted k-subset in colexicographic order.
pub(crate) fn colex_rank(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| binom(x, i + 1))
        .sum()
}

pub(crate) fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Canonical enumeration of subsets of [n] of size ≤ 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MomentIndexMap {
    pub n: usize,
}

impl MomentIndexMap {
    pub fn new(n: usize) -> Self {
        MomentIndexMap { n }
    }

    /// N = 1 + n + n(n−1)/2.
    pub fn len(&self) -> usize {
        1 + self.n + self.n * self.n.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn pair_offset(&self, i: usize) -> usize {
        // number of pairs (a,b) with a < i
        i * self.n - i * (i + 1) / 2
    }

    pub fn index_of(&self, s: &[usize]) -> Result<usize> {
        if s.iter().any(|&x| x >= self.n) {
            return Err(Error::BadSubset(s.to_vec()));
        }
        Ok(self.index_of_subset(Subset::from_slice(s)?))
    }

    /// Position of an already-normalized subset (elements assumed < n).
    pub fn index_of_subset(&self, s: Subset) -> usize {
        match s {
            Subset::Empty => 0,
            Subset::Single(i) => 1 + i,
            Subset::Pair(i, j) => 1 + self.n + self.pair_offset(i) + (j - i - 1),
        }
    }

    pub fn subset_of(&self, index: usize) -> Result<Subset> {
        let len = self.len();
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
        if index == 0 {
            return Ok(Subset::Empty);
        }
        if index <= self.n {
            return Ok(Subset::Single(index - 1));
        }
        let mut r = index - 1 - self.n;
        let mut i = 0;
        loop {
            let row = self.n - i - 1;
            if r < row {
                return Ok(Subset::Pair(i, i + 1 + r));
            }
            r -= row;
            i += 1;
        }
    }

    /// All subsets in canonical order.
    pub fn subsets(&self) -> Vec<Subset> {
        let mut out = Vec::with_capacity(self.len());
        out.push(Subset::Empty);
        out.extend((0..self.n).map(Subset::Single));
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(Subset::Pair(i, j));
            }
        }
        out
    }
}

/// A point of SoS_2: symmetric PSD matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Degree2Solution {
    pub n: usize,
    pub x: DMatrix<f64>,
    pub provenance: Value,
}

impl Degree2Solution {
    /// Wrap a matrix. Rejects non-square input and asymmetry above 1e−12;
    /// the stored matrix is exactly symmetrized.
    pub fn new(x: DMatrix<f64>, provenance: Value) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::Malformed(format!(
                "degree-2 matrix is {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let asym = linalg::max_asymmetry(&x);
        if asym > TOL_SYMMETRY {
            return Err(Error::Malformed(format!("matrix asymmetric by {asym:e}")));
        }
        let n = x.nrows();
        let x = DMatrix::from_fn(n, n, |i, j| {
            if i <= j {
                x[(i, j)]
            } else {
                x[(j, i)]
            }
        });
        Ok(Degree2Solution { n, x, provenance })
    }

    pub fn identity(n: usize) -> Self {
        Degree2Solution {
            n,
            x: DMatrix::identity(n, n),
            provenance: Value::Null,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(&Degree2File {
            schema: SCHEMA.into(),
            kind: "degree2".into(),
            n: self.n,
            x: json::matrix_rows(&self.x),
            provenance: self.provenance.clone(),
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Degree2File = serde_json::from_str(s)?;
        if f.kind != "degree2" {
            return Err(Error::Malformed(format!("expected kind degree2, got {}", f.kind)));
        }
        if f.x.len() != f.n {
            return Err(Error::Dimension {
                expected: f.n,
                got: f.x.len(),
            });
        }
        Self::new(json::matrix_from_rows(&f.x, f.n)?, f.provenance)
    }
}

#[derive(Serialize, Deserialize)]
struct Degree2File {
    #[serde(default)]
    schema: String,
    kind: String,
    n: usize,
    x: Vec<Vec<f64>>,
    #[serde(default)]
    provenance: Value,
}

/// A point of SoS_4 indexed through [`MomentIndexMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct Degree4MomentMatrix {
    pub n: usize,
    pub eta: f64,
    pub entries: DMatrix<f64>,
}

impl Degree4MomentMatrix {
    pub fn index_map(&self) -> MomentIndexMap {
        MomentIndexMap::new(self.n)
    }

    pub fn identity(n: usize) -> Self {
        let len = MomentIndexMap::new(n).len();
        Degree4MomentMatrix {
            n,
            eta: 0.0,
            entries: DMatrix::identity(len, len),
        }
    }

    pub fn get(&self, s: Subset, t: Subset) -> f64 {
        let map = self.index_map();
        self.entries[(map.index_of_subset(s), map.index_of_subset(t))]
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(&Degree4File {
            schema: SCHEMA.into(),
            kind: "degree4".into(),
            n: self.n,
            eta: self.eta,
            entries: json::matrix_rows(&self.entries),
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Degree4File = serde_json::from_str(s)?;
        if f.kind != "degree4" {
            return Err(Error::Malformed(format!("expected kind degree4, got {}", f.kind)));
        }
        let len = MomentIndexMap::new(f.n).len();
        if f.entries.len() != len {
            return Err(Error::Dimension {
                expected: len,
                got: f.entries.len(),
            });
        }
        Ok(Degree4MomentMatrix {
            n: f.n,
            eta: f.eta,
            entries: json::matrix_from_rows(&f.entries, len)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Degree4File {
    #[serde(default)]
    schema: String,
    kind: String,
    n: usize,
    eta: f64,
    entries: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sos2Report {
    pub ok: bool,
    pub lambda_min: f64,
    pub max_diag_error: f64,
    pub max_asymmetry: f64,
    pub tol: f64,
}

/// Check the SoS_2 constraints: unit diagonal, symmetry and λ_min ≥ −tol.
pub fn check_sos2_feasible(x: &DMatrix<f64>, tol: f64) -> Result<Sos2Report> {
    if !x.is_square() {
        return Err(Error::Malformed(format!(
            "matrix is {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let max_asymmetry = linalg::max_asymmetry(x);
    if max_asymmetry > TOL_SYMMETRY {
        return Err(Error::Malformed(format!(
            "matrix asymmetric by {max_asymmetry:e}"
        )));
    }
    let max_diag_error = x
        .diagonal()
        .iter()
        .map(|d| (d - 1.0).abs())
        .fold(0.0, f64::max);
    let lambda_min = linalg::lambda_min(x);
    Ok(Sos2Report {
        ok: max_diag_error <= tol && max_asymmetry <= tol && lambda_min >= -tol,
        lambda_min,
        max_diag_error,
        max_asymmetry,
        tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sos4Report {
    pub ok: bool,
    pub lambda_min: f64,
    pub max_symmetry_violation: f64,
    pub normalization_error: f64,
    pub max_odd_entry: f64,
    pub tol: f64,
}

/// Check the SoS_4 constraints of a moment matrix.
///
/// Entries are grouped by their sorted symmetric difference, so the
/// consistency check costs O(N²). Odd-pattern zeros are checked exactly.
pub fn check_sos4_feasible(m: &Degree4MomentMatrix, tol: f64) -> Result<Sos4Report> {
    let map = m.index_map();
    let len = map.len();
    if m.entries.nrows() != len || m.entries.ncols() != len {
        return Err(Error::Dimension {
            expected: len,
            got: m.entries.nrows(),
        });
    }
    let n = m.n;
    let subsets = map.subsets();
    // representative value per even symmetric difference
    let mut reps: [Vec<f64>; 3] = [
        vec![f64::NAN; 1],
        vec![f64::NAN; binom(n, 2)],
        vec![f64::NAN; binom(n, 4)],
    ];
    let mut max_sym = 0.0f64;
    let mut max_odd = 0.0f64;
    for (b, &t) in subsets.iter().enumerate() {
        for (a, &s) in subsets.iter().enumerate() {
            let v = m.entries[(a, b)];
            let d = SymDiff::of(s, t);
            if d.len() % 2 == 1 {
                if v != 0.0 {
                    max_odd = max_odd.max(v.abs().max(f64::MIN_POSITIVE));
                }
                continue;
            }
            let slot = &mut reps[d.len() / 2][colex_rank(d.as_slice())];
            if slot.is_nan() {
                *slot = v;
            } else {
                max_sym = max_sym.max((*slot - v).abs());
            }
        }
    }
    let normalization_error = (m.entries[(0, 0)] - 1.0).abs();
    let lambda_min = linalg::lambda_min(&m.entries);
    Ok(Sos4Report {
        ok: max_sym == 0.0 && max_odd == 0.0 && normalization_error <= tol && lambda_min >= -tol,
        lambda_min,
        max_symmetry_violation: max_sym,
        normalization_error,
        max_odd_entry: max_odd,
        tol,
    })
}

fn check_dims(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.nrows(),
        });
    }
    Ok(())
}

/// ⟨A, X⟩ = Σ A[i,j]·X[i,j].
pub fn objective_deg2(a: &DMatrix<f64>, x: &Degree2Solution) -> Result<f64> {
    check_dims(a, x.n)?;
    Ok(a.dot(&x.x))
}

/// Σ A[i,j]·M[{i},{j}], read from the singleton block.
pub fn objective_deg4(a: &DMatrix<f64>, m: &Degree4MomentMatrix) -> Result<f64> {
    check_dims(a, m.n)?;
    let n = m.n;
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * m.entries[(1 + i, 1 + j)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_positions() {
        let map = MomentIndexMap::new(4);
        assert_eq!(map.index_of(&[]).unwrap(), 0);
        assert_eq!(map.index_of(&[0]).unwrap(), 1);
        assert_eq!(map.index_of(&[0, 1]).unwrap(), 5);
        assert_eq!(map.index_of(&[1, 0]).unwrap(), 5);
        assert_eq!(map.index_of(&[2, 3]).unwrap(), 10);
        assert_eq!(map.len(), 11);
    }

    #[test]
    fn index_errors() {
        let map = MomentIndexMap::new(3);
        assert!(matches!(map.index_of(&[3]), Err(Error::BadSubset(_))));
        assert!(matches!(map.index_of(&[0, 1, 2]), Err(Error::BadSubset(_))));
        assert!(matches!(map.index_of(&[1, 1]), Err(Error::BadSubset(_))));
        assert!(map.subset_of(7).is_err());
    }

    #[test]
    fn sym_diff_sorted() {
        let d = SymDiff::of(Subset::Pair(1, 5), Subset::Pair(0, 5));
        assert_eq!(d.as_slice(), &[0, 1]);
        let d = SymDiff::of(Subset::Pair(3, 4), Subset::Pair(0, 1));
        assert_eq!(d.as_slice(), &[0, 1, 3, 4]);
        let d = SymDiff::of(Subset::Single(2), Subset::Pair(2, 7));
        assert_eq!(d.as_slice(), &[7]);
        assert!(SymDiff::of(Subset::Pair(2, 7), Subset::Pair(2, 7)).is_empty());
    }

    #[test]
    fn colex_ranks_are_dense() {
        let n = 7;
        let mut seen = vec![false; binom(n, 4)];
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        seen[colex_rank(&[a, b, c, d])] = true;
                    }
                }
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn sos2_examples() {
        let r = check_sos2_feasible(&DMatrix::identity(5, 5), TOL_PSD).unwrap();
        assert!(r.ok);
        assert!((r.lambda_min - 1.0).abs() < 1e-14);

        let r = check_sos2_feasible(&DMatrix::from_element(3, 3, 1.0), TOL_PSD).unwrap();
        assert!(r.ok);
        assert!(r.lambda_min.abs() < 1e-12);

        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        let r = check_sos2_feasible(&bad, TOL_PSD).unwrap();
        assert!(!r.ok);
        // eigenvalues of this matrix are 2, 2, -1
        assert!((r.lambda_min + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sos2_rejects_malformed() {
        assert!(check_sos2_feasible(&DMatrix::zeros(2, 3), TOL_PSD).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(check_sos2_feasible(&asym, TOL_PSD).is_err());
    }

    #[test]
    fn sos4_identity_ok() {
        for n in [0, 1, 3, 6] {
            let r = check_sos4_feasible(&Degree4MomentMatrix::identity(n), TOL_PSD).unwrap();
            assert!(r.ok, "n = {n}");
        }
    }

    #[test]
    fn sos4_reports_symmetry_violation() {
        let mut m = Degree4MomentMatrix::identity(3);
        let map = m.index_map();
        let a = map.index_of(&[0]).unwrap();
        let b = map.index_of(&[1]).unwrap();
        m.entries[(a, b)] = 0.25;
        m.entries[(b, a)] = 0.25;
        let r = check_sos4_feasible(&m, TOL_PSD).unwrap();
        assert!(!r.ok);
        assert_eq!(r.max_symmetry_violation, 0.25);
    }

    #[test]
    fn sos4_reports_odd_entry() {
        let mut m = Degree4MomentMatrix::identity(3);
        m.entries[(0, 1)] = 1e-300;
        m.entries[(1, 0)] = 1e-300;
        let r = check_sos4_feasible(&m, TOL_PSD).unwrap();
        assert!(!r.ok);
        assert!(r.max_odd_entry > 0.0);
    }

    #[test]
    fn sos4_dimension_mismatch() {
        let m = Degree4MomentMatrix {
            n: 3,
            eta: 0.0,
            entries: DMatrix::identity(5, 5),
        };
        assert!(matches!(
            check_sos4_feasible(&m, TOL_PSD),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn objectives() {
        let x = Degree2Solution::identity(4);
        let zero = DMatrix::zeros(4, 4);
        assert_eq!(objective_deg2(&zero, &x).unwrap(), 0.0);
        assert_eq!(objective_deg2(&DMatrix::identity(4, 4), &x).unwrap(), 4.0);
        let m = Degree4MomentMatrix::identity(4);
        assert_eq!(objective_deg4(&DMatrix::identity(4, 4), &m).unwrap(), 4.0);
        assert!(objective_deg2(&DMatrix::identity(3, 3), &x).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 1.0]);
        let s = Degree2Solution::new(x, serde_json::json!({"kind": "test"})).unwrap();
        let back = Degree2Solution::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);

        let m = Degree4MomentMatrix::identity(2);
        let back = Degree4MomentMatrix::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(Degree4MomentMatrix::from_json(&s.to_json().unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 0usize..40) {
            let map = MomentIndexMap::new(n);
            for (k, s) in map.subsets().into_iter().enumerate() {
                prop_assert_eq!(map.subset_of(k).unwrap(), s);
                prop_assert_eq!(map.index_of_subset(s), k);
            }
        }

        #[test]
        fn identity_objective_is_n(n in 1usize..30, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let v = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() - 0.5);
            let mut g = &v * v.transpose();
            for i in 0..n {
                let d = g[(i, i)].sqrt();
                for j in 0..n { g[(i, j)] /= d; g[(j, i)] /= d; }
            }
            for i in 0..n { g[(i, i)] = 1.0; }
            let x = Degree2Solution::new(g, Value::Null).unwrap();
            prop_assert_eq!(objective_deg2(&DMatrix::identity(n, n), &x).unwrap(), n as f64);
        }
    }
}
