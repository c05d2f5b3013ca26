//! Monic probabilists' Hermite polynomials and the pseudocalibration
//! coefficient for the planted Boolean-vector-in-subspace distribution.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// h_k(x) by h_{k+1} = x·h_k − k·h_{k−1}.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// An n×d exponent matrix α together with the set L ⊆ [n].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndex {
    pub alpha: DMatrix<u32>,
    pub l: Vec<usize>,
}

impl MultiIndex {
    pub fn new(alpha: DMatrix<u32>, mut l: Vec<usize>) -> Result<Self> {
        l.sort_unstable();
        l.dedup();
        if let Some(&i) = l.iter().find(|&&i| i >= alpha.nrows()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: alpha.nrows(),
            });
        }
        Ok(MultiIndex { alpha, l })
    }

    pub fn row_sum(&self, i: usize) -> u32 {
        self.alpha.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u32 {
        self.alpha.column(j).iter().sum()
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// ∏_{a,b} 1/α_ab! · ∏_i h_{|α_i|}(1)/d^{|α_i|/2} when every |α_i| has the
/// parity of [i ∈ L] and every column sum is even; 0 otherwise.
pub fn pseudocal_coefficient(idx: &MultiIndex, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Param("d must be at least 1".into()));
    }
    let a = &idx.alpha;
    for i in 0..a.nrows() {
        let in_l = idx.l.binary_search(&i).is_ok() as u32;
        if idx.row_sum(i) % 2 != in_l {
            return Ok(0.0);
        }
    }
    if (0..a.ncols()).any(|j| idx.col_sum(j) % 2 == 1) {
        return Ok(0.0);
    }
    let mut v = 1.0;
    for &e in a.iter() {
        v /= factorial(e);
    }
    for i in 0..a.nrows() {
        let r = idx.row_sum(i);
        v *= hermite(r as usize, 1.0) / (d as f64).powf(r as f64 / 2.0);
    }
    // h_r(1) vanishes for some r; report +0 rather than −0
    Ok(v + 0.0)
}
