//! Spectral norm certificates for the error components.
//!
//! Each monomial of an error polynomial defines a matrix over tuples of
//! distinct labels. It is factored as a product of simple matrices, walking
//! from the column labels to the row labels one label at a time:
//!
//! * residue: multiply by c_uv for two active labels, norm ≤ α_mag;
//! * growth: introduce a label w next to an active u via one copy of c_uw,
//!   norm ≤ α_row;
//! * swap: introduce the last row label w while dropping x through all e
//!   copies of c_xw, norm ≤ α_op (e = 1) or α_row²·α_mag^{e−2};
//! * shrink: after every row label is present, drop x through all e copies
//!   of its single remaining edge c_xu, norm ≤ α_row·α_mag^{e−1}.
//!
//! Labels that coexist in an index are distinct by construction, and a
//! swapped pair is distinct because the swap matrix has zero diagonal, so
//! the product reproduces the injective sum exactly.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::components::error_polynomial;
use super::poly::Monomial;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub alpha_mag: f64,
    pub alpha_row: f64,
    pub alpha_op: f64,
}

impl NormParams {
    pub fn from_matrix(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        let mut alpha_mag: f64 = 0.0;
        let mut alpha_row: f64 = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if i != j {
                    alpha_mag = alpha_mag.max(x[(i, j)].abs());
                    row += x[(i, j)] * x[(i, j)];
                }
            }
            alpha_row = alpha_row.max(row);
        }
        NormParams {
            alpha_mag,
            alpha_row: alpha_row.sqrt(),
            alpha_op: linalg::sym_norm(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step {
    Residue { u: usize, v: usize },
    Grow { from: usize, new: usize },
    Swap { drop: usize, new: usize, copies: u32 },
    Shrink { drop: usize, to: usize, copies: u32 },
}

impl Step {
    fn cost(&self, p: &NormParams) -> f64 {
        match *self {
            Step::Residue { .. } => p.alpha_mag,
            Step::Grow { .. } => p.alpha_row,
            Step::Swap { copies: 1, .. } => p.alpha_op,
            Step::Swap { copies, .. } => p.alpha_row * p.alpha_row * p.alpha_mag.powi(copies as i32 - 2),
            Step::Shrink { copies, .. } => p.alpha_row * p.alpha_mag.powi(copies as i32 - 1),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::Residue { u, v } => write!(f, "R({u}{v})"),
            Step::Grow { from, new } => write!(f, "G({from}->{new})"),
            Step::Swap { drop, new, copies } => write!(f, "W({drop}->{new})^{copies}"),
            Step::Shrink { drop, to, copies } => write!(f, "S({drop}->{to})^{copies}"),
        }
    }
}

const LABELS: usize = 4;

fn slot(u: usize, v: usize) -> usize {
    super::poly::pair_slot(u, v)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    active: u8,
    introduced: u8,
    rem: [u8; 6],
}

struct Search<'a> {
    rows: u8,
    p: &'a NormParams,
    memo: HashMap<State, Option<(f64, Vec<Step>)>>,
}

impl Search<'_> {
    fn best(&mut self, s: State) -> Option<(f64, Vec<Step>)> {
        if let Some(v) = self.memo.get(&s) {
            return v.clone();
        }
        let mut best: Option<(f64, Vec<Step>)> = None;
        if s.active == self.rows && s.rem.iter().all(|&e| e == 0) {
            best = Some((1.0, Vec::new()));
        } else {
            for (step, next) in self.moves(&s) {
                if let Some((c, mut path)) = self.best(next) {
                    let total = c * step.cost(self.p);
                    if best.as_ref().is_none_or(|b| total < b.0) {
                        path.insert(0, step);
                        best = Some((total, path));
                    }
                }
            }
        }
        self.memo.insert(s, best.clone());
        best
    }

    fn moves(&self, s: &State) -> Vec<(Step, State)> {
        let on = |m: u8, u: usize| m >> u & 1 == 1;
        let rem = |u: usize, v: usize| if u == v { 0 } else { s.rem[slot(u, v)] };
        let mut out = Vec::new();
        let pending: Vec<usize> = (0..LABELS).filter(|&w| on(self.rows, w) && !on(s.introduced, w)).collect();

        for u in 0..LABELS {
            for v in u + 1..LABELS {
                if on(s.active, u) && on(s.active, v) && rem(u, v) > 0 {
                    let mut n = *s;
                    n.rem[slot(u, v)] -= 1;
                    out.push((Step::Residue { u, v }, n));
                }
            }
        }

        for &w in &pending {
            for u in (0..LABELS).filter(|&u| on(s.active, u) && rem(u, w) > 0) {
                let mut n = *s;
                n.rem[slot(u, w)] -= 1;
                n.active |= 1 << w;
                n.introduced |= 1 << w;
                out.push((Step::Grow { from: u, new: w }, n));
            }
        }

        // labels whose only remaining edges go to `to`
        let droppable = |x: usize, to: usize| -> Option<u32> {
            let e = rem(x, to);
            let others = (0..LABELS).filter(|&y| y != x && y != to).all(|y| rem(x, y) == 0);
            (e > 0 && others).then_some(e as u32)
        };

        if let [w] = pending[..] {
            for x in (0..LABELS).filter(|&x| on(s.active, x) && !on(self.rows, x)) {
                if let Some(e) = droppable(x, w) {
                    let mut n = *s;
                    n.rem[slot(x, w)] = 0;
                    n.active = (n.active & !(1 << x)) | 1 << w;
                    n.introduced |= 1 << w;
                    out.push((Step::Swap { drop: x, new: w, copies: e }, n));
                }
            }
        }

        if pending.is_empty() {
            for x in (0..LABELS).filter(|&x| on(s.active, x) && !on(self.rows, x)) {
                for to in (0..LABELS).filter(|&u| u != x && on(s.active, u)) {
                    if let Some(e) = droppable(x, to) {
                        let mut n = *s;
                        n.rem[slot(x, to)] = 0;
                        n.active &= !(1 << x);
                        out.push((Step::Shrink { drop: x, to, copies: e }, n));
                    }
                }
            }
        }
        out
    }
}

fn mask(labels: &[usize]) -> u8 {
    labels.iter().fold(0, |m, &u| m | 1 << u)
}

/// Cheapest factorization of the matrix of one monomial from `cols` to `rows`.
pub fn monomial_path(m: &Monomial, rows: &[usize], cols: &[usize], p: &NormParams) -> Result<(f64, Vec<Step>)> {
    let mut rem = [0u8; 6];
    for (&(u, v), &e) in m {
        if v >= LABELS {
            return Err(Error::Param(format!("label {v} outside 0..{LABELS}")));
        }
        rem[slot(u, v)] = e as u8;
    }
    let start = State {
        active: mask(cols),
        introduced: mask(cols),
        rem,
    };
    let mut search = Search {
        rows: mask(rows),
        p,
        memo: HashMap::new(),
    };
    search
        .best(start)
        .ok_or_else(|| Error::NoFactorization(format!("{m:?} from {cols:?} to {rows:?}")))
}

/// (rows, cols, scale) for each component. The scale undoes the passage from
/// unordered pair indices to ordered tuples.
fn layout(k: usize) -> Result<(&'static [usize], &'static [usize], f64)> {
    match k {
        1 => Ok((&[0, 1], &[0, 1], 1.0)),
        2 => Ok((&[0], &[1], 1.0)),
        3 => Ok((&[0, 1], &[1, 2], 2.0)),
        4 => Ok((&[0, 1], &[2, 3], 0.5)),
        _ => Err(Error::Param(format!("error component {k} does not exist"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermBound {
    pub monomial: String,
    pub coefficient: f64,
    pub path: Vec<Step>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub component: usize,
    pub scale: f64,
    pub terms: Vec<TermBound>,
    pub bound: f64,
}

fn monomial_name(m: &Monomial) -> String {
    if m.is_empty() {
        return "1".into();
    }
    m.iter()
        .map(|(&(u, v), &e)| if e > 1 { format!("c{u}{v}^{e}") } else { format!("c{u}{v}") })
        .collect::<Vec<_>>()
        .join("*")
}

pub fn component_certificate(k: usize, p: &NormParams) -> Result<Certificate> {
    let (rows, cols, scale) = layout(k)?;
    let poly = error_polynomial(k)?;
    let mut terms = Vec::with_capacity(poly.len());
    let mut bound = 0.0;
    for (m, c) in poly.terms() {
        let coefficient = *c.numer() as f64 / *c.denom() as f64;
        let (cost, path) = monomial_path(m, rows, cols, p)?;
        bound += coefficient.abs() * cost;
        terms.push(TermBound {
            monomial: monomial_name(m),
            coefficient,
            path,
            cost,
        });
    }
    Ok(Certificate {
        component: k,
        scale,
        terms,
        bound: scale * bound,
    })
}

/// Certified upper bound on ‖E^(k)‖.
pub fn factorization_norm_bound(k: usize, p: &NormParams) -> Result<f64> {
    component_certificate(k, p).map(|c| c.bound)
}

/// Bound on the c_xz-only part of E^(3): (4/3!)·2·α_row²·α_mag.
pub fn e3_sparse_bound(p: &NormParams) -> f64 {
    4.0 / 6.0 * 2.0 * p.alpha_row * p.alpha_row * p.alpha_mag
}
