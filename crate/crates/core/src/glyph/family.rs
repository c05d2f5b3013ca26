//! Monomial families (half-glyph products) and their κ→∞ expectations.
//!
//! A family is a coefficient times a sum over injective assignments of its
//! slots to [κ] of ∏_slots ∏_{u ∈ slot} M_κ[u, a_slot] · z_{a_slot}^{deg}.
//! Slots that share the same label neighborhood form a cluster and are summed
//! in increasing order, which is where the 1/|cluster|! factor comes from.
//!
//! In the limit only pairings survive: a degree-2 slot contributes the inner
//! product of its two labels, degree-1 slots from different families pair up
//! into inner products, and anything of higher degree vanishes.

use std::collections::BTreeMap;

use super::poly::{Coef, Monomial, Poly};
use crate::error::{Error, Result};

/// A middle vertex: the sorted multiset of labels it is joined to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub labels: Vec<usize>,
}

impl Slot {
    pub fn new(mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        Slot { labels }
    }

    pub fn degree(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialFamily {
    pub coefficient: Coef,
    pub slots: Vec<Slot>,
}

impl MonomialFamily {
    pub fn new(coefficient: Coef, slots: Vec<Vec<usize>>) -> Self {
        MonomialFamily {
            coefficient,
            slots: slots.into_iter().map(Slot::new).collect(),
        }
    }

    /// Distinct labels, sorted.
    pub fn labels(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.slots.iter().flat_map(|s| s.labels.clone()).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Degree in z after reducing z² = 1.
    pub fn z_degree(&self) -> usize {
        self.slots.iter().filter(|s| s.degree() % 2 == 1).count()
    }

    /// Clusters of slots with identical neighborhoods, with their sizes.
    pub fn clusters(&self) -> Vec<(Slot, usize)> {
        let mut c: BTreeMap<Slot, usize> = BTreeMap::new();
        for s in &self.slots {
            *c.entry(s.clone()).or_insert(0) += 1;
        }
        c.into_iter().collect()
    }

    /// ∏ |cluster|!.
    pub fn automorphism_factor(&self) -> i64 {
        self.clusters()
            .iter()
            .map(|(_, k)| (1..=*k as i64).product::<i64>())
            .product()
    }
}

fn int(k: i64) -> Coef {
    Coef::from_integer(k)
}

/// The seed polynomial q_u = L_u − 2·C_u as two families.
pub fn seed_families(u: usize) -> Vec<MonomialFamily> {
    vec![
        MonomialFamily::new(int(1), vec![vec![u]]),
        MonomialFamily::new(int(-2), vec![vec![u], vec![u], vec![u]]),
    ]
}

/// Families of the truncated polynomial p_S = q_S^{≤|S|} for |S| ∈ {1, 2}.
///
/// For S = {i, j} the six families A, B, C_(i,j), C_(j,i), D, E carry the
/// coefficients 1, 1, −2, −2, 4, 4.
pub fn truncated_polynomial_families(s: &[usize]) -> Result<Vec<MonomialFamily>> {
    match *s {
        [i] => Ok(vec![MonomialFamily::new(int(1), vec![vec![i]])]),
        [i, j] if i != j => Ok(vec![
            MonomialFamily::new(int(1), vec![vec![i, j]]),
            MonomialFamily::new(int(1), vec![vec![i], vec![j]]),
            MonomialFamily::new(int(-2), vec![vec![i, j], vec![j], vec![j]]),
            MonomialFamily::new(int(-2), vec![vec![i, j], vec![i], vec![i]]),
            MonomialFamily::new(int(4), vec![vec![i, j], vec![i, j], vec![i], vec![j]]),
            MonomialFamily::new(int(4), vec![vec![i, j], vec![i, j], vec![i, j]]),
        ]),
        _ => Err(Error::Param(format!(
            "truncated polynomials exist for |S| in {{1, 2}}, got {s:?}"
        ))),
    }
}

type MatchingVisitor<'a> = dyn FnMut(&[(usize, usize)]) + 'a;

/// Enumerate perfect matchings of `items` (family, label) that never pair two
/// items of the same family, calling `f` with the matched label pairs.
fn for_each_matching(
    items: &mut Vec<(usize, usize)>,
    acc: &mut Vec<(usize, usize)>,
    f: &mut MatchingVisitor,
) {
    if items.is_empty() {
        f(acc);
        return;
    }
    let first = items.remove(0);
    for k in 0..items.len() {
        if items[k].0 == first.0 {
            continue;
        }
        let other = items.remove(k);
        acc.push((first.1, other.1));
        for_each_matching(items, acc, f);
        acc.pop();
        items.insert(k, other);
    }
    items.insert(0, first);
}

/// Shared pre-processing: overall coefficient, fixed degree-2 pairs and the
/// degree-1 items. `None` when a slot of degree ≥ 3 kills the product.
#[allow(clippy::type_complexity)]
fn split(product: &[MonomialFamily]) -> Option<(Coef, Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    let mut coef = int(1);
    let mut fixed = Vec::new();
    let mut singles = Vec::new();
    for (fi, fam) in product.iter().enumerate() {
        coef *= fam.coefficient / int(fam.automorphism_factor());
        for s in &fam.slots {
            match s.degree() {
                1 => singles.push((fi, s.labels[0])),
                2 => fixed.push((s.labels[0], s.labels[1])),
                _ => return None,
            }
        }
    }
    if singles.len() % 2 == 1 {
        return None;
    }
    Some((coef, fixed, singles))
}

/// κ→∞ expectation of a product of families, as a polynomial in inner products.
pub fn limit_polynomial(product: &[MonomialFamily]) -> Poly {
    let Some((coef, fixed, mut singles)) = split(product) else {
        return Poly::zero();
    };
    let mut out = Poly::zero();
    let mut acc = Vec::new();
    for_each_matching(&mut singles, &mut acc, &mut |pairs| {
        let mut m = Monomial::new();
        for &(u, v) in fixed.iter().chain(pairs.iter()) {
            if u != v {
                *m.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        out.add_term(m, coef);
    });
    out
}

/// Numeric κ→∞ expectation of a product of families. `gram(u, v)` must return
/// ⟨M[u], M[v]⟩; it is never called with u = v.
pub fn limit_expectation(product: &[MonomialFamily], gram: &dyn Fn(usize, usize) -> f64) -> f64 {
    let Some((coef, fixed, mut singles)) = split(product) else {
        return 0.0;
    };
    let c = |u: usize, v: usize| if u == v { 1.0 } else { gram(u, v) };
    let base: f64 = fixed.iter().map(|&(u, v)| c(u, v)).product();
    let mut total = 0.0;
    let mut acc = Vec::new();
    for_each_matching(&mut singles, &mut acc, &mut |pairs| {
        total += pairs.iter().map(|&(u, v)| c(u, v)).product::<f64>();
    });
    *coef.numer() as f64 / *coef.denom() as f64 * base * total
}

fn for_each_choice(factors: &[Vec<MonomialFamily>], f: &mut dyn FnMut(&[MonomialFamily])) {
    let mut idx = vec![0usize; factors.len()];
    if factors.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut buf: Vec<MonomialFamily> = factors.iter().map(|l| l[0].clone()).collect();
    loop {
        f(&buf);
        let mut k = 0;
        loop {
            if k == factors.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < factors[k].len() {
                buf[k] = factors[k][idx[k]].clone();
                break;
            }
            idx[k] = 0;
            buf[k] = factors[k][0].clone();
            k += 1;
        }
    }
}

/// Expectation of a product of polynomials, each given as a sum of families.
pub fn expectation_polynomial(factors: &[Vec<MonomialFamily>]) -> Poly {
    let mut out = Poly::zero();
    for_each_choice(factors, &mut |choice| {
        out = out.add(&limit_polynomial(choice));
    });
    out
}

/// Numeric counterpart of [`expectation_polynomial`].
pub fn expectation_numeric(factors: &[Vec<MonomialFamily>], gram: &dyn Fn(usize, usize) -> f64) -> f64 {
    let mut out = 0.0;
    for_each_choice(factors, &mut |choice| {
        out += limit_expectation(choice, gram);
    });
    out
}

/// E[q_S] in the limit, symbolically.
pub fn set_polynomial(s: &[usize]) -> Poly {
    let factors: Vec<Vec<MonomialFamily>> = s.iter().map(|&u| seed_families(u)).collect();
    expectation_polynomial(&factors)
}

/// E[q_S] in the limit, numerically.
pub fn set_expectation(s: &[usize], gram: &dyn Fn(usize, usize) -> f64) -> f64 {
    let factors: Vec<Vec<MonomialFamily>> = s.iter().map(|&u| seed_families(u)).collect();
    expectation_numeric(&factors, gram)
}
