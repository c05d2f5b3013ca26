//! Polynomials in the pairwise inner products c_uv = ⟨M[u],M[v]⟩ with exact
//! rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

pub type Coef = Ratio<i64>;

/// Exponents of c_uv (u < v). Self inner products are 1 and never stored.
pub type Monomial = BTreeMap<(usize, usize), u32>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Coef>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Coef) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn one() -> Self {
        Poly::constant(Coef::from_integer(1))
    }

    /// The inner product c_uv (equal to 1 when u = v).
    pub fn var(u: usize, v: usize) -> Self {
        Poly::monomial(&[(u, v, 1)], Coef::from_integer(1))
    }

    /// c · ∏ c_uv^e.
    pub fn monomial(factors: &[(usize, usize, u32)], c: Coef) -> Self {
        let mut m = Monomial::new();
        for &(u, v, e) in factors {
            if u != v && e > 0 {
                *m.entry(key(u, v)).or_insert(0) += e;
            }
        }
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Coef) {
        if c == Coef::from_integer(0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == Coef::from_integer(0) {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Coef::from_integer(-1)))
    }

    pub fn scale(&self, c: Coef) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), *v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (k, e) in mb {
                    *m.entry(*k).or_insert(0) += e;
                }
                out.add_term(m, *ca * *cb);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coef)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Coef {
        self.terms.get(m).copied().unwrap_or_else(|| Coef::from_integer(0))
    }

    /// Evaluate with `gram(u, v)` supplying c_uv for u < v.
    pub fn eval(&self, gram: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c.numer() as f64 / *c.denom() as f64;
            for (&(u, v), &e) in m {
                t *= gram(u, v).powi(e as i32);
            }
            acc += t;
        }
        acc
    }

    /// Rename labels through `f`.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let factors: Vec<(usize, usize, u32)> =
                m.iter().map(|(&(u, v), &e)| (f(u), f(v), e)).collect();
            out = out.add(&Poly::monomial(&factors, *c));
        }
        out
    }

    /// Largest label index appearing, if any.
    pub fn max_label(&self) -> Option<usize> {
        self.terms.keys().flat_map(|m| m.keys().map(|k| k.1)).max()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (&(u, v), &e) in m {
                write!(f, "·c{u}{v}")?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Index of the pair (u, v), u < v < 4, in the order 01, 02, 03, 12, 13, 23.
pub(crate) fn pair_slot(u: usize, v: usize) -> usize {
    let (u, v) = key(u, v);
    match (u, v) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("labels ({u},{v}) outside 0..4"),
    }
}

/// A polynomial over labels 0..4 flattened for fast evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, [u8; 6])>,
}

impl CompiledPoly {
    pub fn new(p: &Poly) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let mut e = [0u8; 6];
                for (&(u, v), &k) in m {
                    e[pair_slot(u, v)] = k as u8;
                }
                (*c.numer() as f64 / *c.denom() as f64, e)
            })
            .collect();
        CompiledPoly { terms }
    }

    /// `c` holds c01, c02, c03, c12, c13, c23.
    pub fn eval(&self, c: &[f64; 6]) -> f64 {
        let mut acc = 0.0;
        for (coef, e) in &self.terms {
            let mut t = *coef;
            for k in 0..6 {
                if e[k] > 0 {
                    t *= c[k].powi(e[k] as i32);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Coef {
        Coef::new(a, b)
    }

    #[test]
    fn arithmetic() {
        let x = Poly::var(0, 1);
        let y = Poly::var(1, 0);
        assert_eq!(x, y);
        let sq = x.mul(&y);
        assert_eq!(sq, Poly::monomial(&[(0, 1, 2)], r(1, 1)));
        assert!(x.sub(&y).is_zero());
        assert_eq!(Poly::var(2, 2), Poly::one());
        let p = x.add(&Poly::monomial(&[(0, 1, 3)], r(2, 3)));
        assert!((p.eval(|_, _| 0.5) - (0.5 + 2.0 / 3.0 * 0.125)).abs() < 1e-15);
    }

    #[test]
    fn compiled_matches_eval() {
        let p = Poly::monomial(&[(0, 1, 1), (2, 3, 2)], r(-4, 9))
            .add(&Poly::monomial(&[(0, 3, 3)], r(1, 6)));
        let c = [0.3, -0.2, 0.7, 0.1, -0.5, 0.9];
        let gram = |u: usize, v: usize| c[pair_slot(u, v)];
        assert!((CompiledPoly::new(&p).eval(&c) - p.eval(gram)).abs() < 1e-15);
    }

    #[test]
    fn relabel_moves_variables() {
        let p = Poly::monomial(&[(0, 1, 2)], r(1, 1));
        let q = p.relabel(|u| [5, 3][u]);
        assert_eq!(q, Poly::monomial(&[(3, 5, 2)], r(1, 1)));
    }
}
