//! Truncated super-polynomials in `t` with vector coefficients and
//! half-integer powers of `ħ`, kept as sparse maps.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use qperiods::algebra::rational::Rat;

pub type Mono = Vec<u8>;

#[derive(Clone, Debug, PartialEq)]
pub struct Ring {
    pub degrees: Vec<i32>,
    pub order: u32,
}

impl Ring {
    pub fn new(degrees: Vec<i32>, order: u32) -> Self {
        Ring { degrees, order }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn odd(&self, i: usize) -> bool {
        self.degrees[i].rem_euclid(2) == 1
    }

    pub fn one(&self) -> Mono {
        vec![0; self.len()]
    }

    pub fn unit(&self, i: usize) -> Mono {
        let mut m = self.one();
        m[i] = 1;
        m
    }

    pub fn total(m: &[u8]) -> u32 {
        m.iter().map(|&e| e as u32).sum()
    }

    pub fn parity(&self, m: &[u8]) -> bool {
        m.iter().enumerate().filter(|(i, &e)| e % 2 == 1 && self.odd(*i)).count() % 2 == 1
    }

    /// `t^a t^b` as `(±1, monomial)`: the odd letters of `a` followed by those
    /// of `b` are sorted and the sign is that of the sorting permutation.
    pub fn mul(&self, a: &[u8], b: &[u8]) -> Option<(Mono, bool)> {
        let m: Mono = a.iter().zip(b).map(|(x, y)| x + y).collect();
        if Ring::total(&m) > self.order {
            return None;
        }
        let mut letters: Vec<usize> = Vec::new();
        for side in [a, b] {
            for (i, &e) in side.iter().enumerate() {
                if self.odd(i) && e == 1 {
                    letters.push(i);
                }
            }
        }
        let mut seen = vec![false; self.len()];
        for &l in &letters {
            if seen[l] {
                return None;
            }
            seen[l] = true;
        }
        let mut inversions = 0;
        for i in 0..letters.len() {
            for j in i + 1..letters.len() {
                if letters[i] > letters[j] {
                    inversions += 1;
                }
            }
        }
        Some((m, inversions % 2 == 1))
    }

    /// All monomials of total order `p`.
    pub fn monomials(&self, p: u32) -> Vec<Mono> {
        let mut out = vec![vec![]];
        for i in 0..self.len() {
            let cap = if self.odd(i) { 1 } else { p as u8 };
            out = out.into_iter().flat_map(|m: Mono| (0..=cap).map(move |e| [m.clone(), vec![e]].concat())).collect();
        }
        out.retain(|m| Ring::total(m) == p);
        out.sort();
        out
    }

    /// Left derivative: move `t^a` to the front, then strip it.
    pub fn deriv(&self, m: &[u8], a: usize) -> Option<(Mono, Rat)> {
        if m[a] == 0 {
            return None;
        }
        let mut c = Rat::from_integer(m[a].into());
        if self.odd(a) {
            let before = (0..a).filter(|&i| self.odd(i) && m[i] == 1).count();
            if before % 2 == 1 {
                c = -c;
            }
        }
        let mut r = m.to_vec();
        r[a] -= 1;
        Some((r, c))
    }
}

/// `Σ ħ^{e/2} t^m ⊗ v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Elem {
    pub dim: usize,
    pub terms: BTreeMap<(i32, Mono), Vec<Rat>>,
}

fn is_zero(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

impl Elem {
    pub fn zero(dim: usize) -> Self {
        Elem { dim, terms: BTreeMap::new() }
    }

    pub fn single(dim: usize, e: i32, m: Mono, v: Vec<Rat>) -> Self {
        let mut x = Elem::zero(dim);
        x.add(e, m, &v);
        x
    }

    pub fn add(&mut self, e: i32, m: Mono, v: &[Rat]) {
        let slot = self.terms.entry((e, m)).or_insert_with(|| vec![Rat::zero(); v.len()]);
        for (a, b) in slot.iter_mut().zip(v) {
            *a += b;
        }
        let key = self.terms.iter().find(|(_, v)| is_zero(v)).map(|(k, _)| k.clone());
        if let Some(k) = key {
            self.terms.remove(&k);
        }
    }

    pub fn plus(&self, other: &Elem) -> Elem {
        let mut out = self.clone();
        for ((e, m), v) in &other.terms {
            out.add(*e, m.clone(), v);
        }
        out
    }

    pub fn scaled(&self, c: &Rat) -> Elem {
        let mut out = Elem::zero(self.dim);
        for ((e, m), v) in &self.terms {
            out.add(*e, m.clone(), &v.iter().map(|x| x * c).collect::<Vec<_>>());
        }
        out
    }

    pub fn minus(&self, other: &Elem) -> Elem {
        self.plus(&other.scaled(&-Rat::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn truncated(&self, p: u32) -> Elem {
        let mut out = self.clone();
        out.terms.retain(|(_, m), _| Ring::total(m) <= p);
        out
    }

    pub fn at(&self, e: i32, m: &[u8]) -> Vec<Rat> {
        self.terms.get(&(e, m.to_vec())).cloned().unwrap_or_else(|| vec![Rat::zero(); self.dim])
    }

    pub fn halfsteps(&self) -> Vec<i32> {
        let mut hs: Vec<i32> = self.terms.keys().map(|(e, _)| *e).collect();
        hs.sort_unstable();
        hs.dedup();
        hs
    }

    pub fn deriv(&self, ring: &Ring, a: usize) -> Elem {
        let mut out = Elem::zero(self.dim);
        for ((e, m), v) in &self.terms {
            if let Some((r, c)) = ring.deriv(m, a) {
                out.add(*e, r, &v.iter().map(|x| x * &c).collect::<Vec<_>>());
            }
        }
        out
    }

    /// Applies a linear map to every coefficient (no sign: the map is even
    /// or the caller accounts for it).
    pub fn map(&self, out_dim: usize, f: impl Fn(&[Rat]) -> Vec<Rat>) -> Elem {
        let mut out = Elem::zero(out_dim);
        for ((e, m), v) in &self.terms {
            out.add(*e, m.clone(), &f(v));
        }
        out
    }

    /// `λ · x` for a scalar element `λ` (dimension 1) on the left.
    pub fn scalar_mul(ring: &Ring, lambda: &Elem, x: &Elem) -> Elem {
        let mut out = Elem::zero(x.dim);
        for ((e1, m1), c) in &lambda.terms {
            for ((e2, m2), v) in &x.terms {
                if let Some((m, neg)) = ring.mul(m1, m2) {
                    let f = if neg { -c[0].clone() } else { c[0].clone() };
                    out.add(e1 + e2, m, &v.iter().map(|y| y * &f).collect::<Vec<_>>());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_letters_anticommute() {
        let r = Ring::new(vec![1, 1, 0], 3);
        let (m, neg) = r.mul(&r.unit(1), &r.unit(0)).unwrap();
        assert_eq!((m, neg), (vec![1, 1, 0], true));
        assert!(r.mul(&r.unit(0), &r.unit(0)).is_none());
        assert_eq!(r.mul(&r.unit(2), &r.unit(0)).unwrap().1, false);
    }

    #[test]
    fn monomial_counts() {
        let r = Ring::new(vec![1, 0], 2);
        assert_eq!(r.monomials(2), vec![vec![0, 2], vec![1, 1]]);
    }
}
