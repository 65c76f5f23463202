//! Truncated super-commutative power series over exact rationals.
//!
//! A [`VarSpace`] fixes the ordered list of variables, their integer degrees
//! and the truncation order `N`. Monomials are stored with variables in
//! ascending index order; odd variables appear with exponent at most 1.
//! Products are computed in the quotient by the `(N+1)`-st power of the
//! maximal ideal, with the Koszul sign of reordering odd variables.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::rational::{format_rat, rat, zero, Rat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub degree: i32,
    /// Maximal exponent for an even variable (odd variables are capped at 1).
    pub cap: Option<u32>,
    /// Contribution of one power of this variable to the truncation order.
    pub weight: u32,
}

impl Variable {
    pub fn new(name: impl Into<String>, degree: i32) -> Self {
        Variable { name: name.into(), degree, cap: None, weight: 1 }
    }

    /// An even square-zero parameter that does not count towards the
    /// truncation order (used for first-order bookkeeping).
    pub fn marker(name: impl Into<String>) -> Self {
        Variable { name: name.into(), degree: 0, cap: Some(1), weight: 0 }
    }

    pub fn odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }

    fn max_exponent(&self) -> u32 {
        if self.odd() {
            1
        } else {
            self.cap.unwrap_or(u32::MAX)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSpace {
    vars: Vec<Variable>,
    order: u32,
}

impl VarSpace {
    pub fn new(vars: Vec<Variable>, order: u32) -> Arc<Self> {
        assert!(vars.len() < 256, "too many variables");
        assert!(vars.iter().all(|v| v.weight > 0 || v.odd() || v.cap.is_some()), "weightless variables need a cap");
        Arc::new(VarSpace { vars, order })
    }

    /// This space with one more variable appended.
    pub fn extended(&self, extra: Variable) -> Arc<Self> {
        let mut vars = self.vars.clone();
        vars.push(extra);
        Self::new(vars, self.order)
    }

    /// Upper bound on the number of factors of positive order in a nonzero product.
    pub fn nilpotency_bound(&self) -> u32 {
        self.order + self.vars.iter().filter(|v| v.weight == 0).map(|v| v.max_exponent()).sum::<u32>()
    }

    /// Truncation order of a monomial (weighted exponent sum).
    pub fn order_of(&self, m: &Monomial) -> u32 {
        m.0.iter().zip(&self.vars).map(|(&e, v)| e as u32 * v.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn var(&self, a: usize) -> &Variable {
        &self.vars[a]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn degree(&self, m: &Monomial) -> i32 {
        m.0.iter().zip(&self.vars).map(|(&e, v)| e as i32 * v.degree).sum()
    }

    pub fn parity(&self, m: &Monomial) -> bool {
        self.degree(m).rem_euclid(2) == 1
    }

    pub fn one(&self) -> Monomial {
        Monomial(vec![0; self.vars.len()])
    }

    pub fn unit(&self, a: usize) -> Monomial {
        let mut e = vec![0; self.vars.len()];
        e[a] = 1;
        Monomial(e)
    }

    /// Product of two monomials with its Koszul sign; `None` if it vanishes
    /// in the truncated algebra.
    pub fn mul(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, bool)> {
        if self.order_of(a) + self.order_of(b) > self.order {
            return None;
        }
        let mut out = Vec::with_capacity(self.vars.len());
        let mut neg = false;
        // odd variables of `a` with index greater than the current index
        let mut odd_in_a_above: u32 = a
            .0
            .iter()
            .zip(&self.vars)
            .filter(|(&e, v)| v.odd() && e == 1)
            .count() as u32;
        for (i, v) in self.vars.iter().enumerate() {
            let (ea, eb) = (a.0[i] as u32, b.0[i] as u32);
            if v.odd() && ea == 1 {
                odd_in_a_above -= 1;
            }
            let e = ea + eb;
            if e > v.max_exponent() {
                return None;
            }
            if v.odd() && eb == 1 && odd_in_a_above % 2 == 1 {
                neg = !neg;
            }
            out.push(e as u8);
        }
        Some((Monomial(out), neg))
    }

    /// Left derivative `d/dt^a` of a monomial: coefficient and result.
    pub fn derivative(&self, m: &Monomial, a: usize) -> Option<(Monomial, Rat)> {
        let e = m.0[a];
        if e == 0 {
            return None;
        }
        let mut coeff = rat(e as i64);
        if self.vars[a].odd() {
            let before = (0..a).filter(|&i| self.vars[i].odd() && m.0[i] == 1).count();
            if before % 2 == 1 {
                coeff = -coeff;
            }
        }
        let mut out = m.clone();
        out.0[a] -= 1;
        Some((out, coeff))
    }

    /// All monomials of exactly the given order, in ascending lexicographic order.
    pub fn monomials_of_order(&self, p: u32) -> Vec<Monomial> {
        let n = self.vars.len();
        let mut out = Vec::new();
        let mut cur = vec![0u8; n];
        fn rec(vs: &VarSpace, i: usize, left: u32, cur: &mut Vec<u8>, out: &mut Vec<Monomial>) {
            if i == vs.vars.len() {
                if left == 0 {
                    out.push(Monomial(cur.clone()));
                }
                return;
            }
            let v = &vs.vars[i];
            let max = if v.weight == 0 { v.max_exponent() } else { (left / v.weight).min(v.max_exponent()) };
            for e in 0..=max {
                cur[i] = e as u8;
                rec(vs, i + 1, left - e * v.weight, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            if p == 0 {
                out.push(Monomial(vec![]));
            }
            return out;
        }
        rec(self, 0, p, &mut cur, &mut out);
        out.sort();
        out
    }

    pub fn all_monomials(&self) -> Vec<Monomial> {
        (0..=self.order).flat_map(|p| self.monomials_of_order(p)).collect()
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    self.vars[i].name.clone()
                } else {
                    format!("{}^{}", self.vars[i].name, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<u8>);

impl Monomial {
    /// Total exponent (equal to the truncation order when all weights are 1).
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }
}

/// Power series in the variables of a [`VarSpace`] with coefficients in a
/// `dim`-dimensional rational vector space (`dim == 1` for scalars).
#[derive(Clone, PartialEq)]
pub struct SuperSeries {
    vars: Arc<VarSpace>,
    dim: usize,
    terms: BTreeMap<Monomial, Vec<Rat>>,
}

fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

impl SuperSeries {
    pub fn zero(vars: &Arc<VarSpace>, dim: usize) -> Self {
        SuperSeries { vars: vars.clone(), dim, terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VarSpace>, v: Vec<Rat>) -> Self {
        let mut s = Self::zero(vars, v.len());
        s.add_term(vars.one(), v);
        s
    }

    pub fn scalar(vars: &Arc<VarSpace>, c: Rat) -> Self {
        Self::constant(vars, vec![c])
    }

    pub fn one(vars: &Arc<VarSpace>) -> Self {
        Self::scalar(vars, Rat::one())
    }

    /// The scalar series `t^a`.
    pub fn variable(vars: &Arc<VarSpace>, a: usize) -> Self {
        Self::term(vars, vars.unit(a), vec![Rat::one()])
    }

    pub fn term(vars: &Arc<VarSpace>, m: Monomial, v: Vec<Rat>) -> Self {
        let mut s = Self::zero(vars, v.len());
        s.add_term(m, v);
        s
    }

    pub fn vars(&self) -> &Arc<VarSpace> {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Vec<Rat>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Vec<Rat> {
        self.terms.get(m).cloned().unwrap_or_else(|| vec![zero(); self.dim])
    }

    /// Scalar coefficient (for `dim == 1`).
    pub fn coeff(&self, m: &Monomial) -> Rat {
        debug_assert_eq!(self.dim, 1);
        self.terms.get(m).map(|v| v[0].clone()).unwrap_or_else(zero)
    }

    pub fn constant_term(&self) -> Vec<Rat> {
        self.coefficient(&self.vars.one())
    }

    /// Adds `v` at monomial `m`; monomials beyond the truncation are dropped.
    pub fn add_term(&mut self, m: Monomial, v: Vec<Rat>) {
        assert_eq!(v.len(), self.dim, "coefficient dimension");
        if self.vars.order_of(&m) > self.vars.order() || is_zero_vec(&v) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(cur) => {
                for (c, x) in cur.iter_mut().zip(v) {
                    *c += x;
                }
                if is_zero_vec(cur) {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, v);
            }
        }
    }

    pub fn add_scaled_term(&mut self, m: Monomial, v: &[Rat], c: &Rat) {
        if c.is_zero() {
            return;
        }
        self.add_term(m, v.iter().map(|x| x * c).collect());
    }

    fn check_compatible(&self, other: &SuperSeries) -> Result<()> {
        if !Arc::ptr_eq(&self.vars, &other.vars) && *self.vars != *other.vars {
            return Err(Error::VariableMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.check_compatible(other)?;
        if self.dim != other.dim {
            return Err(Error::Dimension("series coefficient dimensions differ".into()));
        }
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_term(m.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SuperSeries {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, c: &Rat) -> SuperSeries {
        if c.is_zero() {
            return Self::zero(&self.vars, self.dim);
        }
        SuperSeries {
            vars: self.vars.clone(),
            dim: self.dim,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.iter().map(|x| x * c).collect())).collect(),
        }
    }

    /// Left multiplication by a scalar series: `(a * s)_{mm'} = ±a_m s_{m'}`.
    pub fn left_mul(a: &SuperSeries, s: &SuperSeries) -> Result<SuperSeries> {
        a.check_compatible(s)?;
        if a.dim != 1 {
            return Err(Error::Dimension("left factor must be scalar".into()));
        }
        let mut out = Self::zero(&s.vars, s.dim);
        for (ma, va) in &a.terms {
            for (ms, vs) in &s.terms {
                if let Some((m, neg)) = s.vars.mul(ma, ms) {
                    let c = if neg { -va[0].clone() } else { va[0].clone() };
                    out.add_scaled_term(m, vs, &c);
                }
            }
        }
        Ok(out)
    }

    /// Product of two scalar series.
    pub fn series_mul(a: &SuperSeries, b: &SuperSeries) -> Result<SuperSeries> {
        if b.dim != 1 {
            return Err(Error::Dimension("series_mul expects scalar series".into()));
        }
        Self::left_mul(a, b)
    }

    /// `s * c` for a scalar series `c` multiplied on the right.
    pub fn right_mul(s: &SuperSeries, c: &SuperSeries) -> Result<SuperSeries> {
        s.check_compatible(c)?;
        if c.dim != 1 {
            return Err(Error::Dimension("right factor must be scalar".into()));
        }
        let mut out = Self::zero(&s.vars, s.dim);
        for (ms, vs) in &s.terms {
            for (mc, vc) in &c.terms {
                if let Some((m, neg)) = s.vars.mul(ms, mc) {
                    let f = if neg { -vc[0].clone() } else { vc[0].clone() };
                    out.add_scaled_term(m, vs, &f);
                }
            }
        }
        Ok(out)
    }

    /// Applies `f` to every coefficient: `m ⊗ v -> (-1)^{parity·|m|} m ⊗ f(v)`.
    /// `parity` is the parity of the linear map being pushed past `m`.
    pub fn map_coefficients(&self, out_dim: usize, parity: bool, f: impl Fn(&[Rat]) -> Vec<Rat>) -> SuperSeries {
        let mut out = Self::zero(&self.vars, out_dim);
        for (m, v) in &self.terms {
            let w = f(v);
            if parity && self.vars.parity(m) {
                out.add_term(m.clone(), w.into_iter().map(|x| -x).collect());
            } else {
                out.add_term(m.clone(), w);
            }
        }
        out
    }

    pub fn component(&self, i: usize) -> SuperSeries {
        self.map_coefficients(1, false, |v| vec![v[i].clone()])
    }

    pub fn derivative(&self, a: usize) -> SuperSeries {
        let mut out = Self::zero(&self.vars, self.dim);
        for (m, v) in &self.terms {
            if let Some((dm, c)) = self.vars.derivative(m, a) {
                out.add_scaled_term(dm, v, &c);
            }
        }
        out
    }

    /// Terms of exactly order `p`.
    pub fn part_of_order(&self, p: u32) -> SuperSeries {
        SuperSeries {
            vars: self.vars.clone(),
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| self.vars.order_of(m) == p).map(|(m, v)| (m.clone(), v.clone())).collect(),
        }
    }

    /// Terms of order at most `p`.
    pub fn truncated(&self, p: u32) -> SuperSeries {
        SuperSeries {
            vars: self.vars.clone(),
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| self.vars.order_of(m) <= p).map(|(m, v)| (m.clone(), v.clone())).collect(),
        }
    }

    pub fn min_order(&self) -> Option<u32> {
        self.terms.keys().map(|m| self.vars.order_of(m)).min()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.terms.keys().map(|m| self.vars.order_of(m)).max()
    }

    /// The same coefficients viewed over another (equal) variable space handle.
    pub fn with_vars(&self, vars: &Arc<VarSpace>) -> SuperSeries {
        assert_eq!(**vars, *self.vars);
        SuperSeries { vars: vars.clone(), dim: self.dim, terms: self.terms.clone() }
    }

    /// The same series in a space with identical variables but another
    /// truncation order (terms above it are dropped).
    pub fn reordered(&self, vars: &Arc<VarSpace>) -> Result<SuperSeries> {
        if vars.vars() != self.vars.vars() {
            return Err(Error::VariableMismatch);
        }
        let terms = self.terms.iter().filter(|(m, _)| vars.order_of(m) <= vars.order()).map(|(m, v)| (m.clone(), v.clone())).collect();
        Ok(SuperSeries { vars: vars.clone(), dim: self.dim, terms })
    }

    /// Re-expresses this series in a space extending its own by extra
    /// trailing variables.
    pub fn embed(&self, into: &Arc<VarSpace>) -> Result<SuperSeries> {
        let n = self.vars.len();
        if into.len() < n || into.vars()[..n] != self.vars.vars()[..] || into.order() != self.vars.order() {
            return Err(Error::VariableMismatch);
        }
        let mut out = Self::zero(into, self.dim);
        for (m, v) in &self.terms {
            let mut e = m.0.clone();
            e.resize(into.len(), 0);
            out.add_term(Monomial(e), v.clone());
        }
        Ok(out)
    }

    /// Stacks scalar/vector series into one with concatenated coefficients.
    pub fn from_components(vars: &Arc<VarSpace>, parts: &[SuperSeries]) -> SuperSeries {
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut out = Self::zero(vars, dim);
        let mut offset = 0;
        for p in parts {
            for (m, v) in &p.terms {
                let mut w = vec![zero(); dim];
                w[offset..offset + p.dim].clone_from_slice(v);
                out.add_term(m.clone(), w);
            }
            offset += p.dim;
        }
        out
    }

    /// Every monomial's total degree plus the degree of the coefficient basis
    /// vector equals `total` (the coefficient degrees are given by `basis_degrees`).
    pub fn is_homogeneous(&self, basis_degrees: &[i32], total: i32) -> bool {
        self.terms.iter().all(|(m, v)| {
            let dm = self.vars.degree(m);
            v.iter().zip(basis_degrees).all(|(x, &d)| x.is_zero() || dm + d == total)
        })
    }
}

impl fmt::Debug for SuperSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, v)| {
                let c: Vec<String> = v.iter().map(format_rat).collect();
                format!("{}·[{}]", self.vars.format_monomial(m), c.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(degs: &[i32], order: u32) -> Arc<VarSpace> {
        VarSpace::new(degs.iter().enumerate().map(|(i, &d)| Variable::new(format!("t{i}"), d)).collect(), order)
    }

    #[test]
    fn odd_variables_anticommute() {
        let vs = space(&[1, 1], 3);
        let t1 = SuperSeries::variable(&vs, 0);
        let t2 = SuperSeries::variable(&vs, 1);
        let a = SuperSeries::series_mul(&t1, &t2).unwrap();
        let b = SuperSeries::series_mul(&t2, &t1).unwrap();
        assert_eq!(a, b.neg());
        assert!(SuperSeries::series_mul(&t1, &t1).unwrap().is_zero());
    }

    #[test]
    fn unit_is_neutral() {
        let vs = space(&[0, 1], 3);
        let a = SuperSeries::variable(&vs, 0).add(&SuperSeries::variable(&vs, 1)).unwrap();
        assert_eq!(SuperSeries::series_mul(&a, &SuperSeries::one(&vs)).unwrap(), a);
    }

    #[test]
    fn truncation_drops_high_order() {
        let vs = space(&[0], 1);
        let p = SuperSeries::one(&vs).add(&SuperSeries::variable(&vs, 0)).unwrap();
        let sq = SuperSeries::series_mul(&p, &p).unwrap();
        let expected = SuperSeries::one(&vs).add(&SuperSeries::variable(&vs, 0).scale(&rat(2))).unwrap();
        assert_eq!(sq, expected);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = SuperSeries::one(&space(&[0], 2));
        let b = SuperSeries::one(&space(&[0], 3));
        assert_eq!(SuperSeries::series_mul(&a, &b).unwrap_err(), Error::VariableMismatch);
    }

    #[test]
    fn left_derivative_sign() {
        let vs = space(&[1, 1], 2);
        let t1t2 = SuperSeries::series_mul(&SuperSeries::variable(&vs, 0), &SuperSeries::variable(&vs, 1)).unwrap();
        // d/dt2 (t1 t2) = -t1
        assert_eq!(t1t2.derivative(1), SuperSeries::variable(&vs, 0).neg());
        assert_eq!(t1t2.derivative(0), SuperSeries::variable(&vs, 1));
    }

    #[test]
    fn monomial_enumeration_respects_caps() {
        let vs = space(&[0, 1], 3);
        assert_eq!(vs.monomials_of_order(2).len(), 2); // t0^2, t0 t1
        assert_eq!(vs.all_monomials().len(), 1 + 2 + 2 + 2);
    }
}
