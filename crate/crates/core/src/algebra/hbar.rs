//! Laurent polynomials in `ħ^{1/2}` with truncated-series vector coefficients.
//!
//! Exponents are stored as integer half-steps: the key `e` stands for `ħ^{e/2}`.
//! Every element carries a window of exponents it is allowed to occupy;
//! producing a term outside the window is an error, never a silent drop.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::rational::Rat;
use super::series::{SuperSeries, VarSpace};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Self {
        assert!(lo <= hi, "empty window");
        Window { lo, hi }
    }

    /// Default window for a run at order `order` over a space whose charges
    /// span `spread`: `[-2N - spread - 4, 2N + spread + 4]`.
    ///
    /// The extra margin covers the `ħ` factors of `d2` and of the
    /// Gauss–Manin operator applied to elements already at the edge.
    pub fn for_run(order: u32, spread: i32) -> Self {
        let w = 2 * order as i32 + spread.abs() + 4;
        Window { lo: -w, hi: w }
    }

    pub fn contains(&self, e: i32) -> bool {
        self.lo <= e && e <= self.hi
    }

    fn check(&self, e: i32) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::WindowExhausted { exponent: e, lo: self.lo, hi: self.hi })
        }
    }
}

#[derive(Clone)]
pub struct HbarElement {
    vars: Arc<VarSpace>,
    dim: usize,
    window: Window,
    terms: BTreeMap<i32, SuperSeries>,
}

impl PartialEq for HbarElement {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl HbarElement {
    pub fn zero(vars: &Arc<VarSpace>, dim: usize, window: Window) -> Self {
        HbarElement { vars: vars.clone(), dim, window, terms: BTreeMap::new() }
    }

    /// `ħ^{e/2} · s`.
    pub fn monomial(e: i32, s: SuperSeries, window: Window) -> Result<Self> {
        let mut out = Self::zero(s.vars(), s.dim(), window);
        out.add_at(e, &s)?;
        Ok(out)
    }

    /// The constant vector `v ħ^{e/2}`.
    pub fn constant(vars: &Arc<VarSpace>, e: i32, v: Vec<Rat>, window: Window) -> Result<Self> {
        Self::monomial(e, SuperSeries::constant(vars, v), window)
    }

    pub fn vars(&self) -> &Arc<VarSpace> {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &SuperSeries)> {
        self.terms.iter().map(|(&e, s)| (e, s))
    }

    pub fn exponents(&self) -> Vec<i32> {
        self.terms.keys().copied().collect()
    }

    pub fn coefficient(&self, e: i32) -> SuperSeries {
        self.terms.get(&e).cloned().unwrap_or_else(|| SuperSeries::zero(&self.vars, self.dim))
    }

    pub fn add_at(&mut self, e: i32, s: &SuperSeries) -> Result<()> {
        if s.dim() != self.dim {
            return Err(Error::Dimension("ħ-coefficient dimension".into()));
        }
        if s.is_zero() {
            return Ok(());
        }
        self.window.check(e)?;
        let cur = match self.terms.remove(&e) {
            Some(c) => c.add(s)?,
            None => s.with_vars(&self.vars),
        };
        if !cur.is_zero() {
            self.terms.insert(e, cur);
        }
        Ok(())
    }

    pub fn add(&self, other: &HbarElement) -> Result<HbarElement> {
        let mut out = self.clone();
        for (&e, s) in &other.terms {
            out.add_at(e, s)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HbarElement) -> Result<HbarElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> HbarElement {
        self.map_series(|s| s.neg())
    }

    pub fn scale(&self, c: &Rat) -> HbarElement {
        self.map_series(|s| s.scale(c))
    }

    /// Applies `f` to every coefficient series (result dimension taken from `f`).
    pub fn map_series(&self, f: impl Fn(&SuperSeries) -> SuperSeries) -> HbarElement {
        let mut terms = BTreeMap::new();
        let mut dim = self.dim;
        for (&e, s) in &self.terms {
            let r = f(s);
            dim = r.dim();
            if !r.is_zero() {
                terms.insert(e, r);
            }
        }
        HbarElement { vars: self.vars.clone(), dim, window: self.window, terms }
    }

    /// Multiplication by `ħ^{e/2}`.
    pub fn shift(&self, e: i32) -> Result<HbarElement> {
        let mut out = Self::zero(&self.vars, self.dim, self.window);
        for (&f, s) in &self.terms {
            out.add_at(e + f, s)?;
        }
        Ok(out)
    }

    /// Keeps the non-negative powers of `ħ` (the projection along `H[[ħ^{-1}]]`
    /// keeps `ħ^0`).
    pub fn project_plus(&self) -> HbarElement {
        HbarElement {
            vars: self.vars.clone(),
            dim: self.dim,
            window: self.window,
            terms: self.terms.iter().filter(|(&e, _)| e >= 0).map(|(&e, s)| (e, s.clone())).collect(),
        }
    }

    /// Product `λ · v` with a scalar element `λ` on the left.
    pub fn left_mul(lambda: &HbarElement, v: &HbarElement) -> Result<HbarElement> {
        if lambda.dim != 1 {
            return Err(Error::Dimension("left factor must be scalar".into()));
        }
        let mut out = Self::zero(&v.vars, v.dim, v.window);
        for (&e, a) in &lambda.terms {
            for (&f, s) in &v.terms {
                out.add_at(e + f, &SuperSeries::left_mul(a, s)?)?;
            }
        }
        Ok(out)
    }

    pub fn derivative(&self, a: usize) -> HbarElement {
        self.map_series(|s| s.derivative(a))
    }

    /// Keeps only monomials of order exactly `p`.
    pub fn part_of_order(&self, p: u32) -> HbarElement {
        self.map_series(|s| s.part_of_order(p))
    }

    pub fn truncated(&self, p: u32) -> HbarElement {
        self.map_series(|s| s.truncated(p))
    }

    /// Value at `t = 0`: exponent to constant vector.
    pub fn at_origin(&self) -> BTreeMap<i32, Vec<Rat>> {
        let one = self.vars.one();
        self.terms
            .iter()
            .filter_map(|(&e, s)| {
                let v = s.coefficient(&one);
                if v.iter().all(num_traits::Zero::is_zero) {
                    None
                } else {
                    Some((e, v))
                }
            })
            .collect()
    }

    pub fn with_window(&self, window: Window) -> Result<HbarElement> {
        for &e in self.terms.keys() {
            window.check(e)?;
        }
        Ok(HbarElement { window, ..self.clone() })
    }
}

impl fmt::Debug for HbarElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "ħ^({e}/2)·({s:?})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;
    use crate::algebra::series::Variable;

    fn setup() -> (Arc<VarSpace>, Window) {
        (VarSpace::new(vec![Variable::new("t", 0)], 2), Window::new(-8, 8))
    }

    fn h(vars: &Arc<VarSpace>, w: Window, exps: &[i32]) -> HbarElement {
        let mut out = HbarElement::zero(vars, 2, w);
        for &e in exps {
            out.add_at(e, &SuperSeries::constant(vars, vec![rat(1), rat(-3)])).unwrap();
        }
        out
    }

    #[test]
    fn project_plus_examples() {
        let (vs, w) = setup();
        assert!(h(&vs, w, &[-2]).project_plus().is_zero());
        assert_eq!(h(&vs, w, &[4]).project_plus(), h(&vs, w, &[4]));
        assert_eq!(h(&vs, w, &[-2, 0, 2]).project_plus(), h(&vs, w, &[0, 2]));
    }

    #[test]
    fn project_plus_splits() {
        let (vs, w) = setup();
        let v = h(&vs, w, &[-3, -1, 0, 1, 5]);
        let p = v.project_plus();
        assert_eq!(p.project_plus(), p);
        let rest = v.sub(&p).unwrap();
        assert!(rest.exponents().iter().all(|&e| e < 0));
        assert_eq!(p.add(&rest).unwrap(), v);
    }

    #[test]
    fn window_exhaustion_is_an_error() {
        let (vs, w) = setup();
        let v = h(&vs, w, &[8]);
        assert!(matches!(v.shift(1), Err(Error::WindowExhausted { exponent: 9, .. })));
    }
}
