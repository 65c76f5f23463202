//! Operator-valued truncated series and their `ħ`-Laurent extensions.
//!
//! An [`OpSeries`] is a sum `Σ m ⊗ A_m` of matrices with monomial
//! coefficients, homogeneous of a fixed total parity; the matrix at `m` has
//! parity `parity + |m|`. It acts on vector series by
//! `(m ⊗ A)(m' ⊗ v) = (-1)^{|A||m'|} m m' ⊗ A v`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::hbar::HbarElement;
use super::matrix::Matrix;
use super::rational::{factorial, Rat};
use super::series::{Monomial, SuperSeries, VarSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OpSeries {
    vars: Arc<VarSpace>,
    rows: usize,
    cols: usize,
    parity: bool,
    terms: BTreeMap<Monomial, Matrix>,
}

impl OpSeries {
    pub fn zero(vars: &Arc<VarSpace>, rows: usize, cols: usize, parity: bool) -> Self {
        OpSeries { vars: vars.clone(), rows, cols, parity, terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VarSpace>, a: Matrix, parity: bool) -> Self {
        let mut out = Self::zero(vars, a.rows(), a.cols(), parity);
        out.add_term(vars.one(), a);
        out
    }

    pub fn identity(vars: &Arc<VarSpace>, n: usize) -> Self {
        Self::constant(vars, Matrix::identity(n), false)
    }

    pub fn vars(&self) -> &Arc<VarSpace> {
        &self.vars
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Matrix)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, a: Matrix) {
        assert_eq!((a.rows(), a.cols()), (self.rows, self.cols), "operator shape");
        if self.vars.order_of(&m) > self.vars.order() || a.is_zero() {
            return;
        }
        let cur = match self.terms.remove(&m) {
            Some(c) => c.add(&a),
            None => a,
        };
        if !cur.is_zero() {
            self.terms.insert(m, cur);
        }
    }

    pub fn add(&self, other: &OpSeries) -> Result<OpSeries> {
        if self.parity != other.parity && !self.is_zero() && !other.is_zero() {
            return Err(Error::Grading("sum of operators of different parity".into()));
        }
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension("operator shapes differ".into()));
        }
        let mut out = if self.is_zero() { OpSeries { parity: other.parity, ..self.clone() } } else { self.clone() };
        for (m, a) in &other.terms {
            out.add_term(m.clone(), a.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OpSeries) -> Result<OpSeries> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> OpSeries {
        let mut out = Self::zero(&self.vars, self.rows, self.cols, self.parity);
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a.scale(c));
        }
        out
    }

    fn term_parity(&self, m: &Monomial) -> bool {
        self.parity ^ self.vars.parity(m)
    }

    pub fn apply(&self, s: &SuperSeries) -> Result<SuperSeries> {
        if s.dim() != self.cols {
            return Err(Error::Dimension(format!("operator expects dim {}, got {}", self.cols, s.dim())));
        }
        let mut out = SuperSeries::zero(&self.vars, self.rows);
        for (m, a) in &self.terms {
            let pa = self.term_parity(m);
            for (m2, v) in s.terms() {
                if let Some((mm, neg)) = self.vars.mul(m, m2) {
                    let mut w = a.apply(v);
                    if neg ^ (pa && self.vars.parity(m2)) {
                        w.iter_mut().for_each(|x| *x = -x.clone());
                    }
                    out.add_term(mm, w);
                }
            }
        }
        Ok(out)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OpSeries) -> Result<OpSeries> {
        if self.cols != other.rows {
            return Err(Error::Dimension("operator composition shapes".into()));
        }
        let mut out = Self::zero(&self.vars, self.rows, other.cols, self.parity ^ other.parity);
        for (m, a) in &self.terms {
            let pa = self.term_parity(m);
            for (m2, b) in &other.terms {
                if let Some((mm, neg)) = self.vars.mul(m, m2) {
                    let mut ab = a.mul(b);
                    if neg ^ (pa && self.vars.parity(m2)) {
                        ab = ab.scale(&-Rat::one());
                    }
                    out.add_term(mm, ab);
                }
            }
        }
        Ok(out)
    }

    /// Graded commutator `[X, Y] = XY - (-1)^{|X||Y|} YX`.
    pub fn commutator(&self, other: &OpSeries) -> Result<OpSeries> {
        let xy = self.compose(other)?;
        let yx = other.compose(self)?;
        if self.parity && other.parity {
            xy.add(&yx)
        } else {
            xy.sub(&yx)
        }
    }

    /// The matrix whose columns are the images of constant basis vectors,
    /// i.e. the operator itself, viewed as `(monomial -> matrix)`.
    pub fn coefficient(&self, m: &Monomial) -> Matrix {
        self.terms.get(m).cloned().unwrap_or_else(|| Matrix::zeros(self.rows, self.cols))
    }

    /// `exp(X) = Σ X^k/k!`; `X` must be even and nilpotent (no constant term).
    pub fn exp(&self) -> Result<OpSeries> {
        if self.parity {
            return Err(Error::Grading("exponential of an odd operator".into()));
        }
        if self.terms.contains_key(&self.vars.one()) {
            return Err(Error::Invalid("exponential of a non-nilpotent operator".into()));
        }
        let mut out = Self::identity(&self.vars, self.rows);
        let mut power = out.clone();
        for k in 1..=self.vars.nilpotency_bound() {
            power = power.compose(self)?;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(&(Rat::one() / factorial(k))))?;
        }
        Ok(out)
    }
}

/// `Σ_e ħ^{e/2} X_e` with operator-series coefficients of a common parity.
#[derive(Clone, Debug, PartialEq)]
pub struct HbarOperator {
    vars: Arc<VarSpace>,
    rows: usize,
    cols: usize,
    parity: bool,
    terms: BTreeMap<i32, OpSeries>,
}

impl HbarOperator {
    pub fn zero(vars: &Arc<VarSpace>, rows: usize, cols: usize, parity: bool) -> Self {
        HbarOperator { vars: vars.clone(), rows, cols, parity, terms: BTreeMap::new() }
    }

    pub fn from_terms(vars: &Arc<VarSpace>, rows: usize, cols: usize, parity: bool, parts: Vec<(i32, OpSeries)>) -> Result<Self> {
        let mut out = Self::zero(vars, rows, cols, parity);
        for (e, x) in parts {
            out.add_at(e, &x)?;
        }
        Ok(out)
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &OpSeries)> {
        self.terms.iter().map(|(&e, x)| (e, x))
    }

    pub fn coefficient(&self, e: i32) -> OpSeries {
        self.terms.get(&e).cloned().unwrap_or_else(|| OpSeries::zero(&self.vars, self.rows, self.cols, self.parity))
    }

    pub fn add_at(&mut self, e: i32, x: &OpSeries) -> Result<()> {
        if x.is_zero() {
            return Ok(());
        }
        if x.parity != self.parity {
            return Err(Error::Grading("operator parity mismatch".into()));
        }
        let cur = match self.terms.remove(&e) {
            Some(c) => c.add(x)?,
            None => x.clone(),
        };
        if !cur.is_zero() {
            self.terms.insert(e, cur);
        }
        Ok(())
    }

    pub fn add(&self, other: &HbarOperator) -> Result<HbarOperator> {
        let mut out = self.clone();
        for (&e, x) in &other.terms {
            out.add_at(e, x)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HbarOperator) -> Result<HbarOperator> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> HbarOperator {
        let mut out = Self::zero(&self.vars, self.rows, self.cols, self.parity);
        if !c.is_zero() {
            for (&e, x) in &self.terms {
                out.terms.insert(e, x.scale(c));
            }
        }
        out
    }

    pub fn compose(&self, other: &HbarOperator) -> Result<HbarOperator> {
        let mut out = Self::zero(&self.vars, self.rows, other.cols, self.parity ^ other.parity);
        for (&e, x) in &self.terms {
            for (&f, y) in &other.terms {
                out.add_at(e + f, &x.compose(y)?)?;
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &HbarOperator) -> Result<HbarOperator> {
        let xy = self.compose(other)?;
        let yx = other.compose(self)?;
        if self.parity && other.parity {
            xy.add(&yx)
        } else {
            xy.sub(&yx)
        }
    }

    pub fn apply(&self, v: &HbarElement) -> Result<HbarElement> {
        let mut out = HbarElement::zero(&self.vars, self.rows, v.window());
        for (&e, x) in &self.terms {
            for (f, s) in v.terms() {
                out.add_at(e + f, &x.apply(s)?)?;
            }
        }
        Ok(out)
    }

    /// `exp(X)` for an even operator that is nilpotent through its series part.
    pub fn exp(&self) -> Result<HbarOperator> {
        if self.parity {
            return Err(Error::Grading("exponential of an odd operator".into()));
        }
        let one = self.vars.one();
        if self.terms.values().any(|x| x.terms.contains_key(&one)) {
            return Err(Error::Invalid("exponential of a non-nilpotent operator".into()));
        }
        let mut out = Self::from_terms(&self.vars, self.rows, self.rows, false, vec![(0, OpSeries::identity(&self.vars, self.rows))])?;
        let mut power = out.clone();
        for k in 1..=self.vars.nilpotency_bound() {
            power = power.compose(self)?;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(&(Rat::one() / factorial(k))))?;
        }
        Ok(out)
    }
}

/// Applies `exp(X)` to `v` without forming the operator exponential.
/// `X` must be even and nilpotent.
pub fn apply_exp(x: &HbarOperator, v: &HbarElement) -> Result<HbarElement> {
    let mut out = v.clone();
    let mut term = v.clone();
    for k in 1..=x.vars.nilpotency_bound() {
        term = x.apply(&term)?.scale(&(Rat::one() / Rat::from_integer(k.into())));
        if term.is_zero() {
            break;
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;
    use crate::algebra::series::Variable;

    fn space() -> Arc<VarSpace> {
        VarSpace::new(vec![Variable::new("s", 1), Variable::new("t", 0)], 3)
    }

    fn odd_op(vars: &Arc<VarSpace>) -> OpSeries {
        // odd total parity; constant part odd matrix, t-part odd, s-part even matrix
        let mut x = OpSeries::zero(vars, 2, 2, true);
        x.add_term(vars.one(), Matrix::from_rows(vec![vec![rat(0), rat(1)], vec![rat(0), rat(0)]]));
        x.add_term(vars.unit(0), Matrix::from_rows(vec![vec![rat(2), rat(0)], vec![rat(1), rat(-1)]]));
        x.add_term(vars.unit(1), Matrix::from_rows(vec![vec![rat(1), rat(1)], vec![rat(0), rat(3)]]));
        x
    }

    #[test]
    fn composition_matches_successive_application() {
        let vs = space();
        let x = odd_op(&vs);
        let y = odd_op(&vs).scale(&rat(-2));
        let mut s = SuperSeries::zero(&vs, 2);
        s.add_term(vs.unit(0), vec![rat(1), rat(2)]);
        s.add_term(vs.one(), vec![rat(-1), rat(5)]);
        s.add_term(vs.unit(1), vec![rat(0), rat(1)]);
        let lhs = x.compose(&y).unwrap().apply(&s).unwrap();
        let rhs = x.apply(&y.apply(&s).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn exp_of_nilpotent_series() {
        let vs = space();
        let mut x = OpSeries::zero(&vs, 1, 1, false);
        x.add_term(vs.unit(1), Matrix::identity(1));
        let e = x.exp().unwrap();
        // exp(t) = 1 + t + t^2/2 + t^3/6 at order 3
        let mut t3 = vs.one();
        t3.0[1] = 3;
        assert_eq!(e.coefficient(&t3), Matrix::identity(1).scale(&(Rat::one() / rat(6))));
    }
}
