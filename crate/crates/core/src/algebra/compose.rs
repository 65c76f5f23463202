//! Coordinate changes between truncated super-coordinate systems.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;

use super::linalg::inverse;
use super::matrix::Matrix;
use super::series::{Monomial, SuperSeries, VarSpace};
use crate::error::{Error, Result};

/// A map `x ↦ (f^1(x), ..., f^k(x))`: component `a` is a scalar series in the
/// `source` variables giving the value of the `a`-th `target` coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordMap {
    pub source: Arc<VarSpace>,
    pub target: Arc<VarSpace>,
    pub components: Vec<SuperSeries>,
}

fn same_shape(a: &VarSpace, b: &VarSpace) -> bool {
    a.len() == b.len() && a.order() == b.order() && a.vars().iter().zip(b.vars()).all(|(x, y)| x.degree == y.degree && x.cap == y.cap && x.weight == y.weight)
}

impl CoordMap {
    pub fn new(source: &Arc<VarSpace>, target: &Arc<VarSpace>, components: Vec<SuperSeries>) -> Result<Self> {
        if components.len() != target.len() {
            return Err(Error::Dimension("one component per target coordinate".into()));
        }
        if components.iter().any(|c| c.dim() != 1 || c.vars() != source) {
            return Err(Error::VariableMismatch);
        }
        Ok(CoordMap { source: source.clone(), target: target.clone(), components })
    }

    pub fn identity(vars: &Arc<VarSpace>) -> Self {
        let components = (0..vars.len()).map(|a| SuperSeries::variable(vars, a)).collect();
        CoordMap { source: vars.clone(), target: vars.clone(), components }
    }

    /// Jacobian at the origin: `J[a][b]` = coefficient of `x^b` in `f^a`.
    pub fn linear_part(&self) -> Matrix {
        Matrix::from_fn(self.target.len(), self.source.len(), |a, b| self.components[a].coeff(&self.source.unit(b)))
    }

    /// `f ∘ g`, where `g` lands in the coordinates `f` is written in.
    pub fn compose(&self, g: &CoordMap) -> Result<CoordMap> {
        if !same_shape(&self.source, &g.target) {
            return Err(Error::VariableMismatch);
        }
        let components = self.components.iter().map(|c| substitute(c, g)).collect::<Result<Vec<_>>>()?;
        Ok(CoordMap { source: g.source.clone(), target: self.target.clone(), components })
    }
}

/// Substitutes the components of `g` for the variables of `s`.
pub fn substitute(s: &SuperSeries, g: &CoordMap) -> Result<SuperSeries> {
    if !same_shape(s.vars(), &g.target) {
        return Err(Error::VariableMismatch);
    }
    let mut cache: HashMap<Monomial, SuperSeries> = HashMap::new();
    let mut out = SuperSeries::zero(&g.source, s.dim());
    for (m, v) in s.terms() {
        let p = monomial_power(m, g, &mut cache)?;
        for (pm, c) in p.terms() {
            out.add_scaled_term(pm.clone(), v, &c[0]);
        }
    }
    Ok(out)
}

// Π g_i^{e_i} in ascending variable order, memoized by peeling off the last factor.
fn monomial_power(m: &Monomial, g: &CoordMap, cache: &mut HashMap<Monomial, SuperSeries>) -> Result<SuperSeries> {
    if let Some(p) = cache.get(m) {
        return Ok(p.clone());
    }
    let last = m.0.iter().rposition(|&e| e > 0);
    let p = match last {
        None => SuperSeries::one(&g.source),
        Some(i) => {
            let mut rest = m.clone();
            rest.0[i] -= 1;
            let head = monomial_power(&rest, g, cache)?;
            SuperSeries::series_mul(&head, &g.components[i])?
        }
    };
    cache.insert(m.clone(), p.clone());
    Ok(p)
}

fn apply_matrix(a: &Matrix, parts: &[SuperSeries], vars: &Arc<VarSpace>) -> Vec<SuperSeries> {
    (0..a.rows())
        .map(|r| {
            let mut acc = SuperSeries::zero(vars, 1);
            for (c, p) in parts.iter().enumerate() {
                if !a[(r, c)].is_zero() {
                    acc = acc.add(&p.scale(&a[(r, c)])).expect("same space");
                }
            }
            acc
        })
        .collect()
}

/// Inverse coordinate map `g` with `f∘g = id = g∘f` to the truncation order.
///
/// Iterates `g ← J^{-1}(y - (f(g) - J g))`, gaining one order per pass.
pub fn series_compose_inverse(f: &CoordMap) -> Result<CoordMap> {
    if f.source.len() != f.target.len() {
        return Err(Error::Dimension("inverse of a non-square coordinate map".into()));
    }
    if f.components.iter().any(|c| !c.constant_term().iter().all(Zero::is_zero)) {
        return Err(Error::Invalid("coordinate map has a constant term".into()));
    }
    let j = f.linear_part();
    for a in 0..j.rows() {
        for b in 0..j.cols() {
            if !j[(a, b)].is_zero() && f.target.var(a).degree != f.source.var(b).degree {
                return Err(Error::Grading(format!("linear part mixes coordinates {a} and {b} of different degree")));
            }
        }
    }
    let jinv = inverse(&j).ok_or_else(|| Error::Singular("linear part of the coordinate map is singular".into()))?;
    let y = &f.target;
    let ys: Vec<SuperSeries> = (0..y.len()).map(|a| SuperSeries::variable(y, a)).collect();
    let mut g = CoordMap { source: y.clone(), target: f.source.clone(), components: apply_matrix(&jinv, &ys, y) };
    for _ in 1..y.order() {
        let fg = f.compose(&g)?;
        let jg = apply_matrix(&j, &g.components, y);
        let rhs: Vec<SuperSeries> =
            (0..y.len()).map(|a| ys[a].sub(&fg.components[a].sub(&jg[a])?)).collect::<Result<_>>()?;
        let next = apply_matrix(&jinv, &rhs, y);
        if next == g.components {
            break;
        }
        g.components = next;
    }
    Ok(g)
}

/// `true` when every component is a linear form.
pub fn is_linear(f: &CoordMap) -> bool {
    f.components.iter().all(|c| c.terms().all(|(m, _)| m.total() == 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::{rat, ratio};
    use crate::algebra::series::Variable;

    fn line(order: u32) -> Arc<VarSpace> {
        VarSpace::new(vec![Variable::new("t", 0)], order)
    }

    fn power(k: u8) -> Monomial {
        Monomial(vec![k])
    }

    #[test]
    fn identity_and_scalar() {
        let vs = line(3);
        let id = CoordMap::identity(&vs);
        assert_eq!(series_compose_inverse(&id).unwrap().components, id.components);
        let f = CoordMap::new(&vs, &vs, vec![SuperSeries::variable(&vs, 0).scale(&rat(2))]).unwrap();
        let g = series_compose_inverse(&f).unwrap();
        assert_eq!(g.components[0], SuperSeries::variable(&vs, 0).scale(&ratio(1, 2)));
    }

    #[test]
    fn inverse_of_t_plus_t_squared() {
        let vs = line(4);
        let t = SuperSeries::variable(&vs, 0);
        let f = CoordMap::new(&vs, &vs, vec![t.add(&SuperSeries::series_mul(&t, &t).unwrap()).unwrap()]).unwrap();
        let g = series_compose_inverse(&f).unwrap();
        let expected = [(1, 1), (2, -1), (3, 2), (4, -5)];
        for (k, c) in expected {
            assert_eq!(g.components[0].coeff(&power(k)), rat(c));
        }
        assert_eq!(g.components[0].len(), 4);
        assert_eq!(f.compose(&g).unwrap().components, CoordMap::identity(&vs).components);
        assert_eq!(g.compose(&f).unwrap().components, CoordMap::identity(&vs).components);
    }

    #[test]
    fn singular_linear_part_rejected() {
        let vs = line(2);
        let t = SuperSeries::variable(&vs, 0);
        let f = CoordMap::new(&vs, &vs, vec![SuperSeries::series_mul(&t, &t).unwrap()]).unwrap();
        assert!(matches!(series_compose_inverse(&f), Err(Error::Singular(_))));
    }
}
