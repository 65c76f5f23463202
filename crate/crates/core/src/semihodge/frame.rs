//! Frames of semi-infinite subspaces: `R[[ħ]]`-bases of `L^F` and `L(t)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use super::filtration::FiltrationF;
use crate::algebra::hbar::{HbarElement, Window};
use crate::algebra::linalg::{inverse, Rref};
use crate::algebra::matrix::Matrix;
use crate::algebra::operator::{apply_exp, HbarOperator};
use crate::algebra::rational::{format_rat, zero, Rat};
use crate::algebra::series::{SuperSeries, VarSpace};
use crate::dgla::{gauge_act, mc_residual, Dgla, GaugeMode};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::ximodule::{twisted_differential, CohomologyFrame, XiModule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrameKind {
    /// `L^F` built from a filtration.
    Filtration,
    /// A complement such as the normalized frame adapted to `L_W`.
    Complement,
    /// `L(t)` of a Maurer–Cartan element.
    Deformed,
}

/// `dim H` generators whose values at `t = 0` are `f_k ħ^{h_k/2}` with
/// `{f_k}` a basis of `H`; they span a free `R[[ħ]]`-module.
#[derive(Clone, Debug)]
pub struct SemiInfiniteFrame {
    pub kind: FrameKind,
    pub generators: Vec<HbarElement>,
    heads: Vec<i32>,
    head_inverse: Matrix,
}

impl PartialEq for SemiInfiniteFrame {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.generators == other.generators
    }
}

impl SemiInfiniteFrame {
    pub fn new(kind: FrameKind, generators: Vec<HbarElement>) -> Result<Self> {
        let dim = generators.first().map(HbarElement::dim).unwrap_or(0);
        if generators.len() != dim || dim == 0 {
            return Err(Error::Dimension("a frame needs dim H generators".into()));
        }
        let mut heads = Vec::new();
        let mut cols = Vec::new();
        for (k, g) in generators.iter().enumerate() {
            let vars = g.vars();
            let mut head = None;
            for (e, s) in g.terms() {
                for (m, v) in s.terms() {
                    if vars.order_of(m) > 0 {
                        continue;
                    }
                    if *m != vars.one() || head.is_some() {
                        return Err(Error::Freeness(format!("generator {} has no single leading term at t = 0", k + 1)));
                    }
                    head = Some((e, v.clone()));
                }
            }
            let (e, v) = head.ok_or_else(|| Error::Freeness(format!("generator {} vanishes at t = 0", k + 1)))?;
            heads.push(e);
            cols.push(v);
        }
        let head_inverse = inverse(&Matrix::from_columns(dim, &cols))
            .ok_or_else(|| Error::Freeness("leading coefficients of the frame are dependent".into()))?;
        Ok(SemiInfiniteFrame { kind, generators, heads, head_inverse })
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Half-step exponent `h_k` of the leading term of generator `k`.
    pub fn head_exponent(&self, k: usize) -> i32 {
        self.heads[k]
    }

    pub fn vars(&self) -> &Arc<VarSpace> {
        self.generators[0].vars()
    }

    /// Writes `v = Σ λ_k g_k` with `λ_k ∈ R[ħ]` (scalar elements with even,
    /// non-negative half-step exponents). Fails with the first residual
    /// coefficient that cannot be absorbed when `v` is not in the span.
    pub fn decompose(&self, v: &HbarElement) -> Result<Vec<HbarElement>> {
        self.decompose_to(v, v.vars().order())
    }

    /// [`SemiInfiniteFrame::decompose`] modulo terms of order above `limit`,
    /// for elements (such as derivatives) only known to that order.
    pub fn decompose_to(&self, v: &HbarElement, limit: u32) -> Result<Vec<HbarElement>> {
        let vars = v.vars().clone();
        let v = &v.truncated(limit);
        let window = v.window();
        let lwin = Window::new(0, window.hi - window.lo);
        let mut residual = v.clone();
        let mut lambdas: Vec<HbarElement> = (0..self.dim()).map(|_| HbarElement::zero(&vars, 1, lwin)).collect();
        for p in 0..=limit {
            let mut step: Vec<HbarElement> = (0..self.dim()).map(|_| HbarElement::zero(&vars, 1, lwin)).collect();
            for (e, s) in residual.terms() {
                for (m, c) in s.terms() {
                    let q = vars.order_of(m);
                    if q < p {
                        return Err(not_contained(&vars, e, m, c));
                    }
                    if q > p {
                        continue;
                    }
                    for (k, x) in self.head_inverse.apply(c).into_iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        let shift = e - self.heads[k];
                        if shift < 0 || shift % 2 != 0 {
                            return Err(not_contained(&vars, e, m, c));
                        }
                        step[k].add_at(shift, &SuperSeries::term(&vars, m.clone(), vec![x]))?;
                    }
                }
            }
            for (k, l) in step.iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                let contribution = HbarElement::left_mul(l, &self.generators[k].with_window(window)?)?.truncated(limit);
                residual = residual.sub(&contribution)?;
                lambdas[k] = lambdas[k].add(l)?;
            }
        }
        if let Some((e, s)) = residual.terms().next() {
            let (m, c) = s.terms().next().expect("nonzero series");
            return Err(not_contained(&vars, e, m, c));
        }
        Ok(lambdas)
    }

    pub fn contains(&self, v: &HbarElement) -> bool {
        self.decompose(v).is_ok()
    }

    pub fn contains_to(&self, v: &HbarElement, limit: u32) -> bool {
        self.decompose_to(v, limit).is_ok()
    }
}

fn not_contained(vars: &VarSpace, e: i32, m: &crate::algebra::series::Monomial, c: &[Rat]) -> Error {
    let mut residual = vec![format!("hbar^({e}/2) {}", vars.format_monomial(m))];
    residual.extend(c.iter().map(format_rat));
    Error::Inconsistent { residual }
}

/// `span(a) ⊆ span(b)` generator by generator; the witness names the first
/// generator of `a` outside `b`.
pub fn span_contained(a: &SemiInfiniteFrame, b: &SemiInfiniteFrame) -> Option<String> {
    a.generators.iter().enumerate().find_map(|(k, g)| b.decompose(g).err().map(|e| format!("generator {}: {e}", k + 1)))
}

/// Equality of spans by mutual containment.
pub fn spans_equal(a: &SemiInfiniteFrame, b: &SemiInfiniteFrame) -> Option<String> {
    span_contained(a, b).or_else(|| span_contained(b, a))
}

/// `L^F = span_r F^{≥r} ħ^{-r}[[ħ]]`, one generator `v ħ^{-r}` per adapted basis vector.
pub fn subspace_from_filtration(f: &FiltrationF, vars: &Arc<VarSpace>, window: Window) -> Result<SemiInfiniteFrame> {
    let generators =
        f.pieces().iter().map(|(two_r, v)| HbarElement::constant(vars, -two_r, v.clone(), window)).collect::<Result<Vec<_>>>()?;
    SemiInfiniteFrame::new(FrameKind::Filtration, generators)
}

/// The frame of `L(γ)` together with the closed lifts `s_k` it was built from.
#[derive(Clone, Debug)]
pub struct DeformedFrame {
    pub frame: SemiInfiniteFrame,
    /// `s_k ∈ h[[ħ]] ⊗ R` with `d_γ(ħ) s_k = 0` and `s_k ≡ σ_k` mod the maximal ideal.
    pub lifts: Vec<HbarElement>,
}

/// Block system `d1 x_j + d2 x_{j-1} = b_j` (`j = 0..=J+1`) in the unknowns
/// `x_0..x_J`, reduced once per `J`.
struct LiftSolver<'a> {
    m: &'a XiModule,
    cache: HashMap<usize, Rref>,
}

impl<'a> LiftSolver<'a> {
    fn system(&mut self, j_max: usize) -> &Rref {
        let n = self.m.dim();
        let (d1, d2) = (self.m.d1(), self.m.d2());
        self.cache.entry(j_max).or_insert_with(|| {
            let a = Matrix::from_fn((j_max + 2) * n, (j_max + 1) * n, |r, c| {
                let (rj, ri) = (r / n, r % n);
                let (cj, ci) = (c / n, c % n);
                if rj == cj {
                    d1[(ri, ci)].clone()
                } else if rj == cj + 1 {
                    d2[(ri, ci)].clone()
                } else {
                    zero()
                }
            });
            Rref::of(&a)
        })
    }

    /// Solves `(d1 + ħ d2) x = b` for `x ∈ h[ħ]`; `b` given by integer ħ-powers.
    fn solve(&mut self, b: &[(usize, Vec<Rat>)]) -> Option<Vec<(usize, Vec<Rat>)>> {
        let n = self.m.dim();
        let top = b.iter().map(|(j, _)| *j).max().unwrap_or(0);
        for j_max in top..=top + n + 1 {
            let mut rhs = vec![zero(); (j_max + 2) * n];
            for (j, v) in b {
                rhs[j * n..(j + 1) * n].clone_from_slice(v);
            }
            if let Ok(x) = self.system(j_max).solve(&rhs) {
                return Some((0..=j_max).map(|j| (j, x[j * n..(j + 1) * n].to_vec())).filter(|(_, v)| v.iter().any(|c| !c.is_zero())).collect());
            }
        }
        None
    }
}

/// The frame of `L(γ)`: for each class `σ_k` solve `d_γ(ħ)s_k = 0` order by
/// order in `t`, then take the class of `l_ħ exp(i_γ/ħ) s_k`.
pub fn l_frame(m: &XiModule, g: &Dgla, gamma: &SuperSeries, cohomology: &CohomologyFrame, window: Window) -> Result<DeformedFrame> {
    if !mc_residual(g, gamma)?.is_zero() {
        return Err(Error::Invalid("Maurer–Cartan residual is nonzero".into()));
    }
    let vars = gamma.vars().clone();
    let n = m.dim();
    let lie = m.lie_series(gamma, 1)?;
    let mut solver = LiftSolver { m, cache: HashMap::new() };
    let i_over_hbar = HbarOperator::from_terms(&vars, n, n, false, vec![(-2, m.i_series(gamma, 1))])?;
    let mut lifts = Vec::new();
    let mut generators = Vec::new();
    for (k, sigma) in cohomology.classes.iter().enumerate() {
        let mut s = HbarElement::constant(&vars, 0, sigma.clone(), window)?;
        for p in 1..=vars.order() {
            // b = -(L_γ s) at order p, grouped by monomial and ħ-power
            let mut by_monomial: std::collections::BTreeMap<_, Vec<(usize, Vec<Rat>)>> = Default::default();
            for (e, c) in s.terms() {
                let ls = lie.apply(c)?.part_of_order(p);
                for (mono, v) in ls.terms() {
                    if e < 0 || e % 2 != 0 {
                        return Err(Error::Freeness("lift left h[[ħ]]".into()));
                    }
                    let sign = if vars.parity(mono) { Rat::from_integer(1.into()) } else { -Rat::from_integer(1.into()) };
                    by_monomial.entry(mono.clone()).or_default().push(((e / 2) as usize, v.iter().map(|x| x * &sign).collect()));
                }
            }
            for (mono, parts) in by_monomial {
                let mut b: Vec<(usize, Vec<Rat>)> = Vec::new();
                for (j, v) in parts {
                    match b.iter_mut().find(|(i, _)| *i == j) {
                        Some((_, acc)) => acc.iter_mut().zip(v).for_each(|(a, x)| *a += x),
                        None => b.push((j, v)),
                    }
                }
                let x = solver.solve(&b).ok_or_else(|| {
                    Error::Freeness(format!("class {} has no lift at order {p} ({})", k + 1, vars.format_monomial(&mono)))
                })?;
                for (j, v) in x {
                    s.add_at(2 * j as i32, &SuperSeries::term(&vars, mono.clone(), v))?;
                }
            }
        }
        let d = twisted_differential(m, g, gamma, true)?;
        if !d.apply(&s)?.is_zero() {
            return Err(Error::Freeness(format!("lift of class {} is not closed", k + 1)));
        }
        let lifted = m.l_hbar(&apply_exp(&i_over_hbar, &s)?)?;
        generators.push(cohomology.project(&lifted));
        lifts.push(s);
    }
    Ok(DeformedFrame { frame: SemiInfiniteFrame::new(FrameKind::Deformed, generators)?, lifts })
}

/// Compares the spans of `L(γ)` and `L(γ^α)`.
pub fn gauge_invariance_check(
    m: &XiModule,
    g: &Dgla,
    gamma: &SuperSeries,
    alpha: &SuperSeries,
    mode: GaugeMode,
    cohomology: &CohomologyFrame,
    window: Window,
) -> Result<Report> {
    let moved = gauge_act(g, gamma, alpha, mode)?;
    let base = gamma.embed(moved.vars())?;
    let a = l_frame(m, g, &base, cohomology, window)?;
    let b = l_frame(m, g, &moved, cohomology, window)?;
    let mut r = Report::new();
    let name = match mode {
        GaugeMode::Infinitesimal => "gauge invariance (infinitesimal)",
        GaugeMode::Exponentiated => "gauge invariance (exponentiated)",
    };
    r.record(name, spans_equal(&a.frame, &b.frame));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::algebra::rational::rat;
    use crate::algebra::series::Variable;
    use crate::dgla::mc_solve_miniversal;
    use crate::models::{random_abelian_model, random_series, torus_model, RandomSpec};

    #[test]
    fn filtration_frame_heads_follow_charges() {
        let m = torus_model(1).unwrap();
        let vars = VarSpace::new(vec![Variable::new("t", 0)], 1);
        let lf = subspace_from_filtration(&m.hodge_filtration(), &vars, Window::new(-6, 6)).unwrap();
        let heads: Vec<i32> = (0..4).map(|k| lf.head_exponent(k)).collect();
        assert_eq!(heads, m.cohomology.charges);
    }

    #[test]
    fn decomposition_returns_polynomial_coefficients() {
        let m = torus_model(1).unwrap();
        let vars = VarSpace::new(vec![Variable::new("t", 0)], 2);
        let win = Window::new(-8, 8);
        let lf = subspace_from_filtration(&m.hodge_filtration(), &vars, win).unwrap();
        // ħ·dz ħ^{-1/2} + t·dz̄ ħ^{1/2}
        let mut x = HbarElement::constant(&vars, 1, vec![rat(0), rat(1), rat(0), rat(0)], win).unwrap();
        x.add_at(1, &SuperSeries::term(&vars, vars.unit(0), vec![rat(0), rat(0), rat(1), rat(0)])).unwrap();
        let l = lf.decompose(&x).unwrap();
        assert_eq!(l[1].exponents(), vec![2]);
        assert_eq!(l[2].exponents(), vec![0]);
        assert!(l[0].is_zero() && l[3].is_zero());
        // dz ħ^{-3/2} lies below the frame
        let y = HbarElement::constant(&vars, -3, vec![rat(0), rat(1), rat(0), rat(0)], win).unwrap();
        assert!(matches!(lf.decompose(&y), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn dependent_heads_are_rejected() {
        let vars = VarSpace::new(vec![Variable::new("t", 0)], 1);
        let win = Window::new(-4, 4);
        let g = HbarElement::constant(&vars, 0, vec![rat(1), rat(1)], win).unwrap();
        assert!(matches!(SemiInfiniteFrame::new(FrameKind::Complement, vec![g.clone(), g.scale(&rat(2))]), Err(Error::Freeness(_))));
    }

    #[test]
    fn l_frame_at_zero_is_the_hodge_frame() {
        for m in [torus_model(1).unwrap(), random_abelian_model(2, &RandomSpec::default()).unwrap()] {
            let r = crate::semihodge::checks::base_case_check(&m, 2).unwrap();
            assert!(r.passed(), "{}", m.name);
        }
    }

    #[test]
    fn lifts_are_closed_and_start_at_the_classes() {
        let m = random_abelian_model(4, &RandomSpec::default()).unwrap();
        let mv = mc_solve_miniversal(&m.g, 3).unwrap();
        let d = l_frame(&m.module, &m.g, &mv.gamma, &m.cohomology, m.window(3)).unwrap();
        let op = twisted_differential(&m.module, &m.g, &mv.gamma, true).unwrap();
        for (k, s) in d.lifts.iter().enumerate() {
            assert!(op.apply(s).unwrap().is_zero());
            assert_eq!(s.at_origin().get(&0), Some(&m.cohomology.classes[k]));
        }
    }

    #[test]
    fn gauge_equivalent_solutions_give_the_same_span() {
        let m = random_abelian_model(6, &RandomSpec::default()).unwrap();
        let mv = mc_solve_miniversal(&m.g, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mode in [GaugeMode::Infinitesimal, GaugeMode::Exponentiated] {
            let alpha = random_series(&mut rng, &mv.vars, m.g.space().degrees(), 0, 0.5);
            let r = gauge_invariance_check(&m.module, &m.g, &mv.gamma, &alpha, mode, &m.cohomology, m.window(2)).unwrap();
            assert!(r.passed(), "{mode:?}");
        }
    }
}
