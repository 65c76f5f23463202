//! Normalized periods `Ψ^W`, flat coordinates, structure constants, the
//! flat metric and the potential.

use std::sync::Arc;

use num_traits::Zero;

use super::filtration::{in_lw, FiltrationF, FiltrationW, Splitting};
use super::frame::SemiInfiniteFrame;
use crate::algebra::compose::{series_compose_inverse, substitute, CoordMap};
use crate::algebra::hbar::HbarElement;
use crate::algebra::linalg::Rref;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{format_rat, rat, zero, Rat};
use crate::algebra::series::{SuperSeries, VarSpace, Variable};
use crate::error::{Error, Result};

/// The unique element of `L(t) ∩ (target·ħ^{e0/2} + L_W)`, found order by
/// order in `t`: at each order the `F`-component of every coefficient is
/// cancelled by the frame, leaving a coefficient in `W`.
pub fn normalized_element(
    frame: &SemiInfiniteFrame,
    f: &FiltrationF,
    w: &FiltrationW,
    parities: &[bool],
    target: &[Rat],
    e0: i32,
) -> Result<HbarElement> {
    let mut splitting = Splitting::new(f, w, parities)?;
    let vars = frame.vars().clone();
    let window = frame.generators[0].window();
    let fixed = HbarElement::constant(&vars, e0, target.to_vec(), window)?;
    let lambdas = frame.decompose_to(&fixed, 0).map_err(|_| {
        Error::Transversality(format!("target at ħ^({e0}/2) is not in the span of the frame at t = 0"))
    })?;
    let mut psi = HbarElement::zero(&vars, frame.dim(), window);
    for (k, l) in lambdas.iter().enumerate() {
        let l0 = l.truncated(0);
        if !l0.is_zero() {
            psi = psi.add(&HbarElement::left_mul(&l0, &frame.generators[k])?)?;
        }
    }
    for p in 1..=vars.order() {
        let mut step: Vec<HbarElement> = (0..frame.dim()).map(|_| HbarElement::zero(&vars, 1, window)).collect();
        for (e, s) in psi.part_of_order(p).terms() {
            for (m, c) in s.terms() {
                let (fpart, _) = splitting.split(-e, c)?;
                let mut fv = vec![zero(); frame.dim()];
                for (k, x) in fpart {
                    for (o, y) in fv.iter_mut().zip(&f.pieces()[k].1) {
                        *o -= &x * y;
                    }
                }
                let head_coords = frame_head_coordinates(frame, &fv);
                for (k, x) in head_coords.into_iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    let shift = e - frame.head_exponent(k);
                    if shift < 0 || shift % 2 != 0 {
                        return Err(Error::Transversality(format!("F-component at ħ^({e}/2) cannot be absorbed by the frame")));
                    }
                    step[k].add_at(shift, &SuperSeries::term(&vars, m.clone(), vec![x]))?;
                }
            }
        }
        for (k, l) in step.iter().enumerate() {
            if !l.is_zero() {
                psi = psi.add(&HbarElement::left_mul(l, &frame.generators[k])?)?;
            }
        }
    }
    if !in_lw(w, &psi.sub(&fixed)?) {
        return Err(Error::Transversality("normalized element leaves target + L_W".into()));
    }
    Ok(psi)
}

fn frame_head_coordinates(frame: &SemiInfiniteFrame, v: &[Rat]) -> Vec<Rat> {
    let cols: Vec<Vec<Rat>> = (0..frame.dim())
        .map(|k| {
            let g = &frame.generators[k];
            g.coefficient(frame.head_exponent(k)).coefficient(&g.vars().one())
        })
        .collect();
    let m = Matrix::from_columns(frame.dim(), &cols);
    Rref::of(&m).solve(v).expect("leading coefficients form a basis")
}

/// `Ψ^W = L(t) ∩ (Ω0 ħ^{-n/2} + L_W)`; `omega0` in class coordinates.
pub fn psi_normalize(
    frame: &SemiInfiniteFrame,
    f: &FiltrationF,
    w: &FiltrationW,
    parities: &[bool],
    omega0: &[Rat],
    n: i32,
) -> Result<HbarElement> {
    normalized_element(frame, f, w, parities, omega0, -n)
}

/// The coordinate change `t ↦ t_W` and its inverse.
#[derive(Clone, Debug)]
pub struct FlatCoordinates {
    pub map: CoordMap,
    pub inverse: CoordMap,
    /// `2r_k` of the `Gr W` basis vector paired with `t_W^k`.
    pub levels: Vec<i32>,
}

fn vector_degree(v: &[Rat], degrees: &[i32]) -> Result<i32> {
    let ds: Vec<i32> = v.iter().zip(degrees).filter(|(c, _)| !c.is_zero()).map(|(_, &d)| d).collect();
    if ds.is_empty() || ds.iter().any(|&d| d != ds[0]) {
        return Err(Error::Grading("Gr W basis vector is not homogeneous".into()));
    }
    Ok(ds[0])
}

/// `t_W^k` = the `b_k`-coordinate of the `ħ^{-r_k}` coefficient of
/// `Ψ^W - Ω0 ħ^{-n/2}` modulo `W_{≤r_k - 1}`.
#[allow(clippy::too_many_arguments)]
pub fn flat_coordinates(
    psi: &HbarElement,
    f: &FiltrationF,
    w: &FiltrationW,
    parities: &[bool],
    class_degrees: &[i32],
    omega0: &[Rat],
    omega0_degree: i32,
    n: i32,
) -> Result<FlatCoordinates> {
    let vars = psi.vars().clone();
    let mut splitting = Splitting::new(f, w, parities)?;
    let rest = psi.sub(&HbarElement::constant(&vars, -n, omega0.to_vec(), psi.window())?)?;
    let mut tw_vars = Vec::new();
    let mut components = Vec::new();
    let mut levels = Vec::new();
    for (k, (two_r, b)) in w.pieces().iter().enumerate() {
        let deg = omega0_degree - vector_degree(b, class_degrees)?;
        tw_vars.push(Variable::new(format!("tw{}", k + 1), deg));
        levels.push(*two_r);
        let mut comp = SuperSeries::zero(&vars, 1);
        for (m, c) in rest.coefficient(-two_r).terms() {
            let (fpart, wpart) = splitting.split(*two_r, c)?;
            if fpart.iter().any(|(_, x)| !x.is_zero()) {
                return Err(Error::Transversality("Ψ^W has a component outside L_W".into()));
            }
            if let Some((_, x)) = wpart.into_iter().find(|(j, _)| *j == k) {
                comp.add_term(m.clone(), vec![x]);
            }
        }
        components.push(comp);
    }
    let target = VarSpace::new(tw_vars, vars.order());
    let map = CoordMap::new(&vars, &target, components)?;
    let inverse = series_compose_inverse(&map).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("local Torelli fails: the linear part of t -> t_W is singular".into()),
        other => other,
    })?;
    Ok(FlatCoordinates { map, inverse, levels })
}

/// Re-expresses an element in new coordinates by substituting `coords`.
pub fn substitute_element(v: &HbarElement, coords: &CoordMap) -> Result<HbarElement> {
    let mut out = HbarElement::zero(&coords.source, v.dim(), v.window());
    for (e, s) in v.terms() {
        out.add_at(e, &substitute(s, coords)?)?;
    }
    Ok(out)
}

/// Scalar series `x_j` (free of `ħ`) with `target = Σ_j x_j · columns[j]`,
/// solved order by order up to `limit`; the columns must be independent at `t = 0`.
pub fn combination(target: &HbarElement, columns: &[HbarElement], limit: u32) -> Result<Vec<SuperSeries>> {
    let vars = target.vars().clone();
    let dim = target.dim();
    let one = vars.one();
    let mut exps: Vec<i32> = columns.iter().flat_map(|c| c.at_origin().into_keys()).collect();
    exps.sort_unstable();
    exps.dedup();
    let flat = |entries: &std::collections::BTreeMap<i32, Vec<Rat>>| -> Option<Vec<Rat>> {
        let mut out = vec![zero(); exps.len() * dim];
        for (e, v) in entries {
            let i = exps.iter().position(|x| x == e)?;
            out[i * dim..(i + 1) * dim].clone_from_slice(v);
        }
        Some(out)
    };
    let cols: Vec<Vec<Rat>> = columns.iter().map(|c| flat(&c.at_origin()).expect("own exponents")).collect();
    let matrix = Matrix::from_columns(exps.len() * dim, &cols);
    let rref = Rref::of(&matrix);
    if rref.rank() < columns.len() {
        return Err(Error::Singular("columns are dependent at t = 0".into()));
    }
    let mut residual = target.clone();
    let mut out: Vec<SuperSeries> = (0..columns.len()).map(|_| SuperSeries::zero(&vars, 1)).collect();
    for p in 0..=limit {
        let part = residual.part_of_order(p);
        let mut monomials: Vec<_> = part.terms().flat_map(|(_, s)| s.terms().map(|(m, _)| m.clone()).collect::<Vec<_>>()).collect();
        monomials.sort();
        monomials.dedup();
        let mut step: Vec<SuperSeries> = (0..columns.len()).map(|_| SuperSeries::zero(&vars, 1)).collect();
        for m in monomials {
            let entries = part.terms().map(|(e, s)| (e, s.coefficient(&m))).filter(|(_, v)| v.iter().any(|c| !c.is_zero())).collect();
            let inconsistent = || Error::Inconsistent { residual: vec![format!("order {p} at {}", vars.format_monomial(&m))] };
            let rhs = flat(&entries).ok_or_else(inconsistent)?;
            let x = rref.solve(&rhs).map_err(|_| inconsistent())?;
            for (j, c) in x.into_iter().enumerate() {
                step[j].add_term(m.clone(), vec![c]);
            }
        }
        for (j, s) in step.iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            let lam = HbarElement::monomial(0, s.clone(), residual.window())?;
            residual = residual.sub(&HbarElement::left_mul(&lam, &columns[j])?)?;
            out[j] = out[j].add(s)?;
        }
        if !residual.truncated(p).is_zero() {
            return Err(Error::Inconsistent { residual: vec![format!("order {p} not cancelled")] });
        }
    }
    let _ = one;
    Ok(out.into_iter().map(|s| s.truncated(limit)).collect())
}

/// `A[a][b][c]` with `∂_a∂_b Ψ = ħ^{-1} Σ_c A_ab^c ∂_c Ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub vars: Arc<VarSpace>,
    pub a: Vec<Vec<Vec<SuperSeries>>>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> &SuperSeries {
        &self.a[a][b][c]
    }
}

/// Solves `∂_a∂_bΨ = ħ^{-1} A_ab^c ∂_cΨ + A^{(0)}_ab^c ∂_cΨ` and requires
/// `A^{(0)} = 0`. Second derivatives of `Ψ` are known to two orders less
/// than `Ψ`, so `A` comes out at order `N - 2`.
pub fn structure_constants(psi: &HbarElement) -> Result<StructureConstants> {
    let vars = psi.vars().clone();
    let limit = vars.order().checked_sub(2).ok_or_else(|| Error::Invalid("Ψ must be known to order at least 2".into()))?;
    let out_vars = VarSpace::new(vars.vars().to_vec(), limit);
    let d = vars.len();
    let first: Vec<HbarElement> = (0..d).map(|c| psi.derivative(c)).collect();
    let mut columns: Vec<HbarElement> = first.iter().map(|x| x.shift(-2)).collect::<Result<_>>()?;
    columns.extend(first.iter().cloned());
    let mut a = vec![vec![Vec::new(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let target = first[j].derivative(i);
            let x = combination(&target, &columns, limit).map_err(|e| Error::Axiom {
                axiom: "second-order system".into(),
                witness: format!("(a, b) = ({}, {}): {e}", i + 1, j + 1),
            })?;
            if let Some(c) = (0..d).find(|&c| !x[d + c].is_zero()) {
                return Err(Error::Axiom {
                    axiom: "A^(0) vanishes".into(),
                    witness: format!("A^(0)_({},{})^{} = {:?}", i + 1, j + 1, c + 1, x[d + c]),
                });
            }
            a[i][j] = x[..d].iter().map(|s| s.reordered(&out_vars)).collect::<Result<_>>()?;
        }
    }
    Ok(StructureConstants { vars: out_vars, a })
}

/// `⟨u, v⟩` with `G(ħ^{e1/2}x, ħ^{e2/2}y) = (-1)^{(e2 - c_y)/2} ħ^{(e1+e2)/2} G(x, y)`
/// and the Koszul sign of moving the monomial of `v` past `x`.
pub fn pair_elements(u: &HbarElement, v: &HbarElement, pairing: &Matrix, charges: &[i32], parities: &[bool]) -> Result<HbarElement> {
    let vars = u.vars().clone();
    let mut out = HbarElement::zero(&vars, 1, u.window());
    for (e1, s1) in u.terms() {
        for (e2, s2) in v.terms() {
            let mut acc = SuperSeries::zero(&vars, 1);
            for (m1, x) in s1.terms() {
                for (m2, y) in s2.terms() {
                    let Some((mm, neg)) = vars.mul(m1, m2) else { continue };
                    let odd_m2 = vars.parity(m2);
                    let mut total = zero();
                    for (i, xi) in x.iter().enumerate() {
                        if xi.is_zero() {
                            continue;
                        }
                        for (j, yj) in y.iter().enumerate() {
                            let gij = &pairing[(i, j)];
                            if yj.is_zero() || gij.is_zero() {
                                continue;
                            }
                            let hsteps = e2 - charges[j];
                            debug_assert!(hsteps % 2 == 0);
                            let odd = (parities[i] && odd_m2) ^ ((hsteps / 2).rem_euclid(2) == 1);
                            let term = xi * yj * gij;
                            if odd {
                                total -= term;
                            } else {
                                total += term;
                            }
                        }
                    }
                    if neg {
                        total = -total;
                    }
                    acc.add_term(mm, vec![total]);
                }
            }
            out.add_at(e1 + e2, &acc)?;
        }
    }
    Ok(out)
}

/// `η_ab = (-1)^{n|a|} ħ^{-D/2} ⟨∂_aΨ, ∂_bΨ⟩`: returns `(η, D)`. Fails
/// unless every pairing is constant in `t` (to order `N - 1`, where first
/// derivatives are known) and concentrated in one exponent `D`. The sign
/// twist makes `c_abc = Σ_e A_ab^e η_ec` graded symmetric for odd `n`.
pub fn flat_metric(psi: &HbarElement, pairing: &Matrix, charges: &[i32], parities: &[bool], n: i32) -> Result<(Matrix, i32)> {
    let vars = psi.vars().clone();
    let d = vars.len();
    let first: Vec<HbarElement> = (0..d).map(|c| psi.derivative(c)).collect();
    let mut eta = Matrix::zeros(d, d);
    let mut exponent: Option<i32> = None;
    for a in 0..d {
        for b in 0..d {
            let p = pair_elements(&first[a], &first[b], pairing, charges, parities)?.truncated(vars.order().saturating_sub(1));
            for (e, s) in p.terms() {
                if s.terms().any(|(m, _)| *m != vars.one()) {
                    return Err(Error::Axiom { axiom: "η constant".into(), witness: format!("⟨∂{}Ψ, ∂{}Ψ⟩ depends on t", a + 1, b + 1) });
                }
                match exponent {
                    Some(x) if x != e => {
                        return Err(Error::Axiom {
                            axiom: "η constant".into(),
                            witness: format!("⟨∂{}Ψ, ∂{}Ψ⟩ has exponents {x}/2 and {e}/2", a + 1, b + 1),
                        })
                    }
                    _ => exponent = Some(e),
                }
                let twist = n.rem_euclid(2) == 1 && vars.var(a).degree.rem_euclid(2) == 1;
                eta[(a, b)] = if twist { -s.coeff(&vars.one()) } else { s.coeff(&vars.one()) };
            }
        }
    }
    let exponent = exponent.ok_or_else(|| Error::Axiom { axiom: "η non-degenerate".into(), witness: "η = 0".into() })?;
    Ok((eta, exponent))
}

/// `c_abc = Σ_e A_ab^e η_ec`.
pub fn three_point(a: &StructureConstants, eta: &Matrix) -> Vec<Vec<Vec<SuperSeries>>> {
    let d = a.dim();
    let mut out = vec![vec![vec![SuperSeries::zero(&a.vars, 1); d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut acc = SuperSeries::zero(&a.vars, 1);
                for e in 0..d {
                    if !eta[(e, k)].is_zero() {
                        acc = acc.add(&a.a[i][j][e].scale(&eta[(e, k)])).expect("same space");
                    }
                }
                out[i][j][k] = acc;
            }
        }
    }
    out
}

/// A scalar series `Φ` (at order `N + 3`) with `∂_a∂_b∂_c Φ = c_abc`,
/// integrated by the Euler operator; the identity is verified exactly.
pub fn potential(c: &[Vec<Vec<SuperSeries>>], vars: &Arc<VarSpace>) -> Result<(SuperSeries, Arc<VarSpace>)> {
    let d = vars.len();
    let big = VarSpace::new(vars.vars().to_vec(), vars.order() + 3);
    let lift = |s: &SuperSeries| s.reordered(&big);
    let integrate = |parts: &dyn Fn(usize) -> Result<SuperSeries>| -> Result<SuperSeries> {
        // F with ∂_a F = parts(a): F_k = (1/k) Σ_a t^a parts(a)_{k-1}
        let mut out = SuperSeries::zero(&big, 1);
        for a in 0..d {
            let t = SuperSeries::variable(&big, a);
            let prod = SuperSeries::series_mul(&t, &parts(a)?)?;
            for (m, v) in prod.terms() {
                let k = big.order_of(m);
                out.add_term(m.clone(), vec![&v[0] / rat(k as i64)]);
            }
        }
        Ok(out)
    };
    let mut second = vec![vec![SuperSeries::zero(&big, 1); d]; d];
    for b in 0..d {
        for cc in 0..d {
            second[b][cc] = integrate(&|a| lift(&c[a][b][cc]))?;
        }
    }
    let mut firsts = vec![SuperSeries::zero(&big, 1); d];
    for cc in 0..d {
        firsts[cc] = integrate(&|b| Ok(second[b][cc].clone()))?;
    }
    let phi = integrate(&|cc| Ok(firsts[cc].clone()))?;
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                let third = phi.derivative(cc).derivative(b).derivative(a).truncated(vars.order());
                if third != lift(&c[a][b][cc])? {
                    return Err(Error::Axiom {
                        axiom: "potential".into(),
                        witness: format!("∂{}∂{}∂{}Φ != c_({},{},{})", a + 1, b + 1, cc + 1, a + 1, b + 1, cc + 1),
                    });
                }
            }
        }
    }
    Ok((phi, big))
}

/// `φ̃_α = L(t) ∩ (φ_α ħ^{-r_α} + L_W)` for each `(2r_α, φ_α)` of `basis`
/// (normally [`opposite_grading`](super::filtration::opposite_grading)), and `Γ_v` with
/// `∂_v φ̃_α = ħ^{-1} Σ_β Γ_v[α][β] φ̃_β` (to order `N - 1`).
pub fn normalized_frame_and_connection(
    frame: &SemiInfiniteFrame,
    f: &FiltrationF,
    w: &FiltrationW,
    parities: &[bool],
    basis: &[(i32, Vec<Rat>)],
) -> Result<(Vec<HbarElement>, Vec<Vec<Vec<SuperSeries>>>)> {
    let tilde: Vec<HbarElement> =
        basis.iter().map(|(two_r, v)| normalized_element(frame, f, w, parities, v, -two_r)).collect::<Result<_>>()?;
    let columns: Vec<HbarElement> = tilde.iter().map(|x| x.shift(-2)).collect::<Result<_>>()?;
    let vars = frame.vars().clone();
    let mut gamma = Vec::new();
    for v in 0..vars.len() {
        let limit = vars.order().saturating_sub(1);
        let rows = tilde.iter().map(|x| combination(&x.derivative(v), &columns, limit)).collect::<Result<Vec<_>>>()?;
        gamma.push(rows);
    }
    Ok((tilde, gamma))
}

/// `⟨Δ_α, v⟩` coefficient-wise, one scalar element per cycle.
pub fn period_integrals(v: &HbarElement, cycles: &[Vec<Rat>]) -> Result<Vec<HbarElement>> {
    let n = v.dim();
    if cycles.len() != n || cycles.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("cycle basis must be square".into()));
    }
    if crate::algebra::linalg::rank(&Matrix::from_rows(cycles.to_vec())) < n {
        return Err(Error::Invalid("cycles do not form a basis of the dual space".into()));
    }
    Ok(cycles
        .iter()
        .map(|delta| v.map_series(|s| s.map_coefficients(1, false, |x| vec![delta.iter().zip(x).map(|(a, b)| a * b).sum()])))
        .collect())
}

/// Human-readable rendering used in error witnesses.
pub fn describe(s: &SuperSeries) -> String {
    let parts: Vec<String> = s.terms().map(|(m, v)| format!("{}*{}", format_rat(&v[0]), s.vars().format_monomial(m))).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::hbar::Window;
    use crate::algebra::rational::ratio;
    use crate::algebra::series::Monomial;
    use crate::models::torus_model;

    fn one_var(order: u32) -> Arc<VarSpace> {
        VarSpace::new(vec![Variable::new("t", 0)], order)
    }

    #[test]
    fn pairing_sign_follows_the_integer_power_of_hbar() {
        let m = torus_model(1).unwrap();
        let g = m.cohomology_pairing();
        let vars = one_var(1);
        let win = Window::new(-6, 6);
        let e = |k: usize, x: i32| {
            let mut v = vec![zero(); 4];
            v[k] = rat(1);
            HbarElement::constant(&vars, x, v, win).unwrap()
        };
        let p = pair_elements(&e(0, 0), &e(3, 2), &g, &m.cohomology.charges, &m.parities()).unwrap();
        assert_eq!(p.coefficient(2).coeff(&vars.one()), -g[(0, 3)].clone());
        // dz̄ has charge 1, so ħ^{1/2} dz̄ carries no extra sign
        let q = pair_elements(&e(1, -1), &e(2, 1), &g, &m.cohomology.charges, &m.parities()).unwrap();
        assert_eq!(q.coefficient(0).coeff(&vars.one()), g[(1, 2)].clone());
    }

    #[test]
    fn combination_recovers_scalar_coefficients() {
        let vars = one_var(2);
        let win = Window::new(-4, 4);
        let c0 = HbarElement::constant(&vars, 0, vec![rat(1), rat(0)], win).unwrap();
        let c1 = HbarElement::constant(&vars, -2, vec![rat(0), rat(1)], win).unwrap();
        let t = SuperSeries::variable(&vars, 0);
        let target = c0.scale(&rat(2)).add(&HbarElement::left_mul(&HbarElement::monomial(0, t.clone(), win).unwrap(), &c1).unwrap()).unwrap();
        let x = combination(&target, &[c0.clone(), c1.clone()], 2).unwrap();
        assert_eq!(x[0], SuperSeries::scalar(&vars, rat(2)));
        assert_eq!(x[1], t);
        let off = HbarElement::constant(&vars, 2, vec![rat(1), rat(0)], win).unwrap();
        assert!(combination(&off, &[c0, c1], 2).is_err());
    }

    #[test]
    fn nonzero_a0_is_reported() {
        let vars = one_var(3);
        let win = Window::new(-4, 4);
        // Ψ = (t + t²/2) v: ∂²Ψ = v needs an ħ^0 multiple of ∂Ψ
        let mut s = SuperSeries::zero(&vars, 1);
        s.add_term(vars.unit(0), vec![rat(1)]);
        s.add_term(Monomial(vec![2]), vec![ratio(1, 2)]);
        let psi = HbarElement::monomial(0, s, win).unwrap();
        match structure_constants(&psi) {
            Err(Error::Axiom { axiom, .. }) => assert_eq!(axiom, "A^(0) vanishes"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn periods_against_the_dual_basis() {
        let vars = one_var(1);
        let win = Window::new(-4, 4);
        let x = HbarElement::constant(&vars, 0, vec![rat(0), rat(1)], win).unwrap();
        let dual = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]];
        let p = period_integrals(&x, &dual).unwrap();
        assert!(p[0].is_zero());
        assert_eq!(p[1].coefficient(0).coeff(&vars.one()), rat(1));
        let y = x.scale(&rat(3));
        assert_eq!(period_integrals(&y, &dual).unwrap()[1], p[1].scale(&rat(3)));
        assert!(period_integrals(&x, &[vec![rat(1), rat(1)], vec![rat(2), rat(2)]]).is_err());
    }

    #[test]
    fn potential_of_a_cubic() {
        let vars = VarSpace::new(vec![Variable::new("a", 0), Variable::new("b", 0)], 1);
        // c_abb = 1 and permutations, c_aaa = t_a
        let z = SuperSeries::zero(&vars, 1);
        let mut c = vec![vec![vec![z.clone(); 2]; 2]; 2];
        for (i, j, k) in [(0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            c[i][j][k] = SuperSeries::scalar(&vars, rat(1));
        }
        c[0][0][0] = SuperSeries::variable(&vars, 0);
        let (phi, big) = potential(&c, &vars).unwrap();
        // Φ = t_a t_b²/2 + t_a⁴/24
        assert_eq!(phi.coeff(&Monomial(vec![1, 2])), ratio(1, 2));
        assert_eq!(phi.coeff(&Monomial(vec![4, 0])), ratio(1, 24));
        assert_eq!(big.order(), 4);
    }

    #[test]
    fn describe_lists_terms() {
        let vars = one_var(2);
        assert_eq!(describe(&SuperSeries::zero(&vars, 1)), "0");
        assert_eq!(describe(&SuperSeries::variable(&vars, 0).scale(&rat(-2))), "-2*t");
    }
}
