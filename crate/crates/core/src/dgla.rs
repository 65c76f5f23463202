//! Differential graded Lie algebras, Maurer–Cartan elements and gauge action.
//!
//! Series conventions (elements written `m ⊗ x`, `m` a monomial):
//! `d(m ⊗ x) = (-1)^{|m|} m ⊗ dx` and
//! `[m ⊗ x, m' ⊗ y] = (-1)^{|x||m'|} m m' ⊗ [x, y]`.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::algebra::graded::{GradedSpace, LinearMap};
use crate::algebra::linalg::independent_subset;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{format_rat, ratio, zero, Rat};
use crate::algebra::series::{SuperSeries, VarSpace, Variable};
use crate::error::{Error, Result};
use crate::report::Report;

/// Harmonic projector `P` and homotopy `K` with `dK + Kd = 1 - P`.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeData {
    pub p: Matrix,
    pub k: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dgla {
    space: GradedSpace,
    d: Matrix,
    /// `ad[i]` has `[e_i, e_j]` as its `j`-th column.
    ad: Vec<Matrix>,
    hodge: Option<HodgeData>,
}

fn add_scaled(acc: &mut [Rat], v: &[Rat], c: &Rat) {
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            *a += x * c;
        }
    }
}

fn is_zero(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

fn fmt_vec(space: &GradedSpace, v: &[Rat]) -> String {
    let parts: Vec<String> =
        v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| format!("{}*{}", format_rat(c), space.label(i))).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

impl Dgla {
    /// Validates shapes and gradings: `d` has degree +1 and charge +1, the
    /// bracket degree 0 and charge -1, `P` degree 0 charge 0, `K` degree -1
    /// charge -1. The algebraic axioms are checked by [`check_dgla`].
    pub fn new(space: GradedSpace, d: Matrix, ad: Vec<Matrix>, hodge: Option<HodgeData>) -> Result<Self> {
        let n = space.dim();
        LinearMap::new(&space, &space, d.clone(), 1, 1)?;
        if ad.len() != n {
            return Err(Error::Dimension("bracket needs one matrix per basis vector".into()));
        }
        for (i, m) in ad.iter().enumerate() {
            if (m.rows(), m.cols()) != (n, n) {
                return Err(Error::Dimension("bracket matrix shape".into()));
            }
            for (k, j, _) in m.entries() {
                if space.degree(k) != space.degree(i) + space.degree(j)
                    || space.charge(k) != space.charge(i) + space.charge(j) - 1
                {
                    return Err(Error::Grading(format!(
                        "bracket [{}, {}] has a component along {}",
                        space.label(i),
                        space.label(j),
                        space.label(k)
                    )));
                }
            }
        }
        if let Some(h) = &hodge {
            LinearMap::new(&space, &space, h.p.clone(), 0, 0)?;
            LinearMap::new(&space, &space, h.k.clone(), -1, -1)?;
        }
        Ok(Dgla { space, d, ad, hodge })
    }

    /// Bracket matrices from a list of basis brackets `[e_i, e_j] = v`; the
    /// partner `[e_j, e_i]` is filled in by graded antisymmetry.
    pub fn bracket_from_entries(space: &GradedSpace, entries: &[(usize, usize, Vec<Rat>)]) -> Vec<Matrix> {
        let n = space.dim();
        let mut ad = vec![Matrix::zeros(n, n); n];
        for (i, j, v) in entries {
            let s = if space.parity(*i) && space.parity(*j) { Rat::one() } else { -Rat::one() };
            for (k, c) in v.iter().enumerate() {
                ad[*i][(k, *j)] = c.clone();
                if i != j {
                    ad[*j][(k, *i)] = c * &s;
                }
            }
        }
        ad
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn ad(&self, i: usize) -> &Matrix {
        &self.ad[i]
    }

    pub fn hodge(&self) -> Option<&HodgeData> {
        self.hodge.as_ref()
    }

    pub fn is_abelian(&self) -> bool {
        self.ad.iter().all(Matrix::is_zero)
    }

    pub fn with_d(&self, d: Matrix) -> Dgla {
        Dgla { d, ..self.clone() }
    }

    pub fn with_ad(&self, ad: Vec<Matrix>) -> Dgla {
        Dgla { ad, ..self.clone() }
    }

    pub fn with_hodge(&self, hodge: Option<HodgeData>) -> Dgla {
        Dgla { hodge, ..self.clone() }
    }

    /// Bracket of two plain vectors.
    pub fn bracket(&self, x: &[Rat], y: &[Rat]) -> Vec<Rat> {
        let n = self.dim();
        let mut out = vec![zero(); n];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let c = xi * yj;
                for k in 0..n {
                    let a = &self.ad[i][(k, j)];
                    if !a.is_zero() {
                        out[k] += a * &c;
                    }
                }
            }
        }
        out
    }

    pub fn d_series(&self, s: &SuperSeries) -> SuperSeries {
        s.map_coefficients(self.dim(), true, |v| self.d.apply(v))
    }

    pub fn bracket_series(&self, a: &SuperSeries, b: &SuperSeries) -> Result<SuperSeries> {
        let vars = a.vars();
        if b.vars() != vars && **b.vars() != **vars {
            return Err(Error::VariableMismatch);
        }
        let mut out = SuperSeries::zero(vars, self.dim());
        if self.is_abelian() {
            return Ok(out);
        }
        for (m, v) in a.terms() {
            let (even, odd): (Vec<Rat>, Vec<Rat>) = v
                .iter()
                .enumerate()
                .map(|(i, c)| if self.space.parity(i) { (zero(), c.clone()) } else { (c.clone(), zero()) })
                .unzip();
            for (m2, w) in b.terms() {
                let Some((mm, neg)) = vars.mul(m, m2) else { continue };
                let mut r = self.bracket(&even, w);
                let ro = self.bracket(&odd, w);
                let s = if vars.parity(m2) { -Rat::one() } else { Rat::one() };
                add_scaled(&mut r, &ro, &s);
                if neg {
                    r.iter_mut().for_each(|x| *x = -x.clone());
                }
                out.add_term(mm, r);
            }
        }
        Ok(out)
    }

    fn odd_map_series(&self, m: &Matrix, s: &SuperSeries) -> SuperSeries {
        s.map_coefficients(self.dim(), true, |v| m.apply(v))
    }
}

/// Runs every axiom on basis tensors; failures carry a witness.
pub fn check_dgla(g: &Dgla) -> Report {
    let mut report = Report::new();
    let sp = &g.space;
    let n = g.dim();
    let e = |i: usize| {
        let mut v = vec![zero(); n];
        v[i] = Rat::one();
        v
    };
    let sgn = |odd: bool| if odd { -Rat::one() } else { Rat::one() };

    let dd = g.d.mul(&g.d);
    let w = (0..n).find(|&j| !is_zero(&dd.column(j)));
    report.record("differential squares to zero", w.map(|j| format!("d^2 {} != 0", sp.label(j))));

    let mut witness = None;
    'anti: for i in 0..n {
        for j in 0..n {
            let mut r = g.bracket(&e(i), &e(j));
            add_scaled(&mut r, &g.bracket(&e(j), &e(i)), &sgn(sp.parity(i) && sp.parity(j)));
            if !is_zero(&r) {
                witness = Some(format!("[{}, {}]", sp.label(i), sp.label(j)));
                break 'anti;
            }
        }
    }
    report.record("graded antisymmetry", witness);

    let mut witness = None;
    if !g.is_abelian() {
        'jacobi: for a in 0..n {
            for b in 0..n {
                let ab = g.bracket(&e(a), &e(b));
                for c in 0..n {
                    let mut r = g.bracket(&e(a), &g.bracket(&e(b), &e(c)));
                    add_scaled(&mut r, &g.bracket(&ab, &e(c)), &-Rat::one());
                    add_scaled(&mut r, &g.bracket(&e(b), &g.bracket(&e(a), &e(c))), &-sgn(sp.parity(a) && sp.parity(b)));
                    if !is_zero(&r) {
                        witness = Some(format!("({}, {}, {})", sp.label(a), sp.label(b), sp.label(c)));
                        break 'jacobi;
                    }
                }
            }
        }
    }
    report.record("graded Jacobi identity", witness);

    let mut witness = None;
    'leibniz: for a in 0..n {
        for b in 0..n {
            let mut r = g.d.apply(&g.bracket(&e(a), &e(b)));
            add_scaled(&mut r, &g.bracket(&g.d.column(a), &e(b)), &-Rat::one());
            add_scaled(&mut r, &g.bracket(&e(a), &g.d.column(b)), &-sgn(sp.parity(a)));
            if !is_zero(&r) {
                witness = Some(format!("d[{}, {}]", sp.label(a), sp.label(b)));
                break 'leibniz;
            }
        }
    }
    report.record("graded Leibniz rule", witness);

    if let Some(h) = &g.hodge {
        report.extend(check_hodge(g, h));
    }
    report
}

fn first_nonzero_column(sp: &GradedSpace, m: &Matrix, what: &str) -> Option<String> {
    (0..m.cols()).find(|&j| !is_zero(&m.column(j))).map(|j| format!("{what} on {}", sp.label(j)))
}

fn check_hodge(g: &Dgla, h: &HodgeData) -> Report {
    let mut r = Report::new();
    let sp = &g.space;
    let n = g.dim();
    let homotopy = g.d.mul(&h.k).add(&h.k.mul(&g.d)).sub(&Matrix::identity(n).sub(&h.p));
    r.record("homotopy identity dK + Kd = 1 - P", first_nonzero_column(sp, &homotopy, "dK + Kd - 1 + P"));
    r.record("K squares to zero", first_nonzero_column(sp, &h.k.mul(&h.k), "K^2"));
    let kp = h.k.mul(&h.p).hstack(&h.p.mul(&h.k));
    r.record("KP = PK = 0", first_nonzero_column(sp, &kp, "KP|PK").map(|s| s.replace(" on ", " column ")));
    r.record("P is a projector", first_nonzero_column(sp, &h.p.mul(&h.p).sub(&h.p), "P^2 - P"));
    let pd = h.p.mul(&g.d).hstack(&g.d.mul(&h.p));
    r.record("Pd = dP = 0", first_nonzero_column(sp, &pd, "Pd|dP").map(|s| s.replace(" on ", " column ")));
    r
}

/// A Maurer–Cartan candidate must have total degree 1 and no constant term.
pub fn validate_mc_shape(g: &Dgla, gamma: &SuperSeries, total_degree: i32) -> Result<()> {
    if gamma.dim() != g.dim() {
        return Err(Error::Dimension("series is not valued in g".into()));
    }
    if !is_zero(&gamma.constant_term()) {
        return Err(Error::Invalid("series has a nonzero constant term".into()));
    }
    if !gamma.is_homogeneous(g.space.degrees(), total_degree) {
        return Err(Error::Grading(format!("series is not of total degree {total_degree}")));
    }
    Ok(())
}

/// `dγ + ½[γ, γ]`.
pub fn mc_residual(g: &Dgla, gamma: &SuperSeries) -> Result<SuperSeries> {
    let half = ratio(1, 2);
    g.d_series(gamma).add(&g.bracket_series(gamma, gamma)?.scale(&half))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeMode {
    /// `γ + ε(dα + [γ, α])` with a square-zero marker `ε` appended to the variables.
    Infinitesimal,
    /// `Σ (-ad α)^n γ / n! + Σ (-ad α)^n dα / (n+1)!`.
    Exponentiated,
}

/// Name of the marker variable used by infinitesimal gauge transformations.
pub const EPSILON: &str = "eps";

pub fn gauge_act(g: &Dgla, gamma: &SuperSeries, alpha: &SuperSeries, mode: GaugeMode) -> Result<SuperSeries> {
    validate_mc_shape(g, alpha, 0)?;
    match mode {
        GaugeMode::Infinitesimal => {
            let vars = gamma.vars().extended(Variable::marker(EPSILON));
            let gm = gamma.embed(&vars)?;
            let am = alpha.embed(&vars)?;
            let eps = SuperSeries::variable(&vars, vars.len() - 1);
            let tangent = g.d_series(&am).add(&g.bracket_series(&gm, &am)?)?;
            gm.add(&SuperSeries::left_mul(&eps, &tangent)?)
        }
        GaugeMode::Exponentiated => {
            let minus_ad = |s: &SuperSeries| g.bracket_series(alpha, s).map(|r| r.neg());
            let mut out = SuperSeries::zero(gamma.vars(), g.dim());
            let mut a = gamma.clone();
            let mut b = g.d_series(alpha);
            let mut n: u32 = 0;
            while !(a.is_zero() && b.is_zero()) {
                let fact_a = crate::algebra::rational::factorial(n);
                let fact_b = crate::algebra::rational::factorial(n + 1);
                out = out.add(&a.scale(&(Rat::one() / fact_a)))?.add(&b.scale(&(Rat::one() / fact_b)))?;
                a = minus_ad(&a)?;
                b = minus_ad(&b)?;
                n += 1;
                if n > gamma.vars().nilpotency_bound() + 1 {
                    break;
                }
            }
            Ok(out)
        }
    }
}

/// Output of the Kuranishi recursion.
#[derive(Clone, Debug)]
pub struct MiniVersal {
    pub gamma: SuperSeries,
    pub vars: Arc<VarSpace>,
    /// Harmonic representatives `e_a`, one per variable `t^a`.
    pub harmonic: Vec<Vec<Rat>>,
}

/// Harmonic basis vectors (independent columns of `P`), ordered by
/// (degree, charge, index).
pub fn harmonic_basis(g: &Dgla) -> Result<Vec<(usize, Vec<Rat>)>> {
    let h = g.hodge.as_ref().ok_or_else(|| Error::Invalid("Hodge data required".into()))?;
    let cols: Vec<Vec<Rat>> = (0..g.dim()).map(|j| h.p.column(j)).collect();
    let mut chosen: Vec<(usize, Vec<Rat>)> = independent_subset(&cols, g.dim()).into_iter().map(|j| (j, cols[j].clone())).collect();
    let sp = &g.space;
    chosen.sort_by_key(|(j, _)| (sp.degree(*j), sp.charge(*j), *j));
    Ok(chosen)
}

/// Solves `γ = Σ t^a e_a - ½ K[γ, γ]` to the given order and verifies the
/// Maurer–Cartan equation; a surviving residual is reported as an obstruction.
pub fn mc_solve_miniversal(g: &Dgla, order: u32) -> Result<MiniVersal> {
    let basis = harmonic_basis(g)?;
    let h = g.hodge.as_ref().expect("checked by harmonic_basis");
    let vars = VarSpace::new(
        basis.iter().enumerate().map(|(a, (j, _))| Variable::new(format!("t{}", a + 1), 1 - g.space.degree(*j))).collect(),
        order,
    );
    let mut linear = SuperSeries::zero(&vars, g.dim());
    for (a, (_, v)) in basis.iter().enumerate() {
        linear.add_term(vars.unit(a), v.clone());
    }
    let half = ratio(1, 2);
    let mut gamma = linear.clone();
    for _ in 1..order {
        let br = g.bracket_series(&gamma, &gamma)?;
        let next = linear.sub(&g.odd_map_series(&h.k, &br).scale(&half))?;
        if next == gamma {
            break;
        }
        gamma = next;
    }
    let residual = mc_residual(g, &gamma)?;
    if let Some(p) = residual.min_order() {
        let part = residual.part_of_order(p);
        let class = g.odd_map_series(&h.p, &part);
        let shown = if class.is_zero() { part } else { class };
        let text: Vec<String> = shown.terms().map(|(m, v)| format!("{}*({})", vars.format_monomial(m), fmt_vec(&g.space, v))).collect();
        return Err(Error::Obstructed { order: p, class: text.join(" + ") });
    }
    Ok(MiniVersal { gamma, vars, harmonic: basis.into_iter().map(|(_, v)| v).collect() })
}

/// `K γ` (zero on the gauge-fixing slice).
pub fn gauge_slice_residual(g: &Dgla, gamma: &SuperSeries) -> Result<SuperSeries> {
    let h = g.hodge.as_ref().ok_or_else(|| Error::Invalid("Hodge data required".into()))?;
    Ok(g.odd_map_series(&h.k, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    /// a (0,0), x (1,2), u (1,2), v (1,1), w (2,3); da = v, du = w,
    /// [x,x] = w, [a,x] = v, harmonic part spanned by x.
    fn toy() -> Dgla {
        let sp = GradedSpace::new(
            ["a", "x", "u", "v", "w"].iter().map(|s| s.to_string()).collect(),
            vec![0, 1, 1, 1, 2],
            vec![0, 2, 2, 1, 3],
        )
        .unwrap();
        let unit = |k: usize| (0..5).map(|i| if i == k { rat(1) } else { rat(0) }).collect::<Vec<_>>();
        let ad = Dgla::bracket_from_entries(&sp, &[(1, 1, unit(4)), (0, 1, unit(3))]);
        let mut d = Matrix::zeros(5, 5);
        d[(3, 0)] = rat(1);
        d[(4, 2)] = rat(1);
        let mut p = Matrix::zeros(5, 5);
        p[(1, 1)] = rat(1);
        let mut k = Matrix::zeros(5, 5);
        k[(0, 3)] = rat(1);
        k[(2, 4)] = rat(1);
        Dgla::new(sp, d, ad, Some(HodgeData { p, k })).unwrap()
    }

    #[test]
    fn toy_axioms_hold() {
        let r = check_dgla(&toy());
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn broken_differential_is_caught() {
        let sp = GradedSpace::new(vec!["a".into(), "b".into(), "c".into()], vec![0, 1, 2], vec![0, 1, 2]).unwrap();
        let mut d = Matrix::zeros(3, 3);
        d[(1, 0)] = rat(1);
        d[(2, 1)] = rat(1);
        let g = Dgla::new(sp, d, vec![Matrix::zeros(3, 3); 3], None).unwrap();
        let r = check_dgla(&g);
        assert_eq!(r.get("differential squares to zero").unwrap().witness.as_deref(), Some("d^2 a != 0"));
        assert!(r.get("graded Leibniz rule").unwrap().pass);
    }

    #[test]
    fn kuranishi_solution_of_toy() {
        let g = toy();
        let mv = mc_solve_miniversal(&g, 4).unwrap();
        assert_eq!(mv.vars.len(), 1);
        let t = mv.vars.unit(0);
        let t2 = crate::algebra::series::Monomial(vec![2]);
        assert_eq!(mv.gamma.coefficient(&t), vec![rat(0), rat(1), rat(0), rat(0), rat(0)]);
        assert_eq!(mv.gamma.coefficient(&t2), vec![rat(0), rat(0), ratio(-1, 2), rat(0), rat(0)]);
        assert_eq!(mv.gamma.len(), 2);
        assert!(mc_residual(&g, &mv.gamma).unwrap().is_zero());
        assert!(gauge_slice_residual(&g, &mv.gamma).unwrap().is_zero());
    }

    #[test]
    fn gauge_action_preserves_mc() {
        let g = toy();
        let mv = mc_solve_miniversal(&g, 3).unwrap();
        let mut alpha = SuperSeries::zero(&mv.vars, 5);
        alpha.add_term(mv.vars.unit(0), vec![rat(1), rat(0), rat(0), rat(0), rat(0)]);
        let moved = gauge_act(&g, &mv.gamma, &alpha, GaugeMode::Exponentiated).unwrap();
        assert!(mc_residual(&g, &moved).unwrap().is_zero());
        // t a moves γ by t v - t^2 v
        let delta = moved.sub(&mv.gamma).unwrap();
        let t2 = crate::algebra::series::Monomial(vec![2]);
        assert_eq!(delta.coefficient(&mv.vars.unit(0)), vec![rat(0), rat(0), rat(0), rat(1), rat(0)]);
        assert_eq!(delta.coefficient(&t2), vec![rat(0), rat(0), rat(0), rat(-1), rat(0)]);
        let inf = gauge_act(&g, &mv.gamma, &alpha, GaugeMode::Infinitesimal).unwrap();
        assert!(mc_residual(&g, &inf).unwrap().is_zero());
    }

    #[test]
    fn alpha_zero_is_identity() {
        let g = toy();
        let mv = mc_solve_miniversal(&g, 3).unwrap();
        let zero_alpha = SuperSeries::zero(&mv.vars, 5);
        assert_eq!(gauge_act(&g, &mv.gamma, &zero_alpha, GaugeMode::Exponentiated).unwrap(), mv.gamma);
    }

    #[test]
    fn obstruction_reported() {
        let sp = GradedSpace::new(vec!["x".into(), "y".into(), "z".into()], vec![1, 1, 2], vec![1, 1, 1]).unwrap();
        let z = vec![rat(0), rat(0), rat(1)];
        let ad = Dgla::bracket_from_entries(&sp, &[(0, 1, z)]);
        let g = Dgla::new(sp, Matrix::zeros(3, 3), ad, Some(HodgeData { p: Matrix::identity(3), k: Matrix::zeros(3, 3) })).unwrap();
        assert!(check_dgla(&g).passed());
        assert!(matches!(mc_solve_miniversal(&g, 3), Err(Error::Obstructed { order: 2, .. })));
    }
}
