//! Identity checks on frames, structure constants and the flat metric.

use std::sync::Arc;

use num_traits::Zero;

use super::frame::{l_frame, spans_equal, subspace_from_filtration, FrameKind, SemiInfiniteFrame};
use super::periods::{potential, StructureConstants};
use crate::algebra::hbar::HbarElement;
use crate::algebra::linalg::rank;
use crate::algebra::matrix::Matrix;
use crate::algebra::operator::{apply_exp, HbarOperator};
use crate::algebra::series::{SuperSeries, VarSpace};
use crate::dgla::mc_solve_miniversal;
use crate::error::Result;
use crate::models::ModelBundle;
use crate::report::Report;

fn odd(vars: &VarSpace, a: usize) -> bool {
    vars.var(a).degree.rem_euclid(2) == 1
}

/// `ħ∂_v g_k ∈ span` for every direction `v` and generator `g_k`, modulo
/// the top order where derivatives are not known.
pub fn griffiths_residual(frame: &SemiInfiniteFrame) -> Result<Report> {
    let vars = frame.vars().clone();
    let mut witness = None;
    'outer: for v in 0..vars.len() {
        for (k, g) in frame.generators.iter().enumerate() {
            if !frame.contains_to(&g.derivative(v).shift(2)?, vars.order().saturating_sub(1)) {
                witness = Some(format!("ħ∇_{} g{} not in span", vars.var(v).name, k + 1));
                break 'outer;
            }
        }
    }
    let mut r = Report::new();
    r.record("Griffiths transversality", witness);
    Ok(r)
}

/// Rank of `v ↦ [ħ∇_v Ω] mod L(0)` at `t = 0`, computed at first order from
/// the frame element through `Ω0`; full rank means `rank = #variables = dim H`.
pub fn cy_condition_check(model: &ModelBundle, order: Option<u32>) -> Result<Report> {
    let order = order.unwrap_or(1).max(1);
    let mv = mc_solve_miniversal(&model.g, order)?;
    let mut r = Report::new();
    let name = "Calabi-Yau symbol isomorphism";
    let dim_h = model.cohomology.dim();
    if mv.vars.len() != dim_h {
        r.fail(name, format!("{} deformation directions against dim H = {dim_h}", mv.vars.len()));
        return Ok(r);
    }
    if dim_h == 0 {
        r.pass(name);
        return Ok(r);
    }
    let frame = l_frame(&model.module, &model.g, &mv.gamma, &model.cohomology, model.window(order))?.frame;
    let omega = model.omega0_class();
    let mut g_omega = HbarElement::zero(&mv.vars, dim_h, model.window(order));
    for (k, c) in omega.iter().enumerate() {
        if !c.is_zero() {
            g_omega = g_omega.add(&frame.generators[k].scale(c))?;
        }
    }
    let one = mv.vars.one();
    let mut rows = Vec::new();
    for v in 0..mv.vars.len() {
        let lambdas = frame.decompose_to(&g_omega.derivative(v).shift(2)?, 0)?;
        rows.push(lambdas.iter().map(|l| l.coefficient(0).coeff(&one)).collect::<Vec<_>>());
    }
    let rk = rank(&Matrix::from_rows(rows));
    r.record(name, (rk != mv.vars.len()).then(|| format!("symbol rank {rk} < {}", mv.vars.len())));
    Ok(r)
}

/// `A_ab = ±A_ba`, `dA = 0` and `[A, A] = 0`, with Koszul signs.
pub fn flatness_check(a: &StructureConstants) -> Report {
    let vars = a.vars.clone();
    let d = a.dim();
    let p = |i: usize| odd(&vars, i);
    let sgn = |s: &SuperSeries, neg: bool| if neg { s.neg() } else { s.clone() };
    let mut sym = None;
    let mut closed = None;
    let mut assoc = None;
    for x in 0..d {
        for y in 0..d {
            let koszul = p(x) && p(y);
            for c in 0..d {
                if sym.is_none() && a.a[x][y][c] != sgn(&a.a[y][x][c], koszul) {
                    sym = Some(format!("A_({},{})^{} != ±A_({},{})^{}", x + 1, y + 1, c + 1, y + 1, x + 1, c + 1));
                }
                for e in 0..d {
                    if closed.is_none() && a.a[y][c][e].derivative(x) != sgn(&a.a[x][c][e].derivative(y), koszul) {
                        closed = Some(format!("∂{} A_({},{})^{} != ±∂{} A_({},{})^{}", x + 1, y + 1, c + 1, e + 1, y + 1, x + 1, c + 1, e + 1));
                    }
                    if assoc.is_some() {
                        continue;
                    }
                    let mut lhs = SuperSeries::zero(&vars, 1);
                    let mut rhs = SuperSeries::zero(&vars, 1);
                    for m in 0..d {
                        let l = SuperSeries::series_mul(&a.a[y][c][m], &a.a[x][m][e]).expect("same space");
                        lhs = lhs.add(&sgn(&l, p(x) && (p(y) ^ p(c) ^ p(m)))).expect("same space");
                        let r = SuperSeries::series_mul(&a.a[x][c][m], &a.a[y][m][e]).expect("same space");
                        rhs = rhs.add(&sgn(&r, p(y) && (p(x) ^ p(c) ^ p(m)))).expect("same space");
                    }
                    if lhs != sgn(&rhs, koszul) {
                        assoc = Some(format!("[A,A] at (a, b, c, e) = ({}, {}, {}, {})", x + 1, y + 1, c + 1, e + 1));
                    }
                }
            }
        }
    }
    let mut r = Report::new();
    r.record("A graded symmetric", sym);
    r.record("dA = 0", closed);
    r.record("[A,A] = 0", assoc);
    r
}

/// Symmetry and non-degeneracy of `η`, total graded symmetry of `c_abc`,
/// and the potential `Φ`; returns `Φ` when it exists.
pub fn wdvv_check(
    eta: &Matrix,
    c: &[Vec<Vec<SuperSeries>>],
    vars: &Arc<VarSpace>,
) -> Result<(Report, Option<(SuperSeries, Arc<VarSpace>)>)> {
    let d = vars.len();
    let p = |i: usize| odd(vars, i);
    let mut r = Report::new();
    let eta_sym = (0..d)
        .flat_map(|x| (0..d).map(move |y| (x, y)))
        .find(|&(x, y)| eta[(x, y)] != if p(x) && p(y) { -eta[(y, x)].clone() } else { eta[(y, x)].clone() })
        .map(|(x, y)| format!("η_({},{}) != ±η_({},{})", x + 1, y + 1, y + 1, x + 1));
    r.record("η graded symmetric", eta_sym);
    r.record("η non-degenerate", (rank(eta) < d).then(|| format!("rank η = {} < {d}", rank(eta))));
    let sgn = |s: &SuperSeries, neg: bool| if neg { s.neg() } else { s.clone() };
    let mut witness = None;
    'outer: for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                if c[x][y][z] != sgn(&c[y][x][z], p(x) && p(y)) || c[x][y][z] != sgn(&c[x][z][y], p(y) && p(z)) {
                    witness = Some(format!("c_({},{},{}) not graded symmetric", x + 1, y + 1, z + 1));
                    break 'outer;
                }
            }
        }
    }
    let symmetric = witness.is_none();
    r.record("c_abc totally graded symmetric", witness);
    let phi = if symmetric {
        match potential(c, vars) {
            Ok(phi) => {
                r.pass("potential Φ");
                Some(phi)
            }
            Err(e) => {
                r.fail("potential Φ", e.to_string());
                None
            }
        }
    } else {
        r.fail("potential Φ", "c_abc not symmetric");
        None
    };
    Ok((r, phi))
}

/// Weighted homogeneity of `A` with `ω(t_W^k) = 2r_k - n`:
/// every monomial `μ` of `A_ab^c` has `ω(μ) = 2 + ω_c - ω_a - ω_b`.
pub fn quasi_homogeneity_check(a: &StructureConstants, levels: &[i32], n: i32) -> Report {
    let w: Vec<i32> = levels.iter().map(|l| l - n).collect();
    let d = a.dim();
    let mut witness = None;
    'outer: for x in 0..d {
        for y in 0..d {
            for c in 0..d {
                for (m, _) in a.a[x][y][c].terms() {
                    let wm: i32 = m.exponents().iter().zip(&w).map(|(&e, &wi)| e as i32 * wi).sum();
                    if wm != 2 + w[c] - w[x] - w[y] {
                        witness = Some(format!("A_({},{})^{} has a monomial of weight {wm}", x + 1, y + 1, c + 1));
                        break 'outer;
                    }
                }
            }
        }
    }
    let mut r = Report::new();
    r.record("quasi-homogeneity", witness);
    r
}

/// `l_frame(0)` spans `L^{F(0)}`.
pub fn base_case_check(model: &ModelBundle, order: u32) -> Result<Report> {
    let mv = mc_solve_miniversal(&model.g, order)?;
    let window = model.window(order);
    let zero = SuperSeries::zero(&mv.vars, model.g.dim());
    let frame = l_frame(&model.module, &model.g, &zero, &model.cohomology, window)?.frame;
    let lf = subspace_from_filtration(&model.hodge_filtration(), &mv.vars, window)?;
    let mut r = Report::new();
    r.record("base case L(0) = L^F", spans_equal(&frame, &lf));
    Ok(r)
}

/// The mini-versal solution restricted to directions of charge `+2` (other
/// variables set to zero), which is again Maurer–Cartan.
pub fn cs_gamma(model: &ModelBundle, order: u32) -> Result<SuperSeries> {
    let mv = mc_solve_miniversal(&model.g, order)?;
    let sp = model.g.space();
    let keep: Vec<bool> = mv
        .harmonic
        .iter()
        .map(|e| e.iter().enumerate().all(|(i, c)| c.is_zero() || (sp.charge(i) == 2 && sp.degree(i) == 1)))
        .collect();
    let mut out = SuperSeries::zero(&mv.vars, model.g.dim());
    for (m, v) in mv.gamma.terms() {
        if m.exponents().iter().zip(&keep).all(|(&e, &k)| e == 0 || k) {
            out.add_term(m.clone(), v.clone());
        }
    }
    Ok(out)
}

/// For `γ` of pure charge `+2`: `L(γ) = exp(i_γ) L^{F(0)}`, realized as the
/// classes of `exp(i_γ) l_ħ s_k`, and no generator reaches below `ħ^{c_k/2}`.
pub fn cs_case_check(model: &ModelBundle, gamma: &SuperSeries) -> Result<Report> {
    let vars = gamma.vars().clone();
    let window = model.window(vars.order());
    let m = &model.module;
    let deformed = l_frame(m, &model.g, gamma, &model.cohomology, window)?;
    let i_gamma = HbarOperator::from_terms(&vars, m.dim(), m.dim(), false, vec![(0, m.i_series(gamma, 1))])?;
    let mut generators = Vec::new();
    for s in &deformed.lifts {
        let lifted = apply_exp(&i_gamma, &m.l_hbar(s)?)?;
        generators.push(model.cohomology.project(&lifted));
    }
    let cs = SemiInfiniteFrame::new(FrameKind::Complement, generators)?;
    let mut r = Report::new();
    r.record("cs-case L(γ) = exp(i_γ) L^F", spans_equal(&deformed.frame, &cs));
    let spill = deformed.frame.generators.iter().enumerate().find_map(|(k, g)| {
        let c = model.cohomology.charges[k];
        g.exponents().into_iter().find(|&e| e < c).map(|e| format!("generator {} has ħ^({e}/2) below ħ^({c}/2)", k + 1))
    });
    r.record("cs-case no ħ^{-1} spillover", spill);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;
    use crate::models::toy::obstructed_model;
    use crate::models::{random_abelian_model, torus_model, RandomSpec};
    use crate::semihodge::pipeline::run_periods;

    #[test]
    fn shipped_models_satisfy_the_cy_condition() {
        for m in [torus_model(1).unwrap(), torus_model(2).unwrap(), random_abelian_model(0, &RandomSpec::default()).unwrap()] {
            assert!(cy_condition_check(&m, None).unwrap().passed(), "{}", m.name);
        }
    }

    #[test]
    fn missing_directions_fail_the_cy_condition() {
        let m = obstructed_model().unwrap();
        let r = cy_condition_check(&m, None).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn torus_structure_constants_pass_and_mutations_fail() {
        let p = run_periods(&torus_model(1).unwrap(), 1).unwrap();
        assert!(flatness_check(&p.a).passed());
        assert!(quasi_homogeneity_check(&p.a, &p.flat.levels, 1).passed());
        let (x, y, c) = (0..4)
            .flat_map(|x| (0..4).flat_map(move |y| (0..4).map(move |c| (x, y, c))))
            .find(|&(x, y, c)| x != y && !p.a.a[x][y][c].is_zero())
            .unwrap();
        let mut bad = p.a.clone();
        bad.a[x][y][c] = bad.a[x][y][c].scale(&rat(2));
        assert!(!flatness_check(&bad).get("A graded symmetric").unwrap().pass);
        let mut skew = p.a.clone();
        skew.a[x][y][c] = SuperSeries::variable(&p.a.vars, 0).add(&skew.a[x][y][c]).unwrap();
        assert!(!quasi_homogeneity_check(&skew, &p.flat.levels, 1).passed());
    }

    #[test]
    fn wdvv_detects_asymmetric_eta() {
        let p = run_periods(&random_abelian_model(1, &RandomSpec::default()).unwrap(), 1).unwrap();
        let (ok, phi) = wdvv_check(&p.eta, &p.c, &p.a.vars).unwrap();
        assert!(ok.passed() && phi.is_some());
        let d = p.eta.rows();
        let (i, j) = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).find(|&(i, j)| i != j && !p.eta[(i, j)].is_zero()).unwrap();
        let mut eta = p.eta.clone();
        eta[(i, j)] = eta[(i, j)].clone() * rat(3);
        assert!(!wdvv_check(&eta, &p.c, &p.a.vars).unwrap().0.get("η graded symmetric").unwrap().pass);
    }

    #[test]
    fn cs_case_on_the_torus() {
        let m = torus_model(1).unwrap();
        let gamma = cs_gamma(&m, 3).unwrap();
        assert!(!gamma.is_zero());
        assert!(cs_case_check(&m, &gamma).unwrap().passed());
    }

    #[test]
    fn griffiths_holds_on_random_frames() {
        let m = random_abelian_model(5, &RandomSpec::default()).unwrap();
        let mv = mc_solve_miniversal(&m.g, 3).unwrap();
        let frame = l_frame(&m.module, &m.g, &mv.gamma, &m.cohomology, m.window(3)).unwrap().frame;
        assert!(griffiths_residual(&frame).unwrap().passed());
    }
}

