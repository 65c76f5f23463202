//! The invariant suite shared by `verify-all` and the acceptance harness:
//! conjugation identity, base and cs cases, gauge invariance and Griffiths
//! transversality, each on randomly drawn inputs from a fixed seed.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::hbar::Window;
use crate::algebra::series::{VarSpace, Variable};
use crate::dgla::{check_dgla, harmonic_basis, mc_solve_miniversal, Dgla, GaugeMode};
use crate::error::Result;
use crate::models::{random_series, ModelBundle};
use crate::report::Report;
use crate::semihodge::checks::{base_case_check, cs_case_check, cs_gamma, griffiths_residual};
use crate::semihodge::frame::{gauge_invariance_check, l_frame};
use crate::ximodule::{check_ximodule, conjugation_residual, expected_conjugation_residual, XiModule};

/// Sample sizes and orders for [`invariant_suite`].
#[derive(Clone, Debug)]
pub struct SuiteSpec {
    pub seed: u64,
    pub order: u32,
    pub conjugation_samples: usize,
    pub gauge_samples: usize,
    pub griffiths_order: u32,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec { seed: 0, order: 3, conjugation_samples: 50, gauge_samples: 20, griffiths_order: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct Timed {
    pub name: String,
    pub elapsed: Duration,
    pub report: Report,
}

/// Runs `f`, turning an error into a failed check named `name`.
pub fn timed(name: &str, f: impl FnOnce() -> Result<Report>) -> Timed {
    let start = Instant::now();
    let report = f().unwrap_or_else(|e| {
        let mut r = Report::new();
        r.fail(name, e.to_string());
        r
    });
    Timed { name: name.to_string(), elapsed: start.elapsed(), report }
}

/// Deformation variables: harmonic directions when Hodge data is present,
/// every basis direction otherwise.
fn directions(g: &Dgla, order: u32) -> Result<Arc<VarSpace>> {
    let idx: Vec<usize> = match g.hodge() {
        Some(_) => harmonic_basis(g)?.into_iter().map(|(j, _)| j).collect(),
        None => (0..g.dim()).collect(),
    };
    let vars = idx.iter().enumerate().map(|(a, &j)| Variable::new(format!("t{}", a + 1), 1 - g.space().degree(j))).collect();
    Ok(VarSpace::new(vars, order))
}

/// `exp(-i_γ/ħ)(d1 + ħd2)exp(i_γ/ħ) - d_γ(ħ) = ħ^{-1} i_{mc(γ)}` for random
/// degree-1 `γ` (not Maurer–Cartan in general).
pub fn conjugation_check(m: &XiModule, g: &Dgla, order: u32, samples: usize, seed: u64) -> Result<Report> {
    let vars = directions(g, order)?;
    let window = Window::for_run(order, m.space().charges().iter().map(|c| c.abs()).max().unwrap_or(0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witness = None;
    for k in 0..samples {
        let gamma = random_series(&mut rng, &vars, g.space().degrees(), 1, 0.5);
        let diff = conjugation_residual(m, &gamma, window)?.sub(&expected_conjugation_residual(m, g, &gamma)?)?;
        if !diff.is_zero() {
            let e = diff.terms().next().map(|(e, _)| e).unwrap_or(0);
            witness = Some(format!("sample {}: residual differs from ħ^(-1) i_mc(γ) at ħ^({e}/2)", k + 1));
            break;
        }
    }
    let mut r = Report::new();
    r.record("conjugation_residual", witness);
    Ok(r)
}

/// Both gauge modes for `samples` random degree-0 `α` each.
pub fn gauge_check(model: &ModelBundle, order: u32, samples: usize, seed: u64) -> Result<Report> {
    let mv = mc_solve_miniversal(&model.g, order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::new();
    for mode in [GaugeMode::Infinitesimal, GaugeMode::Exponentiated] {
        let mut failed = None;
        for k in 0..samples {
            let alpha = random_series(&mut rng, &mv.vars, model.g.space().degrees(), 0, 0.5);
            let one = gauge_invariance_check(&model.module, &model.g, &mv.gamma, &alpha, mode, &model.cohomology, model.window(order))?;
            failed = one.failures().next().map(|c| format!("sample {}: {}", k + 1, c.witness.clone().unwrap_or_default()));
            if failed.is_some() {
                break;
            }
        }
        let name = match mode {
            GaugeMode::Infinitesimal => "gauge invariance (infinitesimal)",
            GaugeMode::Exponentiated => "gauge invariance (exponentiated)",
        };
        r.record(name, failed);
    }
    Ok(r)
}

/// Griffiths transversality of the mini-versal frame at every order up to `max_order`.
pub fn griffiths_check(model: &ModelBundle, max_order: u32) -> Result<Report> {
    let mut r = Report::new();
    for order in 1..=max_order {
        let mv = mc_solve_miniversal(&model.g, order)?;
        let frame = l_frame(&model.module, &model.g, &mv.gamma, &model.cohomology, model.window(order))?.frame;
        let one = griffiths_residual(&frame)?;
        let witness = one.failures().next().map(|c| format!("N = {order}: {}", c.witness.clone().unwrap_or_default()));
        r.record("Griffiths transversality", witness);
    }
    Ok(r)
}

pub fn axiom_check(m: &XiModule, g: &Dgla) -> Report {
    let mut r = check_dgla(g);
    r.extend(check_ximodule(m, g));
    r
}

/// Every invariant that does not need the full period pipeline.
pub fn invariant_suite(model: &ModelBundle, spec: &SuiteSpec) -> Vec<Timed> {
    vec![
        timed("axioms", || model.validate()),
        timed("conjugation_residual", || conjugation_check(&model.module, &model.g, spec.order, spec.conjugation_samples, spec.seed)),
        timed("base case", || base_case_check(model, spec.order)),
        timed("cs case", || cs_case_check(model, &cs_gamma(model, spec.order)?)),
        timed("gauge invariance", || gauge_check(model, spec.order, spec.gauge_samples, spec.seed.wrapping_add(1))),
        timed("Griffiths", || griffiths_check(model, spec.griffiths_order)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;
    use crate::models::{random_abelian_model, torus_model, RandomSpec};

    #[test]
    fn suite_passes_on_shipped_models() {
        let spec = SuiteSpec { conjugation_samples: 5, gauge_samples: 2, griffiths_order: 2, order: 2, ..SuiteSpec::default() };
        for m in [torus_model(1).unwrap(), random_abelian_model(3, &RandomSpec::default()).unwrap()] {
            for t in invariant_suite(&m, &spec) {
                assert!(t.report.passed(), "{} / {}: {:?}", m.name, t.name, t.report.failures().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn flipped_contraction_breaks_conjugation() {
        // d1 and d2 only see part of i, so not every flip reaches the identity
        let m = random_abelian_model(2, &RandomSpec::default()).unwrap();
        let mut caught = 0;
        for a in 0..m.g.dim() {
            let nonzero: Vec<(usize, usize)> = m.module.contraction(a).entries().filter(|(_, _, x)| **x != rat(0)).map(|(i, j, _)| (i, j)).collect();
            for (i, j) in nonzero {
                let mut cs = m.module.contractions().to_vec();
                cs[a][(i, j)] = -cs[a][(i, j)].clone();
                let bad = m.module.with_contraction(cs);
                assert!(!axiom_check(&bad, &m.g).passed());
                if !conjugation_check(&bad, &m.g, 3, 10, 0).unwrap().passed() {
                    caught += 1;
                }
            }
        }
        assert!(caught > 0);
    }

    #[test]
    fn errors_become_failed_checks() {
        let t = timed("boom", || Err(crate::Error::Invalid("no".into())));
        assert!(!t.report.passed());
        assert_eq!(t.report.checks[0].name, "boom");
    }
}
