use num_bigint::BigInt;
use proptest::prelude::*;

use qperiods::algebra::rational::{format_rat, parse_rat, Rat};
use qperiods::dgla::{gauge_slice_residual, mc_residual, mc_solve_miniversal};
use qperiods::models::io::{from_json, to_json};
use qperiods::models::toy::kuranishi_toy;
use qperiods::models::{random_abelian_model, RandomSpec};
use qperiods::semihodge::pipeline::run_periods;

fn random(seed: u64) -> qperiods::models::ModelBundle {
    random_abelian_model(seed, &RandomSpec::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn rationals_print_and_parse_back(n in -10_000i64..10_000, d in 1i64..500) {
        let x = Rat::new(BigInt::from(n), BigInt::from(d));
        prop_assert_eq!(parse_rat(&format_rat(&x)).unwrap(), x);
    }

    #[test]
    fn model_files_round_trip(seed in 0u64..500) {
        let m = random(seed);
        prop_assert_eq!(from_json(&to_json(&m)).unwrap(), m);
    }

    #[test]
    fn miniversal_solutions_are_maurer_cartan(seed in 0u64..500, order in 1u32..4) {
        let m = random(seed);
        let mv = mc_solve_miniversal(&m.g, order).unwrap();
        prop_assert!(mc_residual(&m.g, &mv.gamma).unwrap().is_zero());
        prop_assert!(gauge_slice_residual(&m.g, &mv.gamma).unwrap().is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// Raising N only adds higher-order terms to A and leaves η alone.
    #[test]
    fn structure_constants_are_stable_under_truncation(seed in 0u64..200) {
        let m = random(seed);
        let lo = run_periods(&m, 1).unwrap();
        let hi = run_periods(&m, 2).unwrap();
        prop_assert!(lo.report.passed() && hi.report.passed());
        prop_assert_eq!(&lo.eta, &hi.eta);
        for a in 0..hi.a.dim() {
            for b in 0..hi.a.dim() {
                for c in 0..hi.a.dim() {
                    for (mono, v) in hi.a.get(a, b, c).terms() {
                        if mono.total() <= 1 {
                            prop_assert_eq!(lo.a.get(a, b, c).coefficient(mono), v.clone());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn kuranishi_correction_appears_at_second_order() {
    let g = kuranishi_toy().unwrap();
    let mv = mc_solve_miniversal(&g, 2).unwrap();
    assert!(mc_residual(&g, &mv.gamma).unwrap().is_zero());
    // γ = t x - ½ t² u
    let u = mv.gamma.component(2);
    let (mono, coeff) = u.terms().next().expect("u component");
    assert_eq!(mono.total(), 2);
    assert_eq!(coeff[0], parse_rat("-1/2").unwrap());
}
