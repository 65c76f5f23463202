//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::Zero;
use qperiods::algebra::matrix::Matrix;
use qperiods::dgla::{check_dgla, Dgla, HodgeData};
use qperiods::models::toy::kuranishi_toy;
use qperiods::models::{random_abelian_model, torus_model, ModelBundle, RandomSpec};
use qperiods::report::Report;
use qperiods::semihodge::checks::{base_case_check, cs_case_check, cs_gamma};
use qperiods::semihodge::pipeline::run_periods;
use qperiods::verify::{axiom_check, conjugation_check, gauge_check, griffiths_check};
use qperiods::ximodule::XiModule;
use qperiods_cli::commands::cmd_periods;
use qperiods_cli::Format;

type Outcome = Result<String, String>;

const RANDOM_AXIOM_MODELS: u64 = 100;
/// Random models joining torus.1 and torus.2 in criteria 2 to 5.
const INVARIANT_SEEDS: std::ops::Range<u64> = 0..6;
const ORACLE_SEEDS: u64 = 20;
/// Models whose tensors get the single-sign-flip treatment, besides the toy algebra.
const FLIP_HOSTS: usize = 12;

fn random(seed: u64) -> ModelBundle {
    random_abelian_model(seed, &RandomSpec::default()).expect("random model")
}

fn invariant_models() -> Vec<ModelBundle> {
    let mut v = vec![torus_model(1).unwrap(), torus_model(2).unwrap()];
    v.extend(INVARIANT_SEEDS.map(random));
    v
}

fn require(model: &ModelBundle, what: &str, r: qperiods::Result<Report>) -> Result<(), String> {
    let r = r.map_err(|e| format!("{} / {what}: {e}", model.name))?;
    let failure = r.failures().next().map(|c| format!("{} / {}: {}", model.name, c.name, c.witness.clone().unwrap_or_default()));
    failure.map_or(Ok(()), Err)
}

/// Copies of `m` with one nonzero entry negated, one per entry.
fn flips(m: &Matrix) -> Vec<Matrix> {
    m.entries()
        .filter(|(_, _, x)| !x.is_zero())
        .map(|(i, j, _)| (i, j))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|(i, j)| {
            let mut f = m.clone();
            f[(i, j)] = -f[(i, j)].clone();
            f
        })
        .collect()
}

/// `(class, detected, tried)` for every single-sign flip of each tensor.
fn flip_census(g: &Dgla, m: Option<&XiModule>) -> Vec<(&'static str, usize, usize)> {
    let caught_g = |bad: Dgla| match m {
        Some(m) => !axiom_check(m, &bad).passed(),
        None => !check_dgla(&bad).passed(),
    };
    let mut out = Vec::new();
    let mut tally = |name, verdicts: Vec<bool>| out.push((name, verdicts.iter().filter(|b| **b).count(), verdicts.len()));

    tally("d_g", flips(g.d()).into_iter().map(|d| caught_g(g.with_d(d))).collect());
    let mut v = Vec::new();
    for k in 0..g.dim() {
        for f in flips(g.ad(k)) {
            let mut ad: Vec<Matrix> = (0..g.dim()).map(|j| g.ad(j).clone()).collect();
            ad[k] = f;
            v.push(caught_g(g.with_ad(ad)));
        }
    }
    tally("bracket", v);
    if let Some(h) = g.hodge() {
        tally("P", flips(&h.p).into_iter().map(|p| caught_g(g.with_hodge(Some(HodgeData { p, k: h.k.clone() })))).collect());
        tally("K", flips(&h.k).into_iter().map(|k| caught_g(g.with_hodge(Some(HodgeData { p: h.p.clone(), k })))).collect());
    }
    if let Some(m) = m {
        let caught = |bad: XiModule| !axiom_check(&bad, g).passed();
        tally("d1", flips(m.d1()).into_iter().map(|d| caught(m.with_differentials(d, m.d2().clone()))).collect());
        tally("d2", flips(m.d2()).into_iter().map(|d| caught(m.with_differentials(m.d1().clone(), d))).collect());
        let mut v = Vec::new();
        for a in 0..g.dim() {
            for f in flips(m.contraction(a)) {
                let mut cs = m.contractions().to_vec();
                cs[a] = f;
                v.push(caught(m.with_contraction(cs)));
            }
        }
        tally("i", v);
        tally("G", flips(m.pairing()).into_iter().map(|p| caught(m.with_pairing(p))).collect());
    }
    out
}

fn criterion_1() -> Outcome {
    let mut models = vec![torus_model(1).unwrap(), torus_model(2).unwrap()];
    models.extend((0..RANDOM_AXIOM_MODELS).map(random));
    for m in &models {
        require(m, "axioms", m.validate())?;
    }
    let toy = kuranishi_toy().map_err(|e| e.to_string())?;
    require(&models[0], "toy axioms", Ok(check_dgla(&toy)))?;

    let mut census = flip_census(&toy, None);
    // torus.2 is left out: 113 flips, nothing the others do not cover
    for m in models.iter().filter(|m| m.name != "torus.2").take(FLIP_HOSTS) {
        census.extend(flip_census(&m.g, Some(&m.module)));
    }
    let mut summary = Vec::new();
    for class in ["d_g", "bracket", "d1", "d2", "i", "G", "P", "K"] {
        let (caught, tried) = census.iter().filter(|(c, _, _)| *c == class).fold((0, 0), |(a, b), (_, c, t)| (a + c, b + t));
        if caught == 0 {
            return Err(format!("no sign flip of {class} was detected ({tried} tried)"));
        }
        summary.push(format!("{class} {caught}/{tried}"));
    }
    Ok(format!("{} models valid; flips caught: {}", models.len(), summary.join(", ")))
}

fn criterion_2() -> Outcome {
    for m in invariant_models() {
        require(&m, "conjugation", conjugation_check(&m.module, &m.g, 3, 50, 2))?;
    }
    Ok("50 samples per model at N = 3".into())
}

fn criterion_3() -> Outcome {
    for m in invariant_models() {
        require(&m, "base case", base_case_check(&m, 3))?;
        require(&m, "cs case", cs_gamma(&m, 3).and_then(|g| cs_case_check(&m, &g)))?;
    }
    Ok("base and cs cases".into())
}

fn criterion_4() -> Outcome {
    for m in invariant_models() {
        require(&m, "gauge", gauge_check(&m, 3, 20, 4))?;
    }
    Ok("20 samples per model and mode at N = 3".into())
}

fn criterion_5() -> Outcome {
    for m in invariant_models() {
        require(&m, "Griffiths", griffiths_check(&m, 4))?;
    }
    Ok("N = 1..4".into())
}

fn criterion_6() -> Outcome {
    let m = torus_model(1).unwrap();
    let p = run_periods(&m, 3).map_err(|e| e.to_string())?;
    require(&m, "pipeline", Ok(p.report.clone()))?;
    let r = qperiods_oracle::reference(&m, 1)?;
    let cup = qperiods_oracle::cup_product_a0(&m, &r)?;
    let one = p.a.vars.one();
    for (i, x) in cup.iter().enumerate() {
        for (j, y) in x.iter().enumerate() {
            for (k, v) in y.iter().enumerate() {
                let got = p.a.get(i, j, k).coeff(&one);
                if &got != v {
                    return Err(format!("A_({i},{j})^{k} at t = 0 is {got}, cup product gives {v}"));
                }
            }
        }
    }
    Ok(format!("{} pipeline checks; A(0) is the cup product", p.report.checks.len()))
}

fn criterion_7() -> Outcome {
    for seed in 0..ORACLE_SEEDS {
        let m = random(seed);
        if m.cohomology.dim() > 8 {
            return Err(format!("{} has dim h > 8", m.name));
        }
        let order = 2 + (seed % 2) as u32;
        let p = run_periods(&m, order).map_err(|e| format!("{}: {e}", m.name))?;
        for (what, failure) in qperiods_oracle::compare(&m, &p)? {
            if let Some(f) = failure {
                return Err(format!("{} / {what}: {f}", m.name));
            }
        }
    }
    Ok(format!("{ORACLE_SEEDS} seeds, N in 2..=3"))
}

fn criterion_8() -> Outcome {
    for m in [torus_model(1).unwrap(), random(5)] {
        for format in [Format::Json, Format::Csv] {
            let run = || cmd_periods(&m, 2, None, format).map(|(s, _)| s).map_err(|e| e.message);
            let first = run()?;
            let second = std::thread::scope(|s| s.spawn(run).join().unwrap())?;
            if first != second {
                return Err(format!("{} {format:?} output differs between runs", m.name));
            }
        }
    }
    Ok("JSON and CSV".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 8] = [
        ("axiom suite and sign flips", criterion_1, Some(5)),
        ("conjugation identity", criterion_2, None),
        ("base and cs cases", criterion_3, None),
        ("gauge invariance", criterion_4, None),
        ("Griffiths transversality", criterion_5, None),
        ("torus pipeline and cup product", criterion_6, Some(10)),
        ("oracle equivalence", criterion_7, Some(120)),
        ("deterministic periods output", criterion_8, None),
    ];
    let mut all = true;
    for (k, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = f();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(s)) = (&outcome, limit) {
            if elapsed > Duration::from_secs(s) {
                outcome = Err(format!("took longer than {s} s"));
            }
        }
        all &= outcome.is_ok();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({:.2} s) {detail}", k + 1, elapsed.as_secs_f64()),
            Err(why) => println!("criterion {}: FAIL  {name} ({:.2} s) {why}", k + 1, elapsed.as_secs_f64()),
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
