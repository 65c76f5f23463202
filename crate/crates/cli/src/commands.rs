use std::path::Path;

use qperiods::algebra::hbar::Window;
use qperiods::algebra::series::VarSpace;
use qperiods::dgla::mc_solve_miniversal;
use qperiods::models::io::{read_model_file, ModelFile};
use qperiods::models::toy::obstructed_model;
use qperiods::models::{random_abelian_model, torus_model, ModelBundle, RandomSpec};
use qperiods::report::Report;
use qperiods::semihodge::pipeline::{run_periods_in, PeriodResult};
use qperiods::verify::{axiom_check, conjugation_check, invariant_suite, timed, SuiteSpec, Timed};
use qperiods::Error;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::output::Document;
use crate::{Format, Run, Source, Verify};

/// A failure that ends the command: code 1 for mathematical failures,
/// code 2 for usage, I/O and parse errors.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Io(_) | Error::Parse(_) => 2,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { code: 2, message: message.into() }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where a model comes from: a shipped constructor or an unvalidated file.
enum Origin {
    Builtin(ModelBundle),
    File(Box<ModelFile>),
}

fn builtin(name: &str, seed: u64, spec: &RandomSpec) -> CliResult<ModelBundle> {
    let model = match name {
        "torus.1" => torus_model(1),
        "torus.2" => torus_model(2),
        "obstructed" => obstructed_model(),
        "random" => random_abelian_model(seed, spec),
        other => match other.strip_prefix("random.").map(str::parse::<u64>) {
            Some(Ok(s)) => random_abelian_model(s, spec),
            _ => return Err(usage(format!("unknown builtin model '{other}'"))),
        },
    };
    Ok(model?)
}

fn origin(source: &Source) -> CliResult<Origin> {
    match (&source.model, &source.builtin) {
        (Some(path), None) => Ok(Origin::File(Box::new(read_model_file(path)?))),
        (None, Some(name)) => Ok(Origin::Builtin(builtin(name, source.seed, &RandomSpec::default())?)),
        _ => Err(usage("give exactly one of --model or --builtin")),
    }
}

/// Loads a model; files are validated and a failed load-time check is an
/// error naming it. Builtins are taken as constructed, so that the
/// deliberately obstructed one reaches the solver.
fn load(source: &Source) -> CliResult<ModelBundle> {
    match origin(source)? {
        Origin::Builtin(b) => Ok(b),
        Origin::File(f) => {
            let bundle = f.to_bundle()?;
            bundle.validate()?.into_result()?;
            Ok(bundle)
        }
    }
}

fn parse_window(s: &str) -> CliResult<Window> {
    let bad = || usage(format!("--window expects LO:HI with LO < HI, got '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (i32, i32) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo >= hi {
        return Err(bad());
    }
    Ok(Window::new(lo, hi))
}

fn order_of(run: &Run, model: &ModelBundle) -> CliResult<u32> {
    let n = run.order.unwrap_or(model.default_order);
    if n == 0 {
        return Err(usage("--order must be at least 1"));
    }
    Ok(n)
}

fn render(doc: &Document, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Csv => doc.to_csv(),
    }
}

fn emit(doc: &Document, format: Format, out: Option<&Path>) -> CliResult<()> {
    let text = render(doc, format);
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn variables(doc: &mut Document, key: &str, vars: &VarSpace) {
    let list: Vec<Value> = vars
        .vars()
        .iter()
        .enumerate()
        .map(|(a, v)| {
            doc.rows.push(crate::output::Row {
                section: key.into(),
                i: Some(a + 1),
                value: v.degree.to_string(),
                note: v.name.clone(),
                ..Default::default()
            });
            json!({ "name": v.name, "degree": v.degree })
        })
        .collect();
    doc.insert(key, Value::Array(list));
}

pub fn check(source: &Source) -> CliResult<bool> {
    let report = match origin(source)? {
        Origin::Builtin(b) => b.validate()?,
        Origin::File(f) => {
            let (g, m) = f.algebra()?;
            let axioms = axiom_check(&m, &g);
            if axioms.passed() {
                f.assemble(g, m)?.validate()?
            } else {
                axioms
            }
        }
    };
    let mut doc = Document::default();
    let checks = doc.checks("check", &report);
    doc.insert("checks", checks);
    doc.insert("pass", Value::Bool(report.passed()));
    emit(&doc, source.format, source.out.as_deref())?;
    Ok(report.passed())
}

pub fn mc_solve(run: &Run) -> CliResult<bool> {
    let model = load(&run.source)?;
    let order = order_of(run, &model)?;
    let mv = mc_solve_miniversal(&model.g, order).map_err(|e| e.at("mc_solve"))?;
    let mut doc = Document::default();
    doc.insert("model", Value::String(model.name.clone()));
    doc.insert("order", json!(order));
    variables(&mut doc, "variables", &mv.vars);
    let gamma = doc.vector("gamma", &mv.gamma);
    doc.insert("gamma", gamma);
    emit(&doc, run.source.format, run.source.out.as_deref())?;
    Ok(true)
}

fn periods_document(model: &ModelBundle, p: &PeriodResult, constants_only: bool) -> Document {
    let mut doc = Document::default();
    doc.insert("model", Value::String(model.name.clone()));
    doc.insert("order", json!(p.order));
    if !constants_only {
        variables(&mut doc, "variables", &p.miniversal.vars);
        let gamma = doc.vector("gamma", &p.miniversal.gamma);
        doc.insert("gamma", gamma);
        let psi = doc.hbar("psi", &p.psi);
        doc.insert("psi", psi);
        let map: Vec<Value> = p.flat.map.components.iter().enumerate().map(|(k, s)| doc.scalar("tW_map", (Some(k + 1), None, None), s)).collect();
        doc.insert("tW_map", Value::Array(map));
        let conn = doc.tensor3("connection", &p.connection);
        doc.insert("connection", conn);
    }
    variables(&mut doc, "tW_variables", &p.a.vars);
    let a = doc.tensor3("A", &p.a.a);
    doc.insert("A", a);
    let eta = doc.matrix("eta", &p.eta);
    doc.insert("eta", eta);
    doc.insert("eta_halfstep", json!(p.eta_halfstep));
    doc.note("eta_halfstep", "", p.eta_halfstep.to_string());
    let c = doc.tensor3("c", &p.c);
    doc.insert("c", c);
    let phi = match &p.potential {
        Some(s) => doc.scalar("potential", (None, None, None), s),
        None => Value::Null,
    };
    doc.insert("potential", phi);
    let checks = doc.checks("check", &p.report);
    doc.insert("checks", checks);
    doc
}

/// The text `periods` prints, and whether the pipeline's own checks passed.
pub fn cmd_periods(model: &ModelBundle, order: u32, window: Option<Window>, format: Format) -> CliResult<(String, bool)> {
    let p = run_periods_in(model, order, window)?;
    Ok((render(&periods_document(model, &p, false), format), p.report.passed()))
}

pub fn periods(run: &Run, constants_only: bool) -> CliResult<bool> {
    let model = load(&run.source)?;
    let order = order_of(run, &model)?;
    let window = run.window.as_deref().map(parse_window).transpose()?;
    let p = run_periods_in(&model, order, window)?;
    let doc = periods_document(&model, &p, constants_only);
    emit(&doc, run.source.format, run.source.out.as_deref())?;
    Ok(p.report.passed())
}

/// Model size up to which the brute-force oracle is run.
const ORACLE_MAX_DIM_H: usize = 8;

fn verify_model(origin: Origin, spec: &SuiteSpec, order: u32, window: Option<Window>) -> (String, Vec<Timed>) {
    let (name, model) = match origin {
        Origin::Builtin(b) => (b.name.clone(), Ok(b)),
        Origin::File(f) => {
            // axioms and the conjugation identity need only the algebra and module
            let name = f.name.clone();
            match f.algebra() {
                Ok((g, m)) => {
                    let axioms = axiom_check(&m, &g);
                    if !axioms.passed() {
                        let conj = timed("conjugation_residual", || conjugation_check(&m, &g, spec.order, spec.conjugation_samples, spec.seed));
                        let ax = Timed { name: "axioms".into(), elapsed: std::time::Duration::ZERO, report: axioms };
                        return (name, vec![ax, conj]);
                    }
                    (name, f.assemble(g, m))
                }
                Err(e) => (name, Err(e)),
            }
        }
    };
    let model = match model {
        Ok(m) => m,
        Err(e) => return (name, vec![timed("load", || Err(e))]),
    };
    let mut out = invariant_suite(&model, spec);
    let mut result = None;
    out.push(timed("periods", || {
        let p = run_periods_in(&model, order, window)?;
        let r = p.report.clone();
        result = Some(p);
        Ok(r)
    }));
    if let Some(p) = result {
        if model.module.dim() <= ORACLE_MAX_DIM_H {
            out.push(timed("oracle equivalence", || {
                let mut r = Report::new();
                let rows = qperiods_oracle::compare(&model, &p).map_err(|e| Error::Invalid(format!("oracle: {e}")))?;
                for (quantity, failure) in rows {
                    r.record(&format!("oracle {quantity}"), failure);
                }
                Ok(r)
            }));
        }
    }
    (name, out)
}

pub fn verify_all(v: &Verify, threads: Option<usize>) -> CliResult<bool> {
    let source = &v.run.source;
    let spec = RandomSpec { max_dim_h: v.max_dim_h, ..RandomSpec::default() };
    let origins: Vec<Origin> = if source.model.is_some() || source.builtin.is_some() {
        vec![origin(source)?]
    } else {
        let mut list = vec![Origin::Builtin(torus_model(1)?), Origin::Builtin(torus_model(2)?)];
        for s in source.seed..source.seed + v.random {
            list.push(Origin::Builtin(random_abelian_model(s, &spec)?));
        }
        list
    };
    let order = v.run.order.unwrap_or(3);
    if order == 0 {
        return Err(usage("--order must be at least 1"));
    }
    let window = v.run.window.as_deref().map(parse_window).transpose()?;
    let suite = SuiteSpec { seed: source.seed, order, ..SuiteSpec::default() };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build().map_err(|e| usage(e.to_string()))?;
    let results: Vec<(String, Vec<Timed>)> =
        pool.install(|| origins.into_par_iter().map(|o| verify_model(o, &suite, order, window)).collect());

    let mut doc = Document::default();
    let mut models = Map::new();
    let mut all = true;
    for (name, timed) in &results {
        let mut report = Report::new();
        let mut timing = Map::new();
        for t in timed {
            report.extend(t.report.clone());
            let ms = t.elapsed.as_secs_f64() * 1000.0;
            timing.insert(t.name.clone(), json!((ms * 10.0).round() / 10.0));
            doc.note("timing_ms", &format!("{name}/{}", t.name), format!("{ms:.1}"));
            eprintln!("{name:>12}  {:<22} {:>9.1} ms  {}", t.name, ms, if t.report.passed() { "ok" } else { "FAIL" });
        }
        all &= report.passed();
        let checks = doc.checks(&format!("check:{name}"), &report);
        models.insert(name.clone(), json!({ "pass": report.passed(), "checks": checks, "timing_ms": timing }));
    }
    doc.insert("models", Value::Object(models));
    doc.insert("pass", Value::Bool(all));
    emit(&doc, source.format, source.out.as_deref())?;
    Ok(all)
}
