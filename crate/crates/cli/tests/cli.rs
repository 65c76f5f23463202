use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use qperiods::algebra::rational::{parse_rat, Rat};
use qperiods::models::io::{save_model, to_json};
use qperiods::models::{random_abelian_model, torus_model, RandomSpec};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qperiods")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// A model file with one tensor entry replaced.
fn mutated(dir: &Path, seed: u64, edit: impl FnOnce(&mut Value)) -> String {
    let m = random_abelian_model(seed, &RandomSpec::default()).unwrap();
    let mut doc: Value = serde_json::from_str(&to_json(&m)).unwrap();
    edit(&mut doc);
    let path = dir.join(format!("mutated-{seed}.json"));
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn builtin_torus_checks_clean() {
    let o = run(&["check", "--builtin", "torus.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["pass"], Value::Bool(true));
    assert_eq!(doc["checks"]["d1 squares to zero"]["pass"], Value::Bool(true));
}

#[test]
fn mutated_file_fails_with_the_axiom_name() {
    let dir = tempfile::tempdir().unwrap();
    // scaling d1 breaks d1 d2 + d2 d1 = 0
    let path = mutated(dir.path(), 2, |doc| {
        let d1 = &mut doc["tensors"]["d1"];
        for row in d1.as_array_mut().unwrap() {
            for x in row.as_array_mut().unwrap() {
                if x.as_str() != Some("0") {
                    *x = Value::String("7".into());
                }
            }
        }
    });
    let o = run(&["check", "--model", &path]);
    assert_eq!(code(&o), 1);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<&String> = doc["checks"].as_object().unwrap().iter().filter(|(_, c)| c["pass"] == Value::Bool(false)).map(|(n, _)| n).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| doc["checks"][n.as_str()]["witness"].is_string()));
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = run(&["check", "--model", "/definitely/not/here.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not/here.json"));
}

#[test]
fn malformed_arguments_are_usage_errors() {
    assert_eq!(code(&run(&["periods", "--builtin", "torus.1", "--window", "5:1"])), 2);
    assert_eq!(code(&run(&["periods", "--builtin", "nope"])), 2);
    assert_eq!(code(&run(&["periods", "--builtin", "torus.1", "--order", "0"])), 2);
    assert_eq!(code(&run(&["periods"])), 2);
}

#[test]
fn obstruction_is_reported_with_its_stage() {
    let o = run(&["periods", "--builtin", "obstructed", "--order", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mc_solve: obstructed at order 2"), "{}", stderr(&o));
    let o = run(&["mc-solve", "--builtin", "obstructed", "--order", "2"]);
    assert!(stderr(&o).contains("mc_solve: obstructed at order 2"));
}

#[test]
fn periods_output_is_deterministic() {
    for format in ["json", "csv"] {
        let a = run(&["periods", "--builtin", "random.4", "--order", "2", "--format", format]);
        let b = run(&["periods", "--builtin", "random.4", "--order", "2", "--format", format]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout);
    }
}

fn rat(v: &Value) -> Rat {
    parse_rat(v.as_str().unwrap()).unwrap()
}

/// `(a, b, c, monomial) -> value` from the JSON `A` table.
fn a_from_json(doc: &Value) -> BTreeMap<(usize, usize, usize, String), Rat> {
    let mut out = BTreeMap::new();
    for (i, x) in doc["A"].as_array().unwrap().iter().enumerate() {
        for (j, y) in x.as_array().unwrap().iter().enumerate() {
            for (k, s) in y.as_array().unwrap().iter().enumerate() {
                for (m, v) in s.as_object().unwrap() {
                    out.insert((i + 1, j + 1, k + 1, m.clone()), rat(v));
                }
            }
        }
    }
    out
}

#[test]
fn csv_and_json_carry_the_same_rationals() {
    let json: Value = serde_json::from_str(&stdout(&run(&["periods", "--builtin", "random.1", "--order", "2"]))).unwrap();
    let csv_text = stdout(&run(&["periods", "--builtin", "random.1", "--order", "2", "--format", "csv"]));
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut a = BTreeMap::new();
    let mut eta = BTreeMap::new();
    let mut psi = BTreeMap::new();
    for rec in reader.records() {
        let r = rec.unwrap();
        let idx = |n: usize| r[n].parse::<usize>().unwrap();
        match &r[0] {
            "A" => {
                a.insert((idx(1), idx(2), idx(3), r[5].to_string()), parse_rat(&r[6]).unwrap());
            }
            "eta" => {
                eta.insert((idx(1), idx(2)), parse_rat(&r[6]).unwrap());
            }
            "psi" => {
                psi.insert((r[4].parse::<i32>().unwrap(), r[5].to_string(), idx(1)), parse_rat(&r[6]).unwrap());
            }
            _ => {}
        }
    }
    assert!(!a.is_empty());
    assert_eq!(a, a_from_json(&json));
    for (i, row) in json["eta"].as_array().unwrap().iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(eta[&(i + 1, j + 1)], rat(v));
        }
    }
    let mut from_json = BTreeMap::new();
    for part in json["psi"].as_array().unwrap() {
        let e = part["halfstep"].as_i64().unwrap() as i32;
        for (m, v) in part["terms"].as_object().unwrap() {
            for (c, x) in v.as_array().unwrap().iter().enumerate() {
                let x = rat(x);
                if x != parse_rat("0").unwrap() {
                    from_json.insert((e, m.clone(), c + 1), x);
                }
            }
        }
    }
    assert_eq!(psi, from_json);
}

#[test]
fn torus_constants_match_the_cup_product() {
    let out = run(&["constants", "--builtin", "torus.1", "--order", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let m = torus_model(1).unwrap();
    let r = qperiods_oracle::reference(&m, 2).unwrap();
    let cup = qperiods_oracle::cup_product_a0(&m, &r).unwrap();
    let a = a_from_json(&doc);
    for (i, x) in cup.iter().enumerate() {
        for (j, y) in x.iter().enumerate() {
            for (k, v) in y.iter().enumerate() {
                let got = a.get(&(i + 1, j + 1, k + 1, "1".to_string())).cloned().unwrap_or_else(|| parse_rat("0").unwrap());
                assert_eq!(&got, v, "A_({},{})^{}", i + 1, j + 1, k + 1);
            }
        }
    }
}

#[test]
fn order_one_is_the_truncation_of_order_three() {
    let hi: Value = serde_json::from_str(&stdout(&run(&["constants", "--builtin", "random.2", "--order", "3"]))).unwrap();
    let lo: Value = serde_json::from_str(&stdout(&run(&["constants", "--builtin", "random.2", "--order", "1"]))).unwrap();
    let degree = |m: &str| if m == "1" { 0 } else { m.split('*').map(|f| f.split_once('^').map_or(1, |(_, e)| e.parse::<u32>().unwrap())).sum() };
    let truncated: BTreeMap<_, _> = a_from_json(&hi).into_iter().filter(|((_, _, _, m), _)| degree(m) <= 1).collect();
    assert_eq!(truncated, a_from_json(&lo));
    assert_eq!(hi["eta"], lo["eta"]);
}

#[test]
fn verify_all_passes_on_the_torus() {
    let start = std::time::Instant::now();
    let o = run(&["verify-all", "--builtin", "torus.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(start.elapsed().as_secs() < 10);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let timing = doc["models"]["torus.1"]["timing_ms"].as_object().unwrap();
    assert!(timing.contains_key("oracle equivalence") && timing.contains_key("Griffiths"));
}

#[test]
fn verify_all_passes_on_small_random_models() {
    let o = run(&["verify-all", "--random", "4", "--seed", "30", "--max-dim-h", "6", "--builtin", "random.30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn sign_error_in_i_is_named_by_verify_all() {
    let dir = tempfile::tempdir().unwrap();
    let doc: Value = serde_json::from_str(&to_json(&random_abelian_model(2, &RandomSpec::default()).unwrap())).unwrap();
    let mut entries = Vec::new();
    for (a, m) in doc["tensors"]["i"].as_array().unwrap().iter().enumerate() {
        for (r, row) in m.as_array().unwrap().iter().enumerate() {
            for (c, x) in row.as_array().unwrap().iter().enumerate() {
                if x.as_str() != Some("0") {
                    entries.push((a, r, c));
                }
            }
        }
    }
    let mut named = 0;
    for (a, r, c) in entries {
        let path = mutated(dir.path(), 2, |doc| {
            let x = &mut doc["tensors"]["i"][a][r][c];
            let s = x.as_str().unwrap().to_string();
            *x = Value::String(s.strip_prefix('-').map_or(format!("-{s}"), str::to_string));
        });
        let o = run(&["verify-all", "--model", &path, "--order", "2"]);
        assert_eq!(code(&o), 1);
        let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
        if doc["models"]["random.2"]["checks"]["conjugation_residual"]["pass"] == Value::Bool(false) {
            named += 1;
            assert!(stderr(&o).contains("conjugation_residual"));
        }
    }
    assert!(named > 0);
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("torus.json");
    save_model(&torus_model(1).unwrap(), &model).unwrap();
    let out = dir.path().join("periods.json");
    let o = run(&["periods", "--model", model.to_str().unwrap(), "--order", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["gamma", "psi", "tW_map", "connection", "A", "eta", "eta_halfstep", "checks"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
}
