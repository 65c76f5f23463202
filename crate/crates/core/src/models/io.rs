//! JSON model files with exact `"p/q"` rationals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelBundle;
use crate::algebra::graded::GradedSpace;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{format_rat, parse_rat, Rat};
use crate::dgla::{check_dgla, Dgla, HodgeData};
use crate::error::{Error, Result};
use crate::semihodge::filtration::FiltrationW;
use crate::ximodule::{check_ximodule, cohomology_frame, XiModule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    G,
    H,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub label: String,
    pub degree: i32,
    pub charge: i32,
    pub component: Component,
}

type RatMatrix = Vec<Vec<String>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tensors {
    pub d_g: RatMatrix,
    /// `bracket[i]` is `ad(e_i)`: column `j` holds `[e_i, e_j]`.
    pub bracket: Vec<RatMatrix>,
    pub d1: RatMatrix,
    pub d2: RatMatrix,
    /// `i[a]` is the contraction operator of `e_a`.
    pub i: Vec<RatMatrix>,
    #[serde(rename = "G")]
    pub pairing: RatMatrix,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<RatMatrix>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<RatMatrix>,
}

/// One level of `W`: `W_{≤r}` adds the listed `grW_basis` vectors at `2r = level`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WLevel {
    pub level: i32,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    pub basis: Vec<BasisEntry>,
    pub tensors: Tensors,
    pub omega0: Vec<String>,
    pub n: i32,
    #[serde(rename = "W")]
    pub w: Vec<WLevel>,
    /// In the class coordinates of the cohomology frame.
    #[serde(rename = "grW_basis")]
    pub grw_basis: Vec<Vec<String>>,
    pub default_order: u32,
}

fn write_matrix(m: &Matrix) -> RatMatrix {
    (0..m.rows()).map(|i| m.row(i).iter().map(format_rat).collect()).collect()
}

fn write_vector(v: &[Rat]) -> Vec<String> {
    v.iter().map(format_rat).collect()
}

fn read_vector(v: &[String]) -> Result<Vec<Rat>> {
    v.iter().map(|s| parse_rat(s)).collect()
}

fn read_matrix(m: &RatMatrix, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{what}: expected a {rows}x{cols} matrix")));
    }
    Ok(Matrix::from_rows(m.iter().map(|r| read_vector(r)).collect::<Result<_>>()?))
}

impl ModelFile {
    pub fn from_bundle(b: &ModelBundle) -> ModelFile {
        let entry = |sp: &GradedSpace, i: usize, component: Component| BasisEntry {
            label: sp.label(i).to_string(),
            degree: sp.degree(i),
            charge: sp.charge(i),
            component,
        };
        let gs = b.g.space();
        let hs = b.module.space();
        let mut basis: Vec<BasisEntry> = (0..gs.dim()).map(|i| entry(gs, i, Component::G)).collect();
        basis.extend((0..hs.dim()).map(|i| entry(hs, i, Component::H)));
        let mut levels: Vec<i32> = b.w.pieces().iter().map(|(l, _)| *l).collect();
        levels.sort_unstable();
        levels.dedup();
        let w = levels
            .into_iter()
            .map(|level| WLevel { level, indices: (0..b.w.dim()).filter(|&k| b.w.pieces()[k].0 == level).collect() })
            .collect();
        ModelFile {
            name: b.name.clone(),
            basis,
            tensors: Tensors {
                d_g: write_matrix(b.g.d()),
                bracket: (0..gs.dim()).map(|i| write_matrix(b.g.ad(i))).collect(),
                d1: write_matrix(b.module.d1()),
                d2: write_matrix(b.module.d2()),
                i: b.module.contractions().iter().map(write_matrix).collect(),
                pairing: write_matrix(b.module.pairing()),
                p: b.g.hodge().map(|h| write_matrix(&h.p)),
                k: b.g.hodge().map(|h| write_matrix(&h.k)),
            },
            omega0: write_vector(b.module.omega0()),
            n: b.module.n(),
            w,
            grw_basis: b.w.pieces().iter().map(|(_, v)| write_vector(v)).collect(),
            default_order: b.default_order,
        }
    }

    /// The algebra and its module, with no axiom checked.
    pub fn algebra(&self) -> Result<(Dgla, XiModule)> {
        let part = |c: Component| -> Result<GradedSpace> {
            let es: Vec<&BasisEntry> = self.basis.iter().filter(|e| e.component == c).collect();
            GradedSpace::new(
                es.iter().map(|e| e.label.clone()).collect(),
                es.iter().map(|e| e.degree).collect(),
                es.iter().map(|e| e.charge).collect(),
            )
        };
        let gs = part(Component::G)?;
        let hs = part(Component::H)?;
        let (dg, dh) = (gs.dim(), hs.dim());
        let t = &self.tensors;
        if t.bracket.len() != dg || t.i.len() != dg {
            return Err(Error::Parse("bracket and i need one matrix per basis vector of g".into()));
        }
        let ad = t.bracket.iter().map(|m| read_matrix(m, dg, dg, "bracket")).collect::<Result<Vec<_>>>()?;
        let hodge = match (&t.p, &t.k) {
            (Some(p), Some(k)) => Some(HodgeData { p: read_matrix(p, dg, dg, "P")?, k: read_matrix(k, dg, dg, "K")? }),
            (None, None) => None,
            _ => return Err(Error::Parse("P and K must be given together".into())),
        };
        let g = Dgla::new(gs, read_matrix(&t.d_g, dg, dg, "d_g")?, ad, hodge)?;
        let contraction = t.i.iter().map(|m| read_matrix(m, dh, dh, "i")).collect::<Result<Vec<_>>>()?;
        let omega0 = read_vector(&self.omega0)?;
        if omega0.len() != dh {
            return Err(Error::Parse("omega0 has the wrong length".into()));
        }
        let module = XiModule::new(
            hs,
            &g,
            read_matrix(&t.d1, dh, dh, "d1")?,
            read_matrix(&t.d2, dh, dh, "d2")?,
            contraction,
            read_matrix(&t.pairing, dh, dh, "G")?,
            omega0,
        )?;
        Ok((g, module))
    }

    /// Builds the bundle. Only the algebra and module axioms are checked here,
    /// since the cohomology (and hence `W`) is meaningless without them.
    pub fn to_bundle(&self) -> Result<ModelBundle> {
        let (g, module) = self.algebra()?;
        check_dgla(&g).into_result()?;
        check_ximodule(&module, &g).into_result()?;
        self.assemble(g, module)
    }

    /// [`ModelFile::to_bundle`] without the axiom checks.
    pub fn assemble(&self, g: Dgla, module: XiModule) -> Result<ModelBundle> {
        if module.n() != self.n {
            return Err(Error::Invalid(format!("n = {} but Ω0 has charge {}", self.n, -module.n())));
        }
        let cohomology = cohomology_frame(&module)?;
        let dim = cohomology.dim();
        let vectors = self.grw_basis.iter().map(|v| read_vector(v)).collect::<Result<Vec<_>>>()?;
        if vectors.len() != dim || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Parse(format!("grW_basis must hold {dim} vectors of length {dim}")));
        }
        let mut level_of = vec![None; dim];
        for l in &self.w {
            for &k in &l.indices {
                match level_of.get_mut(k) {
                    Some(slot @ None) => *slot = Some(l.level),
                    _ => return Err(Error::Parse(format!("W: index {k} repeated or out of range"))),
                }
            }
        }
        let pieces = level_of
            .into_iter()
            .zip(vectors)
            .map(|(l, v)| l.map(|l| (l, v)).ok_or_else(|| Error::Parse("W does not cover grW_basis".into())))
            .collect::<Result<Vec<_>>>()?;
        let parities: Vec<bool> = (0..dim).map(|k| cohomology.parity(k)).collect();
        let w = FiltrationW::new(dim, pieces, &parities)?;
        ModelBundle::new(self.name.clone(), g, module, w, self.default_order)
    }
}

pub fn to_json(b: &ModelBundle) -> String {
    serde_json::to_string_pretty(&ModelFile::from_bundle(b)).expect("serializable")
}

pub fn parse_model_file(s: &str) -> Result<ModelFile> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_model_file(path: &Path) -> Result<ModelFile> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model_file(&s)
}

/// Parses and validates; the first failed check becomes an error naming it.
pub fn from_json(s: &str) -> Result<ModelBundle> {
    let bundle = parse_model_file(s)?.to_bundle()?;
    bundle.validate()?.into_result()?;
    Ok(bundle)
}

pub fn save_model(b: &ModelBundle, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(b)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bundle = read_model_file(path)?.to_bundle()?;
    bundle.validate()?.into_result()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_abelian_model, torus_model, RandomSpec};

    #[test]
    fn round_trip_is_identity() {
        let models = [torus_model(1).unwrap(), torus_model(2).unwrap(), random_abelian_model(3, &RandomSpec::default()).unwrap()];
        for m in models {
            let back = from_json(&to_json(&m)).unwrap();
            assert_eq!(back, m, "{}", m.name);
        }
    }

    #[test]
    fn save_and_load() {
        let dir = std::env::temp_dir().join(format!("qperiods-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("torus.json");
        let m = torus_model(1).unwrap();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        assert!(matches!(load_model(&dir.join("missing.json")), Err(Error::Io(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn non_nilpotent_d1_is_named() {
        let m = torus_model(2).unwrap();
        let mut file = ModelFile::from_bundle(&m);
        let h: Vec<&str> = file.basis.iter().filter(|e| e.component == Component::H).map(|e| e.label.as_str()).collect();
        let idx = |l: &str| h.iter().position(|x| *x == l).unwrap_or_else(|| panic!("no {l} in {h:?}"));
        let (a, b, c) = (idx("1"), idx("dzb1"), idx("dzb1^dzb2"));
        file.tensors.d1[b][a] = "1".into();
        file.tensors.d1[c][b] = "1".into();
        let err = from_json(&serde_json::to_string(&file).unwrap()).unwrap_err();
        assert!(err.to_string().contains("d1 squares to zero"), "{err}");
    }

    #[test]
    fn schema_errors() {
        let m = torus_model(1).unwrap();
        let mut file = ModelFile::from_bundle(&m);
        file.omega0[0] = "one".into();
        assert!(matches!(from_json(&serde_json::to_string(&file).unwrap()), Err(Error::Parse(_))));
        let mut file = ModelFile::from_bundle(&m);
        file.tensors.d1.pop();
        assert!(matches!(from_json(&serde_json::to_string(&file).unwrap()), Err(Error::Parse(_))));
        assert!(matches!(from_json("{\"name\": 3}"), Err(Error::Parse(_))));
    }

    #[test]
    fn rationals_are_exact_strings() {
        let json = to_json(&random_abelian_model(1, &RandomSpec::default()).unwrap());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["tensors"]["G"][0].as_array().unwrap().iter().all(|x| x.is_string()));
    }
}
