//! Hodge-type filtrations on the cohomology `H` and their opposites.
//!
//! Levels `r` live in `½Z` and are stored as `2r` (half-steps). A filtration
//! is given by an adapted basis: each vector enters at one level, and the
//! subspace at level `r` only involves vectors whose level has the parity of
//! `2r`, i.e. it lives inside `⊕_{i ≡ 2r} H^i`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::algebra::hbar::HbarElement;
use crate::algebra::linalg::{inverse, kernel, rank};
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{format_rat, Rat};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::ximodule::CohomologyFrame;

#[derive(Clone, Debug, PartialEq)]
struct Pieces {
    /// `(2r, vector)` pairs forming a basis of `H`.
    pieces: Vec<(i32, Vec<Rat>)>,
}

fn vector_parity(v: &[Rat], parities: &[bool]) -> Option<bool> {
    let mut ps = v.iter().zip(parities).filter(|(c, _)| !c.is_zero()).map(|(_, &p)| p);
    let first = ps.next()?;
    ps.all(|p| p == first).then_some(first)
}

impl Pieces {
    fn new(dim: usize, pieces: Vec<(i32, Vec<Rat>)>, parities: &[bool]) -> Result<Self> {
        if pieces.len() != dim || pieces.iter().any(|(_, v)| v.len() != dim) {
            return Err(Error::Dimension(format!("a filtration basis of H needs {dim} vectors of length {dim}")));
        }
        for (two_r, v) in &pieces {
            match vector_parity(v, parities) {
                Some(p) if p == (two_r.rem_euclid(2) == 1) => {}
                _ => return Err(Error::Grading(format!("vector at level {two_r}/2 is not in the matching parity block"))),
            }
        }
        let cols: Vec<Vec<Rat>> = pieces.iter().map(|(_, v)| v.clone()).collect();
        if rank(&Matrix::from_columns(dim, &cols)) < dim {
            return Err(Error::Invalid("filtration vectors are not a basis".into()));
        }
        Ok(Pieces { pieces })
    }

    fn select(&self, pred: impl Fn(i32) -> bool) -> Vec<usize> {
        self.pieces.iter().enumerate().filter(|(_, (l, _))| pred(*l)).map(|(k, _)| k).collect()
    }

    fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.pieces.iter().map(|(l, _)| *l)
    }
}

fn same_parity(a: i32, b: i32) -> bool {
    (a - b).rem_euclid(2) == 0
}

/// Decreasing filtration `F^{≥r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationF(Pieces);

impl FiltrationF {
    pub fn new(dim: usize, pieces: Vec<(i32, Vec<Rat>)>, parities: &[bool]) -> Result<Self> {
        Pieces::new(dim, pieces, parities).map(FiltrationF)
    }

    /// `F^{≥r}` spanned by the classes with `-c ≥ 2r`: class `k` enters at `2r = -c_k`.
    pub fn hodge(frame: &CohomologyFrame) -> Self {
        let n = frame.dim();
        let pieces = (0..n).map(|k| (-frame.charges[k], unit(n, k))).collect();
        FiltrationF(Pieces { pieces })
    }

    /// Basis indices of `F^{≥r}` (argument `2r`).
    pub fn indices(&self, two_r: i32) -> Vec<usize> {
        self.0.select(|l| same_parity(l, two_r) && l >= two_r)
    }

    pub fn subspace(&self, two_r: i32) -> Vec<Vec<Rat>> {
        self.indices(two_r).into_iter().map(|k| self.0.pieces[k].1.clone()).collect()
    }

    /// Adapted basis with levels: the generator `v ħ^{-r}` of `L^F` for each piece.
    pub fn pieces(&self) -> &[(i32, Vec<Rat>)] {
        &self.0.pieces
    }

    pub fn dim(&self) -> usize {
        self.0.pieces.len()
    }
}

/// Increasing filtration `W_{≤r}`; its adapted basis doubles as the `Gr W` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationW(Pieces);

impl FiltrationW {
    pub fn new(dim: usize, pieces: Vec<(i32, Vec<Rat>)>, parities: &[bool]) -> Result<Self> {
        Pieces::new(dim, pieces, parities).map(FiltrationW)
    }

    /// `W_{≤r} = span{σ_k : -c_k/2 < r}`: class `k` enters at `2r = 2 - c_k`.
    pub fn standard(frame: &CohomologyFrame) -> Self {
        let n = frame.dim();
        let pieces = (0..n).map(|k| (2 - frame.charges[k], unit(n, k))).collect();
        FiltrationW(Pieces { pieces })
    }

    pub fn indices(&self, two_r: i32) -> Vec<usize> {
        self.0.select(|l| same_parity(l, two_r) && l <= two_r)
    }

    pub fn subspace(&self, two_r: i32) -> Vec<Vec<Rat>> {
        self.indices(two_r).into_iter().map(|k| self.0.pieces[k].1.clone()).collect()
    }

    /// `(2r_k, b_k)`: `b_k ∈ W_{≤r_k}` projects to a basis of `Gr_{r_k} W`.
    pub fn pieces(&self) -> &[(i32, Vec<Rat>)] {
        &self.0.pieces
    }

    pub fn dim(&self) -> usize {
        self.0.pieces.len()
    }

    /// Image under a linear automorphism of `H`.
    pub fn transformed(&self, a: &Matrix, parities: &[bool]) -> Result<FiltrationW> {
        let pieces = self.0.pieces.iter().map(|(l, v)| (*l, a.apply(v))).collect();
        FiltrationW::new(self.dim(), pieces, parities)
    }
}

fn unit(n: usize, k: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[k] = Rat::from_integer(1.into());
    v
}

fn level_range(f: &FiltrationF, w: &FiltrationW) -> (i32, i32) {
    let all: Vec<i32> = f.0.levels().chain(w.0.levels()).collect();
    let lo = all.iter().copied().min().unwrap_or(0) - 2;
    let hi = all.iter().copied().max().unwrap_or(0) + 2;
    (lo, hi)
}

fn block_dim(parities: &[bool], two_r: i32) -> usize {
    parities.iter().filter(|&&p| p == (two_r.rem_euclid(2) == 1)).count()
}

/// `⊕_{i≡2r} H^i = F^{≥r} ⊕ W_{≤r}` for every `r`, and the equivalent
/// transversality of `L_W` and `L^F` read off coefficient by coefficient.
pub fn opposite_check(f: &FiltrationF, w: &FiltrationW, parities: &[bool]) -> Report {
    let mut report = Report::new();
    let n = f.dim();
    let (lo, hi) = level_range(f, w);
    let mut witness = None;
    for two_r in lo..=hi {
        let mut vs = f.subspace(two_r);
        let nf = vs.len();
        vs.extend(w.subspace(two_r));
        let total = block_dim(parities, two_r);
        let rk = if vs.is_empty() { 0 } else { rank(&Matrix::from_columns(n, &vs)) };
        if vs.len() != total || rk != total {
            witness = Some(format!("r = {two_r}/2: dim F = {nf}, dim W = {}, rank {rk}, block dim {total}", vs.len() - nf));
            break;
        }
    }
    report.record("F and W opposite", witness.clone());
    // coefficient of ħ^{e/2} splits as F^{≥-e/2} ⊕ W_{≤-e/2}
    report.record("L_W transversal to L^F", witness.map(|s| format!("leading coefficients fail at {s}")));
    report
}

/// `G(α, β) = 0` for `α ∈ W_{≤r}`, `β ∈ W_{≤-r+1}`.
pub fn isotropy_check(w: &FiltrationW, pairing: &Matrix) -> Report {
    let mut report = Report::new();
    let mut witness = None;
    'outer: for (i, (la, a)) in w.pieces().iter().enumerate() {
        for (j, (lb, b)) in w.pieces().iter().enumerate() {
            // some r has a ∈ W_{≤r} and b ∈ W_{≤1-r} iff la + lb ≤ 2 with equal parities
            if la + lb <= 2 && same_parity(*la, *lb) {
                let g: Rat = a.iter().zip(pairing.apply(b)).map(|(x, y)| x * y).sum();
                if !g.is_zero() {
                    witness = Some(format!("G(b{}, b{}) = {}", i + 1, j + 1, format_rat(&g)));
                    break 'outer;
                }
            }
        }
    }
    report.record("W isotropic", witness);
    report
}

/// Splits vectors of `⊕_{i≡2r}H^i` into their `F^{≥r}` and `W_{≤r}` parts.
#[derive(Clone, Debug)]
pub struct Splitting {
    n: usize,
    levels: BTreeMap<i32, (Vec<usize>, Vec<usize>, Matrix)>,
    f: FiltrationF,
    w: FiltrationW,
}

impl Splitting {
    pub fn new(f: &FiltrationF, w: &FiltrationW, parities: &[bool]) -> Result<Self> {
        let report = opposite_check(f, w, parities);
        if !report.passed() {
            return Err(Error::Transversality(report.failures().next().and_then(|c| c.witness.clone()).unwrap_or_default()));
        }
        Ok(Splitting { n: f.dim(), levels: BTreeMap::new(), f: f.clone(), w: w.clone() })
    }

    fn level(&mut self, two_r: i32) -> &(Vec<usize>, Vec<usize>, Matrix) {
        let (f, w, n) = (&self.f, &self.w, self.n);
        self.levels.entry(two_r).or_insert_with(|| {
            let fi = f.indices(two_r);
            let wi = w.indices(two_r);
            let mut cols: Vec<Vec<Rat>> = fi.iter().map(|&k| f.pieces()[k].1.clone()).collect();
            cols.extend(wi.iter().map(|&k| w.pieces()[k].1.clone()));
            // left inverse on the block: pad with the complementary block's unit vectors
            let mut full = cols.clone();
            for k in 0..n {
                let mut trial = full.clone();
                trial.push(unit(n, k));
                if rank(&Matrix::from_columns(n, &trial)) == trial.len() {
                    full = trial;
                }
            }
            let inv = inverse(&Matrix::from_columns(n, &full)).expect("opposite filtrations");
            (fi, wi, inv)
        })
    }

    /// Coordinates of `v` along the adapted bases of `F^{≥r}` and `W_{≤r}`
    /// (returned as `(F-piece index, coefficient)` and `(W-piece index, coefficient)`).
    pub fn split(&mut self, two_r: i32, v: &[Rat]) -> Result<(Vec<(usize, Rat)>, Vec<(usize, Rat)>)> {
        let (fi, wi, inv) = self.level(two_r).clone();
        let coords = inv.apply(v);
        if coords[fi.len() + wi.len()..].iter().any(|c| !c.is_zero()) {
            return Err(Error::Grading(format!("vector outside the parity block of level {two_r}/2")));
        }
        let fpart = fi.iter().enumerate().map(|(i, &k)| (k, coords[i].clone())).collect();
        let wpart = wi.iter().enumerate().map(|(i, &k)| (k, coords[fi.len() + i].clone())).collect();
        Ok((fpart, wpart))
    }
}

fn in_span(span: &[Vec<Rat>], v: &[Rat]) -> bool {
    if v.iter().all(Zero::is_zero) {
        return true;
    }
    if span.is_empty() {
        return false;
    }
    let n = v.len();
    let r = rank(&Matrix::from_columns(n, span));
    let mut with = span.to_vec();
    with.push(v.to_vec());
    rank(&Matrix::from_columns(n, &with)) == r
}

/// `v ∈ L^F`: the coefficient of `ħ^{e/2}` lies in `F^{≥-e/2}` (every monomial).
pub fn in_lf(f: &FiltrationF, v: &HbarElement) -> bool {
    v.terms().all(|(e, s)| {
        let span = f.subspace(-e);
        s.terms().all(|(_, c)| in_span(&span, c))
    })
}

/// `v ∈ L_W`: the coefficient of `ħ^{e/2}` lies in `W_{≤-e/2}`.
pub fn in_lw(w: &FiltrationW, v: &HbarElement) -> bool {
    v.terms().all(|(e, s)| {
        let span = w.subspace(-e);
        s.terms().all(|(_, c)| in_span(&span, c))
    })
}

/// The splitting `H = ⊕_r I_r` with `I_r = F^{≥r} ∩ W_{≤r+1}`, as `(2r, vector)`
/// pairs. `φ ħ^{-r}` for `φ ∈ I_r` spans `L^F ∩ ħL_W`, which makes these the
/// right normalization targets when `W` is not the standard opposite filtration.
pub fn opposite_grading(f: &FiltrationF, w: &FiltrationW) -> Result<Vec<(i32, Vec<Rat>)>> {
    let n = f.dim();
    let (lo, hi) = level_range(f, w);
    let mut out = Vec::new();
    for two_r in lo..=hi {
        let fs = f.subspace(two_r);
        let ws = w.subspace(two_r + 2);
        if fs.is_empty() || ws.is_empty() {
            continue;
        }
        let mut cols = fs.clone();
        cols.extend(ws.iter().map(|v| v.iter().map(|c| -c).collect::<Vec<_>>()));
        for k in kernel(&Matrix::from_columns(n, &cols)) {
            let mut v = vec![Rat::zero(); n];
            for (a, fv) in k.iter().zip(&fs) {
                for (vi, fi) in v.iter_mut().zip(fv) {
                    *vi += a * fi;
                }
            }
            out.push((two_r, v));
        }
    }
    let cols: Vec<Vec<Rat>> = out.iter().map(|(_, v)| v.clone()).collect();
    if out.len() != n || rank(&Matrix::from_columns(n, &cols)) != n {
        return Err(Error::Transversality(format!("F ∩ W pieces span {} of {n} dimensions", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;
    use crate::algebra::series::{Variable, VarSpace};
    use crate::algebra::hbar::Window;
    use crate::models::{random_abelian_model, torus_model, RandomSpec};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn hodge_and_standard_filtrations_are_opposite() {
        let m = torus_model(1).unwrap();
        let r = opposite_check(&m.hodge_filtration(), &FiltrationW::standard(&m.cohomology), &m.parities());
        assert!(r.passed());
        // F^{≥0} on the even block: classes of charge ≤ 0 with even charge
        assert_eq!(m.hodge_filtration().indices(0), vec![0, 3]);
        assert_eq!(FiltrationW::standard(&m.cohomology).indices(2), vec![0, 3]);
    }

    #[test]
    fn w_equal_to_f_is_not_opposite() {
        let m = torus_model(1).unwrap();
        let f = m.hodge_filtration();
        let w = FiltrationW::new(4, f.pieces().to_vec(), &m.parities()).unwrap();
        let r = opposite_check(&f, &w, &m.parities());
        assert!(!r.get("F and W opposite").unwrap().pass);
        assert!(Splitting::new(&f, &w, &m.parities()).is_err());
    }

    #[test]
    fn vectors_must_respect_parity_blocks() {
        let parities = [false, true];
        assert!(FiltrationW::new(2, vec![(0, v(&[1, 1])), (1, v(&[0, 1]))], &parities).is_err());
        assert!(FiltrationW::new(2, vec![(0, v(&[1, 0])), (1, v(&[0, 1]))], &parities).is_ok());
        assert!(FiltrationW::new(2, vec![(0, v(&[1, 0])), (2, v(&[2, 0]))], &[false, false]).is_err());
    }

    #[test]
    fn isotropy_of_shipped_and_random_w() {
        let m = torus_model(2).unwrap();
        assert!(isotropy_check(&m.w, &m.poincare_pairing()).passed());
        for seed in 0..10 {
            let m = random_abelian_model(seed, &RandomSpec::default()).unwrap();
            assert!(isotropy_check(&m.w, &m.poincare_pairing()).passed(), "seed {seed}");
        }
    }

    #[test]
    fn non_isotropic_w_names_a_pair() {
        // G pairs the two vectors, both sitting at level 0
        let g = Matrix::from_rows(vec![v(&[0, 1]), v(&[1, 0])]);
        let w = FiltrationW::new(2, vec![(0, v(&[1, 0])), (0, v(&[0, 1]))], &[false, false]).unwrap();
        let r = isotropy_check(&w, &g);
        assert_eq!(r.get("W isotropic").unwrap().witness.as_deref(), Some("G(b1, b2) = 1"));
    }

    #[test]
    fn splitting_recombines() {
        let m = random_abelian_model(3, &RandomSpec::default()).unwrap();
        let f = m.hodge_filtration();
        let parities = m.parities();
        let mut s = Splitting::new(&f, &m.w, &parities).unwrap();
        for two_r in -4..=4 {
            let x: Vec<Rat> = (0..f.dim()).map(|k| if parities[k] == (two_r % 2 != 0) { rat(k as i64 + 1) } else { rat(0) }).collect();
            let (fp, wp) = s.split(two_r, &x).unwrap();
            let mut back = vec![rat(0); x.len()];
            for (k, c) in fp {
                back.iter_mut().zip(&f.pieces()[k].1).for_each(|(b, y)| *b += &c * y);
            }
            for (k, c) in wp {
                back.iter_mut().zip(&m.w.pieces()[k].1).for_each(|(b, y)| *b += &c * y);
            }
            assert_eq!(back, x, "level {two_r}/2");
        }
    }

    #[test]
    fn opposite_grading_splits_h() {
        for seed in 0..10 {
            let m = random_abelian_model(seed, &RandomSpec::default()).unwrap();
            let f = m.hodge_filtration();
            let pieces = opposite_grading(&f, &m.w).unwrap();
            assert_eq!(pieces.len(), f.dim());
            for (two_r, x) in &pieces {
                assert!(in_span(&f.subspace(*two_r), x));
                assert!(in_span(&m.w.subspace(two_r + 2), x));
            }
        }
    }

    #[test]
    fn membership_in_lf_and_lw() {
        let m = torus_model(1).unwrap();
        let f = m.hodge_filtration();
        let w = FiltrationW::standard(&m.cohomology);
        let vars = VarSpace::new(vec![Variable::new("t", 0)], 1);
        let win = Window::new(-8, 8);
        // dz has charge -1: in L^F from ħ^{-1/2} upwards, in L_W from ħ^{-3/2} downwards
        let dz = v(&[0, 1, 0, 0]);
        let at = |e| HbarElement::constant(&vars, e, dz.clone(), win).unwrap();
        assert!(in_lf(&f, &at(-1)) && !in_lf(&f, &at(-3)));
        assert!(in_lw(&w, &at(-3)) && !in_lw(&w, &at(-1)));
    }
}
