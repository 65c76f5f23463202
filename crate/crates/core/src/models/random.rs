//! Random abelian models built from Gorenstein monomial algebras.
//!
//! `A = ⊗ C[x_i]/(x_i^{k_i+1})` with odd generators exterior, graded by an
//! internal degree `Adeg` and a charge, whose socle has `Adeg = 0` and charge
//! `2n`. Then `g = A` (degree `Adeg + 1`, abelian, no differential),
//! `h = A` (degree `n + Adeg`, charge `charge - n`), `i_a` is multiplication
//! by `a`, `G` reads off the socle coefficient of a product and `Ω0 = 1`.
//! Acyclic pairs, graded basis changes and a rotated `W` are layered on top.

use std::sync::Arc;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelBundle;
use crate::algebra::graded::GradedSpace;
use crate::algebra::linalg::inverse;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{rat, sign, zero, Rat};
use crate::algebra::series::{SuperSeries, VarSpace};
use crate::dgla::{Dgla, HodgeData};
use crate::error::{Error, Result};
use crate::semihodge::filtration::FiltrationW;
use crate::ximodule::{cohomology_frame, XiModule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    /// Even; the socle has charge `2n`.
    pub n: i32,
    pub max_dim_h: usize,
    pub max_generators: usize,
    /// Generator charges are drawn from `[-charge_range, charge_range]`.
    pub charge_range: i32,
    /// Add two acyclic pairs to `h`, carried by `d1` or `d2` at random.
    pub d2_pairs: bool,
    /// Add an acyclic pair `a → da` to `g`.
    pub g_pair: bool,
    pub basis_change: bool,
    /// Replace `W_std` by `exp(N) W_std` for a random `G`-skew `N`.
    pub random_w: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            n: 2,
            max_dim_h: 8,
            max_generators: 3,
            charge_range: 4,
            d2_pairs: true,
            g_pair: true,
            basis_change: true,
            random_w: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Generator {
    adeg: i32,
    charge: i32,
    /// Largest nonzero power (1 for odd generators).
    top: u8,
}

impl Generator {
    fn odd(&self) -> bool {
        self.adeg.rem_euclid(2) == 1
    }
}

/// The monomial algebra: basis of exponent vectors and the product table.
struct MonomialAlgebra {
    gens: Vec<Generator>,
    basis: Vec<Vec<u8>>,
}

impl MonomialAlgebra {
    fn new(gens: Vec<Generator>) -> Self {
        let mut basis: Vec<Vec<u8>> = vec![vec![]];
        for g in &gens {
            basis = basis.into_iter().flat_map(|b| (0..=g.top).map(move |e| [b.clone(), vec![e]].concat())).collect();
        }
        basis.sort_by_key(|b| (b.iter().map(|&e| e as u32).sum::<u32>(), b.clone()));
        MonomialAlgebra { gens, basis }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn adeg(&self, i: usize) -> i32 {
        self.basis[i].iter().zip(&self.gens).map(|(&e, g)| e as i32 * g.adeg).sum()
    }

    fn charge(&self, i: usize) -> i32 {
        self.basis[i].iter().zip(&self.gens).map(|(&e, g)| e as i32 * g.charge).sum()
    }

    fn label(&self, i: usize) -> String {
        let parts: Vec<String> = self.basis[i]
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| if e == 1 { format!("x{}", j + 1) } else { format!("x{}^{e}", j + 1) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    /// `basis[i] · basis[j] = ± basis[k]`.
    fn mul(&self, i: usize, j: usize) -> Option<(usize, bool)> {
        let (a, b) = (&self.basis[i], &self.basis[j]);
        let mut swaps = 0u32;
        for (jj, g) in self.gens.iter().enumerate() {
            if g.odd() && b[jj] == 1 {
                swaps += self.gens.iter().enumerate().filter(|(ii, h)| *ii > jj && h.odd() && a[*ii] == 1).count() as u32;
            }
        }
        let prod: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        if prod.iter().zip(&self.gens).any(|(&e, g)| e > g.top) {
            return None;
        }
        let k = self.basis.iter().position(|m| *m == prod).expect("closed under products");
        Some((k, swaps % 2 == 1))
    }

    fn socle(&self) -> usize {
        self.dim() - 1
    }
}

fn draw_generators(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> Option<Vec<Generator>> {
    let count = rng.gen_range(1..=spec.max_generators.max(1));
    let draw = |rng: &mut ChaCha8Rng, odd: bool| {
        let adeg = if odd { [-1, 1][rng.gen_range(0..2)] } else { [-2, 0, 0, 2][rng.gen_range(0..4)] };
        let r = spec.charge_range.max(1);
        let charge = loop {
            let c = rng.gen_range(-r..=r);
            if (c - adeg).rem_euclid(2) == 0 {
                break c;
            }
        };
        (adeg, charge)
    };
    let mut gens = Vec::new();
    for _ in 0..count - 1 {
        let odd = rng.gen_bool(0.5);
        let (adeg, charge) = draw(rng, odd);
        gens.push(Generator { adeg, charge, top: if odd { 1 } else { rng.gen_range(1..=2) } });
    }
    // the last generator is fixed by the socle conditions
    let sum_d: i32 = gens.iter().map(|g| g.top as i32 * g.adeg).sum();
    let sum_c: i32 = gens.iter().map(|g| g.top as i32 * g.charge).sum();
    let top: u8 = rng.gen_range(1..=2);
    let (adeg, charge) = (-sum_d, 2 * spec.n - sum_c);
    if adeg % top as i32 != 0 || charge % top as i32 != 0 {
        return None;
    }
    let (adeg, charge) = (adeg / top as i32, charge / top as i32);
    if (adeg - charge).rem_euclid(2) != 0 || (adeg.rem_euclid(2) == 1 && top != 1) {
        return None;
    }
    gens.push(Generator { adeg, charge, top });
    Some(gens)
}

/// A unitriangular matrix mixing basis vectors only within equal
/// `(degree, charge)` blocks.
fn graded_unitriangular(rng: &mut ChaCha8Rng, degrees: &[i32], charges: &[i32]) -> Matrix {
    let n = degrees.len();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            Rat::one()
        } else if i > j && degrees[i] == degrees[j] && charges[i] == charges[j] {
            rat(rng.gen_range(-2..=2))
        } else {
            zero()
        }
    })
}

fn conjugate(b: &Matrix, b_inv: &Matrix, m: &Matrix) -> Matrix {
    b_inv.mul(&m.mul(b))
}

fn nilpotent_exp(nm: &Matrix) -> Matrix {
    let n = nm.rows();
    let mut out = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=n {
        term = term.mul(nm).scale(&(Rat::one() / rat(k as i64)));
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
    }
    out
}

/// A reproducible random abelian model; retries internally until the
/// socle constraints and the dimension bound can be met.
pub fn random_abelian_model(seed: u64, spec: &RandomSpec) -> Result<ModelBundle> {
    if spec.n % 2 != 0 || spec.n < 0 {
        return Err(Error::Invalid("random models need an even n >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let Some(gens) = draw_generators(&mut rng, spec) else { continue };
        let alg = MonomialAlgebra::new(gens);
        let extra = if spec.d2_pairs { 4 } else { 0 };
        if alg.dim() + extra > spec.max_dim_h || alg.dim() < 2 {
            continue;
        }
        return build(&mut rng, alg, seed, spec);
    }
    Err(Error::Invalid(format!("no admissible algebra found for seed {seed}")))
}

fn build(rng: &mut ChaCha8Rng, alg: MonomialAlgebra, seed: u64, spec: &RandomSpec) -> Result<ModelBundle> {
    let n = spec.n;
    let da = alg.dim();

    // g = A (+ acyclic pair a -> b)
    let mut g_labels: Vec<String> = (0..da).map(|i| format!("g[{}]", alg.label(i))).collect();
    let mut g_deg: Vec<i32> = (0..da).map(|i| alg.adeg(i) + 1).collect();
    let mut g_ch: Vec<i32> = (0..da).map(|i| alg.charge(i)).collect();
    if spec.g_pair {
        g_labels.extend(["a".to_string(), "b".to_string()]);
        g_deg.extend([0, 1]);
        g_ch.extend([0, 1]);
    }
    let dg = g_labels.len();
    let mut d_g = Matrix::zeros(dg, dg);
    let mut p = Matrix::zeros(dg, dg);
    let mut k = Matrix::zeros(dg, dg);
    for i in 0..da {
        p[(i, i)] = Rat::one();
    }
    if spec.g_pair {
        d_g[(da + 1, da)] = Rat::one();
        k[(da, da + 1)] = Rat::one();
    }

    // h = A (+ two acyclic d2-pairs u -> w, u' -> w')
    let mut h_labels: Vec<String> = (0..da).map(|i| alg.label(i)).collect();
    let mut h_deg: Vec<i32> = (0..da).map(|i| n + alg.adeg(i)).collect();
    let mut h_ch: Vec<i32> = (0..da).map(|i| alg.charge(i) - n).collect();
    let mut pair_data = None;
    if spec.d2_pairs {
        let on_d1 = rng.gen_bool(0.5);
        // d1 raises the charge by one, d2 lowers it
        let step = if on_d1 { 1 } else { -1 };
        let du = rng.gen_range(0..=(2 * n - 1).max(0));
        let cu = loop {
            let c = rng.gen_range(-3..=3);
            if (c - du).rem_euclid(2) == 0 {
                break c;
            }
        };
        h_labels.extend(["u", "w", "u'", "w'"].map(String::from));
        h_deg.extend([du, du + 1, 2 * n - 1 - du, 2 * n - du]);
        h_ch.extend([cu, cu + step, -step - cu, -cu]);
        pair_data = Some((du.rem_euclid(2) == 1, on_d1));
    }
    let dh = h_labels.len();
    let mut d1 = Matrix::zeros(dh, dh);
    let mut d2 = Matrix::zeros(dh, dh);
    let mut pairing = Matrix::zeros(dh, dh);
    let socle = alg.socle();
    for i in 0..da {
        for j in 0..da {
            if let Some((kk, neg)) = alg.mul(i, j) {
                if kk == socle {
                    pairing[(i, j)] = sign(neg);
                }
            }
        }
    }
    if let Some((u_odd, on_d1)) = pair_data {
        let (u, w, u2, w2) = (da, da + 1, da + 2, da + 3);
        let d = if on_d1 { &mut d1 } else { &mut d2 };
        d[(w, u)] = Rat::one();
        d[(w2, u2)] = Rat::one();
        // G(u, w') = 1, G(w, u') = -(-1)^|u|, plus graded-symmetric partners
        pairing[(u, w2)] = Rat::one();
        pairing[(w2, u)] = sign(u_odd);
        pairing[(w, u2)] = -sign(u_odd);
        pairing[(u2, w)] = Rat::one();
    }
    let contraction: Vec<Matrix> = (0..dg)
        .map(|a| {
            let mut m = Matrix::zeros(dh, dh);
            if a < da {
                for j in 0..da {
                    if let Some((kk, neg)) = alg.mul(a, j) {
                        m[(kk, j)] = sign(neg);
                    }
                }
            }
            m
        })
        .collect();
    let mut omega0 = vec![zero(); dh];
    omega0[0] = Rat::one();

    // graded changes of basis
    let (bg, bh) = if spec.basis_change {
        (graded_unitriangular(rng, &g_deg, &g_ch), graded_unitriangular(rng, &h_deg, &h_ch))
    } else {
        (Matrix::identity(dg), Matrix::identity(dh))
    };
    let bg_inv = inverse(&bg).expect("unitriangular");
    let bh_inv = inverse(&bh).expect("unitriangular");
    let d_g = conjugate(&bg, &bg_inv, &d_g);
    let hodge = HodgeData { p: conjugate(&bg, &bg_inv, &p), k: conjugate(&bg, &bg_inv, &k) };
    let contraction: Vec<Matrix> = (0..dg)
        .map(|a| {
            let mut acc = Matrix::zeros(dh, dh);
            for (b, m) in contraction.iter().enumerate() {
                if !bg[(b, a)].is_zero() {
                    acc = acc.add(&m.scale(&bg[(b, a)]));
                }
            }
            conjugate(&bh, &bh_inv, &acc)
        })
        .collect();
    let d1 = conjugate(&bh, &bh_inv, &d1);
    let d2 = conjugate(&bh, &bh_inv, &d2);
    let pairing = bh.transpose().mul(&pairing).mul(&bh);
    let omega0 = bh_inv.apply(&omega0);

    let g_space = GradedSpace::new(g_labels, g_deg, g_ch)?;
    let h_space = GradedSpace::new(h_labels, h_deg, h_ch)?;
    let g = Dgla::new(g_space, d_g.clone(), vec![Matrix::zeros(dg, dg); dg], Some(hodge))?;
    let module = XiModule::new(h_space, &g, d1, d2, contraction, pairing, omega0)?;
    let cohomology = cohomology_frame(&module)?;
    let mut w = FiltrationW::standard(&cohomology);
    if spec.random_w {
        let dim = cohomology.dim();
        let gm = Matrix::from_fn(dim, dim, |i, j| module.pair(&cohomology.classes[i], &cohomology.classes[j]));
        let gm = super::poincare_form(&gm, &cohomology.charges);
        let n0 = Matrix::from_fn(dim, dim, |i, j| {
            let (ci, cj) = (&cohomology, &cohomology);
            if ci.degrees[i] == cj.degrees[j] && ci.charges[i] == cj.charges[j] - 2 {
                rat(rng.gen_range(-2..=2))
            } else {
                zero()
            }
        });
        // N = N0 - N0*, N0* = G^{-1} N0^T G the adjoint for the form W must be isotropic under
        let gi = inverse(&gm).ok_or_else(|| Error::Singular("cohomology pairing".into()))?;
        let adj = gi.mul(&n0.transpose()).mul(&gm);
        let nm = n0.sub(&adj);
        let parities: Vec<bool> = (0..dim).map(|k| cohomology.parity(k)).collect();
        w = w.transformed(&nilpotent_exp(&nm), &parities)?;
    }
    ModelBundle::new(format!("random.{seed}"), g, module, w, 3)
}

/// A random series without constant term whose every term has total degree
/// `total_degree` (`degrees` are those of the coefficient space). Each
/// admissible (monomial, basis vector) slot is filled with probability `density`.
pub fn random_series(rng: &mut impl Rng, vars: &Arc<VarSpace>, degrees: &[i32], total_degree: i32, density: f64) -> SuperSeries {
    let mut s = SuperSeries::zero(vars, degrees.len());
    for m in vars.all_monomials() {
        if vars.order_of(&m) == 0 {
            continue;
        }
        let mut v = vec![zero(); degrees.len()];
        for (j, d) in degrees.iter().enumerate() {
            if vars.degree(&m) + d == total_degree && rng.gen_bool(density) {
                v[j] = rat(rng.gen_range(-2..=2));
            }
        }
        s.add_term(m, v);
    }
    s
}
