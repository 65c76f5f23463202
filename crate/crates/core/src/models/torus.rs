//! Harmonic model of a complex `n`-torus.
//!
//! `g` is spanned by constant polyvector-valued forms `∂_P dz̄_Q`
//! (degree `|Q| - |P| + 1`, charge `|P| + |Q|`), `h` by constant forms
//! `dz_I dz̄_J` (degree `|I| + |J|`, charge `|J| - |I|`). All differentials and
//! brackets vanish; `∂_P dz̄_Q` contracts by `ε(dz̄_Q) ι(∂_P)`. The pairing is
//! `(-1)^{|I|}∫ α ∧ β` for `β = dz_I dz̄_J`, the sign that makes contractions
//! graded self-adjoint.

use num_traits::Zero;

use super::ModelBundle;
use crate::algebra::graded::GradedSpace;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::{rat, Rat};
use crate::dgla::{Dgla, HodgeData};
use crate::error::{Error, Result};
use crate::semihodge::filtration::FiltrationW;
use crate::ximodule::{cohomology_frame, XiModule};

/// Subsets of `0..2n` ordered by size, then by bitmask.
fn ordered_masks(n: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..1u32 << (2 * n)).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    masks
}

/// Number of set bits of `mask` strictly below `bit`.
fn below(mask: u32, bit: usize) -> u32 {
    (mask & ((1u32 << bit) - 1)).count_ones()
}

/// Interior product with the dual of generator `bit` (from the left).
fn interior(mask: u32, bit: usize) -> Option<(u32, bool)> {
    (mask & (1 << bit) != 0).then(|| (mask & !(1 << bit), below(mask, bit) % 2 == 1))
}

/// Left wedge with generator `bit`.
fn wedge(mask: u32, bit: usize) -> Option<(u32, bool)> {
    (mask & (1 << bit) == 0).then(|| (mask | (1 << bit), below(mask, bit) % 2 == 1))
}

/// Sign of `a ∧ b` relative to the ordered monomial `a | b`, if nonzero.
fn wedge_sign(a: u32, b: u32) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0;
    for j in 0..32 {
        if b & (1 << j) != 0 {
            swaps += (a >> (j + 1)).count_ones();
        }
    }
    Some(swaps % 2 == 1)
}

fn form_label(mask: u32, n: usize) -> String {
    let parts: Vec<String> = (0..2 * n)
        .filter(|&b| mask & (1 << b) != 0)
        .map(|b| if b < n { format!("dz{}", b + 1) } else { format!("dzb{}", b - n + 1) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("^")
    }
}

fn polyvector_label(mask: u32, n: usize) -> String {
    let parts: Vec<String> = (0..2 * n)
        .filter(|&b| mask & (1 << b) != 0)
        .map(|b| if b < n { format!("d{}", b + 1) } else { format!("dzb{}", b - n + 1) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

pub fn torus_model(n: usize) -> Result<ModelBundle> {
    if !(1..=2).contains(&n) {
        return Err(Error::Invalid(format!("torus model needs n in {{1, 2}}, got {n}")));
    }
    let masks = ordered_masks(n);
    let dim = masks.len();
    let index = |mask: u32| masks.iter().position(|&m| m == mask).expect("mask");
    let holo = |m: u32| (m & ((1 << n) - 1)).count_ones() as i32;
    let anti = |m: u32| (m >> n).count_ones() as i32;

    let g_space = GradedSpace::new(
        masks.iter().map(|&m| polyvector_label(m, n)).collect(),
        masks.iter().map(|&m| anti(m) - holo(m) + 1).collect(),
        masks.iter().map(|&m| anti(m) + holo(m)).collect(),
    )?;
    let h_space = GradedSpace::new(
        masks.iter().map(|&m| form_label(m, n)).collect(),
        masks.iter().map(|&m| anti(m) + holo(m)).collect(),
        masks.iter().map(|&m| anti(m) - holo(m)).collect(),
    )?;
    let zero = Matrix::zeros(dim, dim);
    let hodge = HodgeData { p: Matrix::identity(dim), k: zero.clone() };
    let g = Dgla::new(g_space, zero.clone(), vec![zero.clone(); dim], Some(hodge))?;

    // i_{∂_P dz̄_Q} = ε_{q1} ... ε_{qk} ι_{p1} ... ι_{pl}
    let contraction: Vec<Matrix> = masks
        .iter()
        .map(|&a| {
            let ps: Vec<usize> = (0..n).filter(|&b| a & (1 << b) != 0).collect();
            let qs: Vec<usize> = (n..2 * n).filter(|&b| a & (1 << b) != 0).collect();
            let mut m = Matrix::zeros(dim, dim);
            for &src in &masks {
                let mut cur = Some((src, false));
                for &p in ps.iter().rev() {
                    cur = cur.and_then(|(x, s)| interior(x, p).map(|(y, t)| (y, s ^ t)));
                }
                for &q in qs.iter().rev() {
                    cur = cur.and_then(|(x, s)| wedge(x, q).map(|(y, t)| (y, s ^ t)));
                }
                if let Some((dst, neg)) = cur {
                    m[(index(dst), index(src))] = if neg { rat(-1) } else { rat(1) };
                }
            }
            m
        })
        .collect();

    // G(x, y) = (-1)^{holo(y)} ∫ x ∧ y makes every contraction graded self-adjoint
    let top = (1u32 << (2 * n)) - 1;
    let pairing = Matrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (masks[i], masks[j]);
        if a | b != top {
            return Rat::zero();
        }
        match wedge_sign(a, b) {
            Some(neg) => {
                if neg ^ (holo(b) % 2 == 1) {
                    rat(-1)
                } else {
                    rat(1)
                }
            }
            None => Rat::zero(),
        }
    });
    let mut omega0 = vec![Rat::zero(); dim];
    omega0[index((1 << n) - 1)] = rat(1);
    let module = XiModule::new(h_space, &g, zero.clone(), zero, contraction, pairing, omega0)?;
    let cohomology = cohomology_frame(&module)?;
    let w = FiltrationW::standard(&cohomology);
    ModelBundle::new(format!("torus.{n}"), g, module, w, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let t1 = torus_model(1).unwrap();
        assert_eq!((t1.g.dim(), t1.module.dim()), (4, 4));
        let t2 = torus_model(2).unwrap();
        assert_eq!((t2.g.dim(), t2.module.dim()), (16, 16));
        assert!(torus_model(3).is_err());
    }

    #[test]
    fn wedge_signs() {
        // dz̄ ∧ dz = -dz ∧ dz̄ with dz = bit 0, dz̄ = bit 1
        assert_eq!(wedge_sign(0b10, 0b01), Some(true));
        assert_eq!(wedge_sign(0b01, 0b10), Some(false));
        assert_eq!(wedge_sign(0b01, 0b01), None);
    }
}
