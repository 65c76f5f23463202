//! Exact Gaussian elimination: rank, kernels, inverses and linear solves.
//!
//! Pivoting is deterministic: columns are scanned left to right and the
//! pivot row is the first remaining row with a nonzero entry. The same
//! matrix therefore always yields the same particular solution (free
//! variables set to zero) and the same kernel basis.

use num_traits::{One, Zero};

use super::matrix::Matrix;
use super::rational::{format_rat, zero, Rat};
use crate::error::Error;

/// Row-reduced echelon form of `a` together with the row operations used.
#[derive(Clone, Debug)]
pub struct Rref {
    /// `transform * a == reduced`.
    pub transform: Matrix,
    pub reduced: Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn of(a: &Matrix) -> Rref {
        let (m, n) = (a.rows(), a.cols());
        let mut r = a.clone();
        let mut t = Matrix::identity(m);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == m {
                break;
            }
            let Some(p) = (row..m).find(|&i| !r[(i, col)].is_zero()) else {
                continue;
            };
            if p != row {
                swap_rows(&mut r, p, row);
                swap_rows(&mut t, p, row);
            }
            let inv = Rat::one() / &r[(row, col)];
            scale_row(&mut r, row, &inv);
            scale_row(&mut t, row, &inv);
            for i in 0..m {
                if i != row && !r[(i, col)].is_zero() {
                    let f = r[(i, col)].clone();
                    axpy_row(&mut r, i, row, &f);
                    axpy_row(&mut t, i, row, &f);
                }
            }
            pivots.push(col);
            row += 1;
        }
        Rref { transform: t, reduced: r, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Kernel basis: one vector per free column, with that column set to 1.
    pub fn kernel(&self) -> Vec<Vec<Rat>> {
        let n = self.reduced.cols();
        let mut is_pivot = vec![None; n];
        for (i, &c) in self.pivots.iter().enumerate() {
            is_pivot[c] = Some(i);
        }
        (0..n)
            .filter(|&j| is_pivot[j].is_none())
            .map(|free| {
                let mut v = vec![zero(); n];
                v[free] = Rat::one();
                for (i, &c) in self.pivots.iter().enumerate() {
                    v[c] = -self.reduced[(i, free)].clone();
                }
                v
            })
            .collect()
    }

    /// Particular solution of `a x = b` with free variables zero.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>, Inconsistent> {
        let c = self.transform.apply(b);
        let rank = self.rank();
        if c[rank..].iter().any(|x| !x.is_zero()) {
            let mut residual = c;
            for x in residual.iter_mut().take(rank) {
                *x = zero();
            }
            return Err(Inconsistent { residual });
        }
        let mut x = vec![zero(); self.reduced.cols()];
        for (i, &col) in self.pivots.iter().enumerate() {
            x[col] = c[i].clone();
        }
        Ok(x)
    }
}

fn swap_rows(a: &mut Matrix, i: usize, j: usize) {
    for c in 0..a.cols() {
        let tmp = a[(i, c)].clone();
        a[(i, c)] = a[(j, c)].clone();
        a[(j, c)] = tmp;
    }
}

fn scale_row(a: &mut Matrix, i: usize, f: &Rat) {
    for c in 0..a.cols() {
        if !a[(i, c)].is_zero() {
            a[(i, c)] *= f;
        }
    }
}

// row_i -= f * row_j
fn axpy_row(a: &mut Matrix, i: usize, j: usize, f: &Rat) {
    for c in 0..a.cols() {
        if !a[(j, c)].is_zero() {
            let d = &a[(j, c)] * f;
            a[(i, c)] -= d;
        }
    }
}

/// Inconsistent system; `residual` is the reduced right-hand side restricted
/// to the zero rows of the echelon form.
#[derive(Clone, Debug, PartialEq)]
pub struct Inconsistent {
    pub residual: Vec<Rat>,
}

impl From<Inconsistent> for Error {
    fn from(e: Inconsistent) -> Error {
        Error::Inconsistent { residual: e.residual.iter().map(format_rat).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub particular: Vec<Rat>,
    pub kernel: Vec<Vec<Rat>>,
}

pub fn solve_linear(a: &Matrix, b: &[Rat]) -> Result<Solution, Inconsistent> {
    assert_eq!(a.rows(), b.len(), "right-hand side length");
    let rref = Rref::of(a);
    let particular = rref.solve(b)?;
    Ok(Solution { particular, kernel: rref.kernel() })
}

pub fn rank(a: &Matrix) -> usize {
    Rref::of(a).rank()
}

pub fn kernel(a: &Matrix) -> Vec<Vec<Rat>> {
    Rref::of(a).kernel()
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    if a.rows() != a.cols() {
        return None;
    }
    let r = Rref::of(a);
    (r.rank() == a.rows()).then_some(r.transform)
}

/// Indices of a maximal linearly independent prefix-greedy subset of `vectors`.
pub fn independent_subset(vectors: &[Vec<Rat>], dim: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for (k, v) in vectors.iter().enumerate() {
        let mut trial = basis.clone();
        trial.push(v.clone());
        if rank(&Matrix::from_columns(dim, &trial)) == trial.len() {
            basis = trial;
            chosen.push(k);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    #[test]
    fn identity_system() {
        let b = vec![rat(3), rat(-1), rat(5)];
        let s = solve_linear(&Matrix::identity(3), &b).unwrap();
        assert_eq!(s.particular, b);
        assert!(s.kernel.is_empty());
    }

    #[test]
    fn zero_system() {
        let s = solve_linear(&Matrix::zeros(2, 2), &[rat(0), rat(0)]).unwrap();
        assert_eq!(s.particular, vec![rat(0), rat(0)]);
        assert_eq!(s.kernel.len(), 2);
    }

    #[test]
    fn rank_one_inconsistent() {
        let err = solve_linear(&m(&[&[1, 1], &[2, 2]]), &[rat(1), rat(3)]).unwrap_err();
        assert_eq!(err.residual, vec![rat(0), rat(1)]);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let a = m(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[0, 1, 1, 0]]);
        for k in kernel(&a) {
            assert!(a.apply(&k).iter().all(Zero::is_zero));
        }
        assert_eq!(rank(&a), 2);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert!(inverse(&m(&[&[1, 1], &[1, 1]])).is_none());
    }
}
