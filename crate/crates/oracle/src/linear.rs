//! Plain Gaussian elimination over the rationals.

use num_traits::{One, Zero};
use qperiods::algebra::rational::Rat;

/// Row-reduces `rows` (each of length `cols`) augmented by `rhs`. Returns a
/// solution with free unknowns set to zero and the rank, or `None` when the
/// system is inconsistent.
pub fn solve(rows: &[Vec<Rat>], rhs: &[Rat], cols: usize) -> Option<(Vec<Rat>, usize)> {
    let mut m: Vec<Vec<Rat>> = rows.iter().zip(rhs).map(|(r, b)| r.iter().cloned().chain([b.clone()]).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = Rat::one() / m[row][col].clone();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[row].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i != row && !r[col].is_zero() {
                let f = r[col].clone();
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if m[row..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][cols].clone();
    }
    Some((x, pivots.len()))
}

pub fn rank(rows: &[Vec<Rat>], cols: usize) -> usize {
    solve(rows, &vec![Rat::zero(); rows.len()], cols).map(|(_, r)| r).unwrap_or(0)
}

/// A basis of `{y : y·w = 0 for all w in vectors}` in dimension `dim`.
pub fn annihilator(vectors: &[Vec<Rat>], dim: usize) -> Vec<Vec<Rat>> {
    // kernel of the matrix with the vectors as rows
    let mut m: Vec<Vec<Rat>> = vectors.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..dim {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = Rat::one() / m[row][col].clone();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[row].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i != row && !r[col].is_zero() {
                let f = r[col].clone();
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..dim)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut y = vec![Rat::zero(); dim];
            y[free] = Rat::one();
            for (i, &c) in pivots.iter().enumerate() {
                y[c] = -m[i][free].clone();
            }
            y
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qperiods::algebra::rational::rat;

    #[test]
    fn solves_and_detects_inconsistency() {
        let a = vec![vec![rat(1), rat(1)], vec![rat(2), rat(2)]];
        let (x, r) = solve(&a, &[rat(3), rat(6)], 2).unwrap();
        assert_eq!((x, r), (vec![rat(3), rat(0)], 1));
        assert!(solve(&a, &[rat(3), rat(5)], 2).is_none());
    }

    #[test]
    fn annihilator_is_orthogonal() {
        let w = vec![vec![rat(1), rat(2), rat(0)]];
        let ann = annihilator(&w, 3);
        assert_eq!(ann.len(), 2);
        for y in ann {
            let dot: Rat = y.iter().zip(&w[0]).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
    }
}
