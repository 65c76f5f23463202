//! Bigraded finite-dimensional spaces and grading-respecting linear maps.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// A basis with an integer degree and an integer charge on every vector.
/// Parity is the degree mod 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedSpace {
    labels: Vec<String>,
    degrees: Vec<i32>,
    charges: Vec<i32>,
}

impl GradedSpace {
    pub fn new(labels: Vec<String>, degrees: Vec<i32>, charges: Vec<i32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("graded space must have dimension >= 1".into()));
        }
        if labels.len() != degrees.len() || labels.len() != charges.len() {
            return Err(Error::Dimension("labels, degrees and charges differ in length".into()));
        }
        Ok(GradedSpace { labels, degrees, charges })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.degrees[i]
    }

    pub fn charge(&self, i: usize) -> i32 {
        self.charges[i]
    }

    pub fn parity(&self, i: usize) -> bool {
        self.degrees[i].rem_euclid(2) == 1
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn degrees(&self) -> &[i32] {
        &self.degrees
    }

    pub fn charges(&self) -> &[i32] {
        &self.charges
    }
}

/// Dense map `source -> target` with fixed degree and charge shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub matrix: Matrix,
    pub degree_shift: i32,
    pub charge_shift: i32,
}

impl LinearMap {
    /// Checks that every nonzero entry respects both shifts.
    pub fn new(
        source: &GradedSpace,
        target: &GradedSpace,
        matrix: Matrix,
        degree_shift: i32,
        charge_shift: i32,
    ) -> Result<Self> {
        if matrix.rows() != target.dim() || matrix.cols() != source.dim() {
            return Err(Error::Dimension(format!(
                "map is {}x{}, spaces are {} -> {}",
                matrix.rows(),
                matrix.cols(),
                source.dim(),
                target.dim()
            )));
        }
        for (i, j, _) in matrix.entries() {
            if target.degree(i) != source.degree(j) + degree_shift
                || target.charge(i) != source.charge(j) + charge_shift
            {
                return Err(Error::Grading(format!(
                    "entry ({},{}) maps {} to {} outside shift (deg {degree_shift}, charge {charge_shift})",
                    i,
                    j,
                    source.label(j),
                    target.label(i)
                )));
            }
        }
        Ok(LinearMap { matrix, degree_shift, charge_shift })
    }

    pub fn zero(source: &GradedSpace, target: &GradedSpace, degree_shift: i32, charge_shift: i32) -> Self {
        LinearMap { matrix: Matrix::zeros(target.dim(), source.dim()), degree_shift, charge_shift }
    }

    pub fn parity(&self) -> bool {
        self.degree_shift.rem_euclid(2) == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    fn space() -> GradedSpace {
        GradedSpace::new(vec!["a".into(), "b".into()], vec![0, 1], vec![0, 1]).unwrap()
    }

    #[test]
    fn shift_invariant_enforced() {
        let s = space();
        let mut m = Matrix::zeros(2, 2);
        m[(1, 0)] = rat(1);
        assert!(LinearMap::new(&s, &s, m.clone(), 1, 1).is_ok());
        assert!(LinearMap::new(&s, &s, m, 1, 0).is_err());
    }

    #[test]
    fn empty_space_rejected() {
        assert!(GradedSpace::new(vec![], vec![], vec![]).is_err());
    }
}
