//! Small hand-built algebras: a non-abelian one with a nontrivial Kuranishi
//! correction, and an obstructed one.

use super::ModelBundle;
use crate::algebra::graded::GradedSpace;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::rat;
use crate::dgla::{Dgla, HodgeData};
use crate::error::Result;
use crate::semihodge::filtration::FiltrationW;
use crate::ximodule::{cohomology_frame, XiModule};

fn unit(n: usize, k: usize) -> Vec<crate::algebra::rational::Rat> {
    (0..n).map(|i| if i == k { rat(1) } else { rat(0) }).collect()
}

/// Basis `a (0,0), x (1,2), u (1,2), v (1,1), w (2,3)` (degree, charge) with
/// `da = v`, `du = w`, `[x,x] = w`, `[a,x] = v`; harmonic part spanned by `x`,
/// homotopy `v ↦ a`, `w ↦ u`. The mini-versal solution is `t x - ½t² u`.
pub fn kuranishi_toy() -> Result<Dgla> {
    let sp = GradedSpace::new(
        ["a", "x", "u", "v", "w"].iter().map(|s| s.to_string()).collect(),
        vec![0, 1, 1, 1, 2],
        vec![0, 2, 2, 1, 3],
    )?;
    let ad = Dgla::bracket_from_entries(&sp, &[(1, 1, unit(5, 4)), (0, 1, unit(5, 3))]);
    let mut d = Matrix::zeros(5, 5);
    d[(3, 0)] = rat(1);
    d[(4, 2)] = rat(1);
    let mut p = Matrix::zeros(5, 5);
    p[(1, 1)] = rat(1);
    let mut k = Matrix::zeros(5, 5);
    k[(0, 3)] = rat(1);
    k[(2, 4)] = rat(1);
    Dgla::new(sp, d, ad, Some(HodgeData { p, k }))
}

/// `x, y` of degree 1 with `[x, y] = z`, no differential: the quadratic
/// obstruction `P[γ,γ] = 2 t_x t_y z` appears at order 2.
pub fn obstructed_dgla() -> Result<Dgla> {
    let sp = GradedSpace::new(vec!["x".into(), "y".into(), "z".into()], vec![1, 1, 2], vec![1, 1, 1])?;
    let ad = Dgla::bracket_from_entries(&sp, &[(0, 1, unit(3, 2))]);
    Dgla::new(sp, Matrix::zeros(3, 3), ad, Some(HodgeData { p: Matrix::identity(3), k: Matrix::zeros(3, 3) }))
}

/// The obstructed algebra acting trivially on a line. It satisfies the
/// module axioms but not the Calabi–Yau condition; it exists to exercise
/// error reporting of the period pipeline.
pub fn obstructed_model() -> Result<ModelBundle> {
    let g = obstructed_dgla()?;
    let h = GradedSpace::new(vec!["1".into()], vec![0], vec![0])?;
    let zero = Matrix::zeros(1, 1);
    let module = XiModule::new(h, &g, zero.clone(), zero.clone(), vec![zero; 3], Matrix::identity(1), vec![rat(1)])?;
    let w = FiltrationW::standard(&cohomology_frame(&module)?);
    ModelBundle::new("obstructed".into(), g, module, w, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgla::{check_dgla, mc_solve_miniversal};
    use crate::error::Error;
    use crate::ximodule::check_ximodule;

    #[test]
    fn toys_satisfy_the_axioms() {
        assert!(check_dgla(&kuranishi_toy().unwrap()).passed());
        let m = obstructed_model().unwrap();
        assert!(check_dgla(&m.g).passed());
        assert!(check_ximodule(&m.module, &m.g).passed());
    }

    #[test]
    fn obstruction_at_order_two() {
        let g = obstructed_dgla().unwrap();
        assert!(mc_solve_miniversal(&g, 1).is_ok());
        assert!(matches!(mc_solve_miniversal(&g, 2), Err(Error::Obstructed { order: 2, .. })));
    }
}
