//! Shipped models, random generators and the JSON interchange format.

pub mod io;
pub mod random;
pub mod torus;
pub mod toy;

use num_traits::Zero;

use crate::algebra::hbar::Window;
use crate::algebra::matrix::Matrix;
use crate::algebra::rational::Rat;
use crate::dgla::{check_dgla, Dgla};
use crate::error::Result;
use crate::report::Report;
use crate::semihodge::checks::cy_condition_check;
use crate::semihodge::filtration::{isotropy_check, opposite_check, FiltrationF, FiltrationW};
use crate::ximodule::{check_ximodule, cohomology_frame, CohomologyFrame, XiModule};

pub use random::{random_abelian_model, random_series, RandomSpec};
pub use torus::torus_model;

/// Everything a period computation needs: the algebra, its module, the
/// opposite filtration (in cohomology coordinates) and a default order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub name: String,
    pub g: Dgla,
    pub module: XiModule,
    pub cohomology: CohomologyFrame,
    pub w: FiltrationW,
    pub default_order: u32,
}

pub(crate) fn poincare_form(pairing: &Matrix, charges: &[i32]) -> Matrix {
    Matrix::from_fn(charges.len(), charges.len(), |i, j| {
        let g = pairing[(i, j)].clone();
        if charges[j].div_euclid(2) % 2 == 0 {
            g
        } else {
            -g
        }
    })
}

impl ModelBundle {
    /// Assembles a bundle; `w` is expressed in the class coordinates of
    /// [`cohomology_frame`]. No axioms are checked here, see [`ModelBundle::validate`].
    pub fn new(name: String, g: Dgla, module: XiModule, w: FiltrationW, default_order: u32) -> Result<Self> {
        let cohomology = cohomology_frame(&module)?;
        Ok(ModelBundle { name, g, module, cohomology, w, default_order })
    }

    pub fn parities(&self) -> Vec<bool> {
        (0..self.cohomology.dim()).map(|k| self.cohomology.parity(k)).collect()
    }

    pub fn hodge_filtration(&self) -> FiltrationF {
        FiltrationF::hodge(&self.cohomology)
    }

    /// The pairing on class representatives.
    pub fn cohomology_pairing(&self) -> Matrix {
        let c = &self.cohomology.classes;
        Matrix::from_fn(c.len(), c.len(), |i, j| self.module.pair(&c[i], &c[j]))
    }

    /// The pairing that the `ħ`-extended pairing induces on each coefficient:
    /// `G(x, Sy)` with `S = (-1)^{⌊c/2⌋}` on classes of charge `c`. Isotropy of
    /// `W` is measured against this form.
    pub fn poincare_pairing(&self) -> Matrix {
        poincare_form(&self.cohomology_pairing(), &self.cohomology.charges)
    }

    /// Charge spread used for the default `ħ`-window.
    pub fn charge_spread(&self) -> i32 {
        self.module.space().charges().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn window(&self, order: u32) -> Window {
        Window::for_run(order, self.charge_spread())
    }

    /// `Ω0` in class coordinates.
    pub fn omega0_class(&self) -> Vec<Rat> {
        self.cohomology.class_of(self.module.omega0())
    }

    /// The load-time suite: algebra and module axioms, opposedness and
    /// isotropy of `W`, and the Calabi–Yau symbol condition.
    pub fn validate(&self) -> Result<Report> {
        let mut r = check_dgla(&self.g);
        r.extend(check_ximodule(&self.module, &self.g));
        let parities = self.parities();
        r.extend(opposite_check(&self.hodge_filtration(), &self.w, &parities));
        r.extend(isotropy_check(&self.w, &self.poincare_pairing()));
        let omega = self.omega0_class();
        let omega_ok = omega.iter().enumerate().all(|(k, c)| c.is_zero() || self.cohomology.charges[k] == -self.module.n());
        r.record("Ω0 is a class of charge -n", (!omega_ok || omega.iter().all(Zero::is_zero)).then(|| "Ω0 class is not of charge -n".to_string()));
        if r.passed() {
            r.extend(cy_condition_check(self, None)?);
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    #[test]
    fn shipped_models_validate() {
        for m in [torus_model(1).unwrap(), torus_model(2).unwrap()] {
            let r = m.validate().unwrap();
            assert!(r.passed(), "{}: {:?}", m.name, r.failures().collect::<Vec<_>>());
        }
        for seed in 0..25 {
            let m = random_abelian_model(seed, &RandomSpec::default()).unwrap();
            assert!(m.validate().unwrap().passed(), "seed {seed}");
        }
    }

    #[test]
    fn torus_dimensions() {
        let m = torus_model(1).unwrap();
        assert_eq!((m.g.dim(), m.module.dim(), m.module.n()), (4, 4, 1));
        let m = torus_model(2).unwrap();
        assert_eq!((m.g.dim(), m.module.dim(), m.module.n()), (16, 16, 2));
    }

    #[test]
    fn omega0_off_the_top_class_is_rejected() {
        let m = torus_model(1).unwrap();
        // 1 + dz: not of a single charge
        let module = m.module.with_omega0(vec![rat(1), rat(1), rat(0), rat(0)]);
        assert!(module.is_err() || !ModelBundle { module: module.unwrap(), ..m.clone() }.validate().unwrap().passed());
    }

    #[test]
    fn poincare_form_twists_by_charge() {
        let g = Matrix::identity(3);
        let p = poincare_form(&g, &[0, 2, -1]);
        assert_eq!((p[(0, 0)].clone(), p[(1, 1)].clone(), p[(2, 2)].clone()), (rat(1), rat(-1), rat(-1)));
    }
}
