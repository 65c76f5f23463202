//! The full period computation: mini-versal family, frame, `Ψ^W`, flat
//! coordinates, structure constants, metric and potential.

use super::checks::{flatness_check, griffiths_residual, quasi_homogeneity_check, wdvv_check};
use super::filtration::{opposite_grading, FiltrationW};
use super::frame::{l_frame, SemiInfiniteFrame};
use super::periods::{
    flat_coordinates, flat_metric, normalized_frame_and_connection, psi_normalize, structure_constants, substitute_element,
    three_point, FlatCoordinates, StructureConstants,
};
use crate::algebra::hbar::{HbarElement, Window};
use crate::algebra::matrix::Matrix;
use crate::algebra::series::SuperSeries;
use crate::dgla::{mc_solve_miniversal, MiniVersal};
use crate::error::{Error, Result};
use crate::models::ModelBundle;
use crate::report::Report;

/// Outputs of [`run_periods`]. `A`, `c` and `η` are exact to `order`; the
/// series `Ψ^W`, the frame and the flat coordinates are computed at
/// `internal_order = order + 2` so that second derivatives reach `order`.
#[derive(Clone, Debug)]
pub struct PeriodResult {
    pub order: u32,
    pub internal_order: u32,
    pub miniversal: MiniVersal,
    pub frame: SemiInfiniteFrame,
    /// `Ψ^W` in the deformation coordinates `t`, in class coordinates.
    pub psi: HbarElement,
    pub flat: FlatCoordinates,
    /// `Ψ^W` in flat coordinates `t_W`.
    pub psi_flat: HbarElement,
    pub normalized: Vec<HbarElement>,
    /// `Γ_v[α][β]` along the coordinate directions of `t`.
    pub connection: Vec<Vec<Vec<SuperSeries>>>,
    pub a: StructureConstants,
    pub eta: Matrix,
    /// `⟨∂_aΨ, ∂_bΨ⟩ = η_ab ħ^{eta_halfstep/2}`.
    pub eta_halfstep: i32,
    pub c: Vec<Vec<Vec<SuperSeries>>>,
    pub potential: Option<SuperSeries>,
    pub report: Report,
}

pub fn run_periods(model: &ModelBundle, order: u32) -> Result<PeriodResult> {
    run_periods_in(model, order, None)
}

/// [`run_periods`] with an explicit `ħ`-window instead of the default one.
pub fn run_periods_in(model: &ModelBundle, order: u32, window: Option<Window>) -> Result<PeriodResult> {
    if order == 0 {
        return Err(Error::Invalid("order must be at least 1".into()));
    }
    let internal = order + 2;
    let window = window.unwrap_or_else(|| model.window(internal));
    let miniversal = mc_solve_miniversal(&model.g, internal).map_err(|e| e.at("mc_solve"))?;
    let frame = l_frame(&model.module, &model.g, &miniversal.gamma, &model.cohomology, window).map_err(|e| e.at("l_frame"))?.frame;
    let mut report = griffiths_residual(&frame).map_err(|e| e.at("griffiths"))?;

    let f = model.hodge_filtration();
    let parities = model.parities();
    let omega = model.omega0_class();
    let n = model.module.n();
    let psi = psi_normalize(&frame, &f, &model.w, &parities, &omega, n).map_err(|e| e.at("psi_normalize"))?;
    report.pass("Ψ^W unique");
    let flat = flat_coordinates(
        &psi,
        &f,
        &model.w,
        &parities,
        &model.cohomology.degrees,
        &omega,
        model.module.omega0_degree(),
        n,
    )
    .map_err(|e| e.at("flat_coordinates"))?;
    report.pass("local Torelli");
    let psi_flat = substitute_element(&psi, &flat.inverse).map_err(|e| e.at("flat_coordinates"))?;
    let grading = opposite_grading(&f, &model.w).map_err(|e| e.at("normalized_frame"))?;
    let (normalized, connection) = normalized_frame_and_connection(&frame, &f, &model.w, &parities, &grading)
        .map_err(|e| e.at("normalized_frame"))?;

    let a = structure_constants(&psi_flat).map_err(|e| e.at("structure_constants"))?;
    report.pass("Picard-Fuchs residual and A^(0) vanish");
    report.extend(flatness_check(&a));
    if model.w == FiltrationW::standard(&model.cohomology) {
        report.extend(quasi_homogeneity_check(&a, &flat.levels, n));
    }
    let (eta, eta_halfstep) =
        flat_metric(&psi_flat, &model.cohomology_pairing(), &model.cohomology.charges, &parities, n).map_err(|e| e.at("eta"))?;
    report.pass("η constant");
    let c = three_point(&a, &eta);
    let (wdvv, phi) = wdvv_check(&eta, &c, &a.vars).map_err(|e| e.at("wdvv"))?;
    report.extend(wdvv);
    Ok(PeriodResult {
        order,
        internal_order: internal,
        miniversal,
        frame,
        psi,
        flat,
        psi_flat,
        normalized,
        connection,
        a,
        eta,
        eta_halfstep,
        c,
        potential: phi.map(|(p, _)| p),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy::obstructed_model;
    use crate::models::{random_abelian_model, torus_model, RandomSpec};

    #[test]
    fn torus_pipeline_passes_every_check() {
        let p = run_periods(&torus_model(1).unwrap(), 2).unwrap();
        assert!(p.report.passed(), "{:?}", p.report.failures().collect::<Vec<_>>());
        assert_eq!(p.internal_order, 4);
        assert_eq!(p.a.vars.order(), 2);
        assert!(p.potential.is_some());
    }

    #[test]
    fn lower_orders_are_truncations() {
        let m = random_abelian_model(2, &RandomSpec::default()).unwrap();
        let hi = run_periods(&m, 3).unwrap();
        let lo = run_periods(&m, 1).unwrap();
        for (x, y) in hi.a.a.iter().flatten().flatten().zip(lo.a.a.iter().flatten().flatten()) {
            assert_eq!(x.truncated(1).reordered(&lo.a.vars).unwrap(), *y);
        }
        assert_eq!(hi.eta, lo.eta);
    }

    #[test]
    fn narrow_window_is_reported() {
        let e = run_periods_in(&torus_model(1).unwrap(), 2, Some(Window::new(-1, 1))).unwrap_err();
        assert!(matches!(e.root(), Error::WindowExhausted { .. }), "{e}");
    }

    #[test]
    fn obstruction_is_labelled_with_its_stage() {
        let e = run_periods(&obstructed_model().unwrap(), 2).unwrap_err();
        assert_eq!(e.to_string().split(':').next(), Some("mc_solve"));
        assert!(matches!(e.root(), Error::Obstructed { order: 2, .. }));
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(run_periods(&torus_model(1).unwrap(), 0).is_err());
    }
}
