//! Conformal modulus of curve families, curve-wise upper gradients, the
//! area formula, Ahlfors regularity of `Ω_f`, and two-sided quasiconformality
//! of the multi-valued inverse.

mod ahlfors;
mod area;
mod curves;
mod geom_qc;
mod grid;
mod jacobian;
mod metric_qc;
mod upper_gradient;

pub use ahlfors::{ahlfors_check, ahlfors_sample, ahlfors_sampler, AhlforsSettings, OmegaFSample};
pub use area::{area_formula_check, energy_bound_check, AreaSettings, ScalarField};
pub use curves::{Curve, CurveFamily, FamilySpec};
pub use grid::{
    curve_row, discrete_modulus, family_grid, family_rows, solve_modulus, CurveRow, DensityField, Grid,
    ModulusResult, ModulusSettings,
};
pub use geom_qc::{modulus_refinement, pushforward_modulus_check, GeomQcSettings};
pub use jacobian::{fd_minv_jacobian, jacobian_vs_h_check};
pub use metric_qc::{metric_qc_check, metric_qc_rows, MetricQcRow};
pub use upper_gradient::{upper_gradient_check, UpperGradientSettings};
