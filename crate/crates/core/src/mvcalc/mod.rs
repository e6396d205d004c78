//! Calculus of multi-valued maps `U → A_d(R^n)`: differentials, pull-backs
//! of invariant forms, the quasiregular-curve inequality, weak Stokes, and
//! the diagonal interpolation `f_ε`.

mod approx;
mod differential;
mod ginv;
mod map;
mod pullback;
mod qr;
mod stokes;

pub use approx::{feps_check, halton_cloud, interpolate_feps, sampled_lipschitz, FepsSettings, Interpolation};
pub use differential::{coincidence_tol, differential, MVDifferential};
pub use ginv::generalized_inverse_check;
pub use map::{BranchFn, EvalFn, MultiValuedMap, Provenance};
pub use pullback::{
    hodge_star_top, pullback, pullback_estimate_check, pullback_relabeled, pullback_split, pullback_with,
    split_pullback_check, PullbackSample,
};
pub use qr::{qr_curve_check, qr_ratio, QrCurveSettings};
pub use stokes::{weak_stokes_check, BetaTerm, StokesSettings, TestForm, TestFormSpec};
