//! Exterior algebra on `(R^n)^d`: covectors, forms with smooth
//! coefficients, block-permutation symmetrization, trace forms, tensor
//! products, comass and exterior derivatives.

pub mod checks;
pub mod comass;
pub mod covector;
pub mod dsl;
pub mod form;
pub mod group;
pub mod poly;

pub use checks::{natural_comass_check, random_poly_form, random_polynomial, symmetrization_check};
pub use comass::{comass, comass_covector, ComassResult, ComassSettings};
pub use covector::KCovector;
pub use dsl::{BuiltForm, FormSpec};
pub use form::{natural_form, symmetrize, tensor_product, trace_form, KForm, DEFAULT_FD_STEP};
pub use group::{GroupAction, Invariance};
pub use poly::{PolyForm, Polynomial};
