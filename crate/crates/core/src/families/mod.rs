//! Generating families over product fibrations `Q × F → Q`.
//!
//! A family is either an energy `Ū` on the total space or a virtual-work form
//! `σ̄` on its tangent bundle. Either one generates a set on the base as the
//! union, over critical points above `q`, of their contributions.

mod fibration;
mod form_family;
mod function;
mod reduce;
mod search;

pub use fibration::Fibration;
pub use form_family::{
    contribution, critical_test_form, reduced_form_at, vertical_infimum, vertical_minimum, Contribution, FormFamily,
    ReducedForm, Split, VerticalInfimumForm,
};
pub use function::{critical_test_function, kappa, FunctionFamily};
pub use reduce::{reduce_family, reduce_function_family, sublinearity_defects, ReducedEnergy, ReducedFamily, Section};
pub use search::{
    generated_set_membership, FiberGrid, GeneratedMembership, GeneratingFamily, SearchOptions, DEFAULT_PER_DIM,
};
