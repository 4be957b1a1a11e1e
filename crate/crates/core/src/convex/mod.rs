//! Cones, sublinear forms, the Legendre transform and its inverse, convex
//! hulls and separation.

pub mod cone;
pub mod form;
pub mod hull;
pub mod legendre;
pub mod support;

pub(crate) use cone::default_count;
pub use cone::{Cone, ConeKind};
pub use form::{eval_form, HomogeneousForm, Seminorm, SublinearForm};
pub use hull::{hull_distance, hull_membership, separate, AffineSeparator};
pub use legendre::{
    legendre_boundary_along, legendre_membership, legendre_membership_with, max_excess, LegendreOptions, Membership,
    Verdict, DEFAULT_TOL,
};
pub use support::{support_function, SampledSet};
