//! Constitutive sets of convex static systems.
//!
//! A static system pairs a cone of admissible virtual displacements with a
//! positively homogeneous convex virtual-work form; its constitutive set is
//! the Legendre transform of that form. This crate decides membership in such
//! sets numerically, evaluates generating families over product fibrations,
//! and ships the worked example systems with their closed-form answers.

pub mod convex;
pub mod error;
pub mod euclid;
pub mod examples;
pub mod families;
pub mod grid;
pub mod statics;

pub use convex::{
    eval_form, hull_membership, legendre_membership, separate, support_function, AffineSeparator, Cone, ConeKind,
    HomogeneousForm, LegendreOptions, Membership, SampledSet, Seminorm, SublinearForm, Verdict,
};
pub use error::{Error, Result};
pub use euclid::{pair, unit_sphere_samples, Covector, MetricSpace, Point, Vector};
pub use grid::{ForceGrid, GridAxis};
pub use statics::{
    classify_constraints, constitutive_membership, constitutive_sample, energy_system, Chart, ConstraintKind,
    ForcePoint, StaticSystem,
};
