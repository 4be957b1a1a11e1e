//! Support functions of finite sets of covectors.

use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, Covector, MetricSpace, Vector};

/// A finite sample of covectors standing in for a closed convex set.
#[derive(Clone, Debug)]
pub struct SampledSet {
    space: MetricSpace,
    points: Vec<Covector>,
}

impl SampledSet {
    pub fn new(space: &MetricSpace, points: Vec<Covector>) -> Result<Self> {
        for p in &points {
            check_dim(space.dim(), p.dim())?;
        }
        Ok(Self {
            space: space.clone(),
            points,
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn points(&self) -> &[Covector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `max_{f ∈ S} ⟨f, v⟩`.
pub fn support_function(set: &SampledSet, v: &Vector) -> Result<f64> {
    check_dim(set.space.dim(), v.dim())?;
    if set.points.is_empty() {
        return Err(Error::Usage("support function of an empty set".into()));
    }
    Ok(set
        .points
        .iter()
        .map(|f| dot(f.as_slice(), v.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max))
}
