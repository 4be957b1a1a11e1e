//! Product fibrations `Q̄ = Q × F → Q`.

use crate::convex::Cone;
use crate::error::{check_dim, Result};
use crate::euclid::{MetricSpace, Point, Vector};
use crate::statics::Chart;

/// The projection of `base × fiber` onto `base`. Total-space coordinates are
/// the base coordinates followed by the fiber coordinates.
#[derive(Clone, Debug)]
pub struct Fibration {
    base: Chart,
    fiber: Chart,
    total: Chart,
}

impl Fibration {
    pub fn new(base: Chart, fiber: Chart) -> Self {
        let total = Chart::product(vec![base.clone(), fiber.clone()]);
        Self { base, fiber, total }
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn fiber(&self) -> &Chart {
        &self.fiber
    }

    pub fn total(&self) -> &Chart {
        &self.total
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    pub fn total_space(&self) -> MetricSpace {
        self.total.space()
    }

    /// `η(q̄)`.
    pub fn project(&self, qbar: &Point) -> Point {
        qbar.block(0, self.base_dim())
    }

    pub fn fiber_coords(&self, qbar: &Point) -> Point {
        qbar.block(self.base_dim(), self.fiber_dim())
    }

    pub fn join(&self, q: &Point, y: &Point) -> Result<Point> {
        check_dim(self.base_dim(), q.dim())?;
        check_dim(self.fiber_dim(), y.dim())?;
        Ok(q.concat(y))
    }

    /// `Tη(δq̄)`: the base block of a total tangent vector.
    pub fn project_vector(&self, v: &Vector) -> Vector {
        v.block(0, self.base_dim())
    }

    /// Horizontal lift `(δq, 0)`.
    pub fn lift(&self, dq: &Vector) -> Vector {
        dq.concat(&Vector::zeros(self.fiber_dim()))
    }

    /// g-orthonormal basis of the vertical subspace `V_q̄ Q̄ = {(0, w)}`.
    pub fn vertical_basis(&self, qbar: &Point) -> Result<Vec<Vector>> {
        self.total.check_point(qbar)?;
        let y = self.fiber_coords(qbar);
        let cone = self.fiber.tangent_cone(&y)?;
        let nb = self.base_dim();
        Ok(cone
            .linear_basis()
            .unwrap_or_default()
            .iter()
            .map(|w| Vector::zeros(nb).concat(w))
            .collect())
    }

    /// g-orthonormal basis of the base tangent space at `q`.
    pub fn base_tangent_basis(&self, q: &Point) -> Result<Vec<Vector>> {
        Ok(self.base.tangent_cone(q)?.linear_basis().unwrap_or_default())
    }

    /// Tangent cone of the total space at `q̄`.
    pub fn total_tangent(&self, qbar: &Point) -> Result<Cone> {
        self.total.tangent_cone(qbar)
    }
}
