//! Static systems and the principle of virtual work.
//!
//! A system is a configuration chart, a constraint predicate, and at every
//! admissible configuration a cone of virtual displacements with a virtual
//! work form on it. A force is in the constitutive set iff the form dominates
//! its virtual work on the whole cone.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::convex::{legendre_membership, Cone, HomogeneousForm, Membership, Verdict};
use crate::error::{check_dim, Error, Result};
use crate::euclid::{Covector, MetricSpace, Point, Vector};
use crate::grid::ForceGrid;

/// Tolerance on the unit constraint of sphere coordinates.
pub const SPHERE_TOL: f64 = 1e-10;

/// Configuration charts: affine spaces, unit spheres `⟨gϑ, ϑ⟩ = 1` in ambient
/// coordinates, and products of those.
#[derive(Clone, Debug)]
pub enum Chart {
    Affine(MetricSpace),
    Sphere(MetricSpace),
    Product(Vec<Chart>),
}

impl Chart {
    pub fn product(factors: Vec<Chart>) -> Self {
        Chart::Product(factors)
    }

    /// Number of ambient coordinates.
    pub fn dim(&self) -> usize {
        match self {
            Chart::Affine(s) | Chart::Sphere(s) => s.dim(),
            Chart::Product(fs) => fs.iter().map(Chart::dim).sum(),
        }
    }

    /// Ambient metric (block diagonal for products).
    pub fn space(&self) -> MetricSpace {
        match self {
            Chart::Affine(s) | Chart::Sphere(s) => s.clone(),
            Chart::Product(fs) => {
                let mut it = fs.iter().map(Chart::space);
                let first = it.next().expect("product chart needs a factor");
                it.fold(first, |acc, s| acc.product(&s))
            }
        }
    }

    /// Flattened leaf factors with their coordinate offsets.
    pub fn leaves(&self) -> Vec<(usize, &Chart)> {
        fn walk<'a>(c: &'a Chart, off: &mut usize, out: &mut Vec<(usize, &'a Chart)>) {
            match c {
                Chart::Product(fs) => fs.iter().for_each(|f| walk(f, off, out)),
                leaf => {
                    out.push((*off, leaf));
                    *off += leaf.dim();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut 0, &mut out);
        out
    }

    /// Checks dimensions and the unit constraint of sphere factors.
    pub fn check_point(&self, q: &Point) -> Result<()> {
        check_dim(self.dim(), q.dim())?;
        for (off, leaf) in self.leaves() {
            if let Chart::Sphere(s) = leaf {
                let th = &q.as_slice()[off..off + s.dim()];
                let defect = (s.inner(th, th) - 1.0).abs();
                if defect > SPHERE_TOL {
                    return Err(Error::Usage(format!(
                        "sphere coordinate {th:?} is not a unit vector (defect {defect:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tangent cone at `q`: the full space on affine factors and the
    /// g-orthogonal complement of `ϑ` on sphere factors.
    pub fn tangent_cone(&self, q: &Point) -> Result<Cone> {
        check_dim(self.dim(), q.dim())?;
        self.tangent_cone_at(q.as_slice())
    }

    fn tangent_cone_at(&self, q: &[f64]) -> Result<Cone> {
        match self {
            Chart::Affine(s) => Ok(Cone::full(s)),
            Chart::Sphere(s) => {
                let th = Vector::from_slice(q);
                Cone::subspace(s, &s.orthogonal_complement(&[th]))
            }
            Chart::Product(fs) => {
                let mut off = 0;
                let mut cones = Vec::with_capacity(fs.len());
                for f in fs {
                    cones.push(f.tangent_cone_at(&q[off..off + f.dim()])?);
                    off += f.dim();
                }
                let mut it = cones.into_iter();
                let first = it.next().ok_or_else(|| Error::Usage("empty product chart".into()))?;
                Ok(it.fold(first, Cone::product))
            }
        }
    }

    /// The chart curve through `q` with velocity `v` at parameter `s`:
    /// straight lines on affine factors, `normalize(ϑ + s δϑ)` on spheres.
    pub fn retract(&self, q: &Point, v: &Vector, s: f64) -> Point {
        let mut out: Vec<f64> = q.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a + s * b).collect();
        for (off, leaf) in self.leaves() {
            if let Chart::Sphere(sp) = leaf {
                let block = &mut out[off..off + sp.dim()];
                let n = sp.inner(block, block).sqrt();
                block.iter_mut().for_each(|x| *x /= n);
            }
        }
        Point::new(out)
    }

    /// Removes the normal component `⟨τ, ϑ⟩ g ϑ` of covectors on sphere
    /// factors, so torques pair only with tangent displacements.
    pub fn tangential_covector(&self, q: &Point, f: &Covector) -> Result<Covector> {
        check_dim(self.dim(), q.dim())?;
        check_dim(self.dim(), f.dim())?;
        let mut out = f.clone();
        for (off, leaf) in self.leaves() {
            if let Chart::Sphere(s) = leaf {
                let n = s.dim();
                let th = Vector::from_slice(&q.as_slice()[off..off + n]);
                let gth = s.flat(&th)?;
                let tau = &mut out.as_mut_slice()[off..off + n];
                let c: f64 = tau.iter().zip(th.as_slice()).map(|(a, b)| a * b).sum();
                for (t, g) in tau.iter_mut().zip(gth.as_slice()) {
                    *t -= c * g;
                }
            }
        }
        Ok(out)
    }
}

/// A configuration together with a force on it.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcePoint {
    pub q: Point,
    pub f: Covector,
}

impl ForcePoint {
    pub fn new(q: Point, f: Covector) -> Self {
        Self { q, f }
    }
}

type Pred = Arc<dyn Fn(&Point) -> bool + Send + Sync>;
type ConeMap = Arc<dyn Fn(&Point) -> Result<Cone> + Send + Sync>;
type FormMap = Arc<dyn Fn(&Point) -> Result<HomogeneousForm> + Send + Sync>;

/// A static system: chart, constraint set `C⁰` (as a predicate), and at each
/// `q ∈ C⁰` a cone `C¹_q` with a form `σ_q` on it.
#[derive(Clone)]
pub struct StaticSystem {
    chart: Chart,
    in_constraint: Pred,
    cone_at: ConeMap,
    form_at: FormMap,
}

impl fmt::Debug for StaticSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StaticSystem")
            .field("chart", &self.chart)
            .finish_non_exhaustive()
    }
}

impl StaticSystem {
    pub fn new(
        chart: Chart,
        in_constraint: impl Fn(&Point) -> bool + Send + Sync + 'static,
        cone_at: impl Fn(&Point) -> Result<Cone> + Send + Sync + 'static,
        form_at: impl Fn(&Point) -> Result<HomogeneousForm> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart,
            in_constraint: Arc::new(in_constraint),
            cone_at: Arc::new(cone_at),
            form_at: Arc::new(form_at),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn in_constraint(&self, q: &Point) -> bool {
        (self.in_constraint)(q)
    }

    pub fn cone_at(&self, q: &Point) -> Result<Cone> {
        self.chart.check_point(q)?;
        (self.cone_at)(q)
    }

    /// The form at `q`; fails if its domain disagrees with [`cone_at`](Self::cone_at).
    pub fn form_at(&self, q: &Point) -> Result<HomogeneousForm> {
        let cone = self.cone_at(q)?;
        let form = (self.form_at)(q)?;
        use crate::convex::SublinearForm;
        if !form.domain().equivalent(&cone, 1e-9) {
            return Err(Error::Usage(format!(
                "form domain at {:?} differs from the constraint cone",
                q.as_slice()
            )));
        }
        Ok(form)
    }
}

/// Principle of virtual work: is `p.f` a response force at `p.q`?
pub fn constitutive_membership(sys: &StaticSystem, p: &ForcePoint, tol: f64) -> Result<Membership> {
    sys.chart.check_point(&p.q)?;
    check_dim(sys.chart.dim(), p.f.dim())?;
    if !sys.in_constraint(&p.q) {
        return Ok(Membership::new(Verdict::NonMember, f64::NEG_INFINITY));
    }
    let form = sys.form_at(&p.q)?;
    let f = sys.chart.tangential_covector(&p.q, &p.f)?;
    legendre_membership(&form, &f, tol)
}

/// Membership of every node of `grid` at `q`, in grid order.
pub fn constitutive_sample(
    sys: &StaticSystem,
    q: &Point,
    grid: &ForceGrid,
    tol: f64,
) -> Result<Vec<(Covector, Membership)>> {
    check_dim(sys.chart.dim(), grid.base.dim())?;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let f = grid.node(i);
            let m = constitutive_membership(sys, &ForcePoint::new(q.clone(), f.clone()), tol)?;
            Ok((f, m))
        })
        .collect()
}

/// Whether the constraints at a configuration are symmetric under negation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Bilateral,
    Unilateral,
}

/// Bilateral iff `−v` is admissible for every sampled admissible `v`.
pub fn classify_constraints(sys: &StaticSystem, q: &Point, tol: f64) -> Result<ConstraintKind> {
    let cone = sys.cone_at(q)?;
    let bilateral = cone
        .sample(cone.default_sample_count())
        .iter()
        .all(|v| cone.contains(&-v, tol));
    Ok(if bilateral {
        ConstraintKind::Bilateral
    } else {
        ConstraintKind::Unilateral
    })
}

/// The holonomic bilateral system with internal energy `U`: the form at `q` is
/// the linear form `dU` on the tangent subspace, so membership reduces to the
/// equality `⟨dU, δq⟩ = ⟨f, δq⟩` on tangent vectors.
pub fn energy_system(
    chart: Chart,
    in_constraint: impl Fn(&Point) -> bool + Send + Sync + 'static,
    tangent_at: impl Fn(&Point) -> Result<Cone> + Send + Sync + 'static,
    gradient: impl Fn(&Point) -> Covector + Send + Sync + 'static,
) -> StaticSystem {
    let tangent_at = Arc::new(tangent_at);
    let t2 = tangent_at.clone();
    let space = chart.space();
    StaticSystem::new(
        chart,
        in_constraint,
        move |q| {
            let c = tangent_at(q)?;
            if !c.is_linear() {
                return Err(Error::Usage("energy systems need a tangent subspace".into()));
            }
            Ok(c)
        },
        move |q| HomogeneousForm::linear(&space, gradient(q), t2(q)?),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::Seminorm;
    use crate::grid::GridAxis;

    fn ball_system(rho: f64) -> StaticSystem {
        let space = MetricSpace::identity(3);
        let chart = Chart::Affine(space.clone());
        StaticSystem::new(
            chart,
            |_| true,
            {
                let s = space.clone();
                move |_| Ok(Cone::full(&s))
            },
            move |_| {
                HomogeneousForm::new(
                    &space,
                    Covector::zeros(3),
                    vec![Seminorm::full(3, rho)],
                    Cone::full(&space),
                )
            },
        )
    }

    #[test]
    fn mismatched_domain_is_a_usage_error() {
        let space = MetricSpace::identity(2);
        let s2 = space.clone();
        let sys = StaticSystem::new(
            Chart::Affine(space.clone()),
            |_| true,
            move |_| Ok(Cone::full(&s2)),
            move |_| {
                Ok(HomogeneousForm::zero(
                    Cone::subspace(&space, &[Vector::new(vec![1.0, 0.0])]).unwrap(),
                ))
            },
        );
        let p = ForcePoint::new(Point::zeros(2), Covector::zeros(2));
        assert!(matches!(constitutive_membership(&sys, &p, 1e-6), Err(Error::Usage(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let sys = ball_system(1.0);
        let p = ForcePoint::new(Point::zeros(3), Covector::zeros(2));
        assert!(matches!(
            constitutive_membership(&sys, &p, 1e-6),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_energy_full_tangent() {
        let space = MetricSpace::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let q0 = Point::new(vec![0.1, -0.2, 0.3]);
        let k = 2.5;
        let s1 = space.clone();
        let s2 = space.clone();
        let q0c = q0.clone();
        let sys = energy_system(
            Chart::Affine(space.clone()),
            |_| true,
            move |_| Ok(Cone::full(&s1)),
            move |q| &s2.flat(&q.displacement_from(&q0c)).unwrap() * k,
        );
        let q = Point::new(vec![1.0, 0.5, -0.4]);
        // oracle: central differences of U = (k/2)‖q − q0‖²
        let u = |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(q0.as_slice()).map(|(a, b)| a - b).collect();
            0.5 * k * space.inner(&d, &d)
        };
        let h = 1e-6;
        let grad: Vec<f64> = (0..3)
            .map(|i| {
                let mut up = q.to_vec();
                let mut dn = q.to_vec();
                up[i] += h;
                dn[i] -= h;
                (u(&up) - u(&dn)) / (2.0 * h)
            })
            .collect();
        let f = Covector::new(grad);
        let m = constitutive_membership(&sys, &ForcePoint::new(q.clone(), f.clone()), 1e-6).unwrap();
        assert!(m.is_in_set());
        let m = constitutive_membership(&sys, &ForcePoint::new(q, &f * 1.01), 1e-6).unwrap();
        assert_eq!(m.verdict, Verdict::NonMember);
    }

    #[test]
    fn free_point_with_zero_energy() {
        let space = MetricSpace::identity(3);
        let s1 = space.clone();
        let sys = energy_system(
            Chart::Affine(space),
            |_| true,
            move |_| Ok(Cone::full(&s1)),
            |_| Covector::zeros(3),
        );
        let at = |f: Vec<f64>| {
            constitutive_membership(&sys, &ForcePoint::new(Point::zeros(3), Covector::new(f)), 1e-6).unwrap()
        };
        assert_eq!(at(vec![0.0, 0.0, 0.0]).verdict, Verdict::Member);
        assert_eq!(at(vec![0.0, 1e-3, 0.0]).verdict, Verdict::NonMember);
    }

    #[test]
    fn disc_area_by_node_counting() {
        let sys = ball_system(1.0);
        let grid = ForceGrid::new(
            Covector::zeros(3),
            vec![
                GridAxis::new(-2.0, 2.0, 0.1).unwrap(),
                GridAxis::new(-2.0, 2.0, 0.1).unwrap(),
            ],
        )
        .unwrap();
        let rows = constitutive_sample(&sys, &Point::zeros(3), &grid, 1e-6).unwrap();
        assert_eq!(rows.len(), 41 * 41);
        let inside = rows.iter().filter(|(_, m)| m.is_in_set()).count();
        let area = inside as f64 * 0.01;
        assert!(
            (area - std::f64::consts::PI).abs() < 0.05 * std::f64::consts::PI,
            "{area}"
        );
        let empty = ForceGrid::new(Covector::zeros(3), vec![GridAxis::new(1.0, 0.0, 0.1).unwrap()]).unwrap();
        assert!(constitutive_sample(&sys, &Point::zeros(3), &empty, 1e-6)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sphere_chart_tangents_and_torques() {
        let space = MetricSpace::diagonal(&[4.0, 1.0, 1.0]).unwrap();
        let chart = Chart::Sphere(space.clone());
        let th = Point::new(vec![0.5, 0.0, 0.0]);
        chart.check_point(&th).unwrap();
        assert!(chart.check_point(&Point::new(vec![1.0, 0.0, 0.0])).is_err());
        let cone = chart.tangent_cone(&th).unwrap();
        let thv = Vector::new(th.to_vec());
        for v in cone.sample(50) {
            assert!(space.inner(thv.as_slice(), v.as_slice()).abs() < 1e-10);
        }
        let tau = chart
            .tangential_covector(&th, &Covector::new(vec![1.0, 2.0, 3.0]))
            .unwrap();
        let pairing: f64 = tau.as_slice().iter().zip(th.as_slice()).map(|(a, b)| a * b).sum();
        assert!(pairing.abs() < 1e-12);
    }
}
