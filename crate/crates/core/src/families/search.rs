//! Membership in the set generated by a family: scan the fiber above `q` for
//! critical points whose contribution contains `f`.

use rayon::prelude::*;

use super::fibration::Fibration;
use super::form_family::{contribution, critical_test_form, dual_norm, fast_excess, FormFamily, Split};
use super::function::{kappa_unchecked, FunctionFamily};
use crate::convex::{default_count, Membership, Verdict, DEFAULT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::euclid::{unit_sphere_samples, Covector, Point, Vector};
use crate::statics::Chart;

/// Default number of grid points per fiber dimension.
pub const DEFAULT_PER_DIM: usize = 64;

/// Search grid over a fiber.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberGrid {
    /// `per_dim` evenly spaced values per coordinate in
    /// `center ± half_width`.
    Box {
        center: Vec<f64>,
        half_width: Vec<f64>,
        per_dim: usize,
    },
    /// The unit-sphere sampler; requires a sphere fiber.
    Sphere { count: usize },
}

impl FiberGrid {
    pub fn cube(center: &[f64], half_width: f64, per_dim: usize) -> Self {
        FiberGrid::Box {
            center: center.to_vec(),
            half_width: vec![half_width; center.len()],
            per_dim,
        }
    }

    /// Sphere grid sized like the default cone sampler.
    pub fn sphere_default(fiber_dim: usize) -> Self {
        FiberGrid::Sphere {
            count: default_count(fiber_dim.saturating_sub(1)),
        }
    }

    fn points(&self, fiber: &Chart) -> Result<(Vec<Point>, f64)> {
        match self {
            FiberGrid::Box {
                center,
                half_width,
                per_dim,
            } => {
                check_dim(fiber.dim(), center.len())?;
                check_dim(fiber.dim(), half_width.len())?;
                if *per_dim == 0 || center.is_empty() {
                    return Err(Error::Usage("empty fiber grid".into()));
                }
                let n = *per_dim;
                let total = n
                    .checked_pow(center.len() as u32)
                    .ok_or_else(|| Error::Usage("fiber grid too large".into()))?;
                let coord = |c: f64, h: f64, i: usize| {
                    if n == 1 {
                        c
                    } else {
                        c - h + 2.0 * h * i as f64 / (n - 1) as f64
                    }
                };
                let pts = (0..total)
                    .map(|mut idx| {
                        let mut y = vec![0.0; center.len()];
                        for j in (0..center.len()).rev() {
                            y[j] = coord(center[j], half_width[j], idx % n);
                            idx /= n;
                        }
                        Point::new(y)
                    })
                    .collect();
                let spacing = half_width
                    .iter()
                    .map(|h| if n == 1 { *h } else { 2.0 * h / (n - 1) as f64 })
                    .fold(0.0, f64::max);
                Ok((pts, spacing.max(1e-3)))
            }
            FiberGrid::Sphere { count } => {
                let Chart::Sphere(space) = fiber else {
                    return Err(Error::Usage("sphere grid requires a sphere fiber".into()));
                };
                if *count == 0 {
                    return Err(Error::Usage("empty fiber grid".into()));
                }
                let pts = unit_sphere_samples(space, *count)
                    .into_iter()
                    .map(|v| Point::new(v.to_vec()))
                    .collect();
                let spacing = (4.0 / *count as f64).powf(1.0 / (space.dim().max(2) - 1) as f64);
                Ok((pts, spacing.min(1.0)))
            }
        }
    }
}

/// Tolerances and effort for [`generated_set_membership`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub crit_tol: f64,
    pub tol: f64,
    /// Number of best grid candidates refined and tested.
    pub refine_top: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            crit_tol: DEFAULT_TOL,
            tol: DEFAULT_TOL,
            refine_top: 3,
        }
    }
}

/// Verdict for a generated set with the critical point that decided it.
#[derive(Clone, Debug)]
pub struct GeneratedMembership {
    pub membership: Membership,
    pub critical: Option<Point>,
}

/// A family that generates a set on its base.
pub trait GeneratingFamily: Sync {
    fn fibration(&self) -> &Fibration;

    /// Nonnegative; zero iff `q̄` is critical and `f` lies in its contribution.
    fn merit(&self, qbar: &Point, f: &Covector) -> f64;

    /// Membership of `f` in the contribution of `q̄`, or `NonMember` if `q̄`
    /// is not critical. The second value reports criticality.
    fn decide(&self, qbar: &Point, f: &Covector, opts: &SearchOptions) -> Result<(Membership, bool)>;
}

impl GeneratingFamily for FormFamily {
    fn fibration(&self) -> &Fibration {
        FormFamily::fibration(self)
    }

    fn merit(&self, qbar: &Point, f: &Covector) -> f64 {
        let Ok(an) = self.analyze(qbar) else {
            return f64::INFINITY;
        };
        if !an.separable {
            return generic_form_merit(self, qbar, f);
        }
        let cv = an.critical_violation();
        let closed = match self.fibration().base() {
            Chart::Affine(space) => an.closed_excess(space, true, f),
            _ => None,
        };
        let m = match closed {
            Some(m) => m,
            None => match self.split(qbar) {
                Ok(Split {
                    base_form: Some(base), ..
                }) => fast_excess(&base, f).unwrap_or(f64::INFINITY),
                _ => f64::INFINITY,
            },
        };
        cv.max(0.0).powi(2) + m.max(0.0).powi(2)
    }

    fn decide(&self, qbar: &Point, f: &Covector, opts: &SearchOptions) -> Result<(Membership, bool)> {
        let split = self.split(qbar)?;
        let crit_slack = match split.critical_violation() {
            Some(cv) => -cv,
            None => {
                if critical_test_form(self, qbar, opts.crit_tol)? {
                    0.0
                } else {
                    -f64::INFINITY
                }
            }
        };
        if crit_slack < -opts.crit_tol {
            return Ok((Membership::new(Verdict::NonMember, crit_slack), false));
        }
        let c = contribution(self, qbar, opts.crit_tol)?;
        Ok((c.check(f)?, true))
    }
}

fn generic_form_merit(fam: &FormFamily, qbar: &Point, f: &Covector) -> f64 {
    use super::form_family::vertical_minimum;
    use crate::convex::{max_excess, LegendreOptions};
    let coarse = LegendreOptions::coarse();
    let Ok(vmin) = vertical_minimum(fam, qbar, &coarse) else {
        return f64::INFINITY;
    };
    if vmin < 0.0 {
        return vmin.powi(2) + 1.0;
    }
    let Ok(c) = contribution(fam, qbar, f64::INFINITY) else {
        return f64::INFINITY;
    };
    match max_excess(c.reduced(), f, &coarse) {
        Ok((m, _)) => m.max(0.0).powi(2),
        Err(_) => f64::INFINITY,
    }
}

impl GeneratingFamily for FunctionFamily {
    fn fibration(&self) -> &Fibration {
        FunctionFamily::fibration(self)
    }

    fn merit(&self, qbar: &Point, f: &Covector) -> f64 {
        let Ok(v) = self.vertical_gradient_norm(qbar) else {
            return f64::INFINITY;
        };
        let space = self.fibration().base().space();
        let k = kappa_unchecked(self, qbar);
        let d: Vec<f64> = k.as_slice().iter().zip(f.as_slice()).map(|(a, b)| a - b).collect();
        v * v + space.inner_dual(&d, &d).max(0.0)
    }

    fn decide(&self, qbar: &Point, f: &Covector, opts: &SearchOptions) -> Result<(Membership, bool)> {
        let v = self.vertical_gradient_norm(qbar)?;
        if v > opts.crit_tol {
            return Ok((Membership::new(Verdict::NonMember, -v), false));
        }
        let space = self.fibration().base().space();
        let k = kappa_unchecked(self, qbar);
        let d: Vec<f64> = k.as_slice().iter().zip(f.as_slice()).map(|(a, b)| a - b).collect();
        let dist = dual_norm(&space, &d);
        let fscale = dual_norm(&space, f.as_slice()).max(1.0);
        if dist <= opts.tol * fscale {
            Ok((Membership::new(Verdict::Member, 0.0), true))
        } else {
            Ok((Membership::new(Verdict::NonMember, -dist), true))
        }
    }
}

/// Decides `f ∈ S_q = ⋃ S_q̄` over critical `q̄` above `q`, by a grid scan of
/// the fiber followed by compass refinement of the best candidates.
pub fn generated_set_membership<F: GeneratingFamily + ?Sized>(
    fam: &F,
    q: &Point,
    f: &Covector,
    grid: &FiberGrid,
    opts: &SearchOptions,
) -> Result<GeneratedMembership> {
    let fib = fam.fibration();
    check_dim(fib.base_dim(), q.dim())?;
    check_dim(fib.base_dim(), f.dim())?;
    fib.base().check_point(q)?;
    let (ys, spacing) = grid.points(fib.fiber())?;
    let merits: Vec<f64> = ys.par_iter().map(|y| fam.merit(&q.concat(y), f)).collect();
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| merits[a].total_cmp(&merits[b]).then(a.cmp(&b)));
    let top = opts.refine_top.max(1).min(order.len());
    // well inside both tolerances; refinement stops once this is reached
    let target = (1e-2 * opts.crit_tol.min(opts.tol)).powi(2);
    let mut best: Option<GeneratedMembership> = None;
    for &i in &order[..top] {
        let (y, _) = refine(fam, q, f, &ys[i], merits[i], spacing, target);
        let qbar = q.concat(&y);
        let (m, critical) = fam.decide(&qbar, f, opts)?;
        let candidate = GeneratedMembership {
            critical: critical.then(|| qbar.clone()),
            membership: m,
        };
        if candidate.membership.verdict == Verdict::Member {
            return Ok(candidate);
        }
        best = Some(match best {
            None => candidate,
            Some(b) => prefer(b, candidate),
        });
    }
    Ok(best.expect("at least one candidate"))
}

fn prefer(a: GeneratedMembership, b: GeneratedMembership) -> GeneratedMembership {
    let rank = |g: &GeneratedMembership| match g.membership.verdict {
        Verdict::Member => 2,
        Verdict::Boundary => 1,
        Verdict::NonMember => 0,
    };
    let (ra, rb) = (rank(&a), rank(&b));
    if rb > ra || (rb == ra && b.membership.margin > a.membership.margin) {
        b
    } else {
        a
    }
}

/// Compass search on the fiber: moves along tangent directions, retracted
/// onto the fiber chart, growing the step after a success and halving it
/// after a full round of failures.
fn refine<F: GeneratingFamily + ?Sized>(
    fam: &F,
    q: &Point,
    f: &Covector,
    start: &Point,
    start_merit: f64,
    spacing: f64,
    target: f64,
) -> (Point, f64) {
    let fiber = fam.fibration().fiber();
    let mut y = start.clone();
    let mut best = start_merit;
    let mut step = spacing;
    let floor = 1e-10 * spacing.max(1.0);
    let mut evals = 0usize;
    let mut last = 0usize;
    while step > floor && best > target && evals < 4000 {
        let basis: Vec<Vector> = fiber
            .tangent_cone(&y)
            .ok()
            .and_then(|c| c.linear_basis())
            .unwrap_or_default();
        let mut improved = false;
        let moves = 2 * basis.len();
        for j in 0..moves {
            let (d, sign) = (
                (last + j) % moves / 2,
                if (last + j).is_multiple_of(2) { 1.0 } else { -1.0 },
            );
            let cand = fiber.retract(&y, &basis[d], sign * step);
            let m = fam.merit(&q.concat(&cand), f);
            evals += 1;
            if m < best {
                best = m;
                y = cand;
                improved = true;
                last = (last + j) % moves;
                break;
            }
        }
        step *= if improved { 2.0 } else { 0.5 };
    }
    (y, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Cone, HomogeneousForm, Seminorm};
    use crate::euclid::MetricSpace;

    fn spring_friction(k: f64, rho: f64) -> FormFamily {
        let s = MetricSpace::identity(2);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Affine(s));
        let total = fib.total_space();
        FormFamily::new(fib, move |p| {
            let x = p.as_slice();
            let d: Vec<f64> = (0..2).map(|i| k * (x[2 + i] - x[i])).collect();
            let mut a: Vec<f64> = d.iter().map(|v| -v).collect();
            a.extend(&d);
            HomogeneousForm::new(
                &total,
                Covector::new(a),
                vec![Seminorm::block(4, 2, 2, rho)],
                Cone::full(&total),
            )
        })
    }

    #[test]
    fn friction_ball_is_generated() {
        let fam = spring_friction(1.0, 1.0);
        let q = Point::new(vec![0.2, -0.1]);
        let grid = FiberGrid::cube(q.as_slice(), 2.0, 9);
        let opts = SearchOptions::default();
        let inside = generated_set_membership(&fam, &q, &Covector::new(vec![0.6, 0.3]), &grid, &opts).unwrap();
        assert!(inside.membership.is_in_set());
        assert!(inside.critical.is_some());
        let outside = generated_set_membership(&fam, &q, &Covector::new(vec![1.2, 0.6]), &grid, &opts).unwrap();
        assert_eq!(outside.membership.verdict, Verdict::NonMember);
    }

    #[test]
    fn empty_grid_is_usage_error() {
        let fam = spring_friction(1.0, 1.0);
        let q = Point::zeros(2);
        let grid = FiberGrid::cube(&[0.0, 0.0], 1.0, 0);
        let r = generated_set_membership(&fam, &q, &Covector::zeros(2), &grid, &SearchOptions::default());
        assert!(matches!(r, Err(Error::Usage(_))));
        let sphere = FiberGrid::Sphere { count: 10 };
        let r = generated_set_membership(&fam, &q, &Covector::zeros(2), &sphere, &SearchOptions::default());
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn rod_on_sphere_fiber() {
        // Ū = k/2 ‖q − aϑ‖² over ℝ² × S¹, at q = 0: S = {‖f‖ = ka}
        let (k, a) = (1.0, 1.0);
        let s = MetricSpace::identity(2);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Sphere(s));
        let fam = FunctionFamily::new(
            fib,
            move |p| {
                let x = p.as_slice();
                0.5 * k * ((x[0] - a * x[2]).powi(2) + (x[1] - a * x[3]).powi(2))
            },
            move |p| {
                let x = p.as_slice();
                let d = [k * (x[0] - a * x[2]), k * (x[1] - a * x[3])];
                Covector::new(vec![d[0], d[1], -a * d[0], -a * d[1]])
            },
        );
        let q = Point::zeros(2);
        let grid = FiberGrid::sphere_default(2);
        let opts = SearchOptions::default();
        let on = Covector::new(vec![0.6, -0.8]);
        assert!(generated_set_membership(&fam, &q, &on, &grid, &opts)
            .unwrap()
            .membership
            .is_in_set());
        let half = Covector::new(vec![0.3, -0.4]);
        assert_eq!(
            generated_set_membership(&fam, &q, &half, &grid, &opts)
                .unwrap()
                .membership
                .verdict,
            Verdict::NonMember
        );
    }
}
