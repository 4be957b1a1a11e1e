//! Closed-form constitutive sets of the examples.

use super::{ExampleSpec, CONSTRAINT_TOL};
use crate::error::{check_dim, Result};
use crate::euclid::{Covector, MetricSpace, Point};

/// Equality-type sets count a covector as on the set when its distance is
/// below this fraction of `max(1, ‖f‖)`.
const ON_SET_REL: f64 = 1e-10;

/// Exact verdict with a signed, distance-like margin: the slack of the
/// defining inequalities when `f` is in the set (`+inf` for sets cut out by
/// equalities alone) and minus a distance to the set otherwise (`-inf` when
/// the configuration violates the constraint).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticVerdict {
    pub member: bool,
    pub margin: f64,
}

impl AnalyticVerdict {
    fn slack(margin: f64) -> Self {
        Self {
            member: margin >= 0.0,
            margin,
        }
    }

    fn outside(distance: f64) -> Self {
        Self {
            member: false,
            margin: -distance,
        }
    }
}

struct Geo<'a> {
    s: &'a MetricSpace,
}

impl Geo<'_> {
    fn lower(&self, v: &[f64]) -> Vec<f64> {
        (self.s.metric() * nalgebra::DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }

    fn raise(&self, f: &[f64]) -> Vec<f64> {
        (self.s.inverse_metric() * nalgebra::DVector::from_column_slice(f))
            .as_slice()
            .to_vec()
    }

    fn norm(&self, v: &[f64]) -> f64 {
        self.s.inner(v, v).max(0.0).sqrt()
    }

    fn dual_norm(&self, f: &[f64]) -> f64 {
        self.s.inner_dual(f, f).max(0.0).sqrt()
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add_scaled(a: &[f64], c: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-set test for a set given by one candidate distance.
fn equality(dist: f64, f_norm: f64, slack: f64) -> AnalyticVerdict {
    if dist <= ON_SET_REL * f_norm.max(1.0) {
        AnalyticVerdict::slack(slack)
    } else {
        AnalyticVerdict::outside(dist)
    }
}

/// Membership of `f` in the constitutive set at `q` (a chart point for
/// Examples 1 to 4, a base point for the families).
pub fn analytic_membership(spec: &ExampleSpec, q: &Point, f: &Covector) -> Result<AnalyticVerdict> {
    let n = spec.dim();
    let chart_dim = if spec.id == 3 { 2 * n } else { n };
    check_dim(chart_dim, q.dim())?;
    check_dim(chart_dim, f.dim())?;
    let s = &spec.space;
    let geo = Geo { s };
    let p = spec.params;
    let d = sub(&q.as_slice()[..n], spec.q0.as_slice());
    let gd = geo.lower(&d);
    let dn = geo.norm(&d);
    let fv = f.as_slice();
    let f_norm = if spec.id == 3 { 0.0 } else { geo.dual_norm(fv) };
    Ok(match spec.id {
        1 => {
            if (dn - p.a).abs() > CONSTRAINT_TOL * p.a.max(1.0) {
                return Ok(AnalyticVerdict::outside(f64::INFINITY));
            }
            // f = a⁻² ⟨f, q − q₀⟩ g(q − q₀)
            let t = add_scaled(fv, -dot(fv, &d) / (dn * dn), &gd);
            equality(geo.dual_norm(&t), f_norm, f64::INFINITY)
        }
        2 => AnalyticVerdict::slack(p.rho - f_norm),
        3 => {
            let (force, torque) = fv.split_at(n);
            let th = &q.as_slice()[n..];
            let gth = geo.lower(th);
            let tau = add_scaled(torque, -dot(torque, th), &gth);
            let tau_n = geo.dual_norm(&tau);
            let along = dot(force, th).abs();
            if tau_n <= ON_SET_REL * geo.dual_norm(force).max(1.0) {
                AnalyticVerdict::slack(p.rho - along)
            } else {
                AnalyticVerdict::outside(tau_n.max(along - p.rho))
            }
        }
        4 => {
            let h = dot(&gd, spec.axis.as_slice());
            if h < -CONSTRAINT_TOL {
                AnalyticVerdict::outside(f64::INFINITY)
            } else if h > CONSTRAINT_TOL {
                equality(f_norm, 0.0, f64::INFINITY)
            } else {
                // √(‖f‖² − ⟨f, k⟩²) + ρ⟨f, k⟩ ≤ 0, scaled to a distance
                let fk = dot(fv, spec.axis.as_slice());
                let perp = (f_norm * f_norm - fk * fk).max(0.0).sqrt();
                AnalyticVerdict::slack(-(perp + p.rho * fk) / (1.0 + p.rho * p.rho).sqrt())
            }
        }
        5 => {
            if dn <= 1e-12 * p.a {
                // ‖f‖ = ka
                equality((f_norm - p.k * p.a).abs(), f_norm, f64::INFINITY)
            } else {
                // f = k(1 ∓ a/‖q − q₀‖) g(q − q₀)
                let dist = [1.0, -1.0]
                    .iter()
                    .map(|sgn| geo.dual_norm(&add_scaled(fv, -p.k * (1.0 - sgn * p.a / dn), &gd)))
                    .fold(f64::INFINITY, f64::min);
                equality(dist, f_norm, f64::INFINITY)
            }
        }
        6 => {
            let c = (p.k * p.kp + p.k * p.kpp + p.kp * p.kpp) / (p.kp + p.kpp);
            equality(geo.dual_norm(&add_scaled(fv, -c, &gd)), f_norm, f64::INFINITY)
        }
        7 => AnalyticVerdict::slack(p.rho - f_norm),
        8 => {
            let c = p.k * p.kp / (p.k + p.kp);
            AnalyticVerdict::slack(p.k * p.rho / (p.k + p.kp) - geo.dual_norm(&add_scaled(fv, -c, &gd)))
        }
        9 => example9(&geo, spec, &d, fv, f_norm),
        10 => {
            let c = p.k * p.kp / (p.k + p.kp);
            AnalyticVerdict::slack(p.rho - geo.dual_norm(&add_scaled(fv, -c, &gd)))
        }
        _ => unreachable!("validated id"),
    })
}

/// `S = {k g(q − q₀ − aϑ) : ϑ ∈ D, k √(‖q − q₀‖² − ⟨g(q − q₀), ϑ⟩²) ≤ ρ}`:
/// points of a sphere of radius `ka` about `k g(q − q₀)` whose direction lies
/// in the two caps of half-angle `asin(ρ / (k‖q − q₀‖))` around `±(q − q₀)`.
fn example9(geo: &Geo<'_>, spec: &ExampleSpec, d: &[f64], f: &[f64], f_norm: f64) -> AnalyticVerdict {
    let p = spec.params;
    let dn = geo.norm(d);
    // y = aϑ for the ϑ that would produce f
    let y = add_scaled(d, -1.0 / p.k, &geo.raise(f));
    let r = geo.norm(&y);
    let half_angle = if p.k * dn <= p.rho {
        std::f64::consts::FRAC_PI_2
    } else {
        (p.rho / (p.k * dn)).asin()
    };
    let beta = if r == 0.0 || dn == 0.0 {
        0.0
    } else {
        (geo.s.inner(&y, d).abs() / (r * dn)).min(1.0).acos()
    };
    let dist = if beta <= half_angle {
        (r - p.a).abs()
    } else {
        (r * r + p.a * p.a - 2.0 * r * p.a * (beta - half_angle).cos())
            .max(0.0)
            .sqrt()
    };
    let dist = p.k * dist;
    if dist > ON_SET_REL * f_norm.max(1.0) {
        return AnalyticVerdict::outside(dist);
    }
    let along = if r == 0.0 { 0.0 } else { geo.s.inner(&y, d) / r };
    AnalyticVerdict::slack(p.rho - p.k * (dn * dn - along * along).max(0.0).sqrt())
}

/// Force scale used to normalize boundary bands.
pub fn characteristic_scale(spec: &ExampleSpec, q: &Point) -> f64 {
    let p = spec.params;
    let or_one = |x: f64| if x > 0.0 { x } else { 1.0 };
    match spec.id {
        2 | 3 | 7 | 9 | 10 => or_one(p.rho),
        8 => or_one(p.k * p.rho / (p.k + p.kp)),
        5 | 6 => {
            let n = spec.dim();
            let d = sub(&q.as_slice()[..n], spec.q0.as_slice());
            p.k * spec.space.inner(&d, &d).sqrt().max(p.a)
        }
        _ => 1.0,
    }
}

/// Slack of the closed-form critical condition at a total-space point:
/// nonnegative iff the point is critical.
pub fn critical_slack(spec: &ExampleSpec, qbar: &Point) -> Option<f64> {
    let n = spec.dim();
    if qbar.dim() != 2 * n {
        return None;
    }
    let geo = Geo { s: &spec.space };
    let p = spec.params;
    let x = qbar.as_slice();
    let (q, y) = (&x[..n], &x[n..]);
    let d = sub(q, spec.q0.as_slice());
    let perp = |th: &[f64]| {
        let along = geo.s.inner(&d, th);
        (geo.s.inner(&d, &d) - along * along).max(0.0).sqrt()
    };
    Some(match spec.id {
        5 => -p.k * p.a * perp(y),
        6 => -geo.norm(&add_scaled(
            &scaled(p.kp, &sub(y, spec.q0.as_slice())),
            p.kpp,
            &sub(y, q),
        )),
        7 => p.rho - p.k * geo.norm(&sub(y, q)),
        8 => p.rho - geo.norm(&add_scaled(&scaled(p.kp, &sub(y, spec.q0.as_slice())), p.k, &sub(y, q))),
        9 => p.rho - p.k * perp(y),
        10 => -geo.norm(&add_scaled(&scaled(p.kp, &sub(y, spec.q0.as_slice())), p.k, &sub(y, q))),
        _ => return None,
    })
}

fn scaled(c: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

/// `κ` at a total-space point of Examples 5 and 6.
pub fn kappa_closed_form(spec: &ExampleSpec, qbar: &Point) -> Option<Covector> {
    let n = spec.dim();
    let geo = Geo { s: &spec.space };
    let p = spec.params;
    let x = qbar.as_slice();
    let (q, y) = (&x[..n], &x[n..]);
    let d = sub(q, spec.q0.as_slice());
    match spec.id {
        5 => Some(Covector::new(scaled(p.k, &geo.lower(&add_scaled(&d, -p.a, y))))),
        6 => {
            let f = add_scaled(&scaled(p.k, &d), -p.kpp, &sub(y, q));
            Some(Covector::new(geo.lower(&f)))
        }
        _ => None,
    }
}

/// The linear part of the contribution at a critical point of Examples 7
/// to 10: the whole contribution for 7 to 9, the center of the ball of
/// radius `ρ` for 10.
pub fn contribution_covector(spec: &ExampleSpec, qbar: &Point) -> Option<Covector> {
    let n = spec.dim();
    let geo = Geo { s: &spec.space };
    let p = spec.params;
    let x = qbar.as_slice();
    let (q, y) = (&x[..n], &x[n..]);
    let v = match spec.id {
        7 | 8 | 10 => scaled(p.k, &sub(q, y)),
        9 => scaled(p.k, &add_scaled(&sub(q, spec.q0.as_slice()), -p.a, y)),
        _ => return None,
    };
    Some(Covector::new(geo.lower(&v)))
}

/// Coefficients of the reduced objects: for Example 10 the form
/// `c ⟨g(q − q₀), δq⟩ + ρ‖δq‖` as `(c, ρ)`; for Example 6 the energy
/// `(c/2)‖q − q₀‖²` as `(c, 0)`.
pub fn reduced_coefficients(spec: &ExampleSpec) -> Option<(f64, f64)> {
    let p = spec.params;
    match spec.id {
        6 => Some(((p.k * p.kp + p.k * p.kpp + p.kp * p.kpp) / (p.kp + p.kpp), 0.0)),
        10 => Some((p.k * p.kp / (p.k + p.kp), p.rho)),
        _ => None,
    }
}
