//! Constructors for the example systems.

use super::{ExampleSpec, CONSTRAINT_TOL};
use crate::convex::{Cone, HomogeneousForm, Seminorm};
use crate::error::Result;
use crate::euclid::{Covector, MetricSpace, Point, Vector};
use crate::families::{Fibration, FormFamily, FunctionFamily, Section};
use crate::statics::{Chart, StaticSystem};

/// What an example builds to.
#[derive(Clone, Debug)]
pub enum Built {
    Static(StaticSystem),
    Function(FunctionFamily),
    Form(FormFamily),
}

impl Built {
    pub fn kind(&self) -> &'static str {
        match self {
            Built::Static(_) => "static system",
            Built::Function(_) => "function family",
            Built::Form(_) => "form family",
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn lower(space: &MetricSpace, v: &[f64]) -> Vec<f64> {
    (space.metric() * nalgebra::DVector::from_column_slice(v))
        .as_slice()
        .to_vec()
}

fn scaled(c: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

pub fn build(spec: &ExampleSpec) -> Result<Built> {
    let space = spec.space.clone();
    let n = space.dim();
    let q0 = spec.q0.to_vec();
    let p = spec.params;
    Ok(match spec.id {
        1 => {
            let s1 = space.clone();
            let c0 = q0.clone();
            let a = p.a;
            let (s2, c1) = (space.clone(), q0.clone());
            let cone = move |q: &Point| -> Result<Cone> {
                let d = Vector::new(diff(q.as_slice(), &c1));
                Cone::subspace(&s2, &s2.orthogonal_complement(&[d]))
            };
            let cone2 = cone.clone();
            Built::Static(StaticSystem::new(
                Chart::Affine(space),
                move |q| {
                    let d = diff(q.as_slice(), &c0);
                    (s1.inner(&d, &d).sqrt() - a).abs() <= CONSTRAINT_TOL * a.max(1.0)
                },
                cone,
                move |q| Ok(HomogeneousForm::zero(cone2(q)?)),
            ))
        }
        2 => {
            let (s1, s2) = (space.clone(), space.clone());
            let rho = p.rho;
            Built::Static(StaticSystem::new(
                Chart::Affine(space),
                |_| true,
                move |_| Ok(Cone::full(&s1)),
                move |_| HomogeneousForm::new(&s2, Covector::zeros(n), vec![Seminorm::full(n, rho)], Cone::full(&s2)),
            ))
        }
        3 => {
            let chart = Chart::product(vec![Chart::Affine(space.clone()), Chart::Sphere(space.clone())]);
            let total = chart.space();
            let (s1, s2) = (space.clone(), space.clone());
            let cone = move |q: &Point| -> Result<Cone> {
                let th = Vector::from_slice(&q.as_slice()[n..]);
                let along = Cone::subspace(&s1, std::slice::from_ref(&th))?;
                let turn = Cone::subspace(&s2, &s2.orthogonal_complement(&[th]))?;
                Ok(Cone::product(along, turn))
            };
            let cone2 = cone.clone();
            let rho = p.rho;
            Built::Static(StaticSystem::new(
                chart,
                |_| true,
                cone,
                move |q| {
                    HomogeneousForm::new(
                        &total,
                        Covector::zeros(2 * n),
                        vec![Seminorm::block(2 * n, 0, n, rho)],
                        cone2(q)?,
                    )
                },
            ))
        }
        4 => {
            let gk = lower(&space, spec.axis.as_slice());
            let axis = spec.axis.clone();
            let rho = p.rho;
            let s = space.clone();
            let (c0, c1, g0, g1) = (q0.clone(), q0.clone(), gk.clone(), gk);
            let cone = move |q: &Point| -> Result<Cone> {
                let h: f64 = diff(q.as_slice(), &c1).iter().zip(&g1).map(|(a, b)| a * b).sum();
                if h.abs() <= CONSTRAINT_TOL {
                    Cone::soc(&s, &axis, rho)
                } else {
                    Ok(Cone::full(&s))
                }
            };
            let cone2 = cone.clone();
            Built::Static(StaticSystem::new(
                Chart::Affine(space),
                move |q| {
                    let h: f64 = diff(q.as_slice(), &c0).iter().zip(&g0).map(|(a, b)| a * b).sum();
                    h >= -CONSTRAINT_TOL
                },
                cone,
                move |q| Ok(HomogeneousForm::zero(cone2(q)?)),
            ))
        }
        5 => {
            let fib = Fibration::new(Chart::Affine(space.clone()), Chart::Sphere(space.clone()));
            let (k, a) = (p.k, p.a);
            let (s1, s2) = (space.clone(), space);
            let (c0, c1) = (q0.clone(), q0);
            let stretch =
                move |x: &[f64], c: &[f64]| -> Vec<f64> { (0..n).map(|i| x[i] - c[i] - a * x[n + i]).collect() };
            Built::Function(FunctionFamily::new(
                fib,
                move |qb| {
                    let e = stretch(qb.as_slice(), &c0);
                    0.5 * k * s1.inner(&e, &e)
                },
                move |qb| {
                    let ge = lower(&s2, &stretch(qb.as_slice(), &c1));
                    let mut out = scaled(k, &ge);
                    out.extend(scaled(-k * a, &ge));
                    Covector::new(out)
                },
            ))
        }
        6 => {
            let fib = Fibration::new(Chart::Affine(space.clone()), Chart::Affine(space.clone()));
            let (k, kp, kpp) = (p.k, p.kp, p.kpp);
            let (s1, s2) = (space.clone(), space);
            let (c0, c1) = (q0.clone(), q0);
            Built::Function(FunctionFamily::new(
                fib,
                move |qb| {
                    let x = qb.as_slice();
                    let (q, qp) = (&x[..n], &x[n..]);
                    let (d, dp, dd) = (diff(q, &c0), diff(qp, &c0), diff(qp, q));
                    0.5 * (k * s1.inner(&d, &d) + kp * s1.inner(&dp, &dp) + kpp * s1.inner(&dd, &dd))
                },
                move |qb| {
                    let x = qb.as_slice();
                    let (q, qp) = (&x[..n], &x[n..]);
                    let gd = lower(&s2, &diff(q, &c1));
                    let gdp = lower(&s2, &diff(qp, &c1));
                    let gdd = lower(&s2, &diff(qp, q));
                    let mut out: Vec<f64> = (0..n).map(|i| k * gd[i] - kpp * gdd[i]).collect();
                    out.extend((0..n).map(|i| kp * gdp[i] + kpp * gdd[i]));
                    Covector::new(out)
                },
            ))
        }
        7..=10 => Built::Form(spring_form_family(spec)),
        _ => unreachable!("validated id"),
    })
}

/// Examples 7 to 10: a point `q` coupled to a second point (or a rod
/// direction) in the fiber, with friction on one of them.
fn spring_form_family(spec: &ExampleSpec) -> FormFamily {
    let space = spec.space.clone();
    let n = space.dim();
    let q0 = spec.q0.to_vec();
    let p = spec.params;
    let id = spec.id;
    let fiber = if id == 9 {
        Chart::Sphere(space.clone())
    } else {
        Chart::Affine(space.clone())
    };
    let fib = Fibration::new(Chart::Affine(space.clone()), fiber);
    let total = fib.total_space();
    let total_chart = fib.total().clone();
    FormFamily::new(fib, move |qb| {
        let x = qb.as_slice();
        let (q, y) = (&x[..n], &x[n..]);
        let (k, kp, rho, a) = (p.k, p.kp, p.rho, p.a);
        let (base, fib_part, semi) = match id {
            7 => {
                // k⟨g(q′ − q), δq′ − δq⟩ + ρ‖δq′‖
                let t = scaled(k, &lower(&space, &diff(y, q)));
                (scaled(-1.0, &t), t, Seminorm::block(2 * n, n, n, rho))
            }
            8 | 10 => {
                // k′⟨g(q′ − q₀), δq′⟩ + k⟨g(q − q′), δq − δq′⟩ + friction
                let spring = scaled(k, &lower(&space, &diff(q, y)));
                let anchor = scaled(kp, &lower(&space, &diff(y, &q0)));
                let fib_part = diff(&anchor, &spring);
                let semi = if id == 8 {
                    Seminorm::block(2 * n, n, n, rho)
                } else {
                    Seminorm::block(2 * n, 0, n, rho)
                };
                (spring, fib_part, semi)
            }
            9 => {
                // k⟨g(q − q₀ − aϑ), δq⟩ − ka⟨g(q − q₀ − aϑ), δϑ⟩ + ρa‖δϑ‖
                let e: Vec<f64> = (0..n).map(|i| q[i] - q0[i] - a * y[i]).collect();
                let ge = lower(&space, &e);
                (
                    scaled(k, &ge),
                    scaled(-k * a, &ge),
                    Seminorm::block(2 * n, n, n, rho * a),
                )
            }
            _ => unreachable!(),
        };
        let mut lin = base;
        lin.extend(fib_part);
        HomogeneousForm::new(&total, Covector::new(lin), vec![semi], total_chart.tangent_cone(qb)?)
    })
}

/// The section of critical points for Examples 6 and 10.
pub fn section(spec: &ExampleSpec) -> Option<Section> {
    let p = spec.params;
    let t = match spec.id {
        6 => p.kpp / (p.kp + p.kpp),
        10 => p.k / (p.kp + p.k),
        _ => return None,
    };
    let q0 = spec.q0.clone();
    Some(Section::new(move |q| {
        Point::new(
            q.as_slice()
                .iter()
                .zip(q0.as_slice())
                .map(|(x, c)| c + t * (x - c))
                .collect(),
        )
    }))
}
