//! Reduction of a family through a section of critical points.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::form_family::{reduced_form_at, FormFamily, ReducedForm};
use super::function::{kappa, FunctionFamily};
use crate::convex::SublinearForm;
use crate::error::{check_dim, Error, Result};
use crate::euclid::{Covector, Point, SAMPLING_SEED};
use crate::statics::{energy_system, StaticSystem};

type FiberMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// `ζ : q ↦ (q, y(q))`, given by its fiber coordinate.
#[derive(Clone)]
pub struct Section {
    map: FiberMap,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Section")
    }
}

impl Section {
    pub fn new(map: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        Self { map: Arc::new(map) }
    }

    pub fn fiber_at(&self, q: &Point) -> Point {
        (self.map)(q)
    }

    /// `ζ(q)` in total coordinates.
    pub fn lift(&self, q: &Point) -> Point {
        q.concat(&self.fiber_at(q))
    }
}

/// Convexity and homogeneity defects of a reduced form, from `pairs` random
/// pairs of admissible directions: `max(σ(u+v)/2 − (σ(u)+σ(v))/2)` and
/// `max |σ(λu) − λσ(u)|`.
pub fn sublinearity_defects(form: &dyn SublinearForm, pairs: usize, seed: u64) -> (f64, f64) {
    let dirs = form.domain().sample(form.domain().default_sample_count().max(2));
    if dirs.is_empty() {
        return (0.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SAMPLING_SEED);
    let mut convex: f64 = f64::NEG_INFINITY;
    let mut homog: f64 = 0.0;
    for _ in 0..pairs {
        let u = &dirs[rng.random_range(0..dirs.len())] * rng.random_range(0.1..2.0);
        let v = &dirs[rng.random_range(0..dirs.len())] * rng.random_range(0.1..2.0);
        let lam: f64 = rng.random_range(0.0..5.0);
        let mid = &(&u + &v) * 0.5;
        let (su, sv) = (form.value_raw(u.as_slice()), form.value_raw(v.as_slice()));
        convex = convex.max(form.value_raw(mid.as_slice()) - 0.5 * (su + sv));
        let scaled = &u * lam;
        homog = homog.max((form.value_raw(scaled.as_slice()) - lam * su).abs());
    }
    (convex, homog)
}

/// A form family reduced through a section: `σ_q = σ_{ζ(q)}` on the base.
#[derive(Clone, Debug)]
pub struct ReducedFamily {
    fam: FormFamily,
    section: Section,
    tol: f64,
}

impl ReducedFamily {
    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn form_at(&self, q: &Point) -> Result<ReducedForm> {
        reduced_form_at(&self.fam, &self.section.lift(q), self.tol)
    }

    /// The base static system with the reduced forms; needs the family to
    /// split into base and fiber parts so that each form is canonical.
    pub fn static_system(&self) -> StaticSystem {
        let base = self.fam.fibration().base().clone();
        let chart = base.clone();
        let this = self.clone();
        StaticSystem::new(
            chart,
            |_| true,
            move |q| base.tangent_cone(q),
            move |q| match this.form_at(q)? {
                ReducedForm::Canonical(h) => Ok(h),
                ReducedForm::Numeric(_) => Err(Error::Usage("reduced form has no canonical representation".into())),
            },
        )
    }
}

/// Reduces `fam` through `section`, checking on `samples` that the section
/// lands in the critical set and that the reduced forms are sublinear.
pub fn reduce_family(fam: &FormFamily, section: Section, samples: &[Point], tol: f64) -> Result<ReducedFamily> {
    let red = ReducedFamily {
        fam: fam.clone(),
        section,
        tol,
    };
    let fib = fam.fibration();
    for (i, q) in samples.iter().enumerate() {
        check_dim(fib.base_dim(), q.dim())?;
        let y = red.section.fiber_at(q);
        check_dim(fib.fiber_dim(), y.dim())?;
        fib.fiber().check_point(&y)?;
        let form = match red.form_at(q) {
            Err(Error::NotCritical { defect, .. }) => {
                return Err(Error::Usage(format!(
                    "section is not critical at q = {:?} (defect {defect:.3e})",
                    q.as_slice()
                )))
            }
            other => other?,
        };
        let (convex, homog) = sublinearity_defects(&form, 64, i as u64);
        let scale = 1.0 + form.value_raw(&vec![0.0; q.dim()]).abs();
        if convex > 1e-6 * scale || homog > 1e-6 * scale {
            return Err(Error::Usage(format!(
                "reduced form at q = {:?} is not sublinear (convexity {convex:.3e}, homogeneity {homog:.3e})",
                q.as_slice()
            )));
        }
    }
    Ok(red)
}

/// A function family reduced through a section: `U = Ū ∘ ζ` with
/// differential `κ ∘ ζ`.
#[derive(Clone, Debug)]
pub struct ReducedEnergy {
    fam: FunctionFamily,
    section: Section,
    tol: f64,
}

impl ReducedEnergy {
    pub fn energy(&self, q: &Point) -> f64 {
        self.fam.energy(&self.section.lift(q))
    }

    pub fn gradient(&self, q: &Point) -> Result<Covector> {
        kappa(&self.fam, &self.section.lift(q), self.tol)
    }

    pub fn static_system(&self) -> StaticSystem {
        let base = self.fam.fibration().base().clone();
        let tangent = base.clone();
        let this = self.clone();
        let dim = base.dim();
        energy_system(
            base,
            |_| true,
            move |q| tangent.tangent_cone(q),
            move |q| this.gradient(q).unwrap_or_else(|_| Covector::new(vec![f64::NAN; dim])),
        )
    }
}

pub fn reduce_function_family(
    fam: &FunctionFamily,
    section: Section,
    samples: &[Point],
    tol: f64,
) -> Result<ReducedEnergy> {
    let fib = fam.fibration();
    for q in samples {
        check_dim(fib.base_dim(), q.dim())?;
        let y = section.fiber_at(q);
        check_dim(fib.fiber_dim(), y.dim())?;
        if let Err(Error::NotCritical { defect, .. }) = kappa(fam, &section.lift(q), tol) {
            return Err(Error::Usage(format!(
                "section is not critical at q = {:?} (defect {defect:.3e})",
                q.as_slice()
            )));
        }
    }
    Ok(ReducedEnergy {
        fam: fam.clone(),
        section,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Cone, HomogeneousForm, Seminorm};
    use crate::euclid::MetricSpace;
    use crate::families::Fibration;
    use crate::statics::Chart;
    use approx::assert_relative_eq;

    #[test]
    fn constant_fiber_form_reduces_to_horizontal_part() {
        let s = MetricSpace::identity(2);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Affine(s.clone()));
        let total = fib.total_space();
        let fam = FormFamily::new(fib, move |_| {
            HomogeneousForm::new(
                &total,
                Covector::new(vec![1.0, -2.0, 0.0, 0.0]),
                vec![Seminorm::block(4, 0, 2, 0.5), Seminorm::block(4, 2, 2, 1.0)],
                Cone::full(&total),
            )
        });
        let samples = [Point::new(vec![0.0, 1.0]), Point::new(vec![3.0, -1.0])];
        let red = reduce_family(&fam, Section::new(|_| Point::zeros(2)), &samples, 1e-9).unwrap();
        let h = red.form_at(&samples[0]).unwrap();
        let h = h.canonical().unwrap();
        assert_eq!(h.linear_part().to_vec(), vec![1.0, -2.0]);
        assert_relative_eq!(h.value_raw(&[0.0, 1.0]), -2.0 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn non_critical_section_names_q() {
        let s = MetricSpace::identity(1);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Affine(s));
        let total = fib.total_space();
        // vertical part 2 δy with no friction: never critical
        let fam = FormFamily::new(fib, move |_| {
            HomogeneousForm::linear(&total, Covector::new(vec![0.0, 2.0]), Cone::full(&total))
        });
        let err = reduce_family(&fam, Section::new(|_| Point::zeros(1)), &[Point::new(vec![0.25])], 1e-9).unwrap_err();
        assert!(err.to_string().contains("0.25"), "{err}");
    }
}
