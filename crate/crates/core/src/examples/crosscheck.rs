//! Randomized agreement between the numeric oracles and the closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::analytic::{analytic_membership, characteristic_scale, critical_slack, AnalyticVerdict};
use super::build::{build, Built};
use super::ExampleSpec;
use crate::convex::{Membership, Verdict, DEFAULT_TOL};
use crate::error::Result;
use crate::euclid::{Covector, Point, Vector};
use crate::families::{generated_set_membership, FiberGrid, GeneratingFamily, SearchOptions};
use crate::statics::{constitutive_membership, ForcePoint};

/// Grid points per fiber coordinate in cross-checks. The searched merit
/// functions of the affine-fiber examples are convex, so a coarse scan
/// followed by refinement suffices.
const PER_DIM: usize = 5;
/// Sphere-fiber sample count in cross-checks.
const SPHERE_COUNT: usize = 256;

/// A trial where the numeric verdict contradicts the closed form.
#[derive(Clone, Debug)]
pub struct Disagreement {
    pub trial: usize,
    pub q: Vec<f64>,
    pub f: Vec<f64>,
    pub analytic: AnalyticVerdict,
    pub numeric: Verdict,
    pub numeric_margin: f64,
}

#[derive(Clone, Debug)]
pub struct CrosscheckReport {
    pub id: u8,
    pub trials: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
    /// Trials whose analytic margin fell inside the boundary band.
    pub boundary_skipped: usize,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

struct Sampler<'a> {
    spec: &'a ExampleSpec,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn n(&self) -> usize {
        self.spec.dim()
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn cube(&mut self, r: f64) -> Vec<f64> {
        (0..self.n()).map(|_| self.rng.random_range(-r..=r)).collect()
    }

    fn unit(&mut self) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.n()).map(|_| self.rng.sample(StandardNormal)).collect();
            if let Some(u) = self.spec.space.normalize(&Vector::new(v)) {
                return u.to_vec();
            }
        }
    }

    fn lower(&self, v: &[f64]) -> Vec<f64> {
        (self.spec.space.metric() * nalgebra::DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }

    fn around_q0(&self, v: &[f64]) -> Vec<f64> {
        self.spec.q0.as_slice().iter().zip(v).map(|(a, b)| a + b).collect()
    }

    /// Draws a configuration and a force for one trial.
    fn trial(&mut self) -> (Point, Covector) {
        let p = self.spec.params;
        let n = self.n();
        let mix = |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + c * y).collect() };
        let (q, f) = match self.spec.id {
            1 => {
                let u = self.unit();
                let r = if self.chance(0.1) { 1.3 * p.a } else { p.a };
                let q = self.around_q0(&u.iter().map(|x| r * x).collect::<Vec<_>>());
                let f = if self.chance(0.5) {
                    let lam = self.uniform(-3.0, 3.0);
                    self.lower(&u).iter().map(|x| lam * x).collect()
                } else {
                    self.cube(2.0)
                };
                (q, f)
            }
            2 => {
                let q = self.cube(3.0);
                (q, self.cube(2.0 * p.rho))
            }
            3 => {
                let mut q = self.cube(3.0);
                let th = self.unit();
                q.extend(&th);
                let mut f = self.cube(2.0 * p.rho);
                if self.chance(0.5) {
                    let c = self.uniform(-1.0, 1.0);
                    f.extend(self.lower(&th).iter().map(|x| c * x));
                } else {
                    f.extend(self.cube(1.0));
                }
                (q, f)
            }
            4 => {
                let k = self.spec.axis.to_vec();
                let gk = self.lower(&k);
                let raw = self.cube(3.0);
                let h: f64 = raw.iter().zip(&gk).map(|(a, b)| a * b).sum();
                let tangent = mix(&raw, -h, &k);
                let roll = self.uniform(0.0, 1.0);
                let t = if roll < 0.5 {
                    0.0
                } else if roll < 0.9 {
                    self.uniform(0.1, 2.0)
                } else {
                    -self.uniform(0.1, 2.0)
                };
                let q = self.around_q0(&mix(&tangent, t, &k));
                let f = if t > 0.0 && self.chance(0.5) {
                    vec![0.0; n]
                } else {
                    self.cube(2.0)
                };
                (q, f)
            }
            5 => {
                let d: Vec<f64> = if self.chance(0.2) {
                    vec![0.0; n]
                } else {
                    let r = self.uniform(0.1, 3.0 * p.a);
                    self.unit().iter().map(|x| r * x).collect()
                };
                let q = self.around_q0(&d);
                let dn = self.spec.space.inner(&d, &d).sqrt();
                let on: Vec<f64> = if dn == 0.0 {
                    let th = self.unit();
                    self.lower(&th).iter().map(|x| -p.k * p.a * x).collect()
                } else {
                    let sgn = if self.chance(0.5) { 1.0 } else { -1.0 };
                    let c = p.k * (1.0 - sgn * p.a / dn);
                    self.lower(&d).iter().map(|x| c * x).collect()
                };
                let s = p.k * dn.max(p.a);
                (q, self.perturb(on, s))
            }
            6 => {
                let d = self.cube(3.0);
                let c = (p.k * p.kp + p.k * p.kpp + p.kp * p.kpp) / (p.kp + p.kpp);
                let on: Vec<f64> = self.lower(&d).iter().map(|x| c * x).collect();
                let s = p.k * self.spec.space.inner(&d, &d).sqrt().max(p.a);
                (self.around_q0(&d), self.perturb(on, s))
            }
            7 => (self.cube(3.0), self.cube(2.0 * p.rho)),
            8 | 10 => {
                let d = self.cube(3.0);
                let c = p.k * p.kp / (p.k + p.kp);
                let r = if self.spec.id == 8 {
                    p.k * p.rho / (p.k + p.kp)
                } else {
                    p.rho
                };
                let center: Vec<f64> = self.lower(&d).iter().map(|x| c * x).collect();
                let off = self.cube(2.0 * r);
                (self.around_q0(&d), mix(&center, 1.0, &off))
            }
            9 => {
                let r = self.uniform(0.0, 3.0 * p.rho / p.k);
                let dir = self.unit();
                let d: Vec<f64> = dir.iter().map(|x| r * x).collect();
                let q = self.around_q0(&d);
                let mut th = self.unit();
                for _ in 0..200 {
                    let qb = Point::new(q.iter().chain(&th).copied().collect());
                    if critical_slack(self.spec, &qb).unwrap_or(0.0) >= 0.0 {
                        break;
                    }
                    th = self.unit();
                }
                let on: Vec<f64> = self.lower(&mix(&d, -p.a, &th)).iter().map(|x| p.k * x).collect();
                (q, self.perturb(on, p.rho))
            }
            _ => unreachable!("validated id"),
        };
        (Point::new(q), Covector::new(f))
    }

    /// Keeps `on` half of the time, nudges it a quarter of the time and
    /// otherwise draws from a box of size `2s` around it.
    fn perturb(&mut self, on: Vec<f64>, s: f64) -> Vec<f64> {
        let roll = self.uniform(0.0, 1.0);
        let r = if roll < 0.5 {
            0.0
        } else if roll < 0.75 {
            0.1 * s
        } else {
            2.0 * s
        };
        if r == 0.0 {
            return on;
        }
        let off = self.cube(r);
        on.iter().zip(off).map(|(a, b)| a + b).collect()
    }
}

fn fiber_grid(spec: &ExampleSpec, q: &Point) -> FiberGrid {
    match spec.id {
        5 | 9 => FiberGrid::Sphere { count: SPHERE_COUNT },
        _ => {
            let p = spec.params;
            let q0 = spec.q0.as_slice();
            let center: Vec<f64> = q.as_slice().iter().zip(q0).map(|(a, b)| 0.5 * (a + b)).collect();
            let spread = q
                .as_slice()
                .iter()
                .zip(q0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let lam_min = spec.space.metric().clone().symmetric_eigen().eigenvalues.min();
            let reach = match spec.id {
                7..=10 => 1.5 * p.rho / p.k.min(p.kp) / lam_min.sqrt(),
                _ => 0.0,
            };
            FiberGrid::cube(&center, 0.5 * spread + reach + 1e-3, PER_DIM)
        }
    }
}

/// Numeric membership of `f` in the constitutive set at base point `q`: the
/// virtual-work oracle for static systems, the generating-family search
/// otherwise. `built` must come from [`build`] on the same spec.
pub fn numeric_membership(spec: &ExampleSpec, built: &Built, q: &Point, f: &Covector, tol: f64) -> Result<Membership> {
    let opts = SearchOptions {
        tol,
        ..SearchOptions::default()
    };
    let run = |fam: &dyn GeneratingFamilyDyn| fam.search(q, f, &fiber_grid(spec, q), &opts);
    match built {
        Built::Static(sys) => constitutive_membership(sys, &ForcePoint::new(q.clone(), f.clone()), tol),
        Built::Function(fam) => run(fam),
        Built::Form(fam) => run(fam),
    }
}

trait GeneratingFamilyDyn {
    fn search(&self, q: &Point, f: &Covector, grid: &FiberGrid, opts: &SearchOptions) -> Result<Membership>;
}

impl<T: GeneratingFamily> GeneratingFamilyDyn for T {
    fn search(&self, q: &Point, f: &Covector, grid: &FiberGrid, opts: &SearchOptions) -> Result<Membership> {
        Ok(generated_set_membership(self, q, f, grid, opts)?.membership)
    }
}

enum Outcome {
    Skipped,
    Agree,
    Disagree(Disagreement),
}

/// Draws `trials` random configurations and forces, and compares the numeric
/// oracle with the closed form wherever the analytic margin is outside
/// `band × scale`.
pub fn crosscheck(spec: &ExampleSpec, trials: usize, seed: u64, band: f64) -> Result<CrosscheckReport> {
    let built = build(spec)?;
    let mut sampler = Sampler {
        spec,
        rng: ChaCha8Rng::seed_from_u64(seed ^ ((spec.id as u64) << 40)),
    };
    let cases: Vec<(Point, Covector)> = (0..trials).map(|_| sampler.trial()).collect();
    let outcomes: Vec<Outcome> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (q, f))| -> Result<Outcome> {
            let analytic = analytic_membership(spec, q, f)?;
            if analytic.margin.abs() <= band * characteristic_scale(spec, q) {
                return Ok(Outcome::Skipped);
            }
            let m = numeric_membership(spec, &built, q, f, DEFAULT_TOL)?;
            let (numeric, numeric_margin) = (m.verdict, m.margin);
            if (numeric != Verdict::NonMember) == analytic.member {
                return Ok(Outcome::Agree);
            }
            Ok(Outcome::Disagree(Disagreement {
                trial: i,
                q: q.to_vec(),
                f: f.to_vec(),
                analytic,
                numeric,
                numeric_margin,
            }))
        })
        .collect::<Result<_>>()?;
    let mut agreements = 0;
    let mut skipped = 0;
    let mut disagreements = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Skipped => skipped += 1,
            Outcome::Agree => agreements += 1,
            Outcome::Disagree(d) => disagreements.push(d),
        }
    }
    Ok(CrosscheckReport {
        id: spec.id,
        trials,
        agreements,
        disagreements,
        boundary_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_agreement_for_every_example() {
        for id in 1..=10u8 {
            let spec = ExampleSpec::new(id, 3).unwrap();
            let r = crosscheck(&spec, 40, 7, 1e-3).unwrap();
            assert!(r.passed(), "example {id}: {:?}", r.disagreements);
            assert_eq!(r.agreements + r.boundary_skipped, 40);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = ExampleSpec::new(8, 3).unwrap();
        let a = crosscheck(&spec, 20, 3, 1e-3).unwrap();
        let b = crosscheck(&spec, 20, 3, 1e-3).unwrap();
        assert_eq!((a.agreements, a.boundary_skipped), (b.agreements, b.boundary_skipped));
    }
}
