//! Families of internal energies `Ū` over a fibration.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fibration::Fibration;
use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, Covector, Point, Vector, SAMPLING_SEED};

type Energy = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&Point) -> Covector + Send + Sync>;

/// An energy on the total space with its differential, supplied analytically.
#[derive(Clone)]
pub struct FunctionFamily {
    fib: Fibration,
    energy: Energy,
    gradient: Gradient,
}

impl fmt::Debug for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionFamily")
            .field("fib", &self.fib)
            .finish_non_exhaustive()
    }
}

impl FunctionFamily {
    pub fn new(
        fib: Fibration,
        energy: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Point) -> Covector + Send + Sync + 'static,
    ) -> Self {
        Self {
            fib,
            energy: Arc::new(energy),
            gradient: Arc::new(gradient),
        }
    }

    pub fn fibration(&self) -> &Fibration {
        &self.fib
    }

    pub fn energy(&self, qbar: &Point) -> f64 {
        (self.energy)(qbar)
    }

    pub fn gradient(&self, qbar: &Point) -> Covector {
        (self.gradient)(qbar)
    }

    /// Central difference of `Ū` along the chart curve through `q̄` with
    /// velocity `v`.
    pub fn directional_fd(&self, qbar: &Point, v: &Vector, h: f64) -> f64 {
        let chart = self.fib.total();
        let up = self.energy(&chart.retract(qbar, v, h));
        let down = self.energy(&chart.retract(qbar, v, -h));
        (up - down) / (2.0 * h)
    }

    /// Compares `⟨dŪ, v⟩` with finite differences along random tangent
    /// vectors at each point; returns the worst relative error.
    pub fn validate_gradient(&self, points: &[Point], seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SAMPLING_SEED);
        let mut worst: f64 = 0.0;
        for qbar in points {
            let basis = self.fib.total_tangent(qbar)?.linear_basis().unwrap_or_default();
            let mut v = Vector::zeros(qbar.dim());
            for b in &basis {
                let c: f64 = rng.random_range(-1.0..1.0);
                v = &v + &(b * c);
            }
            let analytic = dot(self.gradient(qbar).as_slice(), v.as_slice());
            let fd = self.directional_fd(qbar, &v, 1e-5);
            let scale = analytic.abs().max(fd.abs()).max(1e-8);
            worst = worst.max((analytic - fd).abs() / scale);
        }
        Ok(worst)
    }

    /// Dual norm of `dŪ` restricted to vertical vectors.
    pub fn vertical_gradient_norm(&self, qbar: &Point) -> Result<f64> {
        let g = self.gradient(qbar);
        check_dim(qbar.dim(), g.dim())?;
        let w = self.fib.vertical_basis(qbar)?;
        Ok(w.iter()
            .map(|b| dot(g.as_slice(), b.as_slice()).powi(2))
            .sum::<f64>()
            .sqrt())
    }
}

/// `q̄` is critical iff the vertical part of `dŪ` has norm at most `tol`.
pub fn critical_test_function(fam: &FunctionFamily, qbar: &Point, tol: f64) -> Result<bool> {
    Ok(fam.vertical_gradient_norm(qbar)? <= tol)
}

/// The base covector `κ(q̄)` with `⟨κ, Tη(δq̄)⟩ = ⟨dŪ, δq̄⟩`.
pub fn kappa(fam: &FunctionFamily, qbar: &Point, tol: f64) -> Result<Covector> {
    let defect = fam.vertical_gradient_norm(qbar)?;
    if defect > tol {
        return Err(Error::NotCritical {
            point: qbar.to_vec(),
            defect,
        });
    }
    Ok(kappa_unchecked(fam, qbar))
}

pub(crate) fn kappa_unchecked(fam: &FunctionFamily, qbar: &Point) -> Covector {
    let fib = fam.fibration();
    let g = fam.gradient(qbar);
    let base = Covector::from_slice(&g.as_slice()[..fib.base_dim()]);
    let q = fib.project(qbar);
    fib.base().tangential_covector(&q, &base).unwrap_or(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::MetricSpace;
    use crate::statics::Chart;

    #[test]
    fn constant_energy_is_critical_everywhere() {
        let s = MetricSpace::identity(2);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Affine(s));
        let fam = FunctionFamily::new(fib, |_| 3.0, |_| Covector::zeros(4));
        let p = Point::new(vec![0.3, 1.0, -2.0, 5.0]);
        assert!(critical_test_function(&fam, &p, 1e-12).unwrap());
        assert_eq!(kappa(&fam, &p, 1e-12).unwrap().to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn non_critical_kappa_is_an_error() {
        let s = MetricSpace::identity(1);
        let fib = Fibration::new(Chart::Affine(s.clone()), Chart::Affine(s));
        // Ū(q, y) = y²/2 + q y
        let fam = FunctionFamily::new(
            fib,
            |p| 0.5 * p.as_slice()[1].powi(2) + p.as_slice()[0] * p.as_slice()[1],
            |p| {
                let (q, y) = (p.as_slice()[0], p.as_slice()[1]);
                Covector::new(vec![y, y + q])
            },
        );
        assert!(matches!(
            kappa(&fam, &Point::new(vec![1.0, 1.0]), 1e-9),
            Err(Error::NotCritical { .. })
        ));
        assert_eq!(
            kappa(&fam, &Point::new(vec![1.0, -1.0]), 1e-9).unwrap().to_vec(),
            vec![-1.0]
        );
        let pts: Vec<Point> = (0..10)
            .map(|i| Point::new(vec![i as f64 * 0.3, 1.0 - i as f64]))
            .collect();
        assert!(fam.validate_gradient(&pts, 1).unwrap() < 1e-8);
    }
}
