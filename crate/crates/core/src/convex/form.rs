//! Positively homogeneous convex forms `σ(v) = ⟨a, v⟩ + Σ ρᵢ ‖Pᵢ v‖`.

use nalgebra::{DMatrix, DVector};

use super::cone::Cone;
use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, quad, Covector, MetricSpace, Vector};

/// Tolerance on the domain check performed by [`SublinearForm::eval`],
/// relative to `max(1, ‖v‖)`.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A positively homogeneous convex function on a cone.
///
/// Implementors supply raw-slice evaluation; [`eval`](Self::eval) adds the
/// dimension and domain checks.
pub trait SublinearForm: Send + Sync {
    fn space(&self) -> &MetricSpace;

    fn domain(&self) -> &Cone;

    /// `σ(v)` with no checks. May return `-inf` for forms that are unbounded
    /// below.
    fn value_raw(&self, v: &[f64]) -> f64;

    /// A supergradient-compatible derivative of `σ` at `v` as a covector.
    /// Defaults to central differences.
    fn gradient_raw(&self, v: &[f64]) -> Vec<f64> {
        let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let h = 1e-6 * scale;
        let mut w = v.to_vec();
        (0..v.len())
            .map(|i| {
                w[i] = v[i] + h;
                let up = self.value_raw(&w);
                w[i] = v[i] - h;
                let down = self.value_raw(&w);
                w[i] = v[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// Linear maps whose kernels are where `σ` fails to be differentiable.
    fn kink_projectors(&self) -> Vec<DMatrix<f64>> {
        Vec::new()
    }

    fn eval(&self, v: &Vector) -> Result<f64> {
        check_dim(self.space().dim(), v.dim())?;
        let violation = self.domain().violation(v)?;
        let scale = self.space().norm_vec(v)?.max(1.0);
        if violation > DOMAIN_TOL * scale {
            return Err(Error::OutsideDomain { violation });
        }
        Ok(self.value_raw(v.as_slice()))
    }
}

/// A weighted seminorm `ρ ‖P v‖`, with the norm taken in the ambient metric.
#[derive(Clone, Debug)]
pub struct Seminorm {
    pub weight: f64,
    pub projector: DMatrix<f64>,
}

impl Seminorm {
    pub fn new(weight: f64, projector: DMatrix<f64>) -> Self {
        Self { weight, projector }
    }

    /// `ρ ‖v‖`.
    pub fn full(dim: usize, weight: f64) -> Self {
        Self::new(weight, DMatrix::identity(dim, dim))
    }

    /// `ρ ‖v_block‖` for the coordinate block `[start, start + len)`.
    pub fn block(dim: usize, start: usize, len: usize, weight: f64) -> Self {
        let mut p = DMatrix::zeros(dim, dim);
        for i in start..start + len {
            p[(i, i)] = 1.0;
        }
        Self::new(weight, p)
    }

    /// Seminorm with a prescribed Gram matrix `M = Pᵀ g P` (symmetric PSD).
    pub fn from_gram(space: &MetricSpace, weight: f64, gram: &DMatrix<f64>) -> Self {
        let eig = gram.clone().symmetric_eigen();
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let sqrt_m = &eig.eigenvectors * root * eig.eigenvectors.transpose();
        Self::new(weight, space.inverse_sqrt() * sqrt_m)
    }
}

/// `Pᵀ g P` for symmetric `g`, by plain loops: the matrices here are tiny and
/// the generic product's setup cost dominates.
fn congruence(p: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, n) = (p.nrows(), p.ncols());
    let mut gp = DMatrix::<f64>::zeros(r, n);
    for j in 0..n {
        for l in 0..r {
            let plj = p[(l, j)];
            if plj != 0.0 {
                for k in 0..r {
                    gp[(k, j)] += g[(k, l)] * plj;
                }
            }
        }
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let mut s = 0.0_f64;
            for k in 0..r {
                s += p[(k, i)] * gp[(k, j)];
            }
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    m
}

/// The canonical form `⟨a, v⟩ + Σ ρᵢ ‖Pᵢ v‖` on a cone.
#[derive(Clone, Debug)]
pub struct HomogeneousForm {
    space: MetricSpace,
    linear: Covector,
    seminorms: Vec<Seminorm>,
    grams: Vec<DMatrix<f64>>,
    domain: Cone,
}

impl HomogeneousForm {
    pub fn new(space: &MetricSpace, linear: Covector, seminorms: Vec<Seminorm>, domain: Cone) -> Result<Self> {
        let n = space.dim();
        check_dim(n, linear.dim())?;
        check_dim(n, domain.dim())?;
        if domain.space() != space {
            return Err(Error::Usage("form domain lives in a different space".into()));
        }
        for s in &seminorms {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "weight".into(),
                    value: s.weight,
                    reason: "seminorm weights must be finite and nonnegative".into(),
                });
            }
            check_dim(n, s.projector.ncols())?;
            check_dim(n, s.projector.nrows())?;
        }
        let grams = seminorms
            .iter()
            .map(|s| congruence(&s.projector, space.metric()))
            .collect();
        Ok(Self {
            space: space.clone(),
            linear,
            seminorms,
            grams,
            domain,
        })
    }

    /// The linear form `⟨a, v⟩`.
    pub fn linear(space: &MetricSpace, a: Covector, domain: Cone) -> Result<Self> {
        Self::new(space, a, Vec::new(), domain)
    }

    /// `σ = 0` on `domain`.
    pub fn zero(domain: Cone) -> Self {
        let space = domain.space().clone();
        Self::new(&space, Covector::zeros(space.dim()), Vec::new(), domain).expect("zero form is well formed")
    }

    pub fn linear_part(&self) -> &Covector {
        &self.linear
    }

    pub fn seminorms(&self) -> &[Seminorm] {
        &self.seminorms
    }

    /// Gram matrices `Pᵢᵀ g Pᵢ`, one per seminorm.
    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }

    /// Same form on a different cone.
    pub fn with_domain(&self, domain: Cone) -> Result<Self> {
        Self::new(&self.space, self.linear.clone(), self.seminorms.clone(), domain)
    }
}

impl SublinearForm for HomogeneousForm {
    fn space(&self) -> &MetricSpace {
        &self.space
    }

    fn domain(&self) -> &Cone {
        &self.domain
    }

    fn value_raw(&self, v: &[f64]) -> f64 {
        let mut s = dot(self.linear.as_slice(), v);
        for (sn, m) in self.seminorms.iter().zip(&self.grams) {
            if sn.weight != 0.0 {
                s += sn.weight * quad(m, v, v).max(0.0).sqrt();
            }
        }
        s
    }

    fn gradient_raw(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.linear.to_vec();
        let vv = DVector::from_column_slice(v);
        for (sn, m) in self.seminorms.iter().zip(&self.grams) {
            if sn.weight == 0.0 {
                continue;
            }
            let mv = m * &vv;
            let n = dot(mv.as_slice(), v).max(0.0).sqrt();
            if n > 1e-300 {
                for (gi, x) in g.iter_mut().zip(mv.iter()) {
                    *gi += sn.weight * x / n;
                }
            }
        }
        g
    }

    fn kink_projectors(&self) -> Vec<DMatrix<f64>> {
        self.seminorms
            .iter()
            .filter(|s| s.weight > 0.0)
            .map(|s| s.projector.clone())
            .collect()
    }
}

/// Evaluates `σ(v)` after checking dimension and domain membership.
pub fn eval_form(form: &dyn SublinearForm, v: &Vector) -> Result<f64> {
    form.eval(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pure_seminorm_and_pure_linear() {
        let space = MetricSpace::identity(2);
        let f = HomogeneousForm::new(
            &space,
            Covector::zeros(2),
            vec![Seminorm::full(2, 1.0)],
            Cone::full(&space),
        )
        .unwrap();
        assert_eq!(f.eval(&Vector::new(vec![3.0, 4.0])).unwrap(), 5.0);
        let l = HomogeneousForm::linear(&space, Covector::new(vec![1.0, 0.0]), Cone::full(&space)).unwrap();
        assert_eq!(l.eval(&Vector::new(vec![2.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn spring_with_friction_form() {
        // k⟨g(q' − q), δq' − δq⟩ + ρ‖δq'‖ with k = ρ = 1, q' − q = (0.5, 0, 0)
        let space = MetricSpace::identity(6);
        let a = Covector::new(vec![-0.5, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let form = HomogeneousForm::new(&space, a, vec![Seminorm::block(6, 3, 3, 1.0)], Cone::full(&space)).unwrap();
        let v = Vector::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_relative_eq!(form.eval(&v).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn domain_violation_is_reported() {
        let space = MetricSpace::identity(2);
        let line = Cone::subspace(&space, &[Vector::new(vec![1.0, 0.0])]).unwrap();
        let f = HomogeneousForm::zero(line);
        match f.eval(&Vector::new(vec![0.0, 1.0])) {
            Err(Error::OutsideDomain { violation }) => assert_relative_eq!(violation, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gram_constructor_reproduces_seminorm() {
        let space = MetricSpace::diagonal(&[2.0, 3.0]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let s = Seminorm::from_gram(&space, 1.0, &m);
        let form = HomogeneousForm::new(&space, Covector::zeros(2), vec![s], Cone::full(&space)).unwrap();
        let v = [0.3, -1.2];
        assert_relative_eq!(form.value_raw(&v), quad(&m, &v, &v).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let space = MetricSpace::diagonal(&[1.0, 2.0, 0.5]).unwrap();
        let form = HomogeneousForm::new(
            &space,
            Covector::new(vec![0.3, -0.1, 0.2]),
            vec![Seminorm::full(3, 0.7), Seminorm::block(3, 1, 2, 1.3)],
            Cone::full(&space),
        )
        .unwrap();
        let v = [0.4, -0.9, 1.1];
        let analytic = form.gradient_raw(&v);
        let h = 1e-6;
        for i in 0..3 {
            let mut up = v;
            let mut dn = v;
            up[i] += h;
            dn[i] -= h;
            let fd = (form.value_raw(&up) - form.value_raw(&dn)) / (2.0 * h);
            assert_relative_eq!(analytic[i], fd, epsilon = 1e-7);
        }
    }

    proptest! {
        #[test]
        fn homogeneity_and_convexity(
            a in prop::collection::vec(-2.0..2.0f64, 3),
            u in prop::collection::vec(-3.0..3.0f64, 3),
            w in prop::collection::vec(-3.0..3.0f64, 3),
            lam in 0.0..20.0f64,
            s in 0.0..1.0f64,
            rho in 0.0..3.0f64,
        ) {
            let space = MetricSpace::diagonal(&[1.0, 4.0, 0.25]).unwrap();
            let form = HomogeneousForm::new(
                &space,
                Covector::new(a),
                vec![Seminorm::full(3, rho), Seminorm::block(3, 0, 2, 0.5)],
                Cone::full(&space),
            ).unwrap();
            let su = form.value_raw(&u);
            let scaled: Vec<f64> = u.iter().map(|x| lam * x).collect();
            prop_assert!((form.value_raw(&scaled) - lam * su).abs() <= 1e-12 * (1.0 + (lam * su).abs()) + 1e-12);
            let mid: Vec<f64> = u.iter().zip(&w).map(|(x, y)| s * x + (1.0 - s) * y).collect();
            prop_assert!(form.value_raw(&mid) <= s * su + (1.0 - s) * form.value_raw(&w) + 1e-12);
        }
    }
}
