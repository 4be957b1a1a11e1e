//! Families of virtual-work forms over a fibration: critical points,
//! contributions and vertical infima.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::fibration::Fibration;
use crate::convex::{
    legendre_membership, legendre_membership_with, max_excess, Cone, HomogeneousForm, LegendreOptions, Membership,
    Seminorm, SublinearForm,
};
use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, Covector, MetricSpace, Point, Vector};

type FormMap = Arc<dyn Fn(&Point) -> Result<HomogeneousForm> + Send + Sync>;

/// A fibration with a virtual-work form `σ̄` on the total tangent bundle.
#[derive(Clone)]
pub struct FormFamily {
    fib: Fibration,
    form_at: FormMap,
}

impl fmt::Debug for FormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormFamily")
            .field("fib", &self.fib)
            .finish_non_exhaustive()
    }
}

impl FormFamily {
    pub fn new(fib: Fibration, form_at: impl Fn(&Point) -> Result<HomogeneousForm> + Send + Sync + 'static) -> Self {
        Self {
            fib,
            form_at: Arc::new(form_at),
        }
    }

    pub fn fibration(&self) -> &Fibration {
        &self.fib
    }

    pub fn form_at(&self, qbar: &Point) -> Result<HomogeneousForm> {
        self.fib.total().check_point(qbar)?;
        (self.form_at)(qbar)
    }

    /// Decomposes `σ̄` at `q̄` into base and fiber parts when possible.
    pub fn split(&self, qbar: &Point) -> Result<Split> {
        let an = self.analyze(qbar)?;
        let q = self.fib.project(qbar);
        let base_cone = self.fib.base().tangent_cone(&q)?;
        let base_space = self.fib.base().space();
        let nb = self.fib.base_dim();
        let a_base = Covector::from_slice(&an.form.linear_part().as_slice()[..nb]);
        let semis = an
            .base_grams
            .iter()
            .map(|(w, m)| Seminorm::from_gram(&base_space, *w, m))
            .collect();
        let base_form = HomogeneousForm::new(&base_space, a_base, semis, base_cone)?;
        Ok(Split {
            form: an.form,
            vertical: an.vertical,
            b: an.b,
            fiber_weight: an.fiber_weight,
            base_form: an.separable.then_some(base_form),
        })
    }

    pub(crate) fn analyze(&self, qbar: &Point) -> Result<Analysis> {
        let form = self.form_at(qbar)?;
        let vertical = self.fib.vertical_basis(qbar)?;
        let nb = self.fib.base_dim();
        let b: Vec<f64> = vertical
            .iter()
            .map(|w| dot(form.linear_part().as_slice(), w.as_slice()))
            .collect();
        let mut separable = form.domain().equivalent(&self.fib.total_tangent(qbar)?, 1e-9);
        let mut fiber_weight = 0.0;
        let mut base_grams = Vec::new();
        let r = vertical.len();
        let wmat = DMatrix::from_fn(qbar.dim(), r, |i, j| vertical[j].as_slice()[i]);
        for (sn, m) in form.seminorms().iter().zip(form.grams()) {
            if sn.weight == 0.0 || !separable {
                continue;
            }
            let wmw = wmat.transpose() * m * &wmat;
            let scale = m.amax().max(1e-300);
            let mbb = m.view((0, 0), (nb, nb)).clone_owned();
            if wmw.amax() <= 1e-12 * scale {
                base_grams.push((sn.weight, mbb));
            } else if mbb.amax() <= 1e-12 * scale {
                let lam = wmw.trace() / r as f64;
                if (&wmw - DMatrix::identity(r, r) * lam).amax() <= 1e-9 * scale {
                    fiber_weight += sn.weight * lam.sqrt();
                } else {
                    separable = false;
                }
            } else {
                separable = false;
            }
        }
        Ok(Analysis {
            form,
            vertical,
            b,
            fiber_weight,
            base_grams,
            separable,
        })
    }
}

/// Raw ingredients of [`Split`].
pub(crate) struct Analysis {
    pub form: HomogeneousForm,
    pub vertical: Vec<Vector>,
    pub b: Vec<f64>,
    pub fiber_weight: f64,
    /// Weights and base-block Gram matrices of base-only seminorms.
    pub base_grams: Vec<(f64, DMatrix<f64>)>,
    pub separable: bool,
}

impl Analysis {
    pub fn critical_violation(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum::<f64>().sqrt() - self.fiber_weight
    }

    /// `max ⟨f, v⟩ − σ_q̄(v)` over unit base vectors in closed form, when the
    /// base tangent space is the whole space and every base seminorm is a
    /// multiple of the metric norm.
    pub fn closed_excess(&self, base: &MetricSpace, base_full: bool, f: &Covector) -> Option<f64> {
        if !self.separable || !base_full {
            return None;
        }
        let g = base.metric();
        let mut weight = 0.0;
        for (w, m) in &self.base_grams {
            let lam = m.trace() / g.trace();
            if (m - g * lam).amax() > 1e-12 * m.amax().max(1e-300) {
                return None;
            }
            weight += w * lam.sqrt();
        }
        let a = self.form.linear_part().as_slice();
        let d: Vec<f64> = f.as_slice().iter().zip(a).map(|(x, y)| x - y).collect();
        Some(base.inner_dual(&d, &d).max(0.0).sqrt() - weight)
    }
}

/// The decomposition of `σ̄(lift δq + w) = σ_base(δq) + ⟨b, w⟩ + ρ_W ‖w‖`,
/// available when every seminorm acts on base or fiber only and fiber
/// seminorms are isotropic on the vertical space.
#[derive(Clone, Debug)]
pub struct Split {
    pub form: HomogeneousForm,
    pub vertical: Vec<Vector>,
    /// Linear part on the g-orthonormal vertical basis.
    pub b: Vec<f64>,
    pub fiber_weight: f64,
    /// `Some` in the separable case: the reduced form on the base.
    pub base_form: Option<HomogeneousForm>,
}

impl Split {
    /// `‖b‖ − ρ_W`; the point is critical iff this is `≤ 0`.
    pub fn critical_violation(&self) -> Option<f64> {
        self.base_form.as_ref()?;
        Some(self.b.iter().map(|x| x * x).sum::<f64>().sqrt() - self.fiber_weight)
    }
}

/// `min σ̄` over unit vertical vectors, by sampling and polish.
pub fn vertical_minimum(fam: &FormFamily, qbar: &Point, opts: &LegendreOptions) -> Result<f64> {
    let form = fam.form_at(qbar)?;
    let vertical = fam.fib.vertical_basis(qbar)?;
    if vertical.is_empty() {
        return Ok(f64::INFINITY);
    }
    let vform = form.with_domain(Cone::subspace(form.space(), &vertical)?)?;
    let (m, _) = max_excess(&vform, &Covector::zeros(qbar.dim()), opts)?;
    Ok(-m)
}

/// `q̄` is critical iff `σ̄ ≥ −tol` on unit vertical vectors.
pub fn critical_test_form(fam: &FormFamily, qbar: &Point, tol: f64) -> Result<bool> {
    Ok(vertical_minimum(fam, qbar, &LegendreOptions::default())? >= -tol)
}

/// `inf σ̄(lift δq + w)` over vertical `w`; `-inf` when unbounded below.
pub fn vertical_infimum(fam: &FormFamily, qbar: &Point, dq: &Vector, tol: f64) -> Result<f64> {
    check_dim(fam.fib.base_dim(), dq.dim())?;
    let split = fam.split(qbar)?;
    if let (Some(base), Some(v)) = (&split.base_form, split.critical_violation()) {
        if v > tol {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(base.value_raw(dq.as_slice()));
    }
    let vi = VerticalInfimumForm::new(fam, qbar, tol)?;
    Ok(vi.value_raw(dq.as_slice()))
}

/// The reduced form `δq ↦ inf σ̄` computed numerically by compass search
/// over vertical directions.
#[derive(Clone, Debug)]
pub struct VerticalInfimumForm {
    total: HomogeneousForm,
    vertical: Vec<Vector>,
    base_space: MetricSpace,
    base_cone: Cone,
    nb: usize,
    tol: f64,
}

impl VerticalInfimumForm {
    pub fn new(fam: &FormFamily, qbar: &Point, tol: f64) -> Result<Self> {
        let q = fam.fib.project(qbar);
        Ok(Self {
            total: fam.form_at(qbar)?,
            vertical: fam.fib.vertical_basis(qbar)?,
            base_space: fam.fib.base().space(),
            base_cone: fam.fib.base().tangent_cone(&q)?,
            nb: fam.fib.base_dim(),
            tol,
        })
    }
}

impl SublinearForm for VerticalInfimumForm {
    fn space(&self) -> &MetricSpace {
        &self.base_space
    }

    fn domain(&self) -> &Cone {
        &self.base_cone
    }

    fn value_raw(&self, v: &[f64]) -> f64 {
        let n = self.total.space().dim();
        let mut lift = vec![0.0; n];
        lift[..self.nb].copy_from_slice(v);
        let at = |c: &[f64]| {
            let mut x = lift.clone();
            for (cj, w) in c.iter().zip(&self.vertical) {
                for (xi, wi) in x.iter_mut().zip(w.as_slice()) {
                    *xi += cj * wi;
                }
            }
            let x = self.total.domain().project_raw(&x);
            self.total.value_raw(&x)
        };
        let scale = self.base_space.inner(v, v).sqrt().max(1.0);
        let floor = -scale / self.tol;
        let r = self.vertical.len();
        let mut c = vec![0.0; r];
        let mut best = at(&c);
        let mut step = scale;
        let mut evals = 0;
        while step > 1e-11 * scale && evals < 20_000 {
            let mut improved = false;
            for j in 0..r {
                for sgn in [1.0, -1.0] {
                    c[j] += sgn * step;
                    let val = at(&c);
                    evals += 1;
                    if val < best - 1e-15 * scale {
                        best = val;
                        improved = true;
                        break;
                    }
                    c[j] -= sgn * step;
                }
            }
            if best < floor {
                return f64::NEG_INFINITY;
            }
            if improved {
                step *= 2.0;
            } else {
                step *= 0.5;
            }
        }
        best
    }
}

/// A reduced form: exact when the family splits, numeric otherwise.
#[derive(Clone, Debug)]
pub enum ReducedForm {
    Canonical(HomogeneousForm),
    Numeric(VerticalInfimumForm),
}

impl ReducedForm {
    pub fn canonical(&self) -> Option<&HomogeneousForm> {
        match self {
            ReducedForm::Canonical(h) => Some(h),
            ReducedForm::Numeric(_) => None,
        }
    }

    fn inner(&self) -> &dyn SublinearForm {
        match self {
            ReducedForm::Canonical(h) => h,
            ReducedForm::Numeric(n) => n,
        }
    }
}

impl SublinearForm for ReducedForm {
    fn space(&self) -> &MetricSpace {
        self.inner().space()
    }

    fn domain(&self) -> &Cone {
        self.inner().domain()
    }

    fn value_raw(&self, v: &[f64]) -> f64 {
        self.inner().value_raw(v)
    }

    fn gradient_raw(&self, v: &[f64]) -> Vec<f64> {
        self.inner().gradient_raw(v)
    }

    fn kink_projectors(&self) -> Vec<DMatrix<f64>> {
        self.inner().kink_projectors()
    }
}

/// The reduced form at `q̄`; fails if `q̄` is not critical to `tol`.
pub fn reduced_form_at(fam: &FormFamily, qbar: &Point, tol: f64) -> Result<ReducedForm> {
    let split = fam.split(qbar)?;
    let cv = split.critical_violation();
    if let (Some(base), Some(v)) = (split.base_form, cv) {
        if v > tol {
            return Err(Error::NotCritical {
                point: qbar.to_vec(),
                defect: v,
            });
        }
        return Ok(ReducedForm::Canonical(base));
    }
    let vmin = vertical_minimum(fam, qbar, &LegendreOptions::default())?;
    if vmin < -tol {
        return Err(Error::NotCritical {
            point: qbar.to_vec(),
            defect: -vmin,
        });
    }
    Ok(ReducedForm::Numeric(VerticalInfimumForm::new(fam, qbar, tol)?))
}

/// The contribution `S_q̄` of a critical point, as a membership oracle over
/// base covectors.
#[derive(Clone, Debug)]
pub struct Contribution {
    qbar: Point,
    reduced: ReducedForm,
    tol: f64,
}

impl Contribution {
    pub fn critical_point(&self) -> &Point {
        &self.qbar
    }

    pub fn reduced(&self) -> &ReducedForm {
        &self.reduced
    }

    pub fn check(&self, f: &Covector) -> Result<Membership> {
        legendre_membership(&self.reduced, f, self.tol)
    }

    pub fn check_with(&self, f: &Covector, opts: &LegendreOptions) -> Result<Membership> {
        legendre_membership_with(&self.reduced, f, self.tol, opts)
    }

    /// A covector of the contribution: the linear part in the split case,
    /// otherwise a gradient of the reduced form (gradients of a sublinear
    /// function are subgradients at the origin).
    pub fn witness(&self) -> Covector {
        match &self.reduced {
            ReducedForm::Canonical(h) => h.linear_part().clone(),
            ReducedForm::Numeric(n) => {
                let dirs = n.domain().sample(16);
                let g = dirs
                    .first()
                    .map(|d| n.gradient_raw(d.as_slice()))
                    .unwrap_or_else(|| vec![0.0; n.space().dim()]);
                Covector::new(g)
            }
        }
    }
}

/// Contribution oracle at a critical `q̄`.
pub fn contribution(fam: &FormFamily, qbar: &Point, tol: f64) -> Result<Contribution> {
    Ok(Contribution {
        qbar: qbar.clone(),
        reduced: reduced_form_at(fam, qbar, tol)?,
        tol,
    })
}

/// Excess `max ⟨f, v⟩ − σ(v)` of a canonical form, in closed form when the
/// domain is a full space and every seminorm is a multiple of the metric
/// norm, and by coarse sampling otherwise.
pub(crate) fn fast_excess(form: &HomogeneousForm, f: &Covector) -> Result<f64> {
    let space = form.space();
    let full = form.domain().span_dim() == space.dim() && form.domain().is_linear();
    let mut weight = 0.0;
    let mut iso = full;
    for (sn, m) in form.seminorms().iter().zip(form.grams()) {
        if !iso || sn.weight == 0.0 {
            continue;
        }
        let lam = m.trace() / space.metric().trace();
        if (m - space.metric() * lam).amax() <= 1e-12 * m.amax().max(1e-300) {
            weight += sn.weight * lam.sqrt();
        } else {
            iso = false;
        }
    }
    if iso {
        let d: Vec<f64> = f
            .as_slice()
            .iter()
            .zip(form.linear_part().as_slice())
            .map(|(a, b)| a - b)
            .collect();
        return Ok(space.inner_dual(&d, &d).max(0.0).sqrt() - weight);
    }
    Ok(max_excess(form, f, &LegendreOptions::coarse())?.0)
}

/// Convenience: `g`-dual norm of a raw covector.
pub(crate) fn dual_norm(space: &MetricSpace, f: &[f64]) -> f64 {
    space.inner_dual(f, f).max(0.0).sqrt()
}
