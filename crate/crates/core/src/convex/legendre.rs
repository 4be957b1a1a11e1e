//! The Legendre transform of a sublinear form, used as a membership oracle.
//!
//! For `σ` on a cone `C`, `f` belongs to the transform iff
//! `m* = max_{v ∈ C, ‖v‖ = 1} ⟨f, v⟩ − σ(v)` is nonpositive. `m*` is found by
//! dense sampling of the unit cross-section followed by projected ascent.

use nalgebra::DMatrix;

use super::cone::{default_count, sample_span, Cone};
use super::form::SublinearForm;
use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, Covector, MetricSpace, Vector};

pub const DEFAULT_TOL: f64 = 1e-6;

/// Outcome of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Member,
    NonMember,
    Boundary,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Member => "Member",
            Verdict::NonMember => "NonMember",
            Verdict::Boundary => "Boundary",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A verdict together with its signed margin. Positive margins are slack
/// inside the set; negative margins measure the violation.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub verdict: Verdict,
    pub margin: f64,
    /// Direction attaining the worst-case virtual work excess, if any.
    pub witness: Option<Vector>,
}

impl Membership {
    pub fn new(verdict: Verdict, margin: f64) -> Self {
        Self {
            verdict,
            margin,
            witness: None,
        }
    }

    /// True for `Member` and `Boundary`: the set is closed.
    pub fn is_in_set(&self) -> bool {
        self.verdict != Verdict::NonMember
    }
}

/// Sampling and polish settings for [`legendre_membership_with`].
#[derive(Clone, Debug)]
pub struct LegendreOptions {
    /// Directions sampled on the cone's cross-section; `None` picks by
    /// dimension (720 in 2D, 2048 in 3D, 4096 above).
    pub samples: Option<usize>,
    pub polish_iters: usize,
    /// Number of best samples that get polished.
    pub seeds: usize,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            samples: None,
            polish_iters: 50,
            seeds: 4,
        }
    }
}

impl LegendreOptions {
    /// Cheap settings for inner loops.
    pub fn coarse() -> Self {
        Self {
            samples: Some(256),
            polish_iters: 30,
            seeds: 2,
        }
    }
}

/// Decides whether `f` lies in the Legendre transform of `form`.
pub fn legendre_membership(form: &dyn SublinearForm, f: &Covector, tol: f64) -> Result<Membership> {
    legendre_membership_with(form, f, tol, &LegendreOptions::default())
}

pub fn legendre_membership_with(
    form: &dyn SublinearForm,
    f: &Covector,
    tol: f64,
    opts: &LegendreOptions,
) -> Result<Membership> {
    let (m, v) = max_excess(form, f, opts)?;
    let fs = f.as_slice();
    let verdict = if m > tol {
        Verdict::NonMember
    } else if m < -tol {
        Verdict::Member
    } else {
        // m* ≈ 0: f is in the relative interior only if the excess also
        // vanishes on the opposite ray.
        let neg: Vec<f64> = v.as_slice().iter().map(|x| -x).collect();
        let inside = form.domain().contains_raw(&neg, 1e-9) && dot(fs, &neg) - form.value_raw(&neg) >= -tol;
        if inside {
            Verdict::Member
        } else {
            Verdict::Boundary
        }
    };
    Ok(Membership {
        verdict,
        margin: -m,
        witness: Some(v),
    })
}

/// `m* = max ⟨f, v⟩ − σ(v)` over unit `v` in the domain, with its argmax.
pub fn max_excess(form: &dyn SublinearForm, f: &Covector, opts: &LegendreOptions) -> Result<(f64, Vector)> {
    let space = form.space();
    check_dim(space.dim(), f.dim())?;
    let fs = f.as_slice();
    let phi = |v: &[f64]| dot(fs, v) - form.value_raw(v);
    let grad = |v: &[f64]| -> Vec<f64> { form.gradient_raw(v).iter().zip(fs).map(|(g, fi)| fi - g).collect() };
    let strata = search_strata(form, opts.samples);
    if strata.iter().all(|s| s.samples.is_empty()) {
        return Err(Error::Usage("empty effective domain: the cone is {0}".into()));
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for stratum in &strata {
        let mut scored: Vec<(f64, usize)> = stratum
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| (phi(v.as_slice()), i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let seeds = if stratum.basis.is_some() { 1 } else { opts.seeds.max(1) };
        for &(val, i) in scored.iter().take(seeds) {
            let start = stratum.samples[i].as_slice().to_vec();
            if val == f64::INFINITY {
                return Ok((f64::INFINITY, Vector::new(start)));
            }
            let (pv, pvec) = sphere_ascent(
                space,
                form.domain(),
                stratum.basis.as_deref(),
                start,
                val,
                opts.polish_iters,
                &phi,
                &grad,
            );
            if pv > best.0 {
                best = (pv, pvec);
            }
        }
    }
    Ok((best.0, Vector::new(best.1)))
}

/// Largest `λ` with `λ d` in the transform of `form` (assuming it contains
/// 0): `min σ(v) / ⟨d, v⟩` over the domain. `+inf` when no direction of the
/// domain pairs positively with `d`.
pub fn legendre_boundary_along(form: &dyn SublinearForm, d: &Covector, opts: &LegendreOptions) -> Result<f64> {
    let space = form.space();
    check_dim(space.dim(), d.dim())?;
    let ds = d.as_slice();
    let neg_ratio = |v: &[f64]| {
        let p = dot(ds, v);
        if p <= 1e-12 {
            f64::NEG_INFINITY
        } else {
            -form.value_raw(v) / p
        }
    };
    let grad = |v: &[f64]| -> Vec<f64> {
        let p = dot(ds, v);
        let r = form.value_raw(v) / p;
        form.gradient_raw(v)
            .iter()
            .zip(ds)
            .map(|(g, di)| -(g - r * di) / p)
            .collect()
    };
    let strata = search_strata(form, opts.samples);
    let mut best = f64::NEG_INFINITY;
    for stratum in &strata {
        let mut scored: Vec<(f64, usize)> = stratum
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| (neg_ratio(v.as_slice()), i))
            .filter(|(x, _)| x.is_finite())
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(val, i) in scored.iter().take(opts.seeds.max(1)) {
            let (pv, _) = sphere_ascent(
                space,
                form.domain(),
                stratum.basis.as_deref(),
                stratum.samples[i].to_vec(),
                val,
                opts.polish_iters,
                &neg_ratio,
                &grad,
            );
            best = best.max(pv);
        }
    }
    Ok(if best == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        -best
    })
}

/// A family of sample directions; `basis` is set for proper sub-strata so
/// that polishing stays inside them.
struct Stratum {
    samples: Vec<Vector>,
    basis: Option<Vec<Vector>>,
}

/// The cone's cross-section plus, for linear cones, the intersections with
/// the kernels of the form's kinks. Maxima of the excess often sit exactly
/// on such kernels, where random directions never land.
fn search_strata(form: &dyn SublinearForm, samples: Option<usize>) -> Vec<Stratum> {
    let cone = form.domain();
    let count = |dim: usize| {
        samples
            .map(|s| s.min(default_count(dim)).max(2))
            .unwrap_or(default_count(dim))
    };
    let mut out = vec![Stratum {
        samples: cone.sample(count(cone.span_dim())),
        basis: None,
    }];
    let Some(basis) = cone.linear_basis() else {
        return out;
    };
    let kinks = form.kink_projectors();
    if kinks.is_empty() || kinks.len() > 6 || basis.is_empty() {
        return out;
    }
    let n = cone.dim();
    let m = basis.len();
    let b = DMatrix::from_fn(n, m, |i, j| basis[j].as_slice()[i]);
    let mut seen: Vec<DMatrix<f64>> = Vec::new();
    for mask in 1usize..(1 << kinks.len()) {
        let stacked: Vec<DMatrix<f64>> = kinks
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| p * &b)
            .collect();
        let rows: usize = stacked.iter().map(|s| s.nrows()).sum();
        let mut a = DMatrix::zeros(rows, m);
        let mut r0 = 0;
        for s in &stacked {
            a.view_mut((r0, 0), (s.nrows(), m)).copy_from(s);
            r0 += s.nrows();
        }
        let null = nullspace(&a);
        if null.ncols() == 0 || null.ncols() == m {
            continue;
        }
        let sub = &b * &null;
        // g-orthonormal already (B is g-orthonormal, null is orthonormal)
        let proj = &sub * sub.transpose();
        if seen.iter().any(|p| (p - &proj).amax() < 1e-9) {
            continue;
        }
        seen.push(proj);
        let sbasis: Vec<Vector> = (0..sub.ncols())
            .map(|j| Vector::from_slice(sub.column(j).as_slice()))
            .collect();
        out.push(Stratum {
            samples: sample_span(&sbasis, n, count(sbasis.len())),
            basis: Some(sbasis),
        });
    }
    out
}

/// Orthonormal basis (columns) of the nullspace of `a`.
fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.ncols();
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let cols: Vec<usize> = (0..m)
        .filter(|&j| eig.eigenvalues[j] <= 1e-20 * scale.max(1.0))
        .collect();
    DMatrix::from_fn(m, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])])
}

/// Projected ascent on the unit sphere of `cone` (or of the subspace spanned
/// by `stratum`), with multiplicative step adaptation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sphere_ascent(
    space: &MetricSpace,
    cone: &Cone,
    stratum: Option<&[Vector]>,
    start: Vec<f64>,
    start_val: f64,
    iters: usize,
    obj: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
) -> (f64, Vec<f64>) {
    let mut v = start;
    let mut val = start_val;
    let mut step = 0.1;
    let ginv = space.inverse_metric();
    for _ in 0..iters {
        let g = grad(&v);
        if g.iter().any(|x| !x.is_finite()) {
            break;
        }
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (ginv * gv).iter().copied().collect();
        if let Some(basis) = stratum {
            let mut p = vec![0.0; d.len()];
            for b in basis {
                let c = space.inner(b.as_slice(), &d);
                for (pi, bi) in p.iter_mut().zip(b.as_slice()) {
                    *pi += c * bi;
                }
            }
            d = p;
        }
        let radial = space.inner(&v, &d);
        for (di, vi) in d.iter_mut().zip(&v) {
            *di -= radial * vi;
        }
        let dn = space.inner(&d, &d).max(0.0).sqrt();
        if dn < 1e-15 {
            break;
        }
        let mut cand: Vec<f64> = v.iter().zip(&d).map(|(vi, di)| vi + step * di / dn).collect();
        if stratum.is_none() {
            cand = cone.project_raw(&cand);
        }
        let cn = space.inner(&cand, &cand).max(0.0).sqrt();
        if cn < 1e-12 {
            step *= 0.5;
            continue;
        }
        cand.iter_mut().for_each(|x| *x /= cn);
        let cv = obj(&cand);
        if cv > val {
            v = cand;
            val = cv;
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    (val, v)
}
