//! Constraint cones of admissible virtual displacements.

use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::euclid::{euclidean_sphere, unit_sphere_samples, MetricSpace, Vector};

/// The shape of a [`Cone`].
#[derive(Clone, Debug)]
pub enum ConeKind {
    /// The whole vector space.
    Full,
    /// A linear subspace, stored by a g-orthonormal basis. An empty basis is
    /// the zero cone.
    Subspace { basis: Vec<Vector> },
    /// `{v : ⟨g k, v⟩ ≥ ρ √(‖v‖² − ⟨g k, v⟩²)}` with unit axis `k`.
    Soc { axis: Vector, slope: f64 },
    /// Cartesian product over a block-diagonal product space.
    Product { left: Box<Cone>, right: Box<Cone> },
}

/// A closed convex cone in a [`MetricSpace`].
#[derive(Clone, Debug)]
pub struct Cone {
    space: MetricSpace,
    kind: ConeKind,
}

impl Cone {
    pub fn full(space: &MetricSpace) -> Self {
        Self {
            space: space.clone(),
            kind: ConeKind::Full,
        }
    }

    /// Linear span of `spanning`. Dependent vectors are dropped.
    pub fn subspace(space: &MetricSpace, spanning: &[Vector]) -> Result<Self> {
        for v in spanning {
            check_dim(space.dim(), v.dim())?;
        }
        Ok(Self {
            space: space.clone(),
            kind: ConeKind::Subspace {
                basis: space.orthonormalize(spanning),
            },
        })
    }

    /// Second-order cone around `axis` (normalized here) with slope `ρ ≥ 0`.
    pub fn soc(space: &MetricSpace, axis: &Vector, slope: f64) -> Result<Self> {
        check_dim(space.dim(), axis.dim())?;
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "slope".into(),
                value: slope,
                reason: "must be finite and nonnegative".into(),
            });
        }
        let axis = space.normalize(axis).ok_or_else(|| Error::InvalidParameter {
            name: "axis".into(),
            value: 0.0,
            reason: "axis must be nonzero".into(),
        })?;
        Ok(Self {
            space: space.clone(),
            kind: ConeKind::Soc { axis, slope },
        })
    }

    pub fn product(left: Cone, right: Cone) -> Self {
        Self {
            space: left.space.product(&right.space),
            kind: ConeKind::Product {
                left: Box::new(left),
                right: Box::new(right),
            },
        }
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    /// Membership test. Full and Subspace compare the projection residual,
    /// SOC evaluates its inequality, Product is the conjunction.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        if v.dim() != self.dim() {
            return false;
        }
        self.contains_raw(v.as_slice(), tol)
    }

    pub(crate) fn contains_raw(&self, v: &[f64], tol: f64) -> bool {
        match &self.kind {
            ConeKind::Full => true,
            ConeKind::Subspace { .. } => self.violation_raw(v) <= tol,
            ConeKind::Soc { axis, slope } => {
                let (t, wn) = soc_frame(&self.space, axis.as_slice(), v);
                t >= slope * wn - tol
            }
            ConeKind::Product { left, right } => {
                let n = left.dim();
                left.contains_raw(&v[..n], tol) && right.contains_raw(&v[n..], tol)
            }
        }
    }

    /// g-distance from `v` to the cone.
    pub fn violation(&self, v: &Vector) -> Result<f64> {
        check_dim(self.dim(), v.dim())?;
        Ok(self.violation_raw(v.as_slice()))
    }

    pub(crate) fn violation_raw(&self, v: &[f64]) -> f64 {
        let p = self.project_raw(v);
        let r: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        self.space.inner(&r, &r).max(0.0).sqrt()
    }

    /// Metric projection onto the cone.
    pub fn project(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.dim(), v.dim())?;
        Ok(Vector::new(self.project_raw(v.as_slice())))
    }

    pub(crate) fn project_raw(&self, v: &[f64]) -> Vec<f64> {
        match &self.kind {
            ConeKind::Full => v.to_vec(),
            ConeKind::Subspace { basis } => {
                let mut out = vec![0.0; v.len()];
                for b in basis {
                    let c = self.space.inner(b.as_slice(), v);
                    for (o, bi) in out.iter_mut().zip(b.as_slice()) {
                        *o += c * bi;
                    }
                }
                out
            }
            ConeKind::Soc { axis, slope } => project_soc(&self.space, axis.as_slice(), *slope, v),
            ConeKind::Product { left, right } => {
                let n = left.dim();
                let mut out = left.project_raw(&v[..n]);
                out.extend(right.project_raw(&v[n..]));
                out
            }
        }
    }

    /// g-orthonormal basis when the cone is a linear subspace.
    pub fn linear_basis(&self) -> Option<Vec<Vector>> {
        match &self.kind {
            ConeKind::Full => {
                let e: Vec<Vector> = (0..self.dim())
                    .map(|i| {
                        let mut e = Vector::zeros(self.dim());
                        e.as_mut_slice()[i] = 1.0;
                        e
                    })
                    .collect();
                Some(self.space.orthonormalize(&e))
            }
            ConeKind::Subspace { basis } => Some(basis.clone()),
            ConeKind::Soc { .. } => None,
            ConeKind::Product { left, right } => {
                let (l, r) = (left.linear_basis()?, right.linear_basis()?);
                let (nl, nr) = (left.dim(), right.dim());
                let mut out: Vec<Vector> = l.iter().map(|b| b.concat(&Vector::zeros(nr))).collect();
                out.extend(r.iter().map(|b| Vector::zeros(nl).concat(b)));
                Some(out)
            }
        }
    }

    /// Dimension of the linear span of the cone.
    pub fn span_dim(&self) -> usize {
        match &self.kind {
            ConeKind::Full => self.dim(),
            ConeKind::Subspace { basis } => basis.len(),
            ConeKind::Soc { .. } => self.dim(),
            ConeKind::Product { left, right } => left.span_dim() + right.span_dim(),
        }
    }

    /// True when `v ∈ C` implies `−v ∈ C`.
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            ConeKind::Full | ConeKind::Subspace { .. } => true,
            ConeKind::Soc { .. } => false,
            ConeKind::Product { left, right } => left.is_linear() && right.is_linear(),
        }
    }

    /// Structural equality up to `tol` (subspaces are compared by span).
    pub fn equivalent(&self, other: &Cone, tol: f64) -> bool {
        if self.space != other.space {
            return false;
        }
        match (&self.kind, &other.kind) {
            (ConeKind::Full, ConeKind::Full) => true,
            (ConeKind::Soc { axis: a, slope: s }, ConeKind::Soc { axis: b, slope: t }) => {
                (s - t).abs() <= tol && (&a.clone() - b).max_abs() <= tol
            }
            (ConeKind::Product { left: a, right: b }, ConeKind::Product { left: c, right: d }) => {
                a.equivalent(c, tol) && b.equivalent(d, tol)
            }
            _ => match (self.linear_basis(), other.linear_basis()) {
                (Some(x), Some(y)) => {
                    x.len() == y.len()
                        && x.iter().all(|v| other.violation_raw(v.as_slice()) <= tol)
                        && y.iter().all(|v| self.violation_raw(v.as_slice()) <= tol)
                }
                _ => false,
            },
        }
    }

    /// Default number of sample directions for this cone.
    pub fn default_sample_count(&self) -> usize {
        default_count(self.span_dim())
    }

    /// Unit-norm members covering the unit cross-section of the cone. The zero
    /// cone yields an empty list.
    pub fn sample(&self, count: usize) -> Vec<Vector> {
        if count == 0 {
            return Vec::new();
        }
        match &self.kind {
            ConeKind::Full => unit_sphere_samples(&self.space, count.max(2))
                .into_iter()
                .take(if self.dim() == 1 { 2 } else { count })
                .collect(),
            ConeKind::Subspace { basis } => sample_span(basis, self.dim(), count),
            ConeKind::Soc { axis, slope } => sample_soc(&self.space, axis, *slope, count),
            ConeKind::Product { left, right } => {
                if let Some(basis) = self.linear_basis() {
                    return sample_span(&basis, self.dim(), count);
                }
                sample_product(left, right, count)
            }
        }
    }
}

pub(crate) fn default_count(intrinsic_dim: usize) -> usize {
    match intrinsic_dim {
        0 => 0,
        1 => 2,
        2 => 720,
        3 => 2048,
        _ => 4096,
    }
}

/// Sphere lattice of the span of a g-orthonormal basis.
pub(crate) fn sample_span(basis: &[Vector], dim: usize, count: usize) -> Vec<Vector> {
    let m = basis.len();
    if m == 0 {
        return Vec::new();
    }
    let lattice = euclidean_sphere(m, if m == 1 { 2 } else { count });
    lattice
        .chunks(m)
        .map(|c| {
            let mut v = vec![0.0; dim];
            for (cj, b) in c.iter().zip(basis) {
                for (o, bi) in v.iter_mut().zip(b.as_slice()) {
                    *o += cj * bi;
                }
            }
            Vector::new(v)
        })
        .collect()
}

/// `(t, ‖w‖)` with `t = ⟨g k, v⟩` and `w = v − t k`.
fn soc_frame(space: &MetricSpace, k: &[f64], v: &[f64]) -> (f64, f64) {
    let t = space.inner(k, v);
    let vv = space.inner(v, v);
    (t, (vv - t * t).max(0.0).sqrt())
}

fn project_soc(space: &MetricSpace, k: &[f64], slope: f64, v: &[f64]) -> Vec<f64> {
    let t = space.inner(k, v);
    if slope == 0.0 {
        if t >= 0.0 {
            return v.to_vec();
        }
        return v.iter().zip(k).map(|(vi, ki)| vi - t * ki).collect();
    }
    let w: Vec<f64> = v.iter().zip(k).map(|(vi, ki)| vi - t * ki).collect();
    let wn = space.inner(&w, &w).max(0.0).sqrt();
    let s = 1.0 / slope;
    if wn <= s * t {
        return v.to_vec();
    }
    if s * wn <= -t {
        return vec![0.0; v.len()];
    }
    let c = (t + s * wn) / (1.0 + s * s);
    k.iter().zip(&w).map(|(ki, wi)| c * (ki + s * wi / wn)).collect()
}

fn sample_soc(space: &MetricSpace, axis: &Vector, slope: f64, count: usize) -> Vec<Vector> {
    let d = space.dim();
    let k = axis.as_slice();
    let alpha = (1.0 / slope).atan();
    if d == 1 {
        return vec![axis.clone()];
    }
    let comp = space.orthogonal_complement(std::slice::from_ref(axis));
    let at = |z: f64, dir: &[f64]| -> Vector {
        let r = (1.0 - z * z).max(0.0).sqrt();
        let mut v: Vec<f64> = k.iter().map(|x| z * x).collect();
        for (cj, e) in dir.iter().zip(&comp) {
            for (o, ei) in v.iter_mut().zip(e.as_slice()) {
                *o += r * cj * ei;
            }
        }
        Vector::new(v)
    };
    match d {
        2 => {
            let n = count.max(2);
            (0..n)
                .map(|i| {
                    let a = -alpha + 2.0 * alpha * i as f64 / (n - 1) as f64;
                    at(a.cos(), &[a.signum()])
                })
                .collect()
        }
        3 => {
            // Cap lattice from the axis to the rim, plus an explicit rim ring
            // since linear functionals peak on the boundary.
            let ring = (count / 8).max(16);
            let inner = count.saturating_sub(ring).max(1);
            let zmin = alpha.cos();
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            let mut out: Vec<Vector> = (0..inner)
                .map(|i| {
                    let z = if inner == 1 {
                        1.0
                    } else {
                        1.0 - (1.0 - zmin) * i as f64 / (inner - 1) as f64
                    };
                    let phi = golden * i as f64;
                    at(z, &[phi.cos(), phi.sin()])
                })
                .collect();
            out.extend((0..ring).map(|i| {
                let phi = 2.0 * PI * i as f64 / ring as f64;
                at(zmin, &[phi.cos(), phi.sin()])
            }));
            out
        }
        _ => {
            let dirs = euclidean_sphere(d - 1, count);
            let mut out = vec![axis.clone()];
            for (i, c) in dirs.chunks(d - 1).enumerate() {
                if out.len() >= count {
                    break;
                }
                let z = if i % 2 == 0 {
                    alpha.cos()
                } else {
                    // interior points at a spread of polar angles
                    let frac = ((i / 2) as f64 * 0.618_033_988_75).fract();
                    (alpha * frac).cos()
                };
                out.push(at(z, c));
            }
            out
        }
    }
}

fn sample_product(left: &Cone, right: &Cone, count: usize) -> Vec<Vector> {
    let per = ((count as f64).sqrt().ceil() as usize).max(2);
    let ls = left.sample(per);
    let rs = right.sample(per);
    let (nl, nr) = (left.dim(), right.dim());
    let mut out: Vec<Vector> = ls.iter().map(|l| l.concat(&Vector::zeros(nr))).collect();
    out.extend(rs.iter().map(|r| Vector::zeros(nl).concat(r)));
    let angles = [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
    'outer: for l in &ls {
        for r in &rs {
            for a in angles {
                if out.len() >= count {
                    break 'outer;
                }
                out.push((l * a.cos()).concat(&(r * a.sin())));
            }
        }
    }
    out
}
