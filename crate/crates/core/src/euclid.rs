//! Finite-dimensional Euclidean model: a vector space with an explicit metric
//! tensor `g : V -> V*`, its dual, and the affine space of configurations.
//!
//! Displacements ([`Vector`]) and forces ([`Covector`]) are kept as distinct
//! types. The only ways to move between them are [`MetricSpace::flat`] and
//! [`MetricSpace::sharp`].

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

/// Seed used by every sampler in the crate. Fixed so acceptance runs are
/// reproducible.
pub const SAMPLING_SEED: u64 = 0x5eed_c0de_2024_0001;

const SYMMETRY_TOL: f64 = 1e-12;

macro_rules! component_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq)]
        pub struct $name(DVector<f64>);

        impl $name {
            pub fn new(components: Vec<f64>) -> Self {
                Self(DVector::from_vec(components))
            }

            pub fn from_slice(components: &[f64]) -> Self {
                Self(DVector::from_column_slice(components))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                self.0.as_mut_slice()
            }

            pub fn to_vec(&self) -> Vec<f64> {
                self.0.as_slice().to_vec()
            }

            pub fn raw(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_raw(self) -> DVector<f64> {
                self.0
            }

            pub fn from_raw(raw: DVector<f64>) -> Self {
                Self(raw)
            }

            /// Euclidean (coordinate) max-norm; metric-free, used for tolerances.
            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            }

            pub fn concat(&self, other: &Self) -> Self {
                let mut c = self.to_vec();
                c.extend_from_slice(other.as_slice());
                Self::new(c)
            }

            /// Components `[start, start + len)`.
            pub fn block(&self, start: usize, len: usize) -> Self {
                Self::from_slice(&self.as_slice()[start..start + len])
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{:?}", stringify!($name), self.as_slice())
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(&self.0 + &rhs.0)
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name(&self.0 - &rhs.0)
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(&self.0 * rhs)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-&self.0)
            }
        }
    };
}

component_type!(
    /// A virtual displacement or direction, an element of `V`.
    Vector
);
component_type!(
    /// A force or torque, an element of the dual space `V*`.
    Covector
);
component_type!(
    /// A configuration in the affine space modelled on `V`.
    Point
);

impl Point {
    /// Displacement `self - origin`.
    pub fn displacement_from(&self, origin: &Point) -> Vector {
        Vector(&self.0 - &origin.0)
    }

    pub fn translate(&self, v: &Vector) -> Point {
        Point(&self.0 + &v.0)
    }
}

struct MetricInner {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

/// A finite-dimensional vector space with a symmetric positive-definite
/// metric tensor. Cloning is cheap.
#[derive(Clone)]
pub struct MetricSpace(Arc<MetricInner>);

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace")
            .field("dim", &self.dim())
            .field("g", &self.0.g.as_slice())
            .finish()
    }
}

impl PartialEq for MetricSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.g == other.0.g
    }
}

impl MetricSpace {
    /// Builds a space from its metric tensor, which must be symmetric to
    /// within 1e-12 componentwise and positive definite.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(Error::InvalidMetric(format!(
                "metric must be a non-empty square matrix, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidMetric(format!("not symmetric at ({i},{j})")));
                }
            }
        }
        let sym = (&g + g.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("not positive definite".into()))?;
        let g_inv = chol.inverse();
        let eig = sym.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidMetric("not positive definite".into()));
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let inv_sqrt = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        Ok(Self(Arc::new(MetricInner {
            g: sym,
            g_inv,
            inv_sqrt,
        })))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Block-diagonal metric on `self ⊕ other`.
    pub fn product(&self, other: &MetricSpace) -> MetricSpace {
        let (n, m) = (self.dim(), other.dim());
        let blocks = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(n + m, n + m);
            out.view_mut((0, 0), (n, n)).copy_from(a);
            out.view_mut((n, n), (m, m)).copy_from(b);
            out
        };
        MetricSpace(Arc::new(MetricInner {
            g: blocks(&self.0.g, &other.0.g),
            g_inv: blocks(&self.0.g_inv, &other.0.g_inv),
            inv_sqrt: blocks(&self.0.inv_sqrt, &other.0.inv_sqrt),
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.g.nrows()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.0.g
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.0.g_inv
    }

    /// `g^{-1/2}`: maps Euclidean unit vectors to g-unit vectors.
    pub fn inverse_sqrt(&self) -> &DMatrix<f64> {
        &self.0.inv_sqrt
    }

    /// `g·v`.
    pub fn flat(&self, v: &Vector) -> Result<Covector> {
        check_dim(self.dim(), v.dim())?;
        Ok(Covector(&self.0.g * &v.0))
    }

    /// `g⁻¹·f`.
    pub fn sharp(&self, f: &Covector) -> Result<Vector> {
        check_dim(self.dim(), f.dim())?;
        Ok(Vector(&self.0.g_inv * &f.0))
    }

    pub fn norm_vec(&self, v: &Vector) -> Result<f64> {
        check_dim(self.dim(), v.dim())?;
        Ok(self.inner(v.as_slice(), v.as_slice()).max(0.0).sqrt())
    }

    /// Dual norm `√⟨f, g⁻¹f⟩`.
    pub fn norm_cov(&self, f: &Covector) -> Result<f64> {
        check_dim(self.dim(), f.dim())?;
        Ok(self.inner_dual(f.as_slice(), f.as_slice()).max(0.0).sqrt())
    }

    /// `⟨g u, v⟩` on raw components. No dimension checks.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        quad(&self.0.g, u, v)
    }

    /// `⟨f, g⁻¹ h⟩` on raw components. No dimension checks.
    pub fn inner_dual(&self, f: &[f64], h: &[f64]) -> f64 {
        quad(&self.0.g_inv, f, h)
    }

    /// Rescales `v` to unit g-norm; `None` for (numerically) zero vectors.
    pub fn normalize(&self, v: &Vector) -> Option<Vector> {
        let n = self.inner(v.as_slice(), v.as_slice()).sqrt();
        (n > 1e-300 && n.is_finite()).then(|| v * (1.0 / n))
    }

    /// g-orthonormal basis of the span of `vectors` (modified Gram–Schmidt,
    /// dropping dependent directions).
    pub fn orthonormalize(&self, vectors: &[Vector]) -> Vec<Vector> {
        let mut basis: Vec<Vector> = Vec::new();
        let scale = vectors
            .iter()
            .map(|v| self.inner(v.as_slice(), v.as_slice()).sqrt())
            .fold(0.0_f64, f64::max);
        for v in vectors {
            let mut w = v.clone();
            // Two passes keep the basis orthogonal to machine precision.
            for _ in 0..2 {
                for b in &basis {
                    let c = self.inner(b.as_slice(), w.as_slice());
                    for (x, y) in w.as_mut_slice().iter_mut().zip(b.as_slice()) {
                        *x -= c * y;
                    }
                }
            }
            let n = self.inner(w.as_slice(), w.as_slice()).sqrt();
            if n > 1e-10 * scale.max(1e-300) {
                w.as_mut_slice().iter_mut().for_each(|x| *x /= n);
                basis.push(w);
            }
        }
        basis
    }

    /// g-orthonormal basis of the g-orthogonal complement of `vectors`.
    pub fn orthogonal_complement(&self, vectors: &[Vector]) -> Vec<Vector> {
        let span = self.orthonormalize(vectors);
        let mut all = span.clone();
        for i in 0..self.dim() {
            let mut e = Vector::zeros(self.dim());
            e.as_mut_slice()[i] = 1.0;
            all.push(e);
        }
        self.orthonormalize(&all).split_off(span.len())
    }
}

/// `uᵀ M v` for square `M`.
pub(crate) fn quad(m: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for j in 0..n {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        let col = &m.as_slice()[j * n..(j + 1) * n];
        let mut c = 0.0;
        for i in 0..n {
            c += u[i] * col[i];
        }
        s += c * vj;
    }
    s
}

/// Evaluates `⟨f, v⟩ = Σ fᵢ vᵢ`.
pub fn pair(f: &Covector, v: &Vector) -> Result<f64> {
    check_dim(f.dim(), v.dim())?;
    Ok(dot(f.as_slice(), v.as_slice()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `count` vectors of unit g-norm covering the unit sphere of `space`.
///
/// In dimension 2 the angles are uniformly spaced, in dimension 3 a Fibonacci
/// lattice is mapped through `g^{-1/2}`, and in higher dimensions normalized
/// Gaussian draws seeded with [`SAMPLING_SEED`] are used. In dimension 1 the
/// two unit vectors alternate.
pub fn unit_sphere_samples(space: &MetricSpace, count: usize) -> Vec<Vector> {
    let d = space.dim();
    let lattice = euclidean_sphere(d, count);
    let map = space.inverse_sqrt();
    (0..count)
        .map(|i| {
            let row = i % (lattice.len() / d);
            let u = DVector::from_column_slice(&lattice[row * d..(row + 1) * d]);
            Vector(map * u)
        })
        .collect()
}

type LatticeCache = Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>;

/// Euclidean unit vectors in `ℝ^d`, flattened row-major. Dimension 1 always
/// yields exactly the two points `±1`.
pub(crate) fn euclidean_sphere(d: usize, count: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<LatticeCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(d, count)) {
        return hit.clone();
    }
    let points = Arc::new(build_sphere(d, count.max(1)));
    cache.lock().unwrap().insert((d, count), points.clone());
    points
}

fn build_sphere(d: usize, count: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match d {
        0 => Vec::new(),
        1 => vec![1.0, -1.0],
        2 => (0..count)
            .flat_map(|i| {
                let t = 2.0 * PI * i as f64 / count as f64;
                [t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .flat_map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    [r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED ^ d as u64);
            let mut out = Vec::with_capacity(count * d);
            while out.len() < count * d {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-9 {
                    out.extend(g.iter().map(|x| x / n));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> MetricSpace {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        MetricSpace::new(g).unwrap()
    }

    #[test]
    fn pair_examples() {
        let f = Covector::new(vec![1.0, 0.0, 0.0]);
        let v = Vector::new(vec![0.0, 1.0, 0.0]);
        assert_eq!(pair(&f, &v).unwrap(), 0.0);
        let f = Covector::new(vec![2.0, 3.0]);
        let v = Vector::new(vec![1.0, 1.0]);
        assert_eq!(pair(&f, &v).unwrap(), 5.0);
        let space = MetricSpace::identity(3);
        let k = Vector::new(vec![0.0, 0.6, 0.8]);
        assert_relative_eq!(pair(&space.flat(&k).unwrap(), &k).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            pair(&Covector::zeros(2), &Vector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn flat_and_sharp() {
        let id = MetricSpace::identity(2);
        assert_eq!(id.flat(&Vector::new(vec![1.0, 2.0])).unwrap().to_vec(), vec![1.0, 2.0]);
        assert_eq!(
            id.sharp(&Covector::new(vec![3.0, 4.0])).unwrap().to_vec(),
            vec![3.0, 4.0]
        );
        let d = MetricSpace::diagonal(&[2.0, 1.0]).unwrap();
        assert_eq!(d.flat(&Vector::new(vec![1.0, 1.0])).unwrap().to_vec(), vec![2.0, 1.0]);
        let s = d.sharp(&Covector::new(vec![2.0, 1.0])).unwrap();
        assert_relative_eq!(s.as_slice()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.as_slice()[1], 1.0, max_relative = 1e-15);
        assert!(d.flat(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn sharp_matches_independent_cholesky_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let space = random_spd(&mut rng, 4);
            let f = Covector::new((0..4).map(|_| rng.random_range(-2.0..2.0)).collect());
            // Oracle: solve g x = f with a fresh LU factorization.
            let x = space.metric().clone().lu().solve(f.raw()).unwrap();
            let v = space.sharp(&f).unwrap();
            for (a, b) in v.as_slice().iter().zip(x.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-10);
            }
            let nf = space.norm_cov(&f).unwrap();
            assert_relative_eq!(pair(&f, &v).unwrap(), nf * nf, max_relative = 1e-10);
            let back = space.flat(&v).unwrap();
            for (a, b) in back.as_slice().iter().zip(f.as_slice()) {
                assert_relative_eq!(a, b, epsilon = 1e-12 * f.max_abs(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn norms() {
        let id = MetricSpace::identity(2);
        assert_eq!(id.norm_vec(&Vector::new(vec![3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(id.norm_vec(&Vector::zeros(2)).unwrap(), 0.0);
        let d = MetricSpace::diagonal(&[4.0, 1.0]).unwrap();
        assert_relative_eq!(d.norm_vec(&Vector::new(vec![1.0, 0.0])).unwrap(), 2.0);
        assert_relative_eq!(d.norm_cov(&Covector::new(vec![2.0, 0.0])).unwrap(), 1.0);
        let id3 = MetricSpace::identity(3);
        assert_eq!(id3.norm_cov(&Covector::new(vec![0.0, 0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_metrics() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(MetricSpace::new(asym), Err(Error::InvalidMetric(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(MetricSpace::new(indefinite).is_err());
        assert!(MetricSpace::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn metric_is_positive_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let space = random_spd(&mut rng, 3);
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(space.inner(&v, &v) > 0.0);
        }
    }

    #[test]
    fn sphere_samples_in_two_dimensions() {
        let s = unit_sphere_samples(&MetricSpace::identity(2), 4);
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (v, e) in s.iter().zip(expect) {
            assert_relative_eq!(v.as_slice()[0], e[0], epsilon = 1e-15);
            assert_relative_eq!(v.as_slice()[1], e[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=5 {
            let space = random_spd(&mut rng, d);
            let s = unit_sphere_samples(&space, 300);
            assert_eq!(s.len(), 300);
            for v in &s {
                assert_relative_eq!(space.norm_vec(v).unwrap(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fibonacci_lattice_has_no_large_gaps() {
        let s = unit_sphere_samples(&MetricSpace::identity(3), 2048);
        // Exhaustive nearest-neighbour angle.
        let mut worst: f64 = 0.0;
        for (i, a) in s.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, b) in s.iter().enumerate() {
                if i != j {
                    let c = dot(a.as_slice(), b.as_slice()).clamp(-1.0, 1.0);
                    best = best.min(c.acos());
                }
            }
            worst = worst.max(best);
        }
        assert!(worst.to_degrees() < 8.0, "gap {}", worst.to_degrees());
    }

    #[test]
    fn schwarz_inequality_and_equality_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let space = random_spd(&mut rng, 3);
        for _ in 0..1000 {
            let f = Covector::new((0..3).map(|_| rng.random_range(-3.0..3.0)).collect());
            let v = Vector::new((0..3).map(|_| rng.random_range(-3.0..3.0)).collect());
            let lhs = pair(&f, &v).unwrap().abs();
            let rhs = space.norm_cov(&f).unwrap() * space.norm_vec(&v).unwrap();
            assert!(lhs <= rhs + 1e-10);
            let par = &space.sharp(&f).unwrap() * rng.random_range(0.1..2.0);
            let lhs = pair(&f, &par).unwrap().abs();
            let rhs = space.norm_cov(&f).unwrap() * space.norm_vec(&par).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn orthogonal_complement_is_orthonormal() {
        let space = MetricSpace::diagonal(&[2.0, 1.0, 3.0]).unwrap();
        let v = Vector::new(vec![1.0, 1.0, 0.0]);
        let comp = space.orthogonal_complement(std::slice::from_ref(&v));
        assert_eq!(comp.len(), 2);
        for c in &comp {
            assert!(space.inner(c.as_slice(), v.as_slice()).abs() < 1e-12);
            assert_relative_eq!(space.norm_vec(c).unwrap(), 1.0, epsilon = 1e-12);
        }
    }
}
