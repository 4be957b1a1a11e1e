//! Convex hulls of finite point sets: membership and strong separation, both
//! driven by Wolfe's minimum-norm-point algorithm in the metric `g`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::euclid::{dot, Covector, MetricSpace, Vector};

/// The affine function `h(v) = ⟨h₁, v⟩ + h₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSeparator {
    pub normal: Covector,
    pub offset: f64,
}

impl AffineSeparator {
    pub fn eval(&self, v: &Vector) -> f64 {
        dot(self.normal.as_slice(), v.as_slice()) + self.offset
    }
}

/// Result of a minimum-norm-point run: the point and its convex weights over
/// atom identifiers.
struct MinNorm {
    point: Vec<f64>,
    weights: Vec<(usize, f64)>,
}

/// Wolfe's algorithm over an implicit atom set. `lmo(x)` must return the atom
/// minimizing `⟨g x, p⟩`.
fn min_norm_point(
    space: &MetricSpace,
    first: usize,
    atom: &dyn Fn(usize) -> Vec<f64>,
    lmo: &dyn Fn(&[f64]) -> usize,
) -> MinNorm {
    let mut ids = vec![first];
    let mut pts = vec![atom(first)];
    let mut lam = vec![1.0];
    let mut x = pts[0].clone();
    let mut radius2 = space.inner(&x, &x);
    for _ in 0..1000 {
        let j = lmo(&x);
        let p = atom(j);
        radius2 = radius2.max(space.inner(&p, &p));
        let gap = space.inner(&x, &x) - space.inner(&x, &p);
        if gap <= 1e-13 * radius2.max(1e-300) || ids.contains(&j) {
            break;
        }
        ids.push(j);
        pts.push(p);
        lam.push(0.0);
        for _ in 0..100 {
            let mu = affine_minimizer(space, &pts);
            if mu.iter().all(|&m| m > 1e-14) {
                lam = mu;
                break;
            }
            let mut theta = 1.0_f64;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= 1e-14 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l = theta * m + (1.0 - theta) * *l;
            }
            // drop the atom(s) whose weight hit zero
            let min_i = (0..lam.len()).min_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap();
            let mut keep: Vec<bool> = lam.iter().map(|&l| l > 1e-14).collect();
            keep[min_i] = false;
            let mut k = 0;
            ids.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            k = 0;
            pts.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            k = 0;
            lam.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            if pts.len() == 1 {
                lam = vec![1.0];
                break;
            }
        }
        x = combine(&pts, &lam);
    }
    MinNorm {
        point: x,
        weights: ids.into_iter().zip(lam).collect(),
    }
}

fn combine(pts: &[Vec<f64>], lam: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; pts[0].len()];
    for (p, l) in pts.iter().zip(lam) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += l * pi;
        }
    }
    x
}

/// Minimizer of `‖Σ μᵢ pᵢ‖` over the affine hull, from the KKT system
/// `[G 1; 1ᵀ 0] [μ; ν] = [0; 1]`.
fn affine_minimizer(space: &MetricSpace, pts: &[Vec<f64>]) -> Vec<f64> {
    let k = pts.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..=i {
            let gij = space.inner(&pts[i], &pts[j]);
            a[(i, j)] = gij;
            a[(j, i)] = gij;
        }
        a[(i, k)] = 1.0;
        a[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|x| x.is_finite()))
        .or_else(|| a.svd(true, true).solve(&rhs, 1e-14).ok())
        .unwrap_or_else(|| {
            let mut s = DVector::zeros(k + 1);
            s[0] = 1.0;
            s
        });
    sol.iter().take(k).copied().collect()
}

fn check_points(space: &MetricSpace, pts: &[Vector], what: &str) -> Result<()> {
    if pts.is_empty() {
        return Err(Error::Usage(format!("{what} must be nonempty")));
    }
    for p in pts {
        check_dim(space.dim(), p.dim())?;
    }
    Ok(())
}

/// g-distance from `x` to the convex hull of `points`.
pub fn hull_distance(space: &MetricSpace, points: &[Vector], x: &Vector) -> Result<f64> {
    check_points(space, points, "points")?;
    check_dim(space.dim(), x.dim())?;
    let xs = x.as_slice();
    let atom = |i: usize| -> Vec<f64> { points[i].as_slice().iter().zip(xs).map(|(p, q)| p - q).collect() };
    let lmo = |y: &[f64]| -> usize {
        (0..points.len())
            .min_by(|&a, &b| space.inner(y, &atom(a)).total_cmp(&space.inner(y, &atom(b))))
            .unwrap()
    };
    let first = lmo(&vec![0.0; xs.len()]).min(points.len() - 1);
    let r = min_norm_point(space, first, &atom, &lmo);
    Ok(space.inner(&r.point, &r.point).max(0.0).sqrt())
}

/// True iff `x` lies within `tol` of the convex hull of `points`.
pub fn hull_membership(space: &MetricSpace, points: &[Vector], x: &Vector, tol: f64) -> Result<bool> {
    Ok(hull_distance(space, points, x)? <= tol)
}

/// Strongly separates the hulls of `a` and `b` when their distance exceeds
/// `tol`: the returned `h` is at least `d/2` on `a` and at most `−d/2` on `b`.
/// Returns `None` when the hulls meet.
pub fn separate(space: &MetricSpace, a: &[Vector], b: &[Vector], tol: f64) -> Result<Option<AffineSeparator>> {
    check_points(space, a, "A")?;
    check_points(space, b, "B")?;
    let nb = b.len();
    let atom = |id: usize| -> Vec<f64> {
        let (i, j) = (id / nb, id % nb);
        a[i].as_slice()
            .iter()
            .zip(b[j].as_slice())
            .map(|(x, y)| x - y)
            .collect()
    };
    let lmo = |y: &[f64]| -> usize {
        let gy = space.metric() * DVector::from_column_slice(y);
        let score = |p: &Vector| dot(gy.as_slice(), p.as_slice());
        let i = (0..a.len())
            .min_by(|&p, &q| score(&a[p]).total_cmp(&score(&a[q])))
            .unwrap();
        let j = (0..nb).max_by(|&p, &q| score(&b[p]).total_cmp(&score(&b[q]))).unwrap();
        i * nb + j
    };
    let r = min_norm_point(space, 0, &atom, &lmo);
    let d = space.inner(&r.point, &r.point).max(0.0).sqrt();
    if d <= tol {
        return Ok(None);
    }
    let n = space.dim();
    let mut a_star = vec![0.0; n];
    let mut b_star = vec![0.0; n];
    for &(id, w) in &r.weights {
        let (i, j) = (id / nb, id % nb);
        for k in 0..n {
            a_star[k] += w * a[i].as_slice()[k];
            b_star[k] += w * b[j].as_slice()[k];
        }
    }
    let z = Vector::new(r.point.iter().map(|x| x / d).collect());
    let normal = space.flat(&z)?;
    let mid: Vec<f64> = a_star.iter().zip(&b_star).map(|(x, y)| 0.5 * (x + y)).collect();
    let offset = -dot(normal.as_slice(), &mid);
    Ok(Some(AffineSeparator { normal, offset }))
}
