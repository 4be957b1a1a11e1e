use constat_core::convex::legendre_boundary_along;
use constat_core::examples::{build, Built, ExampleSpec, Params};
use constat_core::{
    constitutive_membership, legendre_membership, Cone, Covector, ForcePoint, HomogeneousForm, LegendreOptions,
    MetricSpace, Point, Seminorm, SublinearForm, Vector, Verdict,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spd(entries: &[f64]) -> MetricSpace {
    let a = DMatrix::from_row_slice(3, 3, entries);
    MetricSpace::new(a.transpose() * &a + DMatrix::identity(3, 3) * 0.5).unwrap()
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 3)
}

fn matrix() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn schwarz(m in matrix(), f in vec3(), v in vec3()) {
        let s = spd(&m);
        let (f, v) = (Covector::new(f), Vector::new(v));
        let lhs = constat_core::pair(&f, &v).unwrap().abs();
        let rhs = s.norm_cov(&f).unwrap() * s.norm_vec(&v).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn generalized_schwarz(m in matrix(), u in vec3(), v in vec3(), k in vec3()) {
        // |B(u, v)| ≤ √B(u, u) √B(v, v) for B(u, v) = ⟨g u, v⟩ − ⟨g k, u⟩⟨g k, v⟩
        let s = spd(&m);
        let Some(k) = s.normalize(&Vector::new(k)) else { return Ok(()) };
        let gk = k.as_slice();
        let b = |x: &[f64], y: &[f64]| s.inner(x, y) - s.inner(gk, x) * s.inner(gk, y);
        let lhs = b(&u, &v).abs();
        let rhs = b(&u, &u).max(0.0).sqrt() * b(&v, &v).max(0.0).sqrt();
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + s.inner(&u, &u)) * (1.0 + s.inner(&v, &v)));
    }

    #[test]
    fn flat_and_sharp_are_inverse(m in matrix(), v in vec3()) {
        let s = spd(&m);
        let v = Vector::new(v);
        let back = s.sharp(&s.flat(&v).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * 10.0);
        }
    }
}

fn random_form(m: &[f64], linear: &[f64], weight: f64, soc: Option<(Vec<f64>, f64)>) -> HomogeneousForm {
    let s = spd(m);
    let cone = match soc {
        Some((axis, slope)) if axis.iter().any(|x| x.abs() > 0.1) => Cone::soc(&s, &Vector::new(axis), slope).unwrap(),
        _ => Cone::full(&s),
    };
    HomogeneousForm::new(&s, Covector::from_slice(linear), vec![Seminorm::full(3, weight)], cone).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn legendre_transform_is_convex(
        m in matrix(),
        linear in vec3(),
        weight in 0.2..2.0f64,
        soc in prop::option::of((vec3(), 0.0..2.0f64)),
        d1 in vec3(),
        d2 in vec3(),
        s1 in 0.0..0.95f64,
        s2 in 0.0..0.95f64,
    ) {
        let form = random_form(&m, &linear, weight, soc);
        let centered = HomogeneousForm::new(form.space(), Covector::zeros(3), form.seminorms().to_vec(), form.domain().clone()).unwrap();
        let opts = LegendreOptions::default();
        // transform(a + σ₀) = a + transform(σ₀), and transform(σ₀) contains 0
        let member = |d: &[f64], s: f64| {
            let d = Covector::from_slice(d);
            let reach = legendre_boundary_along(&centered, &d, &opts).unwrap().min(5.0);
            Covector::new(d.as_slice().iter().zip(&linear).map(|(x, a)| a + s * reach * x).collect())
        };
        let (f1, f2) = (member(&d1, s1), member(&d2, s2));
        let in1 = legendre_membership(&form, &f1, 1e-6).unwrap();
        let in2 = legendre_membership(&form, &f2, 1e-6).unwrap();
        prop_assume!(in1.verdict == Verdict::Member && in2.verdict == Verdict::Member);
        for t in [0.25, 0.5, 0.75] {
            let mix = Covector::new(f1.as_slice().iter().zip(f2.as_slice()).map(|(a, b)| t * a + (1.0 - t) * b).collect());
            let m = legendre_membership(&form, &mix, 1e-6).unwrap();
            prop_assert!(m.is_in_set(), "t = {t}: {m:?}");
        }
    }

    #[test]
    fn zero_force_is_always_admissible(id in 1u8..=4, dir in vec3(), rho in 0.1..2.0f64) {
        let spec = ExampleSpec::with_params(id, MetricSpace::identity(3), Params { rho, ..Params::default() }).unwrap();
        let Built::Static(sys) = build(&spec).unwrap() else { unreachable!() };
        let n: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let unit: Vec<f64> = dir.iter().map(|x| x / n).collect();
        let q = match id {
            1 => unit.clone(),
            3 => [dir.clone(), unit.clone()].concat(),
            4 => vec![dir[0], dir[1], dir[2].abs()],
            _ => dir.clone(),
        };
        let zero = Covector::zeros(q.len());
        let m = constitutive_membership(&sys, &ForcePoint::new(Point::new(q), zero), 1e-6).unwrap();
        prop_assert!(m.is_in_set());
    }

    #[test]
    fn coulomb_ball_is_star_shaped(f in vec3(), lambda in 0.0..1.0f64, rho in 0.1..2.0f64) {
        let spec = ExampleSpec::with_params(2, MetricSpace::identity(3), Params { rho, ..Params::default() }).unwrap();
        let Built::Static(sys) = build(&spec).unwrap() else { unreachable!() };
        let check = |f: Vec<f64>| constitutive_membership(&sys, &ForcePoint::new(Point::zeros(3), Covector::new(f)), 1e-6).unwrap();
        prop_assume!(check(f.clone()).verdict == Verdict::Member);
        prop_assert!(check(f.iter().map(|x| lambda * x).collect()).is_in_set());
    }
}
