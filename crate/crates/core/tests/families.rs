use approx::assert_relative_eq;
use constat_core::examples::{analytic_membership, build, critical_slack, section, Built, ExampleSpec, Params};
use constat_core::families::{
    contribution, critical_test_form, generated_set_membership, kappa, reduce_family, reduce_function_family,
    sublinearity_defects, FiberGrid, SearchOptions,
};
use constat_core::{legendre_membership, pair, Covector, MetricSpace, Point, Vector, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

fn unit(rng: &mut ChaCha8Rng, space: &MetricSpace) -> Vec<f64> {
    loop {
        let v = Vector::new(random_vec(rng, space.dim(), 1.0));
        if let Some(u) = space.normalize(&v) {
            return u.to_vec();
        }
    }
}

fn metric() -> MetricSpace {
    MetricSpace::diagonal(&[1.5, 1.0, 0.75]).unwrap()
}

/// ⟨κ(q̄), δq⟩ against central differences of Ū along tangent lifts
/// `(δq, w)` with arbitrary vertical part `w`.
fn kappa_matches_differences(spec: &ExampleSpec, critical_lift: impl Fn(&mut ChaCha8Rng) -> Point) {
    let Built::Function(fam) = build(spec).unwrap() else {
        panic!("expected a function family")
    };
    let fib = fam.fibration().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    for _ in 0..100 {
        let qbar = critical_lift(&mut rng);
        let k = kappa(&fam, &qbar, 1e-9).unwrap();
        let dq = Vector::new(random_vec(&mut rng, 3, 1.0));
        let mut lift = fib.lift(&dq);
        for w in fib.vertical_basis(&qbar).unwrap() {
            lift = &lift + &(&w * rng.random_range(-1.0..1.0));
        }
        let analytic = pair(&k, &dq).unwrap();
        let fd = fam.directional_fd(&qbar, &lift, 1e-5);
        assert_relative_eq!(analytic, fd, max_relative = 1e-5, epsilon = 1e-9);
    }
}

#[test]
fn kappa_consistency_for_rod_family() {
    let spec = ExampleSpec::with_params(
        5,
        metric(),
        Params {
            k: 2.0,
            a: 0.8,
            ..Params::default()
        },
    )
    .unwrap();
    let space = spec.space.clone();
    kappa_matches_differences(&spec, |rng| {
        // critical iff ϑ is parallel to q − q₀
        let q = random_vec(rng, 3, 2.0);
        let th = space.normalize(&Vector::new(q.clone())).unwrap();
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        Point::new([q, (&th * sign).to_vec()].concat())
    });
}

#[test]
fn kappa_consistency_for_spring_chain() {
    let spec = ExampleSpec::with_params(
        6,
        metric(),
        Params {
            k: 1.3,
            kp: 0.7,
            kpp: 2.1,
            ..Params::default()
        },
    )
    .unwrap()
    .with_q0(Point::new(vec![0.2, 0.0, -0.4]))
    .unwrap();
    let zeta = section(&spec).unwrap();
    kappa_matches_differences(&spec, |rng| zeta.lift(&Point::new(random_vec(rng, 3, 2.0))));
}

fn critical_predicates_match(id: u8, params: Params, sample: impl Fn(&mut ChaCha8Rng) -> Point) {
    let spec = ExampleSpec::with_params(id, metric(), params).unwrap();
    let Built::Form(fam) = build(&spec).unwrap() else {
        panic!("expected a form family")
    };
    let band = 1e-3 * params.rho;
    let mut rng = ChaCha8Rng::seed_from_u64(110 + id as u64);
    let (mut critical, mut checked) = (0, 0);
    for _ in 0..1000 {
        let qbar = sample(&mut rng);
        let slack = critical_slack(&spec, &qbar).unwrap();
        if slack.abs() <= band {
            continue;
        }
        checked += 1;
        let numeric = critical_test_form(&fam, &qbar, 1e-9).unwrap();
        assert_eq!(numeric, slack >= 0.0, "example {id} at {qbar:?}: slack {slack}");
        critical += numeric as usize;
    }
    // both sides of the predicate are exercised
    assert!(
        critical > 50 && checked - critical > 50,
        "{critical} critical of {checked}"
    );
}

#[test]
fn critical_set_of_point_pulled_through_friction() {
    let params = Params {
        k: 1.5,
        rho: 0.9,
        ..Params::default()
    };
    critical_predicates_match(7, params, |rng| {
        let q = random_vec(rng, 3, 1.0);
        let y: Vec<f64> = q.iter().zip(random_vec(rng, 3, 0.8)).map(|(a, b)| a + b).collect();
        Point::new([q, y].concat())
    });
}

#[test]
fn critical_set_of_anchored_spring() {
    let params = Params {
        k: 1.5,
        kp: 0.5,
        rho: 0.9,
        ..Params::default()
    };
    critical_predicates_match(8, params, |rng| Point::new(random_vec(rng, 6, 0.8)));
}

#[test]
fn critical_set_of_rod_with_friction() {
    let params = Params {
        k: 1.5,
        a: 0.6,
        rho: 0.9,
        ..Params::default()
    };
    let space = metric();
    critical_predicates_match(9, params, move |rng| {
        let q = random_vec(rng, 3, 1.5);
        Point::new([q, unit(rng, &space)].concat())
    });
}

#[test]
fn contributions_of_critical_points_are_nonempty() {
    for id in [7u8, 8, 9] {
        let spec = ExampleSpec::with_params(
            id,
            metric(),
            Params {
                rho: 0.8,
                ..Params::default()
            },
        )
        .unwrap();
        let Built::Form(fam) = build(&spec).unwrap() else {
            panic!("expected a form family")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut found = 0;
        while found < 25 {
            let y = if id == 9 {
                unit(&mut rng, &spec.space)
            } else {
                random_vec(&mut rng, 3, 1.0)
            };
            let qbar = Point::new([random_vec(&mut rng, 3, 1.0), y].concat());
            if !critical_test_form(&fam, &qbar, 1e-9).unwrap() {
                continue;
            }
            let c = contribution(&fam, &qbar, 1e-6).unwrap();
            assert!(c.check(&c.witness()).unwrap().is_in_set(), "example {id} at {qbar:?}");
            found += 1;
        }
    }
}

#[test]
fn reduction_agrees_with_full_family_and_closed_form() {
    let spec = ExampleSpec::with_params(
        10,
        MetricSpace::identity(2),
        Params {
            k: 1.0,
            kp: 1.0,
            rho: 0.5,
            ..Params::default()
        },
    )
    .unwrap();
    let Built::Form(fam) = build(&spec).unwrap() else {
        panic!("expected a form family")
    };
    let samples: Vec<Point> = (0..20)
        .map(|i| Point::new(vec![0.1 * i as f64 - 1.0, 0.05 * i as f64]))
        .collect();
    let reduced = reduce_family(&fam, section(&spec).unwrap(), &samples, 1e-9).unwrap();
    let q = Point::new(vec![0.8, -0.4]);
    let form = reduced.form_at(&q).unwrap();
    let grid = FiberGrid::cube(&[0.4, -0.2], 1.5, 9);
    let opts = SearchOptions::default();
    let mut compared = 0;
    for i in 0..21 {
        for j in 0..21 {
            let f = Covector::new(vec![-0.6 + 0.1 * i as f64, -0.7 + 0.1 * j as f64]);
            let closed = analytic_membership(&spec, &q, &f).unwrap();
            if closed.margin.abs() <= 1e-3 * 0.5 {
                continue;
            }
            let via_reduced = legendre_membership(&form, &f, 1e-6).unwrap().verdict != Verdict::NonMember;
            let via_family = generated_set_membership(&fam, &q, &f, &grid, &opts)
                .unwrap()
                .membership
                .verdict
                != Verdict::NonMember;
            assert_eq!(via_reduced, closed.member, "reduced form at f = {f:?}");
            assert_eq!(via_family, closed.member, "full family at f = {f:?}");
            compared += 1;
        }
    }
    assert!(compared > 400);
}

#[test]
fn reduced_forms_are_sublinear() {
    let spec = ExampleSpec::with_params(
        10,
        metric(),
        Params {
            k: 2.0,
            kp: 0.5,
            rho: 0.7,
            ..Params::default()
        },
    )
    .unwrap();
    let Built::Form(fam) = build(&spec).unwrap() else {
        panic!("expected a form family")
    };
    let reduced = reduce_family(&fam, section(&spec).unwrap(), &[Point::new(vec![1.0, 2.0, 3.0])], 1e-9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..5 {
        let form = reduced.form_at(&Point::new(random_vec(&mut rng, 3, 2.0))).unwrap();
        let (convex, homog) = sublinearity_defects(&form, 1000, 11);
        assert!(convex <= 1e-10 && homog <= 1e-10, "defects {convex} {homog}");
    }
}

#[test]
fn reduced_spring_chain_energy() {
    let spec = ExampleSpec::new(6, 3).unwrap();
    let Built::Function(fam) = build(&spec).unwrap() else {
        panic!("expected a function family")
    };
    let reduced =
        reduce_function_family(&fam, section(&spec).unwrap(), &[Point::new(vec![0.5, 0.0, 1.0])], 1e-9).unwrap();
    let q = Point::new(vec![1.0, 2.0, -2.0]);
    // (3/4)‖q − q₀‖² with ‖q − q₀‖² = 9
    assert_relative_eq!(reduced.energy(&q), 6.75, max_relative = 1e-12);
    let g = reduced.gradient(&q).unwrap();
    assert_relative_eq!(g.as_slice()[1], 3.0, max_relative = 1e-12);
}

#[test]
fn sections_of_other_examples_do_not_exist() {
    for id in [5u8, 7, 8, 9] {
        assert!(section(&ExampleSpec::new(id, 3).unwrap()).is_none());
    }
}
