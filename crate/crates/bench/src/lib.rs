//! Shared fixtures for the benchmarks.

use constat_core::examples::{build, Built, ExampleSpec, Params};
use constat_core::{Covector, MetricSpace, Point, StaticSystem, Vector};

/// A non-Euclidean metric, so the benchmarks pay for the general code paths.
pub fn metric() -> MetricSpace {
    MetricSpace::diagonal(&[1.5, 1.0, 0.75]).expect("positive diagonal")
}

pub fn example(id: u8) -> (ExampleSpec, Built) {
    let params = Params {
        k: 1.5,
        kp: 0.5,
        rho: 0.9,
        a: 0.6,
        ..Params::default()
    };
    let spec = ExampleSpec::with_params(id, metric(), params).expect("valid example");
    let built = build(&spec).expect("example builds");
    (spec, built)
}

pub fn static_example(id: u8) -> StaticSystem {
    match example(id).1 {
        Built::Static(s) => s,
        other => panic!("example {id} builds a {}", other.kind()),
    }
}

/// Configuration and force valid for example `id` (inside the set for the
/// friction examples).
pub fn query(id: u8) -> (Point, Covector) {
    match id {
        1 => (
            Point::from_slice(&[0.6 / 1.5f64.sqrt(), 0.0, 0.0]),
            Covector::from_slice(&[0.3, 0.1, 0.0]),
        ),
        3 => (
            Point::from_slice(&[0.2, 0.1, 0.0, 0.0, 0.0, 1.0 / 0.75f64.sqrt()]),
            Covector::from_slice(&[0.1, 0.2, 0.3, 0.0, 0.0, 0.05]),
        ),
        4 => (
            Point::from_slice(&[0.3, -0.2, 0.0]),
            Covector::from_slice(&[0.1, 0.0, -0.5]),
        ),
        _ => (
            Point::from_slice(&[0.4, -0.3, 0.2]),
            Covector::from_slice(&[0.3, -0.2, 0.1]),
        ),
    }
}

/// Two point clouds on either side of the plane `x₀ = 0`.
pub fn clouds(count: usize) -> (Vec<Vector>, Vec<Vector>) {
    let cloud = |sign: f64| {
        (0..count)
            .map(|i| {
                let t = i as f64 / count as f64 * std::f64::consts::TAU;
                Vector::from_slice(&[sign * (0.2 + 0.1 * (3.0 * t).sin().abs()), t.cos(), t.sin()])
            })
            .collect()
    };
    (cloud(1.0), cloud(-1.0))
}
