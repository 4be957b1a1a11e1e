//! The ten worked systems: constructors, closed-form constitutive sets and a
//! randomized cross-check of the numeric oracles against them.

mod analytic;
mod build;
mod crosscheck;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::euclid::{MetricSpace, Point, Vector};

pub use analytic::{
    analytic_membership, characteristic_scale, contribution_covector, critical_slack, kappa_closed_form,
    reduced_coefficients, AnalyticVerdict,
};
pub use build::{build, section, Built};
pub use crosscheck::{crosscheck, numeric_membership, CrosscheckReport, Disagreement};

/// Tolerance for deciding that a configuration lies on an equality
/// constraint (sphere of Example 1, boundary plane of Example 4).
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Parameter names accepted by [`ExampleSpec::from_params`].
pub const PARAM_NAMES: [&str; 5] = ["a", "rho", "k", "kp", "kpp"];

/// Physical parameters. `kp` and `kpp` are `k′` and `k″`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub a: f64,
    pub rho: f64,
    pub k: f64,
    pub kp: f64,
    pub kpp: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            a: 1.0,
            rho: 1.0,
            k: 1.0,
            kp: 1.0,
            kpp: 1.0,
        }
    }
}

impl Params {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "a" => self.a,
            "rho" => self.rho,
            "k" => self.k,
            "kp" => self.kp,
            "kpp" => self.kpp,
            _ => return None,
        })
    }

    fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "a" => self.a = value,
            "rho" => self.rho = value,
            "k" => self.k = value,
            "kp" => self.kp = value,
            "kpp" => self.kpp = value,
            _ => return Err(Error::Usage(format!("unknown parameter `{name}`"))),
        }
        Ok(())
    }
}

/// One of the ten systems with its parameters and anchors.
#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub id: u8,
    pub params: Params,
    pub space: MetricSpace,
    /// The fixed point `q₀`.
    pub q0: Point,
    /// The unit normal `k` of Example 4's boundary plane.
    pub axis: Vector,
}

/// Parameters each example depends on.
pub fn required_params(id: u8) -> &'static [&'static str] {
    match id {
        1 => &["a"],
        2..=4 => &["rho"],
        5 => &["k", "a"],
        6 => &["k", "kp", "kpp"],
        7 => &["k", "rho"],
        8 | 10 => &["k", "kp", "rho"],
        9 => &["k", "a", "rho"],
        _ => &[],
    }
}

impl ExampleSpec {
    /// Example `id` in dimension `dim` with unit parameters, Euclidean
    /// metric, `q₀ = 0` and `k` the last basis vector.
    pub fn new(id: u8, dim: usize) -> Result<Self> {
        Self::with_params(id, MetricSpace::identity(dim.max(1)), Params::default())
    }

    pub fn with_params(id: u8, space: MetricSpace, params: Params) -> Result<Self> {
        let dim = space.dim();
        let mut axis = vec![0.0; dim];
        axis[dim - 1] = 1.0;
        let spec = Self {
            id,
            params,
            q0: Point::zeros(dim),
            axis: Vector::new(axis),
            space,
        };
        spec.validated()
    }

    /// Builds a spec from named parameters; every parameter the example uses
    /// must be given and no others.
    pub fn from_params(id: u8, space: MetricSpace, named: &BTreeMap<String, f64>) -> Result<Self> {
        check_id(id)?;
        let mut params = Params::default();
        for (name, value) in named {
            if !required_params(id).contains(&name.as_str()) {
                return Err(Error::Usage(format!(
                    "example {id} takes parameters {:?}, not `{name}`",
                    required_params(id)
                )));
            }
            params.set(name, *value)?;
        }
        let missing: Vec<&str> = required_params(id)
            .iter()
            .copied()
            .filter(|n| !named.contains_key(*n))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Usage(format!("example {id} is missing parameters {missing:?}")));
        }
        Self::with_params(id, space, params)
    }

    pub fn with_q0(mut self, q0: Point) -> Result<Self> {
        self.q0 = q0;
        self.validated()
    }

    pub fn with_axis(mut self, axis: Vector) -> Result<Self> {
        self.axis = axis;
        self.validated()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn validated(mut self) -> Result<Self> {
        check_id(self.id)?;
        let dim = self.space.dim();
        if !(2..=3).contains(&dim) {
            return Err(Error::Usage(format!(
                "examples are defined in dimension 2 or 3, got {dim}"
            )));
        }
        crate::error::check_dim(dim, self.q0.dim())?;
        crate::error::check_dim(dim, self.axis.dim())?;
        let p = self.params;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name: name.into(),
                    value: v,
                    reason: "must be positive".into(),
                })
            }
        };
        for name in required_params(self.id) {
            let v = p.get(name).unwrap_or(f64::NAN);
            match *name {
                "rho" if self.id != 4 => {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvalidParameter {
                            name: "rho".into(),
                            value: v,
                            reason: "must be nonnegative".into(),
                        });
                    }
                }
                n => positive(n, v)?,
            }
        }
        self.axis = self
            .space
            .normalize(&self.axis)
            .ok_or_else(|| Error::InvalidParameter {
                name: "axis".into(),
                value: 0.0,
                reason: "must be nonzero".into(),
            })?;
        Ok(self)
    }
}

fn check_id(id: u8) -> Result<()> {
    if (1..=10).contains(&id) {
        Ok(())
    } else {
        Err(Error::Usage(format!("unknown example id {id}; expected 1 to 10")))
    }
}
