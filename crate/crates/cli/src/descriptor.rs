//! System descriptors: the JSON documents (schema 1) naming an example or
//! spelling out a constant static system.

use std::collections::BTreeMap;

use constat_core::examples::{build, numeric_membership, Built, ExampleSpec};
use constat_core::{
    constitutive_membership, Chart, Cone, Covector, ForcePoint, HomogeneousForm, Membership, MetricSpace, Point,
    Seminorm, StaticSystem, Vector,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level document. Exactly one of `example` and `system` is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleDescriptor {
    pub id: u8,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Defaults to the metric's size, or 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Vec<f64>>,
}

/// A configuration-independent system on an affine space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    pub cone: ConeDescriptor,
    pub form: FormDescriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConeDescriptor {
    Full,
    Subspace {
        basis: Vec<Vec<f64>>,
    },
    Soc {
        axis: Vec<f64>,
        slope: f64,
    },
    /// Product of cones on consecutive coordinate blocks; the metric must be
    /// block diagonal accordingly.
    Product {
        parts: Vec<PartDescriptor>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDescriptor {
    pub dim: usize,
    pub cone: ConeDescriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default)]
    pub seminorms: Vec<SeminormDescriptor>,
}

/// `weight ‖P v‖`: `P` is `projector`, the coordinate `block = [start, len]`,
/// or the identity when neither is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormDescriptor {
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<[usize; 2]>,
}

impl Descriptor {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let d: Descriptor =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid descriptor: {e}")))?;
        if d.schema != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "invalid descriptor: unsupported schema {} (expected {SCHEMA_VERSION})",
                d.schema
            )));
        }
        match (&d.example, &d.system) {
            (Some(_), None) | (None, Some(_)) => Ok(d),
            _ => Err(CliError::Usage(
                "invalid descriptor: give exactly one of `example` and `system`".into(),
            )),
        }
    }

    pub fn for_example(id: u8, params: BTreeMap<String, f64>, dim: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            example: Some(ExampleDescriptor {
                id,
                params,
                dim: Some(dim),
                metric: None,
                q0: None,
                axis: None,
            }),
            system: None,
        }
    }

    /// Compact JSON used to identify the system in reports.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("descriptors serialize")
    }

    pub fn load(&self) -> Result<System, CliError> {
        match (&self.example, &self.system) {
            (Some(e), None) => e.load(),
            (None, Some(s)) => s.load(),
            _ => Err(CliError::Usage("descriptor names no system".into())),
        }
    }
}

fn metric_from(rows: &[Vec<f64>], what: &str) -> Result<MetricSpace, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Usage(format!(
            "{what}: metric must be a nonempty square matrix"
        )));
    }
    let g = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    MetricSpace::new(g).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn space_for(
    dim: Option<usize>,
    metric: &Option<Vec<Vec<f64>>>,
    default_dim: usize,
    what: &str,
) -> Result<MetricSpace, CliError> {
    let space = match metric {
        Some(rows) => metric_from(rows, what)?,
        None => MetricSpace::identity(dim.unwrap_or(default_dim).max(1)),
    };
    if let Some(d) = dim {
        if d != space.dim() {
            return Err(CliError::Usage(format!(
                "{what}: dim is {d} but the metric is {}×{}",
                space.dim(),
                space.dim()
            )));
        }
    }
    Ok(space)
}

fn sized(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if v.len() == n {
        Ok(v.to_vec())
    } else {
        Err(CliError::Usage(format!(
            "{what} has {} components, expected {n}",
            v.len()
        )))
    }
}

impl ExampleDescriptor {
    pub fn spec(&self) -> Result<ExampleSpec, CliError> {
        let space = space_for(self.dim, &self.metric, 3, "example")?;
        let n = space.dim();
        let mut spec = ExampleSpec::from_params(self.id, space, &self.params)?;
        if let Some(q0) = &self.q0 {
            spec = spec.with_q0(Point::new(sized(q0, n, "q0")?))?;
        }
        if let Some(axis) = &self.axis {
            spec = spec.with_axis(Vector::new(sized(axis, n, "axis")?))?;
        }
        Ok(spec)
    }

    fn load(&self) -> Result<System, CliError> {
        let spec = self.spec()?;
        let built = build(&spec)?;
        Ok(System::Example { spec, built })
    }
}

impl ConeDescriptor {
    fn build(&self, space: &MetricSpace) -> Result<Cone, CliError> {
        let n = space.dim();
        Ok(match self {
            ConeDescriptor::Full => Cone::full(space),
            ConeDescriptor::Subspace { basis } => {
                let vs = basis
                    .iter()
                    .map(|b| sized(b, n, "subspace basis vector").map(Vector::new))
                    .collect::<Result<Vec<_>, _>>()?;
                Cone::subspace(space, &vs)?
            }
            ConeDescriptor::Soc { axis, slope } => {
                Cone::soc(space, &Vector::new(sized(axis, n, "cone axis")?), *slope)?
            }
            ConeDescriptor::Product { parts } => {
                let total: usize = parts.iter().map(|p| p.dim).sum();
                if parts.is_empty() || total != n {
                    return Err(CliError::Usage(format!(
                        "product cone parts cover {total} coordinates, expected {n}"
                    )));
                }
                let g = space.metric();
                let mut off = 0;
                let mut cones = Vec::new();
                for p in parts {
                    for i in off..off + p.dim {
                        for j in 0..n {
                            if (j < off || j >= off + p.dim) && g[(i, j)] != 0.0 {
                                return Err(CliError::Usage("product cone needs a block-diagonal metric".into()));
                            }
                        }
                    }
                    let block = MetricSpace::new(g.view((off, off), (p.dim, p.dim)).clone_owned())?;
                    cones.push(p.cone.build(&block)?);
                    off += p.dim;
                }
                let mut it = cones.into_iter();
                let first = it.next().expect("nonempty");
                it.fold(first, Cone::product)
            }
        })
    }
}

impl SystemDescriptor {
    fn load(&self) -> Result<System, CliError> {
        let space = space_for(self.dim, &self.metric, 3, "system")?;
        let n = space.dim();
        let cone = self.cone.build(&space)?;
        // products assemble their own space; use it so the form and cone agree
        let space = cone.space().clone();
        let linear = match &self.form.linear {
            Some(a) => Covector::new(sized(a, n, "form linear part")?),
            None => Covector::zeros(n),
        };
        let mut seminorms = Vec::new();
        for s in &self.form.seminorms {
            seminorms.push(match (&s.projector, s.block) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "a seminorm takes `projector` or `block`, not both".into(),
                    ))
                }
                (Some(rows), None) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::Usage(format!("seminorm projector must be {n}×{n}")));
                    }
                    Seminorm::new(s.weight, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                }
                (None, Some([start, len])) => {
                    if start + len > n {
                        return Err(CliError::Usage(format!(
                            "seminorm block [{start}, {len}] exceeds dim {n}"
                        )));
                    }
                    Seminorm::block(n, start, len, s.weight)
                }
                (None, None) => Seminorm::full(n, s.weight),
            });
        }
        let form = HomogeneousForm::new(&space, linear, seminorms, cone.clone())?;
        let sys = StaticSystem::new(
            Chart::Affine(space),
            |_| true,
            move |_| Ok(cone.clone()),
            move |_| Ok(form.clone()),
        );
        Ok(System::Static(sys))
    }
}

/// A loaded system ready for membership queries.
pub enum System {
    Static(StaticSystem),
    Example { spec: ExampleSpec, built: Built },
}

impl System {
    /// Number of configuration coordinates the queries take (the base for
    /// generating families).
    pub fn q_dim(&self) -> usize {
        match self {
            System::Static(s) => s.chart().dim(),
            System::Example { spec, built } => match built {
                Built::Static(s) => s.chart().dim(),
                _ => spec.dim(),
            },
        }
    }

    pub fn membership(&self, q: &Point, f: &Covector, tol: f64) -> Result<Membership, CliError> {
        let n = self.q_dim();
        if q.dim() != n || f.dim() != n {
            return Err(CliError::Usage(format!(
                "q and f need {n} components, got {} and {}",
                q.dim(),
                f.dim()
            )));
        }
        Ok(match self {
            System::Static(sys) => constitutive_membership(sys, &ForcePoint::new(q.clone(), f.clone()), tol)?,
            System::Example { spec, built } => numeric_membership(spec, built, q, f, tol)?,
        })
    }
}
