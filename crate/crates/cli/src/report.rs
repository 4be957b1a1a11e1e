//! Sample reports and their CSV and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    /// Canonical descriptor JSON of the sampled system.
    pub system: String,
    pub q: Vec<f64>,
    /// Base force; axis `i` replaces component `i`.
    pub base: Vec<f64>,
    pub grid: Vec<GridSpec>,
    pub tol: f64,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub f: Vec<f64>,
    pub verdict: String,
    /// Infinite margins (equality constraints, violated constraints) are
    /// written as the strings `"inf"` and `"-inf"`.
    #[serde(with = "lenient_float")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub header: SampleHeader,
    pub rows: Vec<SampleRow>,
}

impl SampleReport {
    pub fn to_csv(&self) -> String {
        let n = self.header.base.len();
        let mut s = String::new();
        for i in 1..=n {
            let _ = write!(s, "f{i},");
        }
        s.push_str("verdict,margin\n");
        for r in &self.rows {
            for x in &r.f {
                let _ = write!(s, "{x},");
            }
            let _ = writeln!(s, "{},{}", r.verdict, r.margin);
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

mod lenient_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(t) => t
                .parse()
                .map_err(|_| de::Error::custom(format!("`{t}` is not a number"))),
        }
    }
}
