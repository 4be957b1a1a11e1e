//! Rectangular grids of force covectors.

use crate::error::{Error, Result};
use crate::euclid::Covector;

/// One axis `min, min + step, …` up to `max` (inclusive, with a small
/// tolerance for rounding). An axis with `max < min` is empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Usage(format!("grid bounds must be finite, got {min},{max}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "step".into(),
                value: step,
                reason: "grid step must be positive".into(),
            });
        }
        Ok(Self { min, max, step })
    }

    pub fn len(&self) -> usize {
        if self.max < self.min {
            return 0;
        }
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }
}

/// Axis `i` varies component `i` of `base`; the remaining components stay at
/// their base values. Nodes are ordered with the first axis varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceGrid {
    pub base: Covector,
    pub axes: Vec<GridAxis>,
}

impl ForceGrid {
    pub fn new(base: Covector, axes: Vec<GridAxis>) -> Result<Self> {
        if axes.len() > base.dim() {
            return Err(Error::Usage(format!(
                "{} grid axes given for a {}-component force",
                axes.len(),
                base.dim()
            )));
        }
        Ok(Self { base, axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(GridAxis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `index`-th node in grid order.
    pub fn node(&self, mut index: usize) -> Covector {
        let mut f = self.base.clone();
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.len();
            f.as_mut_slice()[k] = axis.value(index % n);
            index /= n;
        }
        f
    }

    pub fn nodes(&self) -> Vec<Covector> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}
