//! Sampled probability densities (squared wave-function moduli).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhaError};
use crate::grid::{integrate, Field, Grid, Unit};

/// A non-negative density `n(q)` on a grid.
///
/// Densities built from closed forms also carry the exact `ln n`. Where the
/// logarithm is available, curvature-based quantities are evaluated from it
/// directly, which keeps far tails usable long after `n` itself underflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    field: Field,
    log_values: Option<Vec<f64>>,
}

impl DensityField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| v < 0.0) {
            return Err(SqhaError::invalid("density", "values must be non-negative"));
        }
        Ok(DensityField {
            field: Field::new(grid, values, Unit::DENSITY)?,
            log_values: None,
        })
    }

    /// Builds a density from `ln n`. Entries must be finite.
    pub fn from_log(grid: Grid, log_values: Vec<f64>) -> Result<Self> {
        if log_values.len() != grid.len() {
            return Err(SqhaError::LengthMismatch {
                expected: grid.len(),
                got: log_values.len(),
            });
        }
        if log_values.iter().any(|v| !v.is_finite()) {
            return Err(SqhaError::NonFinite("log density"));
        }
        let values = log_values.iter().map(|l| l.exp()).collect();
        Ok(DensityField {
            field: Field::new(grid, values, Unit::DENSITY)?,
            log_values: Some(log_values),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn log_values(&self) -> Option<&[f64]> {
        self.log_values.as_deref()
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn norm(&self) -> f64 {
        integrate(&self.field)
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(0.0, f64::max)
    }

    /// `c * n` for `c > 0`; the log representation is shifted accordingly.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(SqhaError::invalid("scale", "must be positive and finite"));
        }
        match &self.log_values {
            Some(logs) => {
                let shift = c.ln();
                DensityField::from_log(*self.grid(), logs.iter().map(|l| l + shift).collect())
            }
            None => DensityField::from_values(
                *self.grid(),
                self.values().iter().map(|v| v * c).collect(),
            ),
        }
    }

    /// Drops the log representation, leaving only sampled values.
    pub fn without_log(&self) -> Self {
        DensityField {
            field: self.field.clone(),
            log_values: None,
        }
    }

    /// Mean and variance of position, normalised by the grid integral.
    pub fn moments(&self) -> (f64, f64) {
        let g = *self.grid();
        let q = g.points();
        let n = self.values();
        let norm = self.norm();
        let h = g.spacing();
        let w = |i: usize| if i == 0 || i == n.len() - 1 { 0.5 } else { 1.0 };
        let mean = (0..n.len()).map(|i| w(i) * q[i] * n[i]).sum::<f64>() * h / norm;
        let var = (0..n.len())
            .map(|i| w(i) * (q[i] - mean).powi(2) * n[i])
            .sum::<f64>()
            * h
            / norm;
        (mean, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_values() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let mut v = vec![1.0; 8];
        v[2] = -1e-3;
        assert!(DensityField::from_values(g, v).is_err());
    }

    #[test]
    fn log_and_values_agree() {
        let g = Grid::new(-3.0, 3.0, 61).unwrap();
        let logs: Vec<f64> = g.points().iter().map(|q| -q * q).collect();
        let d = DensityField::from_log(g, logs.clone()).unwrap();
        for (v, l) in d.values().iter().zip(&logs) {
            assert_eq!(*v, l.exp());
        }
        let s = d.scaled(2.0).unwrap();
        assert!((s.norm() / d.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn moments_of_gaussian() {
        let g = Grid::new(-10.0, 12.0, 2201).unwrap();
        let d = DensityField::from_values(
            g,
            g.points()
                .iter()
                .map(|q| (-(q - 1.0).powi(2) / (2.0 * 0.49)).exp())
                .collect(),
        )
        .unwrap();
        let (m, v) = d.moments();
        assert!((m - 1.0).abs() < 1e-10);
        assert!((v - 0.49).abs() < 1e-8);
    }
}
