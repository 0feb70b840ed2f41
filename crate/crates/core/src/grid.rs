//! Uniform 1-D grids, sampled fields and the finite-difference and quadrature
//! kernels built on them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhaError};

pub const MIN_POINTS: usize = 8;

/// A uniform grid `q_i = q_min + i * spacing`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !q_min.is_finite() || !q_max.is_finite() {
            return Err(SqhaError::NonFinite("grid bounds"));
        }
        if q_max <= q_min {
            return Err(SqhaError::EmptyDomain { q_min, q_max });
        }
        if n_points < MIN_POINTS {
            return Err(SqhaError::TooFewPoints(n_points));
        }
        Ok(Grid {
            q_min,
            q_max,
            n_points,
        })
    }

    /// Grid of `n_points` centred on `center` with half-width `half_span`.
    pub fn centered(center: f64, half_span: f64, n_points: usize) -> Result<Self> {
        Grid::new(center - half_span, center + half_span, n_points)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_points - 1) as f64
    }

    pub fn length(&self) -> f64 {
        self.q_max - self.q_min
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| self.q_min + i as f64 * h)
            .collect()
    }

    /// Fractional index of `q` (not clamped).
    pub fn locate(&self, q: f64) -> f64 {
        (q - self.q_min) / self.spacing()
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.q_min && q <= self.q_max
    }
}

/// SI dimension exponents (length, mass, time) carried by a [`Field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub length: i8,
    pub mass: i8,
    pub time: i8,
}

impl Unit {
    pub const DIMENSIONLESS: Unit = Unit::new(0, 0, 0);
    /// Linear density in one dimension, m⁻¹.
    pub const DENSITY: Unit = Unit::new(-1, 0, 0);
    pub const LENGTH: Unit = Unit::new(1, 0, 0);
    pub const ENERGY: Unit = Unit::new(2, 1, -2);
    pub const FORCE: Unit = Unit::new(1, 1, -2);
    pub const VELOCITY: Unit = Unit::new(1, 0, -1);
    pub const ACTION: Unit = Unit::new(2, 1, -1);
    /// Density rate, m⁻¹ s⁻¹ (noise increments per unit time).
    pub const DENSITY_RATE: Unit = Unit::new(-1, 0, -1);

    pub const fn new(length: i8, mass: i8, time: i8) -> Self {
        Unit { length, mass, time }
    }

    /// Unit after differentiating `order` times with respect to position.
    pub fn per_length(self, order: u8) -> Unit {
        Unit {
            length: self.length - order as i8,
            ..self
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (sym, e) in [("kg", self.mass), ("m", self.length), ("s", self.time)] {
            match e {
                0 => {}
                1 => parts.push(sym.to_string()),
                _ => parts.push(format!("{sym}^{e}")),
            }
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("·"))
        }
    }
}

/// Values sampled on a [`Grid`], all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    unit: Unit,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SqhaError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SqhaError::NonFinite("field values"));
        }
        Ok(Field { grid, values, unit })
    }

    pub fn from_fn(grid: Grid, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Field::new(grid, values, unit)
    }

    pub fn zeros(grid: Grid, unit: Unit) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
            unit,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation at `q`, clamped to the grid ends.
    pub fn interpolate(&self, q: f64) -> f64 {
        interpolate(&self.grid, &self.values, q)
    }

    pub fn scaled(&self, factor: f64, unit: Unit) -> Result<Field> {
        Field::new(
            self.grid,
            self.values.iter().map(|v| v * factor).collect(),
            unit,
        )
    }
}

/// Boundary closure used by the stencil kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// Second-order one-sided stencils at the two ends.
    OneSided,
    /// Periodic wrap with period `n_points * spacing`.
    Periodic,
}

/// Finite-difference derivative of `f` of the given order (1 or 2).
///
/// Interior points use second-order central differences, the ends use
/// second-order one-sided stencils.
pub fn derivative(f: &Field, order: u8) -> Result<Field> {
    let h = f.grid.spacing();
    let values = match order {
        1 => first_derivative(&f.values, h, Closure::OneSided),
        2 => second_derivative(&f.values, h, Closure::OneSided),
        other => return Err(SqhaError::InvalidOrder(other)),
    };
    Field::new(f.grid, values, f.unit.per_length(order))
}

/// Central first derivative. Written as differences so constants map to zero
/// exactly.
pub(crate) fn first_derivative(f: &[f64], h: f64, closure: Closure) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    match closure {
        Closure::OneSided => {
            out[0] = (-3.0 * (f[0] - f[1]) + (f[1] - f[2])) * inv;
            out[n - 1] = (3.0 * (f[n - 1] - f[n - 2]) - (f[n - 2] - f[n - 3])) * inv;
        }
        Closure::Periodic => {
            out[0] = (f[1] - f[n - 1]) * inv;
            out[n - 1] = (f[0] - f[n - 2]) * inv;
        }
    }
    out
}

pub(crate) fn second_derivative(f: &[f64], h: f64, closure: Closure) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (h * h);
    for i in 1..n - 1 {
        out[i] = ((f[i + 1] - f[i]) - (f[i] - f[i - 1])) * inv;
    }
    match closure {
        Closure::OneSided => {
            out[0] = (2.0 * (f[0] - f[1]) - 3.0 * (f[1] - f[2]) + (f[2] - f[3])) * inv;
            out[n - 1] = (2.0 * (f[n - 1] - f[n - 2]) - 3.0 * (f[n - 2] - f[n - 3])
                + (f[n - 3] - f[n - 4]))
                * inv;
        }
        Closure::Periodic => {
            out[0] = ((f[1] - f[0]) - (f[0] - f[n - 1])) * inv;
            out[n - 1] = ((f[0] - f[n - 1]) - (f[n - 1] - f[n - 2])) * inv;
        }
    }
    out
}

/// Composite trapezoid estimate of `∫ f dq` over the grid.
pub fn integrate(f: &Field) -> f64 {
    trapezoid(&f.values, f.grid.spacing())
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Rectangle rule over one period, used with periodic closures.
pub(crate) fn periodic_sum(values: &[f64], h: f64) -> f64 {
    h * values.iter().sum::<f64>()
}

pub(crate) fn interpolate(grid: &Grid, values: &[f64], q: f64) -> f64 {
    let n = values.len();
    let x = grid.locate(q);
    if x <= 0.0 {
        return values[0];
    }
    if x >= (n - 1) as f64 {
        return values[n - 1];
    }
    let i = x.floor() as usize;
    let t = x - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// Adaptive Simpson quadrature of a smooth scalar function on `[a, b]`.
pub fn integrate_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    // Split into panels first so narrow peaks inside a wide interval are seen.
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            adaptive_simpson(&f, lo, hi, flo, fmid, fhi, whole, rel_tol, 40)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol * (left + right).abs().max(f64::MIN_POSITIVE) {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol, depth - 1)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        rms_residual: (ss / nf).sqrt(),
    })
}
