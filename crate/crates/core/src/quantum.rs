//! Madelung quantum potential, quantum force and tail-growth classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::density::DensityField;
use crate::error::{Result, SqhaError};
use crate::grid::{
    first_derivative, fit_line, interpolate, second_derivative, Closure, Field, Grid, Unit,
};

/// Density floor relative to the peak, applied before taking `√n`.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-12;

/// Half-width of the tolerance band around the class boundaries `a = 0`, `a = -1`.
pub const CLASS_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumPotentialOptions {
    pub floor_ratio: f64,
    /// Width (m) of an optional Gaussian pre-smoothing of sampled values.
    pub smoothing_width: Option<f64>,
}

impl Default for QuantumPotentialOptions {
    fn default() -> Self {
        QuantumPotentialOptions {
            floor_ratio: DEFAULT_FLOOR_RATIO,
            smoothing_width: None,
        }
    }
}

/// `V_qu = -(ħ²/2m) (∂²√n)/√n`.
pub fn quantum_potential(n: &DensityField, mass: f64) -> Result<Field> {
    Ok(potential_with_mask(n, mass, &QuantumPotentialOptions::default())?.0)
}

pub fn quantum_potential_with(
    n: &DensityField,
    mass: f64,
    opts: &QuantumPotentialOptions,
) -> Result<Field> {
    Ok(potential_with_mask(n, mass, opts)?.0)
}

/// Quantum potential plus a mask of points whose stencil stayed above the floor.
pub(crate) fn potential_with_mask(
    n: &DensityField,
    mass: f64,
    opts: &QuantumPotentialOptions,
) -> Result<(Field, Vec<bool>)> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SqhaError::invalid("mass", "must be positive and finite"));
    }
    let grid = *n.grid();
    let h = grid.spacing();
    let prefactor = HBAR * HBAR / (2.0 * mass);

    if opts.smoothing_width.is_none() {
        if let Some(logs) = n.log_values() {
            let half: Vec<f64> = logs.iter().map(|l| 0.5 * l).collect();
            let values = log_curvature(&half, h, Closure::OneSided)
                .into_iter()
                .map(|c| -prefactor * c)
                .collect();
            return Ok((Field::new(grid, values, Unit::ENERGY)?, vec![true; grid.len()]));
        }
    }

    let sampled: Vec<f64> = match opts.smoothing_width {
        Some(w) => gaussian_smooth(n.values(), h, w),
        None => n.values().to_vec(),
    };
    let peak = sampled.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(SqhaError::DegenerateDensity(
            "density is zero everywhere".into(),
        ));
    }
    let floor = opts.floor_ratio * peak;
    let root: Vec<f64> = sampled.iter().map(|v| v.max(floor).sqrt()).collect();
    let d2 = second_derivative(&root, h, Closure::OneSided);
    let values = d2
        .iter()
        .zip(&root)
        .map(|(d, s)| -prefactor * d / s)
        .collect();
    let above: Vec<bool> = sampled.iter().map(|&v| v > floor).collect();
    Ok((Field::new(grid, values, Unit::ENERGY)?, erode(&above, 2)))
}

/// `(u')² + u''` for `u = ln √n`, which equals `(∂²√n)/√n`.
pub(crate) fn log_curvature(half_log: &[f64], h: f64, closure: Closure) -> Vec<f64> {
    let d1 = first_derivative(half_log, h, closure);
    let d2 = second_derivative(half_log, h, closure);
    d1.iter().zip(&d2).map(|(a, b)| a * a + b).collect()
}

fn erode(mask: &[bool], radius: usize) -> Vec<bool> {
    let n = mask.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            mask[lo..=hi].iter().all(|&m| m)
        })
        .collect()
}

fn gaussian_smooth(values: &[f64], h: f64, width: f64) -> Vec<f64> {
    let reach = ((4.0 * width / h).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=reach)
        .map(|k| (-0.5 * (k as f64 * h / width).powi(2)).exp())
        .collect();
    let n = values.len();
    (0..n)
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (k, w) in kernel.iter().enumerate() {
                if k == 0 {
                    acc += w * values[i];
                    wsum += w;
                    continue;
                }
                if i >= k {
                    acc += w * values[i - k];
                    wsum += w;
                }
                if i + k < n {
                    acc += w * values[i + k];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

/// Quantum force `-∂V_qu/∂q` with the reference point used for radial distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumForceProfile {
    force: Field,
    origin: f64,
    valid: Vec<bool>,
    support: Option<f64>,
}

impl QuantumForceProfile {
    /// Wraps an externally computed force field; all points are considered valid.
    pub fn from_force(force: Field, origin: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(SqhaError::NonFinite("origin"));
        }
        let n = force.grid().len();
        Ok(QuantumForceProfile {
            force,
            origin,
            valid: vec![true; n],
            support: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.force.grid()
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Raw force samples, before any truncation.
    pub fn force(&self) -> &Field {
        &self.force
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn support(&self) -> Option<f64> {
        self.support
    }

    /// Disregards the force beyond radial distance `radius` from the origin.
    pub fn truncated(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(SqhaError::invalid("truncation radius", "must be positive"));
        }
        self.support = Some(self.support.map_or(radius, |s| s.min(radius)));
        Ok(self)
    }

    /// Force at position `q`, zero outside the support.
    pub fn force_at(&self, q: f64) -> f64 {
        if self.outside_support((q - self.origin).abs()) {
            return 0.0;
        }
        self.force.interpolate(q)
    }

    fn outside_support(&self, r: f64) -> bool {
        matches!(self.support, Some(s) if r > s)
    }

    /// Largest radial distance covered by the grid.
    pub fn radial_extent(&self) -> f64 {
        let g = self.grid();
        (g.q_max() - self.origin).max(self.origin - g.q_min())
    }

    /// Direction (+1 or -1) of the longer radial side of the grid.
    pub(crate) fn long_side(&self) -> f64 {
        let g = self.grid();
        if g.q_max() - self.origin >= self.origin - g.q_min() {
            1.0
        } else {
            -1.0
        }
    }

    /// Untruncated force magnitude at radial distance `r` along the long side.
    pub(crate) fn radial_magnitude(&self, r: f64) -> f64 {
        let q = self.origin + self.long_side() * r;
        interpolate(self.grid(), self.force.values(), q).abs()
    }

    /// `(r, |F|)` samples on the long side with `r > 0`, valid points only,
    /// truncation applied, in increasing `r`.
    pub(crate) fn radial_samples(&self) -> Vec<(f64, f64)> {
        let side = self.long_side();
        let g = self.grid();
        let f = self.force.values();
        let order: Box<dyn Iterator<Item = usize>> = if side > 0.0 {
            Box::new(0..g.len())
        } else {
            Box::new((0..g.len()).rev())
        };
        order
            .filter(|&i| self.valid[i])
            .filter_map(|i| {
                let r = (g.point(i) - self.origin) * side;
                // A node on the origin can land a rounding error away from it.
                if r <= 1e-9 * g.spacing() {
                    return None;
                }
                let mag = if self.outside_support(r) { 0.0 } else { f[i].abs() };
                Some((r, mag))
            })
            .collect()
    }
}

/// Quantum force of a density with radial origin `origin`.
pub fn quantum_force(n: &DensityField, mass: f64, origin: f64) -> Result<QuantumForceProfile> {
    quantum_force_with(n, mass, origin, &QuantumPotentialOptions::default())
}

pub fn quantum_force_with(
    n: &DensityField,
    mass: f64,
    origin: f64,
    opts: &QuantumPotentialOptions,
) -> Result<QuantumForceProfile> {
    let (potential, mask) = potential_with_mask(n, mass, opts)?;
    let h = potential.grid().spacing();
    let force: Vec<f64> = first_derivative(potential.values(), h, Closure::OneSided)
        .into_iter()
        .map(|d| -d)
        .collect();
    let valid = erode(&mask, 1);
    let mut profile =
        QuantumForceProfile::from_force(Field::new(*potential.grid(), force, Unit::FORCE)?, origin)?;
    profile.valid = valid;
    Ok(profile)
}

/// Growth class of `|q⁻¹ ∂V_qu/∂q| ∝ q^a` at large distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    SuperBallistic,
    Ballistic,
    UnderBallistic,
    AsymptoticallyVanishing,
}

impl GrowthClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            GrowthClass::SuperBallistic => "super_ballistic",
            GrowthClass::Ballistic => "ballistic",
            GrowthClass::UnderBallistic => "under_ballistic",
            GrowthClass::AsymptoticallyVanishing => "asymptotically_vanishing",
        }
    }

    /// Class of a tail exponent `a`, and whether `a` sits within the tolerance
    /// band of the `a = -1` convergence boundary.
    pub fn from_exponent(a: f64) -> (GrowthClass, bool) {
        let near_boundary = (a + 1.0).abs() <= CLASS_TOLERANCE;
        let class = if a > CLASS_TOLERANCE {
            GrowthClass::SuperBallistic
        } else if a >= -CLASS_TOLERANCE {
            GrowthClass::Ballistic
        } else if a >= -1.0 - CLASS_TOLERANCE {
            GrowthClass::UnderBallistic
        } else {
            GrowthClass::AsymptoticallyVanishing
        };
        (class, near_boundary)
    }
}

impl fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayClass {
    pub label: GrowthClass,
    /// Fitted exponent `a`; `-inf` when the force vanishes identically on the window.
    pub fitted_exponent: f64,
    pub near_boundary: bool,
}

/// Outer radial fraction `[inner, outer]` of the domain used for tail fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailWindow {
    pub inner: f64,
    pub outer: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        TailWindow {
            inner: 0.75,
            outer: 0.95,
        }
    }
}

impl TailWindow {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer <= 1.0) {
            return Err(SqhaError::invalid(
                "tail window",
                format!("need 0 < inner < outer <= 1, got ({inner}, {outer})"),
            ));
        }
        Ok(TailWindow { inner, outer })
    }
}

/// Least-squares fit of `ln|q⁻¹ ∂V_qu/∂q|` against `ln q` over the tail window.
pub fn growth_exponent(profile: &QuantumForceProfile, window: TailWindow) -> Result<DecayClass> {
    let extent = profile.radial_extent();
    let (lo, hi) = (window.inner * extent, window.outer * extent);
    let g = profile.grid();
    let f = profile.force.values();
    let in_window: Vec<(f64, f64)> = (0..g.len())
        .filter(|&i| profile.valid[i])
        .filter_map(|i| {
            let r = (g.point(i) - profile.origin).abs();
            if r < lo || r > hi || r == 0.0 {
                return None;
            }
            let mag = if profile.outside_support(r) { 0.0 } else { f[i].abs() };
            Some((r, mag))
        })
        .collect();
    if in_window.len() < 8 {
        return Err(SqhaError::ShortTailWindow(in_window.len()));
    }
    if in_window.iter().all(|&(_, m)| m == 0.0) {
        return Ok(DecayClass {
            label: GrowthClass::AsymptoticallyVanishing,
            fitted_exponent: f64::NEG_INFINITY,
            near_boundary: false,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = in_window
        .iter()
        .filter(|&&(_, m)| m > 0.0)
        .map(|&(r, m)| (r.ln(), (m / r).ln()))
        .unzip();
    if xs.len() < 8 {
        return Err(SqhaError::ShortTailWindow(xs.len()));
    }
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| SqhaError::UnclassifiableTail("degenerate tail window".into()))?;
    let (label, near_boundary) = GrowthClass::from_exponent(fit.slope);
    Ok(DecayClass {
        label,
        fitted_exponent: fit.slope,
        near_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    const M: f64 = 6.6464731e-27;

    fn gaussian_density(grid: Grid, center: f64, var: f64, with_log: bool) -> DensityField {
        let logs: Vec<f64> = grid
            .points()
            .iter()
            .map(|q| -(q - center).powi(2) / var)
            .collect();
        let d = DensityField::from_log(grid, logs).unwrap();
        if with_log {
            d
        } else {
            d.without_log()
        }
    }

    #[test]
    fn uniform_density_has_no_potential_or_force() {
        let g = Grid::new(-1e-9, 1e-9, 101).unwrap();
        let n = DensityField::from_values(g, vec![5e8; 101]).unwrap();
        let v = quantum_potential(&n, M).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
        let f = quantum_force(&n, M, 0.0).unwrap();
        assert!(f.force().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_density_is_degenerate() {
        let g = Grid::new(0.0, 1.0, 16).unwrap();
        let n = DensityField::from_values(g, vec![0.0; 16]).unwrap();
        assert!(matches!(
            quantum_potential(&n, M),
            Err(SqhaError::DegenerateDensity(_))
        ));
    }

    #[test]
    fn gaussian_potential_matches_closed_form() {
        // n = exp(-(q-c)²/Δq²): V_qu = -(ħ²/2m)[(q-c)²/Δq⁴ - 1/Δq²].
        let dq2: f64 = (3e-11_f64).powi(2);
        let c = 1e-11;
        let g = Grid::new(-2e-10, 2e-10, 4001).unwrap();
        let pre = HBAR * HBAR / (2.0 * M);
        for with_log in [true, false] {
            let n = gaussian_density(g, c, dq2, with_log);
            let v = quantum_potential(&n, M).unwrap();
            let scale = pre / dq2;
            for (q, val) in g.points().iter().zip(v.values()) {
                if (q - c).abs() > 1e-10 {
                    continue;
                }
                let expect = -pre * ((q - c).powi(2) / (dq2 * dq2) - 1.0 / dq2);
                assert!(
                    (val - expect).abs() < 1e-3 * scale,
                    "log={with_log} q={q} {val} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn sine_state_potential_is_constant() {
        let k0 = 1.0e10;
        let g = Grid::new(0.0, std::f64::consts::PI / k0, 2001).unwrap();
        let n = DensityField::from_values(
            g,
            g.points().iter().map(|q| (k0 * q).sin().powi(2)).collect(),
        )
        .unwrap();
        let v = quantum_potential(&n, M).unwrap();
        let expect = HBAR * HBAR / (2.0 * M) * k0 * k0;
        for (i, val) in v.values().iter().enumerate() {
            if !(50..=1950).contains(&i) {
                continue;
            }
            assert!((val - expect).abs() < 1e-5 * expect, "{val} vs {expect}");
        }
    }

    #[test]
    fn mass_scaling_and_shape_invariance() {
        let g = Grid::new(-1e-10, 1e-10, 801).unwrap();
        let n = gaussian_density(g, 0.0, 4e-22, false);
        let v1 = quantum_potential(&n, M).unwrap();
        let v2 = quantum_potential(&n, 2.0 * M).unwrap();
        for (a, b) in v1.values().iter().zip(v2.values()) {
            assert!((a - 2.0 * b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
        let v3 = quantum_potential(&n.scaled(17.0).unwrap(), M).unwrap();
        let scale = v1.max_abs();
        for (a, b) in v1.values().iter().zip(v3.values()) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn floor_masks_tails() {
        let g = Grid::new(-1e-9, 1e-9, 401).unwrap();
        let n = gaussian_density(g, 0.0, 1e-20, false);
        let prof = quantum_force(&n, M, 0.0).unwrap();
        assert!(!prof.valid()[0]);
        assert!(prof.valid()[200]);
    }

    #[test]
    fn linear_force_is_ballistic() {
        let g = Grid::new(-1.0, 1.0, 401).unwrap();
        let f = Field::from_fn(g, Unit::FORCE, |q| 3.0 * q).unwrap();
        let prof = QuantumForceProfile::from_force(f, 0.0).unwrap();
        let dc = growth_exponent(&prof, TailWindow::default()).unwrap();
        assert_eq!(dc.label, GrowthClass::Ballistic);
        assert!(dc.fitted_exponent.abs() < 1e-10);
    }

    #[test]
    fn radial_samples_ascend_on_either_side() {
        for origin in [-0.2, 0.2] {
            let g = Grid::new(-1.0, 1.0, 401).unwrap();
            let f = Field::from_fn(g, Unit::FORCE, |q| q - origin).unwrap();
            let prof = QuantumForceProfile::from_force(f, origin).unwrap();
            let s = prof.radial_samples();
            assert!(s.windows(2).all(|w| w[0].0 < w[1].0));
            assert!((s.last().unwrap().0 - 1.0 - origin.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_force_vanishes_on_window() {
        let g = Grid::new(-1.0, 1.0, 401).unwrap();
        let f = Field::from_fn(g, Unit::FORCE, |q| 3.0 * q).unwrap();
        let prof = QuantumForceProfile::from_force(f, 0.0)
            .unwrap()
            .truncated(0.3)
            .unwrap();
        let dc = growth_exponent(&prof, TailWindow::default()).unwrap();
        assert_eq!(dc.label, GrowthClass::AsymptoticallyVanishing);
        assert_eq!(dc.fitted_exponent, f64::NEG_INFINITY);
        assert!((prof.force_at(0.2) - 0.6).abs() < 1e-12);
        assert_eq!(prof.force_at(-0.5), 0.0);
    }

    #[test]
    fn short_window_is_an_error() {
        let g = Grid::new(-1.0, 1.0, 16).unwrap();
        let f = Field::from_fn(g, Unit::FORCE, |q| q).unwrap();
        let prof = QuantumForceProfile::from_force(f, 0.0).unwrap();
        assert!(matches!(
            growth_exponent(&prof, TailWindow::default()),
            Err(SqhaError::ShortTailWindow(_))
        ));
    }

    #[test]
    fn exponent_boundaries() {
        assert_eq!(GrowthClass::from_exponent(0.5).0, GrowthClass::SuperBallistic);
        assert_eq!(GrowthClass::from_exponent(0.05).0, GrowthClass::Ballistic);
        assert_eq!(GrowthClass::from_exponent(-0.4).0, GrowthClass::UnderBallistic);
        let (c, flag) = GrowthClass::from_exponent(-1.05);
        assert_eq!(c, GrowthClass::UnderBallistic);
        assert!(flag);
        let (c, flag) = GrowthClass::from_exponent(-2.0);
        assert_eq!(c, GrowthClass::AsymptoticallyVanishing);
        assert!(!flag);
    }
}
