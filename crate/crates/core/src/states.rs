//! Model Hamiltonians and closed-form densities: the harmonic approximation of
//! a Lennard-Jones well, the He-He square well and the pseudo-Gaussian
//! families with slower-than-Gaussian tails.

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, BOHR, HBAR, K_B};
use crate::density::DensityField;
use crate::error::{Result, SqhaError};
use crate::grid::{integrate_fn, Field, Grid, Unit};
use crate::quantum::{growth_exponent, quantum_force, TailWindow, CLASS_TOLERANCE};

/// Truncation distance of the harmonic force as a fraction of `r_0`.
pub const FIXED_DELTA_RATIO: f64 = 0.11785;

/// Which constant sets the truncation distance `δ / r_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    /// `δ = 0.11785 r_0`.
    #[default]
    Fixed,
    /// Distance from the 12-6 zero crossing to the minimum, `(1 - 2^{-1/6}) r_0`.
    LjZeroCrossing,
}

impl DeltaConvention {
    pub fn ratio(self) -> f64 {
        match self {
            DeltaConvention::Fixed => FIXED_DELTA_RATIO,
            DeltaConvention::LjZeroCrossing => 1.0 - 2f64.powf(-1.0 / 6.0),
        }
    }
}

/// Mass entering the square-well bound-state problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MassConvention {
    #[default]
    Full,
    /// Reduced mass of two identical particles, `m / 2`.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareWellGeometry {
    /// Hard-core radius `σ`, m.
    pub sigma: f64,
    /// Half width `Δ`; the well spans `σ < q < σ + 2Δ`.
    pub half_width: f64,
    /// Well depth as a fraction of the L-J depth.
    pub depth_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub mass: f64,
    /// Lennard-Jones well depth `𝒰`, J.
    pub well_depth: f64,
    /// Position of the L-J minimum (molecular distance), m.
    pub r0: f64,
    pub square_well: Option<SquareWellGeometry>,
    pub mass_convention: MassConvention,
    pub delta_convention: DeltaConvention,
}

impl MaterialParams {
    pub fn new(mass: f64, well_depth: f64, r0: f64) -> Result<Self> {
        let p = MaterialParams {
            mass,
            well_depth,
            r0,
            square_well: None,
            mass_convention: MassConvention::Full,
            delta_convention: DeltaConvention::Fixed,
        };
        p.validate()?;
        Ok(p)
    }

    /// ⁴He with the square-well geometry of the He-He dimer.
    pub fn helium4() -> Self {
        let r0 = 7.9 * BOHR;
        let half_width = 1.54e-10;
        MaterialParams {
            mass: 4.002_602 * ATOMIC_MASS_UNIT,
            well_depth: 10.9 * K_B,
            r0,
            square_well: Some(SquareWellGeometry {
                sigma: r0 - half_width,
                half_width,
                depth_factor: 0.82,
            }),
            mass_convention: MassConvention::Full,
            delta_convention: DeltaConvention::Fixed,
        }
    }

    /// Argon-like generic Lennard-Jones parameters.
    pub fn generic() -> Self {
        MaterialParams {
            mass: 39.948 * ATOMIC_MASS_UNIT,
            well_depth: 119.8 * K_B,
            r0: 3.822e-10,
            square_well: None,
            mass_convention: MassConvention::Full,
            delta_convention: DeltaConvention::Fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("well_depth", self.well_depth),
            ("r0", self.r0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SqhaError::invalid(name, "must be positive and finite"));
            }
        }
        if let Some(w) = self.square_well {
            if !(w.sigma >= 0.0 && w.sigma.is_finite()) {
                return Err(SqhaError::invalid("sigma", "must be non-negative"));
            }
            if !(w.half_width > 0.0 && w.half_width.is_finite()) {
                return Err(SqhaError::invalid("half_width", "must be positive"));
            }
            if !(w.depth_factor > 0.0 && w.depth_factor.is_finite()) {
                return Err(SqhaError::invalid("depth_factor", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn effective_mass(&self) -> f64 {
        match self.mass_convention {
            MassConvention::Full => self.mass,
            MassConvention::Reduced => 0.5 * self.mass,
        }
    }
}

/// Harmonic approximation `V = (k/2)(q - q̄)² - 𝒰` of a Lennard-Jones well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicApprox {
    pub mass: f64,
    pub well_depth: f64,
    /// Curvature `k = 𝒰 (12/r_0)²`, N/m.
    pub k: f64,
    /// Equilibrium position `r_0 / 2`.
    pub center: f64,
    /// Ground level `E_0` (negative inside the well).
    pub e0: f64,
    /// Truncation distance of the quantum force.
    pub delta: f64,
    /// Gaussian exponent `K_0 = √((E_0 + 𝒰) m) / ħ`.
    pub k0: f64,
    /// Set when `(ħ/2)√(k/m) ≥ 𝒰`: the harmonic ground level sits above the well.
    pub above_well: bool,
}

impl HarmonicApprox {
    pub fn omega(&self) -> f64 {
        (self.k / self.mass).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega()
    }

    pub fn potential_at(&self, q: f64) -> f64 {
        0.5 * self.k * (q - self.center).powi(2) - self.well_depth
    }

    pub fn potential(&self, grid: &Grid) -> Result<Field> {
        Field::from_fn(*grid, Unit::ENERGY, |q| self.potential_at(q))
    }

    /// Variance of the ground density, `1 / (4 K_0²)`.
    pub fn ground_variance(&self) -> f64 {
        1.0 / (4.0 * self.k0 * self.k0)
    }
}

pub fn lj_harmonic(params: &MaterialParams) -> Result<HarmonicApprox> {
    params.validate()?;
    let (m, u, r0) = (params.mass, params.well_depth, params.r0);
    let k = u * (12.0 / r0).powi(2);
    let zero_point = 0.5 * HBAR * (k / m).sqrt();
    let e0 = zero_point - u;
    let k0 = (zero_point * m).sqrt() / HBAR;
    Ok(HarmonicApprox {
        mass: m,
        well_depth: u,
        k,
        center: 0.5 * r0,
        e0,
        delta: params.delta_convention.ratio() * r0,
        k0,
        above_well: zero_point >= u,
    })
}

/// Normalised `|ψ_0|² ∝ exp(-2 K_0² (q - q̄)²)` with its exact logarithm.
pub fn harmonic_ground_density(approx: &HarmonicApprox, grid: &Grid) -> Result<DensityField> {
    let required = 4.0 / approx.k0;
    let available = (grid.q_max() - approx.center).min(approx.center - grid.q_min());
    // Grids built at exactly the required span lose a few ulps to rounding.
    if available < required * (1.0 - 1e-12) {
        return Err(SqhaError::GridTooNarrow {
            required,
            available,
        });
    }
    let a = 2.0 * approx.k0 * approx.k0;
    let log_norm = -(std::f64::consts::PI / a).sqrt().ln();
    let logs = grid
        .points()
        .iter()
        .map(|q| log_norm - a * (q - approx.center).powi(2))
        .collect();
    DensityField::from_log(*grid, logs)
}

/// Lowest bound state of the hard-core square well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareWellState {
    /// Wave number inside the well.
    pub k0: f64,
    /// Decay constant outside the well.
    pub kappa: f64,
    /// Bound-state energy, J (negative).
    pub e0: f64,
    pub sigma: f64,
    /// Full width `2Δ`.
    pub width: f64,
    /// Well depth (positive), J.
    pub depth: f64,
    pub mass: f64,
}

impl SquareWellState {
    /// Matching residual `(K cot(K·2Δ) + κ) / K_max`, dimensionless.
    pub fn residual(&self) -> f64 {
        let k_max = (2.0 * self.mass * self.depth).sqrt() / HBAR;
        (self.k0 / (self.k0 * self.width).tan() + self.kappa) / k_max
    }

    /// Unnormalised wave function.
    pub fn psi(&self, q: f64) -> f64 {
        let x = q - self.sigma;
        if x <= 0.0 {
            0.0
        } else if x <= self.width {
            (self.k0 * x).sin()
        } else {
            (self.k0 * self.width).sin() * (-self.kappa * (x - self.width)).exp()
        }
    }

    /// `|ψ|²` normalised to unit integral on `grid`.
    pub fn density(&self, grid: &Grid) -> Result<DensityField> {
        let raw: Vec<f64> = grid.points().iter().map(|&q| self.psi(q).powi(2)).collect();
        let field = Field::new(*grid, raw, Unit::DENSITY)?;
        let norm = crate::grid::integrate(&field);
        if !(norm > 0.0) {
            return Err(SqhaError::DegenerateDensity(
                "grid does not overlap the bound state".into(),
            ));
        }
        DensityField::from_values(*grid, field.values().iter().map(|v| v / norm).collect())
    }
}

pub fn square_well_solve(params: &MaterialParams) -> Result<SquareWellState> {
    params.validate()?;
    let geom = params
        .square_well
        .ok_or_else(|| SqhaError::invalid("square_well", "material has no square-well geometry"))?;
    let mass = params.effective_mass();
    let depth = geom.depth_factor * params.well_depth;
    let width = 2.0 * geom.half_width;
    let k_max = (2.0 * mass * depth).sqrt() / HBAR;
    let lo = std::f64::consts::FRAC_PI_2 / width;
    if k_max <= lo {
        return Err(SqhaError::NoBoundState(format!(
            "K_max·2Δ = {:.4} does not exceed π/2",
            k_max * width
        )));
    }
    // f(K) = K cot(2ΔK) + √(K_max² − K²): positive at K·2Δ = π/2, negative
    // just below the next pole of cot or at K_max.
    let matching = |k: f64| k / (k * width).tan() + (k_max * k_max - k * k).max(0.0).sqrt();
    let pole = std::f64::consts::PI / width;
    let hi = k_max.min(pole * (1.0 - 1e-15));
    let k0 = bisect(matching, lo, hi)?;
    let kappa = (k_max * k_max - k0 * k0).max(0.0).sqrt();
    let e0 = -(HBAR * kappa).powi(2) / (2.0 * mass);
    Ok(SquareWellState {
        k0,
        kappa,
        e0,
        sigma: geom.sigma,
        width,
        depth,
        mass,
    })
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run to floating-point
/// resolution.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(SqhaError::RootFinding(format!(
            "no sign change on [{lo:e}, {hi:e}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tail function `f(q - q̄)` of a pseudo-Gaussian density. Distances inside
/// `f` are measured in units of the family's `tail_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TailShape {
    /// `f = 1`.
    ConstantF,
    /// `f = 1 + |x|`.
    LinearF,
    /// `f = 1 + ln(1 + |x|^h)`.
    LogF { h: f64 },
    /// `f = 1 + |x|^g`, `0 < g ≤ 2`.
    PowerF { g: f64 },
}

/// `n = n_0 exp[-(q-q̄)² / (Δq² (1 + (q-q̄)²/(Λ² f)))]`: Gaussian in the core,
/// `exp(-Λ² f / Δq²)` far out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoGaussianFamily {
    pub shape: TailShape,
    /// Core variance parameter `Δq²`, m².
    pub delta_q2: f64,
    /// Crossover length `Λ`, m.
    pub lambda: f64,
    /// Unit length for the argument of `f`, m.
    pub tail_scale: f64,
    pub center: f64,
}

/// Minimum `Λ² / Δq²` accepted for a pseudo-Gaussian.
pub const MIN_CORE_SEPARATION: f64 = 100.0;

impl PseudoGaussianFamily {
    /// Family with `tail_scale = √Δq²`.
    pub fn new(shape: TailShape, delta_q2: f64, lambda: f64, center: f64) -> Result<Self> {
        let fam = PseudoGaussianFamily {
            shape,
            delta_q2,
            lambda,
            tail_scale: delta_q2.sqrt(),
            center,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_tail_scale(mut self, tail_scale: f64) -> Result<Self> {
        self.tail_scale = tail_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_q2", self.delta_q2),
            ("lambda", self.lambda),
            ("tail_scale", self.tail_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SqhaError::invalid(name, "must be positive and finite"));
            }
        }
        if !self.center.is_finite() {
            return Err(SqhaError::NonFinite("center"));
        }
        if self.lambda * self.lambda < MIN_CORE_SEPARATION * self.delta_q2 {
            return Err(SqhaError::invalid(
                "lambda",
                format!("Λ² must be at least {MIN_CORE_SEPARATION}·Δq²"),
            ));
        }
        match self.shape {
            TailShape::PowerF { g } if !(g > 0.0 && g <= 2.0) => Err(SqhaError::invalid(
                "g",
                format!("power family exponent must lie in (0, 2], got {g}"),
            )),
            TailShape::LogF { h } if !(h > 0.0 && h.is_finite()) => {
                Err(SqhaError::invalid("h", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// `f(r)` at radial distance `r ≥ 0` (m).
    pub fn tail_function(&self, r: f64) -> f64 {
        let x = r / self.tail_scale;
        match self.shape {
            TailShape::ConstantF => 1.0,
            TailShape::LinearF => 1.0 + x,
            TailShape::LogF { h } => 1.0 + x.powf(h).ln_1p(),
            TailShape::PowerF { g } => 1.0 + x.powf(g),
        }
    }

    /// `-ln(n / n_0)` at radial distance `r`.
    pub fn exponent(&self, r: f64) -> f64 {
        let l2f = self.lambda * self.lambda * self.tail_function(r);
        let r2 = r * r;
        r2 * l2f / (self.delta_q2 * (l2f + r2))
    }

    /// `-ln` of the pure Gaussian `exp(-(q-q̄)²/Δq²)` the core mimics.
    pub fn core_exponent(&self, r: f64) -> f64 {
        r * r / self.delta_q2
    }

    /// `ln n_0` that normalises the density on `[q_min, q_max]`.
    pub fn log_normalisation(&self, q_min: f64, q_max: f64) -> f64 {
        let core = self.delta_q2.sqrt();
        let mut total = 0.0;
        for (side_len, sign) in [(q_max - self.center, 1.0), (self.center - q_min, -1.0)] {
            // Geometric shells resolve the core however wide the domain is.
            let _ = sign;
            if side_len <= 0.0 {
                continue;
            }
            let mut a = 0.0;
            let mut b = (core / 8.0).min(side_len);
            loop {
                total += integrate_fn(|r| (-self.exponent(r)).exp(), a, b, 1e-13);
                if b >= side_len {
                    break;
                }
                a = b;
                b = (2.0 * b).min(side_len);
            }
        }
        // Portions of the domain on the far side of the centre are covered
        // above; a centre outside the grid leaves a one-sided integral.
        if self.center < q_min {
            total = integrate_fn(
                |q| (-self.exponent(q - self.center)).exp(),
                q_min,
                q_max,
                1e-13,
            );
        } else if self.center > q_max {
            total = integrate_fn(
                |q| (-self.exponent(self.center - q)).exp(),
                q_min,
                q_max,
                1e-13,
            );
        }
        -total.ln()
    }
}

/// Samples the normalised pseudo-Gaussian onto `grid`, exact logarithm included.
pub fn pseudo_gaussian_density(fam: &PseudoGaussianFamily, grid: &Grid) -> Result<DensityField> {
    fam.validate()?;
    let log_n0 = fam.log_normalisation(grid.q_min(), grid.q_max());
    if !log_n0.is_finite() {
        return Err(SqhaError::DegenerateDensity(
            "normalisation integral vanished".into(),
        ));
    }
    let logs = grid
        .points()
        .iter()
        .map(|q| log_n0 - fam.exponent((q - fam.center).abs()))
        .collect();
    DensityField::from_log(*grid, logs)
}

/// `coefficient · r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Finite sum of power terms in the radial distance `r` (m).
#[derive(Debug, Clone, PartialEq, Default)]
struct PowerSum(Vec<PowerTerm>);

impl PowerSum {
    fn term(coefficient: f64, exponent: f64) -> Self {
        PowerSum(vec![PowerTerm {
            coefficient,
            exponent,
        }])
        .simplified()
    }

    fn simplified(mut self) -> Self {
        self.0
            .sort_by(|a, b| b.exponent.partial_cmp(&a.exponent).expect("finite exponents"));
        let mut out: Vec<PowerTerm> = Vec::with_capacity(self.0.len());
        let mut scale: Vec<f64> = Vec::new();
        for t in self.0 {
            match out.last_mut() {
                Some(last) if (last.exponent - t.exponent).abs() < 1e-9 => {
                    last.coefficient += t.coefficient;
                    let s = scale.last_mut().expect("parallel");
                    *s = s.max(t.coefficient.abs());
                }
                _ => {
                    out.push(t);
                    scale.push(t.coefficient.abs());
                }
            }
        }
        // Cancellation to rounding level counts as an exact zero.
        PowerSum(
            out.into_iter()
                .zip(scale)
                .filter(|(t, s)| t.coefficient != 0.0 && t.coefficient.abs() > 1e-11 * s)
                .map(|(t, _)| t)
                .collect(),
        )
    }

    fn add(&self, other: &PowerSum) -> PowerSum {
        PowerSum(self.0.iter().chain(&other.0).copied().collect()).simplified()
    }

    fn mul(&self, other: &PowerSum) -> PowerSum {
        let mut terms = Vec::with_capacity(self.0.len() * other.0.len());
        for a in &self.0 {
            for b in &other.0 {
                terms.push(PowerTerm {
                    coefficient: a.coefficient * b.coefficient,
                    exponent: a.exponent + b.exponent,
                });
            }
        }
        PowerSum(terms).simplified()
    }

    fn scale(&self, c: f64) -> PowerSum {
        PowerSum(
            self.0
                .iter()
                .map(|t| PowerTerm {
                    coefficient: c * t.coefficient,
                    exponent: t.exponent,
                })
                .collect(),
        )
        .simplified()
    }

    fn derivative(&self) -> PowerSum {
        PowerSum(
            self.0
                .iter()
                .map(|t| PowerTerm {
                    coefficient: t.coefficient * t.exponent,
                    exponent: t.exponent - 1.0,
                })
                .collect(),
        )
        .simplified()
    }

    fn powi(&self, n: usize) -> PowerSum {
        let mut acc = PowerSum::term(1.0, 0.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSource {
    /// Asymptotic expansion of the closed-form density.
    Symbolic,
    /// Log-log fit of the numerically computed force.
    NumericFit,
}

/// Leading large-distance behaviour of the quantum force `-∂V_qu/∂q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDescriptor {
    pub leading: PowerTerm,
    pub subleading: Option<PowerTerm>,
    /// The force tends to zero at large distance.
    pub vanishing_force: bool,
    /// Leading exponent within the class tolerance of zero.
    pub near_boundary: bool,
    pub source: TailSource,
}

impl TailDescriptor {
    /// Exponent `a` of `|q⁻¹ ∂V_qu/∂q| ∝ q^a`.
    pub fn weighted_exponent(&self) -> f64 {
        self.leading.exponent - 1.0
    }

    fn from_terms(leading: PowerTerm, subleading: Option<PowerTerm>, source: TailSource) -> Self {
        TailDescriptor {
            leading,
            subleading,
            vanishing_force: leading.exponent < -CLASS_TOLERANCE,
            near_boundary: leading.exponent.abs() <= CLASS_TOLERANCE,
            source,
        }
    }
}

/// Expansion order in `Λ² f / r²` used for the symbolic tail.
const TAIL_ORDERS: usize = 4;

/// Leading terms of the large-distance quantum force.
///
/// Constant, linear and power families are expanded symbolically; the log
/// family falls back to a numeric fit of the force sampled on `fit_grid`.
pub fn pseudo_gaussian_tail_force(
    fam: &PseudoGaussianFamily,
    mass: f64,
    fit_grid: Option<&Grid>,
) -> Result<TailDescriptor> {
    fam.validate()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SqhaError::invalid("mass", "must be positive"));
    }
    let hb = HBAR * HBAR / (2.0 * mass);
    match fam.shape {
        TailShape::PowerF { g } if (g - 2.0).abs() < 1e-12 => {
            // r²/(Λ² f) tends to ℓ²/Λ²: the tail is Gaussian with a widened variance.
            let var = fam.delta_q2 * (1.0 + (fam.tail_scale / fam.lambda).powi(2));
            Ok(TailDescriptor::from_terms(
                PowerTerm {
                    coefficient: hb * 2.0 / (var * var),
                    exponent: 1.0,
                },
                None,
                TailSource::Symbolic,
            ))
        }
        TailShape::LogF { .. } => {
            let grid = fit_grid.ok_or_else(|| {
                SqhaError::invalid("fit_grid", "log family requires a grid for the numeric fit")
            })?;
            let density = pseudo_gaussian_density(fam, grid)?;
            let profile = quantum_force(&density, mass, fam.center)?;
            let class = growth_exponent(&profile, TailWindow::default())?;
            let exponent = class.fitted_exponent + 1.0;
            let r_ref = 0.85 * profile.radial_extent();
            let coefficient = profile.radial_magnitude(r_ref) / r_ref.powf(exponent);
            Ok(TailDescriptor::from_terms(
                PowerTerm {
                    coefficient,
                    exponent,
                },
                None,
                TailSource::NumericFit,
            ))
        }
        _ => {
            let force = asymptotic_force(fam, hb, TAIL_ORDERS);
            let mut it = force.0.into_iter();
            let leading = it.next().ok_or_else(|| {
                SqhaError::UnclassifiableTail("force expansion vanished to all orders".into())
            })?;
            Ok(TailDescriptor::from_terms(
                leading,
                it.next(),
                TailSource::Symbolic,
            ))
        }
    }
}

/// `-∂V_qu/∂r` expanded in powers of `r` for `r² ≫ Λ² f`.
fn asymptotic_force(fam: &PseudoGaussianFamily, hb: f64, orders: usize) -> PowerSum {
    let l2 = fam.lambda * fam.lambda;
    let ell = fam.tail_scale;
    let f = match fam.shape {
        TailShape::ConstantF => PowerSum::term(1.0, 0.0),
        TailShape::LinearF => PowerSum::term(1.0, 0.0).add(&PowerSum::term(1.0 / ell, 1.0)),
        TailShape::PowerF { g } => {
            PowerSum::term(1.0, 0.0).add(&PowerSum::term(ell.powf(-g), g))
        }
        TailShape::LogF { .. } => unreachable!("log family has no power expansion"),
    };
    // φ = (Λ²/Δq²) f Σ_j (−Λ² f / r²)^j
    let mut phi = PowerSum::default();
    for j in 0..=orders {
        let coeff = (l2 / fam.delta_q2) * (-l2).powi(j as i32);
        let term = f
            .powi(j + 1)
            .mul(&PowerSum::term(coeff, -2.0 * j as f64));
        phi = phi.add(&term);
    }
    let u = phi.scale(-0.5);
    let du = u.derivative();
    let curvature = du.mul(&du).add(&du.derivative());
    let potential = curvature.scale(-hb);
    potential.derivative().scale(-1.0)
}

/// The two closed-form terms of the power-family tail force,
/// `(ħ²/2m)[Λ'⁴g²(2g−2) r^{2g−3}/(2Δq²)² − Λ'²g(g−1)(g−2) r^{g−3}/(2Δq²)]`
/// with `Λ'² = Λ² ℓ^{-g}`.
pub fn power_family_force_terms(fam: &PseudoGaussianFamily, mass: f64) -> Result<[PowerTerm; 2]> {
    let g = match fam.shape {
        TailShape::PowerF { g } => g,
        _ => return Err(SqhaError::invalid("shape", "power family required")),
    };
    let hb = HBAR * HBAR / (2.0 * mass);
    let l2 = fam.lambda * fam.lambda * fam.tail_scale.powf(-g);
    let dq2 = fam.delta_q2;
    Ok([
        PowerTerm {
            coefficient: hb * l2 * l2 * g * g * (2.0 * g - 2.0) / (2.0 * dq2).powi(2),
            exponent: 2.0 * g - 3.0,
        },
        PowerTerm {
            coefficient: -hb * l2 * g * (g - 1.0) * (g - 2.0) / (2.0 * dq2),
            exponent: g - 3.0,
        },
    ])
}
