//! Correlation and nonlocality length scales and the regime classifiers built
//! on them.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::{HBAR, K_B};
use crate::error::{Result, SqhaError};
use crate::quantum::{growth_exponent, GrowthClass, QuantumForceProfile, TailWindow};

/// A length that may be unbounded. Serialises as a number or `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    Finite(f64),
    Infinite,
}

impl Extent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extent::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extent::Finite(v) => Some(*v),
            Extent::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            Extent::Infinite
        } else {
            Extent::Finite(v)
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extent::Finite(v) => write!(f, "{v:e}"),
            Extent::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtentRepr {
    Number(f64),
    Marker(String),
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extent::Finite(v) => ExtentRepr::Number(*v).serialize(s),
            Extent::Infinite => ExtentRepr::Marker("infinite".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Extent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtentRepr::deserialize(d)? {
            ExtentRepr::Number(v) => Ok(Extent::Finite(v)),
            ExtentRepr::Marker(m) if m == "infinite" => Ok(Extent::Infinite),
            ExtentRepr::Marker(m) => Err(serde::de::Error::custom(format!(
                "expected a number or \"infinite\", got {m:?}"
            ))),
        }
    }
}

/// Noise amplitude `Θ` (K) and the mobility form factor `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAmplitude {
    pub theta: f64,
    pub mobility_mu: f64,
}

impl NoiseAmplitude {
    pub fn new(theta: f64, mobility_mu: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(SqhaError::invalid("theta", "theta must be ≥ 0"));
        }
        if !(mobility_mu > 0.0 && mobility_mu.is_finite()) {
            return Err(SqhaError::invalid("mobility_mu", "must be positive"));
        }
        Ok(NoiseAmplitude { theta, mobility_mu })
    }
}

/// `λ_c = (π/2)^{3/2} ħ / √(2 m k_B Θ)`; infinite in the noiseless limit.
pub fn correlation_length(mass: f64, theta: f64) -> Result<Extent> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SqhaError::invalid("mass", "must be positive"));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(SqhaError::invalid("theta", "theta must be ≥ 0"));
    }
    if theta == 0.0 {
        return Ok(Extent::Infinite);
    }
    let prefactor = (std::f64::consts::FRAC_PI_2).powf(1.5);
    Ok(Extent::Finite(
        prefactor * HBAR / (2.0 * mass * K_B * theta).sqrt(),
    ))
}

/// Noise amplitude at which `λ_c(Θ) = length`.
pub fn theta_for_correlation_length(mass: f64, length: f64) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SqhaError::invalid("mass", "must be positive"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(SqhaError::invalid("length", "must be positive"));
    }
    let prefactor = (std::f64::consts::FRAC_PI_2).powi(3);
    Ok(prefactor * HBAR * HBAR / (2.0 * mass * K_B * length * length))
}

/// Whether `∫ |q⁻¹ ∂V_qu/∂q| dq` converges, judged from the fitted tail.
///
/// Exponents inside the tolerance band around `-1` report `false`.
pub fn convergence_test(profile: &QuantumForceProfile) -> Result<bool> {
    let class = growth_exponent(profile, TailWindow::default())?;
    if class.fitted_exponent.is_nan() {
        return Err(SqhaError::UnclassifiableTail("NaN exponent".into()));
    }
    Ok(class.label == GrowthClass::AsymptoticallyVanishing)
}

/// Weighted range of the quantum force,
/// `λ_q = 2 ∫₀^∞ |q⁻¹ ∂V_qu/∂q| dq / (λ_c⁻¹ |∂V_qu/∂q|_{q=λ_c})`,
/// with `q` measured from the profile origin.
///
/// The integral is taken over the grid up to `integration_cutoff` (or the
/// truncation radius, or the grid edge, whichever is nearest) and continued
/// beyond it by the fitted power-law tail.
pub fn nonlocality_length(
    profile: &QuantumForceProfile,
    lambda_c: f64,
    integration_cutoff: f64,
) -> Result<Extent> {
    if !(lambda_c > 0.0 && lambda_c.is_finite()) {
        return Err(SqhaError::invalid("lambda_c", "must be positive and finite"));
    }
    if !(integration_cutoff > 0.0) {
        return Err(SqhaError::invalid("integration_cutoff", "must be positive"));
    }
    let class = growth_exponent(profile, TailWindow::default())?;
    if class.label != GrowthClass::AsymptoticallyVanishing {
        return Ok(Extent::Infinite);
    }

    let extent = profile.radial_extent();
    if lambda_c > extent {
        return Err(SqhaError::LambdaQUndefined(format!(
            "lambda_c = {lambda_c:e} m lies beyond the grid (radial extent {extent:e} m)"
        )));
    }
    if matches!(profile.support(), Some(s) if lambda_c > s) {
        return Err(SqhaError::LambdaQUndefined(format!(
            "lambda_c = {lambda_c:e} m lies beyond the force support"
        )));
    }
    let at_lambda_c = profile.radial_magnitude(lambda_c);
    if at_lambda_c == 0.0 || !at_lambda_c.is_finite() {
        return Err(SqhaError::LambdaQUndefined(
            "no quantum force at q = lambda_c".into(),
        ));
    }

    let support_limited = matches!(profile.support(), Some(s) if s <= integration_cutoff.min(extent));
    let upper = profile
        .support()
        .unwrap_or(f64::INFINITY)
        .min(integration_cutoff)
        .min(extent);

    let samples: Vec<(f64, f64)> = profile
        .radial_samples()
        .into_iter()
        .filter(|&(r, _)| r < upper)
        .map(|(r, m)| (r, m / r))
        .collect();
    if samples.len() < 2 {
        return Err(SqhaError::LambdaQUndefined(
            "fewer than two radial samples below the integration limit".into(),
        ));
    }
    // Integrand at r = 0 by linear extrapolation from the first two samples.
    let (r1, g1) = samples[0];
    let (r2, g2) = samples[1];
    let g0 = g1 - (g2 - g1) / (r2 - r1) * r1;
    let mut points = Vec::with_capacity(samples.len() + 2);
    points.push((0.0, g0.max(0.0)));
    points.extend(samples);
    let (r_last, _) = *points.last().expect("non-empty");
    if upper > r_last {
        points.push((upper, profile.radial_magnitude(upper) / upper));
    }
    let mut integral: f64 = points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();

    if !support_limited && class.fitted_exponent.is_finite() {
        // ∫_upper^∞ g(upper) (r/upper)^a dr with a < -1.
        let a = class.fitted_exponent;
        let g_upper = points.last().expect("non-empty").1;
        integral += g_upper * upper / (-a - 1.0);
    }

    let lambda_q = 2.0 * lambda_c * integral / at_lambda_c;
    if !lambda_q.is_finite() {
        return Err(SqhaError::NonFinite("lambda_q"));
    }
    Ok(Extent::from_f64(lambda_q))
}

/// Dynamical regime selected by comparing the problem length with `λ_c`, `λ_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonlocalDeterministic,
    NonlocalStochastic,
    LocalStochastic,
    Indeterminate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NonlocalDeterministic => "nonlocal_deterministic",
            Regime::NonlocalStochastic => "nonlocal_stochastic",
            Regime::LocalStochastic => "local_stochastic",
            Regime::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_RATIO_THRESHOLD: f64 = 0.1;

/// "Much smaller than" is read as `a ≤ ratio_threshold · b`.
pub fn classify_regime(
    delta_l: f64,
    lambda_c: Extent,
    lambda_q: Extent,
    ratio_threshold: f64,
) -> Result<Regime> {
    if !(delta_l > 0.0 && delta_l.is_finite()) {
        return Err(SqhaError::invalid("delta_L", "must be positive"));
    }
    for (name, e) in [("lambda_c", lambda_c), ("lambda_q", lambda_q)] {
        if let Extent::Finite(v) = e {
            if !(v > 0.0) {
                return Err(SqhaError::invalid(name, "must be positive"));
            }
        }
    }
    if !(ratio_threshold > 0.0 && ratio_threshold < 1.0) {
        return Err(SqhaError::invalid("ratio_threshold", "must lie in (0, 1)"));
    }
    let (lc, lq) = (lambda_c.as_f64(), lambda_q.as_f64());
    let r = ratio_threshold;
    Ok(if delta_l <= r * lc.min(lq) {
        Regime::NonlocalDeterministic
    } else if lc < delta_l && delta_l <= r * lq {
        Regime::NonlocalStochastic
    } else if lc.max(lq) <= r * delta_l {
        Regime::LocalStochastic
    } else {
        Regime::Indeterminate
    })
}

/// Class of a wave-function modulus decaying as `exp(-c |q|^h)`.
pub fn classify_decay(h: f64) -> Result<GrowthClass> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SqhaError::invalid("h", "must be positive"));
    }
    Ok(if (h - 2.0).abs() <= 1e-12 {
        GrowthClass::Ballistic
    } else if h > 2.0 {
        GrowthClass::SuperBallistic
    } else if h >= 1.5 {
        GrowthClass::UnderBallistic
    } else {
        GrowthClass::AsymptoticallyVanishing
    })
}

/// Length scales of one problem and the regime they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub lambda_c: Extent,
    pub lambda_q: Extent,
    pub delta_l: f64,
    pub regime: Regime,
    pub ratio_threshold: f64,
    pub decay_class: Option<GrowthClass>,
}

impl ScaleReport {
    pub fn new(
        delta_l: f64,
        lambda_c: Extent,
        lambda_q: Extent,
        ratio_threshold: f64,
        decay_class: Option<GrowthClass>,
    ) -> Result<Self> {
        let regime = classify_regime(delta_l, lambda_c, lambda_q, ratio_threshold)?;
        Ok(ScaleReport {
            lambda_c,
            lambda_q,
            delta_l,
            regime,
            ratio_threshold,
            decay_class,
        })
    }
}
