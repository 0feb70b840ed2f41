//! Spatially correlated, time-white Gaussian noise fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Result, SqhaError};
use crate::grid::{trapezoid, Field, Grid, Unit};
use crate::scales::{correlation_length, Extent, NoiseAmplitude};

/// Margin, in correlation lengths, kept between the domain and its periodic image.
pub const WRAP_MARGIN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub theta: f64,
    pub lambda_c: Extent,
    pub mobility_mu: f64,
    /// Zero-separation covariance `μ·8m(k_BΘ)²/(π³ħ²)`.
    pub amplitude: f64,
    /// Project every sample to zero spatial integral.
    pub conserving: bool,
}

impl NoiseModel {
    /// Model with `λ_c` taken from the noise amplitude `Θ` and the mass.
    pub fn new(amp: NoiseAmplitude, mass: f64, conserving: bool) -> Result<Self> {
        let amp = NoiseAmplitude::new(amp.theta, amp.mobility_mu)?;
        let lambda_c = correlation_length(mass, amp.theta)?;
        let kt = K_B * amp.theta;
        let amplitude = amp.mobility_mu * 8.0 * mass * kt * kt
            / (std::f64::consts::PI.powi(3) * HBAR * HBAR);
        Ok(NoiseModel {
            theta: amp.theta,
            lambda_c,
            mobility_mu: amp.mobility_mu,
            amplitude,
            conserving,
        })
    }

    /// Replaces the correlation length, keeping the amplitude.
    pub fn with_lambda_c(mut self, lambda_c: f64) -> Result<Self> {
        if !(lambda_c > 0.0 && lambda_c.is_finite()) {
            return Err(SqhaError::invalid("lambda_c", "must be positive and finite"));
        }
        self.lambda_c = Extent::Finite(lambda_c);
        Ok(self)
    }

    pub fn is_silent(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Equal-time covariance density at separation `lambda`.
    pub fn covariance(&self, lambda: f64) -> f64 {
        match self.lambda_c {
            _ if self.amplitude == 0.0 => 0.0,
            Extent::Infinite => self.amplitude,
            Extent::Finite(lc) => self.amplitude * (-(lambda / lc).powi(2)).exp(),
        }
    }
}

/// Seeded pseudo-random source. Independent streams split from one seed do
/// not overlap.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            stream: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream `index` derived from the same seed, e.g. one per ensemble member.
    pub fn split(&self, index: u64) -> Self {
        let stream = index.wrapping_add(1);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        RandomStream {
            seed: self.seed,
            stream,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Precomputed circulant-embedding sampler for one model on one grid.
#[derive(Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    grid: Grid,
    /// `√(eigenvalue / M)` of the embedded circulant covariance.
    scale: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    /// Spectral weight clipped for being negative, relative to the total.
    clipped: f64,
}

impl std::fmt::Debug for NoiseSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSampler")
            .field("model", &self.model)
            .field("grid", &self.grid)
            .field("embedding", &self.scale.len())
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl NoiseSampler {
    pub fn new(model: NoiseModel, grid: Grid) -> Result<Self> {
        if model.is_silent() {
            return Ok(NoiseSampler {
                model,
                grid,
                scale: Vec::new(),
                fft: None,
                clipped: 0.0,
            });
        }
        let lc = match model.lambda_c {
            Extent::Finite(lc) => lc,
            Extent::Infinite => {
                return Err(SqhaError::invalid(
                    "lambda_c",
                    "noise with non-zero amplitude needs a finite correlation length",
                ))
            }
        };
        let h = grid.spacing();
        if h >= 0.5 * lc {
            return Err(SqhaError::UnderResolvedKernel {
                spacing: h,
                limit: 0.5 * lc,
            });
        }
        let needed = grid.len() as f64 + WRAP_MARGIN * lc / h;
        let m = (needed.ceil() as usize).next_power_of_two();
        let mut c: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(model.covariance(j.min(m - j) as f64 * h), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut c);
        let total: f64 = c.iter().map(|z| z.re.abs()).sum();
        let negative: f64 = c.iter().map(|z| (-z.re).max(0.0)).sum();
        let scale = c
            .iter()
            .map(|z| (z.re.max(0.0) / m as f64).sqrt())
            .collect();
        Ok(NoiseSampler {
            model,
            grid,
            scale,
            fft: Some(fft),
            clipped: negative / total,
        })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn embedding_len(&self) -> usize {
        self.scale.len()
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped
    }

    /// Raw sample values, before any conservation projection.
    pub(crate) fn sample_raw(&self, stream: &mut RandomStream) -> Vec<f64> {
        let n = self.grid.len();
        let Some(fft) = &self.fft else {
            return vec![0.0; n];
        };
        let mut z: Vec<Complex64> = self
            .scale
            .iter()
            .map(|s| {
                let re = stream.standard_normal();
                let im = stream.standard_normal();
                Complex64::new(s * re, s * im)
            })
            .collect();
        fft.process(&mut z);
        z[..n].iter().map(|c| c.re).collect()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> Field {
        let mut values = self.sample_raw(stream);
        if self.model.conserving {
            project_zero_integral(&mut values, self.grid.spacing());
        }
        Field::new(self.grid, values, Unit::DENSITY_RATE).expect("finite noise sample")
    }
}

/// Subtracts the constant that makes the trapezoid integral vanish.
pub(crate) fn project_zero_integral(values: &mut [f64], h: f64) {
    let length = h * (values.len() - 1) as f64;
    let mean = trapezoid(values, h) / length;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

/// One correlated sample on `grid`; builds a fresh sampler.
pub fn sample_field(model: &NoiseModel, grid: &Grid, stream: &mut RandomStream) -> Result<Field> {
    Ok(NoiseSampler::new(*model, *grid)?.sample(stream))
}

/// Ensemble estimate of `⟨η(q)η(q+λ)⟩` averaged over all pairs in the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceAudit {
    pub separations: Vec<f64>,
    pub empirical: Vec<f64>,
    pub target: Vec<f64>,
    pub samples: usize,
}

impl CovarianceAudit {
    /// Largest `|empirical/target − 1|` over the audited separations.
    pub fn max_relative_error(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.target)
            .map(|(e, t)| (e / t - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Samples `samples` fields and measures the covariance at each lag (in cells).
pub fn audit_covariance(
    sampler: &NoiseSampler,
    lags: &[usize],
    samples: usize,
    stream: &mut RandomStream,
) -> Result<CovarianceAudit> {
    let n = sampler.grid().len();
    if let Some(&bad) = lags.iter().find(|&&l| l >= n) {
        return Err(SqhaError::invalid(
            "lags",
            format!("lag {bad} exceeds the grid of {n} points"),
        ));
    }
    if samples == 0 {
        return Err(SqhaError::invalid("samples", "must be positive"));
    }
    let mut acc = vec![0.0; lags.len()];
    for _ in 0..samples {
        let f = sampler.sample(stream);
        let v = f.values();
        for (a, &lag) in acc.iter_mut().zip(lags) {
            let s: f64 = (0..n - lag).map(|i| v[i] * v[i + lag]).sum();
            *a += s / (n - lag) as f64;
        }
    }
    let h = sampler.grid().spacing();
    let separations: Vec<f64> = lags.iter().map(|&l| l as f64 * h).collect();
    Ok(CovarianceAudit {
        target: separations
            .iter()
            .map(|&s| sampler.model().covariance(s))
            .collect(),
        empirical: acc.into_iter().map(|a| a / samples as f64).collect(),
        separations,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: f64 = 6.6464731e-27;

    fn model(conserving: bool) -> NoiseModel {
        NoiseModel::new(NoiseAmplitude::new(2.0, 1.0).unwrap(), M, conserving)
            .unwrap()
            .with_lambda_c(1.0)
            .unwrap()
    }

    #[test]
    fn covariance_shape() {
        let m = NoiseModel::new(NoiseAmplitude::new(2.17, 1.0).unwrap(), M, true).unwrap();
        let kt = K_B * 2.17;
        let expect = 8.0 * M * kt * kt / (std::f64::consts::PI.powi(3) * HBAR * HBAR);
        assert!((m.covariance(0.0) / expect - 1.0).abs() < 1e-14);
        let lc = m.lambda_c.as_f64();
        assert!((m.covariance(lc) / m.covariance(0.0) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(m.covariance(lc), m.covariance(-lc));
        let silent = NoiseModel::new(NoiseAmplitude::new(0.0, 1.0).unwrap(), M, true).unwrap();
        assert_eq!(silent.covariance(0.0), 0.0);
        assert!(silent.lambda_c.is_infinite());
    }

    #[test]
    fn amplitude_scales_as_theta_squared() {
        let a = NoiseModel::new(NoiseAmplitude::new(1.0, 1.0).unwrap(), M, true).unwrap();
        let b = NoiseModel::new(NoiseAmplitude::new(3.0, 1.0).unwrap(), M, true).unwrap();
        assert!((b.amplitude / a.amplitude - 9.0).abs() < 1e-12);
        let ratio = a.lambda_c.as_f64() / b.lambda_c.as_f64();
        assert!((ratio - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn negative_theta_is_rejected() {
        let err = NoiseAmplitude::new(-1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("theta must be ≥ 0"));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = Grid::new(0.0, 100.0, 101).unwrap();
        assert!(matches!(
            sample_field(&model(false), &g, &mut RandomStream::new(1)),
            Err(SqhaError::UnderResolvedKernel { .. })
        ));
    }

    #[test]
    fn same_seed_same_field() {
        let g = Grid::new(0.0, 20.0, 201).unwrap();
        let a = sample_field(&model(false), &g, &mut RandomStream::new(7)).unwrap();
        let b = sample_field(&model(false), &g, &mut RandomStream::new(7)).unwrap();
        let c = sample_field(&model(false), &g, &mut RandomStream::new(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_streams_differ() {
        let base = RandomStream::new(3);
        let mut a = base.split(0);
        let mut b = base.split(1);
        let mut a2 = base.split(0);
        let x = a.standard_normal();
        assert_ne!(x, b.standard_normal());
        assert_eq!(x, a2.standard_normal());
    }

    #[test]
    fn conserving_samples_integrate_to_zero() {
        let g = Grid::new(0.0, 30.0, 301).unwrap();
        let s = NoiseSampler::new(model(true), g).unwrap();
        let mut rs = RandomStream::new(11);
        for _ in 0..50 {
            let f = s.sample(&mut rs);
            let rms = (f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64).sqrt();
            assert!(crate::grid::integrate(&f).abs() <= 1e-12 * rms * g.length());
        }
    }

    #[test]
    fn silent_model_samples_zero() {
        let m = NoiseModel::new(NoiseAmplitude::new(0.0, 1.0).unwrap(), M, true).unwrap();
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let f = sample_field(&m, &g, &mut RandomStream::new(1)).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empirical_covariance_matches_kernel() {
        let g = Grid::new(0.0, 500.0, 2001).unwrap();
        let s = NoiseSampler::new(model(false), g).unwrap();
        assert!(s.clipped_fraction() < 1e-12);
        let audit = audit_covariance(&s, &[0, 4, 8], 2000, &mut RandomStream::new(5)).unwrap();
        let rel: Vec<f64> = audit
            .empirical
            .iter()
            .zip(&audit.target)
            .map(|(e, t)| (e / t - 1.0).abs())
            .collect();
        assert!(rel[0] < 0.02 && rel[1] < 0.05 && rel[2] < 0.2, "{audit:?}");
        assert!(audit.empirical[0] > audit.empirical[1] && audit.empirical[1] > audit.empirical[2]);
    }

    #[test]
    fn projection_changes_kernel_by_domain_ratio() {
        let g = Grid::new(0.0, 60.0, 601).unwrap();
        let mut rs = RandomStream::new(9);
        let raw = NoiseSampler::new(model(false), g).unwrap();
        let proj = NoiseSampler::new(model(true), g).unwrap();
        let a = audit_covariance(&raw, &[0, 10], 1500, &mut rs.clone()).unwrap();
        let b = audit_covariance(&proj, &[0, 10], 1500, &mut rs).unwrap();
        for k in 0..2 {
            let shift = (a.empirical[k] - b.empirical[k]).abs() / a.target[0];
            assert!(shift < 3.0 / 60.0, "{shift}");
        }
    }
}
