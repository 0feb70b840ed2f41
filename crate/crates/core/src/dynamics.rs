//! Time integration of the hydrodynamic (Madelung) equations.
//!
//! The state is the triple `(n, v, S)`: density, velocity `v = ∂S/∂q / m` and
//! action. Where `n > 0` the continuity and momentum equations
//!
//! ```text
//! ∂n/∂t = −∂(n v)/∂q
//! ∂v/∂t = −v ∂v/∂q − ∂(V + V_qu)/∂q / m
//! ```
//!
//! are equivalent to the linear equation for `ψ = √n e^{iS/ħ}`. The quantum
//! schemes advance that linear form with fourth-order Runge-Kutta and read
//! `(n, v, S)` back after every step. A direct Eulerian discretisation of the
//! two equations above amplifies grid-scale waves without bound as they enter
//! the thin tails of the density, so it is only used for the classical limit,
//! where `V_qu` is dropped.

use serde::{Deserialize, Serialize};

use rustfft::num_complex::Complex64;

use crate::constants::HBAR;
use crate::density::DensityField;
use crate::error::{Result, SqhaError};
use crate::grid::{first_derivative, periodic_sum, trapezoid, Closure, Field, Grid, Unit};
use crate::noise::{NoiseModel, NoiseSampler, RandomStream};
use crate::quantum::quantum_force;

/// Cells inspected at each end by the boundary-mass guard.
pub const GUARD_CELLS: usize = 5;
/// Density ratio (to the peak) that trips the boundary-mass guard.
pub const GUARD_RATIO: f64 = 1e-6;
/// Largest `|z|` on the imaginary axis inside the RK4 stability region, with margin.
const RK4_IMAGINARY_REACH: f64 = 2.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    DeterministicQuantum,
    StochasticQuantum,
    ClassicalLimit,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::DeterministicQuantum => "deterministic_quantum",
            Scheme::StochasticQuantum => "stochastic_quantum",
            Scheme::ClassicalLimit => "classical_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Reflecting ends: no current crosses `q_min` or `q_max`.
    #[default]
    ZeroFlux,
    /// Period `n_points · spacing`: the point after `q_max` is `q_min`.
    Periodic,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::ZeroFlux => "zero_flux",
            Boundary::Periodic => "periodic",
        }
    }

    fn closure(self) -> Closure {
        match self {
            Boundary::ZeroFlux => Closure::OneSided,
            Boundary::Periodic => Closure::Periodic,
        }
    }

    fn integral(self, values: &[f64], h: f64) -> f64 {
        match self {
            Boundary::ZeroFlux => trapezoid(values, h),
            Boundary::Periodic => periodic_sum(values, h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub boundary: Boundary,
    /// Density, as a fraction of the peak, below which the velocity is not
    /// resolved (set to zero) and to which noise kicks are floored.
    pub density_floor: f64,
}

impl IntegratorConfig {
    pub const DEFAULT_CFL_SAFETY: f64 = 0.5;
    pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

    pub fn new(dt: f64, scheme: Scheme) -> Self {
        IntegratorConfig {
            dt,
            scheme,
            cfl_safety: Self::DEFAULT_CFL_SAFETY,
            boundary: Boundary::ZeroFlux,
            density_floor: Self::DEFAULT_DENSITY_FLOOR,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SqhaError::invalid("dt", "must be positive and finite"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(SqhaError::invalid("cfl_safety", "must lie in (0, 1]"));
        }
        if !(self.density_floor >= 0.0 && self.density_floor < 1.0) {
            return Err(SqhaError::invalid("density_floor", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Dispersion bound `cfl_safety · m h² / ħ`.
    pub fn cfl_limit(&self, mass: f64, grid: &Grid) -> f64 {
        self.cfl_safety * mass * grid.spacing().powi(2) / HBAR
    }

    /// Largest stable step once the potential's spread is included: the
    /// spectral radius of the discrete Hamiltonian over `ħ` must stay inside
    /// the RK4 stability region.
    pub fn stability_limit(&self, mass: f64, grid: &Grid, potential: &Field) -> f64 {
        let (lo, hi) = potential_range(potential.values());
        let radius = 2.0 * HBAR / (mass * grid.spacing().powi(2)) + 0.5 * (hi - lo) / HBAR;
        self.cfl_limit(mass, grid)
            .min(self.cfl_safety * RK4_IMAGINARY_REACH / radius)
    }

    pub fn check(&self, mass: f64, grid: &Grid) -> Result<()> {
        self.validate()?;
        check_mass(mass)?;
        let limit = self.cfl_limit(mass, grid);
        if self.dt > limit {
            return Err(SqhaError::CflViolation {
                dt: self.dt,
                limit,
            });
        }
        Ok(())
    }
}

fn potential_range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn check_mass(mass: f64) -> Result<()> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SqhaError::invalid("mass", "must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub time: f64,
    density: DensityField,
    velocity: Field,
    action: Field,
    /// Wave function the quantum schemes left behind, kept to avoid
    /// rebuilding it from `(n, S)` at every step.
    #[serde(skip)]
    psi: Option<Vec<Complex64>>,
}

impl HydroState {
    /// State with the action reconstructed from the velocity, `S = m ∫ v dq`,
    /// fixed to zero at `q_min`.
    pub fn new(density: DensityField, velocity: Field, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let grid = *density.grid();
        if velocity.grid() != &grid {
            return Err(SqhaError::LengthMismatch {
                expected: grid.len(),
                got: velocity.values().len(),
            });
        }
        let density = with_log(density)?;
        let h = grid.spacing();
        let v = velocity.values();
        let mut s = vec![0.0; v.len()];
        for i in 1..v.len() {
            s[i] = s[i - 1] + 0.5 * mass * h * (v[i] + v[i - 1]);
        }
        Ok(HydroState {
            time: 0.0,
            action: Field::new(grid, s, Unit::ACTION)?,
            velocity: Field::new(grid, velocity.into_values(), Unit::VELOCITY)?,
            density,
            psi: None,
        })
    }

    pub fn at_rest(density: DensityField, mass: f64) -> Result<Self> {
        let v = Field::zeros(*density.grid(), Unit::VELOCITY);
        HydroState::new(density, v, mass)
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    pub fn velocity(&self) -> &Field {
        &self.velocity
    }

    /// Action, defined up to an additive constant.
    pub fn action(&self) -> &Field {
        &self.action
    }

    fn log_density(&self) -> &[f64] {
        self.density.log_values().expect("hydro states carry ln n")
    }

    /// `√n e^{iS/ħ}`.
    pub fn wave_function(&self) -> Vec<Complex64> {
        if let Some(psi) = &self.psi {
            return psi.clone();
        }
        self.log_density()
            .iter()
            .zip(self.action.values())
            .map(|(&rho, &s)| Complex64::from_polar((0.5 * rho).exp(), s / HBAR))
            .collect()
    }

    /// Reads `(n, v, S)` off a wave function. The velocity is set to zero
    /// where the density is below `floor` times its peak, and at reflecting ends.
    fn from_wave(
        time: f64,
        grid: Grid,
        psi: Vec<Complex64>,
        mass: f64,
        boundary: Boundary,
        floor: f64,
    ) -> Result<Self> {
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(SqhaError::StepRejected {
                time,
                reason: "non-finite wave function".into(),
            });
        }
        let n: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let peak = n.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(SqhaError::StepRejected {
                time,
                reason: "density vanished".into(),
            });
        }
        let resolved = (floor * peak).max(f64::MIN_POSITIVE);
        let h = grid.spacing();
        let closure = boundary.closure();
        let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
        let im: Vec<f64> = psi.iter().map(|z| z.im).collect();
        let (dre, dim) = (first_derivative(&re, h, closure), first_derivative(&im, h, closure));
        let mut v: Vec<f64> = (0..psi.len())
            .map(|i| {
                if n[i] <= resolved {
                    0.0
                } else {
                    HBAR / mass * (re[i] * dim[i] - im[i] * dre[i]) / n[i]
                }
            })
            .collect();
        if boundary == Boundary::ZeroFlux {
            let last = v.len() - 1;
            v[0] = 0.0;
            v[last] = 0.0;
        }
        let mut s = vec![0.0; psi.len()];
        s[0] = HBAR * psi[0].arg();
        for i in 1..psi.len() {
            let step = (psi[i] * psi[i - 1].conj()).arg();
            s[i] = s[i - 1] + HBAR * step;
        }
        let rho = n.iter().map(|&x| x.max(f64::MIN_POSITIVE).ln()).collect();
        Ok(HydroState {
            time,
            density: DensityField::from_log(grid, rho)?,
            velocity: Field::new(grid, v, Unit::VELOCITY)?,
            action: Field::new(grid, s, Unit::ACTION)?,
            psi: Some(psi),
        })
    }

    fn from_parts(time: f64, grid: Grid, rho: Vec<f64>, v: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if rho.iter().chain(&v).chain(&s).any(|x| !x.is_finite()) {
            return Err(SqhaError::StepRejected {
                time,
                reason: "non-finite density, velocity or action".into(),
            });
        }
        Ok(HydroState {
            time,
            density: DensityField::from_log(grid, rho)?,
            velocity: Field::new(grid, v, Unit::VELOCITY)?,
            action: Field::new(grid, s, Unit::ACTION)?,
            psi: None,
        })
    }

    /// Copy translated by `cells` grid points with periodic wrap.
    pub fn rolled(&self, cells: isize) -> Result<Self> {
        let n = self.grid().len() as isize;
        let idx = |i: isize| ((i - cells).rem_euclid(n)) as usize;
        let shift = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| v[idx(i)]).collect() };
        let mut out = HydroState::from_parts(
            self.time,
            *self.grid(),
            shift(self.log_density()),
            shift(self.velocity.values()),
            shift(self.action.values()),
        )?;
        out.psi = self
            .psi
            .as_ref()
            .map(|p| (0..n).map(|i| p[idx(i)]).collect());
        Ok(out)
    }
}

/// Ensures a log representation, flooring exact zeros at a tiny fraction of the peak.
fn with_log(density: DensityField) -> Result<DensityField> {
    if density.log_values().is_some() {
        return Ok(density);
    }
    let max = density.max();
    if !(max > 0.0) {
        return Err(SqhaError::DegenerateDensity("density is identically zero".into()));
    }
    let floor = crate::quantum::DEFAULT_FLOOR_RATIO * max;
    let logs = density.values().iter().map(|&n| n.max(floor).ln()).collect();
    DensityField::from_log(*density.grid(), logs)
}

/// Difference between the quantum forces of a perturbed and a reference
/// density; the classical scheme drops it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalResidue {
    pub delta_force: Field,
    pub neglected: bool,
}

pub fn classical_residue(
    perturbed: &DensityField,
    reference: &DensityField,
    mass: f64,
) -> Result<ClassicalResidue> {
    if perturbed.grid() != reference.grid() {
        return Err(SqhaError::invalid("reference", "grids differ"));
    }
    let a = quantum_force(perturbed, mass, 0.0)?;
    let b = quantum_force(reference, mass, 0.0)?;
    let values = a
        .force()
        .values()
        .iter()
        .zip(b.force().values())
        .map(|(x, y)| x - y)
        .collect();
    Ok(ClassicalResidue {
        delta_force: Field::new(*perturbed.grid(), values, Unit::FORCE)?,
        neglected: true,
    })
}

/// `V_qu = −(ħ²/2m) (∂²√n)/√n` with the second difference taken on
/// `√n_j / √n_i`, i.e. from differences of `ln n` only, so it stays finite
/// however small `n` gets.
pub(crate) fn ratio_quantum_potential(rho: &[f64], h: f64, closure: Closure, mass: f64) -> Vec<f64> {
    let n = rho.len();
    let c = HBAR * HBAR / (2.0 * mass * h * h);
    let r = |i: usize, j: usize| (0.5 * (rho[j] - rho[i])).exp() - 1.0;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        *o = -c * (r(i, i + 1) + r(i, i - 1));
    }
    match closure {
        Closure::OneSided => {
            out[0] = -c * (-5.0 * r(0, 1) + 4.0 * r(0, 2) - r(0, 3));
            out[n - 1] = -c * (-5.0 * r(n - 1, n - 2) + 4.0 * r(n - 1, n - 3) - r(n - 1, n - 4));
        }
        Closure::Periodic => {
            out[0] = -c * (r(0, 1) + r(0, n - 1));
            out[n - 1] = -c * (r(n - 1, 0) + r(n - 1, n - 2));
        }
    }
    out
}

/// `dψ/dt = −(i/ħ) [−(ħ²/2m) ∂²ψ + (V − V_ref) ψ]`. Reflecting ends mirror
/// the wave function about the end points.
fn schrodinger_rhs(psi: &[Complex64], pot: &[f64], mass: f64, h: f64, boundary: Boundary) -> Vec<Complex64> {
    let n = psi.len();
    let kin = HBAR / (2.0 * mass * h * h);
    let lap = |i: usize| -> Complex64 {
        let (l, r) = match (i, boundary) {
            (0, Boundary::ZeroFlux) => (psi[1], psi[1]),
            (0, Boundary::Periodic) => (psi[n - 1], psi[1]),
            (i, Boundary::ZeroFlux) if i == n - 1 => (psi[n - 2], psi[n - 2]),
            (i, Boundary::Periodic) if i == n - 1 => (psi[n - 2], psi[0]),
            (i, _) => (psi[i - 1], psi[i + 1]),
        };
        (l - psi[i]) + (r - psi[i])
    };
    (0..n)
        .map(|i| {
            let h_psi = -kin * lap(i) + psi[i] * (pot[i] / HBAR);
            Complex64::new(h_psi.im, -h_psi.re)
        })
        .collect()
}

/// One RK4 step of the quantum drift with signed `dt`.
pub(crate) fn advance_quantum(
    state: &HydroState,
    potential: &[f64],
    mass: f64,
    dt: f64,
    boundary: Boundary,
    floor: f64,
) -> Result<HydroState> {
    let grid = *state.grid();
    let h = grid.spacing();
    // A constant shift of V only rotates the global phase; centring it keeps
    // the step inside the stability region.
    let (lo, hi) = potential_range(potential);
    let reference = 0.5 * (lo + hi);
    let pot: Vec<f64> = potential.iter().map(|v| v - reference).collect();
    let psi = state.wave_function();
    let f = |y: &[Complex64]| schrodinger_rhs(y, &pot, mass, h, boundary);
    let shifted = |y: &[Complex64], a: f64, k: &[Complex64]| -> Vec<Complex64> {
        y.iter().zip(k).map(|(y, k)| y + k * a).collect()
    };
    let k1 = f(&psi);
    let k2 = f(&shifted(&psi, 0.5 * dt, &k1));
    let k3 = f(&shifted(&psi, 0.5 * dt, &k2));
    let k4 = f(&shifted(&psi, dt, &k3));
    let next: Vec<Complex64> = (0..psi.len())
        .map(|i| psi[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    HydroState::from_wave(state.time + dt, grid, next, mass, boundary, floor)
}

/// Pressureless Eulerian flow in `ρ = ln n`:
/// `∂ρ/∂t = −(v ∂ρ/∂q + ∂v/∂q)`, `∂v/∂t = −v ∂v/∂q − ∂V/∂q / m`,
/// `∂S/∂t = −(m v²/2 + V)`.
fn classical_rhs(
    rho: &[f64],
    v: &[f64],
    pot1: &[f64],
    pot: &[f64],
    mass: f64,
    h: f64,
    boundary: Boundary,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let closure = boundary.closure();
    let n = rho.len();
    let rho1 = first_derivative(rho, h, closure);
    let v1 = first_derivative(v, h, closure);
    let drho = (0..n).map(|i| -(v[i] * rho1[i] + v1[i])).collect();
    let mut dv: Vec<f64> = (0..n).map(|i| -v[i] * v1[i] - pot1[i] / mass).collect();
    let ds = (0..n).map(|i| -(0.5 * mass * v[i] * v[i] + pot[i])).collect();
    if boundary == Boundary::ZeroFlux {
        dv[0] = 0.0;
        dv[n - 1] = 0.0;
    }
    (drho, dv, ds)
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

pub(crate) fn advance_classical(
    state: &HydroState,
    potential: &[f64],
    mass: f64,
    dt: f64,
    boundary: Boundary,
) -> Result<HydroState> {
    let h = state.grid().spacing();
    let pot1 = first_derivative(potential, h, boundary.closure());
    let f = |r: &[f64], v: &[f64]| classical_rhs(r, v, &pot1, potential, mass, h, boundary);
    let rho = state.log_density();
    let v = state.velocity.values();
    let s = state.action.values();
    let (k1r, k1v, k1s) = f(rho, v);
    let (k2r, k2v, k2s) = f(&axpy(rho, 0.5 * dt, &k1r), &axpy(v, 0.5 * dt, &k1v));
    let (k3r, k3v, k3s) = f(&axpy(rho, 0.5 * dt, &k2r), &axpy(v, 0.5 * dt, &k2v));
    let (k4r, k4v, k4s) = f(&axpy(rho, dt, &k3r), &axpy(v, dt, &k3v));
    let combine = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };
    HydroState::from_parts(
        state.time + dt,
        *state.grid(),
        combine(rho, &k1r, &k2r, &k3r, &k4r),
        combine(v, &k1v, &k2v, &k3v, &k4v),
        combine(s, &k1s, &k2s, &k3s, &k4s),
    )
}

fn check_inputs(state: &HydroState, potential: &Field, mass: f64, cfg: &IntegratorConfig) -> Result<()> {
    if potential.grid() != state.grid() {
        return Err(SqhaError::LengthMismatch {
            expected: state.grid().len(),
            got: potential.values().len(),
        });
    }
    cfg.check(mass, state.grid())?;
    if cfg.scheme != Scheme::ClassicalLimit {
        let limit = cfg.stability_limit(mass, state.grid(), potential);
        if cfg.dt > limit {
            return Err(SqhaError::CflViolation {
                dt: cfg.dt,
                limit,
            });
        }
    }
    Ok(())
}

fn require_scheme(cfg: &IntegratorConfig, scheme: Scheme) -> Result<()> {
    if cfg.scheme != scheme {
        return Err(SqhaError::SchemeMismatch(format!(
            "configured {}, called {}",
            cfg.scheme.as_str(),
            scheme.as_str()
        )));
    }
    Ok(())
}

pub fn step_deterministic(
    state: &HydroState,
    potential: &Field,
    mass: f64,
    cfg: &IntegratorConfig,
) -> Result<HydroState> {
    require_scheme(cfg, Scheme::DeterministicQuantum)?;
    check_inputs(state, potential, mass, cfg)?;
    advance_quantum(state, potential.values(), mass, cfg.dt, cfg.boundary, cfg.density_floor)
}

/// Momentum driven by `−∂V/∂q` alone; the quantum-force residue is neglected.
pub fn step_classical(
    state: &HydroState,
    potential: &Field,
    mass: f64,
    cfg: &IntegratorConfig,
) -> Result<HydroState> {
    require_scheme(cfg, Scheme::ClassicalLimit)?;
    check_inputs(state, potential, mass, cfg)?;
    advance_classical(state, potential.values(), mass, cfg.dt, cfg.boundary)
}

pub fn step_stochastic(
    state: &HydroState,
    potential: &Field,
    mass: f64,
    noise: &NoiseModel,
    stream: &mut RandomStream,
    cfg: &IntegratorConfig,
) -> Result<HydroState> {
    require_scheme(cfg, Scheme::StochasticQuantum)?;
    check_inputs(state, potential, mass, cfg)?;
    let sampler = NoiseSampler::new(*noise, *state.grid())?;
    stochastic_step(state, potential, mass, &sampler, stream, cfg).map(|(s, _)| s)
}

/// Drift step plus Euler-Maruyama kick `η √dt` on the density, keeping the
/// phase. Returns the new state and the relative size of the renormalisation
/// applied after flooring.
fn stochastic_step(
    state: &HydroState,
    potential: &Field,
    mass: f64,
    sampler: &NoiseSampler,
    stream: &mut RandomStream,
    cfg: &IntegratorConfig,
) -> Result<(HydroState, f64)> {
    let drift = advance_quantum(
        state,
        potential.values(),
        mass,
        cfg.dt,
        cfg.boundary,
        cfg.density_floor,
    )?;
    if sampler.model().is_silent() {
        return Ok((drift, 0.0));
    }
    let grid = *state.grid();
    let h = grid.spacing();
    let mut eta = sampler.sample_raw(stream);
    if sampler.model().conserving {
        let mean = cfg.boundary.integral(&eta, h) / cfg.boundary.integral(&vec![1.0; eta.len()], h);
        eta.iter_mut().for_each(|e| *e -= mean);
    }
    let before = cfg.boundary.integral(state.density.values(), h);
    let sqrt_dt = cfg.dt.sqrt();
    let psi = drift.wave_function();
    let mut n: Vec<f64> = psi
        .iter()
        .zip(&eta)
        .map(|(z, e)| z.norm_sqr() + e * sqrt_dt)
        .collect();
    let peak = n.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(SqhaError::StepRejected {
            time: drift.time,
            reason: "noise kick removed all density".into(),
        });
    }
    let floor = (cfg.density_floor * peak).max(f64::MIN_POSITIVE);
    n.iter_mut().for_each(|x| *x = x.max(floor));
    let mut correction = 0.0;
    if sampler.model().conserving {
        let factor = before / cfg.boundary.integral(&n, h);
        correction = (factor - 1.0).abs();
        n.iter_mut().for_each(|x| *x *= factor);
    }
    let kicked = psi
        .iter()
        .zip(&n)
        .map(|(z, &x)| {
            let phase = if z.norm_sqr() > 0.0 { z.arg() } else { 0.0 };
            Complex64::from_polar(x.sqrt(), phase)
        })
        .collect();
    let next = HydroState::from_wave(drift.time, grid, kicked, mass, cfg.boundary, cfg.density_floor)?;
    Ok((next, correction))
}

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub time: f64,
    pub norm: f64,
    pub mean_q: f64,
    pub variance: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_qu: f64,
}

impl Observables {
    pub fn total_energy(&self) -> f64 {
        self.e_kin + self.e_pot + self.e_qu
    }
}

/// Norm, moments and the three energy terms, weighted by the (normalised)
/// density.
pub fn observables(
    state: &HydroState,
    potential: &Field,
    mass: f64,
    boundary: Boundary,
) -> Observables {
    let grid = state.grid();
    let h = grid.spacing();
    let n = state.density.values();
    let q = grid.points();
    let integral = |f: &dyn Fn(usize) -> f64| -> f64 {
        let v: Vec<f64> = (0..n.len()).map(f).collect();
        boundary.integral(&v, h)
    };
    let norm = integral(&|i| n[i]);
    let mean_q = integral(&|i| n[i] * q[i]) / norm;
    let variance = integral(&|i| n[i] * (q[i] - mean_q).powi(2)) / norm;
    let v = state.velocity.values();
    let e_kin = integral(&|i| 0.5 * mass * v[i] * v[i] * n[i]) / norm;
    let pot = potential.values();
    let e_pot = integral(&|i| pot[i] * n[i]) / norm;
    let qu = ratio_quantum_potential(state.log_density(), h, boundary.closure(), mass);
    let e_qu = integral(&|i| qu[i] * n[i]) / norm;
    Observables {
        time: state.time,
        norm,
        mean_q,
        variance,
        e_kin,
        e_pot,
        e_qu,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub observables: Observables,
    pub state: HydroState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub steps_taken: usize,
    /// Set when a step was rejected; the snapshots up to that point are kept.
    pub failure: Option<SqhaError>,
    /// Time at which density first reached the boundary cells ("domain too small").
    pub domain_too_small_at: Option<f64>,
    /// Largest relative renormalisation applied after noise flooring.
    pub max_renormalization: f64,
}

impl Trajectory {
    pub fn rows(&self) -> impl Iterator<Item = &Observables> {
        self.snapshots.iter().map(|s| &s.observables)
    }

    pub fn last_state(&self) -> Option<&HydroState> {
        self.snapshots.last().map(|s| &s.state)
    }
}

fn boundary_mass_exceeded(state: &HydroState) -> bool {
    let n = state.density.values();
    let k = GUARD_CELLS.min(n.len() / 2);
    let peak = state.density.max();
    n[..k].iter().chain(&n[n.len() - k..]).any(|&x| x > GUARD_RATIO * peak)
}

/// Steps from `initial` to `t_end`, emitting a snapshot every
/// `output_stride` steps and after the final one. Configuration errors are
/// returned immediately; a rejected step ends the run with a failure record.
pub fn run(
    initial: &HydroState,
    potential: &Field,
    mass: f64,
    cfg: &IntegratorConfig,
    noise: Option<(&NoiseModel, &mut RandomStream)>,
    t_end: f64,
    output_stride: usize,
) -> Result<Trajectory> {
    check_inputs(initial, potential, mass, cfg)?;
    if output_stride == 0 {
        return Err(SqhaError::invalid("output_stride", "must be at least 1"));
    }
    if !(t_end >= initial.time && t_end.is_finite()) {
        return Err(SqhaError::invalid(
            "t_end",
            "must be finite and not before the initial time",
        ));
    }
    let mut noise = match (cfg.scheme, noise) {
        (Scheme::StochasticQuantum, Some((model, stream))) => {
            Some((NoiseSampler::new(*model, *initial.grid())?, stream))
        }
        (Scheme::StochasticQuantum, None) => {
            return Err(SqhaError::SchemeMismatch(
                "stochastic scheme requires a noise model".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(SqhaError::SchemeMismatch(format!(
                "noise model given to the {} scheme",
                cfg.scheme.as_str()
            )))
        }
        (_, None) => None,
    };
    let span = t_end - initial.time;
    let steps = if span == 0.0 {
        0
    } else {
        (span / cfg.dt - 1e-9).ceil().max(1.0) as usize
    };
    let snapshot = |s: &HydroState| Snapshot {
        observables: observables(s, potential, mass, cfg.boundary),
        state: s.clone(),
    };
    let mut traj = Trajectory {
        snapshots: vec![snapshot(initial)],
        steps_taken: 0,
        failure: None,
        domain_too_small_at: None,
        max_renormalization: 0.0,
    };
    let guard = cfg.boundary == Boundary::ZeroFlux;
    if guard && boundary_mass_exceeded(initial) {
        traj.domain_too_small_at = Some(initial.time);
    }
    let pot = potential.values();
    let mut state = initial.clone();
    for k in 1..=steps {
        let dt = if k == steps {
            t_end - state.time
        } else {
            cfg.dt
        };
        let step_cfg = IntegratorConfig { dt, ..*cfg };
        let next = match (cfg.scheme, noise.as_mut()) {
            (Scheme::StochasticQuantum, Some((sampler, stream))) => {
                stochastic_step(&state, potential, mass, sampler, stream, &step_cfg).map(
                    |(s, c)| {
                        traj.max_renormalization = traj.max_renormalization.max(c);
                        s
                    },
                )
            }
            (Scheme::ClassicalLimit, _) => advance_classical(&state, pot, mass, dt, cfg.boundary),
            _ => advance_quantum(&state, pot, mass, dt, cfg.boundary, cfg.density_floor),
        };
        match next {
            Ok(s) => state = s,
            Err(e) => {
                traj.failure = Some(e);
                break;
            }
        }
        traj.steps_taken = k;
        if guard && traj.domain_too_small_at.is_none() && boundary_mass_exceeded(&state) {
            traj.domain_too_small_at = Some(state.time);
        }
        if k % output_stride == 0 || k == steps {
            traj.snapshots.push(snapshot(&state));
        }
    }
    Ok(traj)
}
