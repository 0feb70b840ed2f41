//! Experiment configuration: a line-based `key = value` document with
//! `[section]` headers.
//!
//! ```text
//! [experiment]
//! kind = simulate
//! seed = 7
//! [material]
//! preset = helium4
//! mass = 4.0026 u
//! ```
//!
//! Values with a dimension accept a unit suffix and are stored in SI; a bare
//! number is read as SI. `#` starts a comment. Unknown sections and keys are
//! errors, as are duplicates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Boundary, Scheme};
use crate::error::SqhaError;
use crate::states::{DeltaConvention, MassConvention, MaterialParams, SquareWellGeometry, TailShape};
use crate::units::{format_quantity, parse_quantity, Dimension};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

trait Keyword: Sized + Copy + PartialEq + 'static {
    const ALL: &'static [(&'static str, Self)];

    fn parse_keyword(s: &str) -> Result<Self, String> {
        Self::ALL
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|(k, _)| *k).collect();
                format!("expected one of {}, got {s:?}", names.join(", "))
            })
    }

    fn keyword(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, v)| *v == self)
            .map(|(k, _)| *k)
            .expect("every variant is listed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Simulate,
    LambdaC,
    LambdaQ,
    Classify,
    CaseLindemann,
    CaseHelium,
    NoiseAudit,
}

impl Keyword for ExperimentKind {
    const ALL: &'static [(&'static str, Self)] = &[
        ("simulate", ExperimentKind::Simulate),
        ("lambda_c", ExperimentKind::LambdaC),
        ("lambda_q", ExperimentKind::LambdaQ),
        ("classify", ExperimentKind::Classify),
        ("case_lindemann", ExperimentKind::CaseLindemann),
        ("case_helium", ExperimentKind::CaseHelium),
        ("noise_audit", ExperimentKind::NoiseAudit),
    ];
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        self.keyword()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Harmonic ground state of the material's well.
    #[default]
    Ground,
    /// Gaussian packet of the configured width.
    Gaussian,
}

impl Keyword for InitialState {
    const ALL: &'static [(&'static str, Self)] = &[
        ("ground", InitialState::Ground),
        ("gaussian", InitialState::Gaussian),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    Harmonic,
    Free,
}

impl Keyword for PotentialKind {
    const ALL: &'static [(&'static str, Self)] = &[
        ("harmonic", PotentialKind::Harmonic),
        ("free", PotentialKind::Free),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Generic,
    Helium4,
    Custom,
}

impl Keyword for Preset {
    const ALL: &'static [(&'static str, Self)] = &[
        ("generic", Preset::Generic),
        ("helium4", Preset::Helium4),
        ("custom", Preset::Custom),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FamilyName {
    Constant,
    Linear,
    Log,
    Power,
}

impl Keyword for FamilyName {
    const ALL: &'static [(&'static str, Self)] = &[
        ("constant", FamilyName::Constant),
        ("linear", FamilyName::Linear),
        ("log", FamilyName::Log),
        ("power", FamilyName::Power),
    ];
}

impl Keyword for Scheme {
    const ALL: &'static [(&'static str, Self)] = &[
        ("deterministic_quantum", Scheme::DeterministicQuantum),
        ("stochastic_quantum", Scheme::StochasticQuantum),
        ("classical_limit", Scheme::ClassicalLimit),
    ];
}

impl Keyword for Boundary {
    const ALL: &'static [(&'static str, Self)] = &[
        ("zero_flux", Boundary::ZeroFlux),
        ("periodic", Boundary::Periodic),
    ];
}

impl Keyword for MassConvention {
    const ALL: &'static [(&'static str, Self)] = &[
        ("full", MassConvention::Full),
        ("reduced", MassConvention::Reduced),
    ];
}

impl Keyword for DeltaConvention {
    const ALL: &'static [(&'static str, Self)] = &[
        ("fixed", DeltaConvention::Fixed),
        ("lj_zero_crossing", DeltaConvention::LjZeroCrossing),
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub t_end: Option<f64>,
    pub output_stride: usize,
    pub initial: InitialState,
    pub potential: PotentialKind,
    /// Standard deviation of a Gaussian initial density.
    pub width: Option<f64>,
    /// Displacement of the initial packet from the well centre.
    pub offset: f64,
    /// Problem length compared against `λ_c` and `λ_q` by `classify`.
    pub delta_l: Option<f64>,
    pub family: TailShape,
    /// Core width `Δq` of the pseudo-Gaussian family.
    pub delta_q: f64,
    /// Crossover length `Λ` of the pseudo-Gaussian family.
    pub lambda: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: ExperimentKind::Simulate,
            seed: 0,
            t_end: None,
            output_stride: 10,
            initial: InitialState::Ground,
            potential: PotentialKind::Harmonic,
            width: None,
            offset: 0.0,
            delta_l: None,
            family: TailShape::PowerF { g: 1.4 },
            delta_q: 1e-10,
            lambda: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MaterialSection {
    /// Defaults to `helium4` for `case_helium` and `generic` otherwise.
    pub preset: Option<Preset>,
    pub mass: Option<f64>,
    pub well_depth: Option<f64>,
    pub r0: Option<f64>,
    pub sigma: Option<f64>,
    pub half_width: Option<f64>,
    pub depth_factor: Option<f64>,
    pub mass_convention: MassConvention,
    pub delta_convention: DeltaConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct GridSection {
    /// Defaults per experiment, see [`ExperimentConfig::grid_points`].
    pub points: Option<usize>,
    /// Half-span around the well centre; defaults to `6 / K_0`.
    pub half_span: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSection {
    pub scheme: Scheme,
    /// Defaults to the largest stable step.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub boundary: Boundary,
    pub density_floor: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            scheme: Scheme::DeterministicQuantum,
            dt: None,
            cfl_safety: 0.5,
            boundary: Boundary::ZeroFlux,
            density_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    pub theta: f64,
    pub mobility: f64,
    pub conserving: bool,
    /// Overrides the correlation length implied by `theta`.
    pub lambda_c: Option<f64>,
    pub samples: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            theta: 0.0,
            mobility: 1.0,
            conserving: true,
            lambda_c: None,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct OutputSection {
    pub csv: Option<String>,
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub material: MaterialSection,
    pub grid: GridSection,
    pub integrator: IntegratorSection,
    pub noise: NoiseSection,
    pub output: OutputSection,
}

pub const SECTIONS: &[&str] = &["experiment", "material", "grid", "integrator", "noise", "output"];

fn quantity(raw: &str, dim: Dimension) -> Result<f64, String> {
    parse_quantity(raw, dim).map_err(|e| e.to_string())
}

fn number(raw: &str) -> Result<f64, String> {
    quantity(raw, Dimension::Dimensionless)
}

fn count(raw: &str) -> Result<usize, String> {
    raw.parse().map_err(|_| format!("expected a non-negative integer, got {raw:?}"))
}

fn flag(raw: &str) -> Result<bool, String> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {raw:?}")),
    }
}

fn family_with(current: TailShape, name: FamilyName) -> TailShape {
    let (g, h) = match current {
        TailShape::PowerF { g } => (g, 1.0),
        TailShape::LogF { h } => (1.4, h),
        _ => (1.4, 1.0),
    };
    match name {
        FamilyName::Constant => TailShape::ConstantF,
        FamilyName::Linear => TailShape::LinearF,
        FamilyName::Log => TailShape::LogF { h },
        FamilyName::Power => TailShape::PowerF { g },
    }
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, section: &str, key: &str, raw: &str) -> Result<(), String> {
        use Dimension::*;
        let raw = raw.trim();
        if raw.is_empty() {
            return Err("empty value".into());
        }
        let e = &mut self.experiment;
        let m = &mut self.material;
        match (section, key) {
            ("experiment", "kind") => e.kind = ExperimentKind::parse_keyword(raw)?,
            ("experiment", "seed") => {
                e.seed = raw
                    .parse()
                    .map_err(|_| format!("expected an unsigned 64-bit integer, got {raw:?}"))?
            }
            ("experiment", "t_end") => e.t_end = Some(quantity(raw, Time)?),
            ("experiment", "output_stride") => e.output_stride = count(raw)?,
            ("experiment", "initial") => e.initial = InitialState::parse_keyword(raw)?,
            ("experiment", "potential") => e.potential = PotentialKind::parse_keyword(raw)?,
            ("experiment", "width") => e.width = Some(quantity(raw, Length)?),
            ("experiment", "offset") => e.offset = quantity(raw, Length)?,
            ("experiment", "delta_l") => e.delta_l = Some(quantity(raw, Length)?),
            ("experiment", "family") => {
                e.family = family_with(e.family, FamilyName::parse_keyword(raw)?)
            }
            ("experiment", "g") => match e.family {
                TailShape::PowerF { .. } => e.family = TailShape::PowerF { g: number(raw)? },
                _ => return Err("`g` applies to family = power only".into()),
            },
            ("experiment", "h") => match e.family {
                TailShape::LogF { .. } => e.family = TailShape::LogF { h: number(raw)? },
                _ => return Err("`h` applies to family = log only".into()),
            },
            ("experiment", "delta_q") => e.delta_q = quantity(raw, Length)?,
            ("experiment", "lambda") => e.lambda = quantity(raw, Length)?,
            ("material", "preset") => m.preset = Some(Preset::parse_keyword(raw)?),
            ("material", "mass") => m.mass = Some(quantity(raw, Mass)?),
            ("material", "well_depth") => m.well_depth = Some(quantity(raw, Energy)?),
            ("material", "r0") => m.r0 = Some(quantity(raw, Length)?),
            ("material", "sigma") => m.sigma = Some(quantity(raw, Length)?),
            ("material", "half_width") => m.half_width = Some(quantity(raw, Length)?),
            ("material", "depth_factor") => m.depth_factor = Some(number(raw)?),
            ("material", "mass_convention") => {
                m.mass_convention = MassConvention::parse_keyword(raw)?
            }
            ("material", "delta_convention") => {
                m.delta_convention = DeltaConvention::parse_keyword(raw)?
            }
            ("grid", "points") => self.grid.points = Some(count(raw)?),
            ("grid", "half_span") => self.grid.half_span = Some(quantity(raw, Length)?),
            ("integrator", "scheme") => self.integrator.scheme = Scheme::parse_keyword(raw)?,
            ("integrator", "dt") => self.integrator.dt = Some(quantity(raw, Time)?),
            ("integrator", "cfl_safety") => self.integrator.cfl_safety = number(raw)?,
            ("integrator", "boundary") => self.integrator.boundary = Boundary::parse_keyword(raw)?,
            ("integrator", "density_floor") => self.integrator.density_floor = number(raw)?,
            ("noise", "theta") => self.noise.theta = quantity(raw, Temperature)?,
            ("noise", "mobility") => self.noise.mobility = number(raw)?,
            ("noise", "conserving") => self.noise.conserving = flag(raw)?,
            ("noise", "lambda_c") => self.noise.lambda_c = Some(quantity(raw, Length)?),
            ("noise", "samples") => self.noise.samples = count(raw)?,
            ("output", "csv") => self.output.csv = Some(raw.to_string()),
            ("output", "json") => self.output.json = Some(raw.to_string()),
            _ if !SECTIONS.contains(&section) => return Err(format!("unknown section [{section}]")),
            _ => return Err(format!("unknown key in [{section}]")),
        }
        Ok(())
    }

    /// Range checks that do not depend on other keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| Err(ConfigError::new(None, key, msg));
        let e = &self.experiment;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.noise.theta < 0.0 {
            return bad("theta", "theta must be ≥ 0");
        }
        if !positive(self.noise.mobility) {
            return bad("mobility", "must be positive");
        }
        if matches!(self.noise.lambda_c, Some(v) if !positive(v)) {
            return bad("lambda_c", "must be positive");
        }
        if self.noise.samples == 0 {
            return bad("samples", "must be at least 1");
        }
        if matches!(self.grid.points, Some(n) if n < crate::grid::MIN_POINTS) {
            return bad("points", "a grid needs at least 8 points");
        }
        if matches!(self.grid.half_span, Some(v) if !positive(v)) {
            return bad("half_span", "must be positive");
        }
        if matches!(self.integrator.dt, Some(v) if !positive(v)) {
            return bad("dt", "must be positive");
        }
        if !(self.integrator.cfl_safety > 0.0 && self.integrator.cfl_safety <= 1.0) {
            return bad("cfl_safety", "must lie in (0, 1]");
        }
        if !(self.integrator.density_floor >= 0.0 && self.integrator.density_floor < 1.0) {
            return bad("density_floor", "must lie in [0, 1)");
        }
        if e.output_stride == 0 {
            return bad("output_stride", "must be at least 1");
        }
        if matches!(e.t_end, Some(v) if !(v >= 0.0)) {
            return bad("t_end", "must be non-negative");
        }
        for (key, v) in [("width", e.width), ("delta_l", e.delta_l)] {
            if matches!(v, Some(x) if !positive(x)) {
                return bad(key, "must be positive");
            }
        }
        if !positive(e.delta_q) {
            return bad("delta_q", "must be positive");
        }
        if !positive(e.lambda) {
            return bad("lambda", "must be positive");
        }
        if self.preset() == Preset::Custom {
            let m = &self.material;
            for (key, v) in [("mass", m.mass), ("well_depth", m.well_depth), ("r0", m.r0)] {
                if v.is_none() {
                    return bad(key, "required when preset = custom");
                }
            }
        }
        Ok(())
    }

    pub fn preset(&self) -> Preset {
        self.material.preset.unwrap_or(match self.experiment.kind {
            ExperimentKind::CaseHelium => Preset::Helium4,
            _ => Preset::Generic,
        })
    }

    /// Grid size: the explicit value, or 2001 for `case_lindemann`, 20001
    /// for `classify` (tail fits), 8193 for `noise_audit` and 401 otherwise.
    pub fn grid_points(&self) -> usize {
        self.grid.points.unwrap_or(match self.experiment.kind {
            ExperimentKind::CaseLindemann | ExperimentKind::LambdaQ => 2001,
            ExperimentKind::Classify => crate::cases::TAIL_FIT_POINTS,
            ExperimentKind::NoiseAudit => 8193,
            _ => 401,
        })
    }

    /// Material parameters: the preset with any explicit keys applied.
    pub fn material(&self) -> Result<MaterialParams, SqhaError> {
        let m = &self.material;
        let preset = self.preset();
        let mut p = match preset {
            Preset::Helium4 => MaterialParams::helium4(),
            Preset::Generic | Preset::Custom => MaterialParams::generic(),
        };
        if preset == Preset::Custom {
            p.square_well = None;
        }
        p.mass = m.mass.unwrap_or(p.mass);
        p.well_depth = m.well_depth.unwrap_or(p.well_depth);
        p.r0 = m.r0.unwrap_or(p.r0);
        p.mass_convention = m.mass_convention;
        p.delta_convention = m.delta_convention;
        if m.sigma.is_some() || m.half_width.is_some() || m.depth_factor.is_some() {
            let base = p.square_well.unwrap_or(SquareWellGeometry {
                sigma: 0.0,
                half_width: 0.0,
                depth_factor: 1.0,
            });
            let half_width = m.half_width.unwrap_or(base.half_width);
            p.square_well = Some(SquareWellGeometry {
                sigma: m.sigma.unwrap_or(if base.half_width > 0.0 {
                    base.sigma
                } else {
                    p.r0 - half_width
                }),
                half_width,
                depth_factor: m.depth_factor.unwrap_or(base.depth_factor),
            });
        }
        p.validate()?;
        Ok(p)
    }

    /// Every key with its current value, in SI with unit suffix.
    pub fn entries(&self) -> Vec<(&'static str, &'static str, String)> {
        use Dimension::*;
        let q = format_quantity;
        let num = |v: f64| format!("{v:e}");
        let e = &self.experiment;
        let m = &self.material;
        let mut out = vec![
            ("experiment", "kind", e.kind.keyword().to_string()),
            ("experiment", "seed", e.seed.to_string()),
        ];
        let opt = |out: &mut Vec<_>, s, k, v: Option<String>| {
            if let Some(v) = v {
                out.push((s, k, v));
            }
        };
        opt(&mut out, "experiment", "t_end", e.t_end.map(|v| q(v, Time)));
        out.push(("experiment", "output_stride", e.output_stride.to_string()));
        out.push(("experiment", "initial", e.initial.keyword().to_string()));
        out.push(("experiment", "potential", e.potential.keyword().to_string()));
        opt(&mut out, "experiment", "width", e.width.map(|v| q(v, Length)));
        out.push(("experiment", "offset", q(e.offset, Length)));
        opt(&mut out, "experiment", "delta_l", e.delta_l.map(|v| q(v, Length)));
        let (name, param) = match e.family {
            TailShape::ConstantF => ("constant", None),
            TailShape::LinearF => ("linear", None),
            TailShape::LogF { h } => ("log", Some(("h", h))),
            TailShape::PowerF { g } => ("power", Some(("g", g))),
        };
        out.push(("experiment", "family", name.to_string()));
        if let Some((k, v)) = param {
            out.push(("experiment", k, num(v)));
        }
        out.push(("experiment", "delta_q", q(e.delta_q, Length)));
        out.push(("experiment", "lambda", q(e.lambda, Length)));

        opt(&mut out, "material", "preset", m.preset.map(|v| v.keyword().to_string()));
        opt(&mut out, "material", "mass", m.mass.map(|v| q(v, Mass)));
        opt(&mut out, "material", "well_depth", m.well_depth.map(|v| q(v, Energy)));
        opt(&mut out, "material", "r0", m.r0.map(|v| q(v, Length)));
        opt(&mut out, "material", "sigma", m.sigma.map(|v| q(v, Length)));
        opt(&mut out, "material", "half_width", m.half_width.map(|v| q(v, Length)));
        opt(&mut out, "material", "depth_factor", m.depth_factor.map(num));
        out.push(("material", "mass_convention", m.mass_convention.keyword().to_string()));
        out.push(("material", "delta_convention", m.delta_convention.keyword().to_string()));

        opt(&mut out, "grid", "points", self.grid.points.map(|v| v.to_string()));
        opt(&mut out, "grid", "half_span", self.grid.half_span.map(|v| q(v, Length)));

        let i = &self.integrator;
        out.push(("integrator", "scheme", i.scheme.keyword().to_string()));
        opt(&mut out, "integrator", "dt", i.dt.map(|v| q(v, Time)));
        out.push(("integrator", "cfl_safety", num(i.cfl_safety)));
        out.push(("integrator", "boundary", i.boundary.keyword().to_string()));
        out.push(("integrator", "density_floor", num(i.density_floor)));

        let n = &self.noise;
        out.push(("noise", "theta", q(n.theta, Temperature)));
        out.push(("noise", "mobility", num(n.mobility)));
        out.push(("noise", "conserving", n.conserving.to_string()));
        opt(&mut out, "noise", "lambda_c", n.lambda_c.map(|v| q(v, Length)));
        out.push(("noise", "samples", n.samples.to_string()));

        opt(&mut out, "output", "csv", self.output.csv.clone());
        opt(&mut out, "output", "json", self.output.json.clone());
        out
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut section: Option<String> = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(line_no), line, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::new(Some(line_no), name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(line_no), line, "expected `key = value`"))?;
        let key = key.trim();
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError::new(Some(line_no), key, "key outside any section"))?;
        if !seen.insert((sec.to_string(), key.to_string())) {
            return Err(ConfigError::new(Some(line_no), key, "duplicate key"));
        }
        cfg.set(sec, key, value)
            .map_err(|msg| ConfigError::new(Some(line_no), key, msg))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a document that [`parse_config`] reads back to an equal config.
pub fn to_config_text(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut current = "";
    for (section, key, value) in cfg.entries() {
        if section != current {
            if !current.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{section}]\n"));
            current = section;
        }
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::K_B;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let lind = parse_config("[experiment]\nkind = case_lindemann\n").unwrap();
        assert_eq!(lind.experiment.kind, ExperimentKind::CaseLindemann);
        assert_eq!(lind.material().unwrap(), MaterialParams::generic());
    }

    #[test]
    fn units_are_converted() {
        let cfg = parse_config(
            "[material]\npreset = helium4\nmass = 4.0026 u # helium\nwell_depth = 10.9 kB\n\
             [noise]\ntheta = 2.17 K\n",
        )
        .unwrap();
        let p = cfg.material().unwrap();
        assert!((p.mass / 6.6465e-27 - 1.0).abs() < 1e-4);
        assert_eq!(p.well_depth, 10.9 * K_B);
        assert_eq!(cfg.noise.theta, 2.17);
        assert!(p.square_well.is_some());
    }

    #[test]
    fn negative_theta_is_rejected() {
        let err = parse_config("[noise]\ntheta = -1 K\n").unwrap_err();
        assert_eq!(err.key, "theta");
        assert_eq!(err.message, "theta must be ≥ 0");
    }

    #[test]
    fn errors_name_key_and_line() {
        let err = parse_config("[grid]\npoints = 100\nspacing = 1 nm\n").unwrap_err();
        assert_eq!((err.line, err.key.as_str()), (Some(3), "spacing"));
        let err = parse_config("[grid]\npoints = 1 nm\n").unwrap_err();
        assert_eq!((err.line, err.key.as_str()), (Some(2), "points"));
        let err = parse_config("[weather]\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        let err = parse_config("points = 3\n").unwrap_err();
        assert_eq!(err.message, "key outside any section");
        let err = parse_config("[grid]\npoints = 9\npoints = 9\n").unwrap_err();
        assert_eq!(err.message, "duplicate key");
        let err = parse_config("[material]\nr0 = 2 K\n").unwrap_err();
        assert!(err.message.contains("not a length"), "{err}");
        let err = parse_config("[material]\npreset = custom\nmass = 1 u\n").unwrap_err();
        assert_eq!(err.key, "well_depth");
    }

    #[test]
    fn family_keys() {
        let cfg = parse_config("[experiment]\nfamily = power\ng = 2\n").unwrap();
        assert_eq!(cfg.experiment.family, TailShape::PowerF { g: 2.0 });
        let cfg = parse_config("[experiment]\nfamily = log\nh = 0.5\n").unwrap();
        assert_eq!(cfg.experiment.family, TailShape::LogF { h: 0.5 });
        assert!(parse_config("[experiment]\nfamily = linear\ng = 2\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let src = "[experiment]\nkind = simulate\nt_end = 2 ps\nwidth = 0.1 nm\n\
                   [material]\npreset = helium4\nhalf_width = 2.9 bohr\n\
                   [integrator]\nscheme = stochastic_quantum\ndt = 1 fs\n\
                   [noise]\ntheta = 50 K\nlambda_c = 3 Å\nconserving = false\n\
                   [output]\ncsv = out/run.csv\n";
        let a = parse_config(src).unwrap();
        let text = to_config_text(&a);
        let b = parse_config(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(text, to_config_text(&b));
    }
}
