//! Command-line front end: argument parsing, experiment dispatch and output.
//!
//! Exit status is 0 on success, 1 for invalid input (bad flags, config or
//! parameters, unwritable paths) and 2 when a computation fails.

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::cases::{
    classify_family, helium_lambda, helium_state_check, lindemann_with, LindemannOptions,
};
use crate::config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, InitialState, PotentialKind};
use crate::density::DensityField;
use crate::dynamics::{run, HydroState, IntegratorConfig, Scheme};
use crate::error::SqhaError;
use crate::grid::{Field, Grid, Unit};
use crate::noise::{audit_covariance, NoiseModel, NoiseSampler, RandomStream};
use crate::output::{csv_text, write_file, SummaryRecord};
use crate::quantum::quantum_force;
use crate::scales::{
    classify_regime, correlation_length, nonlocality_length, Extent, NoiseAmplitude, Regime,
    DEFAULT_RATIO_THRESHOLD,
};
use crate::states::{harmonic_ground_density, lj_harmonic, PseudoGaussianFamily};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<SqhaError> for CliError {
    fn from(e: SqhaError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sqha", version, about = "Stochastic quantum hydrodynamics experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the hydrodynamic equations and write a CSV time series.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long = "t-end")]
        t_end: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        width: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<String>,
        #[arg(long)]
        stride: Option<String>,
    },
    /// Noise correlation length for a mass and noise temperature.
    #[command(name = "lambda-c")]
    LambdaC {
        #[command(flatten)]
        common: Common,
    },
    /// Nonlocality length of the material's harmonic ground state.
    #[command(name = "lambda-q")]
    LambdaQ {
        #[command(flatten)]
        common: Common,
    },
    /// Tail class and convergence of a pseudo-Gaussian family; with
    /// `--delta-l`, also the dynamical regime.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        h: Option<String>,
        #[arg(long = "delta-q")]
        delta_q: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long = "delta-l")]
        delta_l: Option<String>,
    },
    /// Reference experiments.
    #[command(subcommand)]
    Case(CaseCommand),
    /// Empirical covariance of sampled noise fields against the kernel.
    #[command(name = "noise-audit")]
    NoiseAudit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CaseCommand {
    /// Lindemann ratio `λ_q / r_0` of a Lennard-Jones crystal.
    Lindemann {
        #[command(flatten)]
        common: Common,
        /// Keep the quantum force beyond the truncation distance.
        #[arg(long = "full-tail")]
        full_tail: bool,
    },
    /// ⁴He λ-point estimate and square-well ground state.
    Helium {
        #[command(flatten)]
        common: Common,
    },
}

/// Options shared by every subcommand. Each maps onto a config key and wins
/// over the config file.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long = "well-depth")]
    pub well_depth: Option<String>,
    #[arg(long)]
    pub r0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub mobility: Option<String>,
    #[arg(long = "lambda-c")]
    pub lambda_c: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long = "half-span")]
    pub half_span: Option<String>,
    #[arg(long)]
    pub csv: Option<String>,
    #[arg(long)]
    pub json: Option<String>,
    /// Any config key, as `section.key=value`; may be repeated.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, &'static str, &str)> {
        let pairs: [(&str, &str, &Option<String>); 12] = [
            ("experiment", "seed", &self.seed),
            ("material", "preset", &self.preset),
            ("material", "mass", &self.mass),
            ("material", "well_depth", &self.well_depth),
            ("material", "r0", &self.r0),
            ("noise", "theta", &self.theta),
            ("noise", "mobility", &self.mobility),
            ("noise", "lambda_c", &self.lambda_c),
            ("grid", "points", &self.points),
            ("grid", "half_span", &self.half_span),
            ("output", "csv", &self.csv),
            ("output", "json", &self.json),
        ];
        pairs
            .into_iter()
            .filter_map(|(s, k, v)| v.as_deref().map(|v| (s, k, v)))
            .collect()
    }
}

fn apply(cfg: &mut ExperimentConfig, section: &str, key: &str, value: &str) -> Result<(), CliError> {
    cfg.set(section, key, value)
        .map_err(|m| CliError::Validation(format!("`{key}`: {m}")))
}

type FlagOverrides<'a> = Vec<(&'a str, &'a str, &'a Option<String>)>;

/// Builds the effective configuration: file, then kind, then flags.
pub fn resolve_config(command: &Command) -> Result<ExperimentConfig, CliError> {
    let (common, kind, extra): (&Common, ExperimentKind, FlagOverrides) =
        match command {
            Command::Simulate {
                common,
                dt,
                t_end,
                scheme,
                boundary,
                initial,
                potential,
                width,
                offset,
                stride,
            } => (
                common,
                ExperimentKind::Simulate,
                vec![
                    ("integrator", "dt", dt),
                    ("experiment", "t_end", t_end),
                    ("integrator", "scheme", scheme),
                    ("integrator", "boundary", boundary),
                    ("experiment", "initial", initial),
                    ("experiment", "potential", potential),
                    ("experiment", "width", width),
                    ("experiment", "offset", offset),
                    ("experiment", "output_stride", stride),
                ],
            ),
            Command::LambdaC { common } => (common, ExperimentKind::LambdaC, vec![]),
            Command::LambdaQ { common } => (common, ExperimentKind::LambdaQ, vec![]),
            Command::Classify {
                common,
                family,
                g,
                h,
                delta_q,
                lambda,
                delta_l,
            } => (
                common,
                ExperimentKind::Classify,
                vec![
                    ("experiment", "family", family),
                    ("experiment", "g", g),
                    ("experiment", "h", h),
                    ("experiment", "delta_q", delta_q),
                    ("experiment", "lambda", lambda),
                    ("experiment", "delta_l", delta_l),
                ],
            ),
            Command::Case(CaseCommand::Lindemann { common, .. }) => {
                (common, ExperimentKind::CaseLindemann, vec![])
            }
            Command::Case(CaseCommand::Helium { common }) => {
                (common, ExperimentKind::CaseHelium, vec![])
            }
            Command::NoiseAudit { common, samples } => (
                common,
                ExperimentKind::NoiseAudit,
                vec![("noise", "samples", samples)],
            ),
        };
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment.kind = kind;
    for (s, k, v) in common.overrides() {
        apply(&mut cfg, s, k, v)?;
    }
    for (s, k, v) in extra {
        if let Some(v) = v {
            apply(&mut cfg, s, k, v)?;
        }
    }
    for item in &common.set {
        let (path, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set {item:?}: expected SECTION.KEY=VALUE")))?;
        let (s, k) = path
            .split_once('.')
            .ok_or_else(|| CliError::Validation(format!("--set {item:?}: expected SECTION.KEY=VALUE")))?;
        apply(&mut cfg, s.trim(), k.trim(), value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of one experiment: scalar results, an optional CSV body and the
/// one-line summary printed on success.
pub struct Outcome {
    pub results: Map<String, Value>,
    pub csv: Option<String>,
    pub summary: String,
    /// Set when the run produced output but a step failed.
    pub failure: Option<CliError>,
}

fn to_map(value: impl Serialize) -> Map<String, Value> {
    match serde_json::to_value(value).expect("reports serialise") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn extent_value(e: Extent) -> Value {
    serde_json::to_value(e).expect("extents serialise")
}

fn noise_model(cfg: &ExperimentConfig, mass: f64) -> Result<NoiseModel, SqhaError> {
    let amp = NoiseAmplitude::new(cfg.noise.theta, cfg.noise.mobility)?;
    let model = NoiseModel::new(amp, mass, cfg.noise.conserving)?;
    match cfg.noise.lambda_c {
        Some(lc) => model.with_lambda_c(lc),
        None => Ok(model),
    }
}

fn lambda_c_of(cfg: &ExperimentConfig, mass: f64) -> Result<Extent, SqhaError> {
    match cfg.noise.lambda_c {
        Some(lc) => Ok(Extent::Finite(lc)),
        None => correlation_length(mass, cfg.noise.theta),
    }
}

pub fn execute(cfg: &ExperimentConfig, full_tail: bool) -> Result<Outcome, CliError> {
    let params = cfg.material()?;
    let mut results = Map::new();
    let done = |results, summary| Outcome {
        results,
        csv: None,
        summary,
        failure: None,
    };
    match cfg.experiment.kind {
        ExperimentKind::LambdaC => {
            let lc = correlation_length(params.mass, cfg.noise.theta)?;
            results.insert("lambda_c".into(), extent_value(lc));
            results.insert("theta".into(), Value::from(cfg.noise.theta));
            results.insert("mass".into(), Value::from(params.mass));
            let unit = if lc.is_infinite() { "" } else { " m" };
            Ok(done(results, format!("lambda_c = {lc}{unit}")))
        }
        ExperimentKind::LambdaQ => {
            let approx = lj_harmonic(&params)?;
            let half = cfg
                .grid
                .half_span
                .unwrap_or((4.0 / approx.k0).max(2.0 * approx.delta));
            let grid = Grid::centered(approx.center, half, cfg.grid_points())?;
            let density = harmonic_ground_density(&approx, &grid)?;
            let profile = quantum_force(&density, approx.mass, approx.center)?.truncated(approx.delta)?;
            let lc = match cfg.noise.lambda_c {
                Some(v) => v,
                None if cfg.noise.theta > 0.0 => correlation_length(params.mass, cfg.noise.theta)?.as_f64(),
                None => 0.5 * approx.delta,
            };
            let lq = nonlocality_length(&profile, lc, approx.delta)?;
            results.insert("lambda_q".into(), extent_value(lq));
            results.insert("lambda_c".into(), Value::from(lc));
            results.insert("delta".into(), Value::from(approx.delta));
            if let Extent::Finite(v) = lq {
                results.insert("lambda_q_over_r0".into(), Value::from(v / params.r0));
            }
            Ok(done(results, format!("lambda_q = {lq} m")))
        }
        ExperimentKind::Classify => {
            let e = &cfg.experiment;
            let fam = PseudoGaussianFamily::new(e.family, e.delta_q * e.delta_q, e.lambda, 0.0)?;
            let c = classify_family(&fam, params.mass, None, cfg.grid_points())?;
            results = to_map(c);
            let mut summary = format!("{} (converges: {})", c.label, c.converges);
            if let Some(delta_l) = e.delta_l {
                let lc = lambda_c_of(cfg, params.mass)?;
                // Without noise λ_q has no weight to be measured against and
                // every length is in the deterministic regime.
                let (lq, regime) = match lc.finite() {
                    None => (Value::Null, Regime::NonlocalDeterministic),
                    Some(lc_len) => {
                        let lq = if !c.converges {
                            Extent::Infinite
                        } else {
                            let grid = Grid::centered(0.0, c.fit_half_span, cfg.grid_points())?;
                            let density = crate::states::pseudo_gaussian_density(&fam, &grid)?;
                            let profile = quantum_force(&density, params.mass, 0.0)?;
                            nonlocality_length(&profile, lc_len, c.fit_half_span)?
                        };
                        let regime = classify_regime(delta_l, lc, lq, DEFAULT_RATIO_THRESHOLD)?;
                        (extent_value(lq), regime)
                    }
                };
                results.insert("lambda_c".into(), extent_value(lc));
                results.insert("lambda_q".into(), lq);
                results.insert("regime".into(), Value::from(regime.as_str()));
                summary.push_str(&format!(", regime {regime}"));
            }
            Ok(done(results, summary))
        }
        ExperimentKind::CaseLindemann => {
            let r = lindemann_with(
                &params,
                LindemannOptions {
                    grid_resolution: cfg.grid_points(),
                    full_tail,
                },
            )?;
            let summary = format!(
                "lambda_q/r0 = {} (band [0.20, 0.25]: {})",
                r.lambda_q_over_r0, r.within_empirical_band
            );
            Ok(done(to_map(r), summary))
        }
        ExperimentKind::CaseHelium => {
            let lp = helium_lambda(&params)?;
            let st = helium_state_check(&params)?;
            results.insert("lambda_point".into(), Value::Object(to_map(lp)));
            results.insert("bound_state".into(), Value::Object(to_map(st)));
            let summary = format!(
                "theta* = {:.4} K (quoted {} K), E0 = {:.4} kB",
                lp.theta_star, lp.paper_value, st.e0_over_kb
            );
            Ok(done(results, summary))
        }
        ExperimentKind::NoiseAudit => {
            let model = noise_model(cfg, params.mass)?;
            let lc = match model.lambda_c {
                Extent::Finite(v) if !model.is_silent() => v,
                _ => {
                    return Err(CliError::Validation(
                        "noise-audit needs theta > 0 (and a finite lambda_c)".into(),
                    ))
                }
            };
            let points = cfg.grid_points();
            let h = lc / 4.0;
            let grid = Grid::new(0.0, h * (points - 1) as f64, points)?;
            let sampler = NoiseSampler::new(model, grid)?;
            let mut stream = RandomStream::new(cfg.experiment.seed);
            let audit = audit_covariance(&sampler, &[0, 4, 8], cfg.noise.samples, &mut stream)?;
            let err = audit.max_relative_error();
            results = to_map(&audit);
            results.insert("lambda_c".into(), Value::from(lc));
            results.insert("amplitude".into(), Value::from(model.amplitude));
            results.insert("max_relative_error".into(), Value::from(err));
            results.insert("clipped_fraction".into(), Value::from(sampler.clipped_fraction()));
            Ok(done(
                results,
                format!("max relative covariance error {err:.4} over {} samples", audit.samples),
            ))
        }
        ExperimentKind::Simulate => simulate(cfg, &params),
    }
}

fn simulate(cfg: &ExperimentConfig, params: &crate::states::MaterialParams) -> Result<Outcome, CliError> {
    let e = &cfg.experiment;
    let approx = lj_harmonic(params)?;
    let mass = params.mass;
    let ground_sd = approx.ground_variance().sqrt();
    let width = e.width.unwrap_or(ground_sd);
    let centre = approx.center;
    let half = cfg
        .grid
        .half_span
        .unwrap_or((6.0 / approx.k0).max(12.0 * width) + e.offset.abs());
    let grid = Grid::centered(centre, half, cfg.grid_points())?;
    let density = match e.initial {
        InitialState::Ground => {
            let mut shifted = approx;
            shifted.center += e.offset;
            harmonic_ground_density(&shifted, &grid)?
        }
        InitialState::Gaussian => {
            let c = centre + e.offset;
            let log_norm = -(width * (2.0 * std::f64::consts::PI).sqrt()).ln();
            let logs = grid
                .points()
                .iter()
                .map(|q| log_norm - (q - c).powi(2) / (2.0 * width * width))
                .collect();
            DensityField::from_log(grid, logs)?
        }
    };
    let potential = match e.potential {
        PotentialKind::Harmonic => approx.potential(&grid)?,
        PotentialKind::Free => Field::zeros(grid, Unit::ENERGY),
    };
    let state = HydroState::at_rest(density, mass)?;
    let i = &cfg.integrator;
    let mut icfg = IntegratorConfig {
        dt: 1.0,
        scheme: i.scheme,
        cfl_safety: i.cfl_safety,
        boundary: i.boundary,
        density_floor: i.density_floor,
    };
    icfg.dt = match i.dt {
        Some(dt) => dt,
        None if i.scheme == Scheme::ClassicalLimit => icfg.cfl_limit(mass, &grid),
        None => icfg.stability_limit(mass, &grid, &potential),
    };
    let t_end = e.t_end.unwrap_or(match e.potential {
        PotentialKind::Harmonic => approx.period(),
        PotentialKind::Free => 2.0 * mass * width * width / crate::constants::HBAR,
    });
    let mut stream = RandomStream::new(e.seed);
    let model;
    let noise = if i.scheme == Scheme::StochasticQuantum {
        model = noise_model(cfg, mass)?;
        Some((&model, &mut stream))
    } else {
        None
    };
    let traj = run(&state, &potential, mass, &icfg, noise, t_end, e.output_stride)?;
    let rows: Vec<_> = traj.rows().copied().collect();
    let first = rows.first().map_or(1.0, |r| r.norm);
    let drift = rows
        .iter()
        .map(|r| (r.norm / first - 1.0).abs())
        .fold(0.0, f64::max);
    let mut results = Map::new();
    results.insert("steps".into(), Value::from(traj.steps_taken));
    results.insert("dt".into(), Value::from(icfg.dt));
    results.insert("t_end".into(), Value::from(t_end));
    results.insert("snapshots".into(), Value::from(rows.len()));
    results.insert("max_norm_drift".into(), Value::from(drift));
    results.insert("max_renormalization".into(), Value::from(traj.max_renormalization));
    results.insert(
        "domain_too_small_at".into(),
        traj.domain_too_small_at.map_or(Value::Null, Value::from),
    );
    if let Some(last) = rows.last() {
        results.insert("final".into(), Value::Object(to_map(last)));
    }
    let summary = format!(
        "{} steps to t = {:e} s, max norm drift {drift:.3e}",
        traj.steps_taken,
        rows.last().map_or(0.0, |r| r.time)
    );
    Ok(Outcome {
        results,
        csv: Some(csv_text(&rows)),
        summary,
        failure: traj.failure.map(CliError::from),
    })
}

fn write_output(path: &str, contents: &str) -> Result<(), CliError> {
    write_file(Path::new(path), contents).map_err(|e| CliError::Validation(e.to_string()))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let full_tail = matches!(cli.command, Command::Case(CaseCommand::Lindemann { full_tail: true, .. }));
    let cfg = resolve_config(&cli.command)?;
    let outcome = execute(&cfg, full_tail)?;
    if let (Some(path), Some(csv)) = (&cfg.output.csv, &outcome.csv) {
        write_output(path, csv)?;
    }
    if let Some(err) = outcome.failure {
        return Err(err);
    }
    let record = SummaryRecord::new(&cfg, outcome.results);
    match &cfg.output.json {
        Some(path) => write_output(path, &record.to_json())?,
        None if !matches!(cfg.experiment.kind, ExperimentKind::Simulate) => {
            let _ = out.write_all(record.to_json().as_bytes());
        }
        None => {}
    }
    let _ = writeln!(out, "{}", outcome.summary);
    Ok(())
}

/// Runs the CLI on `argv` (program name first), writing to the given
/// streams, and returns the exit status.
pub fn run_command_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_VALIDATION
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_command(argv: &[String]) -> i32 {
    run_command_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("sqha")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_command_with(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn lambda_c_for_helium_at_quoted_temperature() {
        let (code, out, _) = run_args(&["lambda-c", "--mass", "4.0026u", "--theta", "2.17K"]);
        assert_eq!(code, 0);
        let json = &out[..out.trim_end().rfind('\n').unwrap()];
        let rec = SummaryRecord::from_json(json).unwrap();
        let lc = rec.results["lambda_c"].as_f64().unwrap();
        assert!((lc / 3.29e-10 - 1.0).abs() < 5e-3, "{lc}");
        assert!(out.contains("lambda_c = 3.289"), "{out}");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = run_args(&["lambda-c", "--theta", "-1 K"]);
        assert_eq!(code, 1);
        assert!(err.contains("theta must be ≥ 0"), "{err}");
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["lambda-c", "--set", "grid.spacing=1"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
        let (code, _, err) = run_args(&["simulate", "--dt", "1 s"]);
        assert_eq!(code, 2, "{err}");
        assert!(err.contains("CFL"), "{err}");
    }

    #[test]
    fn lindemann_case() {
        let (code, out, _) = run_args(&["case", "lindemann"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"lambda_q_over_r0\": 0.2357"), "{out}");
    }
}
