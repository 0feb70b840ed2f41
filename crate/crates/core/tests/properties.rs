use proptest::prelude::*;

use sqha::config::{parse_config, to_config_text};
use sqha::constants::{HBAR, K_B};
use sqha::density::DensityField;
use sqha::dynamics::Observables;
use sqha::grid::{derivative, integrate, Field, Grid, Unit};
use sqha::noise::NoiseModel;
use sqha::output::{csv_text, parse_csv};
use sqha::quantum::{quantum_force, quantum_potential};
use sqha::scales::{
    classify_regime, correlation_length, nonlocality_length, Extent, NoiseAmplitude, Regime,
};
use sqha::states::{
    lj_harmonic, pseudo_gaussian_density, square_well_solve, MaterialParams, PseudoGaussianFamily,
    SquareWellGeometry, TailShape,
};
use sqha::units::{format_quantity, parse_quantity, Dimension};

fn grid() -> Grid {
    Grid::new(-1e-9, 1e-9, 401).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_field_has_zero_derivative(c in -1e6f64..1e6) {
        let f = Field::from_fn(grid(), Unit::ENERGY, |_| c).unwrap();
        for order in [1, 2] {
            prop_assert!(derivative(&f, order).unwrap().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn integrate_is_linear(a in -10.0f64..10.0, b in -10.0f64..10.0, k in 1e8f64..1e10) {
        let g = grid();
        let f = Field::from_fn(g, Unit::DENSITY, |q| (k * q).sin()).unwrap();
        let h = Field::from_fn(g, Unit::DENSITY, |q| (-(q * k).powi(2)).exp()).unwrap();
        let combo = Field::from_fn(g, Unit::DENSITY, |q| a * (k * q).sin() + b * (-(q * k).powi(2)).exp()).unwrap();
        let lhs = integrate(&combo);
        let rhs = a * integrate(&f) + b * integrate(&h);
        let scale = (a.abs() + b.abs()) * g.length();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
    }

    #[test]
    fn quantum_potential_ignores_normalisation(c in 1e-6f64..1e6, w in 5e-11f64..3e-10) {
        let g = grid();
        let logs: Vec<f64> = g.points().iter().map(|q| -(q / w).powi(2)).collect();
        let n = DensityField::from_values(g, logs.iter().map(|l| l.exp()).collect()).unwrap();
        let scaled = n.scaled(c).unwrap();
        let a = quantum_potential(&n, 1e-26).unwrap();
        let b = quantum_potential(&scaled, 1e-26).unwrap();
        let peak = a.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * peak);
        }
    }

    #[test]
    fn quantum_potential_scales_inverse_with_mass(m in 1e-27f64..1e-24, f in 1.5f64..100.0) {
        let g = grid();
        let logs: Vec<f64> = g.points().iter().map(|q| -(q / 2e-10).powi(2)).collect();
        let n = DensityField::from_log(g, logs).unwrap();
        let a = quantum_potential(&n, m).unwrap();
        let b = quantum_potential(&n, m * f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y * f).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn correlation_length_scaling(m in 1e-27f64..1e-24, theta in 1e-3f64..1e4) {
        let lc = correlation_length(m, theta).unwrap().as_f64();
        let c = (std::f64::consts::FRAC_PI_2).powf(1.5) * HBAR / (2.0 * K_B).sqrt();
        prop_assert!((lc * (m * theta).sqrt() / c - 1.0).abs() < 1e-12);
    }

    // The ground-state force of a harmonic well is linear in q - q̄; cut at δ,
    // its weighted range is 2δ whatever the curvature.
    #[test]
    fn truncated_linear_force_range_is_twice_delta(
        log_k in -3.0f64..3.0,
        frac in 0.05f64..0.95,
        delta in 1e-11f64..1e-9,
    ) {
        let k = 10f64.powf(log_k);
        let g = Grid::centered(0.0, 2.0 * delta, 2001).unwrap();
        let force = Field::from_fn(g, Unit::FORCE, |q| k * q).unwrap();
        let profile = sqha::quantum::QuantumForceProfile::from_force(force, 0.0)
            .unwrap()
            .truncated(delta)
            .unwrap();
        let lq = nonlocality_length(&profile, frac * delta, delta).unwrap();
        prop_assert!((lq.as_f64() / (2.0 * delta) - 1.0).abs() < 1e-3, "{lq:?}");
    }

    #[test]
    fn lindemann_ratio_ignores_mass_and_depth(log_u in -23.0f64..-19.0, log_m in -27.0f64..-25.0) {
        let p = MaterialParams::new(10f64.powf(log_m), 10f64.powf(log_u), 3.822e-10).unwrap();
        let r = sqha::cases::lindemann(&p, 2001).unwrap();
        let ratio = r.lambda_q_over_r0.as_f64();
        prop_assert!((ratio - 0.2357).abs() < 1e-4, "{ratio}");
    }

    #[test]
    fn regime_is_monotone_in_problem_length(
        lc in 1e-12f64..1e-6,
        lq in 1e-12f64..1e-6,
        a in 1e-14f64..1e-4,
        f in 1.0f64..1e4,
    ) {
        let order = |r: Regime| match r {
            Regime::NonlocalDeterministic => 0,
            Regime::NonlocalStochastic | Regime::Indeterminate => 1,
            Regime::LocalStochastic => 2,
        };
        let small = classify_regime(a, Extent::Finite(lc), Extent::Finite(lq), 0.1).unwrap();
        let large = classify_regime(a * f, Extent::Finite(lc), Extent::Finite(lq), 0.1).unwrap();
        prop_assert!(order(large) >= order(small), "{small:?} -> {large:?}");
    }

    #[test]
    fn harmonic_identity(m in 1e-27f64..1e-24, u in 1e-23f64..1e-19, r0 in 2e-10f64..6e-10) {
        let p = MaterialParams::new(m, u, r0).unwrap();
        let h = lj_harmonic(&p).unwrap();
        let lhs = 4.0 * (h.e0 + u).powi(2) * m / (HBAR * HBAR);
        prop_assert!((lhs / h.k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_well_matching(depth_k in 5.0f64..50.0, half in 1e-10f64..3e-10, mass_u in 2.0f64..40.0) {
        let mut p = MaterialParams::new(mass_u * sqha::constants::ATOMIC_MASS_UNIT, depth_k * K_B, 4e-10).unwrap();
        p.square_well = Some(SquareWellGeometry { sigma: 2e-10, half_width: half, depth_factor: 1.0 });
        match square_well_solve(&p) {
            Ok(s) => {
                prop_assert!(s.residual().abs() < 1e-10);
                prop_assert!(s.e0 < 0.0 && -s.e0 < s.depth);
            }
            Err(e) => prop_assert!(matches!(e, sqha::SqhaError::NoBoundState(_))),
        }
    }

    #[test]
    fn pseudo_gaussian_densities_are_normalised(
        g_exp in 0.2f64..2.0,
        ratio in 10.0f64..30.0,
        dq in 5e-11f64..2e-10,
    ) {
        let fam = PseudoGaussianFamily::new(TailShape::PowerF { g: g_exp }, dq * dq, ratio * dq, 0.0).unwrap();
        let grid = Grid::centered(0.0, 40.0 * dq, 4001).unwrap();
        let n = pseudo_gaussian_density(&fam, &grid).unwrap();
        prop_assert!((n.norm() - 1.0).abs() < 1e-8, "{}", n.norm());
    }

    #[test]
    fn covariance_is_even_and_decreasing(theta in 0.1f64..100.0, a in 0.0f64..1e-9, b in 0.0f64..1e-9) {
        let m = NoiseModel::new(NoiseAmplitude::new(theta, 1.0).unwrap(), 6.6e-27, false).unwrap();
        prop_assert_eq!(m.covariance(a), m.covariance(-a));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(m.covariance(lo) >= m.covariance(hi));
    }

    #[test]
    fn amplitude_scales_with_theta_squared(theta in 0.1f64..100.0, f in 1.1f64..10.0) {
        let amp = |t| NoiseModel::new(NoiseAmplitude::new(t, 1.0).unwrap(), 6.6e-27, false).unwrap();
        let (a, b) = (amp(theta), amp(theta * f));
        prop_assert!((b.amplitude / a.amplitude / (f * f) - 1.0).abs() < 1e-12);
        prop_assert!((a.lambda_c.as_f64() / b.lambda_c.as_f64() / f.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantities_round_trip(v in prop::num::f64::NORMAL) {
        for dim in [Dimension::Length, Dimension::Mass, Dimension::Energy, Dimension::Time] {
            prop_assert_eq!(parse_quantity(&format_quantity(v, dim), dim).unwrap(), v);
        }
    }

    #[test]
    fn config_serialisation_is_idempotent(
        seed in any::<u64>(),
        theta in 0.0f64..1e3,
        points in 8usize..100_000,
        dt in 1e-18f64..1e-12,
        g in 0.1f64..2.0,
    ) {
        let text = format!(
            "[experiment]\nseed = {seed}\nfamily = power\ng = {g}\n[grid]\npoints = {points}\n\
             [integrator]\ndt = {dt} s\n[noise]\ntheta = {theta} K\n"
        );
        let a = parse_config(&text).unwrap();
        let b = parse_config(&to_config_text(&a)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(to_config_text(&a), to_config_text(&b));
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(prop::array::uniform7(-1e30f64..1e30), 0..20)) {
        let obs: Vec<Observables> = rows
            .iter()
            .map(|r| Observables { time: r[0], norm: r[1], mean_q: r[2], variance: r[3], e_kin: r[4], e_pot: r[5], e_qu: r[6] })
            .collect();
        prop_assert_eq!(parse_csv(&csv_text(&obs)).unwrap(), obs);
    }
}

#[test]
fn gaussian_power_family_force_is_linear() {
    // Departures from linearity in the core are O(Δq²/Λ²).
    let fam = PseudoGaussianFamily::new(TailShape::PowerF { g: 2.0 }, 1e-20, 1e-8, 0.0).unwrap();
    let grid = Grid::centered(0.0, 3e-10, 1201).unwrap();
    let n = pseudo_gaussian_density(&fam, &grid).unwrap();
    let prof = quantum_force(&n, 1e-26, 0.0).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .points()
        .into_iter()
        .zip(prof.force().values().iter().copied())
        .filter(|(q, _)| q.abs() < 1e-10)
        .unzip();
    let fit = sqha::grid::fit_line(&xs, &ys).unwrap();
    let worst = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - fit.intercept - fit.slope * x).abs())
        .fold(0.0, f64::max);
    let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3 * scale, "{worst:e} vs {scale:e}");
}
