//! CODATA 2018 constants in SI units.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Bohr radius, m.
pub const BOHR: f64 = 5.291_772_109_03e-11;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Elementary charge, used for eV conversions, C (exact).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Physical constants used by a computation, echoed into every summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub bohr: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_b: K_B,
        bohr: BOHR,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
