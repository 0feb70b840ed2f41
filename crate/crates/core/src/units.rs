//! Physical quantities written as `<number> [unit]`, converted to SI.

use std::fmt;

use crate::constants::{ATOMIC_MASS_UNIT, BOHR, ELECTRON_VOLT, K_B};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Mass,
    Energy,
    Temperature,
    Time,
    Dimensionless,
}

impl Dimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Energy => "energy",
            Dimension::Temperature => "temperature",
            Dimension::Time => "time",
            Dimension::Dimensionless => "dimensionless",
        }
    }

    /// SI unit symbol used when writing values back out.
    pub fn si_symbol(&self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Mass => "kg",
            Dimension::Energy => "J",
            Dimension::Temperature => "K",
            Dimension::Time => "s",
            Dimension::Dimensionless => "",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const UNITS: &[(&str, Dimension, f64)] = &[
    ("m", Dimension::Length, 1.0),
    ("nm", Dimension::Length, 1e-9),
    ("pm", Dimension::Length, 1e-12),
    ("Å", Dimension::Length, 1e-10),
    ("A", Dimension::Length, 1e-10),
    ("angstrom", Dimension::Length, 1e-10),
    ("bohr", Dimension::Length, BOHR),
    ("Bohr", Dimension::Length, BOHR),
    ("kg", Dimension::Mass, 1.0),
    ("u", Dimension::Mass, ATOMIC_MASS_UNIT),
    ("amu", Dimension::Mass, ATOMIC_MASS_UNIT),
    ("J", Dimension::Energy, 1.0),
    ("eV", Dimension::Energy, ELECTRON_VOLT),
    ("meV", Dimension::Energy, 1e-3 * ELECTRON_VOLT),
    ("kB", Dimension::Energy, K_B),
    ("K", Dimension::Temperature, 1.0),
    ("s", Dimension::Time, 1.0),
    ("ns", Dimension::Time, 1e-9),
    ("ps", Dimension::Time, 1e-12),
    ("fs", Dimension::Time, 1e-15),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantityError {
    Empty,
    Number(String),
    UnknownUnit(String),
    WrongDimension { unit: String, expected: Dimension },
    NotFinite,
}

impl fmt::Display for QuantityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantityError::Empty => f.write_str("empty value"),
            QuantityError::Number(s) => write!(f, "malformed number {s:?}"),
            QuantityError::UnknownUnit(u) => write!(f, "unknown unit {u:?}"),
            QuantityError::WrongDimension { unit, expected } => {
                write!(f, "unit {unit:?} is not a {expected} unit")
            }
            QuantityError::NotFinite => f.write_str("value is not finite"),
        }
    }
}

impl std::error::Error for QuantityError {}

/// Splits `text` into number and unit suffix (`"4.0026u"`, `"2.17 K"`).
fn split(text: &str) -> (&str, &str) {
    let t = text.trim();
    let mut end = 0;
    let bytes = t.as_bytes();
    while end < bytes.len() {
        let c = bytes[end] as char;
        let exp_sign = (c == '+' || c == '-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
        let exp = (c == 'e' || c == 'E')
            && end > 0
            && bytes[end - 1].is_ascii_digit()
            && bytes
                .get(end + 1)
                .is_some_and(|b| b.is_ascii_digit() || *b == b'+' || *b == b'-');
        if c.is_ascii_digit() || c == '.' || exp || exp_sign || ((c == '+' || c == '-') && end == 0) {
            end += 1;
        } else {
            break;
        }
    }
    (&t[..end], t[end..].trim())
}

/// Parses a quantity of the given dimension into SI. A bare number is taken
/// to be in SI already.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, QuantityError> {
    let (num, unit) = split(text);
    if num.is_empty() && unit.is_empty() {
        return Err(QuantityError::Empty);
    }
    let value: f64 = num
        .parse()
        .map_err(|_| QuantityError::Number(text.trim().to_string()))?;
    let factor = if unit.is_empty() {
        1.0
    } else {
        let (_, d, f) = UNITS
            .iter()
            .find(|(u, _, _)| *u == unit)
            .ok_or_else(|| QuantityError::UnknownUnit(unit.to_string()))?;
        if *d != dim {
            return Err(QuantityError::WrongDimension {
                unit: unit.to_string(),
                expected: dim,
            });
        }
        *f
    };
    let v = value * factor;
    if !v.is_finite() {
        return Err(QuantityError::NotFinite);
    }
    Ok(v)
}

/// SI value with its unit symbol, at round-trip precision.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    let sym = dim.si_symbol();
    if sym.is_empty() {
        format!("{value:e}")
    } else {
        format!("{value:e} {sym}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_mass_units() {
        let m = parse_quantity("4.0026 u", Dimension::Mass).unwrap();
        assert!((m / 6.6465e-27 - 1.0).abs() < 1e-4);
        assert_eq!(m, parse_quantity("4.0026u", Dimension::Mass).unwrap());
    }

    #[test]
    fn suffixes_and_exponents() {
        assert_eq!(parse_quantity("1.5e-10", Dimension::Length).unwrap(), 1.5e-10);
        assert_eq!(parse_quantity("7.9 bohr", Dimension::Length).unwrap(), 7.9 * BOHR);
        assert!((parse_quantity("3 Å", Dimension::Length).unwrap() - 3e-10).abs() < 1e-25);
        assert_eq!(parse_quantity("10.9 kB", Dimension::Energy).unwrap(), 10.9 * K_B);
        assert_eq!(parse_quantity("-2e+3 fs", Dimension::Time).unwrap(), -2e-12);
        assert_eq!(parse_quantity("1e2eV", Dimension::Energy).unwrap(), 1e2 * ELECTRON_VOLT);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_quantity("  ", Dimension::Length), Err(QuantityError::Empty));
        assert!(matches!(parse_quantity("abc", Dimension::Length), Err(QuantityError::Number(_))));
        assert!(matches!(
            parse_quantity("1 furlong", Dimension::Length),
            Err(QuantityError::UnknownUnit(_))
        ));
        assert!(matches!(
            parse_quantity("2 K", Dimension::Mass),
            Err(QuantityError::WrongDimension { .. })
        ));
        assert_eq!(parse_quantity("1e400", Dimension::Length), Err(QuantityError::NotFinite));
    }

    #[test]
    fn formatted_values_parse_back() {
        for v in [1.0, 6.6464731e-27, -3.3e-10, 1e300] {
            let s = format_quantity(v, Dimension::Mass);
            assert_eq!(parse_quantity(&s, Dimension::Mass).unwrap(), v);
        }
    }
}
