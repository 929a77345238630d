//! Unit-suffixed quantities used at the config boundary, e.g. `"600 um"`.
//!
//! Only the suffixes in the tables below are accepted; the numeric part is
//! parsed as a plain float and scaled by an exact power of ten.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Pressure,
    Force,
    Stiffness,
    Speed,
    Frequency,
    /// Stress per actuator displacement, Pa/m.
    StressRate,
}

impl Dimension {
    fn table(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("μm", 1e-6), ("nm", 1e-9)],
            Dimension::Pressure => &[("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6), ("GPa", 1e9)],
            Dimension::Force => &[("N", 1.0), ("mN", 1e-3), ("uN", 1e-6), ("μN", 1e-6)],
            Dimension::Stiffness => &[("N/m", 1.0), ("mN/um", 1e3), ("kN/m", 1e3)],
            Dimension::Speed => &[("m/s", 1.0), ("um/s", 1e-6), ("μm/s", 1e-6), ("nm/s", 1e-9)],
            Dimension::Frequency => &[("Hz", 1.0), ("kHz", 1e3)],
            Dimension::StressRate => &[("Pa/m", 1.0), ("MPa/um", 1e12), ("MPa/μm", 1e12)],
        }
    }

    /// SI suffix used when re-emitting normalized values.
    pub fn si_unit(self) -> &'static str {
        self.table()[0].0
    }
}

/// Parses `"<number> <unit>"` into SI.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let (num, unit) = text
        .split_once(char::is_whitespace)
        .map(|(n, u)| (n, u.trim()))
        .ok_or_else(|| Error::Config(format!("'{text}' needs a unit, e.g. '1.5 {}'", dim.si_unit())))?;
    let factor = dim
        .table()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            let known: Vec<&str> = dim.table().iter().map(|(u, _)| *u).collect();
            Error::Config(format!("unknown unit '{unit}' in '{text}' (expected one of {known:?})"))
        })?;
    let value: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("'{num}' in '{text}' is not a number")))?;
    if !value.is_finite() {
        return Err(Error::Config(format!("'{text}' is not finite")));
    }
    Ok(if factor == 1.0 { value } else { value * factor })
}

/// SI value with its unit, in shortest round-trip form.
pub fn format_si(value: f64, dim: Dimension) -> String {
    format!("{} {}", value, dim.si_unit())
}
