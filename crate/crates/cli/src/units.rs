//! Unit-suffixed lengths and angles as they appear in config files.
//!
//! Lengths accept `m`, `mm`, `um` (also `µm`/`μm`), `nm` and `pm`, with or
//! without a space before the suffix. A bare TOML number is taken as meters.
//! Angles accept `deg` and `rad`; bare numbers are radians.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Suffix and power of ten; `"530nm"` is read as `530e-9` so that it rounds
/// to the same double as the literal.
const LENGTH_UNITS: &[(&str, i32)] = &[
    ("mm", -3),
    ("um", -6),
    ("µm", -6),
    ("μm", -6),
    ("nm", -9),
    ("pm", -12),
    ("m", 0),
];

fn split_unit<'a, T: Copy>(s: &'a str, units: &[(&str, T)], kind: &str) -> Result<(&'a str, T), String> {
    let t = s.trim();
    units
        .iter()
        .find_map(|&(suffix, scale)| t.strip_suffix(suffix).map(|n| (n.trim_end(), scale)))
        .ok_or_else(|| {
            let names: Vec<_> = units.iter().map(|u| u.0).collect();
            format!("`{s}` has no {kind} unit (expected one of {})", names.join(", "))
        })
}

fn finite(s: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Parses strings such as `"530nm"`, `"10 um"` or `"1m"` into meters.
pub fn parse_length(s: &str) -> Result<f64, String> {
    let (number, exp) = split_unit(s, LENGTH_UNITS, "length")?;
    let bad = || format!("`{s}` is not a number followed by a length unit");
    let (mantissa, own) = match number.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (number, 0),
    };
    if mantissa.is_empty() || mantissa.parse::<f64>().is_err() {
        return Err(bad());
    }
    let v: f64 = format!("{mantissa}e{}", own + exp).parse().map_err(|_| bad())?;
    finite(s, v)
}

/// Parses `"90deg"` or `"1.2rad"` into radians.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let (number, scale) = split_unit(s, &[("deg", std::f64::consts::PI / 180.0), ("rad", 1.0)], "angle")?;
    let v: f64 = number
        .parse()
        .map_err(|_| format!("`{s}` is not a number followed by an angle unit"))?;
    finite(s, v * scale)
}

/// Length in meters. Serializes as a plain number so that written manifests
/// load back without unit strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

/// Angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

struct UnitVisitor {
    parse: fn(&str) -> Result<f64, String>,
    expecting: &'static str,
}

impl<'de> Visitor<'de> for UnitVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.expecting)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        (self.parse)(v).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(UnitVisitor {
            parse: parse_length,
            expecting: "a length such as \"530nm\" or a number in meters",
        })
        .map(Length)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(UnitVisitor {
            parse: parse_angle,
            expecting: "an angle such as \"90deg\" or a number in radians",
        })
        .map(Angle)
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl std::str::FromStr for Length {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_length(s)
            .or_else(|e| s.trim().parse::<f64>().map_err(|_| e))
            .map(Length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(parse_length("530nm").unwrap(), 530e-9);
        assert_eq!(parse_length("10 um").unwrap(), 10e-6);
        assert_eq!(parse_length("10µm").unwrap(), 10e-6);
        assert_eq!(parse_length("1m").unwrap(), 1.0);
        assert_eq!(parse_length("2.5mm").unwrap(), 2.5e-3);
        assert_eq!(parse_length("-4.5um").unwrap(), -4.5e-6);
        assert_eq!(parse_length("1e3nm").unwrap(), 1e-6);
        assert!(parse_length("10").is_err());
        assert!(parse_length("ten um").is_err());
        assert!(parse_length("5 furlong").is_err());
    }

    #[test]
    fn angles() {
        assert!((parse_angle("90deg").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(parse_angle("0.5 rad").unwrap(), 0.5);
        assert!(parse_angle("90").is_err());
    }

    #[test]
    fn from_str_accepts_bare_meters() {
        assert_eq!("4.5um".parse::<Length>().unwrap(), Length(4.5e-6));
        assert_eq!("4.5e-6".parse::<Length>().unwrap(), Length(4.5e-6));
        assert!("4.5 parsecs".parse::<Length>().is_err());
    }
}
