//! Run configuration files.
//!
//! A config is a TOML document with one table per concern. Every length takes
//! a unit suffix. A `[[series]]` array repeats the run for several optical or
//! pump settings, each overriding only the keys it names.
//!
//! ```toml
//! name = "fig3"
//!
//! [optical]
//! lambda_signal = "530nm"
//! lambda_idler = "10um"
//! thickness = "100nm"
//!
//! [pump]
//! kind = "gaussian"
//! sigma = "1m"
//!
//! [object]
//! kind = "double-slit"
//! d = "4.5um"
//! ```

use std::path::{Path, PathBuf};

use qiup::spdc::uniform_axis;
use qiup::{OpticalConfig, PumpProfile, QuadratureSpec, SearchSpec, SlitObject};
use serde::{Deserialize, Serialize};

use crate::units::{Angle, Length};
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Stem for output files; defaults to the config file name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub optical: OpticalSection,
    pub pump: Option<PumpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<AxisSection>,
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub image: ImageSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
}

/// Exactly one wavelength pair (`lambda_pump` + `lambda_signal` or
/// `lambda_signal` + `lambda_idler`) and either a common `thickness` or both
/// `l_a` and `l_b`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_pump: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_signal: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_idler: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_a: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_b: Option<Length>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PumpSection {
    PlaneWave,
    Gaussian { sigma: Length },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectSection {
    DoubleSlit { d: Length },
    SingleSlit,
    Opaque,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_refine_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
}

/// Camera axis `x_S` for images and point-spread functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub from: Length,
    pub to: Length,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    #[default]
    Angular,
    Momentum,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    #[serde(default)]
    pub representation: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_i: Option<usize>,
    /// Half-range of both angular axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<Angle>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSection {
    #[serde(default)]
    pub direct_oracle: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_hi: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_d: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_scan: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dip_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either an explicit list or `{ from, to, n, spacing }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<Length>),
    Range {
        from: Length,
        to: Length,
        n: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_width: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_signal: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_idler: Option<Values>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical: Option<OpticalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpSection>,
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

fn non_negative(field: &str, v: Option<Length>) -> Result<Option<f64>, CliError> {
    match v {
        Some(Length(x)) if x.is_nan() || x < 0.0 => Err(config_err(field, format!("must be >= 0, got {x:e} m"))),
        Some(Length(x)) => Ok(Some(x)),
        None => Ok(None),
    }
}

fn positive(field: &str, v: Length) -> Result<f64, CliError> {
    if v.0 > 0.0 {
        Ok(v.0)
    } else {
        Err(config_err(field, format!("must be > 0, got {:e} m", v.0)))
    }
}

impl OpticalSection {
    /// Field-wise override. Naming any wavelength in `over` replaces the whole
    /// wavelength pair, and likewise for the thicknesses.
    fn merged(&self, over: &OpticalSection) -> OpticalSection {
        let wl = over.lambda_pump.is_some() || over.lambda_signal.is_some() || over.lambda_idler.is_some();
        let th = over.thickness.is_some() || over.l_a.is_some() || over.l_b.is_some();
        let (w, t) = (if wl { over } else { self }, if th { over } else { self });
        OpticalSection {
            lambda_pump: w.lambda_pump,
            lambda_signal: w.lambda_signal,
            lambda_idler: w.lambda_idler,
            thickness: t.thickness,
            l_a: t.l_a,
            l_b: t.l_b,
        }
    }

    pub fn thicknesses(&self) -> Result<(f64, f64), CliError> {
        let common = non_negative("optical.thickness", self.thickness)?;
        let a = non_negative("optical.l_a", self.l_a)?;
        let b = non_negative("optical.l_b", self.l_b)?;
        match (common, a, b) {
            (Some(l), None, None) => Ok((l, l)),
            (None, Some(a), Some(b)) => Ok((a, b)),
            (Some(_), _, _) => Err(config_err(
                "optical.thickness",
                "give either `thickness` or `l_a` and `l_b`, not both",
            )),
            (None, None, None) => Err(config_err("optical.thickness", "missing (or give `l_a` and `l_b`)")),
            (None, _, _) => Err(config_err("optical.l_a", "`l_a` and `l_b` must be given together")),
        }
    }

    pub fn resolve(&self) -> Result<OpticalConfig, CliError> {
        let (l_a, l_b) = self.thicknesses()?;
        self.resolve_with(l_a, l_b)
    }

    /// Wavelengths from the config with thicknesses chosen by the caller.
    pub fn resolve_with(&self, l_a: f64, l_b: f64) -> Result<OpticalConfig, CliError> {
        let p = self
            .lambda_pump
            .map(|v| positive("optical.lambda_pump", v))
            .transpose()?;
        let s = self
            .lambda_signal
            .map(|v| positive("optical.lambda_signal", v))
            .transpose()?;
        let i = self
            .lambda_idler
            .map(|v| positive("optical.lambda_idler", v))
            .transpose()?;
        let cfg =
            match (p, s, i) {
                (Some(p), Some(s), None) => OpticalConfig::from_pump_signal(p, s, l_a, l_b),
                (None, Some(s), Some(i)) => OpticalConfig::from_signal_idler(s, i, l_a, l_b),
                _ => return Err(config_err(
                    "optical",
                    "give exactly one wavelength pair: lambda_pump + lambda_signal, or lambda_signal + lambda_idler",
                )),
            };
        cfg.map_err(|e| config_err("optical", e))
    }
}

impl PumpSection {
    pub fn resolve(&self) -> Result<PumpProfile, CliError> {
        match *self {
            PumpSection::PlaneWave => Ok(PumpProfile::PlaneWave),
            PumpSection::Gaussian { sigma } => {
                PumpProfile::gaussian(positive("pump.sigma", sigma)?).map_err(|e| config_err("pump.sigma", e))
            }
        }
    }
}

impl ObjectSection {
    pub fn resolve(&self) -> Result<SlitObject, CliError> {
        match *self {
            ObjectSection::DoubleSlit { d } => {
                SlitObject::double(positive("object.d", d)?).map_err(|e| config_err("object.d", e))
            }
            ObjectSection::SingleSlit => Ok(SlitObject::SingleSlit),
            ObjectSection::Opaque => Ok(SlitObject::Opaque),
        }
    }
}

impl QuadratureSection {
    pub fn resolve(&self) -> Result<QuadratureSpec, CliError> {
        let d = QuadratureSpec::default();
        QuadratureSpec::new(
            self.n_theta.unwrap_or(d.n_theta),
            self.n_refine_max.unwrap_or(d.n_refine_max),
            self.rel_tol.unwrap_or(d.rel_tol),
        )
        .map_err(|e| config_err("quadrature", e))
    }
}

impl AxisSection {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        if self.n == 0 {
            return Err(config_err("axis.n", "must be >= 1"));
        }
        if self.from.0.is_nan() || self.to.0.is_nan() || self.from.0 > self.to.0 {
            return Err(config_err("axis", "`from` must not exceed `to`"));
        }
        Ok(uniform_axis(self.from.0, self.to.0, self.n))
    }
}

impl SearchSection {
    pub fn resolve(&self) -> Result<SearchSpec, CliError> {
        let d = SearchSpec::default();
        Ok(SearchSpec {
            d_hi: self.d_hi.map(|v| positive("search.d_hi", v)).transpose()?,
            tol_d: self.tol_d.map(|v| positive("search.tol_d", v)).transpose()?,
            n_scan: self.n_scan.unwrap_or(d.n_scan),
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            dip_tol: self.dip_tol.unwrap_or(d.dip_tol),
        })
    }
}

impl Values {
    pub fn resolve(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let out = match *self {
            Values::List(ref v) => v.iter().map(|l| l.0).collect(),
            Values::Range { from, to, n, spacing } => {
                if n < 2 {
                    return Err(config_err(field, "a range needs n >= 2"));
                }
                match spacing {
                    Spacing::Linear => uniform_axis(from.0, to.0, n),
                    Spacing::Log => {
                        if !(from.0 > 0.0 && to.0 > 0.0) {
                            return Err(config_err(field, "log spacing needs positive end points"));
                        }
                        let (a, b) = (from.0.ln(), to.0.ln());
                        (0..n)
                            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                            .collect()
                    }
                }
            }
        };
        if out.is_empty() {
            return Err(config_err(field, "no values"));
        }
        if let Some(v) = out.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(config_err(field, format!("values must be finite and > 0, got {v:e} m")));
        }
        Ok(out)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a TOML config, or the config recorded in a JSON document written
    /// by an earlier run.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            // map sidecars nest the document under `meta`
            let doc = v.get("meta").unwrap_or(&v);
            let inner = doc
                .get("manifest")
                .and_then(|m| m.get("config"))
                .cloned()
                .unwrap_or(v.clone());
            serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn pump(&self) -> Result<PumpProfile, CliError> {
        self.pump
            .as_ref()
            .ok_or_else(|| config_err("pump", "missing [pump] table"))?
            .resolve()
    }

    pub fn formats(&self) -> Vec<Format> {
        self.output
            .format
            .clone()
            .unwrap_or_else(|| vec![Format::Csv, Format::Json])
    }

    /// One config per series entry, each with its label appended to the name,
    /// or the config itself when there are no series.
    pub fn expand(&self) -> Vec<(Option<String>, RunConfig)> {
        if self.series.is_empty() {
            return vec![(None, self.clone())];
        }
        self.series
            .iter()
            .map(|s| {
                let mut c = self.clone();
                c.series.clear();
                c.name = Some(match &self.name {
                    Some(n) => format!("{n}-{}", s.label),
                    None => s.label.clone(),
                });
                if let Some(o) = &s.optical {
                    c.optical = self.optical.merged(o);
                }
                if let Some(p) = s.pump {
                    c.pump = Some(p);
                }
                (Some(s.label.clone()), c)
            })
            .collect()
    }

    /// Validates everything a command could need so that errors surface before
    /// any computation starts.
    pub fn check(&self) -> Result<(), CliError> {
        self.pump()?;
        self.quadrature.resolve()?;
        self.search.resolve()?;
        if let Some(o) = &self.object {
            o.resolve()?;
        }
        if let Some(a) = &self.axis {
            a.resolve()?;
        }
        for s in &self.series {
            if s.label.is_empty() || s.label.contains(['/', '\\']) {
                return Err(config_err(
                    "series.label",
                    format!("`{}` is not usable in a file name", s.label),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [optical]
        lambda_signal = "530nm"
        lambda_idler = "10um"
        thickness = "100nm"

        [pump]
        kind = "gaussian"
        sigma = "100um"
    "#;

    #[test]
    fn parses_units_and_derives_pump_wavelength() {
        let c = RunConfig::from_toml(BASE).unwrap();
        let o = c.optical.resolve().unwrap();
        assert_eq!(o.lambda_signal, 530e-9);
        assert_eq!(o.l_a, 100e-9);
        assert!((1.0 / o.lambda_pump - 1.0 / 530e-9 - 1.0 / 10e-6).abs() < 1.0);
        assert_eq!(c.pump().unwrap(), PumpProfile::Gaussian { sigma: 100e-6 });
    }

    #[test]
    fn rejects_three_wavelengths() {
        let c = RunConfig::from_toml(&BASE.replace("[optical]", "[optical]\nlambda_pump = \"500nm\"")).unwrap();
        let e = c.optical.resolve().unwrap_err().to_string();
        assert!(e.contains("exactly one wavelength pair"), "{e}");
    }

    #[test]
    fn negative_thickness_names_the_field() {
        let c = RunConfig::from_toml(&BASE.replace("\"100nm\"", "\"-5nm\"")).unwrap();
        let e = c.optical.resolve().unwrap_err().to_string();
        assert!(e.contains("optical.thickness"), "{e}");
    }

    #[test]
    fn unknown_keys_are_reported_with_their_line() {
        let e = RunConfig::from_toml(&BASE.replace("sigma", "sigmaa"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("sigmaa") && e.contains("line"), "{e}");
    }

    #[test]
    fn series_override_only_what_they_name() {
        let text = format!(
            "{BASE}\n[[series]]\nlabel = \"thick\"\noptical = {{ thickness = \"100um\" }}\n\
             [[series]]\nlabel = \"swapped\"\noptical = {{ lambda_signal = \"10um\", lambda_idler = \"530nm\" }}\n"
        );
        let runs = RunConfig::from_toml(&text).unwrap().expand();
        assert_eq!(runs.len(), 2);
        let thick = runs[0].1.optical.resolve().unwrap();
        assert_eq!((thick.lambda_signal, thick.l_a), (530e-9, 100e-6));
        let swapped = runs[1].1.optical.resolve().unwrap();
        assert_eq!((swapped.lambda_signal, swapped.l_b), (10e-6, 100e-9));
        assert!(runs[1].1.series.is_empty());
        assert_eq!(runs[1].1.name.as_deref(), Some("swapped"));
    }

    #[test]
    fn log_range() {
        let v = Values::Range {
            from: Length(10e-9),
            to: Length(1e-3),
            n: 6,
            spacing: Spacing::Log,
        };
        let xs = v.resolve("sweep.thickness").unwrap();
        assert_eq!(xs.len(), 6);
        assert!((xs[1] / 100e-9 - 1.0).abs() < 1e-12);
        assert!((xs[5] / 1e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manifest_round_trip() {
        let c = RunConfig::from_toml(BASE).unwrap();
        let json = serde_json::to_value(&c).unwrap();
        let back: RunConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }
}
