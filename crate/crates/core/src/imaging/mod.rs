//! Image formation in the two-source nonlinear interferometer.
//!
//! Source A illuminates the object with its idler; the transmitted idler is
//! aligned with source B, and the signals of both sources interfere on the
//! camera. The image is the interference term
//! `I(x_S) = ∫ dx_I Re(Φ_A* Φ_BT)`, evaluated here in angular coordinates.
//!
//! Three evaluation paths share the same conventions:
//!
//! * [`image_reduced`]: the `x_I` integral done analytically, leaving nested
//!   angular integrals. This is the production path.
//! * [`image_direct`]: `Φ_A` and `Φ_BT` on an explicit `x_I` grid, integrated
//!   numerically. Slow; used as an oracle.
//! * [`image_plane_wave`]: the plane-wave pump limit in transverse momentum,
//!   where the pump delta function collapses one integral per source.

mod direct;
mod engine;
mod grid;
mod plane_wave;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{OpticalConfig, PumpProfile};
use crate::quadrature::QuadratureSpec;

pub use direct::{image_direct, DirectDiagnostics};
pub use engine::{
    conv_angular, counting_rate, image_reduced, image_reduced_at_level, phi_a_angular, spatial_correlation,
    spatial_correlation_map, CorrelationMap, RateProfile, Source,
};
pub use plane_wave::{image_plane_wave, plane_wave_conv};

/// Idealized transmission of the object plane.
///
/// Slits are delta functions of effective width `w` (see [`SlitObject::slit_width`]);
/// the width only scales the interference term of [`counting_rate`] and drops
/// out of every peak-normalized image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SlitObject {
    /// `T(x) = w[δ(x − d/2) + δ(x + d/2)]`.
    DoubleSlit { d: f64 },
    /// `T(x) = w δ(x)`; its image is the point-spread function.
    SingleSlit,
    /// `T(x) = 0`.
    Opaque,
}

impl SlitObject {
    pub fn double(d: f64) -> Result<Self> {
        if d.is_finite() && d > 0.0 {
            Ok(SlitObject::DoubleSlit { d })
        } else {
            Err(Error::invalid(
                "d",
                format!("slit separation must be finite and > 0, got {d}"),
            ))
        }
    }

    /// Slit separation; zero for the single slit.
    pub fn separation(&self) -> f64 {
        match *self {
            SlitObject::DoubleSlit { d } => d,
            _ => 0.0,
        }
    }

    /// Effective slit width used for the absolute scale of the transmitted field,
    /// a tenth of the idler wavelength.
    pub fn slit_width(cfg: &OpticalConfig) -> f64 {
        cfg.lambda_idler / 10.0
    }

    /// Factor between `Re{e^{i d q_I/2} C}` and the physical convolution with the
    /// object spectrum `T̃(q) = (1/2π) ∫ T(x) e^{−iqx} dx`.
    pub(crate) fn spectral_scale(&self, cfg: &OpticalConfig) -> f64 {
        let w = Self::slit_width(cfg);
        match self {
            SlitObject::DoubleSlit { .. } => w / std::f64::consts::PI,
            SlitObject::SingleSlit => w / (2.0 * std::f64::consts::PI),
            SlitObject::Opaque => 0.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let SlitObject::DoubleSlit { d } = *self {
            Self::double(d)?;
        }
        Ok(())
    }
}

/// Which computation produced an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Reduced,
    Direct,
    PlaneWave,
}

/// Everything needed to repeat the computation of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub config: OpticalConfig,
    pub pump: PumpProfile,
    pub object: SlitObject,
    pub quadrature: QuadratureSpec,
    pub method: Method,
}

/// How the quadrature behaved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Multiplier applied to every node count in the accepted evaluation.
    pub level: usize,
    /// Nodes on the outer signal-angle axis (or signal momentum in the plane-wave path).
    pub n_theta_s: usize,
    /// Nodes on the outer idler-angle axis.
    pub n_theta_i: usize,
    /// Max-norm change of the peak-normalized image over the last doubling.
    pub achieved_tol: f64,
    pub refinements: usize,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct: Option<DirectDiagnostics>,
}

/// Real image sampled along the signal-camera coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageProfile {
    pub x_axis: Vec<f64>,
    /// Interference term divided by its maximum (all zero for a dark image).
    pub values: Vec<f64>,
    /// Background `∫ dx_I (|Φ_A|² + |Φ_B|²)` on the same scale as `values`.
    pub background: Option<Vec<f64>>,
    /// Maximum of the raw interference term that `values` was divided by.
    pub normalization: f64,
    pub meta: ImageMeta,
    pub diagnostics: Diagnostics,
}

impl ImageProfile {
    pub(crate) fn from_raw(x_axis: Vec<f64>, raw: Vec<f64>, meta: ImageMeta, diagnostics: Diagnostics) -> Self {
        let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm = if peak > 0.0 { peak } else { 1.0 };
        ImageProfile {
            x_axis,
            values: raw.iter().map(|v| v / norm).collect(),
            background: None,
            normalization: if peak > 0.0 { peak } else { 0.0 },
            meta,
            diagnostics,
        }
    }

    /// Largest absolute difference between two profiles on the same axis.
    pub fn max_abs_diff(&self, other: &ImageProfile) -> Result<f64> {
        if self.x_axis.len() != other.x_axis.len() {
            return Err(Error::MalformedProfile("profiles have different lengths".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }
}

/// Dispatches to the plane-wave path for [`PumpProfile::PlaneWave`] and to
/// [`image_reduced`] otherwise.
pub fn image(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<ImageProfile> {
    match pump {
        PumpProfile::PlaneWave => image_plane_wave(x_axis, cfg, obj, quad),
        PumpProfile::Gaussian { .. } => image_reduced(x_axis, cfg, pump, obj, quad),
    }
}

pub(crate) fn check_axis(x_axis: &[f64]) -> Result<()> {
    if x_axis.is_empty() {
        return Err(Error::EmptyAxis("x_axis"));
    }
    if x_axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("x_axis", "positions must be finite"));
    }
    Ok(())
}

/// Peak-normalized max-norm distance used by the refinement loop.
pub(crate) fn normalized_change(prev: &[f64], cur: &[f64]) -> f64 {
    let scale = |v: &[f64]| {
        let peak = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if peak > 0.0 {
            peak
        } else {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        }
    };
    let (sp, sc) = (scale(prev), scale(cur));
    if sp == 0.0 && sc == 0.0 {
        return 0.0;
    }
    if sp == 0.0 || sc == 0.0 {
        return f64::INFINITY;
    }
    prev.iter()
        .zip(cur)
        .fold(0.0, |m, (a, b)| f64::max(m, (a / sp - b / sc).abs()))
}

/// Doubles the node level until two successive images agree to `quad.rel_tol`.
pub(crate) fn refine<T>(
    quad: &QuadratureSpec,
    mut eval: impl FnMut(usize) -> Result<(Vec<f64>, T)>,
) -> Result<(Vec<f64>, T, usize, f64, usize)> {
    let (mut prev, _) = eval(1)?;
    let mut achieved = f64::INFINITY;
    for r in 1..=quad.n_refine_max {
        let level = 1 << r;
        let (cur, extra) = eval(level)?;
        achieved = normalized_change(&prev, &cur);
        if achieved < quad.rel_tol {
            return Ok((cur, extra, level, achieved, r));
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        achieved,
        requested: quad.rel_tol,
        n_theta: quad.n_theta << quad.n_refine_max,
        refinements: quad.n_refine_max,
    })
}
