//! Reduced angular image integral.
//!
//! Doing the `x_I` integral first turns `∫dx_I Φ_A* Φ_BT` into
//!
//! ```text
//! I(x) = 2π s ∫dθ_I Re[ G_A*(θ_I, x) H(θ_I, x) ]
//! G_A(θ_I, x) = ∫dθ'_S E_P(k_S sin θ'_S + q_I) Π(θ'_S, θ_I, L_A) e^{i k_S sin θ'_S x}
//! H(θ_I, x)   = ∫dθ_S Re{e^{i d q_I/2} C(θ_S)} e^{i q_S x}
//! C(θ_S)      = ∫dθ'_I k_I cos θ'_I e^{−i d k_I sin θ'_I/2} E_P(q_S + k_I sin θ'_I) Π(θ_S, θ'_I, L_B)
//! ```
//!
//! where the `|k_I cos θ_I|^{-1}` weight has already cancelled against the two
//! `(k_I cos θ_I)^{1/2}` factors of the angular amplitudes. Writing the real part
//! as `(e^{iα}C + e^{−iα}C*)/2` makes `H` a combination of two θ_I-independent
//! transforms `P(x)` and `Q(x)`, so the cost is one pass over θ_S plus one pass
//! over the pump ridge for every θ_I.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{outer_axis, ridge_axis, AngleNode, XAxis};
use super::{check_axis, refine, Diagnostics, ImageMeta, ImageProfile, Method, SlitObject};
use crate::error::{Error, Result};
use crate::optics::{gaussian_envelope, OpticalConfig, PumpProfile, Wavenumbers};
use crate::quadrature::QuadratureSpec;

const CHUNK: usize = 16;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Ridge samples `(k_S sin θ'_S, weight · E_P · Π)` for one outer idler angle.
type Ridge = Vec<(f64, f64)>;

pub(crate) struct Engine {
    pub k: Wavenumbers,
    pub d: f64,
    pub scale: f64,
    pub theta_s: Vec<AngleNode>,
    pub c_s: Vec<Complex64>,
    pub theta_i: Vec<AngleNode>,
    pub ridge_a: Vec<Ridge>,
    pub ridge_b: Option<Vec<Ridge>>,
}

pub(crate) struct EngineParams<'a> {
    pub cfg: &'a OpticalConfig,
    pub sigma: f64,
    pub obj: &'a SlitObject,
    pub n_theta: usize,
    /// Largest |x_S| that will be evaluated.
    pub x_ext: f64,
    /// Largest |x_I| paired with the idler phase (spatial correlations only).
    pub xi_ext: f64,
    pub with_b: bool,
}

fn ridge_for(k: &Wavenumbers, sigma: f64, node: &AngleNode, x_ext: f64, thickness: f64, level: usize) -> Ridge {
    let qi = k.k_i * node.sin;
    let kzi = k.k_i * node.cos;
    ridge_axis(k.k_s, qi, sigma, x_ext, thickness, level)
        .into_iter()
        .filter_map(|n| {
            let qs = k.k_s * n.sin;
            let c = n.w * gaussian_envelope(qs + qi, sigma) * k.mismatch_sinc(qs, k.k_s * n.cos, qi, kzi, thickness);
            (c != 0.0).then_some((qs, c))
        })
        .collect()
}

/// `C(θ_S)` by quadrature over the pump ridge in θ'_I.
fn c_integral(k: &Wavenumbers, sigma: f64, d: f64, l_b: f64, node: &AngleNode, level: usize) -> (Complex64, f64) {
    let qs = k.k_s * node.sin;
    let kzs = k.k_s * node.cos;
    let mut acc = ZERO;
    let mut abs = 0.0;
    for n in ridge_axis(k.k_i, qs, sigma, 0.5 * d, l_b, level) {
        let qi = k.k_i * n.sin;
        let kzi = k.k_i * n.cos;
        let v = n.w * kzi * gaussian_envelope(qs + qi, sigma) * k.mismatch_sinc(qs, kzs, qi, kzi, l_b);
        acc += v * Complex64::cis(-0.5 * d * qi);
        abs += v.abs();
    }
    (acc, abs)
}

impl Engine {
    pub fn new(p: &EngineParams, level: usize) -> Self {
        let k = Wavenumbers::of(p.cfg);
        let d = p.obj.separation();
        let (l_a, l_b) = (p.cfg.l_a, p.cfg.l_b);
        let phase_s = p.x_ext + 0.5 * d;
        let phase_i = p.x_ext.max(p.xi_ext) + 0.5 * d;
        let theta_s = outer_axis(k.k_s, k.k_i, phase_s, l_b, p.n_theta, level);
        let theta_i = outer_axis(k.k_i, k.k_s, phase_i, l_a, p.n_theta, level);
        let c_s: Vec<Complex64> = theta_s
            .par_iter()
            .map(|n| c_integral(&k, p.sigma, d, l_b, n, level).0)
            .collect();
        let ridges = |thickness: f64| -> Vec<Ridge> {
            theta_i
                .par_iter()
                .map(|n| ridge_for(&k, p.sigma, n, p.x_ext, thickness, level))
                .collect()
        };
        let ridge_a = ridges(l_a);
        let ridge_b = p.with_b.then(|| ridges(l_b));
        Engine {
            k,
            d,
            scale: p.obj.spectral_scale(p.cfg),
            theta_s,
            c_s,
            theta_i,
            ridge_a,
            ridge_b,
        }
    }

    /// `P(x) = Σ w C e^{i q_S x}` and `Q(x) = Σ w C* e^{i q_S x}`.
    fn p_q(&self, axis: &XAxis) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = axis.len();
        let mut p = vec![ZERO; n];
        let mut q = vec![ZERO; n];
        for (node, c) in self.theta_s.iter().zip(&self.c_s) {
            if *c == ZERO {
                continue;
            }
            let qs = self.k.k_s * node.sin;
            axis.accumulate(qs, node.w * c, &mut p);
            axis.accumulate(qs, node.w * c.conj(), &mut q);
        }
        (p, q)
    }

    /// `H(θ_I, x)` for every x, without the object scale.
    fn h_into(&self, node: &AngleNode, p: &[Complex64], q: &[Complex64], out: &mut [Complex64]) {
        let e = Complex64::cis(0.5 * self.d * self.k.k_i * node.sin);
        let (ep, eq) = (0.5 * e, 0.5 * e.conj());
        for ((o, a), b) in out.iter_mut().zip(p).zip(q) {
            *o = ep * a + eq * b;
        }
    }

    fn g_into(ridge: &Ridge, axis: &XAxis, out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        for &(q, c) in ridge {
            axis.accumulate(q, Complex64::new(c, 0.0), out);
        }
    }

    /// Interference term and, when the engine was built with source B, background.
    pub fn evaluate(&self, axis: &XAxis) -> (Vec<f64>, Option<Vec<f64>>) {
        let n = axis.len();
        let (p, q) = self.p_q(axis);
        let with_b = self.ridge_b.is_some();
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..self.theta_i.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut interf = vec![0.0; n];
                let mut bg = vec![0.0; if with_b { n } else { 0 }];
                let mut g = vec![ZERO; n];
                let mut h = vec![ZERO; n];
                for &m in idx {
                    let node = &self.theta_i[m];
                    let ridge = &self.ridge_a[m];
                    if ridge.is_empty() && !with_b {
                        continue;
                    }
                    Self::g_into(ridge, axis, &mut g);
                    self.h_into(node, &p, &q, &mut h);
                    for ((acc, a), b) in interf.iter_mut().zip(&g).zip(&h) {
                        *acc += node.w * (a.conj() * b).re;
                    }
                    if let Some(rb) = &self.ridge_b {
                        for (acc, a) in bg.iter_mut().zip(&g) {
                            *acc += node.w * a.norm_sqr();
                        }
                        Self::g_into(&rb[m], axis, &mut g);
                        for (acc, b) in bg.iter_mut().zip(&g) {
                            *acc += node.w * b.norm_sqr();
                        }
                    }
                }
                (interf, bg)
            })
            .collect();
        let mut interf = vec![0.0; n];
        let mut bg = vec![0.0; if with_b { n } else { 0 }];
        for (pi, pb) in &partials {
            interf.iter_mut().zip(pi).for_each(|(a, b)| *a += b);
            bg.iter_mut().zip(pb).for_each(|(a, b)| *a += b);
        }
        let s = 2.0 * PI * self.scale;
        interf.iter_mut().for_each(|v| *v *= s);
        bg.iter_mut().for_each(|v| *v *= 2.0 * PI);
        (interf, with_b.then_some(bg))
    }

    /// `G(θ_I, x)` and the scaled `H(θ_I, x)` for every outer idler node (rows) and x (columns).
    pub fn fields(&self, axis: &XAxis, source: Source) -> Vec<Vec<Complex64>> {
        let n = axis.len();
        let (p, q) = if source == Source::BT {
            self.p_q(axis)
        } else {
            (Vec::new(), Vec::new())
        };
        self.theta_i
            .par_iter()
            .enumerate()
            .map(|(m, node)| {
                let mut out = vec![ZERO; n];
                match source {
                    Source::A => Self::g_into(&self.ridge_a[m], axis, &mut out),
                    Source::B => Self::g_into(
                        &self.ridge_b.as_ref().expect("engine built with source B")[m],
                        axis,
                        &mut out,
                    ),
                    Source::BT => {
                        self.h_into(node, &p, &q, &mut out);
                        out.iter_mut().for_each(|v| *v *= self.scale);
                    }
                }
                out
            })
            .collect()
    }

    pub fn diagnostics(&self, level: usize) -> Diagnostics {
        Diagnostics {
            level,
            n_theta_s: self.theta_s.len(),
            n_theta_i: self.theta_i.len(),
            ..Default::default()
        }
    }
}

pub(crate) struct Prepared<'a> {
    pub params: EngineParams<'a>,
    pub axis: XAxis,
}

pub(crate) fn prepare<'a>(
    x_axis: &[f64],
    cfg: &'a OpticalConfig,
    pump: &PumpProfile,
    obj: &'a SlitObject,
    quad: &QuadratureSpec,
    op: &'static str,
    with_b: bool,
) -> Result<Prepared<'a>> {
    check_axis(x_axis)?;
    cfg.validate()?;
    obj.validate()?;
    quad.validate()?;
    let sigma = pump.require_sigma(op)?;
    let axis = XAxis::new(x_axis);
    Ok(Prepared {
        params: EngineParams {
            cfg,
            sigma,
            obj,
            n_theta: quad.n_theta,
            x_ext: axis.extent(),
            xi_ext: 0.0,
            with_b,
        },
        axis,
    })
}

/// Interference image from the reduced angular integral, peak-normalized.
///
/// Node counts scale with the oscillation of the integrand over the requested
/// axis and are doubled until successive images agree to `quad.rel_tol`.
pub fn image_reduced(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<ImageProfile> {
    let start = Instant::now();
    let prep = prepare(x_axis, cfg, pump, obj, quad, "image_reduced", false)?;
    let (raw, diag, _, achieved, refinements) = refine(quad, |level| {
        let engine = Engine::new(&prep.params, level);
        let (interf, _) = engine.evaluate(&prep.axis);
        Ok((interf, engine.diagnostics(level)))
    })?;
    let diagnostics = Diagnostics {
        achieved_tol: achieved,
        refinements,
        wall_time_s: start.elapsed().as_secs_f64(),
        ..diag
    };
    Ok(ImageProfile::from_raw(
        x_axis.to_vec(),
        raw,
        meta(cfg, pump, obj, quad, Method::Reduced),
        diagnostics,
    ))
}

/// Reduced image at one fixed node level, without refinement.
///
/// `level` multiplies every node count; [`image_reduced`] reports the level it
/// accepted in [`Diagnostics::level`], so evaluating at twice that level is a
/// direct convergence check.
pub fn image_reduced_at_level(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
    level: usize,
) -> Result<ImageProfile> {
    if level == 0 {
        return Err(Error::invalid("level", "node level must be at least 1"));
    }
    let prep = prepare(x_axis, cfg, pump, obj, quad, "image_reduced", false)?;
    let engine = Engine::new(&prep.params, level);
    let (interf, _) = engine.evaluate(&prep.axis);
    Ok(ImageProfile::from_raw(
        x_axis.to_vec(),
        interf,
        meta(cfg, pump, obj, quad, Method::Reduced),
        engine.diagnostics(level),
    ))
}

pub(crate) fn meta(
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
    method: Method,
) -> ImageMeta {
    ImageMeta {
        config: *cfg,
        pump: *pump,
        object: *obj,
        quadrature: *quad,
        method,
    }
}

/// Camera counting rate split into its parts, on a common absolute scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateProfile {
    /// Peak-normalized interference image with the background on the same scale.
    pub profile: ImageProfile,
    pub background: Vec<f64>,
    pub interference: Vec<f64>,
}

impl RateProfile {
    /// Rate at the constructive port (`η = −π/2`): background + 2·interference.
    pub fn constructive(&self) -> Vec<f64> {
        self.background
            .iter()
            .zip(&self.interference)
            .map(|(b, i)| b + 2.0 * i)
            .collect()
    }

    /// Rate at the other beam-splitter port (`η = +π/2`): background − 2·interference.
    pub fn destructive(&self) -> Vec<f64> {
        self.background
            .iter()
            .zip(&self.interference)
            .map(|(b, i)| b - 2.0 * i)
            .collect()
    }
}

/// Full counting rate: the two single-source backgrounds plus the interference term.
pub fn counting_rate(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<RateProfile> {
    let start = Instant::now();
    let prep = prepare(x_axis, cfg, pump, obj, quad, "counting_rate", true)?;
    let (_, (interf, bg, diag), _, achieved, refinements) = refine(quad, |level| {
        let engine = Engine::new(&prep.params, level);
        let (interf, bg) = engine.evaluate(&prep.axis);
        let bg = bg.expect("engine built with source B");
        let total: Vec<f64> = bg.iter().zip(&interf).map(|(b, i)| b + 2.0 * i).collect();
        Ok((total, (interf, bg, engine.diagnostics(level))))
    })?;
    let diagnostics = Diagnostics {
        achieved_tol: achieved,
        refinements,
        wall_time_s: start.elapsed().as_secs_f64(),
        ..diag
    };
    let mut profile = ImageProfile::from_raw(
        x_axis.to_vec(),
        interf.clone(),
        meta(cfg, pump, obj, quad, Method::Reduced),
        diagnostics,
    );
    let norm = if profile.normalization > 0.0 {
        profile.normalization
    } else {
        1.0
    };
    profile.background = Some(bg.iter().map(|b| b / norm).collect());
    Ok(RateProfile {
        profile,
        background: bg,
        interference: interf,
    })
}

/// Object convolution term `conv(θ_S, θ_I)` of the transmitted source-B amplitude,
/// without the object's absolute scale.
pub fn conv_angular(
    theta_s: f64,
    theta_i: f64,
    obj: &SlitObject,
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let sigma = pump.require_sigma("conv_angular")?;
    obj.validate()?;
    quad.validate()?;
    for (name, t) in [("theta_s", theta_s), ("theta_i", theta_i)] {
        if t.is_nan() || t.abs() > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::invalid(name, format!("angle must lie in [-π/2, π/2], got {t}")));
        }
    }
    if *obj == SlitObject::Opaque {
        return Ok(0.0);
    }
    let k = Wavenumbers::of(cfg);
    let d = obj.separation();
    let node = AngleNode {
        sin: theta_s.sin(),
        cos: theta_s.cos(),
        w: 1.0,
    };
    let phase = Complex64::cis(0.5 * d * k.k_i * theta_i.sin());
    let value = |level: usize| {
        let (c, abs) = c_integral(&k, sigma, d, cfg.l_b, &node, level);
        ((phase * c).re, abs)
    };
    let (mut prev, _) = value(1);
    let mut achieved = f64::INFINITY;
    for r in 1..=quad.n_refine_max {
        let (cur, abs) = value(1 << r);
        achieved = if abs > 0.0 { (cur - prev).abs() / abs } else { 0.0 };
        if achieved < quad.rel_tol {
            return Ok(cur);
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

/// Source-A angular amplitude including the idler mode-matching weight,
/// `[k_I cos θ_I]^{1/2} E_P Π(θ_S, θ_I, L_A)`.
pub fn phi_a_angular(theta_s: f64, theta_i: f64, cfg: &OpticalConfig, pump: &PumpProfile) -> Result<Complex64> {
    let amp = crate::spdc::joint_angular_amplitude(theta_s, theta_i, cfg, pump, cfg.l_a)?;
    let weight = (cfg.k_idler() * theta_i.cos().max(0.0)).sqrt();
    Ok(amp * weight)
}

/// Two-photon spatial amplitude of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Source A.
    A,
    /// Source B without the object.
    B,
    /// Source B with the idler filtered by the object.
    BT,
}

/// Spatial correlation amplitudes on a grid; `values[i][j]` belongs to `(x_s[i], x_i[j])`.
#[derive(Debug, Clone)]
pub struct CorrelationMap {
    pub x_s: Vec<f64>,
    pub x_i: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    pub source: Source,
    pub diagnostics: Diagnostics,
}

impl CorrelationMap {
    /// `|Φ|²` divided by its maximum.
    pub fn probability(&self) -> Vec<Vec<f64>> {
        let peak = self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
        let norm = if peak > 0.0 { peak } else { 1.0 };
        self.values
            .iter()
            .map(|row| row.iter().map(|v| v.norm_sqr() / norm).collect())
            .collect()
    }
}

/// `Φ(x_S, x_I) = ∫∫ dθ_S dθ_I φ(θ_S, θ_I) exp[i(k_S sin θ_S x_S + k_I sin θ_I x_I)]`
/// at a single point.
#[allow(clippy::too_many_arguments)]
pub fn spatial_correlation(
    source: Source,
    x_s: f64,
    x_i: f64,
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let map = spatial_correlation_map(source, &[x_s], &[x_i], cfg, pump, obj, quad)?;
    Ok(map.values[0][0])
}

/// [`spatial_correlation`] on the tensor grid `x_s × x_i`.
#[allow(clippy::too_many_arguments)]
pub fn spatial_correlation_map(
    source: Source,
    x_s: &[f64],
    x_i: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<CorrelationMap> {
    let start = Instant::now();
    check_axis(x_i)?;
    let mut prep = prepare(x_s, cfg, pump, obj, quad, "spatial_correlation", source == Source::B)?;
    let xi_axis = XAxis::new(x_i);
    prep.params.xi_ext = xi_axis.extent();
    let eval = |level: usize| -> (Vec<Vec<Complex64>>, Diagnostics) {
        let engine = Engine::new(&prep.params, level);
        let fields = engine.fields(&prep.axis, source);
        let rows: Vec<Vec<Complex64>> = (0..prep.axis.len())
            .into_par_iter()
            .map(|i| {
                let mut row = vec![ZERO; xi_axis.len()];
                for (node, f) in engine.theta_i.iter().zip(&fields) {
                    let c = f[i] * node.w * (engine.k.k_i * node.cos).sqrt();
                    if c != ZERO {
                        xi_axis.accumulate(engine.k.k_i * node.sin, c, &mut row);
                    }
                }
                row
            })
            .collect();
        (rows, engine.diagnostics(level))
    };
    let (mut prev, _) = eval(1);
    let mut achieved = f64::INFINITY;
    for r in 1..=quad.n_refine_max {
        let (cur, diag) = eval(1 << r);
        achieved = complex_change(&prev, &cur);
        if achieved < quad.rel_tol {
            return Ok(CorrelationMap {
                x_s: x_s.to_vec(),
                x_i: x_i.to_vec(),
                values: cur,
                source,
                diagnostics: Diagnostics {
                    achieved_tol: achieved,
                    refinements: r,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    ..diag
                },
            });
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

fn complex_change(prev: &[Vec<Complex64>], cur: &[Vec<Complex64>]) -> f64 {
    let peak = cur.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    prev.iter()
        .flatten()
        .zip(cur.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
        / peak
}
