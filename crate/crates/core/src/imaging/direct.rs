//! Brute-force image: `Φ_A` and `Φ_BT` on an explicit idler-position grid.
//!
//! `Φ_BT` is assembled from the full `conv(θ_S, θ_I)` matrix rather than the
//! factorised transforms of the reduced path, and the `x_I` integral is a
//! trapezoid rule on a truncated window. The idler spectrum has inverse
//! square-root edges at `|q_I| = k_I`, so the integrand decays like `x_I^{-1}`
//! and truncation at half-width `W` leaves an error proportional to `W^{-1/2}`;
//! the two windows `W/4` and `W` sampled by the same grid remove that term by
//! Richardson extrapolation.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{image_reduced, meta, prepare, Engine, Source};
use super::grid::XAxis;
use super::{Diagnostics, ImageProfile, Method, SlitObject};
use crate::error::{Error, Result};
use crate::optics::{OpticalConfig, PumpProfile};
use crate::quadrature::QuadratureSpec;

/// Required ratio of the boundary envelope `|Φ_A||Φ_BT|` to its maximum.
pub const WINDOW_RATIO: f64 = 1e-4;
/// Number of window doublings attempted before giving up.
const MAX_DOUBLINGS: usize = 16;

/// Window and tail figures of a direct evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectDiagnostics {
    /// Half-width `W` of the `x_I` window (m).
    pub half_width: f64,
    /// Largest boundary-to-peak envelope ratio over the `x_S` samples.
    pub boundary_ratio: f64,
    /// Trapezoid step along `x_I` (m).
    pub step: f64,
    pub n_xi: usize,
    /// Half width at half maximum of `|Φ_A(0, x_I)|` (m).
    pub sigma_corr: f64,
    /// Largest change made by the tail extrapolation, relative to the image peak.
    pub tail_correction: f64,
}

struct Fields {
    engine: Engine,
    /// `G_A(θ_m, x_S)`, rows over the outer idler nodes.
    g: Vec<Vec<Complex64>>,
    /// `Φ_BT` angular spectrum `B(θ_m, x_S)` from the explicit conv matrix.
    b: Vec<Vec<Complex64>>,
    /// `w_m (k_I cos θ_m)^{1/2}` per outer idler node.
    weight: Vec<f64>,
    q: Vec<f64>,
}

impl Fields {
    fn new(engine: Engine, x_axis: &[f64]) -> Self {
        let k_i = engine.k.k_i;
        Fields {
            g: engine.fields(&XAxis::new(x_axis), Source::A),
            b: conv_matrix_transform(&engine, x_axis),
            weight: engine.theta_i.iter().map(|n| n.w * (k_i * n.cos).sqrt()).collect(),
            q: engine.theta_i.iter().map(|n| k_i * n.sin).collect(),
            engine,
        }
    }

    /// `Σ_m weight_m e^{i q_m x_I} f_m` on the given idler positions.
    fn synthesize(&self, coeff: impl Fn(usize) -> Complex64, xi: &XAxis) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); xi.len()];
        for m in 0..self.q.len() {
            let c = coeff(m) * self.weight[m];
            if c.norm_sqr() > 0.0 {
                xi.accumulate(self.q[m], c, &mut out);
            }
        }
        out
    }

    fn phi_a(&self, i: usize, xi: &XAxis) -> Vec<Complex64> {
        self.synthesize(|m| self.g[m][i], xi)
    }

    fn phi_bt(&self, i: usize, xi: &XAxis) -> Vec<Complex64> {
        self.synthesize(|m| self.b[m][i], xi)
    }

    fn n_x(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    /// Largest ratio over `x_S` of the envelope `|Φ_A||Φ_BT|` near `±w` to its peak inside `±w0`.
    fn boundary_ratio(&self, w0: f64, w: f64, lambda_i: f64, step: f64) -> f64 {
        let central = uniform(-w0, w0, step);
        // a full idler period on each side so oscillation nodes do not hide the envelope
        let edge = XAxis::General(
            (0..8)
                .flat_map(|j| {
                    let x = w - lambda_i * j as f64 / 8.0;
                    [x, -x]
                })
                .collect(),
        );
        let envelope = |i: usize, ax: &XAxis| {
            let (a, bt) = (self.phi_a(i, ax), self.phi_bt(i, ax));
            a.iter().zip(&bt).fold(0.0f64, |m, (a, b)| m.max(a.norm() * b.norm()))
        };
        (0..self.n_x())
            .into_par_iter()
            .map(|i| {
                let peak = envelope(i, &central);
                if peak == 0.0 {
                    0.0
                } else {
                    envelope(i, &edge) / peak
                }
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Interference image from `∫dx_I Re(Φ_A* Φ_BT)` on an explicit `x_I` grid, peak-normalized.
///
/// The angular node level is the one at which [`image_reduced`] converges for
/// the same inputs; the idler grid is then widened until it resolves
/// `e^{i q_I x_I}` across the whole window. Intended for short axes.
pub fn image_direct(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<ImageProfile> {
    let start = Instant::now();
    let level = image_reduced(x_axis, cfg, pump, obj, quad)?.diagnostics.level;
    let mut prep = prepare(x_axis, cfg, pump, obj, quad, "image_direct", false)?;
    let nx = x_axis.len();
    let step = cfg.lambda_idler / 4.0;

    let probe_ext = 200.0 * cfg.lambda_idler;
    prep.params.xi_ext = probe_ext;
    let sigma_corr = correlation_half_width(&Fields::new(Engine::new(&prep.params, level), &[0.0]), probe_ext, step)
        .unwrap_or(cfg.lambda_idler);
    let w0 = (3.0 * sigma_corr).max(2.0 * obj.separation()).max(cfg.lambda_idler);
    let mut w = w0;
    let mut doublings = 0;
    let (fields, ratio) = loop {
        prep.params.xi_ext = w;
        let fields = Fields::new(Engine::new(&prep.params, level), x_axis);
        let ratio = fields.boundary_ratio(w0, w, cfg.lambda_idler, step);
        if ratio < WINDOW_RATIO {
            break (fields, ratio);
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::WindowTooSmall { ratio, half_width: w });
        }
        w *= 2.0;
        doublings += 1;
    };

    // Grid with ±W/4 on nodes: x_n = −W + n h, n = 0..=8m.
    let m = (w / (4.0 * step)).ceil() as usize;
    let h = w / (4 * m) as f64;
    let n_xi = 8 * m + 1;
    let grid = XAxis::Uniform {
        x0: -((4 * m) as f64) * h,
        h,
        n: n_xi,
    };
    let (full, quarter): (Vec<f64>, Vec<f64>) = (0..nx)
        .into_par_iter()
        .map(|i| {
            let (a, bt) = (fields.phi_a(i, &grid), fields.phi_bt(i, &grid));
            let f: Vec<f64> = a.iter().zip(&bt).map(|(a, b)| (a.conj() * b).re).collect();
            (trapezoid(&f, h), trapezoid(&f[3 * m..=5 * m], h))
        })
        .unzip();
    let raw: Vec<f64> = full.iter().zip(&quarter).map(|(f, q)| 2.0 * f - q).collect();
    let peak = raw.iter().cloned().fold(0.0f64, f64::max);
    let tail_correction = if peak > 0.0 {
        raw.iter().zip(&full).fold(0.0f64, |acc, (r, f)| acc.max((r - f).abs())) / peak
    } else {
        0.0
    };
    let diagnostics = Diagnostics {
        direct: Some(DirectDiagnostics {
            half_width: w,
            boundary_ratio: ratio,
            step: h,
            n_xi,
            sigma_corr,
            tail_correction,
        }),
        wall_time_s: start.elapsed().as_secs_f64(),
        ..fields.engine.diagnostics(level)
    };
    Ok(ImageProfile::from_raw(
        x_axis.to_vec(),
        raw,
        meta(cfg, pump, obj, quad, Method::Direct),
        diagnostics,
    ))
}

/// `B(θ_m, x_S) = s Σ_j w_j conv(θ_S,j, θ_I,m) e^{i q_S,j x_S}` with the conv matrix built explicitly.
fn conv_matrix_transform(engine: &Engine, x_axis: &[f64]) -> Vec<Vec<Complex64>> {
    let k = &engine.k;
    let phases: Vec<Vec<Complex64>> = engine
        .theta_s
        .iter()
        .map(|n| {
            x_axis
                .iter()
                .map(|&x| n.w * Complex64::cis(k.k_s * n.sin * x))
                .collect()
        })
        .collect();
    engine
        .theta_i
        .par_iter()
        .map(|ni| {
            let e = Complex64::cis(0.5 * engine.d * k.k_i * ni.sin);
            let mut row = vec![Complex64::new(0.0, 0.0); x_axis.len()];
            for (c, ph) in engine.c_s.iter().zip(&phases) {
                let conv = (e * c).re;
                if conv != 0.0 {
                    for (r, p) in row.iter_mut().zip(ph) {
                        *r += conv * p;
                    }
                }
            }
            row.iter_mut().for_each(|v| *v *= engine.scale);
            row
        })
        .collect()
}

/// Half width at half maximum of `|Φ_A(0, x_I)|`, scanned outward from `x_I = 0`
/// up to `ext`; `fields` must have been built on the single position `x_S = 0`.
fn correlation_half_width(fields: &Fields, ext: f64, step: f64) -> Option<f64> {
    let ax = uniform(0.0, ext, step);
    let prof: Vec<f64> = fields.phi_a(0, &ax).iter().map(|z| z.norm()).collect();
    let peak = prof.iter().cloned().fold(0.0f64, f64::max);
    if peak == 0.0 {
        return None;
    }
    let imax = prof.iter().position(|&v| v == peak)?;
    let ihalf = prof[imax..]
        .iter()
        .position(|&v| v < 0.5 * peak)
        .map_or(prof.len() - 1, |j| j + imax);
    Some((ihalf as f64 * step).max(step))
}

fn uniform(lo: f64, hi: f64, step: f64) -> XAxis {
    let n = ((hi - lo) / step).ceil() as usize + 1;
    XAxis::Uniform {
        x0: lo,
        h: (hi - lo) / (n - 1) as f64,
        n,
    }
}

fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}
