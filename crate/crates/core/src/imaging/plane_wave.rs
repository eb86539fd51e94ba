//! Plane-wave pump limit.
//!
//! With `E_P → δ(q_S + q_I)` each source emits perfectly anti-correlated pairs
//! and the image separates into two one-dimensional transforms over the common
//! band `|q| ≤ q_m = 2π min(1/λ_S, 1/λ_I)`:
//!
//! ```text
//! A(y) = ∫dq cos(qy) sinc_B(q) / k_zS(q)
//! B(y) = ∫dq cos(qy) sinc_A(q) / [k_zS(q) k_zI(q)]
//! I(x) = ½ [A(x + d/2) B(x + d/2) + A(x − d/2) B(x − d/2)]
//! ```
//!
//! The substitution `q = q_m sin u` removes the inverse-square-root edge of the
//! photon whose wavenumber sets `q_m`. The other photon keeps a finite `k_z` at
//! the band edge unless the pair is degenerate, where `B` diverges
//! logarithmically and a finite pump width is required.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use num_complex::Complex64;

use super::grid::XAxis;
use super::{check_axis, refine, Diagnostics, ImageProfile, Method, SlitObject};
use crate::error::{Error, Result};
use crate::optics::{kz_k, sinc, OpticalConfig, PumpProfile, Wavenumbers};
use crate::quadrature::{Nodes, QuadratureSpec};

/// Relative wavenumber difference below which the pair counts as degenerate.
const DEGENERATE_RTOL: f64 = 1e-9;

/// Double-slit convolution term for a plane-wave pump,
/// `cos[(d/2)(q_S + q_I)] sinc{(L_B/2)[k_P − k_zS − κ]}` on `|q_S| ≤ q_m`, zero outside.
pub fn plane_wave_conv(q_s: f64, q_i: f64, d: f64, cfg: &OpticalConfig, l_b: f64) -> f64 {
    let k = Wavenumbers::of(cfg);
    let qm = k.k_s.min(k.k_i);
    if q_s.abs() > qm {
        return 0.0;
    }
    let (Some(kzs), Some(kappa)) = (kz_k(q_s, k.k_s), kz_k(q_s, k.k_i)) else {
        return 0.0;
    };
    let m = if l_b == 0.0 {
        1.0
    } else {
        sinc(0.5 * l_b * (k.k_p - kzs - kappa))
    };
    (0.5 * d * (q_s + q_i)).cos() * m
}

struct Band {
    q: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn band(k: &Wavenumbers, cfg: &OpticalConfig, y_ext: f64, n_theta: usize, level: usize) -> Band {
    let qm = k.k_s.min(k.k_i);
    let signal_limits = k.k_s <= k.k_i;
    let l_max = cfg.l_a.max(cfg.l_b);
    let span = qm * y_ext + 0.5 * l_max * (k.k_s + k.k_i);
    let n = level * ((n_theta / 2).max(16)).max((2.6 * span).ceil() as usize);
    let mut nodes = Nodes::default();
    nodes.push_panel(-FRAC_PI_2, 0.0, n, 2);
    nodes.push_panel(0.0, FRAC_PI_2, n, 2);
    let mut out = Band {
        q: Vec::with_capacity(nodes.len()),
        a: Vec::with_capacity(nodes.len()),
        b: Vec::with_capacity(nodes.len()),
    };
    for (u, w) in nodes.iter() {
        let q = qm * u.sin();
        let cos_u = if u.abs() > 1.0 {
            (FRAC_PI_2 - u.abs()).sin()
        } else {
            u.cos()
        };
        // dq = q_m cos u du; the band-setting photon has k_z = q_m cos u exactly
        let (kzs, kzi) = if signal_limits {
            (qm * cos_u, kz_k(q, k.k_i).unwrap_or(0.0))
        } else {
            (kz_k(q, k.k_s).unwrap_or(0.0), qm * cos_u)
        };
        let mismatch = k.k_p - kzs - kzi;
        let pi = |l: f64| if l == 0.0 { 1.0 } else { sinc(0.5 * l * mismatch) };
        let (a, b) = if signal_limits {
            // A: (q_m cos u)/k_zS = 1; B: (q_m cos u)/(k_zS k_zI) = 1/k_zI
            (w * pi(cfg.l_b), w * pi(cfg.l_a) / kzi)
        } else {
            (w * qm * cos_u * pi(cfg.l_b) / kzs, w * pi(cfg.l_a) / kzs)
        };
        out.q.push(q);
        out.a.push(a);
        out.b.push(b);
    }
    out
}

fn transform(q: &[f64], c: &[f64], ys: &[f64]) -> Vec<f64> {
    let axis = XAxis::new(ys);
    let mut acc = vec![Complex64::new(0.0, 0.0); ys.len()];
    for (&qq, &cc) in q.iter().zip(c) {
        axis.accumulate(qq, Complex64::new(cc, 0.0), &mut acc);
    }
    acc.into_iter().map(|z| z.re).collect()
}

/// Interference image for a plane-wave pump, peak-normalized.
///
/// Errors with [`Error::Divergent`] for degenerate wavelengths, where the
/// plane-wave limit of the image integral does not exist.
pub fn image_plane_wave(
    x_axis: &[f64],
    cfg: &OpticalConfig,
    obj: &SlitObject,
    quad: &QuadratureSpec,
) -> Result<ImageProfile> {
    let start = Instant::now();
    check_axis(x_axis)?;
    cfg.validate()?;
    obj.validate()?;
    quad.validate()?;
    let k = Wavenumbers::of(cfg);
    if ((k.k_s - k.k_i) / k.k_s).abs() < DEGENERATE_RTOL {
        return Err(Error::Divergent(
            "degenerate signal and idler: the plane-wave image integral diverges at the band edge; use a Gaussian pump"
                .into(),
        ));
    }
    let d = obj.separation();
    let shifted = |s: f64| x_axis.iter().map(|x| x + s).collect::<Vec<_>>();
    let (plus, minus) = (shifted(0.5 * d), shifted(-0.5 * d));
    let y_ext = x_axis.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 0.5 * d;
    let (raw, n, level, achieved, refinements) = refine(quad, |level| {
        let bd = band(&k, cfg, y_ext, quad.n_theta, level);
        let img = match obj {
            SlitObject::Opaque => vec![0.0; x_axis.len()],
            SlitObject::SingleSlit => {
                let a = transform(&bd.q, &bd.a, x_axis);
                let b = transform(&bd.q, &bd.b, x_axis);
                a.iter().zip(&b).map(|(a, b)| a * b).collect()
            }
            SlitObject::DoubleSlit { .. } => {
                let (ap, bp) = (transform(&bd.q, &bd.a, &plus), transform(&bd.q, &bd.b, &plus));
                let (am, bm) = (transform(&bd.q, &bd.a, &minus), transform(&bd.q, &bd.b, &minus));
                (0..x_axis.len())
                    .map(|i| 0.5 * (ap[i] * bp[i] + am[i] * bm[i]))
                    .collect()
            }
        };
        Ok((img, bd.q.len()))
    })?;
    let diagnostics = Diagnostics {
        level,
        n_theta_s: n,
        n_theta_i: n,
        achieved_tol: achieved,
        refinements,
        wall_time_s: start.elapsed().as_secs_f64(),
        direct: None,
    };
    Ok(ImageProfile::from_raw(
        x_axis.to_vec(),
        raw,
        super::engine::meta(cfg, &PumpProfile::PlaneWave, obj, quad, Method::PlaneWave),
        diagnostics,
    ))
}
