//! Resolution under the 20 % dip criterion, point-spread functions, the
//! paraxial closed form and parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{image, ImageProfile, SlitObject};
use crate::optics::{OpticalConfig, PumpProfile};
use crate::quadrature::QuadratureSpec;

/// Dip criterion: two slits are resolved when `I(0) ≤ 0.8 · max I`.
pub const DIP_THRESHOLD: f64 = 0.8;

/// `I(0)/max I` for a peak-normalized image of a centered object.
///
/// `I(0)` comes from the parabola through the three samples nearest to `x = 0`.
pub fn dip_ratio(profile: &ImageProfile) -> Result<f64> {
    let (xs, ys) = (&profile.x_axis, &profile.values);
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::MalformedProfile(format!(
            "need at least three samples with matching axes, got {} positions and {} values",
            xs.len(),
            ys.len()
        )));
    }
    let peak = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak.is_nan() || peak <= 0.0 || ys.iter().any(|v| !v.is_finite()) {
        return Err(Error::MalformedProfile(format!(
            "image maximum must be positive and finite, got {peak}"
        )));
    }
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs()));
    let p: Vec<(f64, f64)> = idx[..3].iter().map(|&i| (xs[i], ys[i])).collect();
    let at_zero =
        lagrange_at_zero(&p).ok_or_else(|| Error::MalformedProfile("duplicate positions next to x = 0".into()))?;
    Ok(at_zero / peak)
}

fn lagrange_at_zero(p: &[(f64, f64)]) -> Option<f64> {
    let mut sum = 0.0;
    for (i, &(xi, yi)) in p.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(xj, _)) in p.iter().enumerate() {
            if i != j {
                let den = xi - xj;
                if den == 0.0 {
                    return None;
                }
                basis *= (0.0 - xj) / den;
            }
        }
        sum += yi * basis;
    }
    Some(sum)
}

/// Search controls for [`min_resolvable_distance`]. Unset fields take
/// configuration-dependent defaults, recorded in the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Upper end of the coarse scan; default `max(1.2 λ_max, 2 d_paraxial)`.
    pub d_hi: Option<f64>,
    /// Bisection stops once the bracket is narrower than this; default `λ_max/200`.
    pub tol_d: Option<f64>,
    /// Coarse-scan points; the scan step is `d_hi / n_scan`.
    pub n_scan: usize,
    /// Image samples on `[-1.5d, 1.5d]`.
    pub n_samples: usize,
    /// Accepted `|dip − 0.8|` at the returned distance.
    pub dip_tol: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            d_hi: None,
            tol_d: None,
            n_scan: 16,
            n_samples: 201,
            dip_tol: 0.005,
        }
    }
}

impl SearchSpec {
    fn validate(&self) -> Result<()> {
        if let Some(d) = self.d_hi {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid("d_hi", format!("must be finite and > 0, got {d}")));
            }
        }
        if let Some(t) = self.tol_d {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid("tol_d", format!("must be finite and > 0, got {t}")));
            }
        }
        if self.n_scan < 2 {
            return Err(Error::invalid("n_scan", "need at least two scan points"));
        }
        if self.n_samples < 3 {
            return Err(Error::invalid("n_samples", "need at least three image samples"));
        }
        if !(self.dip_tol > 0.0 && self.dip_tol < 0.2) {
            return Err(Error::invalid(
                "dip_tol",
                format!("must lie in (0, 0.2), got {}", self.dip_tol),
            ));
        }
        Ok(())
    }

    fn resolved(&self, cfg: &OpticalConfig) -> (f64, f64) {
        let lmax = cfg.lambda_max();
        let d_hi = self.d_hi.unwrap_or_else(|| {
            let par = paraxial_dmin(cfg.lambda_signal, cfg.lambda_idler, cfg.l_a, cfg.l_b).unwrap_or(0.0);
            (1.2 * lmax).max(2.0 * par)
        });
        (d_hi, self.tol_d.unwrap_or(lmax / 200.0))
    }
}

/// Outcome of a minimum-resolvable-distance search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionResult {
    pub d_min: f64,
    pub dip_at_dmin: f64,
    /// Final bisection bracket; `bracket.0 < d_min < bracket.1`.
    pub bracket: (f64, f64),
    /// Bisection steps after the coarse scan.
    pub iterations: usize,
    /// `(d, dip)` pairs of the coarse scan.
    pub scan: Vec<(f64, f64)>,
    pub config: OpticalConfig,
    pub pump: PumpProfile,
    pub quadrature: QuadratureSpec,
    pub search: SearchSpec,
    pub wall_time_s: f64,
}

/// Dip ratio of the double-slit image at separation `d`.
pub fn dip_at(d: f64, cfg: &OpticalConfig, pump: &PumpProfile, quad: &QuadratureSpec, n_samples: usize) -> Result<f64> {
    let obj = SlitObject::double(d)?;
    let xs = crate::spdc::uniform_axis(-1.5 * d, 1.5 * d, n_samples);
    dip_ratio(&image(&xs, cfg, pump, &obj, quad)?)
}

/// Smallest slit separation whose image shows the 20 % dip.
///
/// A coarse scan in steps of `d_hi/n_scan` finds the first separation below the
/// threshold (extending `d_hi` up to twice if needed), then bisection narrows
/// the bracket to `tol_d` with the dip within `dip_tol` of 0.8. A plane-wave
/// pump is evaluated with the analytic plane-wave path.
pub fn min_resolvable_distance(
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    quad: &QuadratureSpec,
    search: &SearchSpec,
) -> Result<ResolutionResult> {
    let start = Instant::now();
    cfg.validate()?;
    quad.validate()?;
    search.validate()?;
    let (mut d_hi, tol_d) = search.resolved(cfg);
    let dip = |d: f64| dip_at(d, cfg, pump, quad, search.n_samples);

    let mut scan: Vec<(f64, f64)> = Vec::new();
    let mut bracket = None;
    let mut d_lo_scan = 0.0;
    'extend: for _ in 0..3 {
        let step = (d_hi - d_lo_scan) / search.n_scan as f64;
        for k in 1..=search.n_scan {
            let d = d_lo_scan + step * k as f64;
            let v = dip(d)?;
            if let Some(&(_, prev)) = scan.last() {
                if v > prev + 1e-3 {
                    scan.push((d, v));
                    return Err(Error::Bracket {
                        reason: format!("dip ratio increases with separation near d = {d:.4e} m"),
                        scan,
                    });
                }
            }
            scan.push((d, v));
            if v < DIP_THRESHOLD {
                if scan.len() == 1 {
                    return Err(Error::Bracket {
                        reason: format!("already resolved at the first scan point d = {d:.4e} m"),
                        scan,
                    });
                }
                bracket = Some((scan[scan.len() - 2], (d, v)));
                break 'extend;
            }
        }
        d_lo_scan = d_hi;
        d_hi *= 2.0;
    }
    let Some(((mut lo, _), (mut hi, _))) = bracket else {
        return Err(Error::Bracket {
            reason: format!("no separation up to {:.4e} m reaches the 20 % dip", d_lo_scan),
            scan,
        });
    };

    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let v = dip(mid)?;
        iterations += 1;
        if hi - lo < tol_d && (v - DIP_THRESHOLD).abs() <= search.dip_tol {
            return Ok(ResolutionResult {
                d_min: mid,
                dip_at_dmin: v,
                bracket: (lo, hi),
                iterations,
                scan,
                config: *cfg,
                pump: *pump,
                quadrature: *quad,
                search: SearchSpec {
                    d_hi: Some(d_hi),
                    tol_d: Some(tol_d),
                    ..*search
                },
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
        if iterations >= 64 {
            return Err(Error::Bracket {
                reason: format!("bisection stalled at d = {mid:.6e} m with dip {v:.4}"),
                scan,
            });
        }
        if v > DIP_THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Image of a single slit with its main-lobe width and first side lobe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsfProfile {
    pub profile: ImageProfile,
    /// Full width at half maximum of the central lobe (m), if both half-maximum crossings are on the axis.
    pub fwhm: Option<f64>,
    /// Value of the first minimum to the right of the peak, relative to the peak.
    pub first_minimum: Option<f64>,
    /// Height of the first side-lobe maximum to the right of the peak, relative to the peak.
    pub side_lobe: Option<f64>,
}

/// Point-spread function: the single-slit image on `x_axis`.
pub fn psf(cfg: &OpticalConfig, pump: &PumpProfile, x_axis: &[f64], quad: &QuadratureSpec) -> Result<PsfProfile> {
    let profile = image(x_axis, cfg, pump, &SlitObject::SingleSlit, quad)?;
    let (fwhm, first_minimum, side_lobe) = lobe_metrics(&profile.x_axis, &profile.values);
    Ok(PsfProfile {
        profile,
        fwhm,
        first_minimum,
        side_lobe,
    })
}

fn lobe_metrics(xs: &[f64], ys: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let Some(ipk) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
        return (None, None, None);
    };
    let peak = ys[ipk];
    if peak.is_nan() || peak <= 0.0 {
        return (None, None, None);
    }
    let half = 0.5 * peak;
    let cross = |range: Box<dyn Iterator<Item = usize>>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize - step) as usize;
            if ys[i] < half {
                let t = (ys[j] - half) / (ys[j] - ys[i]);
                return Some(xs[j] + t * (xs[i] - xs[j]));
            }
        }
        None
    };
    let right = cross(Box::new(ipk + 1..ys.len()), 1);
    let left = cross(Box::new((0..ipk).rev()), -1);
    let fwhm = right.zip(left).map(|(r, l)| r - l);
    let imin = (ipk + 1..ys.len().saturating_sub(1)).find(|&i| ys[i] <= ys[i - 1] && ys[i] <= ys[i + 1]);
    let first_minimum = imin.map(|i| ys[i] / peak);
    let side_lobe = imin
        .and_then(|m| (m + 1..ys.len().saturating_sub(1)).find(|&i| ys[i] >= ys[i - 1] && ys[i] >= ys[i + 1]))
        .map(|i| ys[i] / peak);
    (fwhm, first_minimum, side_lobe)
}

/// `2 [−ln(0.4) γ / (2π)]^{1/2}` with `γ = 0.8`, the prefactor of the paraxial estimate.
pub fn paraxial_prefactor() -> f64 {
    2.0 * (-(0.4f64).ln() * 0.8 / (2.0 * std::f64::consts::PI)).sqrt()
}

/// Paraxial minimum resolvable distance,
/// `0.683 (λ_S + λ_I)^{1/2} (1/L_A + 1/L_B)^{-1/2}`.
pub fn paraxial_dmin(lambda_s: f64, lambda_i: f64, l_a: f64, l_b: f64) -> Result<f64> {
    for (name, v) in [
        ("lambda_s", lambda_s),
        ("lambda_i", lambda_i),
        ("L_A", l_a),
        ("L_B", l_b),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("paraxial_dmin needs {name} > 0, got {v}")));
        }
    }
    Ok(paraxial_prefactor() * (lambda_s + lambda_i).sqrt() / (1.0 / l_a + 1.0 / l_b).sqrt())
}

/// One row of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Values of the swept parameters, in the order of [`SweepTable::parameters`].
    pub params: Vec<f64>,
    /// NaN when the search failed; see `status`.
    pub d_min: f64,
    pub paraxial_d_min: Option<f64>,
    pub dip_at_dmin: f64,
    /// `d_min / max(λ_S, λ_I)`.
    pub ratio: f64,
    /// `plateau` (L ≤ λ_max), `paraxial` (L ≥ 10 λ_max) or `transition`; thickness sweeps only.
    pub regime: Option<String>,
    /// `ok`, or the error that stopped this point.
    pub status: String,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl SweepPoint {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Results of a parameter sweep, one row per parameter combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    /// Names of the swept parameters, e.g. `["L"]` or `["lambda_s", "lambda_i"]`.
    pub parameters: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub pump: PumpProfile,
    pub quadrature: QuadratureSpec,
    pub search: SearchSpec,
}

impl SweepTable {
    pub fn d_min(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.d_min).collect()
    }

    /// `(max − min) / min` of the successful `d_min` values, optionally restricted by `keep`.
    pub fn relative_spread(&self, keep: impl Fn(&SweepPoint) -> bool) -> Option<f64> {
        let v: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.is_ok() && keep(p))
            .map(|p| p.d_min)
            .collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (!v.is_empty()).then(|| (hi - lo) / lo)
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.is_ok()).count()
    }
}

fn check_monotone(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyAxis(name));
    }
    let inc = v.windows(2).all(|w| w[0] < w[1]);
    let dec = v.windows(2).all(|w| w[0] > w[1]);
    if !(inc || dec) || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::invalid(
            name,
            "sweep axis must be positive and strictly monotone",
        ));
    }
    Ok(())
}

fn run_point(
    params: Vec<f64>,
    cfg: Result<OpticalConfig>,
    pump: &PumpProfile,
    quad: &QuadratureSpec,
    search: &SearchSpec,
    regime: Option<String>,
) -> SweepPoint {
    let start = Instant::now();
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return failed(params, None, regime, e, start),
    };
    let paraxial = paraxial_dmin(cfg.lambda_signal, cfg.lambda_idler, cfg.l_a, cfg.l_b).ok();
    match min_resolvable_distance(&cfg, pump, quad, search) {
        Ok(r) => SweepPoint {
            params,
            d_min: r.d_min,
            paraxial_d_min: paraxial,
            dip_at_dmin: r.dip_at_dmin,
            ratio: r.d_min / cfg.lambda_max(),
            regime,
            status: "ok".into(),
            iterations: r.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        Err(e) => failed(params, paraxial, regime, e, start),
    }
}

fn failed(params: Vec<f64>, paraxial: Option<f64>, regime: Option<String>, e: Error, start: Instant) -> SweepPoint {
    SweepPoint {
        params,
        d_min: f64::NAN,
        paraxial_d_min: paraxial,
        dip_at_dmin: f64::NAN,
        ratio: f64::NAN,
        regime,
        status: e.to_string(),
        iterations: 0,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn regime(l: f64, lambda_max: f64) -> &'static str {
    if l <= lambda_max {
        "plateau"
    } else if l >= 10.0 * lambda_max {
        "paraxial"
    } else {
        "transition"
    }
}

/// `d_min` against crystal thickness with `L_A = L_B = L`.
pub fn sweep_thickness(
    base: &OpticalConfig,
    pump: &PumpProfile,
    l_values: &[f64],
    quad: &QuadratureSpec,
    search: &SearchSpec,
) -> Result<SweepTable> {
    check_monotone("L_values", l_values)?;
    let points = l_values
        .par_iter()
        .map(|&l| {
            let label = regime(l, base.lambda_max()).to_string();
            run_point(vec![l], base.with_thickness(l, l), pump, quad, search, Some(label))
        })
        .collect();
    Ok(SweepTable {
        parameters: vec!["L".into()],
        points,
        pump: *pump,
        quadrature: *quad,
        search: *search,
    })
}

/// `d_min` against the Gaussian pump width at fixed crystals.
pub fn sweep_pump_width(
    cfg: &OpticalConfig,
    sigma_values: &[f64],
    quad: &QuadratureSpec,
    search: &SearchSpec,
) -> Result<SweepTable> {
    check_monotone("sigma_values", sigma_values)?;
    let points = sigma_values
        .par_iter()
        .map(|&s| match PumpProfile::gaussian(s) {
            Ok(p) => run_point(vec![s], Ok(*cfg), &p, quad, search, None),
            Err(e) => failed(vec![s], None, None, e, Instant::now()),
        })
        .collect();
    Ok(SweepTable {
        parameters: vec!["sigma_p".into()],
        points,
        pump: PumpProfile::plane_wave_surrogate(),
        quadrature: *quad,
        search: *search,
    })
}

/// `d_min` on the grid `lambda_s × lambda_i` (row-major in `lambda_s`) at
/// thickness `l` for both crystals.
pub fn sweep_wavelengths(
    lambda_s_values: &[f64],
    lambda_i_values: &[f64],
    l: f64,
    pump: &PumpProfile,
    quad: &QuadratureSpec,
    search: &SearchSpec,
) -> Result<SweepTable> {
    check_monotone("lambda_s_values", lambda_s_values)?;
    check_monotone("lambda_i_values", lambda_i_values)?;
    let grid: Vec<(f64, f64)> = lambda_s_values
        .iter()
        .flat_map(|&s| lambda_i_values.iter().map(move |&i| (s, i)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(s, i)| {
            run_point(
                vec![s, i],
                OpticalConfig::from_signal_idler(s, i, l, l),
                pump,
                quad,
                search,
                None,
            )
        })
        .collect();
    Ok(SweepTable {
        parameters: vec!["lambda_s".into(), "lambda_i".into()],
        points,
        pump: *pump,
        quadrature: *quad,
        search: *search,
    })
}
