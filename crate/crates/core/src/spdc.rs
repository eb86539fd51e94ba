//! Joint two-photon amplitudes of a single down-conversion source.
//!
//! The momentum form carries `[k_zS k_zI]^(-1/2)`, which diverges at grazing
//! emission. The angular form (`q = k sin θ`, `dq = k cos θ dθ`) absorbs that
//! factor into the Jacobian and stays finite on the whole `[-π/2, π/2]²` square.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{gaussian_envelope, kz_k, OpticalConfig, PumpProfile, Wavenumbers};

/// Coordinates of a sampled joint amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Emission angles in radians.
    Angular,
    /// Transverse wavenumbers in 1/m.
    Momentum,
}

/// Complex joint amplitude sampled on a tensor grid; `values[[i, j]]` belongs
/// to `(axis_s[i], axis_i[j])`.
#[derive(Debug, Clone)]
pub struct JointAmplitudeMap {
    pub axis_s: Vec<f64>,
    pub axis_i: Vec<f64>,
    pub values: Array2<Complex64>,
    pub representation: Representation,
}

impl JointAmplitudeMap {
    /// `|φ|²` divided by its maximum.
    pub fn probability(&self) -> ProbabilityMap {
        let mut p = self.values.mapv(|v| v.norm_sqr());
        let peak = p.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            p.mapv_inplace(|v| v / peak);
        }
        ProbabilityMap {
            axis_s: self.axis_s.clone(),
            axis_i: self.axis_i.clone(),
            values: p,
            representation: self.representation,
            normalization: peak,
        }
    }
}

/// Peak-normalized joint probability on a grid.
#[derive(Debug, Clone)]
pub struct ProbabilityMap {
    pub axis_s: Vec<f64>,
    pub axis_i: Vec<f64>,
    pub values: Array2<f64>,
    pub representation: Representation,
    /// Peak of the unnormalized `|φ|²` the values were divided by.
    pub normalization: f64,
}

impl ProbabilityMap {
    /// Fraction of the grid-summed probability whose signal coordinate satisfies `pred`.
    pub fn mass_fraction(&self, pred: impl Fn(f64) -> bool) -> f64 {
        let total: f64 = self.values.sum();
        if total <= 0.0 {
            return 0.0;
        }
        let part: f64 = self
            .axis_s
            .iter()
            .enumerate()
            .filter(|(_, &s)| pred(s))
            .map(|(i, _)| self.values.row(i).sum())
            .sum();
        part / total
    }
}

/// Joint angular amplitude `E_P[k_S sin θ_S + k_I sin θ_I] · sinc(Δk_z L/2)`.
///
/// Defined only for a Gaussian pump; a plane-wave pump collapses it onto the
/// transverse phase-matching ridge and is handled by the imaging engine.
pub fn joint_angular_amplitude(
    theta_s: f64,
    theta_i: f64,
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    thickness: f64,
) -> Result<Complex64> {
    let sigma = pump.require_sigma("joint_angular_amplitude")?;
    check_angle("theta_s", theta_s)?;
    check_angle("theta_i", theta_i)?;
    let k = Wavenumbers::of(cfg);
    Ok(Complex64::new(
        angular_amplitude(&k, sigma, theta_s, theta_i, thickness),
        0.0,
    ))
}

#[inline]
pub(crate) fn angular_amplitude(k: &Wavenumbers, sigma: f64, theta_s: f64, theta_i: f64, thickness: f64) -> f64 {
    let (ss, cs) = theta_s.sin_cos();
    let (si, ci) = theta_i.sin_cos();
    let (qs, qi) = (k.k_s * ss, k.k_i * si);
    gaussian_envelope(qs + qi, sigma) * k.mismatch_sinc(qs, k.k_s * cs, qi, k.k_i * ci, thickness)
}

fn check_angle(name: &'static str, theta: f64) -> Result<()> {
    if theta.is_finite() && theta.abs() <= FRAC_PI_2 + 1e-12 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("angle must lie in [-π/2, π/2], got {theta}"),
        ))
    }
}

/// Joint transverse-momentum amplitude
/// `E_P(q_S + q_I) · sinc(Δk_z L/2) · [k_zS k_zI]^(-1/2)`.
///
/// Zero outside the propagating rectangle; a domain error on its boundary,
/// where `k_z = 0` makes the amplitude diverge.
pub fn joint_momentum_amplitude(
    q_s: f64,
    q_i: f64,
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    thickness: f64,
) -> Result<Complex64> {
    let sigma = pump.require_sigma("joint_momentum_amplitude")?;
    let k = Wavenumbers::of(cfg);
    let (Some(kzs), Some(kzi)) = (kz_k(q_s, k.k_s), kz_k(q_i, k.k_i)) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    if kzs == 0.0 || kzi == 0.0 {
        return Err(Error::Domain(
            "momentum amplitude diverges on the propagating-rectangle boundary; use the angular form".into(),
        ));
    }
    let v = gaussian_envelope(q_s + q_i, sigma) * k.mismatch_sinc(q_s, kzs, q_i, kzi, thickness) / (kzs * kzi).sqrt();
    Ok(Complex64::new(v, 0.0))
}

/// Largest signal emission angle compatible with transverse phase matching
/// against an idler of wavelength `lambda_i`: `asin(min(1, λ_S/λ_I))`.
pub fn signal_angle_cutoff(lambda_s: f64, lambda_i: f64) -> f64 {
    (lambda_s / lambda_i).min(1.0).asin()
}

/// `n` equally spaced samples covering `[lo, hi]` including both ends.
pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// `n` cell-center samples of `(lo, hi)`; never touches the ends.
pub fn open_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + step * (i as f64 + 0.5)).collect()
}

fn check_axis(name: &'static str, axis: &[f64], bound: f64) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::EmptyAxis(name));
    }
    if !axis.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid(name, "axis must be strictly increasing"));
    }
    if axis[0] < -bound * (1.0 + 1e-12) || axis[axis.len() - 1] > bound * (1.0 + 1e-12) {
        return Err(Error::invalid(name, format!("axis leaves [-{bound:e}, {bound:e}]")));
    }
    Ok(())
}

/// Joint angular amplitude sampled on `axis_s × axis_i` (radians).
pub fn angular_amplitude_map(
    axis_s: &[f64],
    axis_i: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    thickness: f64,
) -> Result<JointAmplitudeMap> {
    let sigma = pump.require_sigma("angular_probability_map")?;
    check_axis("axis_s", axis_s, FRAC_PI_2)?;
    check_axis("axis_i", axis_i, FRAC_PI_2)?;
    let k = Wavenumbers::of(cfg);
    let rows: Vec<Vec<Complex64>> = axis_s
        .par_iter()
        .map(|&ts| {
            axis_i
                .iter()
                .map(|&ti| Complex64::new(angular_amplitude(&k, sigma, ts, ti, thickness), 0.0))
                .collect()
        })
        .collect();
    Ok(JointAmplitudeMap {
        axis_s: axis_s.to_vec(),
        axis_i: axis_i.to_vec(),
        values: rows_to_array(rows, axis_i.len()),
        representation: Representation::Angular,
    })
}

/// Peak-normalized `|φ(θ_S, θ_I)|²` on the given angular axes.
pub fn angular_probability_map(
    axis_s: &[f64],
    axis_i: &[f64],
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    thickness: f64,
) -> Result<ProbabilityMap> {
    Ok(angular_amplitude_map(axis_s, axis_i, cfg, pump, thickness)?.probability())
}

/// Momentum-representation amplitude on an open grid strictly inside the
/// propagating rectangle (`n_s × n_i` cell centers).
pub fn momentum_amplitude_map(
    n_s: usize,
    n_i: usize,
    cfg: &OpticalConfig,
    pump: &PumpProfile,
    thickness: f64,
) -> Result<JointAmplitudeMap> {
    pump.require_sigma("momentum_amplitude_map")?;
    if n_s == 0 || n_i == 0 {
        return Err(Error::EmptyAxis("momentum grid"));
    }
    let (ks, ki) = (cfg.k_signal(), cfg.k_idler());
    let axis_s = open_axis(-ks, ks, n_s);
    let axis_i = open_axis(-ki, ki, n_i);
    let rows = axis_s
        .par_iter()
        .map(|&qs| {
            axis_i
                .iter()
                .map(|&qi| joint_momentum_amplitude(qs, qi, cfg, pump, thickness))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointAmplitudeMap {
        values: rows_to_array(rows, axis_i.len()),
        axis_s,
        axis_i,
        representation: Representation::Momentum,
    })
}

fn rows_to_array<T: Clone>(rows: Vec<Vec<T>>, ncols: usize) -> Array2<T> {
    let nrows = rows.len();
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat).expect("rows have equal length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn degenerate(l: f64) -> OpticalConfig {
        OpticalConfig::from_pump_signal(500e-9, 1000e-9, l, l).unwrap()
    }

    #[test]
    fn phase_matched_center_is_unity() {
        let pump = PumpProfile::gaussian(10e-6).unwrap();
        let v = joint_angular_amplitude(0.0, 0.0, &degenerate(3e-9), &pump, 3e-9).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ridge_end_point_for_ratio_point_eight() {
        // λ_S/λ_I = 0.8: θ_I = 90° pairs with θ_S = −asin(0.8) at q_S + q_I = 0.
        let cfg = OpticalConfig::from_signal_idler(800e-9, 1000e-9, 0.0, 0.0).unwrap();
        let pump = PumpProfile::gaussian(10e-6).unwrap();
        let ts = -(0.8f64).asin();
        let v = joint_angular_amplitude(ts, FRAC_PI_2, &cfg, &pump, 0.0).unwrap();
        let k = Wavenumbers::of(&cfg);
        let q_sum = k.k_s * ts.sin() + k.k_i;
        assert!(q_sum.abs() < 1e-6 * k.k_i);
        assert_relative_eq!(v.re, (-0.5 * (10e-6 * q_sum).powi(2)).exp(), max_relative = 1e-12);
        assert_relative_eq!(
            signal_angle_cutoff(800e-9, 1000e-9),
            (0.8f64).asin(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn beyond_signal_cutoff_bounded_by_pump_tail() {
        let cfg = OpticalConfig::from_signal_idler(530e-9, 10e-6, 100e-9, 100e-9).unwrap();
        let sigma = 100e-6;
        let pump = PumpProfile::gaussian(sigma).unwrap();
        let (ks, ki) = (cfg.k_signal(), cfg.k_idler());
        for deg in [3.2f64, 4.0, 10.0] {
            let ts = deg.to_radians();
            let bound = (-0.5 * (sigma * (ks * ts.sin() - ki)).powi(2)).exp();
            for j in 0..=90 {
                let ti = -FRAC_PI_2 + PI * j as f64 / 90.0;
                let v = joint_angular_amplitude(ts, ti, &cfg, &pump, 100e-9).unwrap();
                assert!(v.norm() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn plane_wave_is_rejected() {
        let cfg = degenerate(0.0);
        assert!(matches!(
            joint_angular_amplitude(0.0, 0.0, &cfg, &PumpProfile::PlaneWave, 0.0),
            Err(Error::UnsupportedProfile(_))
        ));
    }

    #[test]
    fn momentum_amplitude_rectangle() {
        let cfg = degenerate(0.0);
        let pump = PumpProfile::gaussian(10e-6).unwrap();
        let k = cfg.k_signal();
        assert_eq!(
            joint_momentum_amplitude(1.01 * k, 0.0, &cfg, &pump, 0.0).unwrap().re,
            0.0
        );
        assert_eq!(
            joint_momentum_amplitude(0.0, -1.01 * k, &cfg, &pump, 0.0).unwrap().re,
            0.0
        );
        assert!(joint_momentum_amplitude(k, 0.0, &cfg, &pump, 0.0).is_err());
        let c = joint_momentum_amplitude(0.0, 0.0, &cfg, &pump, 0.0).unwrap();
        assert_relative_eq!(c.re, 1000e-9 / (2.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn signal_cutoff_values() {
        assert_relative_eq!(signal_angle_cutoff(530e-9, 10e-6).to_degrees(), 3.038, epsilon = 1e-3);
        assert_eq!(signal_angle_cutoff(1e-6, 1e-6), FRAC_PI_2);
        assert_eq!(signal_angle_cutoff(10e-6, 530e-9), FRAC_PI_2);
    }

    #[test]
    fn maps_are_peak_normalized() {
        let cfg = degenerate(3e-9);
        let pump = PumpProfile::gaussian(10e-6).unwrap();
        let ax = uniform_axis(-FRAC_PI_2, FRAC_PI_2, 65);
        let m = angular_probability_map(&ax, &ax, &cfg, &pump, 3e-9).unwrap();
        let peak = m.values.iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(peak, 1.0, epsilon = 1e-15);
        assert!(m.values.iter().all(|v| v.is_finite()));
        assert!(angular_probability_map(&[0.1, 0.0], &ax, &cfg, &pump, 0.0).is_err());
        let mm = momentum_amplitude_map(16, 16, &cfg, &pump, 3e-9).unwrap();
        assert!(mm.values.iter().all(|v| v.re.is_finite()));
    }
}
