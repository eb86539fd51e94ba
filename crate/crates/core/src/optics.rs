//! Wave-optics primitives shared by the state and imaging code: free-space
//! wavenumbers, energy conservation, the pump envelope and the longitudinal
//! phase-matching factor.
//!
//! Lengths are meters, angles radians, wavenumbers 1/m.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `1/λ_P = 1/λ_S + 1/λ_I`.
pub const ENERGY_CONSERVATION_RTOL: f64 = 1e-12;

/// Pump width used as a stand-in for a plane-wave pump in the Gaussian code paths.
pub const PLANE_WAVE_SURROGATE_SIGMA: f64 = 1.0;

/// Free-space wavenumber `2π/λ`.
#[inline]
pub fn wavenumber(lambda: f64) -> f64 {
    2.0 * PI / lambda
}

/// Wavelengths of the three interacting fields and the thicknesses of the two
/// crystals (A: illuminates the object, B: receives the idler after it).
///
/// A thickness of zero is the exact thin-source limit: the phase-matching
/// factor is identically one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    pub lambda_pump: f64,
    pub lambda_signal: f64,
    pub lambda_idler: f64,
    pub l_a: f64,
    pub l_b: f64,
}

impl OpticalConfig {
    pub fn new(lambda_pump: f64, lambda_signal: f64, lambda_idler: f64, l_a: f64, l_b: f64) -> Result<Self> {
        let cfg = OpticalConfig {
            lambda_pump,
            lambda_signal,
            lambda_idler,
            l_a,
            l_b,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a configuration from signal and idler, deriving the pump.
    pub fn from_signal_idler(lambda_signal: f64, lambda_idler: f64, l_a: f64, l_b: f64) -> Result<Self> {
        check_positive("lambda_signal", lambda_signal)?;
        check_positive("lambda_idler", lambda_idler)?;
        let lambda_pump = 1.0 / (1.0 / lambda_signal + 1.0 / lambda_idler);
        Self::new(lambda_pump, lambda_signal, lambda_idler, l_a, l_b)
    }

    /// Builds a configuration from pump and signal, deriving the idler.
    pub fn from_pump_signal(lambda_pump: f64, lambda_signal: f64, l_a: f64, l_b: f64) -> Result<Self> {
        let lambda_idler = idler_wavelength(lambda_pump, lambda_signal)?;
        Self::new(lambda_pump, lambda_signal, lambda_idler, l_a, l_b)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("lambda_pump", self.lambda_pump)?;
        check_positive("lambda_signal", self.lambda_signal)?;
        check_positive("lambda_idler", self.lambda_idler)?;
        check_thickness("L_A", self.l_a)?;
        check_thickness("L_B", self.l_b)?;
        let inv_p = 1.0 / self.lambda_pump;
        let mismatch = inv_p - 1.0 / self.lambda_signal - 1.0 / self.lambda_idler;
        if mismatch.abs() > ENERGY_CONSERVATION_RTOL * inv_p {
            return Err(Error::invalid(
                "lambda_pump",
                format!("energy conservation violated: 1/λ_P − 1/λ_S − 1/λ_I = {mismatch:.3e} 1/m"),
            ));
        }
        Ok(())
    }

    /// Same wavelengths, new crystal thicknesses.
    pub fn with_thickness(&self, l_a: f64, l_b: f64) -> Result<Self> {
        Self::new(self.lambda_pump, self.lambda_signal, self.lambda_idler, l_a, l_b)
    }

    pub fn k_pump(&self) -> f64 {
        wavenumber(self.lambda_pump)
    }

    pub fn k_signal(&self) -> f64 {
        wavenumber(self.lambda_signal)
    }

    pub fn k_idler(&self) -> f64 {
        wavenumber(self.lambda_idler)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_signal.max(self.lambda_idler)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_signal.min(self.lambda_idler)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn check_thickness(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("thickness must be finite and >= 0, got {v}"),
        ))
    }
}

/// Transverse profile of the pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PumpProfile {
    /// Infinitely wide pump. Only the analytic plane-wave path accepts it.
    PlaneWave,
    /// `E_P(q) = exp(−σ² q² / 2)`.
    Gaussian { sigma: f64 },
}

impl PumpProfile {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        check_positive("sigma_p", sigma)?;
        Ok(PumpProfile::Gaussian { sigma })
    }

    /// The σ = 1 m Gaussian used in place of a plane wave by the numerical paths.
    pub fn plane_wave_surrogate() -> Self {
        PumpProfile::Gaussian {
            sigma: PLANE_WAVE_SURROGATE_SIGMA,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            PumpProfile::PlaneWave => None,
            PumpProfile::Gaussian { sigma } => Some(sigma),
        }
    }

    pub(crate) fn require_sigma(&self, op: &'static str) -> Result<f64> {
        match *self {
            PumpProfile::Gaussian { sigma } => {
                check_positive("sigma_p", sigma)?;
                Ok(sigma)
            }
            PumpProfile::PlaneWave => Err(Error::UnsupportedProfile(op)),
        }
    }
}

/// Longitudinal wavenumber `sqrt((2π/λ)² − q²)` of a propagating plane wave.
///
/// Exactly zero at grazing incidence `|q| = 2π/λ`; evanescent `q` is a domain error.
pub fn kz(q: f64, lambda: f64) -> Result<f64> {
    let k = wavenumber(lambda);
    kz_k(q, k).ok_or_else(|| Error::Domain(format!("|q| = {:.6e} exceeds 2π/λ = {k:.6e} (evanescent)", q.abs())))
}

/// `kz` from a precomputed wavenumber; `None` when evanescent.
#[inline]
pub(crate) fn kz_k(q: f64, k: f64) -> Option<f64> {
    let a = q.abs();
    if a > k {
        None
    } else {
        Some(((k - a) * (k + a)).sqrt())
    }
}

/// Idler wavelength from energy conservation, `(1/λ_P − 1/λ_S)⁻¹`.
pub fn idler_wavelength(lambda_pump: f64, lambda_signal: f64) -> Result<f64> {
    check_positive("lambda_pump", lambda_pump)?;
    check_positive("lambda_signal", lambda_signal)?;
    if lambda_signal <= lambda_pump {
        return Err(Error::Domain(format!(
            "signal wavelength {lambda_signal:.6e} m must exceed pump wavelength {lambda_pump:.6e} m"
        )));
    }
    Ok(1.0 / (1.0 / lambda_pump - 1.0 / lambda_signal))
}

/// Gaussian pump amplitude `exp(−σ² q² / 2)` at transverse wavenumber `q_p`.
pub fn pump_envelope(q_p: f64, pump: &PumpProfile) -> Result<f64> {
    let sigma = pump.require_sigma("pump_envelope")?;
    Ok(gaussian_envelope(q_p, sigma))
}

#[inline]
pub(crate) fn gaussian_envelope(q_p: f64, sigma: f64) -> f64 {
    let s = sigma * q_p;
    (-0.5 * s * s).exp()
}

/// `sin(x)/x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Precomputed wavenumbers of one configuration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Wavenumbers {
    pub k_p: f64,
    pub k_s: f64,
    pub k_i: f64,
}

impl Wavenumbers {
    pub fn of(cfg: &OpticalConfig) -> Self {
        Wavenumbers {
            k_p: cfg.k_pump(),
            k_s: cfg.k_signal(),
            k_i: cfg.k_idler(),
        }
    }

    /// Phase-matching factor for signal/idler transverse momenta and their
    /// longitudinal components. Zero when the required pump component is evanescent.
    #[inline]
    pub fn mismatch_sinc(&self, q_s: f64, kz_s: f64, q_i: f64, kz_i: f64, thickness: f64) -> f64 {
        let Some(kz_p) = kz_k(q_s + q_i, self.k_p) else {
            return 0.0;
        };
        if thickness == 0.0 {
            return 1.0;
        }
        sinc(0.5 * thickness * (kz_p - kz_s - kz_i))
    }

    /// Phase-matching factor in angular coordinates.
    #[inline]
    pub fn mismatch_sinc_angles(&self, theta_s: f64, theta_i: f64, thickness: f64) -> f64 {
        let (ss, cs) = theta_s.sin_cos();
        let (si, ci) = theta_i.sin_cos();
        self.mismatch_sinc(self.k_s * ss, self.k_s * cs, self.k_i * si, self.k_i * ci, thickness)
    }
}

/// Longitudinal phase-matching factor `Π(θ_S, θ_I, L)`.
///
/// Returns 0 where the pump component `q_S + q_I` would be evanescent.
pub fn phase_mismatch_sinc(theta_s: f64, theta_i: f64, cfg: &OpticalConfig, thickness: f64) -> f64 {
    Wavenumbers::of(cfg).mismatch_sinc_angles(theta_s, theta_i, thickness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kz_normal_grazing_and_oblique() {
        assert_relative_eq!(kz(0.0, 1e-6).unwrap(), 2.0 * PI * 1e6, max_relative = 1e-15);
        let k = 2.0 * PI / 530e-9;
        assert_eq!(kz(k, 530e-9).unwrap(), 0.0);
        assert_eq!(kz(-k, 530e-9).unwrap(), 0.0);
        let k10 = 2.0 * PI / 10e-6;
        let th = 30f64.to_radians();
        assert_relative_eq!(kz(k10 * th.sin(), 10e-6).unwrap(), k10 * th.cos(), max_relative = 1e-14);
    }

    #[test]
    fn kz_rejects_evanescent() {
        let k = 2.0 * PI / 1e-6;
        assert!(matches!(kz(1.000001 * k, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn idler_from_energy_conservation() {
        assert_relative_eq!(
            idler_wavelength(500e-9, 1000e-9).unwrap(),
            1000e-9,
            max_relative = 1e-14
        );
        // 1/λ_I = 1/500 − 1/625 nm⁻¹ = 1/2500 nm⁻¹
        assert_relative_eq!(idler_wavelength(500e-9, 625e-9).unwrap(), 2500e-9, max_relative = 1e-13);
        let li = idler_wavelength(503e-9, 530e-9).unwrap();
        assert!((li - 10e-6).abs() < 0.2e-6, "{li}");
        assert!(idler_wavelength(500e-9, 500e-9).is_err());
        assert!(idler_wavelength(600e-9, 500e-9).is_err());
    }

    #[test]
    fn pump_envelope_values() {
        let p = PumpProfile::gaussian(100e-6).unwrap();
        assert_eq!(pump_envelope(0.0, &p).unwrap(), 1.0);
        assert_relative_eq!(
            pump_envelope(1.0 / 100e-6, &p).unwrap(),
            (-0.5f64).exp(),
            max_relative = 1e-15
        );
        let wide = PumpProfile::gaussian(1.0).unwrap();
        let v = pump_envelope(2.0 * PI / 500e-9, &wide).unwrap();
        assert!(v < 1e-300);
        assert!(matches!(
            pump_envelope(0.0, &PumpProfile::PlaneWave),
            Err(Error::UnsupportedProfile(_))
        ));
    }

    #[test]
    fn sinc_branches_agree() {
        assert_eq!(sinc(0.0), 1.0);
        for &x in &[9.9e-5, 1.0e-4, 1.01e-4, 1e-3] {
            assert_relative_eq!(sinc(x), x.sin() / x, max_relative = 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(OpticalConfig::from_signal_idler(530e-9, 10e-6, 100e-9, 100e-9).is_ok());
        assert!(OpticalConfig::from_signal_idler(530e-9, 10e-6, -1.0, 0.0).is_err());
        assert!(OpticalConfig::new(500e-9, 1000e-9, 999e-9, 0.0, 0.0).is_err());
        let cfg = OpticalConfig::from_pump_signal(500e-9, 1000e-9, 0.0, 0.0).unwrap();
        assert_relative_eq!(cfg.lambda_idler, 1000e-9, max_relative = 1e-14);
    }

    #[test]
    fn thin_and_degenerate_phase_matching() {
        let cfg = OpticalConfig::from_signal_idler(530e-9, 10e-6, 0.0, 0.0).unwrap();
        assert_eq!(phase_mismatch_sinc(0.3, -0.2, &cfg, 0.0), 1.0);
        let deg = OpticalConfig::from_pump_signal(500e-9, 1000e-9, 0.0, 0.0).unwrap();
        for &l in &[1e-9, 1e-6, 1e-3] {
            assert_relative_eq!(phase_mismatch_sinc(0.0, 0.0, &deg, l), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn collinear_nondegenerate_against_direct_evaluation() {
        let cfg = OpticalConfig::from_signal_idler(530e-9, 10e-6, 0.0, 0.0).unwrap();
        let l = 100e-6;
        // Δk_z = 2π/λ_P − 2π/λ_S − 2π/λ_I, evaluated through the pump wavelength.
        let dk = 2.0 * PI * (1.0 / cfg.lambda_pump - 1.0 / 530e-9 - 1.0 / 10e-6);
        let x = 0.5 * l * dk;
        let expected = if x == 0.0 { 1.0 } else { x.sin() / x };
        assert_relative_eq!(phase_mismatch_sinc(0.0, 0.0, &cfg, l), expected, epsilon = 1e-9);
    }

    #[test]
    fn evanescent_pump_component_is_zeroed() {
        // With free-space dispersion k_P = k_S + k_I, so only out-of-band momenta reach the gate.
        let cfg = OpticalConfig::from_pump_signal(500e-9, 1000e-9, 1e-6, 1e-6).unwrap();
        let w = Wavenumbers::of(&cfg);
        assert_relative_eq!(w.k_p, w.k_s + w.k_i, max_relative = 1e-14);
        assert_eq!(w.mismatch_sinc(0.8 * w.k_p, 0.0, 0.3 * w.k_p, 0.0, 1e-6), 0.0);
        assert_eq!(w.mismatch_sinc(-0.8 * w.k_p, 0.0, -0.3 * w.k_p, 0.0, 0.0), 0.0);
    }
}
