//! Simulation of quantum imaging with undetected photons beyond the paraxial regime.
//!
//! The crate evaluates the two-photon amplitudes of thin or thick
//! down-conversion sources, forms the interference image of slit objects in a
//! two-source nonlinear interferometer, and measures resolution with the
//! 20 % dip criterion.
//!
//! Lengths are in meters and angles in radians throughout.
//!
//! ```
//! use qiup::{paraxial_dmin, OpticalConfig};
//!
//! let cfg = OpticalConfig::from_signal_idler(530e-9, 10e-6, 100e-6, 100e-6).unwrap();
//! let d = paraxial_dmin(cfg.lambda_signal, cfg.lambda_idler, cfg.l_a, cfg.l_b).unwrap();
//! assert!((d - 15.67e-6).abs() < 0.01e-6);
//! ```

pub mod error;
pub mod export;
pub mod imaging;
pub mod optics;
pub mod quadrature;
pub mod resolution;
pub mod spdc;

pub use error::{Error, Result};
pub use imaging::{
    conv_angular, counting_rate, image, image_direct, image_plane_wave, image_reduced, image_reduced_at_level,
    phi_a_angular, plane_wave_conv, spatial_correlation, spatial_correlation_map, CorrelationMap, Diagnostics,
    ImageMeta, ImageProfile, Method, RateProfile, SlitObject, Source,
};
pub use optics::{
    idler_wavelength, kz, phase_mismatch_sinc, pump_envelope, sinc, wavenumber, OpticalConfig, PumpProfile,
};
pub use quadrature::QuadratureSpec;
pub use resolution::{
    dip_ratio, min_resolvable_distance, paraxial_dmin, psf, sweep_pump_width, sweep_thickness, sweep_wavelengths,
    PsfProfile, ResolutionResult, SearchSpec, SweepPoint, SweepTable,
};
pub use spdc::{
    angular_amplitude_map, angular_probability_map, joint_angular_amplitude, joint_momentum_amplitude,
    momentum_amplitude_map, signal_angle_cutoff, JointAmplitudeMap, ProbabilityMap, Representation,
};
