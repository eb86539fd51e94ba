//! Fixtures shared by the benchmarks: the 530 nm / 10 um anchor pair with an
//! ultra-thin and a thick crystal.

use qiup::spdc::uniform_axis;
use qiup::{OpticalConfig, PumpProfile, SlitObject};

pub const UM: f64 = 1e-6;

pub fn anchor(thickness: f64) -> OpticalConfig {
    OpticalConfig::from_signal_idler(530e-9, 10.0 * UM, thickness, thickness).expect("valid anchor config")
}

pub fn pump(sigma: f64) -> PumpProfile {
    PumpProfile::gaussian(sigma).expect("positive pump width")
}

pub fn double_slit() -> SlitObject {
    SlitObject::double(4.5 * UM).expect("positive separation")
}

/// The axis used by the dip evaluation at `d`.
pub fn dip_axis(d: f64, n: usize) -> Vec<f64> {
    uniform_axis(-1.5 * d, 1.5 * d, n)
}
