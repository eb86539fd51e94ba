use std::f64::consts::PI;

use approx::assert_relative_eq;
use qiup::resolution::dip_ratio;
use qiup::spdc::uniform_axis;
use qiup::{
    conv_angular, counting_rate, image, image_direct, image_plane_wave, image_reduced, joint_angular_amplitude,
    phi_a_angular, plane_wave_conv, spatial_correlation, Error, ImageProfile, OpticalConfig, PumpProfile,
    QuadratureSpec, SlitObject, Source,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UM: f64 = 1e-6;

fn anchor(l: f64) -> OpticalConfig {
    OpticalConfig::from_signal_idler(530e-9, 10e-6, l, l).unwrap()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn surrogate() -> PumpProfile {
    PumpProfile::plane_wave_surrogate()
}

fn double(d: f64) -> SlitObject {
    SlitObject::double(d).unwrap()
}

fn peak_positions(img: &ImageProfile) -> Vec<f64> {
    let v = &img.values;
    (1..v.len() - 1)
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > 0.5)
        .map(|i| img.x_axis[i])
        .collect()
}

fn asymmetry(img: &ImageProfile) -> f64 {
    let v = &img.values;
    (0..v.len()).fold(0.0f64, |m, i| m.max((v[i] - v[v.len() - 1 - i]).abs()))
}

#[test]
fn fig3h_two_peaks_with_twenty_percent_dip() {
    let xs = uniform_axis(-6.75 * UM, 6.75 * UM, 201);
    let img = image_reduced(&xs, &anchor(100e-9), &surrogate(), &double(4.5 * UM), &quad()).unwrap();
    let peaks = peak_positions(&img);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    for p in peaks {
        assert!((p.abs() - 2.25 * UM).abs() < 0.6 * UM, "peak at {p}");
    }
    let dip = dip_ratio(&img).unwrap();
    assert!((dip - 0.8).abs() < 0.02, "{dip}");
    assert_eq!(img.values.iter().cloned().fold(f64::MIN, f64::max), 1.0);
}

#[test]
fn fig3g_thick_crystal_gives_one_lobe() {
    let xs = uniform_axis(-6.75 * UM, 6.75 * UM, 201);
    let img = image_reduced(&xs, &anchor(100e-6), &surrogate(), &double(4.5 * UM), &quad()).unwrap();
    let peaks = peak_positions(&img);
    assert!(peaks.len() == 1 && peaks[0].abs() < 1e-12, "{peaks:?}");
    assert!(dip_ratio(&img).unwrap() > 0.99);
}

#[test]
fn images_of_centered_objects_are_symmetric() {
    let xs = uniform_axis(-8.0 * UM, 8.0 * UM, 101);
    for (cfg, pump, obj) in [
        (anchor(100e-9), surrogate(), double(4.5 * UM)),
        (anchor(20e-6), PumpProfile::gaussian(30e-6).unwrap(), double(6.0 * UM)),
        (
            anchor(100e-9),
            PumpProfile::gaussian(100e-6).unwrap(),
            SlitObject::SingleSlit,
        ),
    ] {
        let img = image_reduced(&xs, &cfg, &pump, &obj, &quad()).unwrap();
        assert!(asymmetry(&img) < 1e-3, "{obj:?}: {}", asymmetry(&img));
    }
}

#[test]
fn gaussian_surrogate_matches_plane_wave_path() {
    let xs = uniform_axis(-10.0 * UM, 10.0 * UM, 161);
    for (l, d) in [(100e-9, 4.5 * UM), (10e-6, 5.0 * UM), (100e-6, 16.0 * UM)] {
        let cfg = anchor(l);
        let a = image_reduced(&xs, &cfg, &surrogate(), &double(d), &quad()).unwrap();
        let b = image_plane_wave(&xs, &cfg, &double(d), &quad()).unwrap();
        let diff = a.max_abs_diff(&b).unwrap();
        assert!(diff < 0.01, "L = {l}: {diff}");
    }
}

#[test]
fn dispatch_routes_plane_wave_to_analytic_path() {
    let xs = uniform_axis(-5.0 * UM, 5.0 * UM, 11);
    let img = image(
        &xs,
        &anchor(100e-9),
        &PumpProfile::PlaneWave,
        &double(4.5 * UM),
        &quad(),
    )
    .unwrap();
    assert_eq!(img.meta.method, qiup::Method::PlaneWave);
    assert!(matches!(
        image_reduced(
            &xs,
            &anchor(100e-9),
            &PumpProfile::PlaneWave,
            &double(4.5 * UM),
            &quad()
        ),
        Err(Error::UnsupportedProfile(_))
    ));
}

#[test]
fn thin_crystal_image_is_independent_of_pump_width() {
    let xs = uniform_axis(-6.75 * UM, 6.75 * UM, 101);
    let cfg = anchor(100e-9);
    let reference = image_reduced(&xs, &cfg, &surrogate(), &double(4.5 * UM), &quad()).unwrap();
    for sigma in [30e-6, 100e-6] {
        let img = image_reduced(
            &xs,
            &cfg,
            &PumpProfile::gaussian(sigma).unwrap(),
            &double(4.5 * UM),
            &quad(),
        )
        .unwrap();
        assert!(img.max_abs_diff(&reference).unwrap() < 0.02);
    }
}

#[test]
fn degenerate_psf_has_narrowest_main_lobe_and_tallest_side_lobes() {
    let pump = PumpProfile::gaussian(100e-6).unwrap();
    let xs = uniform_axis(-30.0 * UM, 30.0 * UM, 601);
    let mut lobes = Vec::new();
    for (ls, li) in [(530e-9, 10e-6), (10e-6, 530e-9), (10e-6, 10e-6)] {
        let cfg = OpticalConfig::from_signal_idler(ls, li, 100e-9, 100e-9).unwrap();
        let p = qiup::psf(&cfg, &pump, &xs, &quad()).unwrap();
        assert!(asymmetry(&p.profile) < 1e-3);
        lobes.push((p.fwhm.unwrap(), p.side_lobe.unwrap_or(0.0)));
    }
    let (deg_fwhm, deg_side) = lobes[2];
    assert!(deg_fwhm < lobes[0].0 && deg_fwhm < lobes[1].0, "{lobes:?}");
    assert!(deg_side > lobes[0].1 && deg_side > lobes[1].1, "{lobes:?}");
}

#[test]
fn phi_a_is_joint_amplitude_times_mode_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = anchor(2e-6);
    let pump = PumpProfile::gaussian(30e-6).unwrap();
    let a0 = phi_a_angular(0.0, 0.0, &anchor(0.0), &pump).unwrap();
    assert_relative_eq!(a0.re, (2.0 * PI / 10e-6).sqrt(), max_relative = 1e-14);
    for _ in 0..100 {
        let ts: f64 = rng.gen_range(-1.5..1.5);
        let ti: f64 = rng.gen_range(-1.5..1.5);
        let phi = phi_a_angular(ts, ti, &cfg, &pump).unwrap();
        let joint = joint_angular_amplitude(ts, ti, &cfg, &pump, cfg.l_a).unwrap();
        let expected = joint * (cfg.k_idler() * ti.cos()).sqrt();
        assert!((phi - expected).norm() <= 1e-12 * expected.norm().max(1e-300));
    }
    assert!(phi_a_angular(0.0, PI / 2.0, &cfg, &pump).unwrap().norm() < 1e-12);
}

#[test]
fn wide_pump_conv_matches_plane_wave_conv() {
    let cfg = anchor(100e-9);
    let d = 4.5 * UM;
    let scale = (2.0 * PI).sqrt();
    for (ts, ti) in [(0.01, -0.2), (-0.03, 0.5), (0.045, 1.2), (0.0, 0.0)] {
        let c = conv_angular(ts, ti, &double(d), &cfg, &surrogate(), &quad()).unwrap() / scale;
        let pw = plane_wave_conv(
            cfg.k_signal() * f64::sin(ts),
            cfg.k_idler() * f64::sin(ti),
            d,
            &cfg,
            cfg.l_b,
        );
        assert!((c - pw).abs() <= 0.01 * pw.abs().max(0.05), "({ts}, {ti}): {c} vs {pw}");
    }
}

#[test]
fn plane_wave_conv_at_zero_separation_is_the_gated_sinc() {
    let cfg = anchor(50e-6);
    let q = 2e5;
    let v = plane_wave_conv(q, 0.7e5, 0.0, &cfg, 50e-6);
    let kzs = (cfg.k_signal().powi(2) - q * q).sqrt();
    let kappa = (cfg.k_idler().powi(2) - q * q).sqrt();
    let x = 0.5 * 50e-6 * (cfg.k_pump() - kzs - kappa);
    assert_relative_eq!(v, x.sin() / x, max_relative = 1e-9);
}

#[test]
fn source_a_correlates_positions() {
    let cfg = anchor(100e-9);
    let obj = SlitObject::SingleSlit;
    let at = |xs: f64, xi: f64| {
        spatial_correlation(Source::A, xs, xi, &cfg, &surrogate(), &obj, &quad())
            .unwrap()
            .norm()
    };
    let xs = 3.0 * UM;
    let on = at(xs, xs);
    for xi in [-3.0 * UM, 0.0, 6.0 * UM, 9.0 * UM] {
        assert!(at(xs, xi) < 0.5 * on);
    }
}

#[test]
fn transmitted_field_shows_the_slits_only_for_thin_crystals() {
    let obj = double(4.5 * UM);
    let ratio = |l: f64| {
        let cfg = anchor(l);
        let f = |x: f64| {
            spatial_correlation(Source::BT, x, x, &cfg, &surrogate(), &obj, &quad())
                .unwrap()
                .norm_sqr()
        };
        f(0.0) / f(2.25 * UM)
    };
    assert!(ratio(100e-9) < 0.9);
    assert!(ratio(100e-6) > 1.0);
}

#[test]
fn counting_rate_is_positive_and_ports_sum_to_twice_background() {
    let xs = uniform_axis(-10.0 * UM, 10.0 * UM, 41);
    let pump = PumpProfile::gaussian(100e-6).unwrap();
    for l in [100e-9, 100e-6] {
        let r = counting_rate(&xs, &anchor(l), &pump, &double(4.5 * UM), &quad()).unwrap();
        let (c, d) = (r.constructive(), r.destructive());
        for i in 0..xs.len() {
            assert!(c[i] >= 0.0 && d[i] >= 0.0);
            assert_relative_eq!(c[i] + d[i], 2.0 * r.background[i], max_relative = 1e-12);
        }
        let bg = r.profile.background.as_ref().unwrap();
        assert_relative_eq!(bg[0] * r.profile.normalization, r.background[0], max_relative = 1e-12);
    }
}

#[test]
fn background_does_not_depend_on_separation() {
    let xs = uniform_axis(-10.0 * UM, 10.0 * UM, 41);
    let pump = PumpProfile::gaussian(100e-6).unwrap();
    let cfg = anchor(100e-9);
    let a = counting_rate(&xs, &cfg, &pump, &double(4.5 * UM), &quad()).unwrap();
    let b = counting_rate(&xs, &cfg, &pump, &double(9.0 * UM), &quad()).unwrap();
    let peak = a.background.iter().cloned().fold(0.0, f64::max);
    let diff = a
        .background
        .iter()
        .zip(&b.background)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff / peak < quad().rel_tol);
}

#[test]
fn opaque_object_gives_a_dark_image_on_every_path() {
    let xs = uniform_axis(-4.0 * UM, 4.0 * UM, 9);
    let cfg = anchor(100e-9);
    let pump = PumpProfile::gaussian(100e-6).unwrap();
    for img in [
        image_reduced(&xs, &cfg, &pump, &SlitObject::Opaque, &quad()).unwrap(),
        image_direct(&xs, &cfg, &pump, &SlitObject::Opaque, &quad()).unwrap(),
        image_plane_wave(&xs, &cfg, &SlitObject::Opaque, &quad()).unwrap(),
    ] {
        assert!(img.values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn direct_oracle_is_symmetric_for_a_gaussian_pump() {
    let xs = uniform_axis(-6.0 * UM, 6.0 * UM, 13);
    let cfg = anchor(100e-9);
    let pump = PumpProfile::gaussian(30e-6).unwrap();
    let direct = image_direct(&xs, &cfg, &pump, &double(4.5 * UM), &quad()).unwrap();
    assert!(asymmetry(&direct) < 1e-3);
    let reduced = image_reduced(&xs, &cfg, &pump, &double(4.5 * UM), &quad()).unwrap();
    assert!(direct.max_abs_diff(&reduced).unwrap() < 0.02);
    let diag = direct.diagnostics.direct.unwrap();
    assert!(diag.boundary_ratio < 1e-4);
}

#[test]
fn refinement_gives_up_when_the_budget_is_too_small() {
    let xs = uniform_axis(-6.0 * UM, 6.0 * UM, 33);
    let strict = QuadratureSpec::new(64, 1, 1e-15).unwrap();
    let r = image_reduced(&xs, &anchor(100e-9), &surrogate(), &double(4.5 * UM), &strict);
    match r {
        Err(Error::NonConvergence {
            achieved, requested, ..
        }) => {
            assert!(achieved > requested);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn degenerate_plane_wave_is_rejected_but_wide_gaussian_works() {
    let cfg = OpticalConfig::from_pump_signal(500e-9, 1000e-9, 100e-9, 100e-9).unwrap();
    let xs = uniform_axis(-UM, UM, 21);
    assert!(matches!(
        image_plane_wave(&xs, &cfg, &SlitObject::SingleSlit, &quad()),
        Err(Error::Divergent(_))
    ));
    assert!(image_reduced(
        &xs,
        &cfg,
        &PumpProfile::gaussian(100e-6).unwrap(),
        &SlitObject::SingleSlit,
        &quad()
    )
    .is_ok());
}

#[test]
fn empty_axis_is_rejected() {
    assert!(matches!(
        image_reduced(&[], &anchor(100e-9), &surrogate(), &double(4.5 * UM), &quad()),
        Err(Error::EmptyAxis(_))
    ));
}
