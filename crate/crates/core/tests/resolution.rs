use approx::assert_relative_eq;
use proptest::prelude::*;
use qiup::resolution::{dip_at, paraxial_prefactor, DIP_THRESHOLD};
use qiup::{
    min_resolvable_distance, paraxial_dmin, sweep_pump_width, sweep_thickness, sweep_wavelengths, Error, OpticalConfig,
    PumpProfile, QuadratureSpec, SearchSpec,
};

const UM: f64 = 1e-6;
const NM: f64 = 1e-9;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn anchor(l: f64) -> OpticalConfig {
    OpticalConfig::from_signal_idler(530.0 * NM, 10.0 * UM, l, l).unwrap()
}

#[test]
fn dip_at_anchor_separation_is_near_threshold() {
    let dip = dip_at(
        4.5 * UM,
        &anchor(100.0 * NM),
        &PumpProfile::plane_wave_surrogate(),
        &quad(),
        201,
    )
    .unwrap();
    assert!((dip - 0.8).abs() < 0.01, "{dip}");
}

#[test]
fn dip_limits() {
    let cfg = anchor(100.0 * NM);
    let pump = PumpProfile::PlaneWave;
    assert!(dip_at(40.0 * UM, &cfg, &pump, &quad(), 201).unwrap() < 0.05);
    assert!(dip_at(0.3 * UM, &cfg, &pump, &quad(), 201).unwrap() > 0.99);
}

#[test]
fn search_result_honours_its_invariants() {
    let cfg = anchor(100.0 * NM);
    let r = min_resolvable_distance(&cfg, &PumpProfile::PlaneWave, &quad(), &SearchSpec::default()).unwrap();
    assert!((r.dip_at_dmin - DIP_THRESHOLD).abs() <= 0.005);
    assert!(r.bracket.0 < r.d_min && r.d_min < r.bracket.1);
    assert!(r.bracket.1 - r.bracket.0 < 10.0 * UM / 200.0);
    assert!(r.scan.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-3));
    assert_eq!(r.config, cfg);
    assert_eq!(r.search.tol_d, Some(10.0 * UM / 200.0));
    assert!((r.d_min - 4.5 * UM).abs() < 0.15 * UM);
}

#[test]
fn swapped_wavelengths_resolve_slightly_better() {
    let pump = PumpProfile::gaussian(100.0 * UM).unwrap();
    let fwd = min_resolvable_distance(&anchor(100.0 * NM), &pump, &quad(), &SearchSpec::default()).unwrap();
    let swapped = OpticalConfig::from_signal_idler(10.0 * UM, 530.0 * NM, 100.0 * NM, 100.0 * NM).unwrap();
    let rev = min_resolvable_distance(&swapped, &pump, &quad(), &SearchSpec::default()).unwrap();
    assert!(rev.d_min < fwd.d_min);
    assert!((rev.d_min / 10.0 / UM - 0.40).abs() < 0.02);
}

#[test]
fn bracket_failure_reports_the_scan() {
    // the scan range doubles twice, from 0.5 um to 2 um, and never reaches d_min ≈ 4.5 um
    let search = SearchSpec {
        d_hi: Some(0.5 * UM),
        n_scan: 4,
        ..SearchSpec::default()
    };
    match min_resolvable_distance(&anchor(100.0 * NM), &PumpProfile::PlaneWave, &quad(), &search) {
        Err(Error::Bracket { scan, reason }) => {
            assert_eq!(scan.len(), 12, "{reason}");
            assert!((scan[11].0 - 2.0 * UM).abs() < 1e-15);
            assert!(scan.iter().all(|&(_, dip)| dip >= DIP_THRESHOLD));
        }
        other => panic!("expected bracket failure, got {other:?}"),
    }
}

#[test]
fn already_resolved_first_point_is_a_bracket_failure() {
    let search = SearchSpec {
        d_hi: Some(200.0 * UM),
        n_scan: 2,
        ..SearchSpec::default()
    };
    let r = min_resolvable_distance(&anchor(100.0 * NM), &PumpProfile::PlaneWave, &quad(), &search);
    assert!(matches!(r, Err(Error::Bracket { .. })));
}

#[test]
fn paraxial_examples_and_scaling() {
    assert_relative_eq!(paraxial_prefactor(), 0.6831, epsilon = 1e-4);
    let d = paraxial_dmin(530.0 * NM, 10.0 * UM, 100.0 * UM, 100.0 * UM).unwrap();
    assert!((d - 15.7 * UM).abs() < 0.05 * UM);
    let d2 = paraxial_dmin(530.0 * NM, 10.0 * UM, 200.0 * UM, 200.0 * UM).unwrap();
    assert_relative_eq!(d2 / d, 2f64.sqrt(), max_relative = 1e-12);
    assert!(matches!(paraxial_dmin(-1.0, 1.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(paraxial_dmin(1.0, 1.0, 1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn paraxial_formula_fails_for_thin_crystals() {
    let cfg = anchor(1.0 * UM / 10.0);
    let r = min_resolvable_distance(&cfg, &PumpProfile::PlaneWave, &quad(), &SearchSpec::default()).unwrap();
    let par = paraxial_dmin(cfg.lambda_signal, cfg.lambda_idler, cfg.l_a, cfg.l_b).unwrap();
    assert!((r.d_min - par).abs() / r.d_min > 0.5);
}

#[test]
fn plateau_holds_deep_in_the_thin_regime() {
    let base = anchor(100.0 * NM);
    let table = sweep_thickness(
        &base,
        &PumpProfile::PlaneWave,
        &[50.0 * NM, 100.0 * NM, 1.0 * UM],
        &quad(),
        &SearchSpec::default(),
    )
    .unwrap();
    assert_eq!(table.failures(), 0);
    assert!(table.relative_spread(|_| true).unwrap() < 0.05);
    assert!(table.points.iter().all(|p| p.regime.as_deref() == Some("plateau")));
    assert_eq!(table.parameters, vec!["L".to_string()]);
}

#[test]
fn thickness_sweep_labels_regimes_and_keeps_order() {
    let ls = [100.0 * NM, 30.0 * UM, 150.0 * UM];
    let table = sweep_thickness(
        &anchor(0.0),
        &PumpProfile::PlaneWave,
        &ls,
        &quad(),
        &SearchSpec::default(),
    )
    .unwrap();
    let labels: Vec<_> = table.points.iter().map(|p| p.regime.clone().unwrap()).collect();
    assert_eq!(labels, ["plateau", "transition", "paraxial"]);
    for (p, l) in table.points.iter().zip(ls) {
        assert_eq!(p.params, vec![l]);
        assert!(p.is_ok());
        assert!(p.paraxial_d_min.is_some());
    }
    let last = &table.points[2];
    assert!((last.d_min - last.paraxial_d_min.unwrap()).abs() / last.d_min < 0.15);
}

#[test]
fn failing_points_become_nan_rows() {
    let search = SearchSpec {
        d_hi: Some(0.2 * UM),
        n_scan: 2,
        ..SearchSpec::default()
    };
    let table = sweep_thickness(
        &anchor(0.0),
        &PumpProfile::PlaneWave,
        &[100.0 * NM, 1.0 * UM],
        &quad(),
        &search,
    )
    .unwrap();
    assert_eq!(table.failures(), 2);
    for p in &table.points {
        assert!(p.d_min.is_nan());
        assert!(p.status.contains("bracket"), "{}", p.status);
    }
}

#[test]
fn sweep_axes_must_be_monotone() {
    let r = sweep_thickness(
        &anchor(0.0),
        &PumpProfile::PlaneWave,
        &[1e-6, 1e-7, 1e-6],
        &quad(),
        &SearchSpec::default(),
    );
    assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    let r = sweep_pump_width(&anchor(100.0 * NM), &[], &quad(), &SearchSpec::default());
    assert!(matches!(r, Err(Error::EmptyAxis(_))));
}

#[test]
fn widest_pump_agrees_with_plane_wave_limit() {
    let cfg = anchor(100.0 * NM);
    let table = sweep_pump_width(&cfg, &[30.0 * UM, 1.0], &quad(), &SearchSpec::default()).unwrap();
    let pw = min_resolvable_distance(&cfg, &PumpProfile::PlaneWave, &quad(), &SearchSpec::default()).unwrap();
    assert!((table.points[1].d_min - pw.d_min).abs() < 10.0 * UM / 200.0);
    assert!((table.points[0].d_min - pw.d_min).abs() / pw.d_min < 0.05);
}

#[test]
fn wavelength_map_is_smallest_on_the_diagonal() {
    let axis = [1.0 * UM, 3.0 * UM, 10.0 * UM];
    let table = sweep_wavelengths(
        &axis,
        &axis,
        100.0 * NM,
        &PumpProfile::gaussian(100.0 * UM).unwrap(),
        &quad(),
        &SearchSpec::default(),
    )
    .unwrap();
    assert_eq!(table.failures(), 0);
    assert_eq!(table.parameters, vec!["lambda_s".to_string(), "lambda_i".to_string()]);
    let ratio = |i: usize, j: usize| table.points[3 * i + j].ratio;
    for i in 0..3 {
        for j in 0..3 {
            if i != j && (i == 2 || j == 2) {
                // same λ_max as the (2, 2) diagonal point
                assert!(ratio(2, 2) < ratio(i, j), "({i}, {j})");
            }
        }
    }
    // ratio is nearly constant along a line of constant λ_max within one regime
    assert!((ratio(0, 2) - ratio(1, 2)).abs() < 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paraxial_is_symmetric(ls in 100e-9..20e-6f64, li in 100e-9..20e-6f64, la in 1e-6..1e-3f64, lb in 1e-6..1e-3f64) {
        let a = paraxial_dmin(ls, li, la, lb).unwrap();
        prop_assert!((a - paraxial_dmin(li, ls, la, lb).unwrap()).abs() <= 1e-15 * a);
        prop_assert!((a - paraxial_dmin(ls, li, lb, la).unwrap()).abs() <= 1e-15 * a);
    }
}
