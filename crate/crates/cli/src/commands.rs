use std::f64::consts::FRAC_PI_2;

use qiup::export::{write_comparison_csv, write_map_csv, write_profile_csv, write_scan_csv, write_sweep_csv};
use qiup::spdc::uniform_axis;
use qiup::{
    angular_probability_map, dip_ratio, image, image_direct, min_resolvable_distance, momentum_amplitude_map,
    paraxial_dmin, psf, sweep_pump_width, sweep_thickness, sweep_wavelengths, ImageProfile, OpticalConfig,
    ProbabilityMap, SlitObject, SweepTable,
};
use serde_json::json;

use crate::config::{MapKind, RunConfig};
use crate::output::{Manifest, Output};
use crate::CliError;

const UM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Thickness,
    PumpWidth,
    Wavelengths,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Thickness => "thickness",
            SweepKind::PumpWidth => "pump-width",
            SweepKind::Wavelengths => "wavelengths",
        }
    }
}

/// One expanded run: the effective config, its series label and where output goes.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub label: Option<&'a str>,
    pub out: &'a Output,
}

impl Run<'_> {
    fn stem(&self, command: &str) -> String {
        format!("{command}-{}", self.cfg.name.as_deref().unwrap_or("run"))
    }

    fn manifest(&self, command: &str) -> Manifest<'_> {
        Manifest::new(command, self.label, self.cfg)
    }

    /// Writes the failure record before handing the error back.
    fn fail(&self, command: &str, stem: &str, e: qiup::Error) -> CliError {
        match self.out.write_failure(stem, &self.manifest(command), &e) {
            Ok(path) => eprintln!("error details written to {}", path.display()),
            Err(w) => eprintln!("warning: could not record the failure: {w}"),
        }
        CliError::Core(e)
    }

    fn tag(&self) -> String {
        self.label.map(|l| format!("[{l}] ")).unwrap_or_default()
    }
}

fn map_values(map: &ProbabilityMap) -> serde_json::Value {
    json!({
        "axis_s": map.axis_s,
        "axis_i": map.axis_i,
        "values": map.values.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        "normalization": map.normalization,
    })
}

pub fn state_map(run: &Run) -> Result<(), CliError> {
    let cmd = "state-map";
    let stem = run.stem(cmd);
    let optical = run.cfg.optical.resolve()?;
    let pump = run.cfg.pump()?;
    let m = &run.cfg.map;
    let (n_s, n_i) = (m.n_s.unwrap_or(181), m.n_i.unwrap_or(181));
    let result = match m.representation {
        MapKind::Angular => {
            let t = m.theta_max.map_or(FRAC_PI_2, |a| a.0);
            if !(t > 0.0 && t <= FRAC_PI_2) {
                return Err(CliError::Config(format!(
                    "map.theta_max: must lie in (0, 90deg], got {t} rad"
                )));
            }
            angular_probability_map(
                &uniform_axis(-t, t, n_s),
                &uniform_axis(-t, t, n_i),
                &optical,
                &pump,
                optical.l_a,
            )
        }
        MapKind::Momentum => momentum_amplitude_map(n_s, n_i, &optical, &pump, optical.l_a).map(|a| a.probability()),
    };
    let map = result.map_err(|e| run.fail(cmd, &stem, e))?;

    let cutoff = qiup::signal_angle_cutoff(optical.lambda_signal, optical.lambda_idler);
    let summary = json!({
        "shape": [map.axis_s.len(), map.axis_i.len()],
        "signal_angle_cutoff_deg": cutoff.to_degrees(),
    });
    let doc = run.out.document(&run.manifest(cmd), summary, map_values(&map))?;
    let written = if run.out.csv() {
        let path = run.out.path(&stem, "csv");
        write_map_csv(&path, &map, &doc)?;
        path
    } else {
        run.out.write_document(&stem, &doc)?
    };
    println!(
        "{}{n_s} x {n_i} {} map, signal cutoff {:.3} deg -> {}",
        run.tag(),
        match m.representation {
            MapKind::Angular => "angular",
            MapKind::Momentum => "momentum",
        },
        cutoff.to_degrees(),
        written.display()
    );
    Ok(())
}

fn default_axis(obj: &SlitObject, optical: &OpticalConfig) -> Vec<f64> {
    let half = match obj {
        SlitObject::DoubleSlit { d } => 1.5 * d,
        _ => 2.0 * optical.lambda_max(),
    };
    uniform_axis(-half, half, 201)
}

fn axis_for(run: &Run, obj: &SlitObject, optical: &OpticalConfig) -> Result<Vec<f64>, CliError> {
    match &run.cfg.axis {
        Some(a) => a.resolve(),
        None => Ok(default_axis(obj, optical)),
    }
}

/// Positions of the local maxima above half the peak.
fn peaks(p: &ImageProfile) -> Vec<f64> {
    let v = &p.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > 0.5)
        .map(|i| p.x_axis[i])
        .collect()
}

fn image_summary(p: &ImageProfile) -> serde_json::Value {
    let spans_zero = p.x_axis.first().is_some_and(|&a| a < 0.0) && p.x_axis.last().is_some_and(|&b| b > 0.0);
    let dip = if spans_zero { dip_ratio(p).ok() } else { None };
    json!({
        "dip_ratio": dip,
        "peaks": peaks(p),
        "normalization": p.normalization,
        "diagnostics": p.diagnostics,
    })
}

pub fn image_cmd(run: &Run) -> Result<(), CliError> {
    let cmd = "image";
    let stem = run.stem(cmd);
    let optical = run.cfg.optical.resolve()?;
    let pump = run.cfg.pump()?;
    let obj = run
        .cfg
        .object
        .ok_or_else(|| CliError::Config("object: missing [object] table (or pass --d / --single-slit)".into()))?
        .resolve()?;
    let xs = axis_for(run, &obj, &optical)?;
    let quad = run.cfg.quadrature.resolve()?;

    let profile = image(&xs, &optical, &pump, &obj, &quad).map_err(|e| run.fail(cmd, &stem, e))?;
    let summary = image_summary(&profile);
    let doc = run.out.document(&run.manifest(cmd), summary.clone(), &profile)?;
    if run.out.csv() {
        write_profile_csv(&run.out.path(&stem, "csv"), &profile)?;
    }
    let path = run.out.write_document(&stem, &doc)?;
    let dip = summary["dip_ratio"]
        .as_f64()
        .map(|d| format!(", dip {d:.3}"))
        .unwrap_or_default();
    println!(
        "{}{} points, level {}{dip} -> {}",
        run.tag(),
        xs.len(),
        profile.diagnostics.level,
        path.display()
    );

    if run.cfg.image.direct_oracle {
        let ocmd = "image-oracle";
        let ostem = format!("{stem}-oracle");
        let direct = image_direct(&xs, &optical, &pump, &obj, &quad).map_err(|e| run.fail(ocmd, &ostem, e))?;
        let diff = profile.max_abs_diff(&direct)?;
        let summary = json!({
            "max_abs_diff": diff,
            "diagnostics": direct.diagnostics,
        });
        let doc = run.out.document(&run.manifest(ocmd), summary, &direct)?;
        if run.out.csv() {
            write_comparison_csv(&run.out.path(&ostem, "csv"), &profile, &direct)?;
        }
        let path = run.out.write_document(&ostem, &doc)?;
        println!(
            "{}direct oracle: max |reduced - direct| = {diff:.3e} -> {}",
            run.tag(),
            path.display()
        );
    }
    Ok(())
}

pub fn psf_cmd(run: &Run) -> Result<(), CliError> {
    let cmd = "psf";
    let stem = run.stem(cmd);
    let optical = run.cfg.optical.resolve()?;
    let pump = run.cfg.pump()?;
    let xs = match &run.cfg.axis {
        Some(a) => a.resolve()?,
        None => uniform_axis(-2.0 * optical.lambda_max(), 2.0 * optical.lambda_max(), 401),
    };
    let quad = run.cfg.quadrature.resolve()?;
    let p = psf(&optical, &pump, &xs, &quad).map_err(|e| run.fail(cmd, &stem, e))?;
    let summary = json!({
        "fwhm": p.fwhm,
        "first_minimum": p.first_minimum,
        "side_lobe": p.side_lobe,
        "diagnostics": p.profile.diagnostics,
    });
    let doc = run.out.document(&run.manifest(cmd), summary, &p)?;
    if run.out.csv() {
        write_profile_csv(&run.out.path(&stem, "csv"), &p.profile)?;
    }
    let path = run.out.write_document(&stem, &doc)?;
    let fmt = |v: Option<f64>, scale: f64| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.4}", x * scale));
    println!(
        "{}FWHM {} um, first side lobe {} -> {}",
        run.tag(),
        fmt(p.fwhm, 1.0 / UM),
        fmt(p.side_lobe, 1.0),
        path.display()
    );
    Ok(())
}

pub fn dmin_cmd(run: &Run) -> Result<(), CliError> {
    let cmd = "dmin";
    let stem = run.stem(cmd);
    let optical = run.cfg.optical.resolve()?;
    let pump = run.cfg.pump()?;
    let quad = run.cfg.quadrature.resolve()?;
    let search = run.cfg.search.resolve()?;
    let r = min_resolvable_distance(&optical, &pump, &quad, &search).map_err(|e| run.fail(cmd, &stem, e))?;
    let paraxial = paraxial_dmin(optical.lambda_signal, optical.lambda_idler, optical.l_a, optical.l_b).ok();
    let ratio = r.d_min / optical.lambda_max();
    let summary = json!({
        "d_min": r.d_min,
        "d_min_over_lambda_max": ratio,
        "paraxial_d_min": paraxial,
        "dip_at_dmin": r.dip_at_dmin,
        "iterations": r.iterations,
        "wall_time_s": r.wall_time_s,
    });
    let doc = run.out.document(&run.manifest(cmd), summary, &r)?;
    if run.out.csv() {
        write_scan_csv(&run.out.path(&stem, "csv"), &r.scan)?;
    }
    let path = run.out.write_document(&stem, &doc)?;
    println!(
        "{}d_min = {:.4} um (d_min/lambda_max = {ratio:.4}, dip {:.4}, {} bisection steps) -> {}",
        run.tag(),
        r.d_min / UM,
        r.dip_at_dmin,
        r.iterations,
        path.display()
    );
    Ok(())
}

pub fn sweep_cmd(run: &Run, kind: SweepKind) -> Result<(), CliError> {
    let cmd = format!("sweep-{}", kind.name());
    let stem = run.stem(&cmd);
    let quad = run.cfg.quadrature.resolve()?;
    let search = run.cfg.search.resolve()?;
    let s = &run.cfg.sweep;
    let missing = |field: &str| CliError::Config(format!("sweep.{field}: missing, needed by `sweep {}`", kind.name()));
    let table = match kind {
        SweepKind::Thickness => {
            let ls = s
                .thickness
                .as_ref()
                .ok_or_else(|| missing("thickness"))?
                .resolve("sweep.thickness")?;
            let base = run.cfg.optical.resolve_with(0.0, 0.0)?;
            sweep_thickness(&base, &run.cfg.pump()?, &ls, &quad, &search)
        }
        SweepKind::PumpWidth => {
            let sigmas = s
                .pump_width
                .as_ref()
                .ok_or_else(|| missing("pump_width"))?
                .resolve("sweep.pump_width")?;
            sweep_pump_width(&run.cfg.optical.resolve()?, &sigmas, &quad, &search)
        }
        SweepKind::Wavelengths => {
            let ls = s
                .lambda_signal
                .as_ref()
                .ok_or_else(|| missing("lambda_signal"))?
                .resolve("sweep.lambda_signal")?;
            let li = s
                .lambda_idler
                .as_ref()
                .ok_or_else(|| missing("lambda_idler"))?
                .resolve("sweep.lambda_idler")?;
            let (l_a, l_b) = run.cfg.optical.thicknesses()?;
            if l_a != l_b {
                return Err(CliError::Config(
                    "optical: the wavelength sweep needs equal crystal thicknesses".into(),
                ));
            }
            sweep_wavelengths(&ls, &li, l_a, &run.cfg.pump()?, &quad, &search)
        }
    }
    .map_err(|e| run.fail(&cmd, &stem, e))?;

    report_sweep(run, &table);
    let failures = table.failures();
    let summary = json!({
        "points": table.points.len(),
        "failures": failures,
        "d_min": table.d_min(),
        "relative_spread": table.relative_spread(|_| true),
    });
    let doc = run.out.document(&run.manifest(&cmd), summary, &table)?;
    if run.out.csv() {
        write_sweep_csv(&run.out.path(&stem, "csv"), &table)?;
    }
    let path = run.out.write_document(&stem, &doc)?;
    println!(
        "{}{} points, {failures} failed -> {}",
        run.tag(),
        table.points.len(),
        path.display()
    );
    if failures == table.points.len() {
        let bracket = table.points.iter().all(|p| p.status.starts_with("bracket"));
        return Err(CliError::SweepFailed {
            total: failures,
            code: if bracket { 4 } else { 3 },
        });
    }
    Ok(())
}

fn report_sweep(run: &Run, table: &SweepTable) {
    for p in &table.points {
        let params = table
            .parameters
            .iter()
            .zip(&p.params)
            .map(|(n, v)| format!("{n} = {:.4e} m", v))
            .collect::<Vec<_>>()
            .join(", ");
        if p.is_ok() {
            println!(
                "{}{params}: d_min = {:.4} um, ratio {:.4}{}",
                run.tag(),
                p.d_min / UM,
                p.ratio,
                p.regime.as_deref().map(|r| format!(" ({r})")).unwrap_or_default()
            );
        } else {
            eprintln!("warning: {}{params}: {}", run.tag(), p.status);
        }
    }
}
