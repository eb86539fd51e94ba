//! CSV and JSON writers. Numbers are written as `{:.8e}`; column headers carry
//! units in brackets.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::ImageProfile;
use crate::resolution::SweepTable;
use crate::spdc::{ProbabilityMap, Representation};

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Pretty-printed JSON.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Path of the JSON sidecar written next to a CSV file.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Columns `x_S[m], I_norm[1]` and, when present, `background_norm[1]`.
pub fn write_profile_csv(path: &Path, profile: &ImageProfile) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["x_S[m]", "I_norm[1]"];
    if profile.background.is_some() {
        header.push("background_norm[1]");
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, (&x, &v)) in profile.x_axis.iter().zip(&profile.values).enumerate() {
        let mut row = vec![num(x), num(v)];
        if let Some(bg) = &profile.background {
            row.push(num(bg[i]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Side-by-side reduced and direct images with their absolute difference.
pub fn write_comparison_csv(path: &Path, reduced: &ImageProfile, direct: &ImageProfile) -> Result<()> {
    if reduced.x_axis != direct.x_axis {
        return Err(Error::MalformedProfile(
            "compared profiles must share the x axis".into(),
        ));
    }
    let mut w = writer(path)?;
    w.write_record(["x_S[m]", "I_reduced[1]", "I_direct[1]", "abs_diff[1]"])
        .map_err(csv_err)?;
    for ((&x, &a), &b) in reduced.x_axis.iter().zip(&reduced.values).zip(&direct.values) {
        w.write_record([num(x), num(a), num(b), num((a - b).abs())])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Probability map as a matrix: the first row holds the idler axis, the first
/// column the signal axis. `meta` goes to the JSON sidecar together with the
/// grid shape and normalization.
pub fn write_map_csv(path: &Path, map: &ProbabilityMap, meta: &impl Serialize) -> Result<()> {
    let (s, i) = match map.representation {
        Representation::Angular => ("theta_s[rad]", "theta_i[rad]"),
        Representation::Momentum => ("q_s[1/m]", "q_i[1/m]"),
    };
    let mut w = writer(path)?;
    let mut header = vec![format!("{s}\\{i}")];
    header.extend(map.axis_i.iter().map(|&v| num(v)));
    w.write_record(&header).map_err(csv_err)?;
    for (r, &vs) in map.axis_s.iter().enumerate() {
        let mut row = vec![num(vs)];
        row.extend(map.values.row(r).iter().map(|&v| num(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    write_json(
        &sidecar_path(path),
        &serde_json::json!({
            "representation": map.representation,
            "shape": [map.axis_s.len(), map.axis_i.len()],
            "rows": s,
            "columns": i,
            "values": "|phi|^2 / max|phi|^2",
            "normalization": map.normalization,
            "meta": meta,
        }),
    )
}

/// Coarse-scan pairs of a d_min search, columns `d[m], dip[1]`.
pub fn write_scan_csv(path: &Path, scan: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["d[m]", "dip[1]"]).map_err(csv_err)?;
    for &(d, dip) in scan {
        w.write_record([num(d), num(dip)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sweep point: the swept parameters followed by the results.
pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = table.parameters.iter().map(|p| format!("{p}[m]")).collect();
    header.extend(
        [
            "d_min[m]",
            "paraxial_d_min[m]",
            "dip_at_dmin[1]",
            "d_min_over_lambda_max[1]",
            "regime",
            "status",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(csv_err)?;
    for p in &table.points {
        let mut row: Vec<String> = p.params.iter().map(|&v| num(v)).collect();
        row.extend([
            num(p.d_min),
            opt(p.paraxial_d_min),
            num(p.dip_at_dmin),
            num(p.ratio),
            p.regime.clone().unwrap_or_default(),
            p.status.clone(),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
