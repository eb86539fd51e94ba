use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// Enough to repeat a run: the effective config after series merging and
/// command-line overrides, plus the tool version. Passing the written JSON back
/// through `--config` reproduces the computation.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<&'a str>,
    pub jobs: usize,
    pub config: &'a RunConfig,
}

impl<'a> Manifest<'a> {
    pub fn new(command: impl Into<String>, series: Option<&'a str>, config: &'a RunConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            series,
            jobs: rayon::current_num_threads(),
            config,
        }
    }
}

pub struct Output {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Output {
    pub fn new(dir: PathBuf, formats: Vec<Format>) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("output.dir: cannot create {}: {e}", dir.display())))?;
        Ok(Output { dir, formats })
    }

    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }

    pub fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{stem}.{ext}"))
    }

    /// Manifest and summary, plus the full result when JSON output was requested.
    pub fn document(&self, manifest: &Manifest, summary: Value, result: impl Serialize) -> Result<Value, CliError> {
        let mut doc = json!({ "manifest": manifest, "summary": summary });
        if self.json() {
            doc["result"] = serde_json::to_value(result).map_err(qiup::Error::from)?;
        }
        Ok(doc)
    }

    pub fn write_document(&self, stem: &str, doc: &Value) -> Result<PathBuf, CliError> {
        let path = self.path(stem, "json");
        qiup::export::write_json(&path, doc)?;
        Ok(path)
    }

    /// Records a failed computation next to where its output would have gone.
    pub fn write_failure(&self, stem: &str, manifest: &Manifest, err: &qiup::Error) -> Result<PathBuf, CliError> {
        self.write_document(stem, &json!({ "manifest": manifest, "error": error_json(err) }))
    }
}

pub fn error_json(err: &qiup::Error) -> Value {
    use qiup::Error as E;
    let mut v = json!({ "message": err.to_string() });
    match err {
        E::NonConvergence {
            achieved,
            requested,
            n_theta,
            refinements,
        } => {
            v["kind"] = "non-convergence".into();
            v["achieved_tol"] = (*achieved).into();
            v["requested_tol"] = (*requested).into();
            v["n_theta"] = (*n_theta).into();
            v["refinements"] = (*refinements).into();
        }
        E::WindowTooSmall { ratio, half_width } => {
            v["kind"] = "window-too-small".into();
            v["boundary_ratio"] = (*ratio).into();
            v["half_width"] = (*half_width).into();
        }
        E::Bracket { scan, .. } => {
            v["kind"] = "bracket".into();
            v["scan"] = json!(scan);
        }
        _ => v["kind"] = "error".into(),
    }
    v
}
