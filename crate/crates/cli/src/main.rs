//! `qiup`: command-line front end for the imaging simulator.
//!
//! Every run reads one config (a TOML file or a bundled recipe), writes CSV
//! and/or JSON into the output directory, and leaves a JSON manifest next to
//! each output that reproduces the run when passed back via `--config`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical convergence
//! failure, 4 bracket failure.

mod commands;
mod config;
mod output;
mod recipes;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Run, SweepKind};
use crate::config::{Format, ObjectSection, RunConfig};
use crate::output::Output;
use crate::units::Length;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qiup::Error),
    #[error("all {total} sweep points failed")]
    SweepFailed { total: usize, code: u8 },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use qiup::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::SweepFailed { code, .. } => *code,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::Domain(_)
                | E::UnsupportedProfile(_)
                | E::EmptyAxis(_)
                | E::Divergent(_) => 2,
                E::NonConvergence { .. } | E::WindowTooSmall { .. } | E::MalformedProfile(_) => 3,
                E::Bracket { .. } => 4,
                E::Io(_) | E::Json(_) => 1,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qiup",
    version,
    about = "Quantum imaging with undetected photons beyond the paraxial regime"
)]
struct Cli {
    /// Run configuration (TOML, or the JSON manifest of an earlier run).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Bundled recipe to use instead of a config file (see `qiup recipes`).
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    recipe: Option<String>,

    /// Output directory [default: from the config, else ./qiup-out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads [default: available cores].
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_name = "FORMATS")]
    format: Option<Vec<Format>>,

    /// Base node count of the angular quadrature.
    #[arg(long = "quad-n", global = true, value_name = "N")]
    quad_n: Option<usize>,

    /// Relative tolerance of the quadrature refinement.
    #[arg(long = "quad-tol", global = true, value_name = "X")]
    quad_tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint probability map of the photon pair.
    StateMap,
    /// Image of the configured object.
    Image {
        /// Double slit with this separation, e.g. 4.5um.
        #[arg(long, value_name = "LENGTH", conflicts_with = "single_slit")]
        d: Option<Length>,
        /// Single slit (the point-spread function).
        #[arg(long)]
        single_slit: bool,
        /// Also evaluate the brute-force idler-plane integral and compare.
        #[arg(long)]
        direct_oracle: bool,
    },
    /// Point-spread function with lobe metrics.
    Psf,
    /// Minimum resolvable slit separation under the 20 % dip criterion.
    Dmin,
    /// d_min over a range of one parameter.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
    },
    /// List the bundled recipes, or print one.
    Recipes { name: Option<String> },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    match (&cli.config, &cli.recipe) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => {
            let text = recipes::get(name).ok_or_else(|| {
                let names: Vec<_> = recipes::RECIPES.iter().map(|r| r.0).collect();
                CliError::Config(format!("unknown recipe `{name}` (available: {})", names.join(", ")))
            })?;
            let mut cfg = RunConfig::from_toml(text).map_err(|e| CliError::Config(format!("recipe {name}: {e}")))?;
            cfg.name.get_or_insert_with(|| name.clone());
            Ok(cfg)
        }
        (None, None) => Err(CliError::Config("pass --config PATH or --recipe NAME".into())),
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) {
    if let Some(n) = cli.quad_n {
        cfg.quadrature.n_theta = Some(n);
    }
    if let Some(t) = cli.quad_tol {
        cfg.quadrature.rel_tol = Some(t);
    }
    if let Some(f) = &cli.format {
        cfg.output.format = Some(f.clone());
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Command::Image {
        d,
        single_slit,
        direct_oracle,
    } = &cli.command
    {
        if let Some(d) = d {
            cfg.object = Some(ObjectSection::DoubleSlit { d: *d });
        }
        if *single_slit {
            cfg.object = Some(ObjectSection::SingleSlit);
        }
        cfg.image.direct_oracle |= direct_oracle;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Recipes { name } = &cli.command {
        match name {
            None => recipes::RECIPES
                .iter()
                .for_each(|(n, text)| println!("{n:8} {}", recipes::describe(text))),
            Some(n) => print!(
                "{}",
                recipes::get(n).ok_or_else(|| CliError::Config(format!("unknown recipe `{n}`")))?
            ),
        }
        return Ok(());
    }

    let mut cfg = load(&cli)?;
    apply_overrides(&cli, &mut cfg);
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let formats = cfg.formats();
    if formats.is_empty() {
        return Err(CliError::Config(
            "output.format: choose at least one of csv, json".into(),
        ));
    }
    let out = Output::new(cfg.output.dir.clone().unwrap_or_else(|| "qiup-out".into()), formats)?;

    let runs = match cli.command {
        Command::Sweep {
            kind: SweepKind::Wavelengths,
        } => {
            let mut single = cfg.clone();
            single.series.clear();
            vec![(None, single)]
        }
        _ => cfg.expand(),
    };
    for (_, c) in &runs {
        c.check()?;
    }
    for (label, c) in &runs {
        let run = Run {
            cfg: c,
            label: label.as_deref(),
            out: &out,
        };
        match cli.command {
            Command::StateMap => commands::state_map(&run)?,
            Command::Image { .. } => commands::image_cmd(&run)?,
            Command::Psf => commands::psf_cmd(&run)?,
            Command::Dmin => commands::dmin_cmd(&run)?,
            Command::Sweep { kind } => commands::sweep_cmd(&run, kind)?,
            Command::Recipes { .. } => unreachable!(),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
