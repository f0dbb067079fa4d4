use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use fmin_core::ambient::{gaussian_soliton, FnWeight, WeightedAmbient};
use fmin_core::catalog::{make_entry, CatalogEntry, CatalogParams};
use fmin_core::hypersurface::off::read_off;
use fmin_core::hypersurface::TriMesh;
use serde::Serialize;

use crate::error::CliError;
use crate::expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Index,
    Residual,
    Identities,
    Bounds,
    RefineStudy,
    Exhaustion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Gaussian,
    Zero,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Separable solver for `n >= 3`, finite elements otherwise.
    Auto,
    Mesh,
    Separable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e| format!("`{a}`: {e}"))?,
            b.parse().map_err(|e| format!("`{b}`: {e}"))?,
        )),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

/// Stability spectra, f-index and conformal identities of f-minimal
/// hypersurfaces in weighted Euclidean space.
#[derive(Clone, Debug, Parser)]
#[command(name = "fmin", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Catalog surface: plane, sphere, cylinder or torus.
    #[arg(long)]
    pub surface: Option<String>,
    /// Triangle mesh in OFF format (surfaces in R^3).
    #[arg(long, conflicts_with = "surface")]
    pub off: Option<PathBuf>,
    /// Hypersurface dimension.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Sphere-factor dimension of a cylinder.
    #[arg(long)]
    pub k: Option<usize>,
    /// Torus radii `major,minor`.
    #[arg(long, value_parser = parse_pair)]
    pub radii: Option<(f64, f64)>,
    /// Disk radius or cylinder half-height.
    #[arg(long)]
    pub truncation: Option<f64>,

    #[arg(long, value_enum, default_value_t = WeightKind::Gaussian)]
    pub weight: WeightKind,
    /// Weight expression in x1..x{n+1} for `--weight custom`.
    #[arg(long)]
    pub expr: Option<String>,

    #[arg(long, default_value_t = 4)]
    pub subdivision: usize,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 6)]
    pub count: usize,
    #[arg(long)]
    pub tol_zero: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Evaluate `residual` and `bounds` on the catalog mesh instead of the
    /// exact parametrization.
    #[arg(long)]
    pub mesh: bool,

    /// Audit sample count.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Audit ball radius.
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,

    /// Lower bound on Ric_f for the weighted area bound.
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    #[arg(long)]
    pub genus: Option<u32>,
    /// Ball radii for the volume growth ratio.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    pub growth_radii: Vec<f64>,

    /// Subdivision levels for `refine-study`.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
    pub levels: Vec<usize>,
    /// Domain sizes for `exhaustion`: disk radii, or half-heights on a
    /// cylinder.
    #[arg(long, value_delimiter = ',')]
    pub domains: Vec<f64>,

    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock time in the report (makes reports differ between runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Catalog { name: String, params: CatalogParams },
    Off { path: PathBuf },
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub surface: Option<SurfaceSpec>,
    pub n: usize,
    pub weight: WeightSpec,
    pub subdivision: usize,
    pub count: usize,
    pub tol_zero: Option<f64>,
    pub method: Method,
    pub mesh: bool,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub kappa: f64,
    pub genus: Option<u32>,
    pub growth_radii: Vec<f64>,
    pub levels: Vec<usize>,
    pub domains: Vec<f64>,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub timing: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let surface = match (&cli.surface, &cli.off) {
            (Some(name), None) => Some(SurfaceSpec::Catalog {
                name: name.clone(),
                params: CatalogParams {
                    n: cli.n,
                    k: cli.k,
                    radii: cli.radii,
                    truncation: cli.truncation,
                },
            }),
            (None, Some(path)) => Some(SurfaceSpec::Off { path: path.clone() }),
            (None, None) => None,
            (Some(_), Some(_)) => return Err(CliError::Config("--surface and --off are exclusive".into())),
        };
        if surface.is_none() && cli.command != Command::Identities {
            return Err(CliError::Config(format!(
                "`{}` needs --surface or --off",
                cli.command.to_possible_value().unwrap().get_name()
            )));
        }
        if cli.off.is_some() && cli.n != 2 {
            return Err(CliError::Config("OFF meshes are surfaces; use --n 2".into()));
        }
        match (cli.weight, &cli.expr) {
            (WeightKind::Custom, None) => return Err(CliError::Config("--weight custom needs --expr".into())),
            (WeightKind::Gaussian | WeightKind::Zero, Some(_)) => {
                return Err(CliError::Config("--expr is only used with --weight custom".into()))
            }
            _ => {}
        }
        if cli.command == Command::RefineStudy && cli.levels.is_empty() {
            return Err(CliError::Config("--levels must not be empty".into()));
        }
        Ok(Self {
            command: cli.command,
            surface,
            n: cli.n,
            weight: WeightSpec {
                kind: cli.weight,
                expr: cli.expr.clone(),
            },
            subdivision: cli.subdivision,
            count: cli.count,
            tol_zero: cli.tol_zero,
            method: cli.method,
            mesh: cli.mesh,
            samples: cli.samples,
            radius: cli.radius,
            seed: cli.seed,
            kappa: cli.kappa,
            genus: cli.genus,
            growth_radii: cli.growth_radii.clone(),
            levels: cli.levels.clone(),
            domains: cli.domains.clone(),
            format: cli.format,
            output: cli.output.clone(),
            timing: cli.timing,
        })
    }
}

pub enum ResolvedSurface {
    Catalog(Box<CatalogEntry>),
    Off(TriMesh),
}

pub struct Resolved {
    pub surface: Option<ResolvedSurface>,
    pub space: WeightedAmbient,
}

impl Resolved {
    pub fn entry(&self) -> Option<&CatalogEntry> {
        match &self.surface {
            Some(ResolvedSurface::Catalog(e)) => Some(e),
            _ => None,
        }
    }
}

/// Loads the surface and builds the weight before any computation.
pub fn resolve(config: &RunConfig) -> Result<Resolved, CliError> {
    let surface = match &config.surface {
        Some(SurfaceSpec::Catalog { name, params }) => Some(ResolvedSurface::Catalog(Box::new(
            make_entry(name, params).map_err(|e| CliError::Config(e.to_string()))?,
        ))),
        Some(SurfaceSpec::Off { path }) => Some(ResolvedSurface::Off(
            read_off(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        )),
        None => None,
    };
    let dim = config.n + 1;
    let space = match config.weight.kind {
        WeightKind::Gaussian => gaussian_soliton(dim),
        WeightKind::Zero => WeightedAmbient::zero(dim),
        WeightKind::Custom => {
            let src = config.weight.expr.as_deref().unwrap_or_default();
            let e = expr::parse(src, dim).map_err(|e| CliError::Config(format!("--expr: {e}")))?;
            let label = format!("custom: {src}");
            WeightedAmbient::finite_difference(dim, Arc::new(FnWeight::new(label, move |x| e.eval(x))))
        }
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Resolved { surface, space })
}
