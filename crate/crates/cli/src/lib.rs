//! Command-line front end for `fmin-core`.
//!
//! [`run`] maps a [`RunConfig`] to a [`Report`]; the `fmin` binary adds
//! argument parsing, thread configuration and output.

pub mod config;
pub mod error;
pub mod expr;
pub mod output;

use std::io::Write;
use std::time::Instant;

use fmin_core::ambient::Provenance as DerivativeSource;
use fmin_core::catalog::{CatalogEntry, CatalogKind};
use fmin_core::conformal::{identity_audit, AuditOptions, ConformalReport};
use fmin_core::hypersurface::{
    area_bound_check, index_bound_integrand, shrinker_residual, volume_growth_ratio, AreaBound, IndexBoundIntegrals,
    MeshStats, Surface, TriMesh,
};
use fmin_core::quadrature::Quadrature;
use fmin_core::spectral::{
    assemble, boundary_mask, f_index_exhaustion, mask_where, separable_spectrum, solve_spectrum, ExhaustionReport,
    PotentialSpec, SolverOptions, SpectrumResult, ZeroPolicy,
};
use fmin_core::Error;
use serde::Serialize;

pub use config::{Cli, Command, Format, Method, RunConfig};
pub use error::CliError;
use config::{resolve, Resolved, ResolvedSurface};
use output::Table;

pub const SPEC_VERSION: u32 = 1;
pub const THREADS_VAR: &str = "FMIN_THREADS";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub spec_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub results: Results,
    pub provenance: ReportProvenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportProvenance {
    pub version: &'static str,
    pub solver: SolverOptions,
    pub quadrature: Quadrature,
    pub weight: String,
    pub weight_derivatives: DerivativeSource,
    pub meshes: Vec<MeshStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Results {
    Index(IndexResult),
    Residual(ResidualResult),
    Identities(IdentitiesResult),
    Bounds(BoundsResult),
    RefineStudy(RefineResult),
    Exhaustion(ExhaustionResult),
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexResult {
    pub method: String,
    pub f_index: usize,
    pub spectrum: SpectrumResult,
    pub free_dofs: Option<usize>,
    pub exact_index: Option<usize>,
    /// Analytic low spectrum, given when it applies to the computed problem.
    pub reference_eigenvalues: Option<Vec<f64>>,
    pub max_abs_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualResult {
    pub discretization: &'static str,
    pub sup_norm: f64,
    pub is_shrinker: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitiesResult {
    pub max_rel_err: f64,
    pub reports: Vec<ConformalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeGrowth {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsResult {
    pub discretization: &'static str,
    pub area_bound: Option<AreaBound>,
    pub area_bound_skipped: Option<String>,
    pub index_bound: IndexBoundIntegrals,
    pub volume_growth: VolumeGrowth,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineRow {
    pub subdivision: usize,
    pub vertices: usize,
    pub free_dofs: usize,
    pub f_index: usize,
    pub eigenvalues: Vec<f64>,
    pub max_abs_error: Option<f64>,
    /// `log2` of the error ratio to the previous level.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineResult {
    pub exact_index: Option<usize>,
    pub reference_eigenvalues: Option<Vec<f64>>,
    pub rows: Vec<RefineRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExhaustionResult {
    pub domains: Vec<f64>,
    pub exact_index: Option<usize>,
    #[serde(flatten)]
    pub report: ExhaustionReport,
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions {
        zero: ZeroPolicy {
            tol_zero: config.tol_zero,
        },
        seed: config.seed,
        ..SolverOptions::default()
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    resolved: Resolved,
    opts: SolverOptions,
    quad: Quadrature,
    meshes: Vec<MeshStats>,
}

impl Ctx<'_> {
    fn mesh_at(&mut self, subdivision: usize) -> Result<TriMesh, CliError> {
        let m = match &self.resolved.surface {
            Some(ResolvedSurface::Catalog(e)) => e.mesh(subdivision)?,
            Some(ResolvedSurface::Off(m)) => m.clone(),
            None => unreachable!("checked by RunConfig::from_cli"),
        };
        self.meshes.push(m.mesh_stats());
        Ok(m)
    }

    /// Exact parametrization unless a mesh was requested or only a mesh exists.
    fn surface(&mut self) -> Result<(Surface, &'static str), CliError> {
        match &self.resolved.surface {
            Some(ResolvedSurface::Catalog(e)) if !self.config.mesh => Ok((e.surface(), "patch")),
            _ => Ok((Surface::Mesh(self.mesh_at(self.config.subdivision)?), "mesh")),
        }
    }

    fn use_separable(&self) -> Result<bool, CliError> {
        let entry = self.resolved.entry();
        let n = self.config.n;
        let separable = match self.config.method {
            Method::Mesh => false,
            Method::Separable => true,
            Method::Auto => n >= 3 && entry.is_some_and(|e| e.separable.is_some()),
        };
        if separable {
            if entry.and_then(|e| e.separable.as_ref()).is_none() {
                return Err(CliError::Config("the separable solver needs a plane, sphere or cylinder".into()));
            }
            if !self.resolved.space.is_gaussian_soliton() {
                return Err(CliError::Config("the separable solver needs --weight gaussian".into()));
            }
        }
        Ok(separable)
    }

    fn mesh_spectrum(&mut self, subdivision: usize) -> Result<(SpectrumResult, usize, usize), CliError> {
        let m = self.mesh_at(subdivision)?;
        let sys = assemble(&m, &self.resolved.space, &boundary_mask(&m), PotentialSpec::Stability)?;
        let spec = solve_spectrum(&sys, self.config.count, &self.opts)?;
        Ok((spec, m.vertex_count(), sys.free_count()))
    }

    /// Reference eigenvalues valid for closed surfaces or the separable model.
    fn reference(&self, separable: bool) -> Option<Vec<f64>> {
        let e = self.resolved.entry()?;
        let closed = matches!(e.kind, CatalogKind::Sphere) || (e.kind == CatalogKind::Cylinder && e.params.k == Some(e.n()));
        if !(closed || separable) || !self.resolved.space.is_gaussian_soliton() {
            return None;
        }
        e.exact_low_spectrum.clone()
    }

    fn exact_index(&self) -> Option<usize> {
        if !self.resolved.space.is_gaussian_soliton() {
            return None;
        }
        self.resolved.entry().and_then(|e| e.exact_index)
    }
}

fn max_abs_error(values: &[f64], reference: &Option<Vec<f64>>) -> Option<f64> {
    let r = reference.as_ref()?;
    if r.len() < values.len() {
        return None;
    }
    Some(values.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn run_index(ctx: &mut Ctx) -> Result<Results, CliError> {
    let separable = ctx.use_separable()?;
    let (spectrum, free_dofs) = if separable {
        let problem = ctx.resolved.entry().and_then(|e| e.separable.clone()).expect("checked");
        (separable_spectrum(&problem, ctx.config.count, &ctx.opts.zero)?, None)
    } else {
        let (s, _, free) = ctx.mesh_spectrum(ctx.config.subdivision)?;
        (s, Some(free))
    };
    let reference = ctx.reference(separable);
    Ok(Results::Index(IndexResult {
        method: spectrum.method.clone(),
        f_index: spectrum.f_index,
        max_abs_error: max_abs_error(&spectrum.eigenvalues, &reference),
        reference_eigenvalues: reference.map(|r| r.into_iter().take(spectrum.eigenvalues.len()).collect()),
        exact_index: ctx.exact_index(),
        free_dofs,
        spectrum,
    }))
}

fn run_residual(ctx: &mut Ctx) -> Result<Results, CliError> {
    let (surface, discretization) = ctx.surface()?;
    let sup_norm = shrinker_residual(&surface, &ctx.resolved.space, &ctx.quad)?;
    Ok(Results::Residual(ResidualResult {
        discretization,
        sup_norm,
        is_shrinker: ctx.resolved.entry().map(|e| e.is_shrinker),
    }))
}

fn run_identities(ctx: &mut Ctx) -> Result<Results, CliError> {
    let opts = AuditOptions {
        samples: ctx.config.samples,
        radius: ctx.config.radius,
        seed: ctx.config.seed,
        ..AuditOptions::default()
    };
    let reports = identity_audit(&ctx.resolved.space, &opts)?;
    let max_rel_err = reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    Ok(Results::Identities(IdentitiesResult { max_rel_err, reports }))
}

fn run_bounds(ctx: &mut Ctx) -> Result<Results, CliError> {
    let (surface, discretization) = ctx.surface()?;
    let space = &ctx.resolved.space;
    let (area_bound, area_bound_skipped) = match area_bound_check(&surface, space, ctx.config.kappa, ctx.config.genus, &ctx.quad) {
        Ok(b) => (Some(b), None),
        Err(e @ (Error::Unsupported(_) | Error::Precondition(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let index_bound = index_bound_integrand(&surface, space, &ctx.quad)?;
    let centers = vec![vec![0.0; space.dim()]];
    let ratio = volume_growth_ratio(&surface, &centers, &ctx.config.growth_radii, &ctx.quad)?;
    Ok(Results::Bounds(BoundsResult {
        discretization,
        area_bound,
        area_bound_skipped,
        index_bound,
        volume_growth: VolumeGrowth {
            centers,
            radii: ctx.config.growth_radii.clone(),
            ratio,
        },
    }))
}

fn run_refine(ctx: &mut Ctx) -> Result<Results, CliError> {
    if ctx.resolved.entry().is_none() {
        return Err(CliError::Config("refine-study needs a catalog surface".into()));
    }
    let reference = ctx.reference(false);
    let mut rows: Vec<RefineRow> = Vec::new();
    for &level in &ctx.config.levels {
        let (spec, vertices, free_dofs) = ctx.mesh_spectrum(level)?;
        let err = max_abs_error(&spec.eigenvalues, &reference);
        let rate = match (rows.last().and_then(|r| r.max_abs_error), err) {
            (Some(prev), Some(cur)) if prev > 0.0 && cur > 0.0 => Some((prev / cur).log2()),
            _ => None,
        };
        rows.push(RefineRow {
            subdivision: level,
            vertices,
            free_dofs,
            f_index: spec.f_index,
            eigenvalues: spec.eigenvalues,
            max_abs_error: err,
            rate,
        });
    }
    Ok(Results::RefineStudy(RefineResult {
        exact_index: ctx.exact_index(),
        reference_eigenvalues: reference.map(|r| r.into_iter().take(ctx.config.count).collect()),
        rows,
    }))
}

fn default_domains(entry: Option<&CatalogEntry>) -> Option<Vec<f64>> {
    match entry?.kind {
        CatalogKind::Plane => Some(vec![2.0, 4.0, 6.0, 8.0]),
        CatalogKind::Cylinder => Some(vec![2.0, 4.0, 6.0]),
        _ => None,
    }
}

fn run_exhaustion(ctx: &mut Ctx) -> Result<Results, CliError> {
    let domains = if ctx.config.domains.is_empty() {
        default_domains(ctx.resolved.entry())
            .ok_or_else(|| CliError::Config("exhaustion needs --domains for this surface".into()))?
    } else {
        ctx.config.domains.clone()
    };
    if domains.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CliError::Config("--domains must be strictly increasing".into()));
    }
    let m = ctx.mesh_at(ctx.config.subdivision)?;
    if m.is_closed() {
        return Err(CliError::Config("exhaustion needs a surface with boundary".into()));
    }
    let axial = ctx.resolved.entry().is_some_and(|e| e.kind == CatalogKind::Cylinder);
    let masks: Vec<Vec<bool>> = domains
        .iter()
        .map(|&r| {
            if axial {
                mask_where(&m, |x| x.z.abs() > r - 1e-9)
            } else {
                mask_where(&m, |x| x.norm() > r - 1e-9)
            }
        })
        .collect();
    let sys = assemble(&m, &ctx.resolved.space, &boundary_mask(&m), PotentialSpec::Stability)?;
    let report = f_index_exhaustion(&sys, &masks, ctx.config.count, &ctx.opts)?;
    Ok(Results::Exhaustion(ExhaustionResult {
        domains,
        exact_index: ctx.exact_index(),
        report,
    }))
}

/// Resolves the configuration and runs the command.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let resolved = resolve(config)?;
    let mut ctx = Ctx {
        config,
        opts: solver_options(config),
        quad: Quadrature::default(),
        meshes: Vec::new(),
        resolved,
    };
    let results = match config.command {
        Command::Index => run_index(&mut ctx)?,
        Command::Residual => run_residual(&mut ctx)?,
        Command::Identities => run_identities(&mut ctx)?,
        Command::Bounds => run_bounds(&mut ctx)?,
        Command::RefineStudy => run_refine(&mut ctx)?,
        Command::Exhaustion => run_exhaustion(&mut ctx)?,
    };
    Ok(Report {
        spec_version: SPEC_VERSION,
        command: config.command,
        config: config.clone(),
        results,
        provenance: ReportProvenance {
            version: env!("CARGO_PKG_VERSION"),
            solver: ctx.opts,
            quadrature: ctx.quad,
            weight: ctx.resolved.space.label(),
            weight_derivatives: ctx.resolved.space.provenance(),
            meshes: ctx.meshes,
            wall_clock_seconds: config.timing.then(|| start.elapsed().as_secs_f64()),
        },
    })
}

impl Report {
    /// The tabular part of the results.
    pub fn table(&self) -> Table {
        match &self.results {
            Results::Index(r) => {
                let mut t = Table::new(&["i", "eigenvalue", "residual", "reference", "negative"]);
                let s = &r.spectrum;
                for (i, (&v, &res)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
                    let reference = r.reference_eigenvalues.as_ref().and_then(|x| x.get(i).copied());
                    t.push(vec![i.into(), v.into(), res.into(), reference.into(), (v < -s.tol_zero).into()]);
                }
                t
            }
            Results::Residual(r) => {
                let mut t = Table::new(&["discretization", "sup_norm"]);
                t.push(vec![r.discretization.into(), r.sup_norm.into()]);
                t
            }
            Results::Identities(r) => {
                let mut t = Table::new(&["identity", "weight", "n", "x", "closed", "oracle", "abs_err", "rel_err"]);
                for rep in &r.reports {
                    for s in &rep.samples {
                        let x: Vec<String> = s.x.iter().map(|v| output::fmt_f64(*v)).collect();
                        t.push(vec![
                            rep.identity.as_str().into(),
                            rep.weight.as_str().into(),
                            rep.n.into(),
                            x.join(" ").into(),
                            s.closed.into(),
                            s.oracle.into(),
                            s.abs_err.into(),
                            s.rel_err.into(),
                        ]);
                    }
                }
                t
            }
            Results::Bounds(r) => {
                let mut t = Table::new(&["quantity", "value"]);
                if let Some(b) = &r.area_bound {
                    t.push(vec!["area_bound_lhs".into(), b.lhs.into()]);
                    t.push(vec!["area_bound_rhs".into(), b.rhs.into()]);
                    t.push(vec!["area_bound_holds".into(), b.holds.into()]);
                }
                t.push(vec!["selfshrinker_integral".into(), r.index_bound.selfshrinker_integral.into()]);
                t.push(vec!["general_integral".into(), r.index_bound.general_integral.into()]);
                t.push(vec!["volume_growth_ratio".into(), r.volume_growth.ratio.into()]);
                t
            }
            Results::RefineStudy(r) => {
                let mut t = Table::new(&["subdivision", "vertices", "free_dofs", "f_index", "lowest", "max_abs_error", "rate"]);
                for row in &r.rows {
                    t.push(vec![
                        row.subdivision.into(),
                        row.vertices.into(),
                        row.free_dofs.into(),
                        row.f_index.into(),
                        row.eigenvalues.first().copied().into(),
                        row.max_abs_error.into(),
                        row.rate.into(),
                    ]);
                }
                t
            }
            Results::Exhaustion(r) => {
                let mut t = Table::new(&["domain", "free_dofs", "f_index", "lowest"]);
                for (i, d) in r.domains.iter().enumerate() {
                    t.push(vec![
                        (*d).into(),
                        r.report.free_dofs[i].into(),
                        r.report.indices[i].into(),
                        r.report.lowest[i].into(),
                    ]);
                }
                t
            }
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => output::to_json(self).map_err(|e| CliError::Output(e.to_string())),
            Format::Csv => self.table().to_csv().map_err(|e| CliError::Output(e.to_string())),
        }
    }
}

/// Caps the global worker pool from `FMIN_THREADS`.
pub fn configure_threads(value: Option<&str>) -> Result<Option<usize>, CliError> {
    let Some(v) = value else { return Ok(None) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_VAR}: {e}")))?;
    Ok(Some(n))
}

/// Runs a parsed command line and writes the report.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let config = RunConfig::from_cli(cli)?;
    let start = Instant::now();
    let report = run(&config)?;
    let text = report.render(config.format)?;
    match &config.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string()))?,
    }
    eprintln!("fmin: finished in {:.3} s", start.elapsed().as_secs_f64());
    Ok(report)
}
