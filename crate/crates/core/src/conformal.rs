//! The conformal change `g~ = e^{-2f/n} g` that turns f-minimal
//! hypersurfaces into minimal ones, with closed-form transformation laws and
//! an independent finite-difference curvature oracle to check them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ambient::{unit_vector, WeightedAmbient};
use crate::error::{Error, Result};
use crate::hypersurface::{point_geometry, Location, PointGeometry, Surface};

/// Points with `|H_f|` below this are treated as f-minimal.
pub const F_MINIMAL_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ORACLE_STEP: f64 = 1e-3;
/// Richardson disagreement (relative) above which the oracle warns.
pub const ORACLE_WARN_TOLERANCE: f64 = 1e-6;

/// `Ric~(v, v)` for a `g`-unit vector `v`:
/// `(n-1)(Hess f / n + df (x) df / n^2 - |df|^2 g / n^2) + (Lap f / n) g + Ric`
/// with `Ric = 0`.
pub fn conformal_ricci(space: &WeightedAmbient, x: &[f64], v: &[f64]) -> Result<f64> {
    let v = unit_vector(v, space.dim())?;
    let ric = conformal_ricci_matrix(space, x)?;
    Ok(v.dot(&(&ric * &v)))
}

/// The closed-form `Ric~` in Euclidean coordinates.
pub fn conformal_ricci_matrix(space: &WeightedAmbient, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = space.n() as f64;
    let grad = space.grad(x)?;
    let hess = space.hess(x)?;
    let lap = hess.trace();
    let d = space.dim();
    let eye = DMatrix::<f64>::identity(d, d);
    let outer = &grad * grad.transpose();
    Ok((&hess / n + outer / (n * n) - &eye * (grad.norm_squared() / (n * n))) * (n - 1.0) + eye * (lap / n))
}

/// `R~ = e^{2f/n} (R + 2 Lap f - (n-1)/n |grad f|^2)` with `R = 0`.
pub fn conformal_scalar(space: &WeightedAmbient, x: &[f64]) -> Result<f64> {
    let n = space.n() as f64;
    let f = space.f(x)?;
    let grad = space.grad(x)?;
    let lap = space.laplacian(x)?;
    Ok((2.0 * f / n).exp() * (2.0 * lap - (n - 1.0) / n * grad.norm_squared()))
}

/// Perelman's scalar curvature `R_f^P = R + 2 Lap f - |grad f|^2`, `R = 0`.
pub fn perelman_scalar(space: &WeightedAmbient, x: &[f64]) -> Result<f64> {
    Ok(2.0 * space.laplacian(x)? - space.grad(x)?.norm_squared())
}

/// `R~` through Perelman's scalar: `e^{2f/n} (R_f^P + |grad f|^2 / n)`.
pub fn conformal_scalar_from_perelman(space: &WeightedAmbient, x: &[f64]) -> Result<f64> {
    let n = space.n() as f64;
    let f = space.f(x)?;
    let grad_sq = space.grad(x)?.norm_squared();
    Ok((2.0 * f / n).exp() * (perelman_scalar(space, x)? + grad_sq / n))
}

/// Gaussian-soliton specialization `R~ = e^{|x|^2/(2n)} (n + 1 - (n-1)|x|^2/(4n))`.
pub fn shrinker_conformal_scalar(n: usize, x_sq: f64) -> f64 {
    let n = n as f64;
    (x_sq / (2.0 * n)).exp() * (n + 1.0 - (n - 1.0) * x_sq / (4.0 * n))
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    /// Coordinate components `Ric~_ab`.
    pub ricci_matrix: DMatrix<f64>,
    pub scalar: f64,
    /// Metric `g~_ab` at the point.
    pub metric: DMatrix<f64>,
    pub step: f64,
    /// Max relative change between steps `h` and `h/2`.
    pub richardson_change: f64,
    pub warning: Option<String>,
}

impl OracleResult {
    /// `Ric~(v, v) / g~(v, v)`, the value on the `g~`-unit vector along `v`.
    pub fn ricci_unit(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.ricci_matrix * v)) / v.dot(&(&self.metric * v))
    }
}

/// Ricci and scalar curvature of `g~ = e^{-2f/n} delta` by direct numerical
/// differentiation: fourth-order central differences for the metric
/// derivatives and again for the Christoffel derivatives, evaluated at steps
/// `h` and `h/2` and Richardson-combined. Uses only values of `f`.
pub fn fd_curvature_oracle(space: &WeightedAmbient, x: &[f64], step: f64) -> Result<OracleResult> {
    if x.len() != space.dim() {
        return Err(Error::ContractViolation(format!(
            "point has {} coordinates, ambient dimension is {}",
            x.len(),
            space.dim()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Argument(format!("oracle step must be positive, got {step}")));
    }
    let n = space.n() as f64;
    let metric = |p: &[f64]| -> Result<DMatrix<f64>> {
        let psi = (-2.0 * space.f(p)? / n).exp();
        Ok(DMatrix::identity(p.len(), p.len()) * psi)
    };
    let (ric_h, _) = ricci_by_differences(&metric, x, step)?;
    let (ric_h2, g) = ricci_by_differences(&metric, x, 0.5 * step)?;
    let ricci = (&ric_h2 * 16.0 - &ric_h) / 15.0;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("singular conformal metric".into()))?;
    let scalar = (&ginv * &ricci).trace();
    let scale = ricci.abs().max().max(1.0);
    let richardson_change = (&ric_h - &ric_h2).abs().max() / scale;
    let warning = (richardson_change > ORACLE_WARN_TOLERANCE).then(|| {
        format!("step {step} gives Richardson change {richardson_change:.3e}; reduce the step")
    });
    Ok(OracleResult {
        ricci_matrix: ricci,
        scalar,
        metric: g,
        step,
        richardson_change,
        warning,
    })
}

type MetricFn<'a> = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + 'a;

fn fourth_order<T, F>(x: &[f64], axis: usize, h: f64, eval: F) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Clone,
{
    let mut p = x.to_vec();
    let mut at = |s: f64| {
        p[axis] = x[axis] + s * h;
        eval(&p)
    };
    let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
    Ok(((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * h)))
}

/// `Gamma^a_bc` stored as `gamma[a][(b, c)]`.
fn christoffel(metric: &MetricFn, x: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
    let d = x.len();
    let g = metric(x)?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("singular metric in oracle".into()))?;
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|k| fourth_order(x, k, h, |p| metric(p)))
        .collect::<Result<_>>()?;
    let mut gamma = vec![DMatrix::zeros(d, d); d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let mut s = 0.0;
                for e in 0..d {
                    s += ginv[(a, e)] * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)]);
                }
                gamma[a][(b, c)] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

#[derive(Clone)]
struct Gammas(Vec<DMatrix<f64>>);

impl std::ops::Sub for Gammas {
    type Output = Gammas;
    fn sub(self, rhs: Gammas) -> Gammas {
        Gammas(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}
impl std::ops::Add for Gammas {
    type Output = Gammas;
    fn add(self, rhs: Gammas) -> Gammas {
        Gammas(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}
impl std::ops::Mul<f64> for Gammas {
    type Output = Gammas;
    fn mul(self, s: f64) -> Gammas {
        Gammas(self.0.iter().map(|a| a * s).collect())
    }
}

fn ricci_by_differences(metric: &MetricFn, x: &[f64], h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = x.len();
    let gamma = christoffel(metric, x, h)?;
    // dgamma[k] = d/dx_k Gamma
    let dgamma: Vec<Gammas> = (0..d)
        .map(|k| fourth_order(x, k, h, |p| christoffel(metric, p, h).map(Gammas)))
        .collect::<Result<_>>()?;
    let mut ric = DMatrix::zeros(d, d);
    for b in 0..d {
        for c in 0..d {
            let mut s = 0.0;
            for a in 0..d {
                s += dgamma[a].0[a][(b, c)] - dgamma[c].0[a][(a, b)];
                for e in 0..d {
                    s += gamma[a][(a, e)] * gamma[e][(b, c)] - gamma[a][(c, e)] * gamma[e][(a, b)];
                }
            }
            ric[(b, c)] = s;
        }
    }
    let ric = (&ric + ric.transpose()) * 0.5;
    Ok((ric, metric(x)?))
}

/// The transformed extrinsic quantities at one point of `Sigma`.
#[derive(Clone, Debug, Serialize)]
pub struct ConformalFrame {
    pub n: usize,
    pub point: DVector<f64>,
    /// `e^{f/n} nu`.
    pub nu_tilde: DVector<f64>,
    /// `A~(e~_i, e~_j)` in the `g~`-orthonormal frame `e~_i = e^{f/n} e_i`.
    pub a_tilde: DMatrix<f64>,
    pub h_tilde: f64,
    pub a_tilde_sq: f64,
    /// `e^{2f/n}(|A|^2 - H^2/n)`, present only at f-minimal points.
    pub a_tilde_sq_minimal: Option<f64>,
    pub ric_tilde_nn: f64,
    pub potential_tilde: f64,
    pub scalar_tilde: f64,
    pub f_minimal: bool,
}

pub fn conformal_frame(surface: &Surface, location: &Location, space: &WeightedAmbient) -> Result<ConformalFrame> {
    let geo = point_geometry(surface, location, space)?;
    conformal_frame_from_geometry(&geo, space)
}

pub fn conformal_frame_from_geometry(geo: &PointGeometry, space: &WeightedAmbient) -> Result<ConformalFrame> {
    let n = geo.n();
    let nf = n as f64;
    let x = geo.position.as_slice();
    let f = space.f(x)?;
    let factor = (f / nf).exp();
    let (_, a_on) = geo.orthonormal_frame()?;
    let eye = DMatrix::<f64>::identity(n, n);
    let a_tilde = (a_on - eye * (geo.normal_f_deriv / nf)) * factor;
    let h_tilde = a_tilde.trace();
    let a_tilde_sq = a_tilde.norm_squared();
    let f_minimal = geo.f_mean_curv.abs() <= F_MINIMAL_TOLERANCE;
    let a_tilde_sq_minimal =
        f_minimal.then(|| factor * factor * (geo.shape_sq - geo.mean_curv * geo.mean_curv / nf));
    let ric_tilde_nn = factor * factor * conformal_ricci(space, x, geo.normal.as_slice())?;
    Ok(ConformalFrame {
        n,
        point: geo.position.clone(),
        nu_tilde: &geo.normal * factor,
        a_tilde,
        h_tilde,
        a_tilde_sq,
        a_tilde_sq_minimal,
        ric_tilde_nn,
        potential_tilde: a_tilde_sq + ric_tilde_nn,
        scalar_tilde: conformal_scalar(space, x)?,
        f_minimal,
    })
}

/// Intrinsic Laplacian of `f|_Sigma`: Laplace-Beltrami on patches, the
/// cotangent formula on meshes.
pub fn surface_laplacian_of_weight(surface: &Surface, location: &Location, space: &WeightedAmbient) -> Result<f64> {
    match (surface, location) {
        (Surface::Patch(p), Location::Param(u)) => p.surface_laplacian_of_weight(u, space),
        (Surface::Mesh(m), Location::Vertex(v)) => {
            let values: Vec<f64> = m
                .vertices()
                .iter()
                .map(|p| space.f(p.as_slice()))
                .collect::<Result<_>>()?;
            Ok(m.cotan_laplacian_at(*v, &values))
        }
        _ => Err(Error::Argument("location kind does not match the surface kind".into())),
    }
}

/// Right side of the potential identity on f-minimal hypersurfaces:
/// `e^{2f/n}(|A|^2 + Ric_f(nu,nu) + Lap_Sigma f / n - (n-1)|grad f|^2 / n^2)`.
pub fn potential_tilde_identity(
    geo: &PointGeometry,
    surface_laplacian: f64,
    space: &WeightedAmbient,
) -> Result<f64> {
    let nf = geo.n() as f64;
    let x = geo.position.as_slice();
    let f = space.f(x)?;
    let ric_f = space.bakry_emery_ricci(x, geo.normal.as_slice())?;
    Ok((2.0 * f / nf).exp()
        * (geo.shape_sq + ric_f + surface_laplacian / nf - (nf - 1.0) * geo.tangential_f_grad_sq / (nf * nf)))
}

/// Self-shrinker form of the same identity:
/// `e^{|x|^2/(2n)}(|A|^2 + 1 - |x|^2/(4n) + |x^T|^2/(4n^2))`.
pub fn shrinker_potential_tilde(geo: &PointGeometry) -> f64 {
    let nf = geo.n() as f64;
    let x_sq = geo.position.norm_squared();
    let xn = geo.position.dot(&geo.normal);
    let xt_sq = (x_sq - xn * xn).max(0.0);
    (x_sq / (2.0 * nf)).exp() * (geo.shape_sq + 1.0 - x_sq / (4.0 * nf) + xt_sq / (4.0 * nf * nf))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalSample {
    pub x: Vec<f64>,
    pub closed: f64,
    pub oracle: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl ConformalSample {
    fn new(x: &[f64], closed: f64, oracle: f64) -> Self {
        let abs_err = (closed - oracle).abs();
        Self {
            x: x.to_vec(),
            closed,
            oracle,
            abs_err,
            rel_err: abs_err / closed.abs().max(1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalReport {
    pub identity: String,
    pub n: usize,
    pub weight: String,
    pub samples: Vec<ConformalSample>,
    pub max_rel_err: f64,
    pub warnings: Vec<String>,
}

impl ConformalReport {
    fn new(identity: &str, space: &WeightedAmbient, samples: Vec<ConformalSample>, warnings: Vec<String>) -> Self {
        let max_rel_err = samples.iter().map(|s| s.rel_err).fold(0.0, f64::max);
        Self {
            identity: identity.to_string(),
            n: space.n(),
            weight: space.label(),
            samples,
            max_rel_err,
            warnings,
        }
    }
}

pub const IDENTITY_RICCI: &str = "ricci_conformal_change";
pub const IDENTITY_SCALAR: &str = "scalar_conformal_change";
pub const IDENTITY_PERELMAN: &str = "scalar_via_perelman";
pub const IDENTITY_SHRINKER: &str = "scalar_shrinker_specialization";

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub step: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            radius: 3.0,
            seed: 0x5eed,
            step: DEFAULT_ORACLE_STEP,
        }
    }
}

/// Compares every closed-form law against [`fd_curvature_oracle`] at random
/// points in the ball `|x| <= radius`. Ricci values are compared on
/// `g~`-unit vectors along random directions.
pub fn identity_audit(space: &WeightedAmbient, opts: &AuditOptions) -> Result<Vec<ConformalReport>> {
    if opts.samples == 0 {
        return Err(Error::Argument("the audit needs at least one sample".into()));
    }
    let d = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut points = Vec::with_capacity(opts.samples);
    let mut dirs = Vec::with_capacity(opts.samples);
    while points.len() < opts.samples {
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-opts.radius..=opts.radius)).collect();
        if p.iter().map(|v| v * v).sum::<f64>().sqrt() > opts.radius {
            continue;
        }
        let v = loop {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                break v.into_iter().map(|a| a / norm).collect::<Vec<_>>();
            }
        };
        points.push(p);
        dirs.push(v);
    }

    let oracles: Vec<OracleResult> = points
        .par_iter()
        .map(|p| fd_curvature_oracle(space, p, opts.step))
        .collect::<Result<_>>()?;
    let warnings: Vec<String> = oracles.iter().filter_map(|o| o.warning.clone()).collect();

    let mut ricci = Vec::new();
    let mut scalar = Vec::new();
    let mut perelman = Vec::new();
    let mut shrinker = Vec::new();
    for ((p, v), o) in points.iter().zip(&dirs).zip(&oracles) {
        let f = space.f(p)?;
        let factor = (2.0 * f / space.n() as f64).exp();
        let closed = factor * conformal_ricci(space, p, v)?;
        ricci.push(ConformalSample::new(p, closed, o.ricci_unit(&DVector::from_column_slice(v))));
        scalar.push(ConformalSample::new(p, conformal_scalar(space, p)?, o.scalar));
        perelman.push(ConformalSample::new(p, conformal_scalar_from_perelman(space, p)?, o.scalar));
        if space.is_gaussian_soliton() {
            let x_sq = p.iter().map(|a| a * a).sum();
            shrinker.push(ConformalSample::new(p, shrinker_conformal_scalar(space.n(), x_sq), o.scalar));
        }
    }
    let mut reports = vec![
        ConformalReport::new(IDENTITY_RICCI, space, ricci, warnings.clone()),
        ConformalReport::new(IDENTITY_SCALAR, space, scalar, warnings.clone()),
        ConformalReport::new(IDENTITY_PERELMAN, space, perelman, warnings.clone()),
    ];
    if !shrinker.is_empty() {
        reports.push(ConformalReport::new(IDENTITY_SHRINKER, space, shrinker, warnings));
    }
    Ok(reports)
}
