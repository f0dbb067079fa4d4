//! Hypersurfaces as parametric patches or oriented triangle meshes, with
//! pointwise geometry and the integral diagnostics built on it.

mod fit;
mod geometry;
pub mod mesh;
pub mod off;
mod patch;

use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use serde::Serialize;

pub use fit::{all_vertex_geometry, vertex_geometry};
pub use geometry::{cofactor_normal, PointGeometry, RANK_TOLERANCE};
pub use mesh::{MeshStats, TriMesh};
pub use patch::{Patch, PatchMap, PatchPoint};

use crate::ambient::WeightedAmbient;
use crate::error::{Error, Result};
use crate::quadrature::{Quadrature, TRIANGLE_RULE};

#[derive(Clone, Debug)]
pub enum Surface {
    Patch(Patch),
    Mesh(TriMesh),
}

impl From<Patch> for Surface {
    fn from(p: Patch) -> Self {
        Surface::Patch(p)
    }
}

impl From<TriMesh> for Surface {
    fn from(m: TriMesh) -> Self {
        Surface::Mesh(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    Param(Vec<f64>),
    Vertex(usize),
}

impl Surface {
    pub fn n(&self) -> usize {
        match self {
            Surface::Patch(p) => p.param_dim(),
            Surface::Mesh(_) => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n() + 1
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Surface::Patch(p) => p.is_closed(),
            Surface::Mesh(m) => m.is_closed(),
        }
    }

    /// Mesh topology for meshes, the declared value for patches.
    pub fn genus(&self) -> Option<u32> {
        match self {
            Surface::Patch(p) => p.genus(),
            Surface::Mesh(m) => m.genus(),
        }
    }
}

/// A quadrature sample carrying what the integral diagnostics need.
#[derive(Clone, Debug)]
pub struct SurfaceSample {
    pub position: DVector<f64>,
    pub dv: f64,
    pub normal: DVector<f64>,
    pub shape_sq: f64,
}

fn check_space(surface: &Surface, space: &WeightedAmbient) -> Result<()> {
    if surface.ambient_dim() != space.dim() {
        return Err(Error::Argument(format!(
            "surface lives in R^{} but the ambient has dimension {}",
            surface.ambient_dim(),
            space.dim()
        )));
    }
    Ok(())
}

pub fn point_geometry(surface: &Surface, location: &Location, space: &WeightedAmbient) -> Result<PointGeometry> {
    check_space(surface, space)?;
    match (surface, location) {
        (Surface::Patch(p), Location::Param(u)) => {
            if u.len() != p.param_dim() {
                return Err(Error::Argument(format!("parameter point {u:?} has wrong dimension")));
            }
            p.geometry(u, space)
        }
        (Surface::Mesh(m), Location::Vertex(v)) => vertex_geometry(m, *v, space),
        _ => Err(Error::Argument("location kind does not match the surface kind".into())),
    }
}

/// Position and area element only; cheap for meshes.
fn volume_samples(surface: &Surface, quad: &Quadrature) -> Vec<(DVector<f64>, f64)> {
    match surface {
        Surface::Patch(p) => quad
            .box_points(p.bounds())
            .into_iter()
            .map(|(u, w)| {
                let pt = p.eval(&u);
                let g = pt.jacobian.transpose() * &pt.jacobian;
                (pt.position, w * g.determinant().max(0.0).sqrt())
            })
            .collect(),
        Surface::Mesh(m) => {
            let mut out = Vec::with_capacity(3 * m.face_count());
            for (f, face) in m.faces().iter().enumerate() {
                let area = m.face_area(f);
                for (bary, w) in TRIANGLE_RULE {
                    let x = bary_point(m, face, &bary);
                    out.push((DVector::from_column_slice(x.as_slice()), area * w));
                }
            }
            out
        }
    }
}

fn bary_point(m: &TriMesh, face: &[usize; 3], bary: &[f64; 3]) -> Vector3<f64> {
    (0..3).map(|k| m.vertices()[face[k]] * bary[k]).sum()
}

/// Samples with curvature; meshes interpolate vertex values linearly.
pub fn geometric_samples(surface: &Surface, space: &WeightedAmbient, quad: &Quadrature) -> Result<Vec<SurfaceSample>> {
    check_space(surface, space)?;
    match surface {
        Surface::Patch(p) => quad
            .box_points(p.bounds())
            .into_iter()
            .map(|(u, w)| {
                let g = p.geometry(&u, space)?;
                Ok(SurfaceSample {
                    dv: w * g.first_form.determinant().sqrt(),
                    position: g.position,
                    normal: g.normal,
                    shape_sq: g.shape_sq,
                })
            })
            .collect(),
        Surface::Mesh(m) => {
            let geo = all_vertex_geometry(m, space)?;
            let mut out = Vec::with_capacity(3 * m.face_count());
            for (f, face) in m.faces().iter().enumerate() {
                let area = m.face_area(f);
                for (bary, w) in TRIANGLE_RULE {
                    let x = bary_point(m, face, &bary);
                    let mut normal = DVector::zeros(3);
                    let mut shape_sq = 0.0;
                    for k in 0..3 {
                        normal += &geo[face[k]].normal * bary[k];
                        shape_sq += geo[face[k]].shape_sq * bary[k];
                    }
                    normal /= normal.norm();
                    out.push(SurfaceSample {
                        position: DVector::from_column_slice(x.as_slice()),
                        dv: area * w,
                        normal,
                        shape_sq,
                    });
                }
            }
            Ok(out)
        }
    }
}

/// Sup-norm of `H - <x, nu>/2` over patch quadrature points or mesh
/// vertices.
pub fn shrinker_residual(surface: &Surface, space: &WeightedAmbient, quad: &Quadrature) -> Result<f64> {
    check_space(surface, space)?;
    if !space.is_gaussian_soliton() {
        return Err(Error::WrongAmbient(space.label()));
    }
    let residual = |g: &PointGeometry| (g.mean_curv - 0.5 * g.position.dot(&g.normal)).abs();
    match surface {
        Surface::Patch(p) => quad
            .box_points(p.bounds())
            .into_iter()
            .try_fold(0.0f64, |acc, (u, _)| Ok(acc.max(residual(&p.geometry(&u, space)?)))),
        Surface::Mesh(m) => Ok(all_vertex_geometry(m, space)?
            .iter()
            .map(residual)
            .fold(0.0, f64::max)),
    }
}

/// `Vol_f = int e^{-f} dv`.
pub fn weighted_volume(surface: &Surface, space: &WeightedAmbient, quad: &Quadrature) -> Result<f64> {
    check_space(surface, space)?;
    volume_samples(surface, quad)
        .into_iter()
        .try_fold(0.0, |acc, (x, dv)| Ok(acc + (-space.f(x.as_slice())?).exp() * dv))
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub genus: u32,
    pub kappa: f64,
    pub min_f: f64,
}

/// Weighted area bound for closed surfaces with `Ric_f >= kappa`:
/// `Vol_f <= (16 pi / kappa) (genus + 1) e^{-min f}`.
pub fn area_bound_check(
    surface: &Surface,
    space: &WeightedAmbient,
    kappa: f64,
    declared_genus: Option<u32>,
    quad: &Quadrature,
) -> Result<AreaBound> {
    check_space(surface, space)?;
    if surface.n() != 2 {
        return Err(Error::Unsupported("the weighted area bound is for surfaces (n = 2)".into()));
    }
    if !surface.is_closed() {
        return Err(Error::Unsupported("the weighted area bound needs a closed surface".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::Precondition(format!("kappa must be positive, got {kappa}")));
    }
    let genus = declared_genus
        .or_else(|| surface.genus())
        .ok_or_else(|| Error::Precondition("genus is neither declared nor derivable".into()))?;
    let samples = volume_samples(surface, quad);
    let mut lhs = 0.0;
    let mut min_f = f64::INFINITY;
    for (x, dv) in &samples {
        let x = x.as_slice();
        let f = space.f(x)?;
        let ric_min = space.hess(x)?.symmetric_eigenvalues().min();
        if ric_min < kappa - 1e-12 {
            return Err(Error::Precondition(format!(
                "Ric_f >= {kappa} fails at {x:?} (smallest eigenvalue {ric_min})"
            )));
        }
        min_f = min_f.min(f);
        lhs += (-f).exp() * dv;
    }
    if let Surface::Mesh(m) = surface {
        for p in m.vertices() {
            min_f = min_f.min(space.f(p.as_slice())?);
        }
    }
    let rhs = 16.0 * PI / kappa * (genus as f64 + 1.0) * (-min_f).exp();
    Ok(AreaBound {
        lhs,
        rhs,
        holds: lhs <= rhs,
        genus,
        kappa,
        min_f,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexBoundIntegrals {
    /// `int (|A|^2 + 1/2)^{n/2} e^{-|x|^2/4} dv`
    pub selfshrinker_integral: f64,
    /// `int max{1, |A|^2 + Ric_f(nu, nu)}^{n/2} e^{-f} dv`
    pub general_integral: f64,
}

/// Integrands of the f-index upper bounds. Surfaces with boundary are
/// integrated over the given domain.
pub fn index_bound_integrand(
    surface: &Surface,
    space: &WeightedAmbient,
    quad: &Quadrature,
) -> Result<IndexBoundIntegrals> {
    let half_n = surface.n() as f64 / 2.0;
    let mut selfshrinker_integral = 0.0;
    let mut general_integral = 0.0;
    for s in geometric_samples(surface, space, quad)? {
        let x = s.position.as_slice();
        let gauss = (-0.25 * s.position.norm_squared()).exp();
        selfshrinker_integral += (s.shape_sq + 0.5).powf(half_n) * gauss * s.dv;
        let pot = s.shape_sq + space.bakry_emery_ricci(x, s.normal.as_slice())?;
        general_integral += pot.max(1.0).powf(half_n) * (-space.f(x)?).exp() * s.dv;
    }
    Ok(IndexBoundIntegrals {
        selfshrinker_integral,
        general_integral,
    })
}

const GROWTH_MAX_DEPTH: usize = 7;

/// `max over (x0, R) of Area(B_R(x0) cap Sigma) / R^n`, unweighted.
pub fn volume_growth_ratio(surface: &Surface, centers: &[Vec<f64>], radii: &[f64], quad: &Quadrature) -> Result<f64> {
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::Argument("volume growth needs at least one center and one radius".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Argument(format!("radii must be positive, got {r}")));
    }
    if let Some(c) = centers.iter().find(|c| c.len() != surface.ambient_dim()) {
        return Err(Error::Argument(format!("center {c:?} has wrong dimension")));
    }
    let n = surface.n() as i32;
    let mut best: f64 = 0.0;
    for c in centers {
        let center = DVector::from_column_slice(c);
        for &r in radii {
            let inside = |x: &DVector<f64>| (x - &center).norm() <= r;
            let area = match surface {
                Surface::Patch(p) => {
                    let (lo, hi) = panel_grid(p.bounds(), quad.panels.max(1));
                    lo.iter()
                        .zip(&hi)
                        .map(|(a, b)| patch_area_inside(p, a, b, quad.order, 0, &inside))
                        .sum::<f64>()
                }
                Surface::Mesh(m) => m
                    .faces()
                    .iter()
                    .map(|f| {
                        let v = [m.vertices()[f[0]], m.vertices()[f[1]], m.vertices()[f[2]]];
                        triangle_area_inside(&v, 0, &inside)
                    })
                    .sum(),
            };
            best = best.max(area / r.powi(n));
        }
    }
    Ok(best)
}

fn panel_grid(bounds: &[(f64, f64)], panels: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut lo = vec![Vec::new()];
    let mut hi = vec![Vec::new()];
    for &(a, b) in bounds {
        let w = (b - a) / panels as f64;
        let mut nlo = Vec::new();
        let mut nhi = Vec::new();
        for (l, h) in lo.iter().zip(&hi) {
            for k in 0..panels {
                let mut l2 = l.clone();
                let mut h2 = h.clone();
                l2.push(a + k as f64 * w);
                h2.push(a + (k + 1) as f64 * w);
                nlo.push(l2);
                nhi.push(h2);
            }
        }
        lo = nlo;
        hi = nhi;
    }
    (lo, hi)
}

fn patch_area_inside(
    p: &Patch,
    lo: &[f64],
    hi: &[f64],
    order: usize,
    depth: usize,
    inside: &dyn Fn(&DVector<f64>) -> bool,
) -> f64 {
    let bounds: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
    let pts = Quadrature::new(order, 1).box_points(&bounds);
    let mut kept = 0.0;
    let mut count_in = 0;
    for (u, w) in &pts {
        let pt = p.eval(u);
        let dv = w * (pt.jacobian.transpose() * &pt.jacobian).determinant().max(0.0).sqrt();
        if inside(&pt.position) {
            kept += dv;
            count_in += 1;
        }
    }
    let mixed = count_in != 0 && count_in != pts.len();
    if !mixed || depth >= GROWTH_MAX_DEPTH {
        return kept;
    }
    // split every axis in half
    let d = lo.len();
    let mut sum = 0.0;
    for mask in 0..(1usize << d) {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for k in 0..d {
            let mid = 0.5 * (lo[k] + hi[k]);
            if mask & (1 << k) == 0 {
                chi[k] = mid;
            } else {
                clo[k] = mid;
            }
        }
        sum += patch_area_inside(p, &clo, &chi, order, depth + 1, inside);
    }
    sum
}

fn triangle_area_inside(v: &[Vector3<f64>; 3], depth: usize, inside: &dyn Fn(&DVector<f64>) -> bool) -> f64 {
    let area = mesh::triangle_area(&v[0], &v[1], &v[2]);
    let probes = [v[0], v[1], v[2], (v[0] + v[1] + v[2]) / 3.0];
    let count_in = probes
        .iter()
        .filter(|p| inside(&DVector::from_column_slice(p.as_slice())))
        .count();
    if count_in == 0 && depth > 0 {
        return 0.0;
    }
    if count_in == probes.len() && depth > 0 {
        return area;
    }
    if depth >= GROWTH_MAX_DEPTH {
        return area * count_in as f64 / probes.len() as f64;
    }
    let m01 = (v[0] + v[1]) * 0.5;
    let m12 = (v[1] + v[2]) * 0.5;
    let m20 = (v[2] + v[0]) * 0.5;
    [
        [v[0], m01, m20],
        [v[1], m12, m01],
        [v[2], m20, m12],
        [m01, m12, m20],
    ]
    .iter()
    .map(|t| triangle_area_inside(t, depth + 1, inside))
    .sum()
}

/// `V = (R_f^P / 2 + |A|^2 / 2 + |grad f|^2 / 8) / 3` for surfaces in a flat
/// 3-dimensional ambient.
pub fn espinar_v(surface: &Surface, location: &Location, space: &WeightedAmbient) -> Result<f64> {
    if surface.n() != 2 {
        return Err(Error::Unsupported("V is defined for surfaces in 3-dimensional ambients".into()));
    }
    let g = point_geometry(surface, location, space)?;
    espinar_v_from_geometry(&g, space)
}

pub(crate) fn espinar_v_from_geometry(g: &PointGeometry, space: &WeightedAmbient) -> Result<f64> {
    let perelman = crate::conformal::perelman_scalar(space, g.position.as_slice())?;
    Ok((0.5 * perelman + 0.5 * g.shape_sq + 0.125 * g.tangential_f_grad_sq) / 3.0)
}
