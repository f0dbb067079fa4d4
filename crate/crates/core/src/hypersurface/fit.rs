//! Per-vertex curvature by local quadratic height fitting.
//!
//! At each vertex the tangent plane is estimated from area-weighted face
//! normals, the 2-ring is expressed as heights over that plane, and a
//! polynomial `h(u, v)` without constant term is fitted by least squares:
//! quartic when the ring has at least 15 points, cubic from 10, quadratic
//! otherwise. A quadratic fit alone carries an `O(h^2)` curvature bias from
//! the quartic part of the surface. The fitted graph is then treated as a
//! local parametrization.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;

use super::geometry::{geometry_from_derivatives, PointGeometry};
use super::mesh::TriMesh;
use crate::ambient::WeightedAmbient;
use crate::error::{Error, Result};

const MIN_FIT_POINTS: usize = 5;

pub fn vertex_geometry(mesh: &TriMesh, v: usize, space: &WeightedAmbient) -> Result<PointGeometry> {
    if v >= mesh.vertex_count() {
        return Err(Error::Argument(format!("vertex {v} out of range")));
    }
    if space.dim() != 3 {
        return Err(Error::Argument("triangle meshes live in R^3".into()));
    }
    let p0 = mesh.vertices()[v];
    let n0 = mesh.vertex_normal(v);
    if !n0.iter().all(|c| c.is_finite()) {
        return Err(Error::DegenerateGeometry(format!("no normal at vertex {v}")));
    }
    let t1 = any_perpendicular(&n0);
    let t2 = n0.cross(&t1);

    let ring = mesh.two_ring(v);
    if ring.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateGeometry(format!(
            "vertex {v} has only {} neighbours in its 2-ring",
            ring.len()
        )));
    }
    // Scale local coordinates by the mean neighbour distance for conditioning.
    let scale = ring.iter().map(|&w| (mesh.vertices()[w] - p0).norm()).sum::<f64>() / ring.len() as f64;
    let degree = match ring.len() {
        r if r >= 15 => 4,
        r if r >= 10 => 3,
        _ => 2,
    };
    let mut design = DMatrix::zeros(ring.len(), monomial_count(degree));
    let mut rhs = DVector::zeros(ring.len());
    for (row, &w) in ring.iter().enumerate() {
        let d = (mesh.vertices()[w] - p0) / scale;
        let (u, s) = (d.dot(&t1), d.dot(&t2));
        design.row_mut(row).copy_from_slice(&monomials(u, s, degree));
        rhs[row] = d.dot(&n0);
    }
    let svd = design.svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::DegenerateGeometry(format!("quadratic fit failed at vertex {v}: {e}")))?;
    // Undo the scaling: h(u) = scale * hs(u / scale).
    let (huu, huv, hvv) = (2.0 * coef[0] / scale, coef[1] / scale, 2.0 * coef[2] / scale);
    let (hu, hv) = (coef[3], coef[4]);

    let xu = t1 + n0 * hu;
    let xv = t2 + n0 * hv;
    let jac = DMatrix::from_columns(&[to_dvec(&xu), to_dvec(&xv)]);
    let second = vec![
        to_dvec(&(n0 * huu)),
        to_dvec(&(n0 * huv)),
        to_dvec(&(n0 * huv)),
        to_dvec(&(n0 * hvv)),
    ];
    // (t1, t2, n0) is right-handed, so the cofactor normal already points
    // along n0.
    geometry_from_derivatives(&to_dvec(&p0), &jac, &second, 1.0, space)
}

/// Geometry at every vertex, in vertex order.
pub fn all_vertex_geometry(mesh: &TriMesh, space: &WeightedAmbient) -> Result<Vec<PointGeometry>> {
    (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| vertex_geometry(mesh, v, space))
        .collect()
}

fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2 - 1
}

/// `u^2, uv, v^2, u, v`, then the cubic and quartic monomials.
fn monomials(u: f64, v: f64, degree: usize) -> Vec<f64> {
    let mut m = vec![u * u, u * v, v * v, u, v];
    for d in 3..=degree {
        m.extend((0..=d).map(|i| u.powi((d - i) as i32) * v.powi(i as i32)));
    }
    m
}

fn any_perpendicular(n: &Vector3<f64>) -> Vector3<f64> {
    let axis = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (axis - n * n.dot(&axis)).normalize()
}

fn to_dvec(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::gaussian_soliton;
    use crate::hypersurface::mesh::{disk, icosphere, torus};

    #[test]
    fn plane_has_zero_curvature() {
        let d = disk(3.0, 6);
        let s = gaussian_soliton(3).unwrap();
        for v in 0..d.vertex_count() {
            let g = vertex_geometry(&d, v, &s).unwrap();
            assert!(g.shape_sq.abs() < 1e-20);
            assert!((g.normal[2] - 1.0).abs() < 1e-12);
            assert!(g.f_mean_curv.abs() < 1e-12);
        }
    }

    fn sphere_error(level: usize) -> f64 {
        let m = icosphere(2.0, level);
        let s = gaussian_soliton(3).unwrap();
        all_vertex_geometry(&m, &s)
            .unwrap()
            .iter()
            .map(|g| {
                assert!((g.normal.dot(&g.position) / 2.0 - 1.0).abs() < 1e-3);
                (g.mean_curv - 1.0)
                    .abs()
                    .max((g.shape_sq - 0.5).abs())
                    .max((g.gauss_curv.unwrap() - 0.25).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn sphere_curvature_converges_quadratically() {
        let (e3, e4) = (sphere_error(3), sphere_error(4));
        assert!(e3 < 0.05, "{e3}");
        assert!(e4 < e3 / 3.0, "{e3} -> {e4}");
    }

    #[test]
    fn torus_outer_equator_curvature() {
        let s = gaussian_soliton(3).unwrap();
        // vertex 0 sits at (3, 0, 0): principal curvatures 1 and 1/3
        let err = |a: usize, b: usize| {
            let g = vertex_geometry(&torus(2.0, 1.0, a, b), 0, &s).unwrap();
            (g.mean_curv - 4.0 / 3.0).abs().max((g.gauss_curv.unwrap() - 1.0 / 3.0).abs())
        };
        let (coarse, fine) = (err(96, 48), err(192, 96));
        assert!(coarse < 0.03, "{coarse}");
        assert!(fine < coarse / 3.0, "{coarse} -> {fine}");
    }
}
