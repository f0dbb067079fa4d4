use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::geometry::{geometry_from_derivatives, PointGeometry};
use crate::ambient::WeightedAmbient;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Immersion of a parameter box, written against [`Jet`] so that its first
/// and second derivatives are exact.
pub type PatchMap = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;

/// Position, Jacobian and second derivatives of a patch at one parameter
/// point.
#[derive(Clone, Debug)]
pub struct PatchPoint {
    pub position: DVector<f64>,
    /// `(n+1) x n`, column `i` is `dX/du_i`.
    pub jacobian: DMatrix<f64>,
    /// `second[i * n + j] = d^2 X / du_i du_j`.
    pub second: Vec<DVector<f64>>,
}

#[derive(Clone)]
pub struct Patch {
    name: String,
    param_dim: usize,
    ambient_dim: usize,
    map: PatchMap,
    bounds: Vec<(f64, f64)>,
    boundary_faces: Vec<[bool; 2]>,
    orientation: f64,
    genus: Option<u32>,
}

impl fmt::Debug for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Patch")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim)
            .field("ambient_dim", &self.ambient_dim)
            .field("bounds", &self.bounds)
            .field("boundary_faces", &self.boundary_faces)
            .field("orientation", &self.orientation)
            .field("genus", &self.genus)
            .finish()
    }
}

impl Patch {
    /// A patch whose box faces are all Dirichlet boundary until declared
    /// otherwise.
    pub fn new(
        name: impl Into<String>,
        param_dim: usize,
        ambient_dim: usize,
        bounds: Vec<(f64, f64)>,
        map: PatchMap,
    ) -> Result<Self> {
        if ambient_dim != param_dim + 1 {
            return Err(Error::Argument(format!(
                "a hypersurface patch needs ambient dimension {} for {param_dim} parameters, got {ambient_dim}",
                param_dim + 1
            )));
        }
        if bounds.len() != param_dim || bounds.iter().any(|(a, b)| !(a < b)) {
            return Err(Error::Argument(format!("invalid parameter box {bounds:?}")));
        }
        Ok(Self {
            name: name.into(),
            param_dim,
            ambient_dim,
            map,
            bounds,
            boundary_faces: vec![[true, true]; param_dim],
            orientation: 1.0,
            genus: None,
        })
    }

    pub fn with_boundary_faces(mut self, faces: Vec<[bool; 2]>) -> Self {
        assert_eq!(faces.len(), self.param_dim);
        self.boundary_faces = faces;
        self
    }

    /// Marks every box face as a seam or degenerate pole rather than a
    /// boundary.
    pub fn closed(mut self, genus: u32) -> Self {
        self.boundary_faces = vec![[false, false]; self.param_dim];
        self.genus = Some(genus);
        self
    }

    pub fn with_genus(mut self, genus: Option<u32>) -> Self {
        self.genus = genus;
        self
    }

    pub fn flipped(mut self) -> Self {
        self.orientation = -self.orientation;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn boundary_faces(&self) -> &[[bool; 2]] {
        &self.boundary_faces
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_faces.iter().all(|f| !f[0] && !f[1])
    }

    pub fn genus(&self) -> Option<u32> {
        self.genus
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn position(&self, u: &[f64]) -> DVector<f64> {
        let n = self.param_dim;
        let seeds: Vec<Jet> = u.iter().map(|&v| Jet::constant(v, n)).collect();
        let out = (self.map)(&seeds);
        DVector::from_iterator(out.len(), out.iter().map(|j| j.value))
    }

    pub fn eval(&self, u: &[f64]) -> PatchPoint {
        assert_eq!(u.len(), self.param_dim, "parameter point has wrong dimension");
        let n = self.param_dim;
        let out = (self.map)(&Jet::seed(u));
        debug_assert_eq!(out.len(), self.ambient_dim);
        let position = DVector::from_iterator(out.len(), out.iter().map(|j| j.value));
        let jacobian = DMatrix::from_fn(out.len(), n, |a, i| out[a].grad[i]);
        let second = (0..n * n)
            .map(|k| DVector::from_iterator(out.len(), out.iter().map(|j| j.hess[k])))
            .collect();
        PatchPoint {
            position,
            jacobian,
            second,
        }
    }

    pub fn geometry(&self, u: &[f64], space: &WeightedAmbient) -> Result<PointGeometry> {
        if space.dim() != self.ambient_dim {
            return Err(Error::Argument(format!(
                "patch lives in R^{} but the ambient has dimension {}",
                self.ambient_dim,
                space.dim()
            )));
        }
        let p = self.eval(u);
        geometry_from_derivatives(&p.position, &p.jacobian, &p.second, self.orientation, space)
    }

    /// Intrinsic Laplacian of `f|_Sigma` from the Laplace-Beltrami formula
    /// `g^{ij} (F_ij - Gamma^k_ij F_k)` with `F = f o X`.
    pub fn surface_laplacian_of_weight(&self, u: &[f64], space: &WeightedAmbient) -> Result<f64> {
        let n = self.param_dim;
        let p = self.eval(u);
        let x = p.position.as_slice();
        let grad = space.grad(x)?;
        let hess = space.hess(x)?;
        let g = p.jacobian.transpose() * &p.jacobian;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateGeometry(format!("singular metric at {u:?}")))?;
        let first: Vec<f64> = (0..n).map(|i| grad.dot(&p.jacobian.column(i))).collect();
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                let xi = p.jacobian.column(i);
                let xj = p.jacobian.column(j);
                let xij = &p.second[i * n + j];
                let fij = xi.dot(&(&hess * xj)) + grad.dot(xij);
                // Gamma^k_ij F_k = g^{kl} <X_l, X_ij> F_k
                let mut christoffel_term = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        christoffel_term += ginv[(k, l)] * p.jacobian.column(l).dot(xij) * first[k];
                    }
                }
                lap += ginv[(i, j)] * (fij - christoffel_term);
            }
        }
        Ok(lap)
    }

    /// The same patch composed with an ambient linear map.
    pub fn transformed(&self, matrix: &DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), self.ambient_dim);
        assert_eq!(matrix.ncols(), self.ambient_dim);
        let inner = self.map.clone();
        let m = matrix.clone();
        let map: PatchMap = Arc::new(move |u: &[Jet]| {
            let x = inner(u);
            let n = u.first().map(Jet::dim).unwrap_or(0);
            (0..m.nrows())
                .map(|a| {
                    x.iter()
                        .enumerate()
                        .fold(Jet::constant(0.0, n), |acc, (b, xb)| acc + xb.scale(m[(a, b)]))
                })
                .collect()
        });
        Self {
            map,
            ..self.clone()
        }
    }
}
