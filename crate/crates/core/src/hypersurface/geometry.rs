use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ambient::WeightedAmbient;
use crate::error::{Error, Result};

/// Smallest admissible singular value of the tangent map.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Extrinsic geometry of a hypersurface at one point.
///
/// Sign conventions: `A(e_i, e_j) = -<D_{e_i} e_j, nu>` and
/// `H = sum_i <D_{e_i} nu, e_i> = tr(g^{-1} A)`, so round spheres with the
/// outward normal have `H > 0` and self-shrinkers satisfy `H = <x, nu> / 2`.
#[derive(Clone, Debug, Serialize)]
pub struct PointGeometry {
    pub position: DVector<f64>,
    pub normal: DVector<f64>,
    /// Columns are the coordinate tangent vectors.
    pub tangents: DMatrix<f64>,
    pub first_form: DMatrix<f64>,
    pub second_form: DMatrix<f64>,
    pub mean_curv: f64,
    pub shape_sq: f64,
    pub f_mean_curv: f64,
    /// Only for surfaces (`n = 2`).
    pub gauss_curv: Option<f64>,
    /// `|grad f|^2` of the restriction of `f`, i.e. of the tangential part
    /// of the ambient gradient.
    pub tangential_f_grad_sq: f64,
    /// `<grad f, nu>`.
    pub normal_f_deriv: f64,
}

impl PointGeometry {
    pub fn n(&self) -> usize {
        self.first_form.nrows()
    }

    /// `|A|^2 + Ric_f(nu, nu)`, the potential of the stability operator.
    pub fn stability_potential(&self, space: &WeightedAmbient) -> Result<f64> {
        Ok(self.shape_sq + space.bakry_emery_ricci(self.position.as_slice(), self.normal.as_slice())?)
    }

    /// `g`-orthonormal tangent frame (columns), from Cholesky of the first
    /// form.
    pub fn orthonormal_frame(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let chol = self
            .first_form
            .clone()
            .cholesky()
            .ok_or_else(|| Error::DegenerateGeometry("first fundamental form not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateGeometry("singular frame".into()))?;
        // e = X L^{-T}, so e^T e = L^{-1} g L^{-T} = I.
        let frame = &self.tangents * linv.transpose();
        let a_on = &linv * &self.second_form * linv.transpose();
        Ok((frame, a_on))
    }
}

/// Unit vector orthogonal to the columns of an `(n+1) x n` matrix, oriented
/// so that `det[J | nu] > 0`.
pub fn cofactor_normal(jacobian: &DMatrix<f64>) -> DVector<f64> {
    let rows = jacobian.nrows();
    let mut nu = DVector::zeros(rows);
    for i in 0..rows {
        let minor = jacobian.clone().remove_row(i);
        let sign = if (i + rows - 1) % 2 == 0 { 1.0 } else { -1.0 };
        nu[i] = sign * minor.determinant();
    }
    let norm = nu.norm();
    if norm > 0.0 {
        nu /= norm;
    }
    nu
}

pub(crate) fn geometry_from_derivatives(
    position: &DVector<f64>,
    jacobian: &DMatrix<f64>,
    second: &[DVector<f64>],
    orientation: f64,
    space: &WeightedAmbient,
) -> Result<PointGeometry> {
    let n = jacobian.ncols();
    let g = jacobian.transpose() * jacobian;
    let min_eig = g.clone().symmetric_eigenvalues().min();
    if !(min_eig > RANK_TOLERANCE * RANK_TOLERANCE) {
        return Err(Error::DegenerateGeometry(format!(
            "tangent map is rank deficient at {:?} (smallest singular value {:.3e})",
            position.as_slice(),
            min_eig.max(0.0).sqrt()
        )));
    }
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("singular first fundamental form".into()))?;
    let normal = cofactor_normal(jacobian) * orientation.signum();
    let a = DMatrix::from_fn(n, n, |i, j| -second[i * n + j].dot(&normal));
    let a = (&a + a.transpose()) * 0.5;
    let shape_op = &ginv * &a;
    let mean_curv = shape_op.trace();
    let shape_sq = (&shape_op * &shape_op).trace();
    let gauss_curv = (n == 2).then(|| shape_op.determinant());

    let x = position.as_slice();
    let grad = space.grad(x)?;
    let normal_f_deriv = grad.dot(&normal);
    let tangential_f_grad_sq = (grad.norm_squared() - normal_f_deriv * normal_f_deriv).max(0.0);

    Ok(PointGeometry {
        position: position.clone(),
        normal,
        tangents: jacobian.clone(),
        first_form: g,
        second_form: a,
        mean_curv,
        shape_sq,
        f_mean_curv: mean_curv - normal_f_deriv,
        gauss_curv,
        tangential_f_grad_sq,
        normal_f_deriv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_normal_is_orthogonal_and_positively_oriented() {
        let j = DMatrix::from_row_slice(4, 3, &[1.0, 0.2, 0.0, 0.0, 1.0, 0.3, 0.5, 0.0, 1.0, 0.1, 0.4, -0.2]);
        let nu = cofactor_normal(&j);
        for c in 0..3 {
            assert!(nu.dot(&j.column(c)).abs() < 1e-14);
        }
        let mut full = DMatrix::zeros(4, 4);
        full.view_mut((0, 0), (4, 3)).copy_from(&j);
        full.set_column(3, &nu);
        assert!(full.determinant() > 0.0);
        assert!((nu.norm() - 1.0).abs() < 1e-14);
    }
}
