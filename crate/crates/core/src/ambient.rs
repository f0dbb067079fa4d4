//! Flat weighted ambient spaces `(R^{n+1}, g_0, e^{-f} dmu)`.
//!
//! In a flat ambient the Bakry-Emery tensor `Ric + Hess f` is just the
//! Hessian of the weight, so every curvature quantity here is exact when the
//! weight supplies closed-form derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative step for the central-difference gradient.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Relative step for second differences; roughly eps^(1/4).
pub const FD_HESSIAN_STEP: f64 = 1e-4;

const UNIT_TOLERANCE: f64 = 1e-12;

/// A smooth weight `f` on the ambient space. Derivatives are optional; the
/// ambient falls back to central differences when they are absent.
pub trait Weight: fmt::Debug + Send + Sync {
    fn label(&self) -> String;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<DVector<f64>> {
        None
    }

    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn is_gaussian(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroWeight;

impl Weight for ZeroWeight {
    fn label(&self) -> String {
        "zero".into()
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::zeros(x.len()))
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(x.len(), x.len()))
    }
}

/// `f = |x|^2 / 4`.
#[derive(Clone, Copy, Debug, Default)]
pub struct GaussianWeight;

impl Weight for GaussianWeight {
    fn label(&self) -> String {
        "gaussian".into()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.25 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(x.len(), x.iter().map(|v| 0.5 * v)))
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(x.len(), x.len()) * 0.5)
    }
    fn is_gaussian(&self) -> bool {
        true
    }
}

/// `f = coeff * x_axis^2` (zero-based axis).
#[derive(Clone, Copy, Debug)]
pub struct AxisQuadraticWeight {
    pub axis: usize,
    pub coeff: f64,
}

impl Weight for AxisQuadraticWeight {
    fn label(&self) -> String {
        format!("{}*x{}^2", self.coeff, self.axis + 1)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.coeff * x[self.axis] * x[self.axis]
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let mut g = DVector::zeros(x.len());
        g[self.axis] = 2.0 * self.coeff * x[self.axis];
        Some(g)
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(x.len(), x.len());
        h[(self.axis, self.axis)] = 2.0 * self.coeff;
        Some(h)
    }
}

/// The non-radial test weight `f = sin(x1) + x2^2 / 8`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SineQuadraticWeight;

impl Weight for SineQuadraticWeight {
    fn label(&self) -> String {
        "sin(x1)+x2^2/8".into()
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0].sin() + x[1] * x[1] / 8.0
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let mut g = DVector::zeros(x.len());
        g[0] = x[0].cos();
        g[1] = x[1] / 4.0;
        Some(g)
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(x.len(), x.len());
        h[(0, 0)] = -x[0].sin();
        h[(1, 1)] = 0.25;
        Some(h)
    }
}

/// A value-only weight backed by a closure; derivatives come from finite
/// differences.
#[derive(Clone)]
pub struct FnWeight {
    label: String,
    func: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl FnWeight {
    pub fn new(label: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            func: Arc::new(func),
        }
    }
}

impl fmt::Debug for FnWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnWeight").field("label", &self.label).finish()
    }
}

impl Weight for FnWeight {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct WeightedAmbient {
    dim: usize,
    weight: Arc<dyn Weight>,
    provenance: Provenance,
}

impl WeightedAmbient {
    /// Uses the weight's closed-form derivatives when it provides them.
    pub fn new(dim: usize, weight: Arc<dyn Weight>) -> Result<Self> {
        check_dim(dim)?;
        let probe = vec![0.0; dim];
        let provenance = if weight.gradient(&probe).is_some() && weight.hessian(&probe).is_some() {
            Provenance::ClosedForm
        } else {
            Provenance::FiniteDifference
        };
        Ok(Self {
            dim,
            weight,
            provenance,
        })
    }

    /// Ignores any closed-form derivatives and differentiates the value.
    pub fn finite_difference(dim: usize, weight: Arc<dyn Weight>) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            weight,
            provenance: Provenance::FiniteDifference,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, Arc::new(ZeroWeight))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hypersurface dimension `n = dim - 1`.
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn weight(&self) -> &Arc<dyn Weight> {
        &self.weight
    }

    pub fn label(&self) -> String {
        self.weight.label()
    }

    pub fn is_gaussian_soliton(&self) -> bool {
        self.weight.is_gaussian()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::ContractViolation(format!(
                "point has {} coordinates, ambient dimension is {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn raw_value(&self, x: &[f64]) -> Result<f64> {
        let v = self.weight.value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { point: x.to_vec() })
        }
    }

    pub fn f(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.raw_value(x)
    }

    pub fn grad(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        self.raw_value(x)?;
        if self.provenance == Provenance::ClosedForm {
            if let Some(g) = self.weight.gradient(x) {
                return Ok(g);
            }
        }
        self.fd_gradient(x, FD_GRADIENT_STEP * scale(x))
    }

    pub fn hess(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        self.raw_value(x)?;
        if self.provenance == Provenance::ClosedForm {
            if let Some(h) = self.weight.hessian(x) {
                return Ok(h);
            }
        }
        self.fd_hessian(x, FD_HESSIAN_STEP * scale(x))
    }

    /// Ambient Laplacian of `f`.
    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.hess(x)?.trace())
    }

    /// Central-difference gradient with an explicit absolute step.
    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let mut g = DVector::zeros(self.dim);
        let mut p = x.to_vec();
        for i in 0..self.dim {
            p[i] = x[i] + h;
            let fp = self.raw_value(&p)?;
            p[i] = x[i] - h;
            let fm = self.raw_value(&p)?;
            p[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }

    /// Central-difference Hessian with an explicit absolute step. The result
    /// is symmetric by construction.
    pub fn fd_hessian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let d = self.dim;
        let f0 = self.raw_value(x)?;
        let mut out = DMatrix::zeros(d, d);
        let mut p = x.to_vec();
        for i in 0..d {
            p[i] = x[i] + h;
            let fp = self.raw_value(&p)?;
            p[i] = x[i] - h;
            let fm = self.raw_value(&p)?;
            p[i] = x[i];
            out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in (i + 1)..d {
                let mut corner = |si: f64, sj: f64| -> Result<f64> {
                    p[i] = x[i] + si * h;
                    p[j] = x[j] + sj * h;
                    let v = self.raw_value(&p);
                    p[i] = x[i];
                    p[j] = x[j];
                    v
                };
                let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?)
                    / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// `Ric_f(v, v) = v . Hess f(x) . v` for a unit vector `v`.
    pub fn bakry_emery_ricci(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let v = unit_vector(v, self.dim)?;
        let h = self.hess(x)?;
        Ok(v.dot(&(&h * &v)))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "ambient dimension must be at least 3 (hypersurface dimension n >= 2)",
        });
    }
    Ok(())
}

fn scale(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0)
}

pub(crate) fn unit_vector(v: &[f64], dim: usize) -> Result<DVector<f64>> {
    if v.len() != dim {
        return Err(Error::ContractViolation(format!(
            "vector has {} components, expected {dim}",
            v.len()
        )));
    }
    let v = DVector::from_column_slice(v);
    if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::ContractViolation(format!(
            "expected a unit vector, |v| = {}",
            v.norm()
        )));
    }
    Ok(v)
}

/// The Gaussian soliton `(R^dim, g_0, e^{-|x|^2/4} dmu)`.
pub fn gaussian_soliton(dim: usize) -> Result<WeightedAmbient> {
    WeightedAmbient::new(dim, Arc::new(GaussianWeight))
}
