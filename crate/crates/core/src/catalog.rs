//! Closed-form surfaces: hyperplanes, round spheres `S^n(√(2n))`, cylinders
//! `S^k(√(2k)) × R^{n−k}`, and the torus of revolution as a non-shrinker
//! control.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersurface::mesh::{cylinder, disk, icosphere, torus};
use crate::hypersurface::{cofactor_normal, Patch, PatchMap, Surface, TriMesh};
use crate::jet::Jet;
use crate::spectral::{ModeCut, SeparableProblem, SphereFactor};

pub const DEFAULT_PLANE_TRUNCATION: f64 = 8.0;
pub const DEFAULT_CYLINDER_TRUNCATION: f64 = 6.0;
pub const DEFAULT_TORUS_RADII: (f64, f64) = (2.0, 1.0);
pub const MAX_SUBDIVISION: usize = 7;
const LOW_SPECTRUM_LEN: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogKind {
    Plane,
    Sphere,
    Cylinder,
    Torus,
}

impl FromStr for CatalogKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(Self::Plane),
            "sphere" => Ok(Self::Sphere),
            "cylinder" => Ok(Self::Cylinder),
            "torus" => Ok(Self::Torus),
            other => Err(Error::Argument(format!(
                "unknown catalog surface `{other}` (expected plane, sphere, cylinder or torus)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    pub n: usize,
    /// Sphere-factor dimension of a cylinder.
    pub k: Option<usize>,
    /// Torus `(major, minor)`.
    pub radii: Option<(f64, f64)>,
    /// Half-width of the plane box or disk, half-height of a cylinder.
    pub truncation: Option<f64>,
}

impl CatalogParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            k: None,
            radii: None,
            truncation: None,
        }
    }
}

/// Values that are constant over the surface are `Some`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactGeometry {
    pub mean_curv: Option<f64>,
    pub shape_sq: Option<f64>,
    pub f_mean_curv: Option<f64>,
    /// Range of `|x|²/4` over the (truncated) surface.
    pub f_range: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: CatalogKind,
    pub params: CatalogParams,
    pub patch: Patch,
    pub separable: Option<SeparableProblem>,
    pub exact_geometry: ExactGeometry,
    pub exact_index: Option<usize>,
    pub exact_low_spectrum: Option<Vec<f64>>,
    pub truncation: Option<f64>,
    pub is_shrinker: bool,
}

impl CatalogEntry {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn surface(&self) -> Surface {
        Surface::Patch(self.patch.clone())
    }

    /// Triangle mesh for `n = 2`; resolution doubles with each subdivision
    /// level.
    pub fn mesh(&self, subdivision: usize) -> Result<TriMesh> {
        if self.n() != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.n(),
                reason: "triangle meshes exist only for surfaces",
            });
        }
        if subdivision > MAX_SUBDIVISION {
            return Err(Error::Argument(format!("subdivision {subdivision} exceeds {MAX_SUBDIVISION}")));
        }
        let scale = (1usize << subdivision) as f64 / 4.0;
        let count = |c: f64, min: usize| ((c * scale).round() as usize).max(min);
        Ok(match self.kind {
            CatalogKind::Sphere => icosphere(2.0, subdivision),
            CatalogKind::Cylinder if self.params.k == Some(2) => icosphere(2.0, subdivision),
            CatalogKind::Plane => {
                let t = self.truncation.unwrap_or(DEFAULT_PLANE_TRUNCATION);
                disk(t, count(t, 1))
            }
            CatalogKind::Cylinder => {
                let t = self.truncation.unwrap_or(DEFAULT_CYLINDER_TRUNCATION);
                cylinder(2f64.sqrt(), t, count(10.0, 3), count(2.0 * t, 1))
            }
            CatalogKind::Torus => {
                let (major, minor) = self.params.radii.unwrap_or(DEFAULT_TORUS_RADII);
                torus(major, minor, count(12.0, 3), count(6.0, 3))
            }
        })
    }

    /// Guard for entries outside the plane, sphere and cylinder family:
    /// such shrinkers must have index at least `n + 3`. Returns whether the
    /// guard applies.
    pub fn check_index_floor(&self, f_index: usize) -> Result<bool> {
        let applies = self.is_shrinker && self.kind == CatalogKind::Torus;
        if applies && f_index < self.n() + 3 {
            return Err(Error::ContractViolation(format!(
                "{} reports f-index {f_index} below the floor {}",
                self.name,
                self.n() + 3
            )));
        }
        Ok(applies)
    }
}

/// Coordinates of `S^k(r)` in `R^{k+1}` from `k − 1` polar angles in
/// `(0, π)` followed by one azimuth in `(0, 2π)`.
fn sphere_coords(r: f64, angles: &[Jet]) -> Vec<Jet> {
    let k = angles.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut prefix = Jet::constant(r, angles[0].dim());
    for a in &angles[..k - 1] {
        out.push(&prefix * &a.cos());
        prefix = &prefix * &a.sin();
    }
    let phi = &angles[k - 1];
    out.push(&prefix * &phi.cos());
    out.push(&prefix * &phi.sin());
    out
}

fn sphere_bounds(k: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, PI); k - 1];
    b.push((0.0, 2.0 * PI));
    b
}

/// Flips the patch when its normal at `u` points against `outward`.
fn orient(patch: Patch, u: &[f64], outward: impl Fn(&DVector<f64>) -> DVector<f64>) -> Patch {
    let p = patch.eval(u);
    let nu = cofactor_normal(&p.jacobian);
    if nu.dot(&outward(&p.position)) < 0.0 {
        patch.flipped()
    } else {
        patch
    }
}

fn midpoint(bounds: &[(f64, f64)]) -> Vec<f64> {
    // off the exact middle to stay clear of symmetric degeneracies
    bounds.iter().map(|(a, b)| a + 0.37 * (b - a)).collect()
}

fn product_spectrum(k: usize, lines: usize, potential: f64) -> Vec<f64> {
    let max_degree = 8usize;
    let max_level = if lines > 3 { 4 } else { 8 };
    let mut sums = vec![0.0f64];
    for _ in 0..lines {
        sums = sums
            .iter()
            .flat_map(|s| (0..=max_level).map(move |j| s + j as f64 / 2.0))
            .collect();
    }
    let mut out = Vec::new();
    let degrees = if k == 0 { 0 } else { max_degree };
    for l in 0..=degrees {
        let (value, mult) = if k == 0 {
            (0.0, 1)
        } else {
            ((l * (l + k - 1)) as f64 / (2 * k) as f64, harmonic_dimension(k, l))
        };
        for s in &sums {
            out.extend(std::iter::repeat(value + s - potential).take(mult));
        }
    }
    out.sort_by(f64::total_cmp);
    out.truncate(LOW_SPECTRUM_LEN);
    out
}

/// Dimension of degree-`l` harmonic polynomials in `k + 1` variables,
/// `(2l + k − 1)(l + k − 2)! / (l! (k − 1)!)`.
fn harmonic_dimension(k: usize, l: usize) -> usize {
    if l == 0 {
        return 1;
    }
    // C(l + k − 2, k − 1) = l (l + k − 2)! / (l! (k − 1)!)
    let mut binom = 1.0f64;
    for i in 1..k {
        binom *= (l + i - 1) as f64 / i as f64;
    }
    ((2 * l + k - 1) as f64 * binom / l as f64).round() as usize
}

/// `k(k + n − 1)/(2n) − 1` with harmonic multiplicities, ascending.
pub fn sphere_spectrum_oracle(n: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut degree = 0;
    while out.len() < count {
        let value = (degree * (degree + n - 1)) as f64 / (2 * n) as f64 - 1.0;
        for _ in 0..harmonic_dimension(n, degree) {
            if out.len() < count {
                out.push(value);
            }
        }
        degree += 1;
    }
    out
}

pub fn make_entry(name: &str, params: &CatalogParams) -> Result<CatalogEntry> {
    let kind: CatalogKind = name.parse()?;
    let n = params.n;
    if n < 2 {
        return Err(Error::Argument(format!("dimension n = {n} must be at least 2")));
    }
    if let Some(t) = params.truncation {
        if !(t > 0.0) {
            return Err(Error::Argument(format!("truncation {t} must be positive")));
        }
    }
    match kind {
        CatalogKind::Plane => plane(params),
        CatalogKind::Sphere => sphere(params),
        CatalogKind::Cylinder => {
            let k = params
                .k
                .ok_or_else(|| Error::Argument("cylinder needs the sphere-factor dimension k".into()))?;
            if k < 1 || k > n {
                return Err(Error::Argument(format!("cylinder factor k = {k} must lie in [1, {n}]")));
            }
            cylinder_entry(params, k)
        }
        CatalogKind::Torus => torus_entry(params),
    }
}

fn plane(params: &CatalogParams) -> Result<CatalogEntry> {
    let n = params.n;
    let t = params.truncation.unwrap_or(DEFAULT_PLANE_TRUNCATION);
    let map: PatchMap = Arc::new(move |u: &[Jet]| {
        let mut x: Vec<Jet> = u.to_vec();
        x.push(Jet::constant(0.0, u[0].dim()));
        x
    });
    let patch = Patch::new("plane", n, n + 1, vec![(-t, t); n], map)?;
    Ok(CatalogEntry {
        name: "plane".into(),
        kind: CatalogKind::Plane,
        params: params.clone(),
        patch,
        separable: Some(SeparableProblem {
            sphere: None,
            line_dims: n,
            potential_const: 0.5,
            mode_cut: ModeCut {
                max_degree: 0,
                max_level: 6,
            },
        }),
        exact_geometry: ExactGeometry {
            mean_curv: Some(0.0),
            shape_sq: Some(0.0),
            f_mean_curv: Some(0.0),
            f_range: (0.0, n as f64 * t * t / 4.0),
        },
        exact_index: Some(1),
        exact_low_spectrum: Some(product_spectrum(0, n, 0.5)),
        truncation: Some(t),
        is_shrinker: true,
    })
}

fn sphere(params: &CatalogParams) -> Result<CatalogEntry> {
    let n = params.n;
    let r = (2.0 * n as f64).sqrt();
    let map: PatchMap = Arc::new(move |u: &[Jet]| sphere_coords(r, u));
    let bounds = sphere_bounds(n);
    let u0 = midpoint(&bounds);
    let patch = orient(Patch::new("sphere", n, n + 1, bounds, map)?.closed(0), &u0, |x| x.clone());
    Ok(CatalogEntry {
        name: "sphere".into(),
        kind: CatalogKind::Sphere,
        params: params.clone(),
        patch,
        separable: Some(SeparableProblem {
            sphere: Some(SphereFactor { dim: n, radius: r }),
            line_dims: 0,
            potential_const: 1.0,
            mode_cut: ModeCut {
                max_degree: 6,
                max_level: 0,
            },
        }),
        exact_geometry: ExactGeometry {
            mean_curv: Some(n as f64 / r),
            shape_sq: Some(0.5),
            f_mean_curv: Some(0.0),
            f_range: (n as f64 / 2.0, n as f64 / 2.0),
        },
        exact_index: Some(n + 2),
        exact_low_spectrum: Some(sphere_spectrum_oracle(n, LOW_SPECTRUM_LEN)),
        truncation: None,
        is_shrinker: true,
    })
}

fn cylinder_entry(params: &CatalogParams, k: usize) -> Result<CatalogEntry> {
    let n = params.n;
    if k == n {
        let mut e = sphere(params)?;
        e.kind = CatalogKind::Cylinder;
        e.name = "cylinder".into();
        return Ok(e);
    }
    let t = params.truncation.unwrap_or(DEFAULT_CYLINDER_TRUNCATION);
    let r = (2.0 * k as f64).sqrt();
    let map: PatchMap = Arc::new(move |u: &[Jet]| {
        let mut x = sphere_coords(r, &u[..k]);
        x.extend(u[k..].iter().cloned());
        x
    });
    let mut bounds = sphere_bounds(k);
    bounds.extend(std::iter::repeat((-t, t)).take(n - k));
    let mut faces = vec![[false, false]; k];
    faces.extend(std::iter::repeat([true, true]).take(n - k));
    let u0 = midpoint(&bounds);
    let patch = Patch::new("cylinder", n, n + 1, bounds, map)?.with_boundary_faces(faces);
    let patch = orient(patch, &u0, move |x| {
        let mut radial = x.clone();
        radial.rows_mut(k + 1, n - k).fill(0.0);
        radial
    });
    Ok(CatalogEntry {
        name: "cylinder".into(),
        kind: CatalogKind::Cylinder,
        params: params.clone(),
        patch,
        separable: Some(SeparableProblem {
            sphere: Some(SphereFactor { dim: k, radius: r }),
            line_dims: n - k,
            potential_const: 1.0,
            mode_cut: ModeCut {
                max_degree: 6,
                max_level: 6,
            },
        }),
        exact_geometry: ExactGeometry {
            mean_curv: Some(k as f64 / r),
            shape_sq: Some(0.5),
            f_mean_curv: Some(0.0),
            f_range: (k as f64 / 2.0, k as f64 / 2.0 + (n - k) as f64 * t * t / 4.0),
        },
        exact_index: Some(n + 2),
        exact_low_spectrum: Some(product_spectrum(k, n - k, 1.0)),
        truncation: Some(t),
        is_shrinker: true,
    })
}

fn torus_entry(params: &CatalogParams) -> Result<CatalogEntry> {
    if params.n != 2 {
        return Err(Error::UnsupportedDimension {
            dim: params.n,
            reason: "the torus of revolution is a surface in R^3",
        });
    }
    let (major, minor) = params.radii.unwrap_or(DEFAULT_TORUS_RADII);
    if !(minor > 0.0 && major > minor) {
        return Err(Error::Argument(format!(
            "torus radii ({major}, {minor}) must satisfy major > minor > 0"
        )));
    }
    let map: PatchMap = Arc::new(move |u: &[Jet]| {
        let ring = (&u[1].cos() * minor).offset(major);
        vec![&ring * &u[0].cos(), &ring * &u[0].sin(), &u[1].sin() * minor]
    });
    let bounds = vec![(0.0, 2.0 * PI), (0.0, 2.0 * PI)];
    let u0 = midpoint(&bounds);
    let patch = Patch::new("torus", 2, 3, bounds, map)?.closed(1);
    let patch = orient(patch, &u0, move |x| {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        DVector::from_vec(vec![x[0] * (1.0 - major / rho), x[1] * (1.0 - major / rho), x[2]])
    });
    Ok(CatalogEntry {
        name: "torus".into(),
        kind: CatalogKind::Torus,
        params: CatalogParams {
            radii: Some((major, minor)),
            ..params.clone()
        },
        patch,
        separable: None,
        exact_geometry: ExactGeometry {
            mean_curv: None,
            shape_sq: None,
            f_mean_curv: None,
            f_range: ((major - minor).powi(2) / 4.0, (major + minor).powi(2) / 4.0),
        },
        exact_index: None,
        exact_low_spectrum: None,
        truncation: None,
        is_shrinker: false,
    })
}
