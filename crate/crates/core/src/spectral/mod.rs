//! Weighted stability spectrum on triangle meshes and on product shrinkers.
//!
//! Meshes use continuous piecewise-linear elements. The stiffness, mass and
//! potential matrices are integrated against `e^{-f}` with the 3-point
//! triangle rule; the potential is sampled at vertices and interpolated.

pub mod dense;
pub mod iterative;
pub mod separable;
pub mod sparse;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use iterative::{backward_error, IterationOptions};
pub use separable::{
    harmonic_multiplicity, line_spectrum, separable_spectrum, LineSpectrum, ModeCut, SeparableProblem, SphereFactor,
};
pub use sparse::CsrMatrix;

use crate::ambient::WeightedAmbient;
use crate::error::{Error, Result};
use crate::hypersurface::{all_vertex_geometry, espinar_v_from_geometry, TriMesh};
use crate::quadrature::TRIANGLE_RULE;

pub const DENSE_THRESHOLD: usize = 3000;
const SHIFT_MARGIN: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Weighted,
    Unit,
}

#[derive(Clone, Debug)]
pub enum PotentialSpec {
    /// `|A|^2 + Ric_f(nu, nu)` from per-vertex fitted geometry.
    Stability,
    Zero,
    /// One value per vertex.
    Vertex(Vec<f64>),
}

/// Full-size matrices over all vertices together with the constrained set.
#[derive(Clone, Debug)]
pub struct QuadraticFormSystem {
    pub stiffness: CsrMatrix,
    pub potential: CsrMatrix,
    pub mass: CsrMatrix,
    pub dirichlet_dofs: Vec<usize>,
    pub free_dofs: Vec<usize>,
    pub measure: Measure,
    /// Largest vertex value of the potential field.
    pub potential_max: f64,
}

impl QuadraticFormSystem {
    pub fn dof_count(&self) -> usize {
        self.mass.dim()
    }

    pub fn free_count(&self) -> usize {
        self.free_dofs.len()
    }

    /// `cᵀ (stiffness - potential) c` over all vertices.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        self.stiffness.quadratic_form(c) - self.potential.quadratic_form(c)
    }

    pub fn mass_form(&self, c: &[f64]) -> f64 {
        self.mass.quadratic_form(c)
    }

    /// Same matrices with a different constrained set.
    pub fn with_dirichlet(&self, dirichlet: &[bool]) -> Result<Self> {
        if dirichlet.len() != self.dof_count() {
            return Err(Error::Argument(format!(
                "Dirichlet mask has {} entries for {} dofs",
                dirichlet.len(),
                self.dof_count()
            )));
        }
        let (dirichlet_dofs, free_dofs) = split_dofs(dirichlet);
        Ok(Self {
            dirichlet_dofs,
            free_dofs,
            ..self.clone()
        })
    }

    /// Operator and mass restricted to the free dofs.
    pub fn reduced(&self) -> (CsrMatrix, CsrMatrix) {
        let op = self.stiffness.add_scaled(&self.potential, -1.0);
        (op.submatrix(&self.free_dofs), self.mass.submatrix(&self.free_dofs))
    }

    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dof_count()];
        for &d in &self.dirichlet_dofs {
            mask[d] = true;
        }
        mask
    }
}

fn split_dofs(dirichlet: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let (d, f): (Vec<usize>, Vec<usize>) = (0..dirichlet.len()).partition(|&i| dirichlet[i]);
    (d, f)
}

/// Constrains every vertex where `outside` holds.
pub fn mask_where(mesh: &TriMesh, outside: impl Fn(&Vector3<f64>) -> bool) -> Vec<bool> {
    mesh.vertices().iter().map(outside).collect()
}

/// Mesh boundary vertices.
pub fn boundary_mask(mesh: &TriMesh) -> Vec<bool> {
    mesh.boundary_flags().to_vec()
}

struct LocalMatrices {
    face: [usize; 3],
    stiffness: [[f64; 3]; 3],
    potential: [[f64; 3]; 3],
    mass: [[f64; 3]; 3],
}

fn local_matrices(
    mesh: &TriMesh,
    face: usize,
    space: &WeightedAmbient,
    measure: Measure,
    vertex_potential: &[f64],
) -> Result<LocalMatrices> {
    let tri = mesh.faces()[face];
    let p = tri.map(|v| mesh.vertices()[v]);
    let area = mesh.face_area(face);
    let mut weights = [0.0; 3];
    let mut points = [[0.0; 3]; 3];
    for (q, (bary, _)) in TRIANGLE_RULE.iter().enumerate() {
        let x = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
        points[q] = [x.x, x.y, x.z];
        weights[q] = match measure {
            Measure::Weighted => (-space.f(&points[q])?).exp(),
            Measure::Unit => 1.0,
        };
    }
    let mean_weight: f64 = TRIANGLE_RULE.iter().zip(&weights).map(|((_, w), e)| w * e).sum();

    // cotangent element matrix: off-diagonal -cot(opposite angle)/2
    let mut stiffness = [[0.0; 3]; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let (u, v) = (p[i] - p[k], p[j] - p[k]);
        let cot = u.dot(&v) / u.cross(&v).norm();
        let w = 0.5 * cot * mean_weight;
        stiffness[i][j] -= w;
        stiffness[j][i] -= w;
        stiffness[i][i] += w;
        stiffness[j][j] += w;
    }

    let mut potential = [[0.0; 3]; 3];
    let mut mass = [[0.0; 3]; 3];
    for (q, (bary, w)) in TRIANGLE_RULE.iter().enumerate() {
        let pot: f64 = (0..3).map(|a| bary[a] * vertex_potential[tri[a]]).sum();
        for a in 0..3 {
            for b in 0..3 {
                let m = w * area * weights[q] * bary[a] * bary[b];
                mass[a][b] += m;
                potential[a][b] += m * pot;
            }
        }
    }
    Ok(LocalMatrices {
        face: tri,
        stiffness,
        potential,
        mass,
    })
}

fn assemble_with(
    mesh: &TriMesh,
    space: &WeightedAmbient,
    dirichlet: &[bool],
    vertex_potential: Vec<f64>,
    measure: Measure,
) -> Result<QuadraticFormSystem> {
    if space.dim() != 3 {
        return Err(Error::Argument("triangle meshes live in R^3".into()));
    }
    let nv = mesh.vertex_count();
    if dirichlet.len() != nv || vertex_potential.len() != nv {
        return Err(Error::Argument(format!(
            "per-vertex inputs must have {nv} entries (mask {}, potential {})",
            dirichlet.len(),
            vertex_potential.len()
        )));
    }
    let locals: Vec<LocalMatrices> = (0..mesh.face_count())
        .into_par_iter()
        .map(|f| local_matrices(mesh, f, space, measure, &vertex_potential))
        .collect::<Result<_>>()?;
    let mut ts = Vec::with_capacity(9 * locals.len());
    let mut tp = Vec::with_capacity(9 * locals.len());
    let mut tm = Vec::with_capacity(9 * locals.len());
    for l in &locals {
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (l.face[a], l.face[b]);
                ts.push((i, j, l.stiffness[a][b]));
                tp.push((i, j, l.potential[a][b]));
                tm.push((i, j, l.mass[a][b]));
            }
        }
    }
    let mass = CsrMatrix::from_triplets(nv, &tm);
    if let Some(v) = (0..nv).find(|&v| !(mass.get(v, v) > 0.0)) {
        return Err(Error::Assembly(format!("mass matrix not positive definite: vertex {v} has no area")));
    }
    let (dirichlet_dofs, free_dofs) = split_dofs(dirichlet);
    let potential_max = vertex_potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(QuadraticFormSystem {
        stiffness: CsrMatrix::from_triplets(nv, &ts),
        potential: CsrMatrix::from_triplets(nv, &tp),
        mass,
        dirichlet_dofs,
        free_dofs,
        measure,
        potential_max,
    })
}

/// Weighted second-variation form `∫(|∇φ|² − (|A|² + Ric_f(ν,ν))φ²) e^{−f}`
/// and the weighted mass on a triangle mesh.
pub fn assemble(
    mesh: &TriMesh,
    space: &WeightedAmbient,
    dirichlet: &[bool],
    potential: PotentialSpec,
) -> Result<QuadraticFormSystem> {
    let values = match potential {
        PotentialSpec::Zero => vec![0.0; mesh.vertex_count()],
        PotentialSpec::Vertex(v) => v,
        PotentialSpec::Stability => all_vertex_geometry(mesh, space)?
            .iter()
            .map(|g| g.stability_potential(space))
            .collect::<Result<_>>()?,
    };
    assemble_with(mesh, space, dirichlet, values, Measure::Weighted)
}

/// Unweighted form `∫(|∇φ|² + (K/3 − V)φ²) dv`.
pub fn assemble_espinar_operator(
    mesh: &TriMesh,
    space: &WeightedAmbient,
    dirichlet: &[bool],
) -> Result<QuadraticFormSystem> {
    let values = all_vertex_geometry(mesh, space)?
        .iter()
        .map(|g| {
            let k = g
                .gauss_curv
                .ok_or_else(|| Error::Unsupported("Gauss curvature needs n = 2".into()))?;
            Ok(espinar_v_from_geometry(g, space)? - k / 3.0)
        })
        .collect::<Result<_>>()?;
    assemble_with(mesh, space, dirichlet, values, Measure::Unit)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroPolicy {
    pub tol_zero: Option<f64>,
}

impl ZeroPolicy {
    pub fn fixed(tol: f64) -> Self {
        Self { tol_zero: Some(tol) }
    }

    /// `max(1e-6, 1e-3 |λ_min|)` unless overridden.
    pub fn resolve(&self, lambda_min: f64) -> f64 {
        self.tol_zero.unwrap_or_else(|| (1e-3 * lambda_min.abs()).max(1e-6))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub f_index: usize,
    pub tol_zero: f64,
    pub residuals: Vec<f64>,
    pub method: String,
    /// True when the largest computed eigenvalue is not negative, so every
    /// negative eigenvalue was captured.
    pub index_complete: bool,
    /// Full-length (all vertices), mass-normalized; empty for separable
    /// spectra.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumResult {
    pub fn from_values(eigenvalues: Vec<f64>, residuals: Vec<f64>, method: &str, zero: &ZeroPolicy) -> Self {
        let tol_zero = zero.resolve(eigenvalues.first().copied().unwrap_or(0.0));
        let mut r = Self {
            eigenvalues,
            f_index: 0,
            tol_zero,
            residuals,
            method: method.to_string(),
            index_complete: false,
            eigenvectors: Vec::new(),
        };
        r.recount(tol_zero);
        r
    }

    pub fn recount(&mut self, tol_zero: f64) {
        self.tol_zero = tol_zero;
        self.f_index = self.eigenvalues.iter().filter(|&&l| l < -tol_zero).count();
        self.index_complete = self.eigenvalues.last().is_some_and(|&l| l >= -tol_zero);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    pub dense_threshold: usize,
    pub zero: ZeroPolicy,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let it = IterationOptions::default();
        Self {
            dense_threshold: DENSE_THRESHOLD,
            zero: ZeroPolicy::default(),
            tolerance: it.tolerance,
            max_iterations: it.max_iterations,
            seed: it.seed,
        }
    }
}

/// Lowest `count` Dirichlet eigenvalues of `(stiffness − potential) x = λ mass x`.
pub fn solve_spectrum(system: &QuadraticFormSystem, count: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    let free = system.free_count();
    if count == 0 || count > free {
        return Err(Error::Precondition(format!("count {count} must lie in 1..={free}")));
    }
    let (op, mass) = system.reduced();
    let (values, vectors, method) = if free < opts.dense_threshold {
        let e = dense::lowest_pairs(&op, &mass, count)?;
        (e.values, e.vectors, "dense".to_string())
    } else {
        let sigma = -system.potential_max.max(0.0) - SHIFT_MARGIN;
        let it = IterationOptions {
            tolerance: opts.tolerance,
            max_iterations: opts.max_iterations,
            seed: opts.seed,
        };
        let e = iterative::lowest_pairs(&op, &mass, count, sigma, &it)?;
        (e.values, e.vectors, format!("shift-invert({} iterations)", e.iterations))
    };
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, x)| backward_error(&op, &mass, l, x))
        .collect();
    let mut result = SpectrumResult::from_values(values, residuals, &method, &opts.zero);
    result.eigenvectors = vectors
        .into_iter()
        .map(|x| {
            let mut full = vec![0.0; system.dof_count()];
            for (k, &d) in system.free_dofs.iter().enumerate() {
                full[d] = x[k];
            }
            full
        })
        .collect();
    Ok(result)
}

/// Computes enough eigenvalues to see the whole negative part, doubling the
/// request as needed.
pub fn solve_index(
    system: &QuadraticFormSystem,
    initial_count: usize,
    opts: &SolverOptions,
) -> Result<SpectrumResult> {
    let free = system.free_count();
    let mut count = initial_count.clamp(1, free.max(1));
    loop {
        let r = solve_spectrum(system, count, opts)?;
        if r.index_complete || count == free {
            return Ok(r);
        }
        count = (2 * count).min(free);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExhaustionReport {
    pub indices: Vec<usize>,
    pub lowest: Vec<f64>,
    pub free_dofs: Vec<usize>,
    pub tol_zero: f64,
    pub monotone: bool,
    /// Index on the largest domain.
    pub estimate: usize,
    pub spectra: Vec<SpectrumResult>,
}

/// f-index over nested Dirichlet domains: each mask must constrain a subset
/// of the previous one. A common zero tolerance is applied to all domains.
pub fn f_index_exhaustion(
    system: &QuadraticFormSystem,
    masks: &[Vec<bool>],
    count: usize,
    opts: &SolverOptions,
) -> Result<ExhaustionReport> {
    if masks.is_empty() {
        return Err(Error::Argument("empty domain family".into()));
    }
    for (k, pair) in masks.windows(2).enumerate() {
        if pair[0].len() != pair[1].len() {
            return Err(Error::Argument("domain masks differ in length".into()));
        }
        if pair[1].iter().zip(&pair[0]).any(|(&next, &prev)| next && !prev) {
            return Err(Error::Argument(format!("domain {} does not contain domain {k}", k + 1)));
        }
    }
    let mut spectra = masks
        .iter()
        .map(|m| solve_index(&system.with_dirichlet(m)?, count, opts))
        .collect::<Result<Vec<_>>>()?;
    let lambda_min = spectra
        .iter()
        .map(|s| s.eigenvalues[0].abs())
        .fold(0.0, f64::max);
    let tol_zero = opts.zero.resolve(lambda_min);
    for s in &mut spectra {
        s.recount(tol_zero);
    }
    let indices: Vec<usize> = spectra.iter().map(|s| s.f_index).collect();
    let monotone = indices.windows(2).all(|w| w[0] <= w[1]);
    Ok(ExhaustionReport {
        lowest: spectra.iter().map(|s| s.eigenvalues[0]).collect(),
        free_dofs: masks.iter().map(|m| m.iter().filter(|&&d| !d).count()).collect(),
        estimate: *indices.last().unwrap(),
        indices,
        tol_zero,
        monotone,
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::mesh::{disk, icosphere};

    fn one_triangle() -> TriMesh {
        TriMesh::new(
            vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.5, 1.5, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_matches_cotangent_matrix() {
        let m = one_triangle();
        let s = WeightedAmbient::zero(3).unwrap();
        let sys = assemble(&m, &s, &[false; 3], PotentialSpec::Zero).unwrap();
        // gradient formula: K_ij = area * grad φ_i · grad φ_j
        let p = m.vertices();
        let area = m.face_area(0);
        let n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
        let grad = |i: usize| n.cross(&(p[(i + 2) % 3] - p[(i + 1) % 3])) / (2.0 * area);
        for i in 0..3 {
            for j in 0..3 {
                let exact = area * grad(i).dot(&grad(j));
                assert!((sys.stiffness.get(i, j) - exact).abs() < 1e-14);
            }
        }
        assert!((sys.mass.get(0, 0) - area / 6.0).abs() < 1e-15);
        assert!((sys.mass.get(0, 1) - area / 12.0).abs() < 1e-15);
        assert_eq!(sys.potential.nnz(), 9);
        assert!(sys.potential.quadratic_form(&[1.0; 3]).abs() < 1e-15);
    }

    #[test]
    fn closed_mesh_laplacian_kernel() {
        let m = icosphere(1.0, 2);
        let s = WeightedAmbient::zero(3).unwrap();
        let sys = assemble(&m, &s, &vec![false; m.vertex_count()], PotentialSpec::Zero).unwrap();
        let r = solve_spectrum(&sys, 4, &SolverOptions::default()).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-10);
        assert_eq!(r.f_index, 0);
        // degree-1 harmonics: 2 / r^2
        for l in &r.eigenvalues[1..4] {
            assert!((l - 2.0).abs() < 0.05, "{l}");
        }
    }

    #[test]
    fn non_nested_family_is_rejected() {
        let m = disk(2.0, 4);
        let s = WeightedAmbient::zero(3).unwrap();
        let sys = assemble(&m, &s, &boundary_mask(&m), PotentialSpec::Zero).unwrap();
        let small = mask_where(&m, |x| x.norm() > 1.0 - 1e-9);
        let large = boundary_mask(&m);
        let err = f_index_exhaustion(&sys, &[large, small], 2, &SolverOptions::default());
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn dense_and_iterative_agree() {
        let m = icosphere(2.0, 2);
        let s = crate::ambient::gaussian_soliton(3).unwrap();
        let sys = assemble(&m, &s, &vec![false; m.vertex_count()], PotentialSpec::Stability).unwrap();
        let dense = solve_spectrum(&sys, 6, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            dense_threshold: 0,
            ..SolverOptions::default()
        };
        let iter = solve_spectrum(&sys, 6, &opts).unwrap();
        assert!(iter.method.starts_with("shift-invert"));
        for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert_eq!(dense.f_index, 4);
    }

    #[test]
    fn tolerance_default() {
        assert_eq!(ZeroPolicy::default().resolve(-1.0), 1e-3);
        assert_eq!(ZeroPolicy::default().resolve(-1e-5), 1e-6);
        assert_eq!(ZeroPolicy::fixed(0.1).resolve(-1.0), 0.1);
    }
}
