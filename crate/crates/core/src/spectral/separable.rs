//! Spectra of product shrinkers `S^k(r) × R^m` with constant potential.
//!
//! The line factor is the drift Laplacian `-u'' + (z/2) u'` for the weight
//! `e^{-z²/4}`, computed by Dirichlet truncation on `|z| ≤ L`: a symmetric
//! three-point scheme, Richardson extrapolation in the grid spacing, and
//! doubling of `L` until the levels stop moving.

use serde::{Deserialize, Serialize};

use super::{SpectrumResult, ZeroPolicy};
use crate::error::{Error, Result};

pub const LINE_SHIFT_TOLERANCE: f64 = 1e-8;
const GRID_TOLERANCE: f64 = 1e-9;
const INITIAL_HALF_LENGTH: f64 = 4.0;
const MAX_HALF_LENGTH: f64 = 64.0;
const INITIAL_SPACING: f64 = 1.0 / 8.0;
const MIN_SPACING: f64 = 1.0 / 256.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereFactor {
    pub dim: usize,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCut {
    /// Largest harmonic degree on the sphere factor (circle mode `|m|` for `k = 1`).
    pub max_degree: usize,
    /// Largest level kept on each line factor.
    pub max_level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableProblem {
    pub sphere: Option<SphereFactor>,
    pub line_dims: usize,
    pub potential_const: f64,
    pub mode_cut: ModeCut,
}

#[derive(Clone, Debug, Serialize)]
pub struct LineSpectrum {
    pub levels: Vec<f64>,
    pub half_length: f64,
    pub spacing: f64,
    /// Largest level change at the last doubling of the half length.
    pub shift: f64,
}

/// Number of linearly independent degree-`l` spherical harmonics on `S^k`.
pub fn harmonic_multiplicity(k: usize, l: usize) -> usize {
    let binom = |n: usize, r: usize| -> usize {
        if r > n {
            return 0;
        }
        (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    };
    if l < 2 {
        binom(l + k, k)
    } else {
        binom(l + k, k) - binom(l + k - 2, k)
    }
}

/// Lowest `count` eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` by Sturm bisection.
fn tridiagonal_lowest(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let below = |x: f64| -> usize {
        let mut q = diag[0] - x;
        let mut c = usize::from(q < 0.0);
        for i in 1..n {
            if q == 0.0 {
                q = f64::EPSILON * (off[i - 1].abs() + f64::MIN_POSITIVE);
            }
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
            c += usize::from(q < 0.0);
        }
        c
    };
    (0..count.min(n))
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if below(mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Lowest `count` Dirichlet levels of the Gaussian-line drift Laplacian on
/// `[-half_length, half_length]` at grid spacing `h`.
fn line_levels_at(half_length: f64, h: f64, count: usize) -> Vec<f64> {
    let intervals = (2.0 * half_length / h).round() as usize;
    let h = 2.0 * half_length / intervals as f64;
    let h2 = h * h;
    // interior nodes z_i = -L + i h, i = 1..intervals-1, symmetrized by the
    // square root of the nodal weight
    let diag: Vec<f64> = (1..intervals)
        .map(|i| {
            let z = -half_length + i as f64 * h;
            2.0 * (-h2 / 16.0).exp() * (z * h / 4.0).cosh() / h2
        })
        .collect();
    let off = vec![-(h2 / 16.0).exp() / h2; diag.len().saturating_sub(1)];
    tridiagonal_lowest(&diag, &off, count)
}

/// Extrapolation from spacings `h, h/2, h/4`, eliminating the `h²` and `h⁴`
/// error terms.
fn richardson(half_length: f64, h: f64, count: usize) -> Vec<f64> {
    let a = line_levels_at(half_length, h, count);
    let b = line_levels_at(half_length, h / 2.0, count);
    let c = line_levels_at(half_length, h / 4.0, count);
    (0..a.len())
        .map(|i| {
            let r1 = (4.0 * b[i] - a[i]) / 3.0;
            let r2 = (4.0 * c[i] - b[i]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn grid_converged(half_length: f64, count: usize) -> Result<(Vec<f64>, f64)> {
    let mut h = INITIAL_SPACING;
    let mut prev = richardson(half_length, h, count);
    loop {
        h /= 2.0;
        if h < MIN_SPACING {
            return Err(Error::Solver(format!(
                "line levels did not settle under grid refinement at half length {half_length}"
            )));
        }
        let cur = richardson(half_length, h, count);
        let change = max_change(&prev, &cur);
        prev = cur;
        if change < GRID_TOLERANCE {
            return Ok((prev, h));
        }
    }
}

pub fn line_spectrum(count: usize) -> Result<LineSpectrum> {
    let mut half_length = INITIAL_HALF_LENGTH;
    let (mut prev, _) = grid_converged(half_length, count)?;
    loop {
        half_length *= 2.0;
        if half_length > MAX_HALF_LENGTH {
            return Err(Error::Truncation(format!(
                "line levels still moving at half length {MAX_HALF_LENGTH}"
            )));
        }
        let (cur, h) = grid_converged(half_length, count)?;
        let shift = max_change(&prev, &cur);
        if shift < LINE_SHIFT_TOLERANCE {
            return Ok(LineSpectrum {
                levels: cur,
                half_length,
                spacing: h,
                shift,
            });
        }
        prev = cur;
    }
}

fn sphere_level(f: &SphereFactor, l: usize) -> f64 {
    (l * (l + f.dim - 1)) as f64 / (f.radius * f.radius)
}

pub fn separable_spectrum(problem: &SeparableProblem, count: usize, zero: &ZeroPolicy) -> Result<SpectrumResult> {
    if count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    if let Some(f) = &problem.sphere {
        if f.dim == 0 || !(f.radius > 0.0) {
            return Err(Error::Argument(format!("invalid sphere factor {f:?}")));
        }
    }
    if problem.sphere.is_none() && problem.line_dims == 0 {
        return Err(Error::Argument("product with no factors".into()));
    }
    let cut = problem.mode_cut;
    let max_degree = if problem.sphere.is_some() { cut.max_degree } else { 0 };
    let max_level = if problem.line_dims > 0 { cut.max_level } else { 0 };

    let line = if problem.line_dims > 0 {
        Some(line_spectrum(max_level + 2)?)
    } else {
        None
    };
    let mu = |j: usize| line.as_ref().map_or(0.0, |s| s.levels[j]);

    // all multi-indices of line levels, each at most max_level
    let mut line_sums = vec![0.0];
    for _ in 0..problem.line_dims {
        line_sums = line_sums
            .iter()
            .flat_map(|s| (0..=max_level).map(move |j| (s, j)))
            .map(|(s, j)| s + mu(j))
            .collect();
    }
    let mut values = Vec::new();
    for l in 0..=max_degree {
        let (base, mult) = match &problem.sphere {
            Some(f) => (sphere_level(f, l), harmonic_multiplicity(f.dim, l)),
            None => (0.0, 1),
        };
        for s in &line_sums {
            for _ in 0..mult {
                values.push(base + s - problem.potential_const);
            }
        }
    }
    values.sort_by(f64::total_cmp);

    let ground_lines = problem.line_dims as f64 * mu(0);
    let mut floor = f64::INFINITY;
    if let Some(f) = &problem.sphere {
        floor = floor.min(sphere_level(f, max_degree + 1) + ground_lines);
    }
    if problem.line_dims > 0 {
        floor = floor.min(mu(max_level + 1) + (problem.line_dims - 1) as f64 * mu(0));
    }
    floor -= problem.potential_const;
    if values.len() < count || values[count - 1] >= floor {
        return Err(Error::Truncation(format!(
            "mode cut {cut:?} too small for {count} eigenvalues (omitted modes start at {floor:.6})"
        )));
    }
    values.truncate(count);
    let residual = line.as_ref().map_or(0.0, |s| s.shift);
    let residuals = vec![residual; values.len()];
    Ok(SpectrumResult::from_values(values, residuals, "separable", zero))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicities() {
        assert_eq!(harmonic_multiplicity(1, 0), 1);
        assert_eq!(harmonic_multiplicity(1, 3), 2);
        assert_eq!(harmonic_multiplicity(2, 2), 5);
        assert_eq!(harmonic_multiplicity(3, 1), 4);
        assert_eq!(harmonic_multiplicity(3, 2), 9);
    }

    #[test]
    fn tridiagonal_bisection() {
        // path graph Laplacian
        let n = 50;
        let e = tridiagonal_lowest(&vec![2.0; n], &vec![-1.0; n - 1], 3);
        for (j, v) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn line_levels_are_half_integers() {
        let s = line_spectrum(6).unwrap();
        for (k, mu) in s.levels.iter().enumerate() {
            assert!((mu - k as f64 / 2.0).abs() < 1e-7, "level {k}: {mu}");
        }
    }
}
