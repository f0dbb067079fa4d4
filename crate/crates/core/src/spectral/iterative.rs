//! Shift-invert block subspace iteration with Rayleigh-Ritz projection for
//! the lowest eigenpairs of `K x = λ M x`, `M` positive definite.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{CsrMatrix, EnvelopeCholesky};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct IterationOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 400,
            seed: 0x5eed,
        }
    }
}

pub struct IterativeEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// `sigma` must lie below the spectrum so that `K - sigma M` is positive
/// definite.
pub fn lowest_pairs(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    sigma: f64,
    opts: &IterationOptions,
) -> Result<IterativeEigen> {
    let n = k.dim();
    let p = (2 * count).max(count + 8).min(n);
    let shifted = k.add_scaled(m, -sigma);
    let chol = EnvelopeCholesky::factor(&shifted)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    let mut values = vec![0.0; p];
    for it in 1..=opts.max_iterations {
        let y: Vec<Vec<f64>> = x.iter().map(|xi| chol.solve(&m.mul_vec(xi))).collect();
        let ky: Vec<Vec<f64>> = y.iter().map(|yi| k.mul_vec(yi)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|yi| m.mul_vec(yi)).collect();
        let kh = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &ky[j]));
        let mh = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &my[j]));
        let (ritz, q) = small_generalized(&kh, &mh)?;
        x = (0..p)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let w = q[(r, c)];
                    v.iter_mut().zip(yr).for_each(|(a, b)| *a += w * b);
                }
                v
            })
            .collect();
        values = ritz;
        let worst = (0..count)
            .map(|i| backward_error(k, m, values[i], &x[i]))
            .fold(0.0, f64::max);
        if worst <= opts.tolerance {
            x.truncate(count);
            values.truncate(count);
            return Ok(IterativeEigen {
                values,
                vectors: x,
                iterations: it,
            });
        }
    }
    Err(Error::Solver(format!(
        "subspace iteration did not converge in {} iterations (block {p}, shift {sigma:.3e}, lowest Ritz value {:.6e})",
        opts.max_iterations, values[0]
    )))
}

/// Generalized eigenpairs of a small dense pencil, ascending, with
/// `Qᵀ M Q = I`.
fn small_generalized(kh: &DMatrix<f64>, mh: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let sym = |a: &DMatrix<f64>| (a + a.transpose()) * 0.5;
    let chol = sym(mh)
        .cholesky()
        .ok_or_else(|| Error::Solver("projected mass matrix lost definiteness".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Solver("projected mass factor is singular".into()))?;
    let c = sym(&(&linv * sym(kh) * linv.transpose()));
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<DVector<f64>>>());
    Ok((values, linv.transpose() * u))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|K x - λ M x| / ((|K| + |λ| |M|) |x|)` in the infinity norm.
pub fn backward_error(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, x: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let r = kx
        .iter()
        .zip(&mx)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = (k.norm_inf() + lambda.abs() * m.norm_inf()) * xn;
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn path_graph_eigenvalues() {
        let n = 200;
        let k = path_laplacian(n);
        let m = CsrMatrix::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
        let k = k.add_scaled(&m, -1.0);
        let e = lowest_pairs(&k, &m, 4, -1.01, &IterationOptions::default()).unwrap();
        for (j, v) in e.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos() - 1.0;
            assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
        }
    }
}
