//! Dense generalized symmetric eigensolver: `K x = λ M x` with `M = L Lᵀ`
//! reduced to the standard problem `L⁻¹ K L⁻ᵀ y = λ y`.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

pub struct DenseEigen {
    pub values: Vec<f64>,
    /// Column-major, one mass-normalized vector per requested eigenvalue.
    pub vectors: Vec<Vec<f64>>,
}

fn to_faer(a: &CsrMatrix) -> Mat<f64> {
    let n = a.dim();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[(i, j)] += v;
        }
    }
    m
}

pub fn lowest_pairs(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<DenseEigen> {
    let n = k.dim();
    let mass = to_faer(m);
    let llt = mass.llt(Side::Lower).map_err(|e| {
        let diag = m.diagonal();
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        Error::Solver(format!("mass matrix Cholesky failed ({e:?}); smallest diagonal entry {min:.3e}"))
    })?;
    let l = llt.L();
    let mut c = to_faer(k);
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let mut c = c.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    // symmetrize against round-off before the symmetric solve
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("symmetric eigensolver did not converge ({e:?})")))?;
    let s = evd.S();
    let u = evd.U();
    let count = count.min(n);
    let mut y = Mat::<f64>::zeros(n, count);
    for j in 0..count {
        for i in 0..n {
            y[(i, j)] = u[(i, j)];
        }
    }
    solve_upper_triangular_in_place(l.transpose(), y.as_mut(), Par::Seq);
    let values = (0..count).map(|j| s[j]).collect();
    let vectors = (0..count).map(|j| (0..n).map(|i| y[(i, j)]).collect()).collect();
    Ok(DenseEigen { values, vectors })
}
