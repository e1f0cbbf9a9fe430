//! Normal-equations solver kept deliberately separate from the QR path.
//!
//! Forms `XᵀX` and `Xᵀy` with plain loops and solves by Gaussian elimination
//! with partial pivoting. Squares the condition number, so it is only used to
//! cross-check the factorization on well-conditioned, full-rank problems.

use crate::design::DesignProblem;
use crate::error::{Error, Result};

#[allow(clippy::needless_range_loop)]
pub fn normal_equations_solve(problem: &DesignProblem) -> Result<Vec<f64>> {
    let n = problem.n_rows();
    let p = problem.n_cols();
    let x = &problem.x;

    let mut gram = vec![vec![0.0f64; p + 1]; p];
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for i in 0..n {
                s += x[(i, a)] * x[(i, b)];
            }
            gram[a][b] = s;
            gram[b][a] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += x[(i, a)] * problem.y[i];
        }
        gram[a][p] = s;
    }

    let scale = (0..p).map(|i| gram[i][i].abs()).fold(0.0f64, f64::max);
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&r1, &r2| gram[r1][col].abs().total_cmp(&gram[r2][col].abs()))
            .expect("non-empty range");
        if gram[pivot][col].abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::Singular);
        }
        gram.swap(col, pivot);
        for row in col + 1..p {
            let factor = gram[row][col] / gram[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=p {
                gram[row][k] -= factor * gram[col][k];
            }
        }
    }

    let mut b = vec![0.0; p];
    for row in (0..p).rev() {
        let mut s = gram[row][p];
        for k in row + 1..p {
            s -= gram[row][k] * b[k];
        }
        b[row] = s / gram[row][row];
    }
    Ok(b)
}
