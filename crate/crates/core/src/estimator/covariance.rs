//! Cluster-robust sandwich covariance.

use nalgebra::DMatrix;

use super::FitResult;
use crate::design::DesignProblem;
use crate::error::{Error, Result};

/// `c · (XᵀX)⁻¹ (Σ_g X_gᵀ e_g e_gᵀ X_g) (XᵀX)⁻¹` over the retained columns, with
/// `c = G/(G−1) · (n−1)/(n−p)`.
pub fn cluster_robust_cov(problem: &DesignProblem, fit: &FitResult) -> Result<DMatrix<f64>> {
    let mut ids: Vec<usize> = problem.clusters.clone();
    ids.sort_unstable();
    ids.dedup();
    let g = ids.len();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    let n = problem.n_rows();
    let k = fit.retained.len();
    if n <= k {
        return Err(Error::Underdetermined { rows: n, cols: k });
    }
    let dense: Vec<usize> = problem
        .clusters
        .iter()
        .map(|c| ids.binary_search(c).expect("cluster id present"))
        .collect();

    // scores[(cluster, r)] = Σ_{i in cluster} x_ir e_i
    let mut scores = DMatrix::<f64>::zeros(g, k);
    for (r, &col) in fit.retained.iter().enumerate() {
        let column = problem.x.column(col);
        for i in 0..n {
            let v = column[i] * fit.residuals[i];
            if v != 0.0 {
                scores[(dense[i], r)] += v;
            }
        }
    }
    let meat = scores.transpose() * &scores;
    let bread = &fit.xtx_inv;
    let factor = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
    let mut v = bread * meat * bread * factor;
    // symmetrize away rounding
    for a in 0..k {
        for b in a + 1..k {
            let m = 0.5 * (v[(a, b)] + v[(b, a)]);
            v[(a, b)] = m;
            v[(b, a)] = m;
        }
    }
    Ok(v)
}
