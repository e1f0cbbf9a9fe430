//! Least-squares fitting, rank handling, cluster-robust inference and the
//! event-study coefficient series.

mod covariance;
mod oracle;
mod qr;

use nalgebra::DMatrix;
use serde::Serialize;

pub use covariance::cluster_robust_cov;
pub use oracle::normal_equations_solve;

use crate::design::{build_design, ColumnLabel, DesignProblem, EstimationSpec};
use crate::error::{Error, Result};
use crate::panel::Panel;

/// Columns whose residual norm is below this fraction of the leading pivot are dropped.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Normal critical value for the 95% bands.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Indices of the retained design columns, ascending.
    pub retained: Vec<usize>,
    /// Coefficient per retained column.
    pub coefficients: Vec<f64>,
    /// Indices of columns removed for collinearity.
    pub dropped: Vec<usize>,
    pub dropped_columns: Vec<ColumnLabel>,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub p_retained: usize,
    pub rss: f64,
    /// `(XᵀX)⁻¹` over the retained columns.
    pub xtx_inv: DMatrix<f64>,
}

impl FitResult {
    /// Coefficient of a design column, `None` if it was dropped.
    pub fn coefficient_of(&self, column: usize) -> Option<f64> {
        self.retained
            .binary_search(&column)
            .ok()
            .map(|r| self.coefficients[r])
    }
}

pub fn fit_least_squares(problem: &DesignProblem) -> Result<FitResult> {
    let n = problem.n_rows();
    let p = problem.n_cols();
    if n == 0 || p == 0 {
        return Err(Error::Underdetermined { rows: n, cols: p });
    }
    for (c, column) in problem.x.column_iter().enumerate() {
        if let Some(row) = column.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: c });
        }
    }
    if let Some(row) = problem.y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, col: p });
    }

    let qr = qr::factor(&problem.x, &problem.y, RANK_TOLERANCE);
    let k = qr.retained.len();
    if n < k {
        return Err(Error::Underdetermined { rows: n, cols: k });
    }
    let coefficients = qr::back_substitute(&qr.r, &qr.qty);

    let mut fitted = vec![0.0; n];
    for (&c, &b) in qr.retained.iter().zip(&coefficients) {
        for (f, x) in fitted.iter_mut().zip(problem.x.column(c).iter()) {
            *f += x * b;
        }
    }
    let residuals: Vec<f64> = problem.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss = residuals.iter().map(|e| e * e).sum();

    Ok(FitResult {
        dropped_columns: qr.dropped.iter().map(|&c| problem.column_labels[c]).collect(),
        xtx_inv: qr::gram_inverse(&qr.r),
        retained: qr.retained,
        coefficients,
        dropped: qr.dropped,
        residuals,
        n,
        p_retained: k,
        rss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTimeEstimate {
    pub j: i64,
    /// NaN when the column was dropped.
    pub alpha: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Concurrent-policy coefficient, multi-event variants only.
    pub beta: Option<f64>,
    pub beta_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub p: usize,
    pub p_retained: usize,
    pub clusters: usize,
    pub dropped_columns: Vec<String>,
    pub rss: f64,
}

#[derive(Debug, Clone)]
pub struct EventStudyResult {
    pub spec: EstimationSpec,
    /// One entry per event time in the window, ascending, reference included.
    pub estimates: Vec<EventTimeEstimate>,
    pub diagnostics: Diagnostics,
    /// Labels of the retained columns, matching `coefficients` and `covariance`.
    pub labels: Vec<ColumnLabel>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

impl EventStudyResult {
    pub fn at(&self, j: i64) -> Option<&EventTimeEstimate> {
        self.estimates.iter().find(|e| e.j == j)
    }

    pub fn coefficient(&self, label: &ColumnLabel) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.coefficients[i])
    }

    /// Estimate and standard error of `Σ w·coef`. `None` if any term was dropped.
    pub fn linear_combination(&self, weights: &[(ColumnLabel, f64)]) -> Option<(f64, f64)> {
        let idx: Option<Vec<(usize, f64)>> = weights
            .iter()
            .map(|(l, w)| self.labels.iter().position(|x| x == l).map(|i| (i, *w)))
            .collect();
        let idx = idx?;
        let est = idx.iter().map(|&(i, w)| w * self.coefficients[i]).sum();
        let var: f64 = idx
            .iter()
            .flat_map(|&(a, wa)| idx.iter().map(move |&(b, wb)| (a, wa, b, wb)))
            .map(|(a, wa, b, wb)| wa * wb * self.covariance[(a, b)])
            .sum();
        Some((est, var.max(0.0).sqrt()))
    }

    /// Equal-weight mean of the event coefficients over `js`, with its standard error.
    pub fn mean_effect(&self, js: impl IntoIterator<Item = i64>) -> Option<(f64, f64)> {
        let js: Vec<i64> = js.into_iter().filter(|&j| j != self.spec.reference).collect();
        if js.is_empty() {
            return None;
        }
        let w = 1.0 / js.len() as f64;
        let weights: Vec<_> = js.iter().map(|&j| (ColumnLabel::Event(j), w)).collect();
        self.linear_combination(&weights)
    }
}

/// Fit an already-built design and extract the event-study series.
pub fn estimate_design(problem: &DesignProblem, spec: &EstimationSpec) -> Result<EventStudyResult> {
    let fit = fit_least_squares(problem)?;
    let cov = cluster_robust_cov(problem, &fit)?;
    let labels: Vec<ColumnLabel> = fit.retained.iter().map(|&c| problem.column_labels[c]).collect();
    let lookup = |label: ColumnLabel| -> Option<(f64, f64)> {
        let r = labels.iter().position(|l| *l == label)?;
        Some((fit.coefficients[r], cov[(r, r)].max(0.0).sqrt()))
    };

    let estimates = spec
        .event_times()
        .map(|j| {
            let (alpha, se) = if j == spec.reference {
                (0.0, 0.0)
            } else {
                lookup(ColumnLabel::Event(j)).unwrap_or((f64::NAN, f64::NAN))
            };
            let (beta, beta_se) = if spec.variant.is_multi() {
                let (b, s) = lookup(ColumnLabel::Concurrent(j)).unwrap_or((f64::NAN, f64::NAN));
                (Some(b), Some(s))
            } else {
                (None, None)
            };
            EventTimeEstimate {
                j,
                alpha,
                se,
                ci_lo: alpha - Z_95 * se,
                ci_hi: alpha + Z_95 * se,
                beta,
                beta_se,
            }
        })
        .collect();

    Ok(EventStudyResult {
        spec: spec.clone(),
        estimates,
        diagnostics: Diagnostics {
            n: fit.n,
            p: problem.n_cols(),
            p_retained: fit.p_retained,
            clusters: problem.n_clusters(),
            dropped_columns: fit.dropped_columns.iter().map(ToString::to_string).collect(),
            rss: fit.rss,
        },
        labels,
        coefficients: fit.coefficients,
        covariance: cov,
    })
}

/// Build the design for `spec`, fit it and compute clustered standard errors.
pub fn estimate(panel: &Panel, spec: &EstimationSpec) -> Result<EventStudyResult> {
    let problem = build_design(panel, spec)?;
    estimate_design(&problem, spec)
}
