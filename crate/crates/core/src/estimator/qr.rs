//! Householder QR with limited column pivoting.
//!
//! Columns are factored in their original order. A column whose norm,
//! orthogonal to the columns already accepted, falls below
//! `rel_tol × leading pivot` is pivoted out of the factorization and reported
//! as dropped. The leading pivot is the largest column norm, i.e. the first
//! diagonal entry a norm-pivoted factorization would produce. Keeping the
//! original order means that within a collinear set the later columns are
//! the ones removed.

use nalgebra::DMatrix;

pub(crate) struct PivotedQr {
    /// Upper-triangular factor over the retained columns.
    pub r: DMatrix<f64>,
    /// Leading `rank` entries of `Qᵀy`.
    pub qty: Vec<f64>,
    pub retained: Vec<usize>,
    pub dropped: Vec<usize>,
}

fn norm(v: &[f64]) -> f64 {
    // Scaled accumulation to stay clear of overflow on large designs.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn factor(x: &DMatrix<f64>, y: &[f64], rel_tol: f64) -> PivotedQr {
    let n = x.nrows();
    let p = x.ncols();
    let mut a: Vec<f64> = x.as_slice().to_vec();
    let mut b: Vec<f64> = y.to_vec();

    let leading = (0..p)
        .map(|c| norm(&a[c * n..(c + 1) * n]))
        .fold(0.0f64, f64::max);
    let threshold = rel_tol * leading;

    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut diag = Vec::new();
    let mut k = 0usize;

    for c in 0..p {
        let (head, tail) = a.split_at_mut((c + 1) * n);
        let col = &mut head[c * n..];
        let sub = &mut col[k..];
        let sub_norm = norm(sub);
        if k >= n || leading == 0.0 || sub_norm <= threshold {
            dropped.push(c);
            continue;
        }

        let alpha = if sub[0] >= 0.0 { -sub_norm } else { sub_norm };
        sub[0] -= alpha;
        let vv = dot(sub, sub);
        let v: &[f64] = sub;

        for other in tail.chunks_exact_mut(n) {
            let target = &mut other[k..];
            let s = 2.0 * dot(v, target) / vv;
            if s != 0.0 {
                target.iter_mut().zip(v).for_each(|(t, vi)| *t -= s * vi);
            }
        }
        let target = &mut b[k..];
        let s = 2.0 * dot(v, target) / vv;
        target.iter_mut().zip(v).for_each(|(t, vi)| *t -= s * vi);

        retained.push(c);
        diag.push(alpha);
        k += 1;
    }

    let rank = retained.len();
    let mut r = DMatrix::<f64>::zeros(rank, rank);
    for (jr, &c) in retained.iter().enumerate() {
        for i in 0..jr {
            r[(i, jr)] = a[c * n + i];
        }
        r[(jr, jr)] = diag[jr];
    }
    b.truncate(rank);

    PivotedQr {
        r,
        qty: b,
        retained,
        dropped,
    }
}

/// Solve `R x = rhs` for upper-triangular `R`.
pub(crate) fn back_substitute(r: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let k = rhs.len();
    let mut x = rhs.to_vec();
    for i in (0..k).rev() {
        let mut s = x[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// `(RᵀR)⁻¹ = R⁻¹R⁻ᵀ`.
pub(crate) fn gram_inverse(r: &DMatrix<f64>) -> DMatrix<f64> {
    let k = r.nrows();
    let mut rinv = DMatrix::<f64>::zeros(k, k);
    let mut e = vec![0.0; k];
    for j in 0..k {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = back_substitute(r, &e);
        rinv.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    &rinv * rinv.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_system() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let qr = factor(&x, &[1.0, 2.0], 1e-10);
        assert_eq!(qr.retained, vec![0, 1]);
        let b = back_substitute(&qr.r, &qr.qty);
        assert!((b[0] - 1.0).abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn later_duplicate_is_dropped() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 2.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0]);
        let qr = factor(&x, &[1.0, 2.0, 3.0], 1e-10);
        assert_eq!(qr.retained, vec![0, 1]);
        assert_eq!(qr.dropped, vec![2]);
    }

    #[test]
    fn zero_matrix_drops_everything() {
        let x = DMatrix::<f64>::zeros(4, 2);
        let qr = factor(&x, &[1.0; 4], 1e-10);
        assert!(qr.retained.is_empty());
        assert_eq!(qr.dropped, vec![0, 1]);
    }

    #[test]
    fn gram_inverse_matches_direct_inverse() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, 1.0, -1.0, 1.0, 2.0, 1.0, 3.0]);
        let qr = factor(&x, &[0.0; 4], 1e-10);
        let inv = gram_inverse(&qr.r);
        let direct = (x.transpose() * &x).try_inverse().unwrap();
        assert!((inv - direct).abs().max() < 1e-12);
    }
}
