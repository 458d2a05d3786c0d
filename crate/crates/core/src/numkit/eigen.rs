use alloc::vec::Vec;

use super::Matrix;
use crate::math;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    debug_assert_eq!(n, m.cols());
    let mut a: Vec<Vec<f64>> = m.to_rows();
    let scale = m.max_abs().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if math::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    ev
}

/// Singular values of `Λ` (the `min(m, n)` largest), descending.
pub fn singular_values(lambda: &Matrix) -> Vec<f64> {
    let gram = if lambda.rows() <= lambda.cols() { lambda.outer_gram() } else { lambda.gram() };
    let mut sv: Vec<f64> =
        symmetric_eigenvalues(&gram).into_iter().map(|e| math::sqrt(e.max(0.0))).collect();
    sv.reverse();
    sv
}

/// Openness bound `σ_min(Λᵀ) = sqrt(λ_min(Λ Λᵀ))`; zero whenever `Λ` is not surjective.
pub fn smallest_singular_value(lambda: &Matrix) -> f64 {
    if lambda.rows() == 0 {
        return 0.0;
    }
    let ev = symmetric_eigenvalues(&lambda.outer_gram());
    math::sqrt(ev[0].max(0.0))
}

/// Spectral norm `‖Λ‖ = σ_max(Λ)`.
pub fn operator_norm(lambda: &Matrix) -> f64 {
    if lambda.rows() == 0 || lambda.cols() == 0 {
        return 0.0;
    }
    singular_values(lambda).first().copied().unwrap_or(0.0)
}
