//! Lawson–Hanson active-set least squares.
//!
//! [`nnls`] solves `min |Gβ − y|, β ≥ 0`. [`simplex_nnls`] additionally forces the first `k`
//! coefficients to sum to one, which is what a distance to `conv(V) + cone(R)` needs: the
//! equality is eliminated inside each passive-set subproblem by pivoting on one vertex column.

use alloc::vec;
use alloc::vec::Vec;

use super::{least_squares, vec_ops, Matrix, Tolerances};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct NnlsResult {
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
    /// Largest violation among dual feasibility and complementarity.
    pub kkt_residual: f64,
}

pub fn nnls(g: &Matrix, y: &[f64], tol: &Tolerances) -> Result<NnlsResult> {
    simplex_nnls(g, 0, y, tol)
}

/// `min |Gz − y|` over `z ≥ 0` with `Σ_{i<simplex_cols} z_i = 1` when `simplex_cols > 0`.
pub fn simplex_nnls(g: &Matrix, simplex_cols: usize, y: &[f64], tol: &Tolerances) -> Result<NnlsResult> {
    let (m, k) = (g.rows(), g.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch("nnls right-hand side".into()));
    }
    if !vec_ops::is_finite(y) {
        return Err(Error::NonFinite("nnls right-hand side"));
    }
    if simplex_cols > k {
        return Err(Error::InvalidInput("simplex block larger than column count".into()));
    }
    if k == 0 {
        return Ok(NnlsResult { coeffs: Vec::new(), residual_norm: vec_ops::norm(y), kkt_residual: 0.0 });
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|j| g.column(j)).collect();
    let solver = ActiveSet { cols: &cols, m, s: simplex_cols, y };
    solver.solve(tol)
}

struct ActiveSet<'a> {
    cols: &'a [Vec<f64>],
    m: usize,
    s: usize,
    y: &'a [f64],
}

impl ActiveSet<'_> {
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.y.iter().map(|v| -v).collect();
        for (c, &zi) in self.cols.iter().zip(z) {
            if zi != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri += zi * ci;
                }
            }
        }
        r
    }

    /// Gradient `Gᵀ(Gz − y)` and the equality multiplier estimate from passive vertex columns.
    fn gradient(&self, z: &[f64], passive: &[bool]) -> (Vec<f64>, f64) {
        let r = self.residual(z);
        let grad: Vec<f64> = self.cols.iter().map(|c| vec_ops::dot(c, &r)).collect();
        let nu = if self.s > 0 {
            let (sum, cnt) = (0..self.s)
                .filter(|&i| passive[i])
                .fold((0.0, 0usize), |(s, c), i| (s + grad[i], c + 1));
            if cnt > 0 {
                -sum / cnt as f64
            } else {
                0.0
            }
        } else {
            0.0
        };
        (grad, nu)
    }

    /// Unconstrained (besides the simplex equality) least squares on the passive set.
    fn solve_passive(&self, passive: &[bool]) -> Vec<f64> {
        let k = self.cols.len();
        let mut out = vec![0.0; k];
        let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
        if self.s > 0 {
            let Some(&p0) = idx.iter().find(|&&i| i < self.s) else {
                return out;
            };
            let others: Vec<usize> = idx.iter().copied().filter(|&i| i != p0).collect();
            let rhs = vec_ops::sub(self.y, &self.cols[p0]);
            if others.is_empty() {
                out[p0] = 1.0;
                return out;
            }
            let design: Vec<Vec<f64>> = others
                .iter()
                .map(|&i| if i < self.s { vec_ops::sub(&self.cols[i], &self.cols[p0]) } else { self.cols[i].clone() })
                .collect();
            let a = Matrix::from_columns(self.m, &design).expect("finite columns");
            let sol = least_squares(&a, &rhs);
            let mut lam_sum = 0.0;
            for (&i, v) in others.iter().zip(&sol) {
                out[i] = *v;
                if i < self.s {
                    lam_sum += *v;
                }
            }
            out[p0] = 1.0 - lam_sum;
        } else {
            if idx.is_empty() {
                return out;
            }
            let design: Vec<Vec<f64>> = idx.iter().map(|&i| self.cols[i].clone()).collect();
            let a = Matrix::from_columns(self.m, &design).expect("finite columns");
            let sol = least_squares(&a, self.y);
            for (&i, v) in idx.iter().zip(&sol) {
                out[i] = *v;
            }
        }
        out
    }

    fn solve(&self, tol: &Tolerances) -> Result<NnlsResult> {
        let k = self.cols.len();
        let mut z = vec![0.0; k];
        let mut passive = vec![false; k];
        if self.s > 0 {
            let start = (0..self.s)
                .map(|i| (i, vec_ops::dist(&self.cols[i], self.y)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
                .0;
            z[start] = 1.0;
            passive[start] = true;
        }
        let col_scale = self.cols.iter().fold(0.0f64, |a, c| a.max(vec_ops::norm(c)));
        let data_scale = col_scale * (1.0 + vec_ops::norm(self.y)).max(col_scale);
        let stop = tol.kkt_tol * data_scale.max(1.0);
        let mut blocked = vec![false; k];

        let mut iters = 0usize;
        loop {
            iters += 1;
            if iters > tol.max_nnls_iter {
                return Err(Error::IterationLimit { routine: "nnls", limit: tol.max_nnls_iter });
            }
            let (grad, nu) = self.gradient(&z, &passive);
            let candidate = (0..k)
                .filter(|&i| !passive[i] && !blocked[i])
                .map(|i| (i, -(grad[i] + if i < self.s { nu } else { 0.0 })))
                .fold(None, |best: Option<(usize, f64)>, c| match best {
                    Some(b) if b.1 >= c.1 => Some(b),
                    _ => Some(c),
                });
            let Some((t, w)) = candidate else { break };
            if w <= stop {
                break;
            }
            passive[t] = true;
            let mut first = true;
            loop {
                iters += 1;
                if iters > tol.max_nnls_iter {
                    return Err(Error::IterationLimit { routine: "nnls", limit: tol.max_nnls_iter });
                }
                let s = self.solve_passive(&passive);
                if first && s[t] <= 0.0 {
                    // degenerate column: no descent available through it
                    passive[t] = false;
                    blocked[t] = true;
                    break;
                }
                first = false;
                if (0..k).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                    z = s;
                    blocked.iter_mut().for_each(|b| *b = false);
                    break;
                }
                let mut alpha = 1.0f64;
                for i in (0..k).filter(|&i| passive[i] && s[i] <= 0.0) {
                    let denom = z[i] - s[i];
                    if denom > 0.0 {
                        alpha = alpha.min(z[i] / denom);
                    }
                }
                for i in 0..k {
                    if passive[i] {
                        z[i] += alpha * (s[i] - z[i]);
                    }
                }
                for i in 0..k {
                    if passive[i] && z[i] <= 1e-15 {
                        z[i] = 0.0;
                        passive[i] = false;
                    }
                }
                if self.s > 0 && !(0..self.s).any(|i| passive[i]) {
                    // keep the simplex block represented by its largest weight
                    let j = (0..self.s)
                        .fold((0, f64::NEG_INFINITY), |a, i| if z[i] > a.1 { (i, z[i]) } else { a })
                        .0;
                    passive[j] = true;
                    if z[j] <= 0.0 {
                        z[j] = 1.0;
                    }
                }
                if !passive[t] {
                    blocked[t] = true;
                }
            }
        }

        // clean the simplex weights and report
        if self.s > 0 {
            let total: f64 = z[..self.s].iter().sum();
            if total > 0.0 {
                for v in z[..self.s].iter_mut() {
                    *v /= total;
                }
            }
        }
        let (grad, nu) = self.gradient(&z, &passive);
        let mut kkt = 0.0f64;
        for i in 0..k {
            let gi = grad[i] + if i < self.s { nu } else { 0.0 };
            kkt = kkt.max((-gi).max(0.0)).max((z[i] * gi).abs());
        }
        let residual_norm = vec_ops::norm(&self.residual(&z));
        Ok(NnlsResult { coeffs: z, residual_norm, kkt_residual: kkt })
    }
}
