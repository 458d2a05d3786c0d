use alloc::format;
use alloc::vec::Vec;

use super::{HCone, VCone};
use crate::numkit::{dykstra_project, nnls, solve_lp, vec_ops, Matrix, Halfspace, LpProblem, LpStatus, Projection, Sense, Tolerances};
use crate::{Error, Result};

/// Convex polyhedron `{x : g_j·x ≥ b_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    dim: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl Polyhedron {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(Error::DimensionMismatch(format!("{} rows but {} right-hand sides", rows.len(), rhs.len())));
        }
        for (j, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!("inequality {j} has length {}", r.len())));
            }
            if !vec_ops::is_finite(r) || !rhs[j].is_finite() {
                return Err(Error::NonFinite("polyhedron data"));
            }
            if vec_ops::norm(r) <= 1e-300 {
                return Err(Error::InvalidInput(format!("inequality {j} has a zero normal")));
            }
        }
        Ok(Polyhedron { dim, rows, rhs })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron { dim, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn orthant(dim: usize) -> Self {
        Polyhedron { dim, rows: (0..dim).map(|i| vec_ops::unit(dim, i)).collect(), rhs: alloc::vec![0.0; dim] }
    }

    pub fn from_cone(c: &HCone) -> Self {
        Polyhedron { dim: c.dim(), rows: c.rows().to_vec(), rhs: alloc::vec![0.0; c.num_rows()] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn scale(&self, j: usize, x: &[f64]) -> f64 {
        (vec_ops::norm(&self.rows[j]) * vec_ops::norm(x)).max(1.0)
    }

    /// Largest violation `b_j − g_j·x` (non-positive when `x ∈ S`).
    pub fn violation(&self, x: &[f64]) -> f64 {
        (0..self.rows.len())
            .map(|j| self.rhs[j] - vec_ops::dot(&self.rows[j], x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `g_j·x − b_j ≥ −feas_tol·max(1, |g_j||x|)` for every `j`.
    pub fn contains(&self, x: &[f64], tol: &Tolerances) -> bool {
        (0..self.rows.len()).all(|j| vec_ops::dot(&self.rows[j], x) - self.rhs[j] >= -tol.feas_tol * self.scale(j, x))
    }

    pub fn is_empty(&self, tol: &Tolerances) -> Result<bool> {
        let mut lp = LpProblem::minimize(alloc::vec![0.0; self.dim]);
        for j in 0..self.dim {
            lp.set_free(j);
        }
        for (r, b) in self.rows.iter().zip(&self.rhs) {
            lp.add_constraint(r.clone(), Sense::Ge, *b);
        }
        Ok(solve_lp(&lp, tol)?.status == LpStatus::Infeasible)
    }

    /// Indices with `|g_j·x̄ − b_j| ≤ feas_tol·max(1, |g_j||x̄|)`.
    pub fn active_set(&self, x: &[f64], tol: &Tolerances) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&j| (vec_ops::dot(&self.rows[j], x) - self.rhs[j]).abs() <= tol.feas_tol * self.scale(j, x))
            .collect()
    }

    fn check_member(&self, x: &[f64], tol: &Tolerances) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch("point versus polyhedron".into()));
        }
        if !self.contains(x, tol) {
            return Err(Error::NotInSet { violation: self.violation(x) });
        }
        Ok(())
    }

    /// `T(S)(x̄) = {v : g_j·v ≥ 0, j active}`.
    pub fn tangent_cone(&self, x: &[f64], tol: &Tolerances) -> Result<HCone> {
        self.check_member(x, tol)?;
        let rows = self.active_set(x, tol).into_iter().map(|j| self.rows[j].clone()).collect();
        HCone::new(self.dim, rows)
    }

    /// `N(S)(x̄)`, the negative dual of the tangent cone.
    pub fn normal_cone(&self, x: &[f64], tol: &Tolerances) -> Result<VCone> {
        Ok(self.tangent_cone(x, tol)?.dual())
    }

    pub fn is_interior(&self, x: &[f64], tol: &Tolerances) -> Result<bool> {
        self.check_member(x, tol)?;
        Ok(self.active_set(x, tol).is_empty())
    }

    pub fn halfspaces(&self) -> Vec<Halfspace> {
        self.rows.iter().zip(&self.rhs).map(|(r, b)| Halfspace::new(r.clone(), *b)).collect()
    }

    /// Euclidean projection as a least-distance program: with `x = z − y`, minimize `|x|` over
    /// `Gx ≥ g − Gy`, which reduces to one nonnegative least-squares problem on `[Gᵀ; hᵀ]`.
    pub fn project(&self, y: &[f64], tol: &Tolerances) -> Result<Projection> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch("point versus polyhedron".into()));
        }
        if !vec_ops::is_finite(y) {
            return Err(Error::NonFinite("projection point"));
        }
        if self.violation(y) <= 0.0 {
            return Ok(Projection { point: y.to_vec(), distance: 0.0, sweeps: 0 });
        }
        let n = self.dim;
        let mut cols = Vec::with_capacity(self.rows.len());
        for (r, b) in self.rows.iter().zip(&self.rhs) {
            let len = vec_ops::norm(r);
            let mut c: Vec<f64> = r.iter().map(|v| v / len).collect();
            c.push((b - vec_ops::dot(r, y)) / len);
            cols.push(c);
        }
        let e = Matrix::from_columns(n + 1, &cols)?;
        let f = vec_ops::unit(n + 1, n);
        let fit = nnls(&e, &f, tol)?;
        let mut res = e.mul_vec(&fit.coeffs);
        res[n] -= 1.0;
        if res[n].abs() <= 1e-14 {
            return Err(Error::EmptyIntersection);
        }
        let x: Vec<f64> = (0..n).map(|i| -res[i] / res[n]).collect();
        let point = vec_ops::add(y, &x);
        Ok(Projection { distance: vec_ops::norm(&x), point, sweeps: 0 })
    }

    /// Projection by Dykstra's alternating projections, kept as an independent cross-check.
    pub fn project_dykstra(&self, y: &[f64], tol: &Tolerances) -> Result<Projection> {
        dykstra_project(&self.halfspaces(), y, tol)
    }

    /// Adds the inequalities of `other`.
    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("polyhedron intersection".into()));
        }
        let mut p = self.clone();
        p.rows.extend(other.rows.iter().cloned());
        p.rhs.extend(other.rhs.iter().copied());
        Ok(p)
    }
}
