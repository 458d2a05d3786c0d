use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{dd_convert, VCone};
use crate::numkit::{nnls, solve_lp, vec_ops, LpProblem, LpStatus, Matrix, Sense, Tolerances};
use crate::{Error, Result};

/// Polyhedral cone `{y : a_j·y ≥ 0 for every row a_j}`. No rows means the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct HCone {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl HCone {
    /// Rejects zero, non-finite or mis-sized rows.
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (j, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!("cone row {j} has length {}", r.len())));
            }
            if !vec_ops::is_finite(r) {
                return Err(Error::NonFinite("cone row"));
            }
            if vec_ops::norm(r) <= 1e-300 {
                return Err(Error::InvalidInput(format!("cone row {j} is zero")));
            }
        }
        Ok(HCone { dim, rows })
    }

    /// Like [`HCone::new`] but silently drops rows that are numerically zero; such rows are the
    /// trivially true inequality `0 ≥ 0`.
    pub fn from_rows_dropping_zero(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let scale = rows.iter().fold(0.0f64, |m, r| m.max(vec_ops::norm_inf(r)));
        let kept = rows.into_iter().filter(|r| vec_ops::norm_inf(r) > 1e-14 * scale.max(1e-300)).collect();
        HCone::new(dim, kept)
    }

    pub fn full(dim: usize) -> Self {
        HCone { dim, rows: Vec::new() }
    }

    pub fn orthant(dim: usize) -> Self {
        HCone { dim, rows: (0..dim).map(|i| vec_ops::unit(dim, i)).collect() }
    }

    /// `{0}`, written as `±e_i·y ≥ 0`.
    pub fn zero(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            rows.push(vec_ops::unit(dim, i));
            rows.push(vec_ops::scale(&vec_ops::unit(dim, i), -1.0));
        }
        HCone { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full_space(&self) -> bool {
        self.rows.is_empty()
    }

    /// `min_j a_j·y / |a_j|`, `+∞` for the whole space.
    pub fn margin(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|a| vec_ops::dot(a, y) / vec_ops::norm(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership with slack `a_j·y ≥ −tol·|a_j|`.
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.margin(y) >= -tol
    }

    /// Euclidean distance to the cone. By Moreau's decomposition it equals the norm of the
    /// projection onto the polar `cone{−a_j}`, which is a nonnegative least-squares problem.
    pub fn distance(&self, y: &[f64], tol: &Tolerances) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch("point versus cone".into()));
        }
        if self.rows.is_empty() || self.margin(y) >= 0.0 {
            return Ok(0.0);
        }
        let polar: Vec<Vec<f64>> = self.rows.iter().map(|a| vec_ops::scale(a, -1.0 / vec_ops::norm(a))).collect();
        let g = Matrix::from_columns(self.dim, &polar)?;
        // solved for the unit vector so that the NNLS tolerances are relative
        let len = vec_ops::norm(y);
        let fit = nnls(&g, &vec_ops::scale(y, 1.0 / len), tol)?;
        Ok(len * vec_ops::norm(&g.mul_vec(&fit.coeffs)))
    }

    pub fn intersect(&self, other: &HCone) -> Result<HCone> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("cone intersection".into()));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(HCone { dim: self.dim, rows })
    }

    /// `self ⊆ other`, decided by one LP per row of `other`: `min a·y` over `self ∩ [-1, 1]^n`
    /// must not drop below `−tol·|a|`.
    pub fn is_subset_of(&self, other: &HCone, tol: &Tolerances) -> Result<bool> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("cone inclusion".into()));
        }
        for a in other.rows() {
            let mut lp = LpProblem::minimize(a.clone());
            for j in 0..self.dim {
                lp.set_bounds(j, -1.0, 1.0);
            }
            for r in &self.rows {
                lp.add_constraint(r.clone(), Sense::Ge, 0.0);
            }
            let sol = solve_lp(&lp, tol)?;
            if sol.is_optimal() && sol.objective < -tol.feas_tol * vec_ops::norm(a) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Generator form via double description.
    pub fn to_vcone(&self) -> Result<VCone> {
        dd_convert(self)
    }

    /// Negative dual `{w : ⟨w, y⟩ ≤ 0 ∀y}` = `cone{−a_j}` (Farkas).
    pub fn dual(&self) -> VCone {
        let rays = self.rows.iter().map(|a| vec_ops::scale(a, -1.0)).collect();
        VCone::new(self.dim, rays).expect("rows are nonzero")
    }

    /// Matrix whose rows are the cone's normals.
    pub fn matrix(&self) -> Matrix {
        Matrix::from_rows(self.dim, &self.rows).expect("validated rows")
    }
}

/// `Λ⁻¹(C) = {x : (A_C Λ) x ≥ 0}`.
pub fn preimage_cone(lambda: &Matrix, c: &HCone) -> Result<HCone> {
    if lambda.rows() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "map into R^{} but cone lives in R^{}",
            lambda.rows(),
            c.dim()
        )));
    }
    let rows = c.rows().iter().map(|a| lambda.tr_mul_vec(a)).collect();
    HCone::from_rows_dropping_zero(lambda.cols(), rows)
}

/// Generators of `Q⁻ + Λᵀ(C⁻)`, the dual of `Q ∩ Λ⁻¹(C)`. Sums of finitely generated cones are
/// closed, so no closure is needed.
pub fn dual_calculus_sum(q: &HCone, lambda: &Matrix, c: &HCone) -> Result<VCone> {
    if lambda.cols() != q.dim() || lambda.rows() != c.dim() {
        return Err(Error::DimensionMismatch("dual calculus operands".into()));
    }
    let mut rays: Vec<Vec<f64>> = q.dual().rays().to_vec();
    for g in c.dual().rays() {
        let img = lambda.tr_mul_vec(g);
        if vec_ops::norm_inf(&img) > 1e-14 {
            rays.push(img);
        }
    }
    VCone::new(q.dim(), rays)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorPoint {
    pub point: Vec<f64>,
    pub slack: f64,
}

/// Maximizes `s` subject to `a_j·y ≥ s|a_j|`, `|y|_∞ ≤ 1`. When the optimum exceeds `feas_tol`
/// a second LP picks the least-`ℓ₁` point attaining it.
pub fn interior_point(c: &HCone, tol: &Tolerances) -> Result<Option<InteriorPoint>> {
    let n = c.dim();
    if c.is_full_space() {
        return Ok(Some(InteriorPoint { point: vec![0.0; n], slack: 1.0 }));
    }
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LpProblem::maximize(obj);
    for j in 0..n {
        lp.set_bounds(j, -1.0, 1.0);
    }
    lp.set_bounds(n, f64::NEG_INFINITY, 1.0);
    for a in c.rows() {
        let mut row = a.clone();
        row.push(-vec_ops::norm(a));
        lp.add_constraint(row, Sense::Ge, 0.0);
    }
    let sol = solve_lp(&lp, tol)?;
    if sol.status != LpStatus::Optimal || sol.objective <= tol.feas_tol {
        return Ok(None);
    }
    let s_star = sol.objective;

    // canonical point: y = p − q with p, q ∈ [0, 1], minimize Σ(p + q)
    let mut lp2 = LpProblem::minimize(vec![1.0; 2 * n]);
    for j in 0..2 * n {
        lp2.set_bounds(j, 0.0, 1.0);
    }
    for a in c.rows() {
        let mut row = a.clone();
        row.extend(a.iter().map(|v| -v));
        lp2.add_constraint(row, Sense::Ge, s_star * (1.0 - 1e-9) * vec_ops::norm(a));
    }
    let sol2 = solve_lp(&lp2, tol)?;
    let point = if sol2.is_optimal() {
        (0..n).map(|j| sol2.x[j] - sol2.x[n + j]).collect()
    } else {
        sol.x[..n].to_vec()
    };
    let slack = c.margin(&point);
    Ok(Some(InteriorPoint { point, slack }))
}

/// `C ∩ −C = {0}` checked by maximizing `±y_i` over `{Ay = 0, |y|_∞ ≤ 1}`.
pub fn is_pointed(c: &HCone, tol: &Tolerances) -> Result<bool> {
    let n = c.dim();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut lp = LpProblem::maximize(vec_ops::scale(&vec_ops::unit(n, i), s));
            for j in 0..n {
                lp.set_bounds(j, -1.0, 1.0);
            }
            for a in c.rows() {
                lp.add_constraint(a.clone(), Sense::Eq, 0.0);
            }
            let sol = solve_lp(&lp, tol)?;
            if sol.is_optimal() && sol.objective > tol.feas_tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn rejects_zero_rows() {
        assert!(HCone::new(2, vec![vec![0.0, 0.0]]).is_err());
        assert!(HCone::new(2, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn preimage_examples() {
        let c = HCone::orthant(2);
        let id = preimage_cone(&Matrix::identity(2), &c).unwrap();
        assert_eq!(id.rows(), c.rows());
        let swap = Matrix::from_rows(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let sw = preimage_cone(&swap, &c).unwrap();
        assert_eq!(sw.rows(), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let diff = Matrix::from_rows(2, &[vec![1.0, -1.0]]).unwrap();
        let half = preimage_cone(&diff, &HCone::orthant(1)).unwrap();
        assert!(half.contains(&[2.0, 1.0], 0.0) && !half.contains(&[1.0, 2.0], 0.0));
    }

    #[test]
    fn dual_of_orthant_and_zero() {
        let d = HCone::orthant(2).dual();
        assert_eq!(d.rays(), &[vec![-1.0, 0.0], vec![0.0, -1.0]]);
        // dual of {0} is everything
        let z = VCone::zero(2);
        assert!(z.dual().is_full_space());
    }

    #[test]
    fn interior_points() {
        let ip = interior_point(&HCone::orthant(2), &tol()).unwrap().unwrap();
        assert!((ip.point[0] - 1.0).abs() < 1e-8 && (ip.point[1] - 1.0).abs() < 1e-8);
        assert!((ip.slack - 1.0).abs() < 1e-8);

        let line = HCone::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert!(interior_point(&line, &tol()).unwrap().is_none());

        let half = HCone::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let ip = interior_point(&half, &tol()).unwrap().unwrap();
        assert!((ip.point[0] - 1.0).abs() < 1e-8 && ip.point[1].abs() < 1e-12);
        assert!((ip.slack - 1.0).abs() < 1e-8);
    }

    #[test]
    fn distances() {
        let c = HCone::orthant(2);
        assert!((c.distance(&[-3.0, 4.0], &tol()).unwrap() - 3.0).abs() < 1e-12);
        assert!((c.distance(&[-1.0, -1.0], &tol()).unwrap() - libm::sqrt(2.0)).abs() < 1e-12);
        assert_eq!(c.distance(&[1.0, 2.0], &tol()).unwrap(), 0.0);
    }

    #[test]
    fn inclusion() {
        let half = HCone::new(2, vec![vec![0.0, 1.0]]).unwrap();
        assert!(HCone::orthant(2).is_subset_of(&half, &tol()).unwrap());
        assert!(!half.is_subset_of(&HCone::orthant(2), &tol()).unwrap());
        assert!(HCone::zero(2).is_subset_of(&HCone::orthant(2), &tol()).unwrap());
    }

    #[test]
    fn pointedness() {
        assert!(is_pointed(&HCone::orthant(2), &tol()).unwrap());
        assert!(!is_pointed(&HCone::new(2, vec![vec![1.0, 0.0]]).unwrap(), &tol()).unwrap());
        let wedge = HCone::new(2, vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert!(is_pointed(&wedge, &tol()).unwrap());
        assert!(!is_pointed(&HCone::full(2), &tol()).unwrap());
        assert!(is_pointed(&HCone::zero(2), &tol()).unwrap());
    }

    #[test]
    fn dual_calculus_examples() {
        let s = dual_calculus_sum(&HCone::full(2), &Matrix::identity(2), &HCone::orthant(2)).unwrap();
        assert_eq!(s.rays(), &[vec![-1.0, 0.0], vec![0.0, -1.0]]);
        let s = dual_calculus_sum(&HCone::orthant(2), &Matrix::identity(2), &HCone::orthant(2)).unwrap();
        for r in s.rays() {
            assert!(r.iter().all(|v| *v <= 0.0));
        }
        let q = HCone::new(2, vec![vec![0.0, 1.0]]).unwrap();
        let proj = Matrix::from_rows(2, &[vec![1.0, 0.0]]).unwrap();
        let s = dual_calculus_sum(&q, &proj, &HCone::orthant(1)).unwrap();
        assert_eq!(s.rays(), &[vec![0.0, -1.0], vec![-1.0, 0.0]]);
    }
}
