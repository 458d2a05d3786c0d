//! Necessary optimality conditions for `min φ(x)` over `Solv`.
//!
//! Multipliers are parametrized by the generators of `C⁻`: `y = −Σ_j μ_j â_j` with `μ ≥ 0` and
//! `â_j` the unit rows of `C`. Every condition is then a nonnegative least-squares fit whose
//! residual is zero exactly when the condition holds.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cones::{interior_point, HCone, VCone};
use crate::fans::{increase_certificate, Fan};
use crate::mappings::IGEProblem;
use crate::numkit::{nnls, vec_ops, Matrix, Tolerances};
use crate::setvalues::ConvexPiece;
use crate::tangency::Hypotheses;
use crate::{Error, Result};

/// Objective `φ`: a quadratic `½xᵀQx + cᵀx + d` or a concave `min_k (c_k·x + d_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Quadratic { q: Matrix, c: Vec<f64>, d: f64 },
    ConcaveMin { pieces: Vec<(Vec<f64>, f64)> },
}

impl Objective {
    pub fn quadratic(q: Matrix, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = c.len();
        if q.rows() != n || q.cols() != n {
            return Err(Error::DimensionMismatch(format!("Q is {}x{} but c has length {n}", q.rows(), q.cols())));
        }
        if !vec_ops::is_finite(q.as_slice()) || !vec_ops::is_finite(&c) || !d.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        let scale = q.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (q.get(i, j) - q.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Objective::Quadratic { q, c, d })
    }

    /// Linear `c·x + d`.
    pub fn linear(c: Vec<f64>, d: f64) -> Result<Self> {
        let n = c.len();
        Objective::quadratic(Matrix::zeros(n, n), c, d)
    }

    pub fn concave_min(pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput("a concave-min objective needs at least one piece".into()));
        };
        let n = first.0.len();
        for (k, (c, d)) in pieces.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch(format!("piece {k} has length {}", c.len())));
            }
            if !vec_ops::is_finite(c) || !d.is_finite() {
                return Err(Error::NonFinite("objective"));
            }
        }
        Ok(Objective::ConcaveMin { pieces })
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic { c, .. } => c.len(),
            Objective::ConcaveMin { pieces } => pieces[0].0.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Quadratic { q, c, d } => 0.5 * vec_ops::dot(x, &q.mul_vec(x)) + vec_ops::dot(c, x) + d,
            Objective::ConcaveMin { pieces } => pieces.iter().map(|(c, d)| vec_ops::dot(c, x) + d).fold(f64::INFINITY, f64::min),
        }
    }

    /// `Qx + c` for a quadratic; `None` for a concave-min objective.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Objective::Quadratic { q, c, .. } => Some(vec_ops::add(&q.mul_vec(x), c)),
            Objective::ConcaveMin { .. } => None,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch(format!("objective on R^{} but problem on R^{n}", self.dim())));
        }
        Ok(())
    }
}

/// Fréchet upper subdifferential: `{Qx̄ + c}` for a quadratic and `conv{c_k : k active}` for a
/// concave minimum of affine pieces.
pub fn upper_subdifferential(phi: &Objective, xbar: &[f64], tol: &Tolerances) -> Result<ConvexPiece> {
    phi.check_dim(xbar.len())?;
    match phi {
        Objective::Quadratic { .. } => Ok(ConvexPiece::point(phi.gradient(xbar).expect("quadratic"))),
        Objective::ConcaveMin { pieces } => {
            let m = phi.value(xbar);
            let level = tol.feas_tol * m.abs().max(1.0);
            let active = pieces
                .iter()
                .filter(|(c, d)| vec_ops::dot(c, xbar) + d - m <= level)
                .map(|(c, _)| c.clone())
                .collect();
            ConvexPiece::new(active, Vec::new())
        }
    }
}

fn check_fan(p: &IGEProblem, h: &Fan) -> Result<()> {
    if h.in_dim() != p.in_dim() || h.out_dim() != p.cone.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fan maps R^{} to R^{} but the problem needs R^{} to R^{}",
            h.in_dim(),
            h.out_dim(),
            p.in_dim(),
            p.cone.dim()
        )));
    }
    Ok(())
}

/// Per-vertex outcome of a dual-cone test.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCheck {
    /// Vertex `s` of `∂̂⁺φ(x̄)`.
    pub subgradient: Vec<f64>,
    /// Distance of `−s` from the dual cone (or residual of the decomposition).
    pub residual: f64,
    pub holds: bool,
}

fn residual_level(s: &[f64], tol: &Tolerances) -> f64 {
    tol.feas_tol * vec_ops::norm(s).max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralNocReport {
    /// `K = H⁺(C) ∩ T(S)(x̄)`.
    pub cone: HCone,
    pub vertices: Vec<VertexCheck>,
    pub worst_residual: f64,
    pub holds: bool,
    /// Cleared when the inner approximation hypotheses are not certified.
    pub hypotheses_certified: bool,
    /// `Some(stationary)` when `x̄ ∈ int S` and `F(x̄) + η𝔹 ⊆ C` for some `η > 0`; the condition
    /// then reduces to `0 ∈ ∂̂⁺φ(x̄)`.
    pub strong_satisfaction: Option<bool>,
}

/// `−∂̂⁺φ(x̄) ⊆ K⁻` with `K = H⁺(C) ∩ T(S)(x̄)`, tested vertex by vertex.
pub fn check_general_noc(p: &IGEProblem, h: &Fan, phi: &Objective, hyp: &Hypotheses) -> Result<GeneralNocReport> {
    check_fan(p, h)?;
    let tol = &p.tol;
    let sub = upper_subdifferential(phi, &p.reference, tol)?;
    let cone = h.upper_inverse(&p.cone)?.intersect(&p.set.tangent_cone(&p.reference, tol)?)?;
    let dual = cone.dual();
    let mut vertices = Vec::new();
    for s in sub.vertices() {
        let residual = dual.distance(&vec_ops::scale(s, -1.0), tol)?;
        vertices.push(VertexCheck { subgradient: s.clone(), residual, holds: residual <= residual_level(s, tol) });
    }
    let worst_residual = vertices.iter().map(|v| v.residual).fold(0.0, f64::max);
    let holds = vertices.iter().all(|v| v.holds);

    let strong_satisfaction = if p.set.is_interior(&p.reference, tol)? && strongly_satisfied(p)? {
        let zero = vec![0.0; p.in_dim()];
        Some(sub.project(&zero, tol)?.distance <= tol.feas_tol)
    } else {
        None
    };
    Ok(GeneralNocReport {
        cone,
        vertices,
        worst_residual,
        holds,
        hypotheses_certified: hyp.outer_ok() && hyp.increase_ok(),
        strong_satisfaction,
    })
}

/// Every vertex of `F(x̄)` keeps a positive margin to the boundary of `C` (rays lie in `C`
/// whenever `x̄` solves the problem).
fn strongly_satisfied(p: &IGEProblem) -> Result<bool> {
    let fx = p.mapping.evaluate(&p.reference)?;
    if p.cone.is_full_space() {
        return Ok(true);
    }
    let tol = &p.tol;
    for piece in fx.pieces() {
        for r in piece.rays() {
            if !p.cone.contains(&vec_ops::normalized(r).expect("nonzero ray"), tol.feas_tol) {
                return Ok(false);
            }
        }
    }
    let strict = fx.vertices().all(|v| p.cone.margin(v) > tol.feas_tol * vec_ops::norm(v).max(1.0));
    Ok(strict)
}

/// Columns `Λ_iᵀ â_j` of the multiplier fit, one block per generator.
fn multiplier_columns(p: &IGEProblem, h: &Fan) -> Vec<Vec<f64>> {
    let unit_rows: Vec<Vec<f64>> = p.cone.rows().iter().map(|a| vec_ops::scale(a, 1.0 / vec_ops::norm(a))).collect();
    let mut cols = Vec::new();
    for g in h.generators() {
        for a in &unit_rows {
            cols.push(g.tr_mul_vec(a));
        }
    }
    cols
}

/// Nonnegative fit of `target` by `cols`; returns coefficients and residual norm.
fn fit(n: usize, cols: &[Vec<f64>], target: &[f64], tol: &Tolerances) -> Result<(Vec<f64>, f64)> {
    if cols.is_empty() {
        return Ok((Vec::new(), vec_ops::norm(target)));
    }
    let g = Matrix::from_columns(n, cols)?;
    let r = nnls(&g, target, tol)?;
    let residual = vec_ops::dist(&g.mul_vec(&r.coeffs), target);
    Ok((r.coeffs, residual))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualifiedNocReport {
    /// `int(T(S)(x̄) ∩ H⁺(C)) ≠ ∅`.
    pub qualification_v: bool,
    /// `∩_i int Λ_i⁻¹(C) ≠ ∅`.
    pub qualification_vi: bool,
    /// Labels of the failed qualifications, e.g. `"(vi)"`.
    pub qualification_failed: Vec<String>,
    /// Without qualification the inclusion was tested against the closed polyhedral sum.
    pub closure_caveat: bool,
    pub vertices: Vec<VertexCheck>,
    pub feasible: bool,
}

/// `−∂̂⁺φ(x̄) ⊆ Σ_i Λ_iᵀ(C⁻) + N(S)(x̄)`: each vertex `s` must satisfy
/// `s = Σ_{i,j} μ_ij Λ_iᵀ â_j + Σ_k κ_k ĝ_k` with `μ, κ ≥ 0` over active rows `g_k` of `S`.
pub fn check_qualified_noc(p: &IGEProblem, h: &Fan, phi: &Objective) -> Result<QualifiedNocReport> {
    check_fan(p, h)?;
    let tol = &p.tol;
    let n = p.in_dim();
    let sub = upper_subdifferential(phi, &p.reference, tol)?;
    let tangent = p.set.tangent_cone(&p.reference, tol)?;
    let upper = h.upper_inverse(&p.cone)?;
    let qualification_v = interior_point(&upper.intersect(&tangent)?, tol)?.is_some();
    let qualification_vi = interior_point(&upper, tol)?.is_some();
    let mut qualification_failed = Vec::new();
    if !qualification_v {
        qualification_failed.push(String::from("(v)"));
    }
    if !qualification_vi {
        qualification_failed.push(String::from("(vi)"));
    }

    let mut cols = multiplier_columns(p, h);
    cols.extend(tangent.rows().iter().map(|g| vec_ops::scale(g, 1.0 / vec_ops::norm(g))));
    let mut vertices = Vec::new();
    for s in sub.vertices() {
        let (_, residual) = fit(n, &cols, s, tol)?;
        vertices.push(VertexCheck { subgradient: s.clone(), residual, holds: residual <= residual_level(s, tol) });
    }
    let feasible = vertices.iter().all(|v| v.holds);
    Ok(QualifiedNocReport {
        qualification_v,
        qualification_vi,
        closure_caveat: !qualification_failed.is_empty(),
        qualification_failed,
        vertices,
        feasible,
    })
}

/// Multipliers `y_i ∈ C⁻` with `∇φ(x̄) + Σ Λ_iᵀ y_i = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierCertificate {
    pub ys: Vec<Vec<f64>>,
    /// `|∇φ(x̄) + Σ Λ_iᵀ y_i|`.
    pub residual_norm: f64,
    /// `max ⟨y_i, r⟩` over unit generators `r` of `C`, one per `y_i`; nonpositive iff `y_i ∈ C⁻`.
    pub duality_margins: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MultiplierOutcome {
    Certificate(MultiplierCertificate),
    /// No multipliers exist; under the checked hypotheses `x̄` is not a local minimizer.
    Infeasible { residual: f64 },
}

/// The multiplier rule for a quadratic objective at `x̄ ∈ int S`, after checking that
/// `∩ int Λ_i⁻¹(C) ≠ ∅` and that the fan carries an increase certificate.
pub fn multiplier_rule(p: &IGEProblem, h: &Fan, phi: &Objective) -> Result<MultiplierOutcome> {
    check_fan(p, h)?;
    phi.check_dim(p.in_dim())?;
    let tol = &p.tol;
    if !p.set.is_interior(&p.reference, tol)? {
        return Err(Error::PreconditionFailed("x̄ ∈ int S".into()));
    }
    let Some(grad) = phi.gradient(&p.reference) else {
        return Err(Error::PreconditionFailed("φ differentiable at x̄".into()));
    };
    if interior_point(&h.upper_inverse(&p.cone)?, tol)?.is_none() {
        return Err(Error::PreconditionFailed("(iii) ∩ int Λ_i⁻¹(C) ≠ ∅".into()));
    }
    if increase_certificate(h, &p.cone, tol)?.is_none() {
        return Err(Error::PreconditionFailed("(iv) H(u) + η𝔹 ⊆ C".into()));
    }

    let n = p.in_dim();
    let m = p.cone.dim();
    let rows = p.cone.num_rows();
    let cols = multiplier_columns(p, h);
    let (mu, residual) = fit(n, &cols, &grad, tol)?;
    if residual > residual_level(&grad, tol) {
        return Ok(MultiplierOutcome::Infeasible { residual });
    }

    let generators = p.cone.to_vcone()?;
    let mut ys = Vec::with_capacity(h.generators().len());
    for i in 0..h.generators().len() {
        let mut y = vec![0.0; m];
        for (j, a) in p.cone.rows().iter().enumerate() {
            let w = mu.get(i * rows + j).copied().unwrap_or(0.0);
            y = vec_ops::axpy(&y, -w / vec_ops::norm(a), a);
        }
        ys.push(y);
    }
    let mut total = grad.clone();
    for (g, y) in h.generators().iter().zip(&ys) {
        total = vec_ops::add(&total, &g.tr_mul_vec(y));
    }
    let duality_margins = ys.iter().map(|y| max_pairing(&generators, y)).collect();
    Ok(MultiplierOutcome::Certificate(MultiplierCertificate { ys, residual_norm: vec_ops::norm(&total), duality_margins }))
}

fn max_pairing(c: &VCone, y: &[f64]) -> f64 {
    c.rays().iter().map(|r| vec_ops::dot(r, y)).fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Polyhedron;
    use crate::increase::IncreaseGrid;
    use crate::mappings::PolytopicMapping;

    fn swap() -> Matrix {
        Matrix::from_rows(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn problem(maps: &[Matrix], cone: HCone, set: Polyhedron, xbar: Vec<f64>) -> IGEProblem {
        let m = cone.dim();
        let f = PolytopicMapping::affine(2, m, maps.iter().map(|a| (a.clone(), vec![0.0; m])).collect(), vec![]).unwrap();
        IGEProblem::new(f, cone, set, xbar, Tolerances::default()).unwrap()
    }

    fn identity() -> (IGEProblem, Fan) {
        let p = problem(&[Matrix::identity(2)], HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0]);
        (p, Fan::new(vec![Matrix::identity(2)]).unwrap())
    }

    fn hyp(p: &IGEProblem, h: &Fan) -> Hypotheses {
        let grid = IncreaseGrid { x_samples: 4, directions: 8, radii: 2, ..IncreaseGrid::default() };
        Hypotheses::gather(p, h, 0.5, &grid).unwrap()
    }

    #[test]
    fn upper_subdifferentials() {
        let t = Tolerances::default();
        let lin = Objective::linear(vec![1.0, 1.0], 0.0).unwrap();
        assert_eq!(upper_subdifferential(&lin, &[3.0, -2.0], &t).unwrap().vertices(), &[vec![1.0, 1.0]]);
        let min = Objective::concave_min(vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)]).unwrap();
        assert_eq!(upper_subdifferential(&min, &[1.0, 1.0], &t).unwrap().vertices().len(), 2);
        assert_eq!(upper_subdifferential(&min, &[0.0, 1.0], &t).unwrap().vertices(), &[vec![1.0, 0.0]]);
        let q = Matrix::from_rows(2, &[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(Objective::quadratic(q, vec![0.0; 2], 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn general_noc() {
        let (p, h) = identity();
        let hy = hyp(&p, &h);
        let good = check_general_noc(&p, &h, &Objective::linear(vec![1.0, 1.0], 0.0).unwrap(), &hy).unwrap();
        assert!(good.holds && good.hypotheses_certified && good.strong_satisfaction.is_none());
        let bad = check_general_noc(&p, &h, &Objective::linear(vec![-1.0, -1.0], 0.0).unwrap(), &hy).unwrap();
        assert!(!bad.holds && (bad.worst_residual - libm::sqrt(2.0)).abs() < 1e-9);
    }

    #[test]
    fn strong_satisfaction_branch() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![1.0, 1.0])], vec![]).unwrap();
        let p = IGEProblem::new(f, HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        let h = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let hy = hyp(&p, &h);
        let flat = check_general_noc(&p, &h, &Objective::linear(vec![0.0, 0.0], 0.0).unwrap(), &hy).unwrap();
        assert_eq!(flat.strong_satisfaction, Some(true));
        let tilted = check_general_noc(&p, &h, &Objective::linear(vec![1.0, 0.0], 0.0).unwrap(), &hy).unwrap();
        assert_eq!(tilted.strong_satisfaction, Some(false));
    }

    #[test]
    fn qualified_noc() {
        let (p, h) = identity();
        let r = check_qualified_noc(&p, &h, &Objective::linear(vec![1.0, 1.0], 0.0).unwrap()).unwrap();
        assert!(r.feasible && r.qualification_v && r.qualification_vi && !r.closure_caveat);

        let ds = Fan::new(vec![Matrix::identity(2), swap()]).unwrap();
        let q = problem(&[Matrix::identity(2), swap()], HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0]);
        assert!(check_qualified_noc(&q, &ds, &Objective::linear(vec![1.0, 1.0], 0.0).unwrap()).unwrap().feasible);

        // C = ray through (1, 0)
        let ray = HCone::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let r = problem(&[Matrix::identity(2)], ray, Polyhedron::whole_space(2), vec![0.0, 0.0]);
        let rep = check_qualified_noc(&r, &h, &Objective::linear(vec![1.0, 0.0], 0.0).unwrap()).unwrap();
        assert!(rep.qualification_failed.contains(&String::from("(vi)")) && rep.closure_caveat);
    }

    #[test]
    fn multiplier_rule_examples() {
        let (p, h) = identity();
        let MultiplierOutcome::Certificate(c) = multiplier_rule(&p, &h, &Objective::linear(vec![1.0, 1.0], 0.0).unwrap()).unwrap() else {
            panic!("expected a certificate");
        };
        assert!(vec_ops::dist(&c.ys[0], &[-1.0, -1.0]) < 1e-12 && c.residual_norm < 1e-12);
        assert!(c.duality_margins.iter().all(|&m| m <= 1e-12));

        let bowl = Objective::quadratic(Matrix::diag(&[2.0, 2.0]), vec![-2.0, -2.0], 2.0).unwrap();
        let q = problem(&[Matrix::identity(2)], HCone::orthant(2), Polyhedron::whole_space(2), vec![1.0, 1.0]);
        let MultiplierOutcome::Certificate(c) = multiplier_rule(&q, &h, &bowl).unwrap() else {
            panic!("expected a certificate");
        };
        assert!(vec_ops::norm(&c.ys[0]) < 1e-12);

        let out = multiplier_rule(&p, &h, &Objective::linear(vec![-1.0, 0.0], 0.0).unwrap()).unwrap();
        assert!(matches!(out, MultiplierOutcome::Infeasible { residual } if (residual - 1.0).abs() < 1e-9));
    }

    #[test]
    fn multiplier_preconditions() {
        let h = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let lin = Objective::linear(vec![1.0, 1.0], 0.0).unwrap();
        let boundary = problem(&[Matrix::identity(2)], HCone::orthant(2), Polyhedron::orthant(2), vec![0.0, 0.0]);
        assert!(matches!(multiplier_rule(&boundary, &h, &lin), Err(Error::PreconditionFailed(s)) if s.contains("int S")));
        let (p, _) = identity();
        let min = Objective::concave_min(vec![(vec![1.0, 0.0], 0.0)]).unwrap();
        assert!(matches!(multiplier_rule(&p, &h, &min), Err(Error::PreconditionFailed(_))));
        let ray = HCone::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let r = problem(&[Matrix::identity(2)], ray, Polyhedron::whole_space(2), vec![0.0, 0.0]);
        assert!(matches!(multiplier_rule(&r, &h, &lin), Err(Error::PreconditionFailed(s)) if s.starts_with("(iii)")));
    }
}
