//! Finitely generated fans `H(x) = {Λx : Λ ∈ conv{Λ_1, …, Λ_p}}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cones::{interior_point, preimage_cone, HCone, InteriorPoint, Polyhedron};
use crate::increase::{check_increase_definitional, IncreaseCheckReport, IncreaseGrid};
use crate::mappings::{IGEProblem, MappingPiece, PolytopicMapping, VertexPath};
use crate::numkit::{operator_norm, smallest_singular_value, solve_lp, vec_ops, LpProblem, Matrix, Sense, Tolerances};
use crate::sampling;
use crate::setvalues::{excess_between, ConvexPiece, SetExpr};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Fan {
    generators: Vec<Matrix>,
}

impl Fan {
    pub fn new(generators: Vec<Matrix>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidInput("a fan needs at least one generator".into()));
        };
        let (m, n) = (first.rows(), first.cols());
        if generators.iter().any(|g| g.rows() != m || g.cols() != n) {
            return Err(Error::DimensionMismatch("fan generators of different shapes".into()));
        }
        Ok(Fan { generators })
    }

    /// The fan `{0}` from `R^n` to `R^m`.
    pub fn zero(out_dim: usize, in_dim: usize) -> Self {
        Fan { generators: vec![Matrix::zeros(out_dim, in_dim)] }
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn in_dim(&self) -> usize {
        self.generators[0].cols()
    }

    pub fn out_dim(&self) -> usize {
        self.generators[0].rows()
    }

    /// Images `Λ_i x`, the vertices of `H(x)` (possibly repeated).
    pub fn images(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.generators.iter().map(|g| g.mul_vec(x)).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ConvexPiece> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!("fan expects {} inputs, got {}", self.in_dim(), x.len())));
        }
        ConvexPiece::new(self.images(x), Vec::new())
    }

    /// `max_i ‖Λ_i‖`, a Lipschitz constant of `H` in the Hausdorff metric.
    pub fn lipschitz_bound(&self) -> f64 {
        self.generators.iter().map(operator_norm).fold(0.0, f64::max)
    }

    /// `H⁺(C) = ∩_i Λ_i⁻¹(C)`.
    pub fn upper_inverse(&self, c: &HCone) -> Result<HCone> {
        let mut rows = Vec::new();
        for g in &self.generators {
            rows.extend(preimage_cone(g, c)?.rows().iter().cloned());
        }
        HCone::new(self.in_dim(), rows)
    }

    /// The fan as a mapping with linear vertex paths.
    pub fn to_mapping(&self) -> Result<PolytopicMapping> {
        let paths = self.generators.iter().cloned().map(VertexPath::linear).collect();
        PolytopicMapping::new(self.in_dim(), self.out_dim(), vec![MappingPiece { paths, rays: Vec::new() }])
    }
}

/// `H(u) + η𝔹 ⊆ C` with `|u| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncreaseCertificate {
    pub u: Vec<f64>,
    pub eta: f64,
    /// LP optimum over the `∞`-norm ball, before rescaling.
    pub lp_eta: f64,
}

impl IncreaseCertificate {
    /// Smallest normalized slack `a_j·Λ_i u / |a_j|` over all generators and rows.
    pub fn slack(&self, h: &Fan, c: &HCone) -> f64 {
        h.images(&self.u).iter().map(|y| c.margin(y)).fold(f64::INFINITY, f64::min)
    }

    /// Re-checks the certificate inequality within `tol`.
    pub fn holds(&self, h: &Fan, c: &HCone, tol: f64) -> bool {
        self.slack(h, c) >= self.eta - tol
    }
}

/// `max η` s.t. `a_j·Λ_i u ≥ η|a_j|`, `|u|_∞ ≤ 1`, plus `t_k·u ≥ 0` for every row of
/// `restrict`; then `(u, η) ← (u, η)/|u|₂`.
pub fn increase_certificate_within(h: &Fan, c: &HCone, restrict: Option<&HCone>, tol: &Tolerances) -> Result<Option<IncreaseCertificate>> {
    if c.dim() != h.out_dim() {
        return Err(Error::DimensionMismatch("cone versus fan range".into()));
    }
    let n = h.in_dim();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LpProblem::maximize(obj);
    for j in 0..n {
        lp.set_bounds(j, -1.0, 1.0);
    }
    // η is bounded above by ‖Λ‖ anyway; the cap keeps the LP bounded when C has no rows
    lp.set_bounds(n, f64::NEG_INFINITY, 1e6);
    for g in &h.generators {
        for a in c.rows() {
            let mut row = g.tr_mul_vec(a);
            row.push(-vec_ops::norm(a));
            lp.add_constraint(row, Sense::Ge, 0.0);
        }
    }
    if let Some(t) = restrict {
        for a in t.rows() {
            let mut row = a.clone();
            row.push(0.0);
            lp.add_constraint(row, Sense::Ge, 0.0);
        }
    }
    let sol = solve_lp(&lp, tol)?;
    if !sol.is_optimal() || sol.objective <= tol.feas_tol {
        return Ok(None);
    }
    let u = &sol.x[..n];
    let len = vec_ops::norm(u);
    if len <= 1e-300 {
        return Ok(None);
    }
    Ok(Some(IncreaseCertificate { u: vec_ops::scale(u, 1.0 / len), eta: sol.objective / len, lp_eta: sol.objective }))
}

pub fn increase_certificate(h: &Fan, c: &HCone, tol: &Tolerances) -> Result<Option<IncreaseCertificate>> {
    increase_certificate_within(h, c, None, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpennessCheck {
    /// `min_i σ_min(Λ_i)`.
    pub min_openness: f64,
    pub interior: Option<InteriorPoint>,
    pub holds: bool,
}

/// Every generator is open (surjective) and `H⁺(C)` has interior.
pub fn openness_increase_condition(h: &Fan, c: &HCone, tol: &Tolerances) -> Result<OpennessCheck> {
    let min_openness = h.generators.iter().map(smallest_singular_value).fold(f64::INFINITY, f64::min);
    let interior = interior_point(&h.upper_inverse(c)?, tol)?;
    let holds = min_openness > tol.feas_tol && interior.is_some();
    Ok(OpennessCheck { min_openness, interior, holds })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NecessityCheck {
    pub certificate: Option<IncreaseCertificate>,
    pub definitional: IncreaseCheckReport,
    /// False only when sampling says "increasing" but no certificate exists.
    pub consistent: bool,
}

/// Runs the definitional check on `H` itself around `0` (positive homogeneity makes the unit
/// scale representative) next to the certificate LP.
pub fn compact_values_necessity_check(h: &Fan, c: &HCone, alpha: f64, grid: &IncreaseGrid, tol: &Tolerances) -> Result<NecessityCheck> {
    let certificate = increase_certificate(h, c, tol)?;
    let problem = IGEProblem::new(h.to_mapping()?, c.clone(), Polyhedron::whole_space(h.in_dim()), vec![0.0; h.in_dim()], *tol)?;
    let hint = certificate.as_ref().map(|c| c.u.clone());
    let definitional = check_increase_definitional(&problem, alpha, 1.0, grid, hint.as_deref())?;
    let consistent = !(definitional.passed && certificate.is_none());
    Ok(NecessityCheck { certificate, definitional, consistent })
}

pub const DEFAULT_RADII: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
pub const DEFAULT_RESIDUAL_LEVEL: f64 = 1e-3;

/// Largest residual ratios observed at one radius; `+∞` when an inclusion fails along a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow {
    pub radius: f64,
    pub outer: f64,
    pub inner: f64,
    pub strict: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrederivativeReport {
    pub rows: Vec<ResidualRow>,
}

impl PrederivativeReport {
    fn last(&self) -> Option<&ResidualRow> {
        self.rows.last()
    }

    pub fn passes_outer(&self, eps: f64) -> bool {
        self.last().is_some_and(|r| r.outer <= eps)
    }

    pub fn passes_inner(&self, eps: f64) -> bool {
        self.last().is_some_and(|r| r.inner <= eps)
    }

    pub fn passes_strict(&self, eps: f64) -> bool {
        self.last().is_some_and(|r| r.strict <= eps)
    }
}

/// `S + H(d)`: every vertex of every piece shifted by every generator image.
fn plus_fan(s: &SetExpr, h: &Fan, d: &[f64]) -> Result<SetExpr> {
    let imgs = h.images(d);
    let pieces = s
        .pieces()
        .iter()
        .map(|p| {
            let mut verts = Vec::with_capacity(p.vertices().len() * imgs.len());
            for v in p.vertices() {
                for w in &imgs {
                    verts.push(vec_ops::add(v, w));
                }
            }
            ConvexPiece::new(verts, p.rays().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    SetExpr::new(pieces)
}

/// Sampled residuals of the outer, inner and strict prederivative inclusions, each divided by
/// the step length, ordered by the given radii.
pub fn prederivative_residuals(
    f: &PolytopicMapping,
    h: &Fan,
    xbar: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<PrederivativeReport> {
    if h.in_dim() != f.in_dim() || h.out_dim() != f.out_dim() {
        return Err(Error::DimensionMismatch("fan versus mapping".into()));
    }
    let n = f.in_dim();
    let fbar = f.evaluate(xbar)?;
    let dirs = sampling::direction_grid(n, samples.max(2), seed);
    let mut rng = sampling::rng(seed);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut outer, mut inner, mut strict) = (0.0f64, 0.0f64, 0.0f64);
        for d in &dirs {
            let step = vec_ops::scale(d, r);
            let x = vec_ops::add(xbar, &step);
            let fx = f.evaluate(&x)?;
            let approx = plus_fan(&fbar, h, &step)?;
            outer = outer.max(excess_between(&fx, &approx, tol)?.value() / r);
            inner = inner.max(excess_between(&approx, &fx, tol)?.value() / r);
        }
        for _ in 0..samples.max(2) {
            let x1 = sampling::in_ball(&mut rng, xbar, r);
            let x2 = sampling::in_ball(&mut rng, xbar, r);
            let len = vec_ops::dist(&x1, &x2);
            if len <= 1e-14 * r {
                continue;
            }
            let approx = plus_fan(&f.evaluate(&x1)?, h, &vec_ops::sub(&x2, &x1))?;
            strict = strict.max(excess_between(&f.evaluate(&x2)?, &approx, tol)?.value() / len);
        }
        rows.push(ResidualRow { radius: r, outer, inner, strict });
    }
    Ok(PrederivativeReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::Polynomial;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn swap() -> Matrix {
        Matrix::from_rows(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn row(v: &[f64]) -> Matrix {
        Matrix::from_rows(v.len(), &[v.to_vec()]).unwrap()
    }

    #[test]
    fn evaluation() {
        let id = Fan::new(vec![Matrix::identity(2)]).unwrap();
        assert_eq!(id.evaluate(&[1.0, 2.0]).unwrap().vertices(), &[vec![1.0, 2.0]]);
        let ds = Fan::new(vec![Matrix::identity(2), swap()]).unwrap();
        assert_eq!(ds.evaluate(&[1.0, 0.0]).unwrap().vertices(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        for v in ds.evaluate(&[0.0, 0.0]).unwrap().vertices() {
            assert_eq!(v, &vec![0.0, 0.0]);
        }
    }

    #[test]
    fn lipschitz() {
        assert!((Fan::new(vec![Matrix::identity(2)]).unwrap().lipschitz_bound() - 1.0).abs() < 1e-12);
        let two = Fan::new(vec![Matrix::identity(2), Matrix::diag(&[2.0, 2.0])]).unwrap();
        assert!((two.lipschitz_bound() - 2.0).abs() < 1e-12);
        assert!((Fan::new(vec![Matrix::identity(2), swap()]).unwrap().lipschitz_bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_inverses() {
        let c = HCone::orthant(2);
        let ds = Fan::new(vec![Matrix::identity(2), swap()]).unwrap().upper_inverse(&c).unwrap();
        assert!(ds.contains(&[1.0, 2.0], 0.0) && !ds.contains(&[1.0, -2.0], 1e-9));
        let line = Fan::new(vec![row(&[1.0, 0.0]), row(&[-1.0, 0.0])]).unwrap().upper_inverse(&HCone::orthant(1)).unwrap();
        assert!(line.contains(&[0.0, 5.0], 0.0) && !line.contains(&[0.1, 0.0], 1e-9) && !line.contains(&[-0.1, 0.0], 1e-9));
    }

    #[test]
    fn certificates() {
        let c = HCone::orthant(2);
        let h = 1.0 / libm::sqrt(2.0);
        for fan in [Fan::new(vec![Matrix::identity(2)]).unwrap(), Fan::new(vec![Matrix::identity(2), swap()]).unwrap()] {
            let cert = increase_certificate(&fan, &c, &t()).unwrap().unwrap();
            assert!((cert.eta - h).abs() < 1e-9);
            assert!(vec_ops::dist(&cert.u, &[h, h]) < 1e-9);
            assert!(cert.holds(&fan, &c, 1e-12));
        }
        let ray = HCone::new(2, vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(increase_certificate(&Fan::new(vec![Matrix::identity(2)]).unwrap(), &ray, &t()).unwrap().is_none());
    }

    #[test]
    fn openness_condition() {
        let c = HCone::orthant(2);
        assert!(openness_increase_condition(&Fan::new(vec![Matrix::identity(2)]).unwrap(), &c, &t()).unwrap().holds);
        let deficient = Fan::new(vec![Matrix::diag(&[1.0, 0.0])]).unwrap();
        assert!(!openness_increase_condition(&deficient, &c, &t()).unwrap().holds);
        let line = Fan::new(vec![row(&[1.0, 0.0]), row(&[-1.0, 0.0])]).unwrap();
        assert!(!openness_increase_condition(&line, &HCone::orthant(1), &t()).unwrap().holds);
    }

    #[test]
    fn necessity_consistency() {
        let grid = IncreaseGrid { x_samples: 6, directions: 16, radii: 3, ..IncreaseGrid::default() };
        let id = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let chk = compact_values_necessity_check(&id, &HCone::orthant(2), 1.5, &grid, &t()).unwrap();
        assert!(chk.consistent && chk.certificate.is_some() && chk.definitional.passed);
        let proj = Fan::new(vec![row(&[1.0, 0.0]), row(&[0.0, 1.0])]).unwrap();
        let chk = compact_values_necessity_check(&proj, &HCone::orthant(1), 1.5, &grid, &t()).unwrap();
        assert!(chk.consistent);
        assert!((chk.certificate.unwrap().eta - 1.0 / libm::sqrt(2.0)).abs() < 1e-9);
    }

    #[test]
    fn residuals_of_affine_mapping_vanish() {
        let a = Matrix::from_rows(2, &[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let f = PolytopicMapping::affine(
            2,
            2,
            vec![(a.clone(), vec![1.0, 0.0]), (swap(), vec![0.0, -1.0])],
            vec![vec![1.0, 1.0]],
        )
        .unwrap();
        let h = Fan::new(vec![a.clone(), swap()]).unwrap();
        let rep = prederivative_residuals(&f, &h, &[0.3, -0.2], &DEFAULT_RADII, 8, 7, &t()).unwrap();
        for r in &rep.rows {
            assert!(r.outer <= 1e-9 && r.strict <= 1e-9, "{r:?}");
        }
        assert!(rep.passes_outer(DEFAULT_RESIDUAL_LEVEL) && rep.passes_strict(DEFAULT_RESIDUAL_LEVEL));
        assert!(!rep.passes_inner(DEFAULT_RESIDUAL_LEVEL));

        let single = PolytopicMapping::affine(2, 2, vec![(a.clone(), vec![1.0, 0.0])], vec![]).unwrap();
        let rep = prederivative_residuals(&single, &Fan::new(vec![a]).unwrap(), &[0.0, 0.0], &DEFAULT_RADII, 8, 7, &t()).unwrap();
        assert!(rep.rows.iter().all(|r| r.inner <= 1e-9));
    }

    #[test]
    fn residual_of_quadratic_vertex() {
        let path = VertexPath::Polynomial { components: vec![Polynomial::new(vec![(vec![2], -1.0)])] };
        let f = PolytopicMapping::new(1, 1, vec![MappingPiece { paths: vec![path], rays: vec![vec![1.0]] }]).unwrap();
        let rep = prederivative_residuals(&f, &Fan::zero(1, 1), &[0.0], &DEFAULT_RADII, 8, 7, &t()).unwrap();
        for r in &rep.rows {
            assert!((r.outer - r.radius).abs() <= 1e-9 * r.radius.max(1e-3), "{r:?}");
        }
        assert!(rep.passes_outer(DEFAULT_RESIDUAL_LEVEL) && rep.passes_strict(DEFAULT_RESIDUAL_LEVEL));
    }
}
