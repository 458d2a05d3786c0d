//! Error bounds and first-order approximations of the solution set.
//!
//! Distances to `Solv` are exact (polyhedral projection) whenever the mapping is affine and
//! otherwise come from a multi-start search over membership, reported as an oracle value.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cones::{HCone, Polyhedron};
use crate::fans::{prederivative_residuals, Fan, PrederivativeReport, DEFAULT_RADII, DEFAULT_RESIDUAL_LEVEL};
use crate::increase::{certificate_at_points, sample_points, IncreaseGrid};
use crate::mappings::{exact_solution_polyhedron, excess_function, membership_in_solutions, IGEProblem};
use crate::math;
use crate::numkit::vec_ops;
use crate::sampling;
use crate::setvalues::dist_point_to;
use crate::{Error, Result};

/// How a distance to the solution set was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceSource {
    Exact,
    Oracle,
}

/// Distance to `Solv` for a fixed problem.
pub struct SolutionDistance<'a> {
    p: &'a IGEProblem,
    exact: Option<Polyhedron>,
}

pub const ORACLE_STARTS: usize = 16;

/// Excess level below which the oracle treats a point as a solution. Much tighter than the
/// sampling tolerance so that the located boundary is accurate.
pub const ORACLE_MEMBER_TOL: f64 = 1e-14;

impl<'a> SolutionDistance<'a> {
    pub fn new(p: &'a IGEProblem) -> Result<Self> {
        let exact = match exact_solution_polyhedron(p) {
            Ok(s) if !s.empty => s.polyhedron,
            Ok(_) => None,
            Err(Error::NotAffine) => None,
            Err(e) => return Err(e),
        };
        Ok(SolutionDistance { p, exact })
    }

    pub fn source(&self) -> DistanceSource {
        if self.exact.is_some() {
            DistanceSource::Exact
        } else {
            DistanceSource::Oracle
        }
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        match &self.exact {
            Some(poly) => Ok(poly.project(x, &self.p.tol)?.distance),
            None => self.oracle(x),
        }
    }

    fn member(&self, z: &[f64]) -> Result<bool> {
        Ok(self.p.set.contains(z, &self.p.tol) && excess_function(self.p, z)?.value() <= ORACLE_MEMBER_TOL)
    }

    /// Upper estimate of `dist(x, Solv)`: bisection towards known members, then a pattern
    /// search that keeps membership and shrinks `|z − x|`.
    fn oracle(&self, x: &[f64]) -> Result<f64> {
        if self.member(x)? {
            return Ok(0.0);
        }
        let p = self.p;
        let n = x.len();
        let base = vec_ops::dist(x, &p.reference).max(1e-12);
        let mut starts = vec![p.reference.clone()];
        let mut rng = sampling::rng(sampling::DEFAULT_SEED ^ 0x5eed);
        let mut attempts = 0;
        while starts.len() < ORACLE_STARTS && attempts < 8 * ORACLE_STARTS {
            attempts += 1;
            let radius = base * (0.25 + 1.75 * sampling::uniform(&mut rng));
            let z = vec_ops::axpy(x, radius, &sampling::unit_vector(&mut rng, n));
            if self.member(&z)? {
                starts.push(z);
            }
        }
        let dirs = sampling::direction_grid(n, 16.max(2 * n), 7);
        let mut best = f64::INFINITY;
        for s in &starts {
            // segment from x (outside) to s (inside)
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let z = vec_ops::add(&vec_ops::scale(x, 1.0 - mid), &vec_ops::scale(s, mid));
                if self.member(&z)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut z = vec_ops::add(&vec_ops::scale(x, 1.0 - hi), &vec_ops::scale(s, hi));
            let mut d = vec_ops::dist(&z, x);
            let mut step = 0.5 * d;
            while step > 1e-12 * base {
                let mut improved = false;
                for dir in &dirs {
                    let cand = vec_ops::axpy(&z, step, dir);
                    let dc = vec_ops::dist(&cand, x);
                    if dc < d && self.member(&cand)? {
                        z = cand;
                        d = dc;
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best = best.min(d);
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBoundSample {
    pub x: Vec<f64>,
    pub distance: f64,
    pub excess: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBoundReport {
    pub alpha: f64,
    pub delta: f64,
    pub samples: Vec<ErrorBoundSample>,
    pub max_ratio: f64,
    /// `1/(α − 1)`.
    pub bound: f64,
    pub passed: bool,
    pub source: DistanceSource,
}

/// Checks `dist(x, Solv) ≤ exc(F(x), C)/(α − 1)` on `n_samples` points of `B(x̄, δ) ∩ S`.
/// Points already in `Solv` are left out of the ratio.
pub fn verify_error_bound(p: &IGEProblem, alpha: f64, delta: f64, n_samples: usize, seed: u64) -> Result<ErrorBoundReport> {
    if !(alpha > 1.0) || !(delta > 0.0) {
        return Err(Error::InvalidInput("the error bound needs α > 1 and δ > 0".into()));
    }
    if !membership_in_solutions(p, &p.reference)? {
        return Err(Error::ReferenceNotSolution);
    }
    let dist = SolutionDistance::new(p)?;
    let bound = 1.0 / (alpha - 1.0);
    let mut samples = Vec::new();
    let mut max_ratio = 0.0f64;
    for x in sample_points(p, delta, n_samples + 1, seed)?.into_iter().skip(1) {
        let d = dist.distance(&x)?;
        if d <= p.tol.feas_tol * vec_ops::norm(&x).max(1.0) {
            continue;
        }
        let e = excess_function(p, &x)?.value();
        let ratio = if e > 0.0 { d / e } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
        samples.push(ErrorBoundSample { x, distance: d, excess: e, ratio });
    }
    let passed = max_ratio <= bound + p.tol.sample_tol;
    Ok(ErrorBoundReport { alpha, delta, samples, max_ratio, bound, passed, source: dist.source() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContingentTrace {
    pub member: bool,
    /// `(t, dist(x̄ + tv, Solv)/t)` for `t = t₀·2^{-k}`.
    pub ratios: Vec<(f64, f64)>,
    pub source: DistanceSource,
}

/// Finite-grid evidence for `v ∈ T(Solv)(x̄)` from the lower Dini characterization.
pub fn contingent_membership(p: &IGEProblem, v: &[f64], t0: f64, k: usize) -> Result<ContingentTrace> {
    if !membership_in_solutions(p, &p.reference)? {
        return Err(Error::ReferenceNotSolution);
    }
    let dist = SolutionDistance::new(p)?;
    contingent_with(p, &dist, v, t0, k)
}

fn contingent_with(p: &IGEProblem, dist: &SolutionDistance<'_>, v: &[f64], t0: f64, k: usize) -> Result<ContingentTrace> {
    let mut ratios = Vec::with_capacity(k + 1);
    let mut min_ratio = f64::INFINITY;
    for i in 0..=k {
        let t = t0 / math::powi(2.0, i as u32);
        let r = dist.distance(&vec_ops::axpy(&p.reference, t, v))? / t;
        min_ratio = min_ratio.min(r);
        ratios.push((t, r));
    }
    Ok(ContingentTrace { member: min_ratio <= p.tol.sample_tol, ratios, source: dist.source() })
}

/// Evidence that `F` is metrically `C`-increasing near `x̄`.
#[derive(Clone, Debug, PartialEq)]
pub enum IncreaseEvidence {
    Certificate { eta: f64 },
    Definitional { alpha: f64 },
    Missing,
}

/// The checkable hypotheses shared by the approximation theorems.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypotheses {
    pub residuals: PrederivativeReport,
    pub increase: IncreaseEvidence,
}

impl Hypotheses {
    /// Prederivative residuals at `x̄` and, when the fan allows it, a localized certificate on
    /// `B(x̄, δ)`.
    pub fn gather(p: &IGEProblem, h: &Fan, delta: f64, grid: &IncreaseGrid) -> Result<Self> {
        let residuals = prederivative_residuals(&p.mapping, h, &p.reference, &DEFAULT_RADII, 8, grid.seed, &p.tol)?;
        let xs = sample_points(p, delta, grid.x_samples, grid.seed)?;
        let increase = match certificate_at_points(p, h, delta, &xs)? {
            Some(c) if residuals.passes_strict(DEFAULT_RESIDUAL_LEVEL) => IncreaseEvidence::Certificate { eta: c.eta },
            _ => IncreaseEvidence::Missing,
        };
        Ok(Hypotheses { residuals, increase })
    }

    pub fn outer_ok(&self) -> bool {
        self.residuals.passes_outer(DEFAULT_RESIDUAL_LEVEL)
    }

    pub fn inner_ok(&self) -> bool {
        self.residuals.passes_inner(DEFAULT_RESIDUAL_LEVEL)
    }

    pub fn increase_ok(&self) -> bool {
        !matches!(self.increase, IncreaseEvidence::Missing)
    }
}

/// A cone together with the hypotheses that failed to be certified (empty when certified).
#[derive(Clone, Debug, PartialEq)]
pub struct Approximation {
    pub cone: HCone,
    pub unverified: Vec<String>,
}

impl Approximation {
    pub fn certified(&self) -> bool {
        self.unverified.is_empty()
    }
}

/// `H⁺(C) ∩ T(S)(x̄)`.
pub fn inner_approximation(p: &IGEProblem, h: &Fan, hyp: &Hypotheses) -> Result<Approximation> {
    let cone = h.upper_inverse(&p.cone)?.intersect(&p.set.tangent_cone(&p.reference, &p.tol)?)?;
    let mut unverified = Vec::new();
    if !hyp.outer_ok() {
        unverified.push("outer prederivative".into());
    }
    if !hyp.increase_ok() {
        unverified.push("metric increase".into());
    }
    Ok(Approximation { cone, unverified })
}

/// Rows of `C` active at some point of `F(x̄)`: a row is active somewhere iff its minimum over
/// a piece (attained at a vertex, rays being in `C`) is zero.
fn touched_rows(p: &IGEProblem) -> Result<Vec<usize>> {
    let fx = p.mapping.evaluate(&p.reference)?;
    let mut rows = Vec::new();
    for (j, a) in p.cone.rows().iter().enumerate() {
        let len = vec_ops::norm(a);
        let touched = fx.pieces().iter().any(|piece| {
            piece
                .vertices()
                .iter()
                .any(|v| vec_ops::dot(a, v) <= p.tol.feas_tol * len * vec_ops::norm(v).max(1.0))
        });
        if touched {
            rows.push(j);
        }
    }
    Ok(rows)
}

/// `[∩_{y ∈ F(x̄) ∩ bd C} H⁺(T(C)(y))] ∩ T(S)(x̄)`. Since `T(C)(y)` is cut out by the rows active
/// at `y`, the intersection over `y` keeps exactly the rows active somewhere on `F(x̄)`.
pub fn outer_approximation(p: &IGEProblem, h: &Fan, hyp: &Hypotheses) -> Result<Approximation> {
    if !membership_in_solutions(p, &p.reference)? {
        return Err(Error::ReferenceNotSolution);
    }
    let rows = touched_rows(p)?;
    if rows.is_empty() {
        return Err(Error::BoundaryEmpty);
    }
    let face = HCone::new(p.cone.dim(), rows.iter().map(|&j| p.cone.rows()[j].clone()).collect())?;
    let cone = h.upper_inverse(&face)?.intersect(&p.set.tangent_cone(&p.reference, &p.tol)?)?;
    let mut unverified = Vec::new();
    if !hyp.inner_ok() {
        unverified.push("inner prederivative".into());
    }
    Ok(Approximation { cone, unverified })
}

/// Both approximations and whether they coincide (decided by LP cone inclusion).
#[derive(Clone, Debug, PartialEq)]
pub struct ConeApproximation {
    pub inner: Approximation,
    pub outer: Option<Approximation>,
    pub equal: bool,
}

pub fn approximate_tangent_cone(p: &IGEProblem, h: &Fan, hyp: &Hypotheses) -> Result<ConeApproximation> {
    let inner = inner_approximation(p, h, hyp)?;
    let outer = match outer_approximation(p, h, hyp) {
        Ok(o) => Some(o),
        Err(Error::BoundaryEmpty) => None,
        Err(e) => return Err(e),
    };
    let equal = match &outer {
        Some(o) => o.cone.is_subset_of(&inner.cone, &p.tol)? && inner.cone.is_subset_of(&o.cone, &p.tol)?,
        None => false,
    };
    Ok(ConeApproximation { inner, outer, equal })
}

/// `T(Solv)(x̄) = H⁺(C) ∩ T(S)(x̄)` when `0 ∈ F(x̄)`, `H` is an outer and inner prederivative and
/// increase evidence is attached; otherwise names the failing hypothesis.
pub fn exact_tangent_cone(p: &IGEProblem, h: &Fan, hyp: &Hypotheses) -> Result<HCone> {
    let fx = p.mapping.evaluate(&p.reference)?;
    let zero = vec![0.0; p.mapping.out_dim()];
    if dist_point_to(&zero, &fx, &p.tol)?.distance > p.tol.feas_tol {
        return Err(Error::NotApplicable("0 ∈ F(x̄) fails".into()));
    }
    if !hyp.outer_ok() {
        return Err(Error::NotApplicable("H is not an outer prederivative at x̄".into()));
    }
    if !hyp.inner_ok() {
        return Err(Error::NotApplicable("H is not an inner prederivative at x̄".into()));
    }
    if !hyp.increase_ok() {
        return Err(Error::NotApplicable("no evidence of metric C-increase".into()));
    }
    Ok(inner_approximation(p, h, hyp)?.cone)
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProbeSummary {
    pub checked: usize,
    /// Directions within `margin` of the cone boundary.
    pub skipped: usize,
    pub disagreements: usize,
}

/// Compares cone membership with contingent evidence along `directions`, skipping those whose
/// normalized margin lies within `margin` of zero.
pub fn probe_cone(p: &IGEProblem, cone: &HCone, directions: &[Vec<f64>], margin: f64, t0: f64, k: usize) -> Result<ProbeSummary> {
    let dist = SolutionDistance::new(p)?;
    let mut out = ProbeSummary::default();
    for v in directions {
        let m = cone.margin(v) / vec_ops::norm(v).max(1e-300);
        if m.abs() <= margin {
            out.skipped += 1;
            continue;
        }
        out.checked += 1;
        if contingent_with(p, &dist, v, t0, k)?.member != (m > 0.0) {
            out.disagreements += 1;
        }
    }
    Ok(out)
}

/// Sign agreement of two cones along `directions`; disagreements only count when both margins
/// exceed `margin` in absolute value.
pub fn compare_cones(a: &HCone, b: &HCone, directions: &[Vec<f64>], margin: f64) -> Result<ProbeSummary> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("cones in R^{} and R^{}", a.dim(), b.dim())));
    }
    let mut out = ProbeSummary::default();
    for v in directions {
        let len = vec_ops::norm(v).max(1e-300);
        let (ma, mb) = (a.margin(v) / len, b.margin(v) / len);
        if ma.abs() <= margin || mb.abs() <= margin {
            out.skipped += 1;
            continue;
        }
        out.checked += 1;
        if (ma > 0.0) != (mb > 0.0) {
            out.disagreements += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{MappingPiece, Polynomial, PolytopicMapping, VertexPath};
    use crate::numkit::{Matrix, Tolerances};

    fn swap() -> Matrix {
        Matrix::from_rows(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn problem(maps: Vec<Matrix>, set: Polyhedron, xbar: Vec<f64>) -> IGEProblem {
        let f = PolytopicMapping::affine(2, 2, maps.into_iter().map(|a| (a, vec![0.0; 2])).collect(), vec![]).unwrap();
        IGEProblem::new(f, HCone::orthant(2), set, xbar, Tolerances::default()).unwrap()
    }

    fn failure_problem() -> IGEProblem {
        let path = VertexPath::Polynomial { components: vec![Polynomial::new(vec![(vec![2], -1.0)])] };
        let f = PolytopicMapping::new(1, 1, vec![MappingPiece { paths: vec![path], rays: vec![vec![1.0]] }]).unwrap();
        IGEProblem::new(f, HCone::orthant(1), Polyhedron::whole_space(1), vec![0.0], Tolerances::default()).unwrap()
    }

    fn lshape_problem() -> IGEProblem {
        let diag = || VertexPath::affine(Matrix::from_rows(1, &[vec![1.0], vec![1.0]]).unwrap(), vec![0.0, 0.0]).unwrap();
        let f = PolytopicMapping::new(
            1,
            2,
            vec![
                MappingPiece { paths: vec![diag()], rays: vec![vec![0.0, 1.0]] },
                MappingPiece { paths: vec![diag()], rays: vec![vec![1.0, 0.0]] },
            ],
        )
        .unwrap();
        IGEProblem::new(f, HCone::orthant(2), Polyhedron::whole_space(1), vec![0.0], Tolerances::default()).unwrap()
    }

    fn grid() -> IncreaseGrid {
        IncreaseGrid { x_samples: 6, directions: 16, radii: 3, ..IncreaseGrid::default() }
    }

    #[test]
    fn error_bound_identity() {
        let p = problem(vec![Matrix::identity(2)], Polyhedron::whole_space(2), vec![0.0, 0.0]);
        let rep = verify_error_bound(&p, 1.5, 0.5, 64, 3).unwrap();
        assert!(rep.passed && rep.source == DistanceSource::Exact);
        assert!(rep.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn error_bound_failure_example() {
        let p = failure_problem();
        let rep = verify_error_bound(&p, 2.0, 0.1, 16, 3).unwrap();
        assert!(!rep.passed && rep.source == DistanceSource::Oracle);
        for s in &rep.samples {
            assert!((s.ratio * s.x[0].abs() - 1.0).abs() <= 1e-5, "{s:?}");
        }
    }

    #[test]
    fn error_bound_lshape() {
        let p = lshape_problem();
        let rep = verify_error_bound(&p, 1.9, 0.5, 32, 3).unwrap();
        assert!(rep.passed && rep.source == DistanceSource::Exact);
        assert!((rep.max_ratio - 1.0 / libm::sqrt(2.0)).abs() < 1e-9);
    }

    #[test]
    fn contingent_examples() {
        let p = problem(vec![Matrix::identity(2)], Polyhedron::whole_space(2), vec![0.0, 0.0]);
        let m = contingent_membership(&p, &[1.0, 0.0], 1.0, 6).unwrap();
        assert!(m.member && m.ratios.iter().all(|(_, r)| *r == 0.0));
        let m = contingent_membership(&p, &[-1.0, 0.0], 1.0, 6).unwrap();
        assert!(!m.member && m.ratios.iter().all(|(_, r)| (r - 1.0).abs() < 1e-12));
        let l = lshape_problem();
        assert!(contingent_membership(&l, &[1.0], 1.0, 6).unwrap().member);
        assert!(!contingent_membership(&l, &[-1.0], 1.0, 6).unwrap().member);
    }

    #[test]
    fn oracle_matches_exact_distance() {
        let p = lshape_problem();
        let exact = SolutionDistance::new(&p).unwrap();
        let oracle = SolutionDistance { p: &p, exact: None };
        for x in [-0.7, -0.1, 0.3] {
            assert!((exact.distance(&[x]).unwrap() - oracle.distance(&[x]).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn approximations() {
        let id = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let p = problem(vec![Matrix::identity(2)], Polyhedron::whole_space(2), vec![0.0, 0.0]);
        let hyp = Hypotheses::gather(&p, &id, 0.5, &grid()).unwrap();
        assert!(hyp.increase_ok() && hyp.outer_ok() && hyp.inner_ok());
        let exact = exact_tangent_cone(&p, &id, &hyp).unwrap();
        assert!(exact.is_subset_of(&HCone::orthant(2), &p.tol).unwrap());
        assert!(HCone::orthant(2).is_subset_of(&exact, &p.tol).unwrap());
        let both = approximate_tangent_cone(&p, &id, &hyp).unwrap();
        assert!(both.equal && both.inner.certified());

        let ds = Fan::new(vec![Matrix::identity(2), swap()]).unwrap();
        let q = problem(vec![Matrix::identity(2), swap()], Polyhedron::whole_space(2), vec![0.0, 0.0]);
        let hyp = Hypotheses::gather(&q, &ds, 0.5, &grid()).unwrap();
        let inner = inner_approximation(&q, &ds, &hyp).unwrap();
        assert!(inner.cone.is_subset_of(&HCone::orthant(2), &q.tol).unwrap());
        assert!(HCone::orthant(2).is_subset_of(&inner.cone, &q.tol).unwrap());
        let dirs = sampling::direction_grid(2, 64, 1);
        let summary = probe_cone(&q, &inner.cone, &dirs, 1e-6, 1.0, 4).unwrap();
        assert_eq!(summary.disagreements, 0);

        let half = Polyhedron::new(2, vec![vec![-1.0, 0.0]], vec![0.0]).unwrap();
        let r = problem(vec![Matrix::identity(2)], half, vec![0.0, 0.0]);
        let hyp = Hypotheses::gather(&r, &id, 0.5, &grid()).unwrap();
        let inner = inner_approximation(&r, &id, &hyp).unwrap().cone;
        assert!(inner.contains(&[0.0, 1.0], 0.0) && !inner.contains(&[1.0, 1.0], 1e-9) && !inner.contains(&[-1.0, 1.0], 1e-9));
    }

    #[test]
    fn outer_with_facet_contact() {
        // F(x) = conv{(0,1), (1,2)} + x: only the row y₁ ≥ 0 is touched at x̄ = 0
        let f = PolytopicMapping::affine(
            2,
            2,
            vec![(Matrix::identity(2), vec![0.0, 1.0]), (Matrix::identity(2), vec![1.0, 2.0])],
            vec![],
        )
        .unwrap();
        let p = IGEProblem::new(f, HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        let h = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let hyp = Hypotheses::gather(&p, &h, 0.5, &grid()).unwrap();
        let outer = outer_approximation(&p, &h, &hyp).unwrap();
        assert!(outer.cone.contains(&[1.0, -5.0], 0.0) && !outer.cone.contains(&[-1.0, 5.0], 1e-9));
        assert!(matches!(exact_tangent_cone(&p, &h, &hyp), Err(Error::NotApplicable(_))));

        let inside = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![1.0, 1.0])], vec![]).unwrap();
        let q = IGEProblem::new(inside, HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        assert_eq!(outer_approximation(&q, &h, &hyp), Err(Error::BoundaryEmpty));
    }

    #[test]
    fn reference_must_solve() {
        let p = problem(vec![Matrix::identity(2)], Polyhedron::whole_space(2), vec![-1.0, 0.0]);
        assert_eq!(verify_error_bound(&p, 1.5, 0.1, 4, 1), Err(Error::ReferenceNotSolution));
    }
}
