//! Metric `C`-increase: the definitional sampling check, localized certificates from strict
//! prederivatives, and bracketing of the exact bound.
//!
//! The definitional check asks, for sampled `x ∈ B(x̄, δ) ∩ S` and radii `r < δ`, for some
//! `z ∈ B(x, r) ∩ S` with `B(F(z), αr) ⊆ B(F(x) + C, r)`. The left ball is replaced by the
//! circumscribed ball polytope, so a pass never relies on the discretization in its favour.

use alloc::vec;
use alloc::vec::Vec;

use crate::cones::HCone;
use crate::fans::{increase_certificate_within, prederivative_residuals, Fan, DEFAULT_RADII, DEFAULT_RESIDUAL_LEVEL};
use crate::mappings::{induced_fan, IGEProblem};
use crate::math;
use crate::numkit::{vec_ops, Tolerances};
use crate::sampling;
use crate::setvalues::{BallPolytope, ConvexPiece, SetExpr};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IncreaseGrid {
    pub x_samples: usize,
    pub directions: usize,
    pub radii: usize,
    /// Sides of the planar ball polygon.
    pub ball_sides: usize,
    pub seed: u64,
}

impl Default for IncreaseGrid {
    fn default() -> Self {
        IncreaseGrid { x_samples: 32, directions: 64, radii: 8, ball_sides: 64, seed: sampling::DEFAULT_SEED }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncreaseCheckReport {
    pub alpha: f64,
    pub delta: f64,
    /// Number of `(x, r)` pairs examined.
    pub samples: usize,
    /// `max_{(x,r)} min_z` of the inclusion defect, clamped below at zero.
    pub worst_defect: f64,
    /// The `(x, r)` pair attaining `worst_defect`, when positive.
    pub witness: Option<(Vec<f64>, f64)>,
    pub passed: bool,
}

/// Points of `B(x̄, δ) ∩ S`: `x̄` first, then an even grid on the line or seeded ball samples.
pub fn sample_points(p: &IGEProblem, delta: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let xbar = &p.reference;
    let n = xbar.len();
    let mut out = vec![xbar.clone()];
    if n == 1 {
        let k = count.max(2);
        for i in 0..k {
            let x = vec![xbar[0] - delta + 2.0 * delta * i as f64 / (k - 1) as f64];
            if p.set.contains(&x, &p.tol) && x != *xbar {
                out.push(x);
            }
        }
        return Ok(out);
    }
    let mut rng = sampling::rng(seed);
    let mut attempts = 0;
    while out.len() < count.max(1) && attempts < 200 * count.max(1) {
        attempts += 1;
        let x = sampling::in_ball(&mut rng, xbar, delta);
        if p.set.contains(&x, &p.tol) {
            out.push(x);
        } else {
            // the projection onto S stays in the ball because x̄ ∈ S
            let proj = p.set.project(&x, &p.tol)?.point;
            if vec_ops::dist(&proj, xbar) <= delta && p.set.contains(&proj, &p.tol) {
                out.push(proj);
            }
        }
    }
    Ok(out)
}

fn radii_grid(delta: f64, count: usize) -> Vec<f64> {
    (0..count.max(1)).map(|k| 0.9 * delta / math::powi(2.0, k as u32)).collect()
}

/// `F(x) + C` with pieces contained in another piece removed.
fn right_set(p: &IGEProblem, x: &[f64], cone_rays: &[Vec<f64>]) -> Result<SetExpr> {
    let fx = p.mapping.evaluate(x)?.with_rays(cone_rays)?;
    let mut keep: Vec<ConvexPiece> = Vec::new();
    for a in fx.pieces() {
        if keep.iter().any(|b| is_inside(a, b, &p.tol)) {
            continue;
        }
        keep.retain(|b| !is_inside(b, a, &p.tol));
        keep.push(a.clone());
    }
    SetExpr::new(keep)
}

fn is_inside(a: &ConvexPiece, b: &ConvexPiece, tol: &Tolerances) -> bool {
    a.vertices().iter().all(|v| b.project(v, tol).is_ok_and(|d| d.distance <= 1e-12 * (1.0 + vec_ops::norm(v))))
        && a.rays().iter().all(|r| b.recedes_along(r, tol).unwrap_or(false))
}

struct Tester<'a> {
    p: &'a IGEProblem,
    ball: Vec<Vec<f64>>,
}

impl Tester<'_> {
    /// Defect `sup dist(F(z) + αr·P, D) − r` clamped at zero; returns early with a value above
    /// `bound` once that is certain.
    fn defect(&self, fz: &SetExpr, d: &SetExpr, alpha: f64, r: f64, bound: f64) -> Result<f64> {
        let tol = &self.p.tol;
        for piece in fz.pieces() {
            for ray in piece.rays() {
                let mut ok = false;
                for q in d.pieces() {
                    ok |= q.recedes_along(ray, tol)?;
                }
                if !ok {
                    return Ok(f64::INFINITY);
                }
            }
        }
        let s = alpha * r;
        let mut worst = 0.0f64;
        let multi = d.pieces().len() > 1;
        for piece in fz.pieces() {
            let mut anchors: Vec<Vec<f64>> = piece.vertices().to_vec();
            if multi {
                // along rays the distance to a union need not be monotone
                for v in piece.vertices() {
                    for ray in piece.rays() {
                        let u = vec_ops::normalized(ray).expect("nonzero ray");
                        for t in [1.0, 4.0, 16.0] {
                            anchors.push(vec_ops::axpy(v, t * r, &u));
                        }
                    }
                }
            }
            for v in &anchors {
                for b in &self.ball {
                    let y = vec_ops::axpy(v, s, b);
                    let mut dist = f64::INFINITY;
                    for q in d.pieces() {
                        dist = dist.min(q.project(&y, tol)?.distance);
                    }
                    worst = worst.max(dist - r);
                    if worst > bound {
                        return Ok(worst);
                    }
                }
            }
        }
        Ok(worst.max(0.0))
    }
}

/// Sampling check of the increase inclusion at `α` on `B(x̄, δ)`. `hint` (typically a
/// certificate direction) is tried first as `z = x + r·hint/|hint|`.
pub fn check_increase_definitional(
    p: &IGEProblem,
    alpha: f64,
    delta: f64,
    grid: &IncreaseGrid,
    hint: Option<&[f64]>,
) -> Result<IncreaseCheckReport> {
    if !(alpha > 1.0) || !(delta > 0.0) {
        return Err(Error::InvalidInput("the increase check needs α > 1 and δ > 0".into()));
    }
    let n = p.in_dim();
    let m = p.mapping.out_dim();
    let cone_rays = p.cone.to_vcone()?.rays().to_vec();
    let ball = BallPolytope::new(m, grid.ball_sides)?.circumscribed();
    let tester = Tester { p, ball };

    let mut steps: Vec<Vec<f64>> = Vec::new();
    if let Some(u) = hint.and_then(vec_ops::normalized) {
        steps.push(u);
    }
    let dirs = sampling::direction_grid(n, grid.directions, grid.seed);
    steps.extend(dirs.iter().cloned());
    if n >= 2 {
        steps.extend(dirs.iter().map(|d| vec_ops::scale(d, 0.5)));
    }
    steps.push(vec![0.0; n]);

    let xs = sample_points(p, delta, grid.x_samples, grid.seed)?;
    let radii = radii_grid(delta, grid.radii);
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut samples = 0usize;
    for x in &xs {
        let d = right_set(p, x, &cone_rays)?;
        for &r in &radii {
            samples += 1;
            let mut best = f64::INFINITY;
            for step in &steps {
                let z = vec_ops::axpy(x, r, step);
                if !p.set.contains(&z, &p.tol) {
                    continue;
                }
                let fz = p.mapping.evaluate(&z)?;
                let val = tester.defect(&fz, &d, alpha, r, best)?;
                best = best.min(val);
                if best <= worst {
                    break;
                }
            }
            if best > worst {
                worst = best;
                witness = Some((x.clone(), r));
            }
        }
    }
    let passed = worst <= p.tol.sample_tol;
    Ok(IncreaseCheckReport { alpha, delta, samples, worst_defect: worst, witness: if passed { None } else { witness }, passed })
}

/// Per-point certificate `(x, u(x), η(x))` with `u(x) ∈ T(S)(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedCertificate {
    pub eta: f64,
    pub delta: f64,
    pub witnesses: Vec<Witness>,
}

/// Certificate LP restricted to `T(S)(x)` at every sampled `x`; `None` if any of them fails.
/// `h` must pass the strict prederivative residual test at `x̄`.
pub fn localized_certificate(p: &IGEProblem, h: &Fan, delta: f64, grid: &IncreaseGrid) -> Result<Option<LocalizedCertificate>> {
    let rep = prederivative_residuals(&p.mapping, h, &p.reference, &DEFAULT_RADII, 8, grid.seed, &p.tol)?;
    if !rep.passes_strict(DEFAULT_RESIDUAL_LEVEL) {
        return Err(Error::PreconditionFailed("the fan is not a strict prederivative at the reference point".into()));
    }
    certificate_at_points(p, h, delta, &sample_points(p, delta, grid.x_samples, grid.seed)?)
}

/// Same as [`localized_certificate`] on caller-chosen points, without the residual test.
pub fn certificate_at_points(p: &IGEProblem, h: &Fan, delta: f64, xs: &[Vec<f64>]) -> Result<Option<LocalizedCertificate>> {
    let mut witnesses = Vec::with_capacity(xs.len());
    let mut eta = f64::INFINITY;
    for x in xs {
        let t: HCone = p.set.tangent_cone(x, &p.tol)?;
        match increase_certificate_within(h, &p.cone, Some(&t), &p.tol)? {
            Some(c) if c.eta > p.tol.feas_tol => {
                eta = eta.min(c.eta);
                witnesses.push(Witness { x: x.clone(), u: c.u, eta: c.eta });
            }
            _ => return Ok(None),
        }
    }
    if witnesses.is_empty() {
        return Ok(None);
    }
    Ok(Some(LocalizedCertificate { eta, delta, witnesses }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundEstimate {
    /// `1 + η` from a localized certificate, when one exists.
    pub lower: Option<f64>,
    /// Smallest failing `α` found; `1` when even `α = 1.001` fails, `None` when every tested
    /// `α ≤ ALPHA_MAX` passes.
    pub upper: Option<f64>,
}

pub const ALPHA_STEP: f64 = 0.05;
pub const ALPHA_MAX: f64 = 4.0;

pub fn exact_bound_estimate(p: &IGEProblem, delta: f64, grid: &IncreaseGrid) -> Result<BoundEstimate> {
    let cert = match induced_fan(&p.mapping) {
        Ok(h) => localized_certificate(p, &h, delta, grid)?,
        Err(Error::NotAffine) | Err(Error::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };
    let hint = cert.as_ref().and_then(|c| c.witnesses.first().map(|w| w.u.clone()));
    let lower = cert.map(|c| 1.0 + c.eta);
    let passes = |a: f64| -> Result<bool> { Ok(check_increase_definitional(p, a, delta, grid, hint.as_deref())?.passed) };

    if !passes(1.001)? {
        return Ok(BoundEstimate { lower, upper: Some(1.0) });
    }
    let mut good = 1.001;
    let mut bad = None;
    let mut a = 1.0 + ALPHA_STEP;
    while a <= ALPHA_MAX + 1e-12 {
        if passes(a)? {
            good = a;
        } else {
            bad = Some(a);
            break;
        }
        a += ALPHA_STEP;
    }
    let Some(mut hi) = bad else {
        return Ok(BoundEstimate { lower, upper: None });
    };
    for _ in 0..6 {
        let mid = 0.5 * (good + hi);
        if passes(mid)? {
            good = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BoundEstimate { lower, upper: Some(hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Polyhedron;
    use crate::mappings::{MappingPiece, Polynomial, PolytopicMapping, VertexPath};
    use crate::numkit::Matrix;

    fn identity_problem(set: Polyhedron) -> IGEProblem {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2])], vec![]).unwrap();
        IGEProblem::new(f, HCone::orthant(2), set, vec![0.0, 0.0], Tolerances::default()).unwrap()
    }

    fn failure_problem() -> IGEProblem {
        let path = VertexPath::Polynomial { components: vec![Polynomial::new(vec![(vec![2], -1.0)])] };
        let f = PolytopicMapping::new(1, 1, vec![MappingPiece { paths: vec![path], rays: vec![vec![1.0]] }]).unwrap();
        IGEProblem::new(f, HCone::orthant(1), Polyhedron::whole_space(1), vec![0.0], Tolerances::default()).unwrap()
    }

    fn small() -> IncreaseGrid {
        IncreaseGrid { x_samples: 6, directions: 16, radii: 3, ..IncreaseGrid::default() }
    }

    #[test]
    fn failure_example_never_increases() {
        let p = failure_problem();
        for a in [1.1, 2.0] {
            let rep = check_increase_definitional(&p, a, 0.5, &small(), None).unwrap();
            assert!(!rep.passed);
            assert_eq!(rep.witness.as_ref().unwrap().0, vec![0.0]);
        }
        assert_eq!(exact_bound_estimate(&p, 0.5, &small()).unwrap().upper, Some(1.0));
    }

    #[test]
    fn identity_certificates() {
        let h = 1.0 / libm::sqrt(2.0);
        let fan = Fan::new(vec![Matrix::identity(2)]).unwrap();
        let p = identity_problem(Polyhedron::whole_space(2));
        let c = localized_certificate(&p, &fan, 0.5, &small()).unwrap().unwrap();
        assert!((c.eta - h).abs() < 1e-9);
        let q = identity_problem(Polyhedron::orthant(2));
        let c = localized_certificate(&q, &fan, 0.5, &small()).unwrap().unwrap();
        assert!((c.eta - h).abs() < 1e-9);
        for w in &c.witnesses {
            assert!(vec_ops::dist(&w.u, &[h, h]) < 1e-9);
        }
        let rep = check_increase_definitional(&q, 1.0 + 0.9 * h, 0.5, &small(), Some(&[h, h])).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn degenerate_cone_has_no_certificate() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2])], vec![]).unwrap();
        let ray = HCone::new(2, vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let p = IGEProblem::new(f, ray, Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        let fan = Fan::new(vec![Matrix::identity(2)]).unwrap();
        assert!(localized_certificate(&p, &fan, 0.5, &small()).unwrap().is_none());
    }

    #[test]
    fn single_valued_with_zero_cone_never_passes() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2])], vec![]).unwrap();
        let p = IGEProblem::new(f, HCone::zero(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        assert!(!check_increase_definitional(&p, 1.01, 0.5, &small(), None).unwrap().passed);
    }
}
