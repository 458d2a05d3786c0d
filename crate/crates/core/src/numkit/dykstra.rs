use alloc::vec;
use alloc::vec::Vec;

use super::{solve_lp, vec_ops, LpProblem, LpStatus, Sense, Tolerances};
use crate::{Error, Result};

/// Closed halfspace `{x : normal·x ≥ offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    fn project(&self, x: &[f64], norm_sq: f64) -> Vec<f64> {
        let v = vec_ops::dot(&self.normal, x) - self.offset;
        if v >= 0.0 {
            x.to_vec()
        } else {
            vec_ops::axpy(x, -v / norm_sq, &self.normal)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Completed sweeps over all halfspaces.
    pub sweeps: usize,
}

/// Euclidean projection of `y` onto `∩ halfspaces` by Dykstra's alternating projections.
///
/// Nonemptiness is checked by an LP first. Sweeps stop once a full pass moves the iterate by less
/// than `kkt_tol` (relative to `max(1, |y|)`) and every halfspace holds within `feas_tol`.
pub fn dykstra_project(halfspaces: &[Halfspace], y: &[f64], tol: &Tolerances) -> Result<Projection> {
    let n = y.len();
    if !vec_ops::is_finite(y) {
        return Err(Error::NonFinite("projection point"));
    }
    let mut active: Vec<(&Halfspace, f64)> = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        if h.normal.len() != n {
            return Err(Error::DimensionMismatch("halfspace normal".into()));
        }
        let nsq = vec_ops::dot(&h.normal, &h.normal);
        if nsq <= 1e-300 {
            if h.offset > tol.feas_tol {
                return Err(Error::EmptyIntersection);
            }
            continue;
        }
        active.push((h, nsq));
    }
    let violation = |x: &[f64]| {
        active.iter().fold(0.0f64, |m, (h, nsq)| {
            m.max((h.offset - vec_ops::dot(&h.normal, x)) / libm::sqrt(*nsq))
        })
    };
    if violation(y) <= 0.0 {
        return Ok(Projection { point: y.to_vec(), distance: 0.0, sweeps: 0 });
    }

    let mut lp = LpProblem::minimize(vec![0.0; n]);
    for j in 0..n {
        lp.set_free(j);
    }
    for (h, _) in &active {
        lp.add_constraint(h.normal.clone(), Sense::Ge, h.offset);
    }
    if solve_lp(&lp, tol)?.status == LpStatus::Infeasible {
        return Err(Error::EmptyIntersection);
    }

    let scale = vec_ops::norm(y).max(1.0);
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; n]; active.len()];
    for sweep in 1..=tol.max_dykstra_iter {
        let start = x.clone();
        for (i, (h, nsq)) in active.iter().enumerate() {
            let z = vec_ops::add(&x, &incr[i]);
            let p = h.project(&z, *nsq);
            incr[i] = vec_ops::sub(&z, &p);
            x = p;
        }
        if vec_ops::dist(&start, &x) < tol.kkt_tol * scale && violation(&x) <= tol.feas_tol * scale {
            let distance = vec_ops::dist(&x, y);
            return Ok(Projection { point: x, distance, sweeps: sweep });
        }
    }
    Err(Error::IterationLimit { routine: "dykstra", limit: tol.max_dykstra_iter })
}
