//! Dense two-phase tableau simplex.
//!
//! Problems are stated over original variables with arbitrary (possibly infinite) bounds and
//! `≤ / ≥ / =` rows, then rewritten into `min cᵀx, Ax = b, x ≥ 0, b ≥ 0` with one artificial
//! column per row. The artificial columns stay in the tableau after phase one: their reduced costs
//! read off the dual values of the final basis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{vec_ops, Tolerances};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Linear program over `n` variables. Variables default to `[0, +∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub maximize: bool,
    pub constraints: Vec<LpConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            maximize: true,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        LpProblem { maximize: false, ..LpProblem::maximize(objective) }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(LpConstraint { coeffs, sense, rhs });
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.add_constraint(coeffs, sense, rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch("bound vectors".into()));
        }
        if !vec_ops::is_finite(&self.objective) {
            return Err(Error::NonFinite("LP objective"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch(format!("LP row {i}")));
            }
            if !vec_ops::is_finite(&c.coeffs) || !c.rhs.is_finite() {
                return Err(Error::NonFinite("LP constraint"));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(Error::InvalidInput(format!("bounds of variable {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`].
///
/// `duals[i]` is the sensitivity `∂ objective / ∂ rhs_i` of constraint `i` at the optimal basis,
/// so for a maximization with `≤` rows the duals are nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, n: usize, m: usize) -> Self {
        LpSolution { status, x: vec![0.0; n], objective: f64::NAN, duals: vec![0.0; m] }
    }
}

/// x_orig = offset + sign·x[pos] − x[neg]
#[derive(Clone, Copy)]
struct VarMap {
    pos: usize,
    neg: Option<usize>,
    offset: f64,
    sign: f64,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;

pub fn solve_lp(p: &LpProblem, tol: &Tolerances) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    let m_orig = p.constraints.len();

    // variable substitution
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new(); // (std column, upper bound on it)
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap { pos: ncols, neg: None, offset: lo, sign: 1.0 });
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap { pos: ncols, neg: None, offset: hi, sign: -1.0 });
            ncols += 1;
        } else {
            maps.push(VarMap { pos: ncols, neg: Some(ncols + 1), offset: 0.0, sign: 1.0 });
            ncols += 2;
        }
    }
    let nstruct = ncols;

    // rows in standard form before slacks: (coeffs over struct cols, sense, rhs)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(m_orig + bound_rows.len());
    for c in &p.constraints {
        let mut a = vec![0.0; nstruct];
        let mut rhs = c.rhs;
        for (j, &cj) in c.coeffs.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let vm = maps[j];
            a[vm.pos] += cj * vm.sign;
            if let Some(ng) = vm.neg {
                a[ng] -= cj;
            }
            rhs -= cj * vm.offset;
        }
        rows.push((a, c.sense, rhs));
    }
    for &(col, ub) in &bound_rows {
        let mut a = vec![0.0; nstruct];
        a[col] = 1.0;
        rows.push((a, Sense::Le, ub));
    }
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let art0 = nstruct + nslack;
    let ntot = art0 + m;

    // cost in min form over std columns
    let obj_sign = if p.maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; ntot];
    for (j, &cj) in p.objective.iter().enumerate() {
        let vm = maps[j];
        cost[vm.pos] += obj_sign * cj * vm.sign;
        if let Some(ng) = vm.neg {
            cost[ng] -= obj_sign * cj;
        }
    }

    let mut tab = vec![vec![0.0; ntot + 1]; m];
    let mut row_sign = vec![1.0; m];
    let mut slack = nstruct;
    for (i, (a, sense, rhs)) in rows.into_iter().enumerate() {
        tab[i][..nstruct].copy_from_slice(&a);
        match sense {
            Sense::Le => {
                tab[i][slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                tab[i][slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        tab[i][ntot] = rhs;
        if rhs < 0.0 {
            row_sign[i] = -1.0;
            for v in tab[i].iter_mut() {
                *v = -*v;
            }
        }
        tab[i][art0 + i] = 1.0;
    }
    let basis: Vec<usize> = (art0..art0 + m).collect();
    let scale_b = tab.iter().fold(1.0f64, |acc, r| acc.max(r[ntot].abs()));

    let mut simplex = Tableau { tab, basis, ntot, iter: 0, max_iter: tol.max_lp_iter };

    // phase one
    let mut phase1_cost = vec![0.0; ntot];
    for c in phase1_cost.iter_mut().skip(art0) {
        *c = 1.0;
    }
    let mut obj = simplex.reduced_costs(&phase1_cost);
    match simplex.run(&mut obj, ntot)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => unreachable!("phase one is bounded below"),
    }
    let infeas = -obj[ntot];
    if infeas > tol.feas_tol * scale_b {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, n, m_orig));
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if simplex.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&c| simplex.tab[r][c].abs() > 1e-9) {
                simplex.pivot(r, c);
            }
        }
    }

    // phase two: artificial columns never re-enter
    let mut obj = simplex.reduced_costs(&cost);
    if let Outcome::Unbounded = simplex.run(&mut obj, art0)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, n, m_orig));
    }

    let mut xstd = vec![0.0; ntot];
    for (r, &b) in simplex.basis.iter().enumerate() {
        xstd[b] = simplex.tab[r][ntot];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|vm| vm.offset + vm.sign * xstd[vm.pos] - vm.neg.map_or(0.0, |ng| xstd[ng]))
        .collect();
    let objective = vec_ops::dot(&p.objective, &x);
    let duals = (0..m_orig)
        .map(|i| {
            let y_std = -obj[art0 + i];
            obj_sign * row_sign[i] * y_std
        })
        .collect();
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, duals })
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    tab: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ntot: usize,
    iter: usize,
    max_iter: usize,
}

impl Tableau {
    /// Reduced-cost row `c_j − c_Bᵀ B⁻¹ a_j`, last entry `−c_Bᵀ x_B`.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.ntot + 1];
        obj[..self.ntot].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, t) in obj.iter_mut().zip(&self.tab[r]) {
                    *o -= cb * t;
                }
            }
        }
        obj
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let pv = self.tab[r][c];
        for v in self.tab[r].iter_mut() {
            *v /= pv;
        }
        let prow = self.tab[r].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(&prow) {
                    *v -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes with entering columns restricted to `0..allowed`. Dantzig pricing switches to
    /// Bland's rule after `3·(rows + cols)` iterations.
    fn run(&mut self, obj: &mut [f64], allowed: usize) -> Result<Outcome> {
        let m = self.tab.len();
        let bland_after = 3 * (m + self.ntot);
        let mut local = 0usize;
        loop {
            if self.iter >= self.max_iter {
                return Err(Error::IterationLimit { routine: "simplex", limit: self.max_iter });
            }
            let bland = local >= bland_after;
            let scale = obj[..allowed].iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let entering = if bland {
                (0..allowed).find(|&j| obj[j] < -COST_TOL * scale)
            } else {
                (0..allowed)
                    .filter(|&j| obj[j] < -COST_TOL * scale)
                    .min_by(|&a, &b| obj[a].partial_cmp(&obj[b]).expect("finite"))
            };
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.tab[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.tab[r][self.ntot].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie
                                || tie && self.basis[r] < self.basis[lr]
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, c);
            let f = obj[c];
            for (o, t) in obj.iter_mut().zip(&self.tab[r]) {
                *o -= f * t;
            }
            obj[c] = 0.0;
            self.iter += 1;
            local += 1;
        }
    }
}
