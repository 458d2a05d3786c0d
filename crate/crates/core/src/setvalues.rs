//! Generator-represented set values: finite unions of `conv(V) + cone(R)` pieces, point
//! distances and excesses.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cones::HCone;
use crate::math;
use crate::numkit::{simplex_nnls, vec_ops, Matrix, Tolerances};
use crate::{Error, Result};

/// `conv(vertices) + cone(rays)`, nonempty by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPiece {
    vertices: Vec<Vec<f64>>,
    rays: Vec<Vec<f64>>,
}

impl ConvexPiece {
    pub fn new(vertices: Vec<Vec<f64>>, rays: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidInput("a convex piece needs at least one vertex".into()));
        };
        let dim = first.len();
        for v in vertices.iter().chain(&rays) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!("expected length {dim}, got {}", v.len())));
            }
            if !vec_ops::is_finite(v) {
                return Err(Error::NonFinite("set generator"));
            }
        }
        // zero rays add nothing
        let rays = rays.into_iter().filter(|r| vec_ops::norm_inf(r) > 0.0).collect();
        Ok(ConvexPiece { vertices, rays })
    }

    pub fn point(p: Vec<f64>) -> Self {
        ConvexPiece { vertices: vec![p], rays: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    /// The same piece with extra recession directions.
    pub fn with_rays(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut rays = self.rays.clone();
        rays.extend(extra.iter().cloned());
        ConvexPiece::new(self.vertices.clone(), rays)
    }

    pub fn translate(&self, shift: &[f64]) -> Self {
        ConvexPiece {
            vertices: self.vertices.iter().map(|v| vec_ops::add(v, shift)).collect(),
            rays: self.rays.clone(),
        }
    }

    /// Nearest point and distance from `y`.
    pub fn project(&self, y: &[f64], tol: &Tolerances) -> Result<PointDistance> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch("point versus set".into()));
        }
        let mut cols = self.vertices.clone();
        cols.extend(self.rays.iter().cloned());
        let g = Matrix::from_columns(self.dim(), &cols)?;
        let fit = simplex_nnls(&g, self.vertices.len(), y, tol)?;
        let nearest = g.mul_vec(&fit.coeffs);
        Ok(PointDistance { distance: vec_ops::dist(&nearest, y), nearest, kkt_residual: fit.kkt_residual })
    }

    /// Whether `d` is a recession direction, i.e. lies in `cone(rays)` up to `tol·|d|`.
    pub fn recedes_along(&self, d: &[f64], tol: &Tolerances) -> Result<bool> {
        let scale = vec_ops::norm(d);
        if scale == 0.0 {
            return Ok(true);
        }
        if self.rays.is_empty() {
            return Ok(false);
        }
        let mut cols = vec![vec![0.0; self.dim()]];
        cols.extend(self.rays.iter().cloned());
        let g = Matrix::from_columns(self.dim(), &cols)?;
        let u = vec_ops::scale(d, 1.0 / scale);
        Ok(simplex_nnls(&g, 1, &u, tol)?.residual_norm <= tol.feas_tol)
    }
}

/// Finite union of convex pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct SetExpr {
    pieces: Vec<ConvexPiece>,
}

impl SetExpr {
    pub fn new(pieces: Vec<ConvexPiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput("a set expression needs at least one piece".into()));
        };
        let dim = first.dim();
        if pieces.iter().any(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch("pieces of different dimension".into()));
        }
        Ok(SetExpr { pieces })
    }

    pub fn single(piece: ConvexPiece) -> Self {
        SetExpr { pieces: vec![piece] }
    }

    pub fn point(p: Vec<f64>) -> Self {
        SetExpr::single(ConvexPiece::point(p))
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn pieces(&self) -> &[ConvexPiece] {
        &self.pieces
    }

    /// `S + cone(extra)` piecewise.
    pub fn with_rays(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let pieces = self.pieces.iter().map(|p| p.with_rays(extra)).collect::<Result<_>>()?;
        Ok(SetExpr { pieces })
    }

    /// Every vertex of every piece.
    pub fn vertices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.pieces.iter().flat_map(|p| p.vertices.iter())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointDistance {
    pub distance: f64,
    pub nearest: Vec<f64>,
    pub kkt_residual: f64,
}

/// `dist(y, S)` as the minimum over pieces.
pub fn dist_point_to(y: &[f64], s: &SetExpr, tol: &Tolerances) -> Result<PointDistance> {
    let mut best: Option<PointDistance> = None;
    for p in &s.pieces {
        let d = p.project(y, tol)?;
        if best.as_ref().map_or(true, |b| d.distance < b.distance) {
            best = Some(d);
        }
    }
    Ok(best.expect("nonempty union"))
}

/// Value of an excess, which may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Excess {
    Finite(f64),
    Infinite,
}

impl Excess {
    pub fn value(self) -> f64 {
        match self {
            Excess::Finite(v) => v,
            Excess::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Excess::Finite(_))
    }

    pub fn max(self, other: Excess) -> Excess {
        match (self, other) {
            (Excess::Finite(a), Excess::Finite(b)) => Excess::Finite(a.max(b)),
            _ => Excess::Infinite,
        }
    }
}

/// `exc(S, C) = sup_{s∈S} dist(s, C)`.
///
/// Infinite as soon as a ray of some piece leaves `C`; otherwise `dist(·, C)` is convex and does
/// not grow along the rays, so the supremum is attained at a vertex.
pub fn excess_over_cone(s: &SetExpr, c: &HCone, tol: &Tolerances) -> Result<Excess> {
    if s.dim() != c.dim() {
        return Err(Error::DimensionMismatch("set versus cone".into()));
    }
    for p in &s.pieces {
        for r in &p.rays {
            let u = vec_ops::normalized(r).expect("nonzero ray");
            if !c.contains(&u, tol.feas_tol) {
                return Ok(Excess::Infinite);
            }
        }
    }
    let mut worst = 0.0f64;
    for v in s.vertices() {
        worst = worst.max(c.distance(v, tol)?);
    }
    Ok(Excess::Finite(worst))
}

/// `exc(A, D)` for a single convex piece `D`: exact by the same vertex argument, with
/// recession of `D` replacing cone membership.
pub fn excess_over_piece(a: &SetExpr, d: &ConvexPiece, tol: &Tolerances) -> Result<Excess> {
    for p in &a.pieces {
        for r in &p.rays {
            if !d.recedes_along(r, tol)? {
                return Ok(Excess::Infinite);
            }
        }
    }
    let mut worst = 0.0f64;
    for v in a.vertices() {
        worst = worst.max(d.project(v, tol)?.distance);
    }
    Ok(Excess::Finite(worst))
}

/// `exc(A, B)` for unions. Exact when `B` has one piece; otherwise a lower estimate from
/// vertices, edge points and points along rays.
pub fn excess_between(a: &SetExpr, b: &SetExpr, tol: &Tolerances) -> Result<Excess> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("excess operands".into()));
    }
    if b.pieces.len() == 1 {
        return excess_over_piece(a, &b.pieces[0], tol);
    }
    let mut worst = 0.0f64;
    for p in &a.pieces {
        // rays and pairwise sums stand in for the whole recession cone of the piece
        let mut dirs: Vec<Vec<f64>> = p.rays.clone();
        for (i, r) in p.rays.iter().enumerate() {
            for w in &p.rays[i + 1..] {
                dirs.push(vec_ops::add(&vec_ops::normalized(r).expect("nonzero ray"), &vec_ops::normalized(w).expect("nonzero ray")));
            }
        }
        for r in &dirs {
            let mut bounded = false;
            for q in &b.pieces {
                bounded |= q.recedes_along(r, tol)?;
            }
            if !bounded {
                return Ok(Excess::Infinite);
            }
        }
        let mut probes: Vec<Vec<f64>> = p.vertices.clone();
        for (i, v) in p.vertices.iter().enumerate() {
            for w in &p.vertices[i + 1..] {
                for k in 1..16 {
                    let t = k as f64 / 16.0;
                    probes.push(vec_ops::add(&vec_ops::scale(v, 1.0 - t), &vec_ops::scale(w, t)));
                }
            }
            for r in &p.rays {
                let u = vec_ops::normalized(r).expect("nonzero ray");
                for k in 0..12 {
                    probes.push(vec_ops::axpy(v, math::powi(2.0, k) / 64.0, &u));
                }
            }
        }
        for y in &probes {
            worst = worst.max(dist_point_to(y, b, tol)?.distance);
        }
    }
    Ok(Excess::Finite(worst))
}

pub const BALL_DIMENSION_CAP: usize = 4;

/// Polytope inscribed in the unit ball together with the radius of a ball it contains.
///
/// In the plane the vertices are a regular `k`-gon. In dimensions three and four they are the
/// normalized points of a grid on the surface of the cube `[-1, 1]^m` with spacing `1/N`
/// (`N = 4` and `N = 2`), whose angular covering radius `θ` obeys `sin θ ≤ sqrt(m − 1)/(2N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPolytope {
    pub vertices: Vec<Vec<f64>>,
    pub inradius: f64,
}

impl BallPolytope {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if dim > BALL_DIMENSION_CAP {
            return Err(Error::DimensionGuard { dim, cap: BALL_DIMENSION_CAP });
        }
        let k = k.max(3);
        match dim {
            0 => Ok(BallPolytope { vertices: vec![Vec::new()], inradius: 1.0 }),
            1 => Ok(BallPolytope { vertices: vec![vec![1.0], vec![-1.0]], inradius: 1.0 }),
            2 => {
                let vertices = (0..k)
                    .map(|s| {
                        let a = 2.0 * math::PI * s as f64 / k as f64;
                        vec![math::cos(a), math::sin(a)]
                    })
                    .collect();
                Ok(BallPolytope { vertices, inradius: math::cos(math::PI / k as f64) })
            }
            _ => {
                let n: i64 = if dim == 3 { 4 } else { 2 };
                let side = (2 * n + 1) as usize;
                let mut vertices = Vec::new();
                for idx in 0..side.pow(dim as u32) {
                    let mut rest = idx;
                    let mut g = vec![0.0; dim];
                    let mut on_surface = false;
                    for gi in g.iter_mut() {
                        let c = (rest % side) as i64 - n;
                        rest /= side;
                        on_surface |= c.abs() == n;
                        *gi = c as f64 / n as f64;
                    }
                    if on_surface {
                        vertices.push(vec_ops::normalized(&g).expect("surface point"));
                    }
                }
                let sin = math::sqrt((dim - 1) as f64) / (2.0 * n as f64);
                Ok(BallPolytope { vertices, inradius: math::sqrt(1.0 - sin * sin) })
            }
        }
    }

    /// Hausdorff distance from the polytope to the unit ball is at most this value.
    pub fn gap(&self) -> f64 {
        1.0 - self.inradius
    }

    /// Vertices of the polytope scaled to contain the unit ball.
    pub fn circumscribed(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| vec_ops::scale(v, 1.0 / self.inradius)).collect()
    }
}

/// Inner and outer polytopal approximations of `S + r𝔹`.
#[derive(Clone, Debug, PartialEq)]
pub struct Enlargement {
    pub inner: SetExpr,
    pub outer: SetExpr,
    /// `inner ⊇ S + r(1 − inner_gap)𝔹`.
    pub inner_gap: f64,
    /// `outer ⊆ S + r(1 + outer_gap)𝔹`.
    pub outer_gap: f64,
}

/// Replaces the ball by an inscribed/circumscribed pair of `k`-gon based polytopes.
pub fn enlarge(s: &SetExpr, r: f64, k: usize) -> Result<Enlargement> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("enlargement radius must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(Enlargement { inner: s.clone(), outer: s.clone(), inner_gap: 0.0, outer_gap: 0.0 });
    }
    let ball = BallPolytope::new(s.dim(), k)?;
    let sum = |pts: &[Vec<f64>]| -> Result<SetExpr> {
        let pieces = s
            .pieces
            .iter()
            .map(|p| {
                let mut verts = Vec::with_capacity(p.vertices.len() * pts.len());
                for v in &p.vertices {
                    for b in pts {
                        verts.push(vec_ops::axpy(v, r, b));
                    }
                }
                ConvexPiece::new(verts, p.rays.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        SetExpr::new(pieces)
    };
    Ok(Enlargement {
        inner: sum(&ball.vertices)?,
        outer: sum(&ball.circumscribed())?,
        inner_gap: ball.gap(),
        outer_gap: 1.0 / ball.inradius - 1.0,
    })
}

/// Both sides of `exc(S + C, C) = exc(S, C)`.
pub fn conic_extension_excess_check(s: &SetExpr, c: &HCone, tol: &Tolerances) -> Result<(Excess, Excess)> {
    let gens = c.to_vcone()?;
    let extended = s.with_rays(gens.rays())?;
    Ok((excess_over_cone(&extended, c, tol)?, excess_over_cone(s, c, tol)?))
}
