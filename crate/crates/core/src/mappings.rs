//! Polytopic set-valued mappings `F(x) = ⋃_pieces [conv{f_j(x)} + cone(K)]` and the inclusion
//! problems built on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cones::{is_pointed, HCone, Polyhedron};
use crate::fans::Fan;
use crate::math;
use crate::numkit::{vec_ops, Matrix, Tolerances};
use crate::setvalues::{excess_over_cone, ConvexPiece, Excess, SetExpr};
use crate::{Error, Result};

/// Scalar polynomial `Σ c·x^e`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(Vec<u32>, f64)>) -> Self {
        Polynomial { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| math::powi(xi, k)).product::<f64>())
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().filter(|(_, c)| *c != 0.0).map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }
}

/// One vertex trajectory `x ↦ f_j(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum VertexPath {
    Affine { matrix: Matrix, offset: Vec<f64> },
    Polynomial { components: Vec<Polynomial> },
}

impl VertexPath {
    pub fn affine(matrix: Matrix, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != matrix.rows() {
            return Err(Error::DimensionMismatch("affine offset".into()));
        }
        if !vec_ops::is_finite(&offset) {
            return Err(Error::NonFinite("affine offset"));
        }
        Ok(VertexPath::Affine { matrix, offset })
    }

    pub fn linear(matrix: Matrix) -> Self {
        let offset = vec![0.0; matrix.rows()];
        VertexPath::Affine { matrix, offset }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            VertexPath::Affine { matrix, .. } => matrix.rows(),
            VertexPath::Polynomial { components } => components.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            VertexPath::Affine { matrix, offset } => vec_ops::add(&matrix.mul_vec(x), offset),
            VertexPath::Polynomial { components } => components.iter().map(|p| p.eval(x)).collect(),
        }
    }

    /// `(A, b)` with `f(x) = Ax + b`, when the path has degree at most one.
    pub fn as_affine(&self, in_dim: usize) -> Option<(Matrix, Vec<f64>)> {
        match self {
            VertexPath::Affine { matrix, offset } => Some((matrix.clone(), offset.clone())),
            VertexPath::Polynomial { components } => {
                if components.iter().any(|p| p.degree() > 1) {
                    return None;
                }
                let mut a = Matrix::zeros(components.len(), in_dim);
                let mut b = vec![0.0; components.len()];
                for (i, p) in components.iter().enumerate() {
                    for (e, c) in &p.terms {
                        match e.iter().position(|&k| k == 1) {
                            Some(j) if e.iter().sum::<u32>() == 1 => a.set(i, j, a.get(i, j) + c),
                            _ if e.iter().all(|&k| k == 0) => b[i] += c,
                            _ => {}
                        }
                    }
                }
                Some((a, b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappingPiece {
    pub paths: Vec<VertexPath>,
    pub rays: Vec<Vec<f64>>,
}

/// `F : R^n ⇉ R^m`, a finite union of polytope-plus-cone pieces with moving vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopicMapping {
    in_dim: usize,
    out_dim: usize,
    pieces: Vec<MappingPiece>,
}

impl PolytopicMapping {
    pub fn new(in_dim: usize, out_dim: usize, pieces: Vec<MappingPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("a mapping needs at least one piece".into()));
        }
        for (k, p) in pieces.iter().enumerate() {
            if p.paths.is_empty() {
                return Err(Error::InvalidInput(format!("piece {k} has no vertex path")));
            }
            for path in &p.paths {
                if path.out_dim() != out_dim {
                    return Err(Error::DimensionMismatch(format!("piece {k}: vertex path has wrong range dimension")));
                }
                match path {
                    VertexPath::Affine { matrix, .. } if matrix.cols() != in_dim => {
                        return Err(Error::DimensionMismatch(format!("piece {k}: matrix has {} columns", matrix.cols())));
                    }
                    VertexPath::Polynomial { components } => {
                        for poly in components {
                            if poly.terms.iter().any(|(e, c)| e.len() != in_dim || !c.is_finite()) {
                                return Err(Error::InvalidInput(format!("piece {k}: malformed polynomial term")));
                            }
                        }
                    }
                    _ => {}
                }
            }
            for r in &p.rays {
                if r.len() != out_dim || !vec_ops::is_finite(r) {
                    return Err(Error::InvalidInput(format!("piece {k}: malformed ray")));
                }
            }
        }
        Ok(PolytopicMapping { in_dim, out_dim, pieces })
    }

    /// Single piece `conv{A_j x + b_j} + cone(rays)`.
    pub fn affine(in_dim: usize, out_dim: usize, maps: Vec<(Matrix, Vec<f64>)>, rays: Vec<Vec<f64>>) -> Result<Self> {
        let paths = maps.into_iter().map(|(a, b)| VertexPath::affine(a, b)).collect::<Result<_>>()?;
        PolytopicMapping::new(in_dim, out_dim, vec![MappingPiece { paths, rays }])
    }

    /// Robust constraining mapping `x ↦ {f(x, ω) : ω ∈ Ω}` for affine `f(·, ω)` and a finite
    /// scenario sample, closed up to its convex hull.
    pub fn from_scenarios<W>(
        in_dim: usize,
        out_dim: usize,
        scenarios: &[W],
        f: impl Fn(&W) -> (Matrix, Vec<f64>),
        rays: Vec<Vec<f64>>,
    ) -> Result<Self> {
        PolytopicMapping::affine(in_dim, out_dim, scenarios.iter().map(f).collect(), rays)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn pieces(&self) -> &[MappingPiece] {
        &self.pieces
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<SetExpr> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch(format!("mapping expects {} inputs, got {}", self.in_dim, x.len())));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| ConvexPiece::new(p.paths.iter().map(|f| f.eval(x)).collect(), p.rays.clone()))
            .collect::<Result<Vec<_>>>()?;
        SetExpr::new(pieces)
    }

    /// Affine data of every piece, or `NotAffine`.
    pub fn affine_pieces(&self) -> Result<Vec<(Vec<(Matrix, Vec<f64>)>, Vec<Vec<f64>>)>> {
        self.pieces
            .iter()
            .map(|p| {
                let maps = p.paths.iter().map(|f| f.as_affine(self.in_dim).ok_or(Error::NotAffine)).collect::<Result<_>>()?;
                Ok((maps, p.rays.clone()))
            })
            .collect()
    }

    pub fn is_affine(&self) -> bool {
        self.affine_pieces().is_ok()
    }
}

pub fn evaluate_mapping(f: &PolytopicMapping, x: &[f64]) -> Result<SetExpr> {
    f.evaluate(x)
}

/// Find `x ∈ S` with `F(x) ⊆ C`, around a reference point.
#[derive(Clone, Debug, PartialEq)]
pub struct IGEProblem {
    pub mapping: PolytopicMapping,
    pub cone: HCone,
    pub set: Polyhedron,
    pub reference: Vec<f64>,
    pub tol: Tolerances,
}

impl IGEProblem {
    /// Checks dimensions, pointedness of `C`, nonemptiness of `S` and `x̄ ∈ S`.
    pub fn new(mapping: PolytopicMapping, cone: HCone, set: Polyhedron, reference: Vec<f64>, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        if cone.dim() != mapping.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cone lives in R^{} but the mapping takes values in R^{}",
                cone.dim(),
                mapping.out_dim()
            )));
        }
        if set.dim() != mapping.in_dim() || reference.len() != mapping.in_dim() {
            return Err(Error::DimensionMismatch("set or reference point versus mapping domain".into()));
        }
        if !vec_ops::is_finite(&reference) {
            return Err(Error::NonFinite("reference point"));
        }
        if !is_pointed(&cone, &tol)? {
            return Err(Error::PreconditionFailed("the cone C must be pointed".into()));
        }
        if set.is_empty(&tol)? {
            return Err(Error::PreconditionFailed("the set S is empty".into()));
        }
        if !set.contains(&reference, &tol) {
            return Err(Error::NotInSet { violation: set.violation(&reference) });
        }
        Ok(IGEProblem { mapping, cone, set, reference, tol })
    }

    pub fn in_dim(&self) -> usize {
        self.mapping.in_dim()
    }
}

/// `φ(x) = exc(F(x), C)`.
pub fn excess_function(p: &IGEProblem, x: &[f64]) -> Result<Excess> {
    excess_over_cone(&p.mapping.evaluate(x)?, &p.cone, &p.tol)
}

/// `x ∈ S` and `exc(F(x), C) ≤ sample_tol`.
pub fn membership_in_solutions(p: &IGEProblem, x: &[f64]) -> Result<bool> {
    if !p.set.contains(x, &p.tol) {
        return Ok(false);
    }
    Ok(excess_function(p, x)?.value() <= p.tol.sample_tol)
}

/// Solution set of an affine problem. `polyhedron` is `None` when a ray of `F` leaves `C`, in
/// which case no point solves the problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub polyhedron: Option<Polyhedron>,
    pub empty: bool,
}

/// `Solv = S ∩ {x : a_c·(A_j x + b_j) ≥ 0 for every row a_c of C, every vertex path j, every piece}`.
pub fn exact_solution_polyhedron(p: &IGEProblem) -> Result<SolutionSet> {
    let pieces = p.mapping.affine_pieces()?;
    let n = p.in_dim();
    let mut rows: Vec<Vec<f64>> = p.set.rows().to_vec();
    let mut rhs: Vec<f64> = p.set.rhs().to_vec();
    let mut contradiction = false;
    for (maps, rays) in &pieces {
        for r in rays {
            let Some(u) = vec_ops::normalized(r) else { continue };
            if !p.cone.contains(&u, p.tol.feas_tol) {
                return Ok(SolutionSet { polyhedron: None, empty: true });
            }
        }
        for (a, b) in maps {
            for c in p.cone.rows() {
                let g = a.tr_mul_vec(c);
                let beta = -vec_ops::dot(c, b);
                if vec_ops::norm_inf(&g) <= 1e-14 * vec_ops::norm_inf(c) {
                    contradiction |= beta > p.tol.feas_tol * vec_ops::norm(c);
                    continue;
                }
                rows.push(g);
                rhs.push(beta);
            }
        }
    }
    let poly = Polyhedron::new(n, rows, rhs)?;
    let empty = contradiction || poly.is_empty(&p.tol)?;
    Ok(SolutionSet { polyhedron: Some(poly), empty })
}

/// The fan `conv{A_j}` of a single affine piece.
pub fn induced_fan(f: &PolytopicMapping) -> Result<Fan> {
    let pieces = f.affine_pieces()?;
    if pieces.len() != 1 {
        return Err(Error::NotApplicable("the induced fan needs a single piece".into()));
    }
    Fan::new(pieces.into_iter().next().expect("one piece").0.into_iter().map(|(a, _)| a).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> Matrix {
        Matrix::from_rows(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn failure_mapping() -> PolytopicMapping {
        let path = VertexPath::Polynomial { components: vec![Polynomial::new(vec![(vec![2], -1.0)])] };
        PolytopicMapping::new(1, 1, vec![MappingPiece { paths: vec![path], rays: vec![vec![1.0]] }]).unwrap()
    }

    fn identity_problem(set: Polyhedron) -> IGEProblem {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0, 0.0])], vec![]).unwrap();
        IGEProblem::new(f, HCone::orthant(2), set, vec![0.0, 0.0], Tolerances::default()).unwrap()
    }

    #[test]
    fn evaluation() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0, 0.0])], vec![]).unwrap();
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), SetExpr::point(vec![1.0, 2.0]));
        let v = failure_mapping().evaluate(&[0.5]).unwrap();
        assert_eq!(v.pieces()[0].vertices(), &[vec![-0.25]]);
        assert_eq!(v.pieces()[0].rays(), &[vec![1.0]]);
    }

    #[test]
    fn membership_examples() {
        let p = identity_problem(Polyhedron::whole_space(2));
        assert!(membership_in_solutions(&p, &[1.0, 1.0]).unwrap());
        assert!(!membership_in_solutions(&p, &[-1.0, 1.0]).unwrap());
        assert_eq!(excess_function(&p, &[-2.0, 1.0]).unwrap(), Excess::Finite(2.0));

        let q = IGEProblem::new(failure_mapping(), HCone::orthant(1), Polyhedron::whole_space(1), vec![0.0], Tolerances::default())
            .unwrap();
        assert!(membership_in_solutions(&q, &[0.0]).unwrap());
        assert!(!membership_in_solutions(&q, &[0.1]).unwrap());
        for x in [0.5f64, 0.1, 0.01] {
            assert!((excess_function(&q, &[x]).unwrap().value() - x * x).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_solution_sets() {
        let p = identity_problem(Polyhedron::whole_space(2));
        let s = exact_solution_polyhedron(&p).unwrap();
        let poly = s.polyhedron.unwrap();
        assert!(!s.empty);
        assert!(poly.contains(&[1.0, 0.0], &p.tol) && !poly.contains(&[-1.0, 0.0], &p.tol));

        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2]), (swap(), vec![0.0; 2])], vec![]).unwrap();
        let q = IGEProblem::new(f, HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        let poly = exact_solution_polyhedron(&q).unwrap().polyhedron.unwrap();
        assert!(poly.contains(&[2.0, 3.0], &q.tol) && !poly.contains(&[2.0, -3.0], &q.tol));

        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2])], vec![vec![-1.0, 0.0]]).unwrap();
        let q = IGEProblem::new(f, HCone::orthant(2), Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()).unwrap();
        let s = exact_solution_polyhedron(&q).unwrap();
        assert!(s.empty && s.polyhedron.is_none());

        let q = IGEProblem::new(failure_mapping(), HCone::orthant(1), Polyhedron::whole_space(1), vec![0.0], Tolerances::default())
            .unwrap();
        assert_eq!(exact_solution_polyhedron(&q), Err(Error::NotAffine));
    }

    #[test]
    fn induced_fans() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2]), (swap(), vec![0.0; 2])], vec![]).unwrap();
        let h = induced_fan(&f).unwrap();
        assert_eq!(h.generators(), &[Matrix::identity(2), swap()]);
        assert_eq!(induced_fan(&failure_mapping()), Err(Error::NotAffine));
        // a polynomial path of degree one is still affine
        let lin = VertexPath::Polynomial { components: vec![Polynomial::new(vec![(vec![1], 3.0), (vec![0], 1.0)])] };
        let g = PolytopicMapping::new(1, 1, vec![MappingPiece { paths: vec![lin], rays: vec![] }]).unwrap();
        assert_eq!(induced_fan(&g).unwrap().generators()[0].get(0, 0), 3.0);
    }

    #[test]
    fn problem_validation() {
        let f = PolytopicMapping::affine(2, 2, vec![(Matrix::identity(2), vec![0.0; 2])], vec![]).unwrap();
        let half = HCone::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            IGEProblem::new(f.clone(), half, Polyhedron::whole_space(2), vec![0.0, 0.0], Tolerances::default()),
            Err(Error::PreconditionFailed(_))
        ));
        assert!(matches!(
            IGEProblem::new(f, HCone::orthant(2), Polyhedron::orthant(2), vec![-1.0, 0.0], Tolerances::default()),
            Err(Error::NotInSet { .. })
        ));
    }
}
