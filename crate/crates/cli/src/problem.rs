//! JSON problem files: schema, loading and validation with source locations.

use std::collections::BTreeMap;
use std::fmt;

use ige_core::cones::{HCone, Polyhedron, VCone};
use ige_core::fans::Fan;
use ige_core::mappings::{induced_fan, IGEProblem, MappingPiece, Polynomial, PolytopicMapping, VertexPath};
use ige_core::optimality::Objective;
use ige_core::{Matrix, Tolerances};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::locate::{locate, render, Seg};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub cone: ConeSpec,
    #[serde(default)]
    pub set: Option<SetSpec>,
    pub mapping: MappingSpec,
    #[serde(default)]
    pub fan: Option<FanSpec>,
    #[serde(default)]
    pub objective: Option<ObjectiveSpec>,
    pub reference: Vec<f64>,
    #[serde(default)]
    pub tolerances: Option<TolSpec>,
    #[serde(default)]
    pub checks: Option<ChecksSpec>,
}

/// Either inequality rows (`a·y ≥ 0`) or generating rays.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    #[serde(default)]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub rays: Option<Vec<Vec<f64>>>,
}

/// `rows·x ≥ rhs`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub pieces: Vec<PieceSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub vertices: Vec<PathSpec>,
    #[serde(default)]
    pub rays: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    /// One map per output component from a comma-separated exponent multi-index to its
    /// coefficient, e.g. `{"2": -1}` for `−x²` or `{"1,0": 3, "0,0": 1}` for `3x₁ + 1`.
    Polynomial(Vec<BTreeMap<String, f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanSpec {
    pub generators: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Quadratic {
        #[serde(default)]
        q: Option<Vec<Vec<f64>>>,
        c: Vec<f64>,
        #[serde(default)]
        d: f64,
    },
    ConcaveMin(Vec<AffinePiece>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece {
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub feas: Option<f64>,
    pub kkt: Option<f64>,
    pub sample: Option<f64>,
}

/// Defaults for the sampled checks; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub errorbound_deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
}

/// A problem error with its location in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub path: Option<String>,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, ":{l}:{c}")?;
        }
        write!(f, ": ")?;
        if let Some(p) = &self.path {
            write!(f, "{p}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for LoadError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanSource {
    File,
    Induced,
}

/// A validated problem ready for analysis.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: Option<String>,
    pub problem: IGEProblem,
    pub fan: Option<(Fan, FanSource)>,
    /// Why no fan is available, when it is not.
    pub fan_note: Option<String>,
    pub objective: Option<Objective>,
    pub checks: ChecksSpec,
    pub digest: String,
}

struct Ctx<'a> {
    source: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, path: &[Seg], message: impl Into<String>) -> LoadError {
        let (line, column) = match locate(self.text, path) {
            Some((l, c)) => (Some(l), Some(c)),
            None => (None, None),
        };
        LoadError {
            source: self.source.to_string(),
            line,
            column,
            path: Some(render(path)),
            message: message.into(),
        }
    }
}

fn key(k: &str) -> Seg {
    Seg::Key(k.to_string())
}

fn with(path: &[Seg], extra: &[Seg]) -> Vec<Seg> {
    path.iter().chain(extra).cloned().collect()
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses and validates `text`; `source` names the file in error messages.
pub fn load_str(text: &str, source: &str) -> Result<Loaded, LoadError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| LoadError {
        source: source.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        path: None,
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    let cx = Ctx { source, text };
    build(&cx, file, digest(text))
}

pub fn load_path(path: &std::path::Path) -> Result<Loaded, LoadError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError {
        source: source.clone(),
        line: None,
        column: None,
        path: None,
        message: format!("cannot read file: {e}"),
    })?;
    load_str(&text, &source)
}

fn check_vec(cx: &Ctx<'_>, path: &[Seg], v: &[f64], dim: usize, what: &str) -> Result<(), LoadError> {
    if v.len() != dim {
        return Err(cx.err(path, format!("{what} has length {} but {dim} is expected", v.len())));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(cx.err(&with(path, &[Seg::Index(i)]), "entry is not finite"));
    }
    Ok(())
}

fn matrix(cx: &Ctx<'_>, path: &[Seg], rows: &[Vec<f64>], m: usize, n: usize) -> Result<Matrix, LoadError> {
    if rows.len() != m {
        return Err(cx.err(path, format!("matrix has {} rows but {m} are expected", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        check_vec(cx, &with(path, &[Seg::Index(i)]), r, n, "matrix row")?;
    }
    Matrix::from_rows(n, rows).map_err(|e| cx.err(path, e.to_string()))
}

fn build(cx: &Ctx<'_>, file: ProblemFile, digest: String) -> Result<Loaded, LoadError> {
    let n = file.mapping.in_dim;
    let m = file.mapping.out_dim;
    let root: Vec<Seg> = Vec::new();

    let mut tol = Tolerances::default();
    if let Some(t) = &file.tolerances {
        tol.feas_tol = t.feas.unwrap_or(tol.feas_tol);
        tol.kkt_tol = t.kkt.unwrap_or(tol.kkt_tol);
        tol.sample_tol = t.sample.unwrap_or(tol.sample_tol);
        tol.validate().map_err(|e| cx.err(&[key("tolerances")], e.to_string()))?;
    }

    let cone_path = [key("cone")];
    let cone = match (&file.cone.rows, &file.cone.rays) {
        (Some(rows), None) => {
            for (j, r) in rows.iter().enumerate() {
                check_vec(cx, &with(&cone_path, &[key("rows"), Seg::Index(j)]), r, m, "cone row")?;
            }
            HCone::new(m, rows.clone()).map_err(|e| cx.err(&cone_path, e.to_string()))?
        }
        (None, Some(rays)) => {
            for (j, r) in rays.iter().enumerate() {
                check_vec(cx, &with(&cone_path, &[key("rays"), Seg::Index(j)]), r, m, "cone ray")?;
            }
            let v = VCone::new(m, rays.clone()).map_err(|e| cx.err(&cone_path, e.to_string()))?;
            v.to_hcone().map_err(|e| cx.err(&cone_path, e.to_string()))?
        }
        _ => return Err(cx.err(&cone_path, "give exactly one of `rows` and `rays`")),
    };

    let set = match &file.set {
        None => Polyhedron::whole_space(n),
        Some(s) => {
            let sp = [key("set")];
            if s.rows.len() != s.rhs.len() {
                return Err(cx.err(&with(&sp, &[key("rhs")]), format!("{} rows but {} right-hand sides", s.rows.len(), s.rhs.len())));
            }
            for (j, r) in s.rows.iter().enumerate() {
                check_vec(cx, &with(&sp, &[key("rows"), Seg::Index(j)]), r, n, "set row")?;
            }
            Polyhedron::new(n, s.rows.clone(), s.rhs.clone()).map_err(|e| cx.err(&sp, e.to_string()))?
        }
    };

    let mp = [key("mapping")];
    if file.mapping.pieces.is_empty() {
        return Err(cx.err(&with(&mp, &[key("pieces")]), "the mapping needs at least one piece"));
    }
    let mut pieces = Vec::new();
    for (k, piece) in file.mapping.pieces.iter().enumerate() {
        let pp = with(&mp, &[key("pieces"), Seg::Index(k)]);
        if piece.vertices.is_empty() {
            return Err(cx.err(&with(&pp, &[key("vertices")]), "a piece needs at least one vertex path"));
        }
        let mut paths = Vec::new();
        for (j, spec) in piece.vertices.iter().enumerate() {
            let vp = with(&pp, &[key("vertices"), Seg::Index(j)]);
            paths.push(path_from_spec(cx, &vp, spec, n, m)?);
        }
        for (j, r) in piece.rays.iter().enumerate() {
            check_vec(cx, &with(&pp, &[key("rays"), Seg::Index(j)]), r, m, "ray")?;
            if r.iter().all(|x| *x == 0.0) {
                return Err(cx.err(&with(&pp, &[key("rays"), Seg::Index(j)]), "ray is zero"));
            }
        }
        pieces.push(MappingPiece { paths, rays: piece.rays.clone() });
    }
    let mapping = PolytopicMapping::new(n, m, pieces).map_err(|e| cx.err(&mp, e.to_string()))?;

    let rp = [key("reference")];
    check_vec(cx, &rp, &file.reference, n, "reference point")?;
    let problem = IGEProblem::new(mapping, cone, set, file.reference.clone(), tol).map_err(|e| {
        let at: &[Seg] = match e {
            ige_core::Error::NotInSet { .. } => &rp,
            ige_core::Error::PreconditionFailed(ref s) if s.contains("cone") => &cone_path,
            ige_core::Error::PreconditionFailed(_) => &[],
            _ => &root,
        };
        cx.err(at, e.to_string())
    })?;

    let (fan, fan_note) = match &file.fan {
        Some(spec) => {
            let fp = [key("fan"), key("generators")];
            if spec.generators.is_empty() {
                return Err(cx.err(&fp, "a fan needs at least one generator"));
            }
            let gens = spec
                .generators
                .iter()
                .enumerate()
                .map(|(i, g)| matrix(cx, &with(&fp, &[Seg::Index(i)]), g, m, n))
                .collect::<Result<Vec<_>, _>>()?;
            (Some((Fan::new(gens).map_err(|e| cx.err(&fp, e.to_string()))?, FanSource::File)), None)
        }
        None => match induced_fan(&problem.mapping) {
            Ok(h) => (Some((h, FanSource::Induced)), None),
            Err(e) => (None, Some(format!("no fan given and none induced: {e}"))),
        },
    };

    let objective = match &file.objective {
        None => None,
        Some(spec) => Some(objective_from_spec(cx, spec, n)?),
    };

    let checks = file.checks.clone().unwrap_or_default();
    if let Some(a) = &checks.alphas {
        if let Some(i) = a.iter().position(|x| !(x.is_finite() && *x > 1.0)) {
            return Err(cx.err(&[key("checks"), key("alphas"), Seg::Index(i)], "α must exceed 1"));
        }
    }
    if let Some(d) = checks.delta {
        if !(d.is_finite() && d > 0.0) {
            return Err(cx.err(&[key("checks"), key("delta")], "δ must be positive"));
        }
    }
    if let Some(ds) = &checks.errorbound_deltas {
        if let Some(i) = ds.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(cx.err(&[key("checks"), key("errorbound_deltas"), Seg::Index(i)], "δ must be positive"));
        }
    }

    Ok(Loaded { name: file.name, problem, fan, fan_note, objective, checks, digest })
}

fn path_from_spec(cx: &Ctx<'_>, at: &[Seg], spec: &PathSpec, n: usize, m: usize) -> Result<VertexPath, LoadError> {
    match spec {
        PathSpec::Affine { matrix: rows, offset } => {
            let a = matrix(cx, &with(at, &[key("affine"), key("matrix")]), rows, m, n)?;
            let b = match offset {
                Some(b) => {
                    check_vec(cx, &with(at, &[key("affine"), key("offset")]), b, m, "offset")?;
                    b.clone()
                }
                None => vec![0.0; m],
            };
            VertexPath::affine(a, b).map_err(|e| cx.err(at, e.to_string()))
        }
        PathSpec::Polynomial(components) => {
            let pp = with(at, &[key("polynomial")]);
            if components.len() != m {
                return Err(cx.err(&pp, format!("{} components but the mapping has {m} outputs", components.len())));
            }
            let mut polys = Vec::with_capacity(m);
            for (i, comp) in components.iter().enumerate() {
                let cp = with(&pp, &[Seg::Index(i)]);
                let mut terms = Vec::with_capacity(comp.len());
                for (k, c) in comp {
                    let e = parse_exponents(k, n).map_err(|msg| cx.err(&with(&cp, &[key(k)]), msg))?;
                    if !c.is_finite() {
                        return Err(cx.err(&with(&cp, &[key(k)]), "coefficient is not finite"));
                    }
                    terms.push((e, *c));
                }
                polys.push(Polynomial::new(terms));
            }
            Ok(VertexPath::Polynomial { components: polys })
        }
    }
}

fn parse_exponents(key: &str, n: usize) -> Result<Vec<u32>, String> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("exponent index `{key}` has {} entries but the domain has dimension {n}", parts.len()));
    }
    parts
        .iter()
        .map(|p| p.parse::<u32>().map_err(|_| format!("`{p}` is not a nonnegative integer exponent")))
        .collect()
}

fn objective_from_spec(cx: &Ctx<'_>, spec: &ObjectiveSpec, n: usize) -> Result<Objective, LoadError> {
    let op = [key("objective")];
    match spec {
        ObjectiveSpec::Quadratic { q, c, d } => {
            let qp = with(&op, &[key("quadratic")]);
            check_vec(cx, &with(&qp, &[key("c")]), c, n, "linear term")?;
            let q = match q {
                Some(rows) => matrix(cx, &with(&qp, &[key("q")]), rows, n, n)?,
                None => Matrix::zeros(n, n),
            };
            Objective::quadratic(q, c.clone(), *d).map_err(|e| cx.err(&qp, e.to_string()))
        }
        ObjectiveSpec::ConcaveMin(pieces) => {
            let cp = with(&op, &[key("concave_min")]);
            for (k, p) in pieces.iter().enumerate() {
                check_vec(cx, &with(&cp, &[Seg::Index(k), key("c")]), &p.c, n, "piece slope")?;
            }
            Objective::concave_min(pieces.iter().map(|p| (p.c.clone(), p.d)).collect()).map_err(|e| cx.err(&cp, e.to_string()))
        }
    }
}
