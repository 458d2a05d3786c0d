//! The five commands. Each builds a [`Report`]; `check-errorbound` also yields CSV rows.

use ige_core::cones::HCone;
use ige_core::fans::{increase_certificate, Fan, PrederivativeReport, DEFAULT_RESIDUAL_LEVEL};
use ige_core::increase::{check_increase_definitional, IncreaseGrid};
use ige_core::mappings::{exact_solution_polyhedron, excess_function, membership_in_solutions};
use ige_core::numkit::vec_ops;
use ige_core::optimality::{check_general_noc, check_qualified_noc, multiplier_rule, upper_subdifferential, MultiplierOutcome};
use ige_core::sampling;
use ige_core::tangency::{
    approximate_tangent_cone, contingent_membership, exact_tangent_cone, inner_approximation, outer_approximation, verify_error_bound,
    DistanceSource, Hypotheses, IncreaseEvidence,
};
use ige_core::{Error, Result};
use serde_json::{json, Value};

use crate::problem::{FanSource, Loaded};
use crate::report::{num, vector, vectors, Provenance, Report, Status, Verdict};

pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_ERRORBOUND_DELTAS: [f64; 3] = [0.1, 0.01, 0.001];
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_PROBE_DIRS: usize = 64;
/// Directions closer than this (normalized margin) to the cone boundary are not probed.
pub const PROBE_MARGIN: f64 = 1e-6;
const PROBE_T0: f64 = 0.5;
const PROBE_HALVINGS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TangentMode {
    Inner,
    Outer,
    Exact,
}

impl TangentMode {
    pub fn label(self) -> &'static str {
        match self {
            TangentMode::Inner => "inner",
            TangentMode::Outer => "outer",
            TangentMode::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub probe_dirs: usize,
    pub seed: u64,
    pub mode: TangentMode,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            alpha: None,
            delta: None,
            samples: None,
            probe_dirs: DEFAULT_PROBE_DIRS,
            seed: sampling::DEFAULT_SEED,
            mode: TangentMode::Exact,
        }
    }
}

pub struct Outcome {
    pub report: Report,
    /// `delta,max_ratio,bound` rows from `check-errorbound`.
    pub csv: Option<String>,
}

struct Run<'a> {
    l: &'a Loaded,
    o: &'a Options,
    r: Report,
}

impl<'a> Run<'a> {
    fn new(command: &str, l: &'a Loaded, o: &'a Options) -> Self {
        Run { l, o, r: Report::new(command, l.name.clone(), l.digest.clone(), o.seed) }
    }

    fn grid(&self) -> IncreaseGrid {
        IncreaseGrid { seed: self.o.seed, ..IncreaseGrid::default() }
    }

    fn delta(&self) -> f64 {
        self.o.delta.or(self.l.checks.delta).unwrap_or(DEFAULT_DELTA)
    }

    fn samples(&self) -> usize {
        self.o.samples.or(self.l.checks.samples).unwrap_or(DEFAULT_SAMPLES)
    }

    fn fan(&self) -> Option<&'a Fan> {
        self.l.fan.as_ref().map(|(h, _)| h)
    }

    fn reference_solves(&self) -> Result<bool> {
        membership_in_solutions(&self.l.problem, &self.l.problem.reference)
    }

    fn membership(&mut self) -> Result<()> {
        let p = &self.l.problem;
        let exc = excess_function(p, &p.reference)?;
        self.r.claim("reference_in_S", Provenance::Exact, json!(p.set.contains(&p.reference, &p.tol)));
        self.r.claim("excess_at_reference", Provenance::Exact, num(exc.value()));
        self.r.claim("reference_solves", Provenance::Exact, json!(self.reference_solves()?));
        match exact_solution_polyhedron(p) {
            Ok(s) => {
                let value = match (&s.polyhedron, s.empty) {
                    (Some(poly), false) => json!({"empty": false, "rows": vectors(poly.rows()), "rhs": vector(poly.rhs())}),
                    _ => json!({"empty": true}),
                };
                self.r.claim("solution_set", Provenance::Exact, value);
            }
            Err(Error::NotAffine) => self.r.note("solution set not computed: the mapping has non-affine vertex paths"),
            Err(e) => return Err(e),
        }
        Ok(())
    }

    fn record_fan(&mut self) {
        match &self.l.fan {
            Some((h, src)) => {
                let gens: Vec<Value> = h.generators().iter().map(|g| vectors(&g.to_rows())).collect();
                let source = match src {
                    FanSource::File => "file",
                    FanSource::Induced => "induced by the affine mapping",
                };
                self.r.claim("fan", Provenance::Exact, json!({"source": source, "generators": gens}));
            }
            None => {
                let why = self.l.fan_note.clone().unwrap_or_else(|| "no fan".into());
                self.r.note(why);
            }
        }
    }

    /// Prederivative residuals and localized increase evidence, recorded as hypotheses.
    fn hypotheses(&mut self) -> Result<Option<Hypotheses>> {
        let Some(h) = self.fan() else {
            return Ok(None);
        };
        let hyp = Hypotheses::gather(&self.l.problem, h, self.delta(), &self.grid())?;
        let rows = residual_table(&hyp.residuals);
        let last = hyp.residuals.rows.last();
        let detail = |v: f64| last.map(|row| format!("residual {} at radius {:e} (level {DEFAULT_RESIDUAL_LEVEL:e})", fmt_num(v), row.radius));
        for (name, ok, value) in [
            ("H outer prederivative of F at x̄", hyp.outer_ok(), last.map_or(f64::NAN, |r| r.outer)),
            ("H inner prederivative of F at x̄", hyp.inner_ok(), last.map_or(f64::NAN, |r| r.inner)),
            ("H strict prederivative of F at x̄", hyp.residuals.passes_strict(DEFAULT_RESIDUAL_LEVEL), last.map_or(f64::NAN, |r| r.strict)),
        ] {
            self.r.hypothesis(name, status(ok), Provenance::SampledEvidence, detail(value));
        }
        self.r.claim("prederivative_residuals", Provenance::SampledEvidence, rows);
        match &hyp.increase {
            IncreaseEvidence::Certificate { eta } => self.r.hypothesis(
                "metric C-increase near x̄",
                Status::Certified,
                Provenance::Certificate,
                Some(format!("localized certificate with η = {} on B(x̄, {})", fmt_num(*eta), self.delta())),
            ),
            IncreaseEvidence::Definitional { alpha } => self.r.hypothesis(
                "metric C-increase near x̄",
                Status::Certified,
                Provenance::SampledEvidence,
                Some(format!("definitional check passed at α = {alpha}")),
            ),
            IncreaseEvidence::Missing => self.r.hypothesis(
                "metric C-increase near x̄",
                Status::Failed,
                Provenance::Certificate,
                Some("no localized certificate (certificate LP infeasible or strict prederivative test failed)".into()),
            ),
        }
        Ok(Some(hyp))
    }

    /// Global fan certificate `H(u) + η𝔹 ⊆ C`; returns `η`.
    fn certificate(&mut self) -> Result<Option<f64>> {
        let Some(h) = self.fan() else {
            return Ok(None);
        };
        let p = &self.l.problem;
        match increase_certificate(h, &p.cone, &p.tol)? {
            Some(c) => {
                let rechecked = c.holds(h, &p.cone, p.tol.feas_tol);
                self.r.claim(
                    "increase_certificate",
                    Provenance::Certificate,
                    json!({"u": vector(&c.u), "eta": num(c.eta), "lp_eta": num(c.lp_eta), "alpha_lower_bound": num(1.0 + c.eta), "rechecked": rechecked}),
                );
                Ok(Some(c.eta))
            }
            None => {
                self.r.claim("increase_certificate", Provenance::Certificate, Value::Null);
                self.r.note("the certificate LP found no u with H(u) + η𝔹 ⊆ C for η > 0");
                Ok(None)
            }
        }
    }

    fn alphas(&self, eta: Option<f64>) -> Vec<f64> {
        if let Some(a) = self.o.alpha {
            return vec![a];
        }
        if let Some(a) = &self.l.checks.alphas {
            return a.clone();
        }
        vec![eta.map_or(1.5, |e| 1.0 + 0.9 * e)]
    }

    /// Definitional check at each `α`; returns whether all passed.
    fn definitional(&mut self, alphas: &[f64], hint: Option<&[f64]>) -> Result<bool> {
        let delta = self.delta();
        let grid = self.grid();
        let mut all = true;
        for &alpha in alphas {
            let rep = check_increase_definitional(&self.l.problem, alpha, delta, &grid, hint)?;
            all &= rep.passed;
            let witness = rep.witness.as_ref().map(|(x, r)| json!({"x": vector(x), "r": num(*r)}));
            self.r.claim(
                "increase_check",
                Provenance::SampledEvidence,
                json!({
                    "alpha": num(alpha),
                    "delta": num(delta),
                    "grid": {"x_samples": grid.x_samples, "directions": grid.directions, "radii": grid.radii, "ball_sides": grid.ball_sides},
                    "pairs_examined": rep.samples,
                    "worst_defect": num(rep.worst_defect),
                    "passed": rep.passed,
                    "counterexample": witness,
                }),
            );
        }
        Ok(all)
    }

    /// Error bound at `α` for each `δ`; `None` when `x̄` does not solve the problem.
    fn error_bound(&mut self, alpha: f64, deltas: &[f64]) -> Result<Option<(bool, Vec<(f64, f64, f64)>)>> {
        let samples = self.samples();
        let mut rows = Vec::new();
        let mut all = true;
        for &delta in deltas {
            let rep = match verify_error_bound(&self.l.problem, alpha, delta, samples, self.o.seed) {
                Ok(rep) => rep,
                Err(Error::ReferenceNotSolution) => {
                    self.r.hypothesis("x̄ solves the problem", Status::Failed, Provenance::Exact, None);
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            all &= rep.passed;
            let worst = rep
                .samples
                .iter()
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .map(|s| json!({"x": vector(&s.x), "distance": num(s.distance), "excess": num(s.excess), "ratio": num(s.ratio)}));
            let provenance = match rep.source {
                DistanceSource::Exact => Provenance::SampledEvidence,
                DistanceSource::Oracle => Provenance::Oracle,
            };
            self.r.claim(
                "error_bound",
                provenance,
                json!({
                    "alpha": num(alpha),
                    "delta": num(delta),
                    "bound": num(rep.bound),
                    "max_ratio": num(rep.max_ratio),
                    "samples_used": rep.samples.len(),
                    "distance": match rep.source { DistanceSource::Exact => "exact projection", DistanceSource::Oracle => "oracle search" },
                    "passed": rep.passed,
                    "worst_sample": worst,
                }),
            );
            rows.push((delta, rep.max_ratio, rep.bound));
        }
        Ok(Some((all, rows)))
    }

    /// One tangent cone plus its probe table; returns `(computed, disagreements, certified)`.
    fn tangent(&mut self, mode: TangentMode, hyp: &Hypotheses) -> Result<(bool, usize, bool)> {
        let h = self.fan().expect("caller checks the fan");
        let p = &self.l.problem;
        let name = format!("tangent_cone_{}", mode.label());
        let computed = match mode {
            TangentMode::Inner => inner_approximation(p, h, hyp).map(|a| (a.cone, a.unverified)),
            TangentMode::Outer => outer_approximation(p, h, hyp).map(|a| (a.cone, a.unverified)),
            TangentMode::Exact => exact_tangent_cone(p, h, hyp).map(|c| (c, Vec::new())),
        };
        let (cone, unverified) = match computed {
            Ok(c) => c,
            Err(Error::NotApplicable(why)) => {
                self.r.hypothesis(&format!("{} tangent theorem applies", mode.label()), Status::Failed, Provenance::SampledEvidence, Some(why));
                return Ok((false, 0, false));
            }
            Err(Error::BoundaryEmpty) => {
                self.r.hypothesis(
                    "F(x̄) meets the boundary of C",
                    Status::Failed,
                    Provenance::Exact,
                    Some("F(x̄) lies in the interior of C, so the outer approximation is not defined".into()),
                );
                return Ok((false, 0, false));
            }
            Err(Error::ReferenceNotSolution) => {
                self.r.hypothesis("x̄ solves the problem", Status::Failed, Provenance::Exact, None);
                return Ok((false, 0, false));
            }
            Err(e) => return Err(e),
        };
        for u in &unverified {
            self.r.note(format!("{} approximation: hypothesis not certified: {u}", mode.label()));
        }
        let (table, disagreements) = probe_table(p, &cone, self.o.probe_dirs, self.o.seed)?;
        self.r.claim(
            &name,
            Provenance::Exact,
            json!({"rows": vectors(cone.rows()), "hypotheses_certified": unverified.is_empty()}),
        );
        let provenance = match ige_core::tangency::SolutionDistance::new(p)?.source() {
            DistanceSource::Exact => Provenance::SampledEvidence,
            DistanceSource::Oracle => Provenance::Oracle,
        };
        self.r.claim(&format!("{name}_probes"), provenance, table);
        Ok((true, disagreements, unverified.is_empty()))
    }

    /// Optimality chain; returns the verdict it supports.
    fn kkt(&mut self, hyp: &Hypotheses) -> Result<Verdict> {
        let (Some(phi), Some(h)) = (self.l.objective.as_ref(), self.fan()) else {
            unreachable!("caller checks objective and fan");
        };
        let p = &self.l.problem;
        let sub = upper_subdifferential(phi, &p.reference, &p.tol)?;
        self.r.claim("upper_subdifferential", Provenance::Exact, json!({"vertices": vectors(sub.vertices())}));

        let general = check_general_noc(p, h, phi, hyp)?;
        self.r.claim(
            "general_condition",
            Provenance::Exact,
            json!({
                "holds": general.holds,
                "worst_residual": num(general.worst_residual),
                "cone_rows": vectors(general.cone.rows()),
                "hypotheses_certified": general.hypotheses_certified,
                "strong_satisfaction": general.strong_satisfaction.map(|s| json!({"stationary": s})),
            }),
        );
        if !general.hypotheses_certified {
            self.r.note("general condition: inner approximation hypotheses not certified");
        }

        let qualified = check_qualified_noc(p, h, phi)?;
        self.r.hypothesis("qualification (v): int(T(S)(x̄) ∩ H⁺(C)) ≠ ∅", status(qualified.qualification_v), Provenance::Exact, None);
        self.r.hypothesis("qualification (vi): ∩ int Λᵢ⁻¹(C) ≠ ∅", status(qualified.qualification_vi), Provenance::Exact, None);
        self.r.claim(
            "qualified_condition",
            Provenance::Exact,
            json!({
                "feasible": qualified.feasible,
                "residuals": qualified.vertices.iter().map(|v| num(v.residual)).collect::<Vec<_>>(),
                "qualification_failed": qualified.qualification_failed,
                "closure_caveat": qualified.closure_caveat,
            }),
        );
        if qualified.closure_caveat {
            self.r.note("without qualification the inclusion was tested against the closed polyhedral sum");
        }

        let mut verdict = if general.holds && qualified.feasible { Verdict::Verified } else { Verdict::Falsified };
        match multiplier_rule(p, h, phi) {
            Ok(MultiplierOutcome::Certificate(c)) => self.r.claim(
                "multiplier_rule",
                Provenance::Certificate,
                json!({
                    "ys": vectors(&c.ys),
                    "residual_norm": num(c.residual_norm),
                    "duality_margins": c.duality_margins.iter().map(|m| num(*m)).collect::<Vec<_>>(),
                }),
            ),
            Ok(MultiplierOutcome::Infeasible { residual }) => {
                self.r.claim("multiplier_rule", Provenance::Exact, json!({"infeasible": true, "residual": num(residual)}));
                verdict = Verdict::Falsified;
            }
            Err(Error::PreconditionFailed(what)) => {
                self.r.hypothesis("multiplier rule preconditions", Status::Failed, Provenance::Exact, Some(what));
                if verdict == Verdict::Verified {
                    verdict = Verdict::HypothesesNotMet;
                }
            }
            Err(e) => return Err(e),
        }
        if verdict == Verdict::Verified && !(qualified.qualification_v && qualified.qualification_vi) {
            verdict = Verdict::HypothesesNotMet;
        }
        Ok(verdict)
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Certified
    } else {
        Status::Failed
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        format!("{x}")
    }
}

fn residual_table(rep: &PrederivativeReport) -> Value {
    Value::Array(
        rep.rows
            .iter()
            .map(|r| json!({"radius": num(r.radius), "outer": num(r.outer), "inner": num(r.inner), "strict": num(r.strict)}))
            .collect(),
    )
}

/// Cross-validates cone membership against contingent evidence on a direction grid.
fn probe_table(p: &ige_core::mappings::IGEProblem, cone: &HCone, count: usize, seed: u64) -> Result<(Value, usize)> {
    let dirs = sampling::direction_grid(p.in_dim(), count, seed);
    let mut rows = Vec::with_capacity(dirs.len());
    let (mut checked, mut skipped, mut disagreements) = (0usize, 0usize, 0usize);
    for v in &dirs {
        let margin = cone.margin(v) / vec_ops::norm(v).max(1e-300);
        let trace = contingent_membership(p, v, PROBE_T0, PROBE_HALVINGS)?;
        let min_ratio = trace.ratios.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
        let decided = margin.abs() > PROBE_MARGIN;
        let agree = !decided || trace.member == (margin > 0.0);
        if decided {
            checked += 1;
        } else {
            skipped += 1;
        }
        if !agree {
            disagreements += 1;
        }
        rows.push(json!({
            "direction": vector(v),
            "cone_margin": num(margin),
            "contingent_member": trace.member,
            "min_ratio": num(min_ratio),
            "agree": agree,
        }));
    }
    Ok((json!({"checked": checked, "skipped_near_boundary": skipped, "disagreements": disagreements, "table": rows}), disagreements))
}

pub fn analyze(l: &Loaded, o: &Options) -> Result<Outcome> {
    let mut run = Run::new("analyze", l, o);
    run.membership()?;
    run.record_fan();
    let eta = run.certificate()?;
    let hyp = run.hypotheses()?;
    let hint = hyp.as_ref().and_then(|_| {
        run.r.find("increase_certificate").and_then(|c| c.value.get("u")).and_then(|u| {
            u.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<f64>>())
        })
    });
    let alphas = run.alphas(eta);
    run.definitional(&alphas, hint.as_deref())?;

    if run.reference_solves()? {
        let alpha = eta.map_or(alphas[0], |e| 1.0 + 0.9 * e);
        let deltas = errorbound_deltas(&run);
        run.error_bound(alpha, &deltas)?;
    } else {
        run.r.note("x̄ does not solve the problem: error bound and tangent cones skipped");
    }

    if let (Some(hyp), true) = (&hyp, run.reference_solves()?) {
        let h = run.fan().expect("hypotheses need a fan");
        let both = approximate_tangent_cone(&l.problem, h, hyp)?;
        run.r.claim("approximations_coincide", Provenance::Exact, json!(both.equal));
        for mode in [TangentMode::Inner, TangentMode::Outer, TangentMode::Exact] {
            run.tangent(mode, hyp)?;
        }
        if l.objective.is_some() {
            run.kkt(hyp)?;
        }
    }
    run.r.verdict = Verdict::Informational;
    Ok(Outcome { report: run.r, csv: None })
}

fn errorbound_deltas(run: &Run<'_>) -> Vec<f64> {
    match (run.o.delta, &run.l.checks.errorbound_deltas) {
        (Some(d), _) => vec![d],
        (None, Some(ds)) => ds.clone(),
        (None, None) => DEFAULT_ERRORBOUND_DELTAS.to_vec(),
    }
}

pub fn certify_increase(l: &Loaded, o: &Options) -> Result<Outcome> {
    let mut run = Run::new("certify-increase", l, o);
    run.record_fan();
    let eta = run.certificate()?;
    let hyp = match run.hypotheses() {
        Ok(h) => h,
        Err(Error::PreconditionFailed(why)) => {
            run.r.hypothesis("localized certificate preconditions", Status::Failed, Provenance::SampledEvidence, Some(why));
            run.r.verdict = Verdict::HypothesesNotMet;
            return Ok(Outcome { report: run.r, csv: None });
        }
        Err(e) => return Err(e),
    };
    let hint = hyp.as_ref().and(run.r.find("increase_certificate")).and_then(|c| c.value.get("u")).and_then(|u| {
        u.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<f64>>())
    });
    let alphas = run.alphas(eta);
    let passed = run.definitional(&alphas, hint.as_deref())?;
    run.r.verdict = if passed { Verdict::Verified } else { Verdict::Falsified };
    Ok(Outcome { report: run.r, csv: None })
}

pub fn check_errorbound(l: &Loaded, o: &Options) -> Result<Outcome> {
    let mut run = Run::new("check-errorbound", l, o);
    let eta = if o.alpha.is_none() && l.checks.alphas.is_none() { run.certificate()? } else { None };
    let alpha = run.alphas(eta)[0];
    let deltas = errorbound_deltas(&run);
    let Some((passed, rows)) = run.error_bound(alpha, &deltas)? else {
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    };
    let mut csv = String::from("delta,max_ratio,bound\n");
    for (d, m, b) in rows {
        csv.push_str(&format!("{d},{},{b}\n", csv_num(m)));
    }
    run.r.verdict = if passed { Verdict::Verified } else { Verdict::Falsified };
    Ok(Outcome { report: run.r, csv: Some(csv) })
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "inf".into()
    }
}

pub fn tangent(l: &Loaded, o: &Options) -> Result<Outcome> {
    let mut run = Run::new("tangent", l, o);
    run.record_fan();
    if !run.reference_solves()? {
        run.r.hypothesis("x̄ solves the problem", Status::Failed, Provenance::Exact, None);
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    }
    let Some(hyp) = run.hypotheses()? else {
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    };
    let (computed, disagreements, certified) = run.tangent(o.mode, &hyp)?;
    run.r.verdict = if !computed {
        Verdict::HypothesesNotMet
    } else if disagreements > 0 {
        Verdict::Falsified
    } else if !certified {
        Verdict::HypothesesNotMet
    } else {
        Verdict::Verified
    };
    Ok(Outcome { report: run.r, csv: None })
}

pub fn check_kkt(l: &Loaded, o: &Options) -> Result<Outcome> {
    let mut run = Run::new("check-kkt", l, o);
    run.record_fan();
    if l.objective.is_none() {
        run.r.hypothesis("an objective is given", Status::Failed, Provenance::Exact, None);
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    }
    if !run.reference_solves()? {
        run.r.hypothesis("x̄ solves the problem", Status::Failed, Provenance::Exact, None);
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    }
    let Some(hyp) = run.hypotheses()? else {
        run.r.verdict = Verdict::HypothesesNotMet;
        return Ok(Outcome { report: run.r, csv: None });
    };
    run.r.verdict = run.kkt(&hyp)?;
    Ok(Outcome { report: run.r, csv: None })
}
