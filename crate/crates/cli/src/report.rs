//! Report document. Every claim carries the provenance of its number.

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Computed in closed form or by a finite exact algorithm.
    Exact,
    /// Backed by an LP certificate that was re-checked.
    Certificate,
    /// Evidence from seeded sampling; can falsify but not prove.
    SampledEvidence,
    /// Produced by a numerical search whose optimality is not certified.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Certified,
    Failed,
    NotChecked,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: Status,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub provenance: Provenance,
    pub value: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `analyze` only reports; it asserts nothing.
    Informational,
    Verified,
    Falsified,
    HypothesesNotMet,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Informational | Verdict::Verified => 0,
            Verdict::Falsified => 2,
            Verdict::HypothesesNotMet => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    pub input_sha256: String,
    pub seed: u64,
    pub hypotheses: Vec<Hypothesis>,
    pub claims: Vec<Claim>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(command: &str, problem: Option<String>, input_sha256: String, seed: u64) -> Self {
        Report {
            command: command.to_string(),
            problem,
            input_sha256,
            seed,
            hypotheses: Vec::new(),
            claims: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Informational,
        }
    }

    pub fn claim(&mut self, name: &str, provenance: Provenance, value: Value) {
        self.claims.push(Claim { name: name.to_string(), provenance, value });
    }

    pub fn hypothesis(&mut self, name: &str, status: Status, provenance: Provenance, detail: Option<String>) {
        self.hypotheses.push(Hypothesis { name: name.to_string(), status, provenance, detail });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn find(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// JSON number, with `"inf"`/`"-inf"`/`"nan"` strings for values JSON cannot hold.
/// Negative zero is written as `0.0`.
pub fn num(x: f64) -> Value {
    if x == 0.0 {
        json!(0.0)
    } else if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn vector(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn vectors(vs: &[Vec<f64>]) -> Value {
    Value::Array(vs.iter().map(|v| vector(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(1.5), json!(1.5));
        let mut r = Report::new("analyze", None, "00".into(), 42);
        r.claim("ratio", Provenance::SampledEvidence, num(f64::INFINITY));
        assert!(r.to_json().contains("\"sampled-evidence\""));
    }
}
