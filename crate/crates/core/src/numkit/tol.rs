use crate::{Error, Result};
use alloc::format;

/// Numerical tolerances threaded through every routine and surfaced in reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Feasibility slack for constraint and membership tests.
    pub feas_tol: f64,
    /// Stationarity tolerance for least-squares and projection solvers.
    pub kkt_tol: f64,
    /// Acceptance threshold for sampled evidence.
    pub sample_tol: f64,
    pub max_lp_iter: usize,
    pub max_nnls_iter: usize,
    pub max_dykstra_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas_tol: 1e-9,
            kkt_tol: 1e-10,
            sample_tol: 1e-6,
            max_lp_iter: 20_000,
            max_nnls_iter: 1_000,
            max_dykstra_iter: 500_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("feas_tol", self.feas_tol),
            ("kkt_tol", self.kkt_tol),
            ("sample_tol", self.sample_tol),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be strictly positive")));
            }
        }
        if self.max_lp_iter == 0 || self.max_nnls_iter == 0 || self.max_dykstra_iter == 0 {
            return Err(Error::InvalidInput("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Tolerances::default().validate().unwrap();
    }

    #[test]
    fn rejects_non_positive() {
        let t = Tolerances { sample_tol: 0.0, ..Default::default() };
        assert!(t.validate().is_err());
        let t = Tolerances { feas_tol: f64::NAN, ..Default::default() };
        assert!(t.validate().is_err());
    }
}
