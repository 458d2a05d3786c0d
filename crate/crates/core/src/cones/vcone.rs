use alloc::format;
use alloc::vec::Vec;

use super::{dd_convert_back, HCone};
use crate::numkit::{nnls, vec_ops, Matrix, Tolerances};
use crate::{Error, Result};

/// Finitely generated cone `{Σ β_i r_i : β ≥ 0}` with unit-length rays. No rays means `{0}`.
/// A lineality direction appears as a pair of opposite rays.
#[derive(Clone, Debug, PartialEq)]
pub struct VCone {
    dim: usize,
    rays: Vec<Vec<f64>>,
}

impl VCone {
    /// Normalizes every ray; zero or non-finite rays are rejected.
    pub fn new(dim: usize, rays: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rays.len());
        for (i, r) in rays.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!("ray {i} has length {}", r.len())));
            }
            if !vec_ops::is_finite(&r) {
                return Err(Error::NonFinite("ray"));
            }
            match vec_ops::normalized(&r) {
                Some(u) => out.push(u),
                None => return Err(Error::InvalidInput(format!("ray {i} is zero"))),
            }
        }
        Ok(VCone { dim, rays: out })
    }

    pub fn zero(dim: usize) -> Self {
        VCone { dim, rays: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    pub fn is_zero(&self) -> bool {
        self.rays.is_empty()
    }

    /// Euclidean distance from `y` to the cone.
    pub fn distance(&self, y: &[f64], tol: &Tolerances) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch("point versus cone".into()));
        }
        if self.rays.is_empty() {
            return Ok(vec_ops::norm(y));
        }
        let len = vec_ops::norm(y);
        if len == 0.0 {
            return Ok(0.0);
        }
        let g = Matrix::from_columns(self.dim, &self.rays)?;
        Ok(len * nnls(&g, &vec_ops::scale(y, 1.0 / len), tol)?.residual_norm)
    }

    /// `distance(y) ≤ tol·max(1, |y|)`.
    pub fn contains(&self, y: &[f64], tol: f64, tols: &Tolerances) -> Result<bool> {
        Ok(self.distance(y, tols)? <= tol * vec_ops::norm(y).max(1.0))
    }

    /// Negative dual `{w : Rᵀw ≤ 0}`.
    pub fn dual(&self) -> HCone {
        let rows = self.rays.iter().map(|r| vec_ops::scale(r, -1.0)).collect();
        HCone::new(self.dim, rows).expect("rays are nonzero")
    }

    pub fn to_hcone(&self) -> Result<HCone> {
        dd_convert_back(self)
    }
}

/// A cone kept in both representations.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCone {
    pub h: HCone,
    pub v: VCone,
}

impl PolyCone {
    pub fn from_h(h: HCone) -> Result<Self> {
        let v = h.to_vcone()?;
        Ok(PolyCone { h, v })
    }

    pub fn from_v(v: VCone) -> Result<Self> {
        let h = v.to_hcone()?;
        Ok(PolyCone { h, v })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.h.contains(y, tol)
    }

    /// Negative dual, in both forms.
    pub fn dual(&self) -> PolyCone {
        PolyCone { h: self.v.dual(), v: self.h.dual() }
    }
}
