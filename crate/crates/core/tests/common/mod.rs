#![allow(dead_code)]

use ige_core::cones::{HCone, VCone};
use ige_core::numkit::vec_ops;
use ige_core::sampling::{self, SampleRng};
use ige_core::setvalues::ConvexPiece;
use ige_core::{Matrix, Tolerances};

pub struct Gen(pub SampleRng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(sampling::rng(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        sampling::uniform_in(&mut self.0, lo, hi)
    }

    pub fn index(&mut self, lo: usize, hi: usize) -> usize {
        lo + (sampling::uniform(&mut self.0) * (hi - lo + 1) as f64) as usize
    }

    pub fn normal_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| sampling::normal(&mut self.0)).collect()
    }

    pub fn unit(&mut self, dim: usize) -> Vec<f64> {
        sampling::unit_vector(&mut self.0, dim)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| sampling::normal(&mut self.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    /// Cone with `count` random normals; may have lineality or be `{0}`-like.
    pub fn hcone(&mut self, dim: usize, count: usize) -> HCone {
        HCone::new(dim, (0..count).map(|_| self.normal_vec(dim)).collect()).unwrap()
    }

    /// Pointed cone: every ray has first coordinate at least 0.3 after normalization.
    pub fn pointed_vcone(&mut self, dim: usize, count: usize) -> VCone {
        let rays = (0..count)
            .map(|_| {
                let mut r = self.unit(dim);
                r[0] = r[0].abs() + 0.3;
                r
            })
            .collect();
        VCone::new(dim, rays).unwrap()
    }

    pub fn polytope(&mut self, dim: usize, count: usize, center: &[f64], spread: f64) -> ConvexPiece {
        let verts = (0..count).map(|_| vec_ops::axpy(center, spread, &self.normal_vec(dim))).collect();
        ConvexPiece::new(verts, Vec::new()).unwrap()
    }
}

pub fn tol() -> Tolerances {
    Tolerances::default()
}

/// Largest `a·y/|a|` violation sign test: `Some(inside)` unless `y` is within `margin` of the
/// boundary of the H-cone.
pub fn classify(h: &HCone, y: &[f64], margin: f64) -> Option<bool> {
    let m = h.margin(y) / vec_ops::norm(y).max(1e-300);
    if m.abs() <= margin {
        None
    } else {
        Some(m > 0.0)
    }
}
