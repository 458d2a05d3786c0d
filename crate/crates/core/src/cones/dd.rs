//! Double description (Motzkin) conversion between inequality and generator forms.
//!
//! The lineality space `L = ker A` is split off first. The pointed remainder is enumerated in
//! coordinates of the row space of `A`, starting from a simplicial cone on `r = rank A`
//! independent rows and adding the remaining rows one at a time. Two rays are adjacent when the
//! processed rows tight at both have rank `r − 2`.

use alloc::vec;
use alloc::vec::Vec;

use super::{HCone, VCone};
use crate::numkit::{least_squares, vec_ops, Matrix};
use crate::{Error, Result};

pub const DD_DIMENSION_CAP: usize = 10;

const ZERO_TOL: f64 = 1e-9;

/// Modified Gram–Schmidt over `vectors`; returns the orthonormal basis and the indices kept.
fn orthonormal_basis(vectors: &[Vec<f64>], seed: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut basis: Vec<Vec<f64>> = seed.to_vec();
    let mut kept = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let scale = vec_ops::norm(v);
        if scale <= 1e-300 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = vec_ops::dot(&w, b);
                w = vec_ops::axpy(&w, -c, b);
            }
        }
        let nw = vec_ops::norm(&w);
        if nw > ZERO_TOL * scale {
            basis.push(vec_ops::scale(&w, 1.0 / nw));
            kept.push(i);
        }
    }
    (basis.split_off(seed.len()), kept)
}

fn rank(rows: &[&Vec<f64>]) -> usize {
    let owned: Vec<Vec<f64>> = rows.iter().map(|r| (*r).clone()).collect();
    orthonormal_basis(&owned, &[]).1.len()
}

struct Ray {
    z: Vec<f64>,
    tight: Vec<usize>,
}

/// Inequality form to generator form.
pub fn dd_convert(c: &HCone) -> Result<VCone> {
    let n = c.dim();
    if n > DD_DIMENSION_CAP {
        return Err(Error::DimensionGuard { dim: n, cap: DD_DIMENSION_CAP });
    }
    let units: Vec<Vec<f64>> = (0..n).map(|i| vec_ops::unit(n, i)).collect();
    let (q, _) = orthonormal_basis(c.rows(), &[]);
    let (lineality, _) = orthonormal_basis(&units, &q);
    let r = q.len();

    let mut out: Vec<Vec<f64>> = Vec::new();
    for b in &lineality {
        out.push(b.clone());
        out.push(vec_ops::scale(b, -1.0));
    }
    if r == 0 {
        return VCone::new(n, out);
    }

    // rows in row-space coordinates, normalized
    let reduced: Vec<Vec<f64>> = c
        .rows()
        .iter()
        .map(|a| {
            let z: Vec<f64> = q.iter().map(|qi| vec_ops::dot(a, qi)).collect();
            vec_ops::normalized(&z).unwrap_or(z)
        })
        .collect();
    let (_, start) = orthonormal_basis(&reduced, &[]);
    debug_assert_eq!(start.len(), r);
    let m = Matrix::from_rows(r, &start.iter().map(|&i| reduced[i].clone()).collect::<Vec<_>>())?;
    let mut rays: Vec<Ray> = (0..r)
        .map(|k| {
            let z = least_squares(&m, &vec_ops::unit(r, k));
            let z = vec_ops::normalized(&z).unwrap_or(z);
            let tight = start.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &i)| i).collect();
            Ray { z, tight }
        })
        .collect();

    let mut processed: Vec<usize> = start.clone();
    for (i, a) in reduced.iter().enumerate() {
        if start.contains(&i) {
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|ray| vec_ops::dot(a, &ray.z)).collect();
        let sign = |v: f64| {
            if v > ZERO_TOL {
                1
            } else if v < -ZERO_TOL {
                -1
            } else {
                0
            }
        };
        let mut next: Vec<Ray> = Vec::new();
        for (ray, &v) in rays.iter().zip(&vals) {
            match sign(v) {
                1 => next.push(Ray { z: ray.z.clone(), tight: ray.tight.clone() }),
                0 => {
                    let mut t = ray.tight.clone();
                    t.push(i);
                    next.push(Ray { z: ray.z.clone(), tight: t });
                }
                _ => {}
            }
        }
        for (p, &vp) in rays.iter().zip(&vals) {
            if sign(vp) != 1 {
                continue;
            }
            for (qr, &vq) in rays.iter().zip(&vals) {
                if sign(vq) != -1 {
                    continue;
                }
                let common: Vec<usize> = p.tight.iter().copied().filter(|j| qr.tight.contains(j)).collect();
                if r >= 2 {
                    if common.len() + 2 < r {
                        continue;
                    }
                    let rows: Vec<&Vec<f64>> = common.iter().map(|&j| &reduced[j]).collect();
                    if rank(&rows) != r - 2 {
                        continue;
                    }
                }
                let z = vec_ops::add(&vec_ops::scale(&qr.z, vp), &vec_ops::scale(&p.z, -vq));
                let Some(z) = vec_ops::normalized(&z) else { continue };
                let mut tight = common;
                tight.push(i);
                next.push(Ray { z, tight });
            }
        }
        processed.push(i);
        rays = next;
    }

    let mut pointed: Vec<Vec<f64>> = Vec::new();
    for ray in &rays {
        let mut y = vec![0.0; n];
        for (zk, qk) in ray.z.iter().zip(&q) {
            y = vec_ops::axpy(&y, *zk, qk);
        }
        let Some(y) = vec_ops::normalized(&y) else { continue };
        if !pointed.iter().any(|p| vec_ops::dist(p, &y) < 1e-9) {
            pointed.push(y);
        }
    }
    out.extend(pointed);
    VCone::new(n, out)
}

/// Generator form to inequality form: enumerate the generators of the dual cone `{w : Rᵀw ≤ 0}`
/// and negate them.
pub fn dd_convert_back(v: &VCone) -> Result<HCone> {
    let n = v.dim();
    if n > DD_DIMENSION_CAP {
        return Err(Error::DimensionGuard { dim: n, cap: DD_DIMENSION_CAP });
    }
    let dual_gens = dd_convert(&v.dual())?;
    let rows = dual_gens.rays().iter().map(|d| vec_ops::scale(d, -1.0)).collect();
    HCone::new(n, rows)
}
