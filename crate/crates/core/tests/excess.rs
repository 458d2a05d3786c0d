mod common;

use common::{tol, Gen};
use ige_core::cones::HCone;
use ige_core::numkit::vec_ops;
use ige_core::setvalues::{
    conic_extension_excess_check, dist_point_to, enlarge, excess_over_cone, BallPolytope, ConvexPiece, SetExpr,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn enlargement_adds_radius(seed in any::<u64>(), dim in 2usize..=3, r in 0.05f64..2.0) {
        let mut g = Gen::new(seed);
        let c = g.pointed_vcone(dim, 3).to_hcone().unwrap();
        let s = SetExpr::single(g.polytope(dim, 3, &vec![-1.0; dim], 0.5));
        let base = excess_over_cone(&s, &c, &tol()).unwrap().value();
        prop_assume!(base > 1e-3);
        let e = enlarge(&s, r, 32).unwrap();
        let inner = excess_over_cone(&e.inner, &c, &tol()).unwrap().value();
        let outer = excess_over_cone(&e.outer, &c, &tol()).unwrap().value();
        prop_assert!(inner <= base + r + 1e-9);
        prop_assert!(inner >= base + r * (1.0 - e.inner_gap) - 1e-9);
        prop_assert!(outer >= base + r - 1e-9);
        prop_assert!(outer <= base + r * (1.0 + e.outer_gap) + 1e-9);
    }

    #[test]
    fn conic_extension_keeps_excess(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let c = g.pointed_vcone(dim, 3).to_hcone().unwrap();
        let s = SetExpr::single(g.polytope(dim, 4, &vec![0.0; dim], 1.0));
        let (lhs, rhs) = conic_extension_excess_check(&s, &c, &tol()).unwrap();
        prop_assert!((lhs.value() - rhs.value()).abs() <= 1e-9);
    }

    #[test]
    fn inscribed_ball_excess_is_at_most_radius(seed in any::<u64>(), dim in 2usize..=3, r in 0.1f64..3.0) {
        let mut g = Gen::new(seed);
        let c = g.pointed_vcone(dim, 3).to_hcone().unwrap();
        let ball = BallPolytope::new(dim, 32).unwrap();
        let s = SetExpr::single(ConvexPiece::new(ball.vertices.iter().map(|v| vec_ops::scale(v, r)).collect(), vec![]).unwrap());
        let e = excess_over_cone(&s, &c, &tol()).unwrap().value();
        prop_assert!(e <= r + 1e-12);
        // −e₁ lies in C⁻ (every ray has a positive first coordinate), so exc(r𝔹, C) = r
        prop_assert!(e >= r * (1.0 - ball.gap()) - 1e-9);
    }

    #[test]
    fn vertex_max_matches_boundary_sampling(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let c = g.pointed_vcone(2, 2).to_hcone().unwrap();
        let piece = g.polytope(2, 3, &[0.0, 0.0], 1.0);
        let e = excess_over_cone(&SetExpr::single(piece.clone()), &c, &tol()).unwrap().value();
        let vs = piece.vertices();
        let mut brute = 0.0f64;
        for (i, a) in vs.iter().enumerate() {
            let b = &vs[(i + 1) % vs.len()];
            for k in 0..=1000 {
                let t = k as f64 * 1e-3;
                let y = vec_ops::add(&vec_ops::scale(a, 1.0 - t), &vec_ops::scale(b, t));
                brute = brute.max(c.distance(&y, &tol()).unwrap());
            }
        }
        prop_assert!((e - brute).abs() <= 1e-3);
    }

    #[test]
    fn distance_is_zero_exactly_on_members(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let mut piece = g.polytope(dim, 4, &vec![0.0; dim], 1.0);
        if seed % 2 == 0 {
            piece = piece.with_rays(&[g.unit(dim)]).unwrap();
        }
        let s = SetExpr::single(piece.clone());
        for _ in 0..50 {
            // convex combination of vertices plus a ray step is a member
            let w: Vec<f64> = (0..piece.vertices().len()).map(|_| g.uniform(0.0, 1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut y = vec![0.0; dim];
            for (v, wi) in piece.vertices().iter().zip(&w) {
                y = vec_ops::axpy(&y, wi / total, v);
            }
            for r in piece.rays() {
                y = vec_ops::axpy(&y, g.uniform(0.0, 3.0), r);
            }
            prop_assert!(dist_point_to(&y, &s, &tol()).unwrap().distance <= 1e-9);
            let far = vec_ops::axpy(&y, 1e3, &g.unit(dim));
            let d = dist_point_to(&far, &s, &tol()).unwrap();
            prop_assert!(d.distance > 0.0 && (vec_ops::dist(&d.nearest, &far) - d.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn order_cancellation(seed in any::<u64>()) {
        // A + B ⊆ B + C checked on vertices implies A ⊆ C
        let mut g = Gen::new(seed);
        let c = g.pointed_vcone(2, 2);
        let ch = c.to_hcone().unwrap();
        let a = g.polytope(2, 3, &[2.0, 0.0], 0.5);
        let b = g.polytope(2, 3, &[0.0, 0.0], 1.0);
        let bc = SetExpr::single(b.with_rays(c.rays()).unwrap());
        let mut included = true;
        for va in a.vertices() {
            for vb in b.vertices() {
                included &= dist_point_to(&vec_ops::add(va, vb), &bc, &tol()).unwrap().distance <= 1e-9;
            }
        }
        if included {
            for va in a.vertices() {
                prop_assert!(ch.contains(va, 1e-9));
            }
        }
    }
}

#[test]
fn ball_polytopes_contain_their_inradius() {
    for dim in 2..=4 {
        let ball = BallPolytope::new(dim, 32).unwrap();
        let mut g = Gen::new(dim as u64);
        let piece = ConvexPiece::new(ball.vertices.clone(), vec![]).unwrap();
        for _ in 0..200 {
            let u = g.unit(dim);
            // support function in direction u bounds the inscribed radius
            let support = ball.vertices.iter().map(|v| vec_ops::dot(v, &u)).fold(f64::NEG_INFINITY, f64::max);
            assert!(support >= ball.inradius - 1e-12, "dim {dim}: support {support} below {}", ball.inradius);
            let p = vec_ops::scale(&u, ball.inradius);
            assert!(piece.project(&p, &tol()).unwrap().distance <= 1e-8);
        }
    }
}

#[test]
fn orthant_ball_excess_is_attained_at_the_diagonal() {
    let ball = BallPolytope::new(2, 64).unwrap();
    let s = SetExpr::single(ConvexPiece::new(ball.vertices.clone(), vec![]).unwrap());
    let e = excess_over_cone(&s, &HCone::orthant(2), &tol()).unwrap().value();
    assert!(e <= 1.0 && e >= 1.0 - ball.gap());
}
