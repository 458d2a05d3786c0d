mod common;

use common::{classify, tol, Gen};
use ige_core::cones::{dd_convert, dd_convert_back, dual_calculus_sum, preimage_cone, HCone, VCone};
use ige_core::numkit::vec_ops;
use proptest::prelude::*;

const SAMPLES: usize = 300;
const MARGIN: f64 = 1e-6;

/// `h` and `v` describe the same cone: interior points of `h` are at distance ~0 from `v`, and
/// points outside `h` are at least their halfspace violation away from `v`.
fn same_cone(h: &HCone, v: &VCone, g: &mut Gen) -> Result<(), TestCaseError> {
    for _ in 0..SAMPLES {
        let y = g.unit(h.dim());
        let d = v.distance(&y, &tol()).unwrap();
        match classify(h, &y, MARGIN) {
            Some(true) => prop_assert!(d <= 1e-8, "interior point {y:?} at distance {d}"),
            Some(false) => prop_assert!(d >= -h.margin(&y) * (1.0 - 1e-6), "exterior point {y:?} at distance {d}"),
            None => {}
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn double_description_round_trip(seed in any::<u64>(), dim in 2usize..=3, rows in 1usize..=6) {
        let mut g = Gen::new(seed);
        let h = g.hcone(dim, rows);
        let v = dd_convert(&h).unwrap();
        same_cone(&h, &v, &mut g)?;
        let back = dd_convert_back(&v).unwrap();
        for _ in 0..SAMPLES {
            let y = g.unit(dim);
            if let (Some(a), Some(b)) = (classify(&h, &y, MARGIN), classify(&back, &y, MARGIN)) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn double_dual_is_identity(seed in any::<u64>(), dim in 2usize..=3, rows in 1usize..=6) {
        let mut g = Gen::new(seed);
        let h = g.hcone(dim, rows);
        // C⁻ in H-form via generators of C, then C⁻⁻ in H-form via generators of C⁻
        let dual = dd_convert(&h).unwrap().dual();
        let double = dd_convert(&dual).unwrap().dual();
        for _ in 0..SAMPLES {
            let y = g.unit(dim);
            if let (Some(a), Some(b)) = (classify(&h, &y, MARGIN), classify(&double, &y, MARGIN)) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn dual_of_intersection_is_sum(seed in any::<u64>(), n in 2usize..=3, m in 2usize..=3) {
        let mut g = Gen::new(seed);
        let rows = g.index(1, 3);
        let q = g.hcone(n, rows);
        let c = g.pointed_vcone(m, 3).to_hcone().unwrap();
        let lambda = g.matrix(m, n);
        let sum = dual_calculus_sum(&q, &lambda, &c).unwrap();
        let k = q.intersect(&preimage_cone(&lambda, &c).unwrap()).unwrap();
        let direct = dd_convert(&k).unwrap().dual();
        same_cone(&direct, &sum, &mut g)?;
    }

    #[test]
    fn projection_is_nearest(seed in any::<u64>(), dim in 2usize..=4, rows in 1usize..=5) {
        let mut g = Gen::new(seed);
        let h = g.hcone(dim, rows);
        let v = dd_convert(&h).unwrap();
        for _ in 0..20 {
            let y = g.normal_vec(dim);
            let d = h.distance(&y, &tol()).unwrap();
            // no generator combination gets closer than the Moreau distance
            for r in v.rays() {
                let t = vec_ops::dot(r, &y).max(0.0);
                prop_assert!(vec_ops::dist(&vec_ops::scale(r, t), &y) >= d - 1e-9);
            }
            prop_assert!((d - v.distance(&y, &tol()).unwrap()).abs() <= 1e-7 * vec_ops::norm(&y).max(1.0));
        }
    }
}
