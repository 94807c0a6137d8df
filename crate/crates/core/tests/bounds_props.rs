use antiplane_core::bounds::*;
use antiplane_core::laws::HypothesisConstants;
use proptest::prelude::*;

fn consts(v: [f64; 5]) -> HypothesisConstants {
    HypothesisConstants {
        c0_phi: v[0],
        c1_phi: v[1],
        c2_phi: v[2],
        c1_vphi: v[3],
        c2_vphi: v[3],
        c3_vphi: v[3],
        c0_beta: v[4],
        c1_beta: v[3],
        c2_beta: v[3],
        c3_beta: v[3],
    }
}

fn norms(v: [f64; 4]) -> DataNorms {
    DataNorms {
        f0: v[0],
        f_n: v[1],
        beta: v[2],
        xi: v[3],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gronwall_is_monotone_in_each_argument(
        args in prop::array::uniform5(0.0f64..2.0),
        which in 0usize..5,
        bump in 0.0f64..1.0,
    ) {
        let eval = |a: [f64; 5]| gronwall_beta_rhs(a[0], a[1], a[2], a[3], a[4]).value();
        let mut up = args;
        up[which] += bump;
        prop_assert!(eval(up) >= eval(args));
    }

    #[test]
    fn k_scales_inversely_with_mu_star(c in prop::array::uniform5(0.0f64..2.0), n in prop::array::uniform4(0.0f64..3.0), mu in 0.1f64..10.0, c0 in 0.1f64..1.0) {
        let k1 = compute_k(mu, &consts(c), &norms(n), c0);
        let k2 = compute_k(2.0 * mu, &consts(c), &norms(n), c0);
        prop_assert!((k1 - 2.0 * k2).abs() <= 1e-12 * k1.max(1.0));
        prop_assert!(k1 >= 0.0);
    }

    #[test]
    fn h1_rhs_is_affine_in_xi(c in prop::array::uniform5(0.0f64..2.0), n in prop::array::uniform4(0.0f64..3.0), c0 in 0.1f64..1.0) {
        let at = |xi: f64| apriori_h1_rhs(1.5, &consts(c), &DataNorms { xi, ..norms(n) }, c0);
        let slope = at(1.0) - at(0.0);
        prop_assert!((at(2.0) - at(0.0) - 2.0 * slope).abs() <= 1e-12 * (1.0 + at(2.0)));
        prop_assert!(at(0.0) >= 1.0);
    }
}

#[test]
fn gronwall_special_cases() {
    assert_eq!(gronwall_beta_rhs(0.7, 0.4, 3.0, 2.0, 0.0).value(), 0.7);
    assert_eq!(gronwall_beta_rhs(0.7, 0.5, 3.0, 0.0, 2.0).value(), 1.7);
    let huge = gronwall_beta_rhs(1.0, 1.0, 10.0, 100.0, 10.0);
    assert!(!huge.is_finite() && huge.value().is_infinite());
}
