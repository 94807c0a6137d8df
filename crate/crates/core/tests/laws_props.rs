use antiplane_core::laws::*;
use proptest::prelude::*;

const LAWS: [AdhesionLaw; 4] = [AdhesionLaw::E1, AdhesionLaw::E1Ed0, AdhesionLaw::E2, AdhesionLaw::E3];

#[test]
fn derived_constants_hold_for_every_law() {
    let fric = FrictionSpec::new(0.3, 0.2, 0.5).unwrap();
    for (i, law) in LAWS.into_iter().enumerate() {
        let adh = AdhesionSpec::uniform(law, 1.7, 0.4, 3).unwrap();
        let consts = derive_constants(&fric, &adh);
        assert!(consts.all_nonnegative());
        let rep = check_hypotheses(&fric, &adh, &consts, 10_000, &SampleBox::default(), 100 + i as u64);
        assert_eq!(rep.checks.len(), CHECK_NAMES.len());
        assert!(rep.worst_slack() >= -1e-12, "{law:?}: {:?}", rep.checks);
        assert_eq!(rep.violations(), 0);
    }
}

#[test]
fn published_e3_rate_constant_is_too_small() {
    let fric = FrictionSpec::zero();
    let adh = AdhesionSpec::uniform(AdhesionLaw::E3, 1.0, 0.0, 1).unwrap();
    let published = published_constants(&fric, &adh);
    assert_eq!(published.c3_beta, 0.5);
    let rep = check_hypotheses(&fric, &adh, &published, 10_000, &SampleBox::default(), 7);
    assert!(rep.check("H3(ii)").unwrap().violations > 0);
    // The counterexample by hand: y₁ = 0, y₂ = ½, r₁ = r₂ = 1.
    let lhs = (eval_h(AdhesionLaw::E3, 1.0, 0.0, 0.0, 1.0).unwrap()
        - eval_h(AdhesionLaw::E3, 1.0, 0.0, 0.5, 1.0).unwrap())
    .abs();
    assert!((lhs - 1.0 / 3.0).abs() < 1e-15);
    assert!(lhs > published.c3_beta * 0.5);
    assert!(lhs <= derive_constants(&fric, &adh).c3_beta * 0.5);
}

#[test]
fn only_the_e3_rate_constant_differs() {
    let fric = FrictionSpec::new(0.1, 0.2, 0.3).unwrap();
    for law in LAWS {
        let adh = AdhesionSpec::uniform(law, 2.0, 0.5, 2).unwrap();
        let (p, d) = (published_constants(&fric, &adh), derive_constants(&fric, &adh));
        assert_eq!(
            HypothesisConstants { c3_beta: 0.0, ..p },
            HypothesisConstants { c3_beta: 0.0, ..d }
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn friction_bound_is_clamped_and_monotone(
        c0 in 0.0f64..2.0, c1 in 0.0f64..2.0, c2 in 0.0f64..2.0,
        r in 0.0f64..5.0, y in -1.0f64..2.0, dr in 0.0f64..1.0,
    ) {
        let f = FrictionSpec::new(c0, c1, c2).unwrap();
        let g = f.eval_g(r, y).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(f.eval_g(r + dr, y).unwrap() >= g);
        prop_assert_eq!(f.bound(r, y), g);
    }

    #[test]
    fn rate_signs(
        lambda in 0.0f64..5.0, e_d in 0.0f64..2.0, beta in 0.0f64..1.0, u in -3.0f64..3.0,
    ) {
        let h = |law| eval_h(law, lambda, e_d, beta, u).unwrap();
        prop_assert!(h(AdhesionLaw::E1Ed0) <= 0.0);
        prop_assert!(h(AdhesionLaw::E2) <= 0.0);
        prop_assert!(h(AdhesionLaw::E3) <= 0.0);
        prop_assert!((h(AdhesionLaw::E1) - h(AdhesionLaw::E1Ed0) - e_d).abs() <= 1e-12 * (1.0 + lambda * u * u));
        // E2 is the negative part of E1.
        prop_assert_eq!(h(AdhesionLaw::E2), h(AdhesionLaw::E1).min(0.0));
        prop_assert!(h(AdhesionLaw::E3) >= h(AdhesionLaw::E1Ed0));
    }

    #[test]
    fn lemma_bound_on_rate(lambda in 0.0f64..5.0, e_d in 0.0f64..2.0, beta in 0.0f64..1.0, u in -3.0f64..3.0) {
        let fric = FrictionSpec::zero();
        for law in LAWS {
            let adh = AdhesionSpec::uniform(law, lambda, e_d, 1).unwrap();
            let c = derive_constants(&fric, &adh);
            let h = adh.rate(0, beta, u).unwrap();
            prop_assert!(h.abs() <= c.c0_beta + c.c3_beta * beta.abs() * u * u + 1e-12);
        }
    }
}

#[test]
fn law_names_round_trip() {
    for law in LAWS {
        assert_eq!(law.name().parse::<AdhesionLaw>().unwrap(), law);
    }
    let err = "E4".parse::<AdhesionLaw>().unwrap_err();
    assert!(err.to_string().contains("unknown law"));
}
