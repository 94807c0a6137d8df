use antiplane_core::bonding::*;
use antiplane_core::bounds::{verify_beta_box, BoxPolicy};
use antiplane_core::fem::BoundaryField;
use antiplane_core::laws::{AdhesionLaw, AdhesionSpec};
use antiplane_core::oracle::scalar_e3_solution;
use proptest::prelude::*;

fn constant_trace(grid: &TimeGrid, values: &[f64]) -> Vec<BoundaryField> {
    (0..grid.n_nodes())
        .map(|k| BoundaryField {
            values: values.to_vec(),
            time_index: k,
        })
        .collect()
}

fn picard(beta0: f64, u: f64, lambda: f64, law: AdhesionLaw, n_steps: usize) -> BetaTrajectory {
    let grid = TimeGrid::new(1.0, n_steps).unwrap();
    let adh = AdhesionSpec::uniform(law, lambda, 0.0, 1).unwrap();
    let traces = constant_trace(&grid, &[u]);
    let opts = PicardOptions {
        tol: 1e-14,
        ..PicardOptions::default()
    };
    picard_solve(
        &BoundaryField::constant(1, beta0, 0),
        &traces,
        &adh,
        &grid,
        &[1.0],
        &opts,
        None,
    )
    .unwrap()
    .0
}

#[test]
fn e3_against_first_integral() {
    let exact = scalar_e3_solution(1.0, 1.0, 1.0, 1.0);
    assert!((exact - 0.567_143_290).abs() < 1e-9);

    let at_end = |n: usize| picard(1.0, 1.0, 1.0, AdhesionLaw::E3, n).fields[n].values[0];
    let e1000 = (at_end(1000) - exact).abs();
    let e2000 = (at_end(2000) - exact).abs();
    assert!(e1000 <= 1e-6, "Picard error {e1000}");
    assert!(e1000 / e2000 >= 3.5, "refinement gain {}", e1000 / e2000);

    let grid = TimeGrid::new(1.0, 1000).unwrap();
    let adh = AdhesionSpec::uniform(AdhesionLaw::E3, 1.0, 0.0, 1).unwrap();
    let rk = rk4_integrate(
        &BoundaryField::constant(1, 1.0, 0),
        &constant_trace(&grid, &[1.0]),
        &adh,
        &grid,
    )
    .unwrap();
    assert!((rk.fields[1000].values[0] - exact).abs() <= 1e-9);
}

#[test]
fn e3_matches_oracle_along_the_trajectory() {
    let traj = picard(0.7, 1.3, 0.8, AdhesionLaw::E3, 400);
    for k in (0..=400).step_by(40) {
        let t = k as f64 / 400.0;
        assert!((traj.fields[k].values[0] - scalar_e3_solution(0.7, 0.8, 1.3, t)).abs() < 1e-6);
    }
}

#[test]
fn picard_and_rk4_agree_at_second_order() {
    // Time-varying trace on three contact vertices.
    let laws = [AdhesionLaw::E1, AdhesionLaw::E1Ed0, AdhesionLaw::E2, AdhesionLaw::E3];
    for law in laws {
        let mut gaps = Vec::new();
        for n in [50, 100, 200] {
            let grid = TimeGrid::new(1.5, n).unwrap();
            let traces: Vec<BoundaryField> = grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(k, t)| BoundaryField {
                    values: vec![0.5 + t, (2.0 * t).sin(), 0.2],
                    time_index: k,
                })
                .collect();
            let adh = AdhesionSpec::new(law, vec![1.0, 0.5, 2.0], vec![0.3, 0.1, 0.0]).unwrap();
            let beta0 = BoundaryField {
                values: vec![0.9, 0.6, 0.3],
                time_index: 0,
            };
            let opts = PicardOptions {
                tol: 1e-14,
                ..PicardOptions::default()
            };
            let w = [1.0; 3];
            let (p, report) = picard_solve(&beta0, &traces, &adh, &grid, &w, &opts, None).unwrap();
            let r = rk4_integrate(&beta0, &traces, &adh, &grid).unwrap();
            let gap = p
                .fields
                .iter()
                .zip(&r.fields)
                .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            gaps.push(gap);
            if let Some(rate) = report.fitted_ratio {
                assert!(rate < 1.0);
            }
        }
        // Second order, with some allowance for the kink in E2.
        assert!(gaps[0] < 1e-3, "{law:?}: {gaps:?}");
        assert!(gaps[0] / gaps[2] > 3.0, "{law:?}: {gaps:?}");
    }
}

#[test]
fn warm_start_reaches_the_same_fixed_point() {
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let traces = constant_trace(&grid, &[0.8, -0.4]);
    let adh = AdhesionSpec::uniform(AdhesionLaw::E1, 1.0, 0.2, 2).unwrap();
    let beta0 = BoundaryField::constant(2, 0.5, 0);
    let opts = PicardOptions::default();
    let w = [0.5, 0.5];
    let (cold, _) = picard_solve(&beta0, &traces, &adh, &grid, &w, &opts, None).unwrap();
    let (warm, report) = picard_solve(&beta0, &traces, &adh, &grid, &w, &opts, Some(&cold)).unwrap();
    assert_eq!(report.iterations, 1);
    assert!(cold.distance(&warm, &w) <= 1e-13);
}

fn decreasing_law() -> impl Strategy<Value = AdhesionLaw> {
    prop_oneof![Just(AdhesionLaw::E1Ed0), Just(AdhesionLaw::E2), Just(AdhesionLaw::E3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn box_and_monotonicity_within_safe_horizon(
        law in decreasing_law(),
        lambda in 0.1f64..3.0,
        e_d in 0.0f64..0.5,
        b0 in prop::collection::vec(0.2f64..0.9, 4),
        u in prop::collection::vec(-2.0f64..2.0, 4),
        n in 5usize..60,
    ) {
        let adh = AdhesionSpec::uniform(law, lambda, e_d, 4).unwrap();
        let beta0 = BoundaryField { values: b0, time_index: 0 };
        let probe = TimeGrid::new(1.0, n).unwrap();
        let traces_probe = constant_trace(&probe, &u);
        let horizon = safe_horizon(&beta0, &traces_probe, &adh).unwrap_or(2.0).min(2.0);
        let grid = TimeGrid::new(horizon, n).unwrap();
        let traces: Vec<BoundaryField> = grid.nodes().iter().enumerate()
            .map(|(k, t)| BoundaryField { values: u.iter().map(|x| x * (1.0 - 0.3 * t / horizon)).collect(), time_index: k })
            .collect();
        let (traj, _) = picard_solve(&beta0, &traces, &adh, &grid, &[0.25; 4], &PicardOptions::default(), None).unwrap();
        let check = verify_beta_box(&traj, BoxPolicy::UNIT);
        prop_assert!(check.box_ok && check.monotone_ok, "{check:?}");
        let rk = rk4_integrate(&beta0, &traces, &adh, &grid).unwrap();
        let rk_check = verify_beta_box(&rk, BoxPolicy::UNIT);
        prop_assert!(rk_check.box_ok && rk_check.monotone_ok);
    }

    #[test]
    fn e3_oracle_decreases_in_time_and_forcing(b0 in 0.05f64..1.0, s in 0.01f64..4.0, t in 0.01f64..2.0) {
        let v = scalar_e3_solution(b0, 1.0, s.sqrt(), t);
        prop_assert!(v < b0);
        prop_assert!(scalar_e3_solution(b0, 1.0, s.sqrt(), 1.5 * t) < v);
        prop_assert!(scalar_e3_solution(b0, 1.5, s.sqrt(), t) < v);
        prop_assert!((v.ln() + v - (b0.ln() + b0 - s * t)).abs() < 1e-10);
    }
}
