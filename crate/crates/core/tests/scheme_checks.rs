use antiplane_core::bonding::{picard_solve, PicardOptions, TimeGrid};
use antiplane_core::bounds::{evaluate_bounds, h1_ratio_history};
use antiplane_core::fem::*;
use antiplane_core::laws::{AdhesionLaw, AdhesionSpec, FrictionSpec};
use antiplane_core::mesh::{Mesh, SideTags};
use antiplane_core::scheme::*;
use antiplane_core::sparse::solve_spd;
use antiplane_core::vi::{InnerOptions, ViError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(n: usize, law: AdhesionLaw, lambda: f64, fric: FrictionSpec, beta0: f64) -> CoupledProblem {
    let mesh = Mesh::structured_rectangle(1.0, 1.0, n, n, SideTags::contact_bottom()).unwrap();
    let nc = build_dof_map(&mesh).n_contact();
    let f0 = interpolate(&mesh, |x, _| 1.0 + x);
    CoupledProblem::new(
        mesh.clone(),
        Material::uniform(&mesh, 1.0),
        fric,
        AdhesionSpec::uniform(law, lambda, 0.1, nc).unwrap(),
        Loads::constant(f0, vec![0.0; mesh.n_vertices()]),
        BoundaryField::constant(nc, beta0, 0),
    )
    .unwrap()
}

fn sliding_friction() -> FrictionSpec {
    FrictionSpec::new(0.05, 0.0, 0.1).unwrap()
}

fn config(tol: f64) -> SchemeConfig {
    SchemeConfig {
        tol_outer: tol,
        ..SchemeConfig::new(TimeGrid::new(1.0, 10).unwrap())
    }
}

#[test]
fn frictionless_nonadhesive_case_is_one_linear_solve() {
    let p = problem(8, AdhesionLaw::E1Ed0, 0.0, FrictionSpec::zero(), 0.6);
    let sol = run_coupled(&p, &config(1e-10)).unwrap().into_result().unwrap();
    assert_eq!(sol.report.iterations.len(), 2);
    assert_eq!(sol.report.iterations[1].e_u, 0.0);
    let k = assemble_stiffness(&p.mesh, &p.material.mu, &p.dofs).unwrap();
    let (f0, f_n) = p.loads.at(0);
    let direct = solve_spd(&k, &assemble_load(&p.mesh, f0, f_n, &p.dofs).unwrap()).unwrap();
    for u in &sol.u {
        let free = u.free_values(&p.dofs);
        assert!(free.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-10));
    }
    assert!(sol.beta.fields.iter().all(|f| f.values.iter().all(|&b| b == 0.6)));
}

#[test]
fn contraction_with_small_data() {
    let p = problem(8, AdhesionLaw::E1, 0.2, sliding_friction(), 0.8);
    let cfg = config(1e-9);
    let sol = run_coupled(&p, &cfg).unwrap();
    let rep = &sol.report;
    assert_eq!(rep.termination, Termination::Converged);
    assert!(rep.smallness.pass && rep.smallness.delta_hat <= 0.5);
    let ratios = rep.ratios();
    assert!(ratios.len() >= 3 && ratios.iter().all(|&r| r < 1.0), "{ratios:?}");
    let (b_fit, _) = fit_contraction(rep).unwrap();
    assert!(b_fit < 0.9);
    let residuals = posthoc_optimality(&p, &sol, cfg.grid).unwrap();
    assert!(residuals.iter().all(|&r| r <= 10.0 * cfg.tol_outer), "{residuals:?}");
    // Nonzero sliding somewhere on the contact boundary.
    assert!(sol.u.iter().any(|u| trace_restrict(u, &p.dofs).linf() > 0.1));
}

#[test]
fn bonding_field_is_self_consistent() {
    let p = problem(6, AdhesionLaw::E3, 0.5, sliding_friction(), 0.7);
    let cfg = config(1e-10);
    let sol = run_coupled(&p, &cfg).unwrap().into_result().unwrap();
    let traces: Vec<BoundaryField> = sol.u.iter().map(|u| trace_restrict(u, &p.dofs)).collect();
    let w = p.contact_weights();
    let (beta, _) = picard_solve(
        &p.beta0,
        &traces,
        &p.adhesion,
        &cfg.grid,
        &w,
        &PicardOptions::default(),
        None,
    )
    .unwrap();
    assert!(beta.distance(&sol.beta, &w) <= cfg.tol_outer);
}

#[test]
fn runs_are_bit_identical() {
    let p = problem(6, AdhesionLaw::E2, 0.4, sliding_friction(), 0.9);
    let a = run_coupled(&p, &config(1e-9)).unwrap();
    let b = run_coupled(&p, &config(1e-9)).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.u, b.u);
    assert_eq!(a.beta, b.beta);
}

#[test]
fn limit_does_not_depend_on_the_initial_guess() {
    let p = problem(6, AdhesionLaw::E1Ed0, 0.3, sliding_friction(), 0.8);
    let cfg = config(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let free: Vec<f64> = (0..p.dofs.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut random = ScalarField::from_free(&p.dofs, &free, 0);
    let s = h1_norm(&p.mesh, &random.values);
    random.values.iter_mut().for_each(|v| *v /= s);
    let zero = ScalarField::zeros(p.mesh.n_vertices(), 0);
    let probe = uniqueness_probe(&p, &cfg, zero.clone(), random).unwrap();
    assert!(probe.u_distance <= 10.0 * cfg.tol_outer, "{}", probe.u_distance);
    assert!(probe.beta_distance <= 10.0 * cfg.tol_outer);
    let same = uniqueness_probe(&p, &cfg, zero.clone(), zero).unwrap();
    assert_eq!(same.u_distance, 0.0);
    assert_eq!(same.beta_distance, 0.0);
}

#[test]
fn strong_adhesion_diverges() {
    let p = problem(8, AdhesionLaw::E3, 2.0, sliding_friction(), 0.8);
    let sol = run_coupled(&p, &config(1e-9)).unwrap();
    assert_eq!(sol.report.termination, Termination::Diverged);
    assert!(!sol.report.smallness.pass);
    let tail: Vec<f64> = sol.report.ratios().into_iter().rev().take(3).collect();
    assert!(tail.iter().all(|&r| r >= 1.0));
    match sol.into_result() {
        Err(SchemeError::Diverged(msg)) => assert!(msg.contains("δ_hat")),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn budget_exhaustion_is_reported() {
    let p = problem(6, AdhesionLaw::E1, 0.2, sliding_friction(), 0.8);
    let cfg = SchemeConfig {
        max_outer: 2,
        ..config(1e-12)
    };
    let sol = run_coupled(&p, &cfg).unwrap();
    assert_eq!(sol.report.termination, Termination::MaxOuter);
    assert_eq!(sol.report.iterations.len(), 2);
    assert!(matches!(
        sol.into_result(),
        Err(SchemeError::BudgetExceeded { iterations: 2, .. })
    ));
}

#[test]
fn inner_failure_names_the_time_node() {
    let p = problem(6, AdhesionLaw::E1, 0.2, sliding_friction(), 0.8);
    let cfg = SchemeConfig {
        inner: InnerOptions {
            max_iter: 0,
            ..InnerOptions::default()
        },
        ..config(1e-9)
    };
    match run_coupled(&p, &cfg) {
        Err(SchemeError::Inner {
            time_index: 0,
            source: ViError::MaxIter { .. },
        }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = problem(4, AdhesionLaw::E1, 0.2, sliding_friction(), 0.8);
    let low = Material {
        mu: vec![0.5; p.mesh.n_triangles()],
        mu_star: 1.0,
    };
    let err = CoupledProblem::new(
        p.mesh.clone(),
        low,
        p.friction,
        p.adhesion.clone(),
        p.loads.clone(),
        p.beta0.clone(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("below μ_*"));
    let short = BoundaryField::constant(2, 0.5, 0);
    assert!(CoupledProblem::new(
        p.mesh.clone(),
        p.material.clone(),
        p.friction,
        p.adhesion.clone(),
        p.loads.clone(),
        short
    )
    .is_err());
    let bad_guess = SchemeConfig {
        initial_u: InitialGuess::Field(ScalarField {
            values: vec![1.0; p.mesh.n_vertices()],
            time_index: 0,
        }),
        ..config(1e-9)
    };
    assert!(matches!(run_coupled(&p, &bad_guess), Err(SchemeError::Input(_))));
}

#[test]
fn bounds_on_converged_runs() {
    let mut linf_ratios = Vec::new();
    for n in [8, 16, 32] {
        let p = problem(n, AdhesionLaw::E1, 0.2, sliding_friction(), 0.8);
        let sol = run_coupled(&p, &config(1e-9)).unwrap().into_result().unwrap();
        let c0 = estimate_trace_constant(&p.mesh, &p.dofs).unwrap().c0_hat;
        let b = evaluate_bounds(&p, &sol, c0);
        assert!(b.k_value.is_finite() && b.linf_ratio > 0.0);
        assert!(b.gronwall_rhs.is_finite() && sol.beta.linf() <= b.gronwall_rhs.value());
        assert!(b.beta_box_ok && b.beta_monotone_ok);
        let hist = h1_ratio_history(&p, &sol, c0);
        assert!(hist.iter().all(|r| r.is_finite() && *r >= 0.0));
        linf_ratios.push(b.linf_ratio);
    }
    let (lo, hi) = linf_ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 2.0, "{linf_ratios:?}");
}
