//! Outer fixed-point iteration coupling the inner variational inequality
//! with the bonding equation.
//!
//! Iterate `n` freezes `(u^{n−1}, β^{n−1})` in the friction bound and the
//! adhesion term, solves the inner problem at every time node, then solves
//! the bonding equation for `β^n` along the new displacement trace.

use thiserror::Error;

use crate::bonding::{fit_geometric, picard_solve, BetaTrajectory, BondingError, PicardOptions, TimeGrid};
use crate::fem::{
    assemble_load, assemble_stiffness, boundary_weights, build_dof_map, estimate_trace_constant, h1_norm, linf,
    trace_restrict, BoundaryField, DofMap, FemError, LoadVector, ScalarField,
};
use crate::laws::{derive_constants, AdhesionSpec, FrictionSpec, HypothesisConstants};
use crate::mesh::Mesh;
use crate::vi::{
    fold_adhesion, friction_thresholds, optimality_measure, solve_inner, InnerOptions, InnerProblem, ViError,
    ViOperator,
};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("inner solve failed at time node {time_index}: {source}")]
    Inner { time_index: usize, source: ViError },
    #[error("bonding solve failed: {0}")]
    Bonding(#[from] BondingError),
    #[error("outer iteration diverged: {0}")]
    Diverged(String),
    #[error("outer iteration budget exhausted after {iterations} iterations (last e_u + e_β = {last:e})")]
    BudgetExceeded { iterations: usize, last: f64 },
    #[error("contraction fit needs at least 3 recorded ratios, found {0}")]
    InsufficientData(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    /// Shear modulus per triangle.
    pub mu: Vec<f64>,
    /// Lower bound used by the smallness check and the a priori bounds.
    pub mu_star: f64,
}

impl Material {
    pub fn uniform(mesh: &Mesh, mu: f64) -> Self {
        Self {
            mu: vec![mu; mesh.n_triangles()],
            mu_star: mu,
        }
    }
}

/// Per-vertex body force and traction at each time node. A single entry is
/// used at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct Loads {
    pub f0: Vec<Vec<f64>>,
    pub f_n: Vec<Vec<f64>>,
}

impl Loads {
    pub fn constant(f0: Vec<f64>, f_n: Vec<f64>) -> Self {
        Self {
            f0: vec![f0],
            f_n: vec![f_n],
        }
    }

    pub fn zero(n_vertices: usize) -> Self {
        Self::constant(vec![0.0; n_vertices], vec![0.0; n_vertices])
    }

    pub fn at(&self, k: usize) -> (&[f64], &[f64]) {
        let pick = |v: &'_ Vec<Vec<f64>>| -> usize {
            if v.len() == 1 {
                0
            } else {
                k
            }
        };
        (&self.f0[pick(&self.f0)], &self.f_n[pick(&self.f_n)])
    }
}

/// Everything that defines one coupled problem.
#[derive(Clone, Debug)]
pub struct CoupledProblem {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub material: Material,
    pub friction: FrictionSpec,
    pub adhesion: AdhesionSpec,
    pub loads: Loads,
    pub beta0: BoundaryField,
}

impl CoupledProblem {
    pub fn new(
        mesh: Mesh,
        material: Material,
        friction: FrictionSpec,
        adhesion: AdhesionSpec,
        loads: Loads,
        beta0: BoundaryField,
    ) -> Result<Self, SchemeError> {
        let dofs = build_dof_map(&mesh);
        if !(material.mu_star > 0.0) {
            return Err(SchemeError::Input(format!(
                "μ_* = {} must be positive",
                material.mu_star
            )));
        }
        if material.mu.len() != mesh.n_triangles() {
            return Err(SchemeError::Input(format!(
                "{} shear moduli for {} triangles",
                material.mu.len(),
                mesh.n_triangles()
            )));
        }
        if let Some(t) = material.mu.iter().position(|&m| !(m >= material.mu_star)) {
            return Err(SchemeError::Input(format!(
                "μ = {} on triangle {t} is below μ_* = {}",
                material.mu[t], material.mu_star
            )));
        }
        if adhesion.n_contact() != dofs.n_contact() || beta0.values.len() != dofs.n_contact() {
            return Err(SchemeError::Input(format!(
                "adhesion data ({}) and β0 ({}) must match the {} contact vertices",
                adhesion.n_contact(),
                beta0.values.len(),
                dofs.n_contact()
            )));
        }
        if let Some(i) = beta0.values.iter().position(|b| !b.is_finite()) {
            return Err(SchemeError::Input(format!("β0 is not finite at contact vertex {i}")));
        }
        for (name, table) in [("f0", &loads.f0), ("fN", &loads.f_n)] {
            if table.is_empty() || table.iter().any(|v| v.len() != mesh.n_vertices()) {
                return Err(SchemeError::Input(format!("{name} needs one value per vertex")));
            }
            if table.iter().flatten().any(|x| !x.is_finite()) {
                return Err(SchemeError::Input(format!("{name} is not finite")));
            }
        }
        Ok(Self {
            mesh,
            dofs,
            material,
            friction,
            adhesion,
            loads,
            beta0,
        })
    }

    pub fn constants(&self) -> HypothesisConstants {
        derive_constants(&self.friction, &self.adhesion)
    }

    pub fn contact_weights(&self) -> Vec<f64> {
        boundary_weights(&self.mesh, &self.dofs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// Same field at every time node.
    Field(ScalarField),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub grid: TimeGrid,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub inner: InnerOptions,
    pub picard: PicardOptions,
    pub initial_u: InitialGuess,
    /// Project β onto `[0, 1]` (exploratory runs only).
    pub clip_beta_box: bool,
    pub verification: bool,
}

impl SchemeConfig {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            tol_outer: 1e-8,
            max_outer: 100,
            inner: InnerOptions::default(),
            picard: PicardOptions::default(),
            initial_u: InitialGuess::Zero,
            clip_beta_box: false,
            verification: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallnessReport {
    pub mu_star: f64,
    pub c2_phi: f64,
    pub c1_vphi: f64,
    pub beta0_linf: f64,
    pub c0_hat: f64,
    pub delta_hat: f64,
    pub pass: bool,
}

/// `δ = (c2φ c0 + c1ϕ c0 ‖β0‖²∞) / μ_*`; passes when `δ < 1`.
pub fn check_smallness(mu_star: f64, consts: &HypothesisConstants, beta0_linf: f64, c0_hat: f64) -> SmallnessReport {
    let delta_hat = (consts.c2_phi * c0_hat + consts.c1_vphi * c0_hat * beta0_linf * beta0_linf) / mu_star;
    SmallnessReport {
        mu_star,
        c2_phi: consts.c2_phi,
        c1_vphi: consts.c1_vphi,
        beta0_linf,
        c0_hat,
        delta_hat,
        pass: delta_hat < 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    Diverged,
    MaxOuter,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::MaxOuter => "budget_exceeded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterIterate {
    pub n: usize,
    /// `max_k ‖u^n(t_k) − u^{n−1}(t_k)‖_{H¹}` (sum convention).
    pub e_u: f64,
    /// `max_k ‖β^n(t_k) − β^{n−1}(t_k)‖_{L²(Γ_C)}`.
    pub e_beta: f64,
    /// `e_u^n / e_u^{n−1}`, recorded only when the denominator exceeds
    /// `10·tol_outer`.
    pub ratio: Option<f64>,
    pub u_h1_max: f64,
    pub u_linf_max: f64,
    pub xi_h1_max: f64,
    pub xi_linf_max: f64,
    pub beta_prev_linf: f64,
    pub beta_linf: f64,
    pub picard_iterations: usize,
    pub inner_iterations_max: usize,
    pub inner_residual_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: Vec<OuterIterate>,
    pub termination: Termination,
    pub smallness: SmallnessReport,
    pub tol_outer: f64,
    pub clip_beta_box: bool,
}

impl ConvergenceReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.iterations.iter().filter_map(|it| it.ratio).collect()
    }

    pub fn last_error(&self) -> f64 {
        self.iterations.last().map_or(f64::INFINITY, |it| it.e_u + it.e_beta)
    }

    /// Human-readable reason for a divergence abort.
    pub fn divergence_diagnostic(&self) -> String {
        let s = &self.smallness;
        let cause = if self.last_error().is_finite() {
            match self.ratios().last() {
                Some(r) => format!("three consecutive contraction ratios ≥ 1 (last {r:.6})"),
                None => "contraction ratios ≥ 1".to_string(),
            }
        } else {
            "non-finite iterate".to_string()
        };
        format!(
            "{cause}; smallness δ_hat = {:.6} ({}), μ_* = {}, c0_hat = {:.6}",
            s.delta_hat,
            if s.pass { "passes" } else { "fails" },
            s.mu_star,
            s.c0_hat
        )
    }

    /// Geometric tail `e_last·B/(1−B)` bounding the remaining distance to the
    /// limit when the errors contract with rate `B < 1`.
    pub fn geometric_tail(&self, rate: f64) -> Option<f64> {
        if !(rate < 1.0) || rate < 0.0 {
            return None;
        }
        self.iterations.last().map(|it| it.e_u * rate / (1.0 - rate))
    }
}

#[derive(Clone, Debug)]
pub struct CoupledSolution {
    pub grid: TimeGrid,
    pub u: Vec<ScalarField>,
    pub beta: BetaTrajectory,
    pub report: ConvergenceReport,
}

impl CoupledSolution {
    /// Diverged and budget-exhausted runs as errors.
    pub fn into_result(self) -> Result<Self, SchemeError> {
        match self.report.termination {
            Termination::Converged => Ok(self),
            Termination::Diverged => Err(SchemeError::Diverged(self.report.divergence_diagnostic())),
            Termination::MaxOuter => Err(SchemeError::BudgetExceeded {
                iterations: self.report.iterations.len(),
                last: self.report.last_error(),
            }),
        }
    }
}

/// Assembled operators reused across iterations.
pub struct Prepared<'p> {
    pub problem: &'p CoupledProblem,
    pub op: ViOperator,
    pub weights: Vec<f64>,
    pub base_loads: Vec<LoadVector>,
    pub grid: TimeGrid,
}

impl<'p> Prepared<'p> {
    pub fn new(problem: &'p CoupledProblem, grid: TimeGrid) -> Result<Self, SchemeError> {
        let a = assemble_stiffness(&problem.mesh, &problem.material.mu, &problem.dofs)?;
        let op = ViOperator::for_mesh(a, &problem.dofs).map_err(|e| SchemeError::Inner {
            time_index: 0,
            source: e,
        })?;
        let mut base_loads = Vec::with_capacity(grid.n_nodes());
        for k in 0..grid.n_nodes() {
            let (f0, f_n) = problem.loads.at(k);
            base_loads.push(assemble_load(&problem.mesh, f0, f_n, &problem.dofs)?);
        }
        Ok(Self {
            problem,
            op,
            weights: problem.contact_weights(),
            base_loads,
            grid,
        })
    }

    /// Inner problem at node `k` with `(u, β)` frozen.
    pub fn frozen_problem(&self, k: usize, u: &ScalarField, beta: &BoundaryField) -> Result<InnerProblem<'_>, ViError> {
        let p = self.problem;
        let trace = trace_restrict(u, &p.dofs);
        let tau = friction_thresholds(&p.friction, beta, &trace, &self.weights, &p.dofs);
        let load = fold_adhesion(
            &self.base_loads[k],
            beta,
            &trace,
            p.adhesion.lambda(),
            &self.weights,
            &p.dofs,
        );
        InnerProblem::new(&self.op, load, tau)
    }
}

fn initial_trajectory(problem: &CoupledProblem, config: &SchemeConfig) -> Result<Vec<ScalarField>, SchemeError> {
    let nn = config.grid.n_nodes();
    match &config.initial_u {
        InitialGuess::Zero => Ok((0..nn)
            .map(|k| ScalarField::zeros(problem.mesh.n_vertices(), k))
            .collect()),
        InitialGuess::Field(f) => {
            if !f.is_admissible(&problem.dofs) {
                return Err(SchemeError::Input(
                    "initial guess must have one value per vertex and vanish on Γ_D".into(),
                ));
            }
            Ok((0..nn)
                .map(|k| ScalarField {
                    values: f.values.clone(),
                    time_index: k,
                })
                .collect())
        }
    }
}

fn field_distance(mesh: &Mesh, a: &ScalarField, b: &ScalarField) -> f64 {
    let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    h1_norm(mesh, &d)
}

/// Runs the outer iteration to convergence, divergence or budget.
pub fn run_coupled(problem: &CoupledProblem, config: &SchemeConfig) -> Result<CoupledSolution, SchemeError> {
    if !(config.tol_outer > 0.0) || config.max_outer == 0 {
        return Err(SchemeError::Input(
            "tol_outer must be positive and max_outer at least 1".into(),
        ));
    }
    let prepared = Prepared::new(problem, config.grid)?;
    let c0 = estimate_trace_constant(&problem.mesh, &problem.dofs)?;
    let smallness = check_smallness(
        problem.material.mu_star,
        &problem.constants(),
        problem.beta0.linf(),
        c0.c0_hat,
    );
    run_prepared(&prepared, config, smallness)
}

pub fn run_prepared(
    prepared: &Prepared<'_>,
    config: &SchemeConfig,
    smallness: SmallnessReport,
) -> Result<CoupledSolution, SchemeError> {
    let problem = prepared.problem;
    let mesh = &problem.mesh;
    let dofs = &problem.dofs;
    let grid = config.grid;
    let nn = grid.n_nodes();
    let picard = PicardOptions {
        clip_box: config.clip_beta_box,
        ..config.picard
    };

    let mut u_prev = initial_trajectory(problem, config)?;
    let mut beta_prev = BetaTrajectory::constant(&problem.beta0, &grid);
    let mut history: Vec<OuterIterate> = Vec::new();
    let mut last_e_u: Option<f64> = None;
    let mut run_of_growth = 0;
    let mut termination = Termination::MaxOuter;

    for n in 1..=config.max_outer {
        let mut u_next = Vec::with_capacity(nn);
        let mut inner_iterations_max = 0;
        let mut inner_residual_max: f64 = 0.0;
        for k in 0..nn {
            let inner = prepared
                .frozen_problem(k, &u_prev[k], &beta_prev.fields[k])
                .map_err(|e| SchemeError::Inner {
                    time_index: k,
                    source: e,
                })?;
            let start = u_prev[k].free_values(dofs);
            let sol = solve_inner(&inner, &config.inner, Some(&start)).map_err(|e| SchemeError::Inner {
                time_index: k,
                source: e,
            })?;
            inner_iterations_max = inner_iterations_max.max(sol.iterations);
            inner_residual_max = inner_residual_max.max(sol.optimality_residual);
            u_next.push(ScalarField::from_free(dofs, &sol.u, k));
        }
        let traces: Vec<BoundaryField> = u_next.iter().map(|u| trace_restrict(u, dofs)).collect();
        let (beta_next, picard_report) = picard_solve(
            &problem.beta0,
            &traces,
            &problem.adhesion,
            &grid,
            &prepared.weights,
            &picard,
            Some(&beta_prev),
        )?;

        let e_u = (0..nn)
            .map(|k| field_distance(mesh, &u_next[k], &u_prev[k]))
            .fold(0.0, f64::max);
        let e_beta = beta_next.distance(&beta_prev, &prepared.weights);
        let ratio = last_e_u.filter(|&d| d > 10.0 * config.tol_outer).map(|d| e_u / d);
        let iterate = OuterIterate {
            n,
            e_u,
            e_beta,
            ratio,
            u_h1_max: u_next.iter().map(|u| h1_norm(mesh, &u.values)).fold(0.0, f64::max),
            u_linf_max: u_next.iter().map(|u| linf(&u.values)).fold(0.0, f64::max),
            xi_h1_max: u_prev.iter().map(|u| h1_norm(mesh, &u.values)).fold(0.0, f64::max),
            xi_linf_max: u_prev.iter().map(|u| linf(&u.values)).fold(0.0, f64::max),
            beta_prev_linf: beta_prev.linf(),
            beta_linf: beta_next.linf(),
            picard_iterations: picard_report.iterations,
            inner_iterations_max,
            inner_residual_max,
        };
        history.push(iterate);
        u_prev = u_next;
        beta_prev = beta_next;
        last_e_u = Some(e_u);

        if !(e_u + e_beta).is_finite() {
            termination = Termination::Diverged;
            break;
        }
        if e_u + e_beta <= config.tol_outer {
            termination = Termination::Converged;
            break;
        }
        match ratio {
            Some(r) if r >= 1.0 => run_of_growth += 1,
            Some(_) => run_of_growth = 0,
            None => {}
        }
        if run_of_growth >= 3 {
            termination = Termination::Diverged;
            break;
        }
    }

    Ok(CoupledSolution {
        grid,
        u: u_prev,
        beta: beta_prev,
        report: ConvergenceReport {
            iterations: history,
            termination,
            smallness,
            tol_outer: config.tol_outer,
            clip_beta_box: config.clip_beta_box,
        },
    })
}

/// Optimality residual per time node with thresholds and adhesion rebuilt
/// from the converged pair itself, not from the previous iterate.
pub fn posthoc_optimality(
    problem: &CoupledProblem,
    solution: &CoupledSolution,
    grid: TimeGrid,
) -> Result<Vec<f64>, SchemeError> {
    let prepared = Prepared::new(problem, grid)?;
    (0..grid.n_nodes())
        .map(|k| {
            let inner = prepared
                .frozen_problem(k, &solution.u[k], &solution.beta.fields[k])
                .map_err(|e| SchemeError::Inner {
                    time_index: k,
                    source: e,
                })?;
            Ok(optimality_measure(&inner, &solution.u[k].free_values(&problem.dofs)))
        })
        .collect()
}

/// `(B_fit, c_fit)` from `e_u^n ≈ c·Bⁿ`, over the iterations that enter a
/// recorded ratio.
pub fn fit_contraction(report: &ConvergenceReport) -> Result<(f64, f64), SchemeError> {
    let its = &report.iterations;
    let recorded: Vec<usize> = (0..its.len()).filter(|&i| its[i].ratio.is_some()).collect();
    if recorded.len() < 3 {
        return Err(SchemeError::InsufficientData(recorded.len()));
    }
    let mut used = vec![false; its.len()];
    for &i in &recorded {
        used[i] = true;
        used[i - 1] = true;
    }
    // Index the series by iteration number so the intercept is c in c·Bⁿ.
    let first = used.iter().position(|&u| u).unwrap();
    let span: Vec<f64> = (0..its.len()).map(|i| if used[i] { its[i].e_u } else { 0.0 }).collect();
    let offset = its[first].n - first;
    let mut padded = vec![0.0; offset];
    padded.extend(span);
    fit_geometric(&padded).ok_or(SchemeError::InsufficientData(recorded.len()))
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    /// `max_k ‖u_a(t_k) − u_b(t_k)‖_{H¹}`.
    pub u_distance: f64,
    /// `max_k ‖β_a(t_k) − β_b(t_k)‖_{L²(Γ_C)}`.
    pub beta_distance: f64,
    pub run_a: ConvergenceReport,
    pub run_b: ConvergenceReport,
}

/// Runs the scheme from two initial guesses and measures how far apart the
/// limits are.
pub fn uniqueness_probe(
    problem: &CoupledProblem,
    config: &SchemeConfig,
    u0_a: ScalarField,
    u0_b: ScalarField,
) -> Result<UniquenessReport, SchemeError> {
    let run = |u0: ScalarField| {
        let cfg = SchemeConfig {
            initial_u: InitialGuess::Field(u0),
            ..config.clone()
        };
        run_coupled(problem, &cfg)?.into_result()
    };
    let a = run(u0_a)?;
    let b = run(u0_b)?;
    let u_distance =
        a.u.iter()
            .zip(&b.u)
            .map(|(x, y)| field_distance(&problem.mesh, x, y))
            .fold(0.0, f64::max);
    let beta_distance = a.beta.distance(&b.beta, &problem.contact_weights());
    Ok(UniquenessReport {
        u_distance,
        beta_distance,
        run_a: a.report,
        run_b: b.report,
    })
}
