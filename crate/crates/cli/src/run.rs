//! Builds a coupled problem from a scenario, runs it and writes artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use antiplane_core::bonding::{BondingError, TimeGrid};
use antiplane_core::bounds::{evaluate_bounds, BoundsReport};
use antiplane_core::export::{beta_csv, bounds_csv, convergence_csv, field_csv, field_vtk};
use antiplane_core::fem::{build_dof_map, error_against, estimate_trace_constant, BoundaryField, ScalarField};
use antiplane_core::laws::AdhesionSpec;
use antiplane_core::mesh::{
    load_mesh, validate_partition, Mesh, MeshError, PartitionError, PartitionMode, PartitionReport,
};
use antiplane_core::scheme::{
    check_smallness, fit_contraction, posthoc_optimality, run_prepared, CoupledProblem, CoupledSolution, InitialGuess,
    Loads, Material, Prepared, SchemeConfig, SchemeError, SmallnessReport, Termination,
};
use antiplane_core::vi::ViError;
use thiserror::Error;

use crate::expr::Expr;
use crate::scenario::{check_beta0, Beta0Source, MeshSource, Scenario, ScenarioError};

/// Environment variable that redirects every output directory.
pub const OUTPUT_ROOT_ENV: &str = "ANTIPLANE_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Solver(#[from] SchemeError),
}

impl CliError {
    /// 1 for input problems, 2 for numerical blow-up, 3 for exhausted budgets.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver(SchemeError::Diverged(_)) => 2,
            Self::Solver(SchemeError::BudgetExceeded { .. }) => 3,
            Self::Solver(SchemeError::Inner {
                source: ViError::MaxIter { .. },
                ..
            }) => 3,
            Self::Solver(SchemeError::Bonding(BondingError::MaxIter { .. })) => 3,
            Self::Solver(SchemeError::Bonding(BondingError::NonFinite { .. })) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Output directory: `--out` wins, then `$ANTIPLANE_OUTPUT_ROOT/<output.dir>`,
/// then `output.dir` next to the scenario file.
pub fn resolve_output_dir(scenario: &Scenario, cli_override: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_override {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(&scenario.output_dir),
        _ => scenario.base_dir.join(&scenario.output_dir),
    }
}

pub fn load_scenario_mesh(scenario: &Scenario, extra_refine: usize) -> Result<Mesh, CliError> {
    let mut mesh = match &scenario.mesh {
        MeshSource::File { path, format } => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            load_mesh(&text, format)?
        }
        MeshSource::Rectangle {
            width,
            height,
            nx,
            ny,
            sides,
        } => Mesh::structured_rectangle(*width, *height, *nx, *ny, *sides)?,
    };
    for _ in 0..scenario.refine + extra_refine {
        mesh = mesh.refine_uniform();
    }
    Ok(mesh)
}

fn parse_csv_rows(path: &Path, columns: usize) -> Result<Vec<(usize, Vec<f64>)>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let Ok(id) = parts[0].parse::<usize>() else {
            if i == 0 {
                continue; // header
            }
            return Err(CliError::Data(format!(
                "{}:{}: bad vertex id `{}`",
                path.display(),
                i + 1,
                parts[0]
            )));
        };
        if parts.len() != columns {
            return Err(CliError::Data(format!(
                "{}:{}: expected {columns} columns, found {}",
                path.display(),
                i + 1,
                parts.len()
            )));
        }
        let vals = parts[1..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Data(format!("{}:{}: bad number", path.display(), i + 1)))?;
        rows.push((id, vals));
    }
    Ok(rows)
}

fn vertex_values(mesh: &Mesh, vertices: &[usize], e: &Expr, t: f64) -> Vec<f64> {
    vertices
        .iter()
        .map(|&v| {
            let p = mesh.vertices()[v];
            e.eval(p[0], p[1], t)
        })
        .collect()
}

fn beta0_values(scenario: &Scenario, mesh: &Mesh, contact: &[usize]) -> Result<Vec<f64>, CliError> {
    match &scenario.beta0 {
        Beta0Source::Expr(e) => Ok(vertex_values(mesh, contact, e, 0.0)),
        Beta0Source::File(path) => {
            let mut by_vertex = vec![None; mesh.n_vertices()];
            for (id, vals) in parse_csv_rows(path, 2)? {
                if id >= mesh.n_vertices() {
                    return Err(CliError::Data(format!(
                        "{}: vertex {id} is not in the mesh",
                        path.display()
                    )));
                }
                by_vertex[id] = Some(vals[0]);
            }
            contact
                .iter()
                .map(|&v| {
                    by_vertex[v]
                        .ok_or_else(|| CliError::Data(format!("{}: no β0 for contact vertex {v}", path.display())))
                })
                .collect()
        }
    }
}

fn initial_guess(path: &Path, mesh: &Mesh) -> Result<InitialGuess, CliError> {
    let mut values = vec![None; mesh.n_vertices()];
    for (id, vals) in parse_csv_rows(path, 4)? {
        if id >= mesh.n_vertices() {
            return Err(CliError::Data(format!(
                "{}: vertex {id} is not in the mesh",
                path.display()
            )));
        }
        values[id] = Some(vals[2]);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::Data(format!("{}: no value for vertex {i}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InitialGuess::Field(ScalarField { values, time_index: 0 }))
}

/// A scenario turned into solver inputs.
#[derive(Clone, Debug)]
pub struct Built {
    pub problem: CoupledProblem,
    pub config: SchemeConfig,
    pub partition: PartitionReport,
}

/// `extra_refine` adds uniform refinements on top of `mesh.refine`.
pub fn build(scenario: &Scenario, extra_refine: usize) -> Result<Built, CliError> {
    let mesh = load_scenario_mesh(scenario, extra_refine)?;
    let mode = if scenario.verification {
        PartitionMode::Verification
    } else {
        PartitionMode::Strict
    };
    let partition = validate_partition(&mesh, mode)?;
    let dofs = build_dof_map(&mesh);
    let contact = dofs.contact_vertices().to_vec();

    let mu: Vec<f64> = mesh
        .triangles()
        .iter()
        .map(|tri| {
            let c = tri.iter().fold([0.0, 0.0], |acc, &v| {
                let p = mesh.vertices()[v];
                [acc[0] + p[0] / 3.0, acc[1] + p[1] / 3.0]
            });
            scenario.mu.eval(c[0], c[1], 0.0)
        })
        .collect();
    let mu_star = scenario
        .mu_star
        .unwrap_or_else(|| mu.iter().copied().fold(f64::INFINITY, f64::min));
    let material = Material { mu, mu_star };

    let adhesion = AdhesionSpec::new(
        scenario.law,
        vertex_values(&mesh, &contact, &scenario.lambda, 0.0),
        vertex_values(&mesh, &contact, &scenario.e_d, 0.0),
    )
    .map_err(|e| CliError::Data(format!("adhesion: {e}")))?;

    let beta0 = beta0_values(scenario, &mesh, &contact)?;
    check_beta0(scenario, &beta0, None)?;

    let grid = TimeGrid::new(scenario.horizon, scenario.n_steps).map_err(|e| CliError::Data(e.to_string()))?;
    let all: Vec<usize> = (0..mesh.n_vertices()).collect();
    let table = |e: &Expr| -> Vec<Vec<f64>> {
        if e.depends_on_time() {
            grid.nodes().iter().map(|&t| vertex_values(&mesh, &all, e, t)).collect()
        } else {
            vec![vertex_values(&mesh, &all, e, 0.0)]
        }
    };
    let loads = Loads {
        f0: table(&scenario.f0),
        f_n: table(&scenario.f_n),
    };

    let initial_u = match &scenario.initial_u {
        None => InitialGuess::Zero,
        Some(path) => initial_guess(path, &mesh)?,
    };
    let problem = CoupledProblem::new(
        mesh,
        material,
        scenario.friction,
        adhesion,
        loads,
        BoundaryField {
            values: beta0,
            time_index: 0,
        },
    )?;
    let config = SchemeConfig {
        tol_outer: scenario.tol_outer,
        max_outer: scenario.max_outer,
        inner: scenario.inner,
        picard: scenario.picard,
        initial_u,
        clip_beta_box: scenario.clip_beta_box,
        verification: scenario.verification,
        ..SchemeConfig::new(grid)
    };
    Ok(Built {
        problem,
        config,
        partition,
    })
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    /// File names relative to `out_dir`, in write order.
    pub artifacts: Vec<String>,
    pub solution: CoupledSolution,
    pub smallness: SmallnessReport,
    pub bounds: BoundsReport,
    pub fit: Option<(f64, f64)>,
    pub posthoc_max: Option<f64>,
    pub summary: String,
}

impl RunOutcome {
    pub fn termination(&self) -> Termination {
        self.solution.report.termination
    }

    pub fn exit_code(&self) -> i32 {
        match self.termination() {
            Termination::Converged => 0,
            Termination::Diverged => 2,
            Termination::MaxOuter => 3,
        }
    }
}

/// Smallness report of a built problem; needs no solve.
pub fn smallness_of(built: &Built) -> Result<SmallnessReport, CliError> {
    let p = &built.problem;
    let c0_hat = estimate_trace_constant(&p.mesh, &p.dofs)
        .map_err(SchemeError::from)?
        .c0_hat;
    Ok(check_smallness(
        p.material.mu_star,
        &p.constants(),
        p.beta0.linf(),
        c0_hat,
    ))
}

/// Solves without writing anything.
pub fn solve(built: &Built) -> Result<(CoupledSolution, SmallnessReport, f64), CliError> {
    let prepared = Prepared::new(&built.problem, built.config.grid)?;
    let smallness = smallness_of(built)?;
    let solution = run_prepared(&prepared, &built.config, smallness.clone())?;
    let c0_hat = smallness.c0_hat;
    Ok((solution, smallness, c0_hat))
}

struct Writer {
    dir: PathBuf,
    names: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn put(&mut self, name: String, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(&name);
        fs::write(&path, body).map_err(io_err(&path))?;
        self.names.push(name);
        Ok(())
    }
}

fn summary_text(
    scenario: &Scenario,
    built: &Built,
    sol: &CoupledSolution,
    bounds: &BoundsReport,
    fit: Option<(f64, f64)>,
    posthoc_max: Option<f64>,
) -> String {
    let p = &built.problem;
    let rep = &sol.report;
    let s = &rep.smallness;
    let mut out = String::new();
    let _ = writeln!(out, "law = {}", scenario.law);
    let _ = writeln!(
        out,
        "mesh = {} vertices, {} triangles, {} contact vertices",
        p.mesh.n_vertices(),
        p.mesh.n_triangles(),
        p.dofs.n_contact()
    );
    let part = &built.partition;
    let _ = writeln!(
        out,
        "boundary = |Γ_D| {}, |Γ_N| {}, |Γ_C| {}",
        part.dirichlet_length, part.neumann_length, part.contact_length
    );
    for w in &part.warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    let _ = writeln!(out, "grid = T {}, {} steps", sol.grid.horizon(), sol.grid.n_steps());
    let _ = writeln!(out, "mu_star = {}", p.material.mu_star);
    let _ = writeln!(out, "c0_hat = {}", s.c0_hat);
    let _ = writeln!(
        out,
        "delta_hat = {} ({})",
        s.delta_hat,
        if s.pass { "smallness holds" } else { "smallness fails" }
    );
    let _ = writeln!(out, "termination = {}", rep.termination.name());
    let _ = writeln!(out, "iterations = {}", rep.iterations.len());
    let _ = writeln!(out, "last_error = {:e}", rep.last_error());
    match fit {
        Some((b, c)) => {
            let _ = writeln!(out, "contraction_fit = B {b}, C {c}");
        }
        None => {
            let _ = writeln!(out, "contraction_fit = unavailable ({} ratios)", rep.ratios().len());
        }
    }
    if let Some(r) = posthoc_max {
        let _ = writeln!(out, "posthoc_optimality_max = {r:e}");
    }
    let _ = writeln!(out, "linf_ratio = {}", bounds.linf_ratio);
    let _ = writeln!(out, "h1_ratio = {}", bounds.h1_ratio);
    let _ = writeln!(out, "beta_box_ok = {}", bounds.beta_box_ok);
    let _ = writeln!(out, "beta_monotone_ok = {}", bounds.beta_monotone_ok);
    if rep.clip_beta_box {
        let _ = writeln!(out, "note = β clipped to [0, 1]; not covered by the theory");
    }
    if rep.termination == Termination::Diverged {
        let _ = writeln!(out, "diagnostic = {}", rep.divergence_diagnostic());
    }
    out
}

/// Runs a scenario and writes every artifact into `out_dir`. Diverged and
/// budget-exhausted runs still write their artifacts.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let built = build(scenario, 0)?;
    let (solution, smallness, c0_hat) = solve(&built)?;
    let p = &built.problem;
    let bounds = evaluate_bounds(p, &solution, c0_hat);
    let fit = fit_contraction(&solution.report).ok();
    let posthoc_max = if solution.report.termination == Termination::Converged {
        Some(
            posthoc_optimality(p, &solution, solution.grid)?
                .into_iter()
                .fold(0.0, f64::max),
        )
    } else {
        None
    };

    let mut w = Writer::new(out_dir)?;
    for u in &solution.u {
        let k = u.time_index;
        w.put(format!("u_t{k:04}.csv"), &field_csv(&p.mesh, u))?;
        w.put(format!("u_t{k:04}.vtk"), &field_vtk(&p.mesh, u, "u"))?;
    }
    w.put("beta.csv".into(), &beta_csv(&solution.grid, &p.dofs, &solution.beta))?;
    w.put("convergence.csv".into(), &convergence_csv(&solution.report))?;
    w.put("bounds.csv".into(), &bounds_csv(&smallness, &bounds, fit))?;
    if let Some(exact) = &scenario.exact {
        let rates = refinement_study(scenario, exact.levels, &exact.u, &exact.ux, &exact.uy, Some(&solution))?;
        w.put("rates.csv".into(), &rates_csv(&rates))?;
    }
    let mut summary = summary_text(scenario, &built, &solution, &bounds, fit, posthoc_max);
    summary.push_str("artifacts =");
    for name in w.names.iter().chain(std::iter::once(&"summary.txt".to_string())) {
        summary.push(' ');
        summary.push_str(name);
    }
    summary.push('\n');
    w.put("summary.txt".into(), &summary)?;

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        artifacts: w.names,
        solution,
        smallness,
        bounds,
        fit,
        posthoc_max,
        summary,
    })
}

/// One rung of a refinement ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelError {
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
}

/// Errors against an exact solution over `levels` successive refinements,
/// maximized over the time nodes. `level0` reuses a solution already computed
/// on the base mesh.
pub fn refinement_study(
    scenario: &Scenario,
    levels: usize,
    u: &Expr,
    ux: &Expr,
    uy: &Expr,
    level0: Option<&CoupledSolution>,
) -> Result<Vec<LevelError>, CliError> {
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let built = build(scenario, level)?;
        let owned;
        let sol = match (level, level0) {
            (0, Some(s)) => s,
            _ => {
                owned = solve(&built)?.0.into_result()?;
                &owned
            }
        };
        let mesh = &built.problem.mesh;
        let (mut l2, mut h1) = (0.0f64, 0.0f64);
        for field in &sol.u {
            let t = sol.grid.node(field.time_index);
            let (a, b) = error_against(
                mesh,
                &field.values,
                |x, y| u.eval(x, y, t),
                |x, y| [ux.eval(x, y, t), uy.eval(x, y, t)],
            );
            l2 = l2.max(a);
            h1 = h1.max(b);
        }
        out.push(LevelError {
            h: mesh.max_edge_length(),
            l2,
            h1,
        });
    }
    Ok(out)
}

/// Observed order between consecutive levels.
pub fn observed_rates(levels: &[LevelError]) -> Vec<(f64, f64)> {
    levels
        .windows(2)
        .map(|w| {
            let dh = (w[0].h / w[1].h).ln();
            ((w[0].l2 / w[1].l2).ln() / dh, (w[0].h1 / w[1].h1).ln() / dh)
        })
        .collect()
}

pub fn rates_csv(levels: &[LevelError]) -> String {
    let rates = observed_rates(levels);
    let mut s = String::from("level,h,l2_error,h1_error,l2_rate,h1_rate\n");
    for (i, l) in levels.iter().enumerate() {
        let (r2, r1) = if i == 0 {
            (String::new(), String::new())
        } else {
            (rates[i - 1].0.to_string(), rates[i - 1].1.to_string())
        };
        let _ = writeln!(s, "{i},{},{},{},{r2},{r1}", l.h, l.l2, l.h1);
    }
    s
}
