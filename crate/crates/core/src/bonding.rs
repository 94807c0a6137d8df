//! Bonding field on the contact boundary,
//! `β(t) = β0 + ∫₀ᵗ H(β(s), u(s)) ds`, for a given displacement trace.

use thiserror::Error;

use crate::fem::{l2_gamma_c, BoundaryField};
use crate::laws::{AdhesionSpec, LawError};

#[derive(Debug, Error, PartialEq)]
pub enum BondingError {
    #[error("time grid needs T > 0 and at least one step (got T = {horizon}, {n_steps} steps)")]
    BadGrid { horizon: f64, n_steps: usize },
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite bonding value at time node {node}, contact vertex {vertex}")]
    NonFinite { node: usize, vertex: usize },
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("Picard iteration stopped after {iterations} iterations with change {change:e}")]
    MaxIter { iterations: usize, change: f64 },
}

/// Uniform grid `t_k = k·T/n`, `k = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self, BondingError> {
        if !(horizon > 0.0) || !horizon.is_finite() || n_steps == 0 {
            return Err(BondingError::BadGrid { horizon, n_steps });
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|k| self.node(k)).collect()
    }
}

/// One boundary field per time node; the first is `β0` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaTrajectory {
    pub fields: Vec<BoundaryField>,
}

impl BetaTrajectory {
    pub fn constant(beta0: &BoundaryField, grid: &TimeGrid) -> Self {
        Self {
            fields: (0..grid.n_nodes())
                .map(|k| BoundaryField {
                    values: beta0.values.clone(),
                    time_index: k,
                })
                .collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.fields.len()
    }

    pub fn linf(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, f| m.max(f.linf()))
    }

    /// `max_k ‖a(t_k) − b(t_k)‖_{L²(Γ_C)}`.
    pub fn distance(&self, other: &Self, weights: &[f64]) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| {
                let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
                l2_gamma_c(weights, &d)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Project every iterate onto `[0, 1]`; outside the theory, stamped in
    /// the report.
    pub clip_box: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 500,
            clip_box: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// `max_k ‖Δβ(t_k)‖_{L²(Γ_C)}` per iteration.
    pub changes: Vec<f64>,
    /// `max_k e^{−ω t_k} ‖Δβ(t_k)‖_{L²(Γ_C)}` per iteration.
    pub weighted_changes: Vec<f64>,
    /// Largest `|∂H/∂β|` along the trajectory, `λu²`.
    pub lipschitz: f64,
    pub omega: f64,
    /// Geometric rate fitted to the weighted changes, when there are at
    /// least three nonzero ones.
    pub fitted_ratio: Option<f64>,
    pub clipped: bool,
}

fn check_shapes(
    beta0: &BoundaryField,
    u_traj: &[BoundaryField],
    adh: &AdhesionSpec,
    grid: &TimeGrid,
) -> Result<(), BondingError> {
    if u_traj.len() != grid.n_nodes() {
        return Err(BondingError::Shape {
            what: "displacement trace per time node",
            expected: grid.n_nodes(),
            got: u_traj.len(),
        });
    }
    let n = adh.n_contact();
    for (what, got) in
        std::iter::once(("β0", beta0.values.len())).chain(u_traj.iter().map(|u| ("trace", u.values.len())))
    {
        if got != n {
            return Err(BondingError::Shape { what, expected: n, got });
        }
    }
    Ok(())
}

/// Least-squares slope of `ln e` against the iteration index, exponentiated.
pub fn fit_geometric(values: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(n, &e)| (n as f64, e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    Some((slope.exp(), intercept.exp()))
}

/// Fixed point of `Λβ(t_k) = β0 + ∫₀^{t_k} H(β, u)` with the composite
/// trapezoid rule, iterated until `max_k ‖Δβ(t_k)‖_{L²(Γ_C)} ≤ tol`.
/// `initial` warm-starts the iteration (default: `β ≡ β0`).
pub fn picard_solve(
    beta0: &BoundaryField,
    u_traj: &[BoundaryField],
    adh: &AdhesionSpec,
    grid: &TimeGrid,
    weights: &[f64],
    opts: &PicardOptions,
    initial: Option<&BetaTrajectory>,
) -> Result<(BetaTrajectory, PicardReport), BondingError> {
    check_shapes(beta0, u_traj, adh, grid)?;
    let n_nodes = grid.n_nodes();
    let nc = adh.n_contact();
    let dt = grid.dt();
    let lam = adh.lambda();
    let lipschitz = (0..n_nodes)
        .flat_map(|k| (0..nc).map(move |i| (k, i)))
        .map(|(k, i)| lam[i] * u_traj[k].values[i].powi(2))
        .fold(0.0, f64::max);
    let omega = 2.0 * lipschitz;
    let decay: Vec<f64> = grid.nodes().iter().map(|t| (-omega * t).exp()).collect();

    let mut beta: Vec<Vec<f64>> = match initial {
        Some(init) if init.n_nodes() == n_nodes => init.fields.iter().map(|f| f.values.clone()).collect(),
        _ => vec![beta0.values.clone(); n_nodes],
    };
    beta[0] = beta0.values.clone();
    let mut changes = Vec::new();
    let mut weighted = Vec::new();
    let mut rates = vec![vec![0.0; nc]; n_nodes];
    for it in 1..=opts.max_iter {
        for k in 0..n_nodes {
            for i in 0..nc {
                rates[k][i] = adh.rate(i, beta[k][i], u_traj[k].values[i])?;
            }
        }
        let mut next = vec![beta0.values.clone(); n_nodes];
        for i in 0..nc {
            let mut acc = 0.0;
            for k in 0..grid.n_steps() {
                acc += 0.5 * dt * (rates[k][i] + rates[k + 1][i]);
                let mut b = beta0.values[i] + acc;
                if opts.clip_box {
                    b = b.clamp(0.0, 1.0);
                }
                if !b.is_finite() {
                    return Err(BondingError::NonFinite { node: k + 1, vertex: i });
                }
                next[k + 1][i] = b;
            }
        }
        let mut change: f64 = 0.0;
        let mut wchange: f64 = 0.0;
        for k in 0..n_nodes {
            let d: Vec<f64> = next[k].iter().zip(&beta[k]).map(|(a, b)| a - b).collect();
            let c = l2_gamma_c(weights, &d);
            change = change.max(c);
            wchange = wchange.max(decay[k] * c);
        }
        beta = next;
        changes.push(change);
        weighted.push(wchange);
        if change <= opts.tol {
            let trajectory = BetaTrajectory {
                fields: beta
                    .into_iter()
                    .enumerate()
                    .map(|(k, values)| BoundaryField { values, time_index: k })
                    .collect(),
            };
            let fitted_ratio = fit_geometric(&weighted).map(|(b, _)| b);
            return Ok((
                trajectory,
                PicardReport {
                    iterations: it,
                    changes,
                    weighted_changes: weighted,
                    lipschitz,
                    omega,
                    fitted_ratio,
                    clipped: opts.clip_box,
                },
            ));
        }
    }
    Err(BondingError::MaxIter {
        iterations: opts.max_iter,
        change: changes.last().copied().unwrap_or(f64::NAN),
    })
}

/// Classical RK4 per contact vertex, with `u` linear between nodes.
pub fn rk4_integrate(
    beta0: &BoundaryField,
    u_traj: &[BoundaryField],
    adh: &AdhesionSpec,
    grid: &TimeGrid,
) -> Result<BetaTrajectory, BondingError> {
    check_shapes(beta0, u_traj, adh, grid)?;
    let dt = grid.dt();
    let mut fields = vec![BoundaryField {
        values: beta0.values.clone(),
        time_index: 0,
    }];
    for k in 0..grid.n_steps() {
        let prev = &fields[k].values;
        let mut values = Vec::with_capacity(prev.len());
        for (i, &b) in prev.iter().enumerate() {
            let (u0, u1) = (u_traj[k].values[i], u_traj[k + 1].values[i]);
            let um = 0.5 * (u0 + u1);
            let k1 = adh.rate(i, b, u0)?;
            let k2 = adh.rate(i, b + 0.5 * dt * k1, um)?;
            let k3 = adh.rate(i, b + 0.5 * dt * k2, um)?;
            let k4 = adh.rate(i, b + dt * k3, u1)?;
            let next = b + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() {
                return Err(BondingError::NonFinite { node: k + 1, vertex: i });
            }
            values.push(next);
        }
        fields.push(BoundaryField {
            values,
            time_index: k + 1,
        });
    }
    Ok(BetaTrajectory { fields })
}

/// `c̃ / (2‖λ‖∞ max_k ‖u(t_k)‖²_{L∞(Γ_C)})` with `c̃ = min β0`; `None` when
/// the denominator vanishes (no restriction).
pub fn safe_horizon(beta0: &BoundaryField, u_traj: &[BoundaryField], adh: &AdhesionSpec) -> Option<f64> {
    let c_tilde = beta0.values.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = u_traj.iter().fold(0.0f64, |m, u| m.max(u.linf()));
    let denom = 2.0 * adh.lambda_linf() * u_max * u_max;
    if denom > 0.0 {
        Some(c_tilde.max(0.0) / denom)
    } else {
        None
    }
}
