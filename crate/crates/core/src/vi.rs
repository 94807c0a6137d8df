//! Inner variational inequality with frozen coefficients:
//!
//! ```text
//! minimize  J(v) = ½ vᵀAv − fᵀv + Σ_k τ_k |v_k|
//! ```
//!
//! over the free dofs, where only the contact dofs carry thresholds.
//!
//! Dofs without a threshold enter `J` quadratically, so they are eliminated
//! exactly: [`ViOperator`] factors their block once and keeps the dense Schur
//! complement on the contact dofs. Both methods then work on that small dense
//! problem. Exact minimization over the whole interior block is the limit of
//! the Gauss–Seidel sweeps, and it makes the sweep count independent of the
//! mesh size.

use thiserror::Error;

use crate::fem::{BoundaryField, DofMap, LoadVector};
use crate::laws::FrictionSpec;
use crate::sparse::{Cholesky, SparseError, SparseSymMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum ViError {
    #[error("stiffness is not positive definite: {0}")]
    NotSpd(String),
    #[error("{what}: expected length {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("negative friction threshold {value} at contact dof {index}")]
    NegativeThreshold { index: usize, value: f64 },
    #[error("inner solver stopped after {iterations} iterations with optimality residual {residual:e}")]
    MaxIter {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

impl From<SparseError> for ViError {
    fn from(e: SparseError) -> Self {
        ViError::NotSpd(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMethod {
    ShrinkageCd,
    RegularizedNewton,
}

impl InnerMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::ShrinkageCd => "shrinkage_cd",
            Self::RegularizedNewton => "regularized_newton",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shrinkage_cd" => Some(Self::ShrinkageCd),
            "regularized_newton" => Some(Self::RegularizedNewton),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: InnerMethod,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            method: InnerMethod::ShrinkageCd,
        }
    }
}

/// Dense symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
struct Dense {
    n: usize,
    a: Vec<f64>,
}

impl Dense {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.a[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Lower Cholesky factor, or the failing row.
    fn cholesky(&self) -> Result<Vec<f64>, usize> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(i);
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(l)
    }
}

fn dense_cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Stiffness prepared for repeated inner solves.
#[derive(Clone, Debug)]
pub struct ViOperator {
    a: SparseSymMatrix,
    thresholded: Vec<usize>,
    interior: Vec<usize>,
    interior_pos: Vec<Option<usize>>,
    interior_chol: Option<Cholesky>,
    schur: Dense,
}

impl ViOperator {
    /// `thresholded` lists the free dofs that may carry a threshold, in the
    /// order thresholds will be supplied.
    pub fn new(a: SparseSymMatrix, thresholded: Vec<usize>) -> Result<Self, ViError> {
        let n = a.n();
        if let Some(i) = (0..n).find(|&i| !(a.get(i, i) > 0.0)) {
            return Err(ViError::NotSpd(format!("diagonal entry {i} is {}", a.get(i, i))));
        }
        let mut is_thr = vec![false; n];
        for &d in &thresholded {
            if d >= n || is_thr[d] {
                return Err(ViError::NotSpd(format!("invalid or repeated thresholded dof {d}")));
            }
            is_thr[d] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&d| !is_thr[d]).collect();
        let mut interior_pos = vec![None; n];
        for (p, &d) in interior.iter().enumerate() {
            interior_pos[d] = Some(p);
        }
        let interior_chol = if interior.is_empty() {
            None
        } else {
            Some(a.submatrix(&interior).cholesky()?)
        };
        let m = thresholded.len();
        let mut s = vec![0.0; m * m];
        for (cj, &j) in thresholded.iter().enumerate() {
            let z = match &interior_chol {
                Some(ch) => {
                    let mut col = vec![0.0; interior.len()];
                    let (cols, vals) = a.row(j);
                    for (&c, &v) in cols.iter().zip(vals) {
                        if let Some(p) = interior_pos[c] {
                            col[p] = v;
                        }
                    }
                    ch.solve(&col)
                }
                None => Vec::new(),
            };
            for (ck, &k) in thresholded.iter().enumerate() {
                let (cols, vals) = a.row(k);
                let mut acc = 0.0;
                for (&c, &v) in cols.iter().zip(vals) {
                    if c == j {
                        acc += v;
                    } else if let Some(p) = interior_pos[c] {
                        acc -= v * z[p];
                    }
                }
                s[ck * m + cj] = acc;
            }
        }
        for i in 0..m {
            for j in 0..i {
                let avg = 0.5 * (s[i * m + j] + s[j * m + i]);
                s[i * m + j] = avg;
                s[j * m + i] = avg;
            }
        }
        let schur = Dense { n: m, a: s };
        if let Err(row) = schur.cholesky() {
            return Err(ViError::NotSpd(format!(
                "Schur complement on the contact dofs fails at row {row}"
            )));
        }
        Ok(Self {
            a,
            thresholded,
            interior,
            interior_pos,
            interior_chol,
            schur,
        })
    }

    /// Contact dofs of a mesh become the thresholded set.
    pub fn for_mesh(a: SparseSymMatrix, dofs: &DofMap) -> Result<Self, ViError> {
        let thr = dofs.contact_free_dofs().into_iter().map(|(_, d)| d).collect();
        Self::new(a, thr)
    }

    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn thresholded(&self) -> &[usize] {
        &self.thresholded
    }

    fn interior_rhs(&self, f: &[f64], xc: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.interior.iter().map(|&d| f[d]).collect();
        for (k, &d) in self.thresholded.iter().enumerate() {
            if xc[k] == 0.0 {
                continue;
            }
            let (cols, vals) = self.a.row(d);
            for (&c, &v) in cols.iter().zip(vals) {
                if let Some(p) = self.interior_pos[c] {
                    rhs[p] -= v * xc[k];
                }
            }
        }
        rhs
    }

    /// `g = f_c − A_ci A_ii⁻¹ f_i`.
    fn reduced_load(&self, f: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.thresholded.iter().map(|&d| f[d]).collect();
        if let Some(ch) = &self.interior_chol {
            let fi: Vec<f64> = self.interior.iter().map(|&d| f[d]).collect();
            let z = ch.solve(&fi);
            for (k, &d) in self.thresholded.iter().enumerate() {
                let (cols, vals) = self.a.row(d);
                for (&c, &v) in cols.iter().zip(vals) {
                    if let Some(p) = self.interior_pos[c] {
                        g[k] -= v * z[p];
                    }
                }
            }
        }
        g
    }

    /// Full vector from contact values, interior solved exactly.
    fn recover(&self, f: &[f64], xc: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n()];
        for (k, &d) in self.thresholded.iter().enumerate() {
            u[d] = xc[k];
        }
        if let Some(ch) = &self.interior_chol {
            let xi = ch.solve(&self.interior_rhs(f, xc));
            for (p, &d) in self.interior.iter().enumerate() {
                u[d] = xi[p];
            }
        }
        u
    }
}

/// One frozen inner problem: operator, load and thresholds (one per
/// thresholded dof of the operator).
#[derive(Clone, Debug)]
pub struct InnerProblem<'a> {
    pub op: &'a ViOperator,
    pub load: LoadVector,
    pub tau: Vec<f64>,
}

impl<'a> InnerProblem<'a> {
    pub fn new(op: &'a ViOperator, load: LoadVector, tau: Vec<f64>) -> Result<Self, ViError> {
        if load.len() != op.n() {
            return Err(ViError::Shape {
                what: "load",
                expected: op.n(),
                got: load.len(),
            });
        }
        if tau.len() != op.thresholded.len() {
            return Err(ViError::Shape {
                what: "thresholds",
                expected: op.thresholded.len(),
                got: tau.len(),
            });
        }
        if let Some(index) = tau.iter().position(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(ViError::NegativeThreshold {
                index,
                value: tau[index],
            });
        }
        Ok(Self { op, load, tau })
    }

    fn tau_full(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.op.n()];
        for (k, &d) in self.op.thresholded.iter().enumerate() {
            t[d] = self.tau[k];
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViSolution {
    /// Values on the free dofs.
    pub u: Vec<f64>,
    pub energy: f64,
    pub optimality_residual: f64,
    pub iterations: usize,
}

pub fn soft_threshold(r: f64, tau: f64) -> f64 {
    // Ties stick: |r| = τ gives exactly zero.
    if r.abs() <= tau {
        0.0
    } else {
        r.signum() * (r.abs() - tau)
    }
}

/// `J(u) = ½uᵀAu − fᵀu + Σ τ_k|u_k|`.
pub fn energy(problem: &InnerProblem<'_>, u: &[f64]) -> f64 {
    let quad = 0.5 * problem.op.a.bilinear(u, u);
    let lin: f64 = problem.load.iter().zip(u).map(|(f, x)| f * x).sum();
    let fr: f64 = problem
        .op
        .thresholded
        .iter()
        .zip(&problem.tau)
        .map(|(&d, t)| t * u[d].abs())
        .sum();
    quad - lin + fr
}

fn subgradient_defect(r: f64, tau: f64, u: f64) -> f64 {
    if u != 0.0 {
        (r + tau * u.signum()).abs()
    } else {
        (r.abs() - tau).max(0.0)
    }
}

/// ∞-norm distance of `0` from `∂J(u)`; zero exactly at the minimizer.
pub fn optimality_measure(problem: &InnerProblem<'_>, u: &[f64]) -> f64 {
    let au = problem.op.a.mul_vec(u);
    let tau = problem.tau_full();
    (0..u.len())
        .map(|i| subgradient_defect(au[i] - problem.load[i], tau[i], u[i]))
        .fold(0.0, f64::max)
}

/// The variational inequality tested with `v = 0`:
/// `fᵀu − Σ τ|u| − uᵀAu`, nonnegative at a solution up to round-off.
pub fn zero_test_slack(problem: &InnerProblem<'_>, u: &[f64]) -> f64 {
    let lin: f64 = problem.load.iter().zip(u).map(|(f, x)| f * x).sum();
    let fr: f64 = problem
        .op
        .thresholded
        .iter()
        .zip(&problem.tau)
        .map(|(&d, t)| t * u[d].abs())
        .sum();
    lin - fr - problem.op.a.bilinear(u, u)
}

fn reduced_residual(s: &Dense, g: &[f64], tau: &[f64], x: &[f64]) -> f64 {
    let sx = s.mul(x);
    (0..x.len())
        .map(|k| subgradient_defect(sx[k] - g[k], tau[k], x[k]))
        .fold(0.0, f64::max)
}

/// Cyclic exact coordinate minimization on the reduced problem. Returns the
/// number of sweeps, or `Err(sweeps)` when the budget ran out.
fn cd_sweeps(s: &Dense, g: &[f64], tau: &[f64], x: &mut [f64], tol: f64, max_sweeps: usize) -> Result<usize, usize> {
    let m = x.len();
    let mut sx = s.mul(x);
    for sweep in 0..max_sweeps {
        if reduced_residual_from(&sx, g, tau, x) <= tol {
            return Ok(sweep);
        }
        let mut delta_j = 0.0;
        for k in 0..m {
            let skk = s.at(k, k);
            let r = g[k] - (sx[k] - skk * x[k]);
            let new = soft_threshold(r, tau[k]) / skk;
            let old = x[k];
            if new != old {
                delta_j += 0.5 * skk * (new * new - old * old) - r * (new - old) + tau[k] * (new.abs() - old.abs());
                let d = new - old;
                for j in 0..m {
                    sx[j] += s.at(j, k) * d;
                }
                x[k] = new;
            }
        }
        // Exact coordinate minimization never increases J.
        debug_assert!(
            delta_j <= 1e-12 * (1.0 + delta_j.abs()),
            "energy increased by {delta_j}"
        );
        if sweep % 64 == 63 {
            sx = s.mul(x);
        }
    }
    if reduced_residual(s, g, tau, x) <= tol {
        Ok(max_sweeps)
    } else {
        Err(max_sweeps)
    }
}

fn reduced_residual_from(sx: &[f64], g: &[f64], tau: &[f64], x: &[f64]) -> f64 {
    (0..x.len())
        .map(|k| subgradient_defect(sx[k] - g[k], tau[k], x[k]))
        .fold(0.0, f64::max)
}

/// Solves exactly on the sign pattern of `x`: sliding dofs carry `τ·sign`,
/// stuck dofs stay at zero. Replaces `x` only if the result keeps the
/// pattern and does not raise the reduced residual.
fn finish_on_pattern(s: &Dense, g: &[f64], tau: &[f64], x: &mut [f64]) {
    let m = x.len();
    let active: Vec<usize> = (0..m).filter(|&k| x[k] != 0.0 || tau[k] == 0.0).collect();
    let mut y = vec![0.0; m];
    if !active.is_empty() {
        let na = active.len();
        let sub = Dense {
            n: na,
            a: active
                .iter()
                .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                .map(|(i, j)| s.at(i, j))
                .collect(),
        };
        let Ok(l) = sub.cholesky() else { return };
        let rhs: Vec<f64> = active
            .iter()
            .map(|&k| g[k] - tau[k] * x[k].signum() * f64::from(u8::from(x[k] != 0.0)))
            .collect();
        let ya = dense_cholesky_solve(&l, na, &rhs);
        for (p, &k) in active.iter().enumerate() {
            if tau[k] > 0.0 && ya[p] * x[k] < 0.0 {
                return;
            }
            y[k] = ya[p];
        }
    }
    if reduced_residual(s, g, tau, &y) <= reduced_residual(s, g, tau, x) {
        x.copy_from_slice(&y);
    }
}

/// Smoothed `|x| ≈ sqrt(x² + ε²)` with ε-continuation and damped Newton.
fn newton_path(s: &Dense, g: &[f64], tau: &[f64], x: &mut [f64], tol: f64) -> usize {
    let m = x.len();
    let mut steps = 0;
    let j_eps = |x: &[f64], eps: f64| {
        let sx = s.mul(x);
        (0..m)
            .map(|k| 0.5 * x[k] * sx[k] - g[k] * x[k] + tau[k] * (x[k] * x[k] + eps * eps).sqrt())
            .sum::<f64>()
    };
    let mut eps = 1e-2;
    while eps >= 1e-10 * 0.999 {
        for _ in 0..100 {
            let sx = s.mul(x);
            let grad: Vec<f64> = (0..m)
                .map(|k| sx[k] - g[k] + tau[k] * x[k] / (x[k] * x[k] + eps * eps).sqrt())
                .collect();
            let gnorm = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if gnorm <= tol.min(1e-3 * eps) {
                break;
            }
            let mut h = s.clone();
            for k in 0..m {
                h.a[k * m + k] += tau[k] * eps * eps / (x[k] * x[k] + eps * eps).powf(1.5);
            }
            let Ok(l) = h.cholesky() else { break };
            let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
            let dir = dense_cholesky_solve(&l, m, &neg);
            let slope: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let j0 = j_eps(x, eps);
            let mut t = 1.0;
            let mut trial = vec![0.0; m];
            loop {
                for k in 0..m {
                    trial[k] = x[k] + t * dir[k];
                }
                if j_eps(&trial, eps) <= j0 + 1e-4 * t * slope || t < 1e-12 {
                    break;
                }
                t *= 0.5;
            }
            x.copy_from_slice(&trial);
            steps += 1;
        }
        eps /= 10.0;
    }
    steps
}

/// Solves the inner problem starting from `start` (free-dof values) or zero.
pub fn solve_inner(
    problem: &InnerProblem<'_>,
    opts: &InnerOptions,
    start: Option<&[f64]>,
) -> Result<ViSolution, ViError> {
    let op = problem.op;
    if let Some(s) = start {
        if s.len() != op.n() {
            return Err(ViError::Shape {
                what: "start",
                expected: op.n(),
                got: s.len(),
            });
        }
    }
    let g = op.reduced_load(&problem.load);
    let mut x: Vec<f64> = match start {
        Some(s) => op.thresholded.iter().map(|&d| s[d]).collect(),
        None => vec![0.0; op.thresholded.len()],
    };
    // Reduced residuals track the full ones up to the interior solve's
    // round-off, so aim a little below the requested tolerance.
    let inner_tol = 0.5 * opts.tol;
    let iterations = match opts.method {
        InnerMethod::ShrinkageCd => cd_sweeps(&op.schur, &g, &problem.tau, &mut x, inner_tol, opts.max_iter),
        InnerMethod::RegularizedNewton => {
            let steps = newton_path(&op.schur, &g, &problem.tau, &mut x, inner_tol);
            cd_sweeps(&op.schur, &g, &problem.tau, &mut x, inner_tol, opts.max_iter.max(1)).map(|s| s + steps)
        }
    };
    if iterations.is_ok() {
        finish_on_pattern(&op.schur, &g, &problem.tau, &mut x);
    }
    let u = op.recover(&problem.load, &x);
    let residual = optimality_measure(problem, &u);
    match iterations {
        Ok(it) if residual <= opts.tol => Ok(ViSolution {
            energy: energy(problem, &u),
            optimality_residual: residual,
            iterations: it,
            u,
        }),
        Ok(it) | Err(it) => Err(ViError::MaxIter {
            iterations: it,
            residual,
            best: u,
        }),
    }
}

/// Adds the frozen adhesion term: `f_d += w λ β² u` at each free contact dof.
pub fn fold_adhesion(
    load: &LoadVector,
    beta_prev: &BoundaryField,
    u_prev_trace: &BoundaryField,
    lambda: &[f64],
    weights: &[f64],
    dofs: &DofMap,
) -> LoadVector {
    let mut out = load.clone();
    for (slot, dof) in dofs.contact_free_dofs() {
        let b = beta_prev.values[slot];
        out[dof] += weights[slot] * lambda[slot] * b * b * u_prev_trace.values[slot];
    }
    out
}

/// `τ_k = w_k · g(|u_prev,k|, β_prev,k)` for every free contact dof, in the
/// order of [`DofMap::contact_free_dofs`].
pub fn friction_thresholds(
    fric: &FrictionSpec,
    beta_prev: &BoundaryField,
    u_prev_trace: &BoundaryField,
    weights: &[f64],
    dofs: &DofMap,
) -> Vec<f64> {
    dofs.contact_free_dofs()
        .into_iter()
        .map(|(slot, _)| weights[slot] * fric.bound(u_prev_trace.values[slot].abs(), beta_prev.values[slot]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn dense_op(a: &[&[f64]], thresholded: Vec<usize>) -> ViOperator {
        let n = a.len();
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            for j in 0..n {
                if a[i][j] != 0.0 {
                    b.add(i, j, a[i][j]);
                }
            }
        }
        ViOperator::new(b.build(), thresholded).unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn one_dof_closed_forms() {
        let op = dense_op(&[&[2.0]], vec![0]);
        for method in [InnerMethod::ShrinkageCd, InnerMethod::RegularizedNewton] {
            let opts = InnerOptions {
                method,
                ..Default::default()
            };
            let p = InnerProblem::new(&op, vec![3.0], vec![1.0]).unwrap();
            let s = solve_inner(&p, &opts, None).unwrap();
            assert!((s.u[0] - 1.0).abs() < 1e-10);
            assert!((s.energy + 1.0).abs() < 1e-10);
            let p = InnerProblem::new(&op, vec![3.0], vec![5.0]).unwrap();
            assert_eq!(solve_inner(&p, &opts, None).unwrap().u[0], 0.0);
        }
    }

    #[test]
    fn energy_and_measure_examples() {
        let op = dense_op(&[&[2.0]], vec![0]);
        let p = InnerProblem::new(&op, vec![3.0], vec![1.0]).unwrap();
        assert_eq!(energy(&p, &[0.0]), 0.0);
        assert_eq!(energy(&p, &[1.0]), -1.0);
        assert_eq!(optimality_measure(&p, &[1.0]), 0.0);
        assert!(optimality_measure(&p, &[1.1]) > 0.0);
        let stick = InnerProblem::new(&op, vec![3.0], vec![5.0]).unwrap();
        assert_eq!(optimality_measure(&stick, &[0.0]), 0.0);
    }

    #[test]
    fn zero_threshold_is_a_linear_solve() {
        let a: [&[f64]; 3] = [&[4.0, -1.0, 0.0], &[-1.0, 4.0, -1.0], &[0.0, -1.0, 4.0]];
        let op = dense_op(&a, vec![0, 2]);
        let p = InnerProblem::new(&op, vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let s = solve_inner(&p, &InnerOptions::default(), None).unwrap();
        let direct = op.matrix().cholesky().unwrap().solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            assert!((s.u[i] - direct[i]).abs() <= 1e-10 * direct[i].abs());
        }
    }

    #[test]
    fn indefinite_operator_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(0, 1, 3.0);
        b.add(1, 0, 3.0);
        assert!(matches!(ViOperator::new(b.build(), vec![0]), Err(ViError::NotSpd(_))));
        let mut b = TripletBuilder::new(1);
        b.add(0, 0, -1.0);
        assert!(matches!(ViOperator::new(b.build(), vec![]), Err(ViError::NotSpd(_))));
    }

    #[test]
    fn iteration_budget_is_reported() {
        let a: [&[f64]; 2] = [&[2.0, 1.9], &[1.9, 2.0]];
        let op = dense_op(&a, vec![0, 1]);
        let p = InnerProblem::new(&op, vec![3.0, -1.0], vec![0.1, 0.1]).unwrap();
        let opts = InnerOptions {
            max_iter: 2,
            ..Default::default()
        };
        assert!(matches!(solve_inner(&p, &opts, None), Err(ViError::MaxIter { .. })));
    }

    #[test]
    fn negative_threshold_rejected() {
        let op = dense_op(&[&[2.0]], vec![0]);
        assert!(matches!(
            InnerProblem::new(&op, vec![3.0], vec![-1.0]),
            Err(ViError::NegativeThreshold { .. })
        ));
    }
}
