//! Brute-force references for testing: sign-pattern enumeration for small
//! inner problems, the implicit E3 scalar solution, finite-difference
//! gradient checks and a dense trace-constant eigensolve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::fem::{assemble_mass, assemble_stiffness, boundary_weights, DofMap};
use crate::mesh::Mesh;
use crate::vi::{energy, InnerProblem};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {0} thresholded dofs; enumeration is capped at 12")]
    TooManyThresholds(usize),
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("no sign pattern is consistent; best pattern violates by {violation:e}")]
    NoConsistentPattern { best: Vec<f64>, violation: f64 },
    #[error("contact dof {dof} has |v| = {value} within 10h of the kink")]
    NearKink { dof: usize, value: f64 },
}

/// Small dense twin of an inner problem.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseInstance {
    pub a: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Zero for dofs without a threshold.
    pub tau: Vec<f64>,
}

impl DenseInstance {
    pub fn energy(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.a * u)) - self.f.dot(u)
            + self.tau.iter().zip(u.iter()).map(|(t, x)| t * x.abs()).sum::<f64>()
    }
}

/// Enumerates the (−, 0, +) patterns of the thresholded dofs. For each, the
/// zero dofs are pinned and the rest solve a linear system with the
/// threshold folded into the load; a pattern is consistent when the signs
/// agree and every pinned dof satisfies `|r| ≤ τ`.
pub fn brute_sign_pattern(inst: &DenseInstance) -> Result<DVector<f64>, OracleError> {
    let n = inst.f.len();
    let thr: Vec<usize> = (0..n).filter(|&i| inst.tau[i] > 0.0).collect();
    if thr.len() > 12 {
        return Err(OracleError::TooManyThresholds(thr.len()));
    }
    if inst.a.clone().cholesky().is_none() {
        return Err(OracleError::NotSpd);
    }
    let scale = 1.0 + inst.f.amax() + inst.tau.iter().fold(0.0f64, |m, t| m.max(*t));
    let eps = 1e-11 * scale;
    let patterns = 3usize.pow(thr.len() as u32);
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    let mut sign = vec![0i8; n];
    for code in 0..patterns {
        let mut c = code;
        for &i in &thr {
            sign[i] = (c % 3) as i8 - 1;
            c /= 3;
        }
        let active: Vec<usize> = (0..n).filter(|&i| inst.tau[i] == 0.0 || sign[i] != 0).collect();
        let mut u = DVector::zeros(n);
        if !active.is_empty() {
            let k = active.len();
            let sub = DMatrix::from_fn(k, k, |r, s| inst.a[(active[r], active[s])]);
            let rhs = DVector::from_fn(k, |r, _| {
                let i = active[r];
                inst.f[i] - inst.tau[i] * sign[i] as f64
            });
            let Some(ch) = sub.cholesky() else {
                return Err(OracleError::NotSpd);
            };
            let x = ch.solve(&rhs);
            for (r, &i) in active.iter().enumerate() {
                u[i] = x[r];
            }
        }
        let resid = &inst.f - &inst.a * &u;
        let mut violation: f64 = 0.0;
        for &i in &thr {
            match sign[i] {
                0 => violation = violation.max(resid[i].abs() - inst.tau[i]),
                s => violation = violation.max(-(s as f64) * u[i]),
            }
        }
        let e = inst.energy(&u);
        let better = match &best {
            None => true,
            Some((bv, be, _)) => {
                let (ok, best_ok) = (violation <= eps, *bv <= eps);
                match (ok, best_ok) {
                    (true, true) => e < *be,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => violation < *bv,
                }
            }
        };
        if better {
            best = Some((violation, e, u));
        }
    }
    let (violation, _, u) = best.expect("at least one pattern");
    if violation <= eps {
        Ok(u)
    } else {
        Err(OracleError::NoConsistentPattern {
            best: u.iter().copied().collect(),
            violation,
        })
    }
}

/// Solution of `β' = −λ β/(1+β) u²` for constant `u`, from the first integral
/// `ln β + β = ln β0 + β0 − λu²t`, by bisection to 1e-12.
pub fn scalar_e3_solution(beta0: f64, lambda: f64, u: f64, t: f64) -> f64 {
    assert!(beta0 > 0.0, "scalar E3 oracle needs beta0 > 0");
    let target = beta0.ln() + beta0 - lambda * u * u * t;
    let phi = |b: f64| b.ln() + b - target;
    if phi(beta0) <= 0.0 {
        return beta0;
    }
    let (mut lo, mut hi) = (beta0, beta0);
    while phi(lo) > 0.0 {
        lo *= 0.5;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central differences of the inner energy against `Au − f + τ·sign(u)`,
/// as the largest error relative to `‖∇J‖∞`.
pub fn fd_gradient_check(problem: &InnerProblem<'_>, point: &[f64], h: f64) -> Result<f64, OracleError> {
    let thr = problem.op.thresholded();
    for (k, &d) in thr.iter().enumerate() {
        if problem.tau[k] > 0.0 && point[d].abs() <= 10.0 * h {
            return Err(OracleError::NearKink {
                dof: d,
                value: point[d],
            });
        }
    }
    let mut grad: Vec<f64> = problem
        .op
        .matrix()
        .mul_vec(point)
        .iter()
        .zip(&problem.load)
        .map(|(a, f)| a - f)
        .collect();
    for (k, &d) in thr.iter().enumerate() {
        grad[d] += problem.tau[k] * point[d].signum();
    }
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(f64::MIN_POSITIVE);
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let xi = x[i];
        x[i] = xi + h;
        let jp = energy(problem, &x);
        x[i] = xi - h;
        let jm = energy(problem, &x);
        x[i] = xi;
        worst = worst.max(((jp - jm) / (2.0 * h) - grad[i]).abs() / scale);
    }
    Ok(worst)
}

/// Dense generalized eigensolve behind the trace constant: largest `θ` with
/// `B v = θ (M + K) v` on the free dofs, returned as `sqrt(θ)`.
pub fn dense_trace_constant(mesh: &Mesh, dofs: &DofMap) -> f64 {
    let n = dofs.n_free();
    let k = assemble_stiffness(mesh, &vec![1.0; mesh.n_triangles()], dofs).expect("unit modulus");
    let m = assemble_mass(mesh, dofs);
    let g = DMatrix::from_fn(n, n, |i, j| k.get(i, j) + m.get(i, j));
    let mut b = DMatrix::zeros(n, n);
    let w = boundary_weights(mesh, dofs);
    for (slot, dof) in dofs.contact_free_dofs() {
        b[(dof, dof)] = w[slot];
    }
    let l = g.cholesky().expect("Gram matrix is SPD").l();
    let linv = l.clone().try_inverse().expect("triangular factor is invertible");
    let c = &linv * b * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    SymmetricEigen::new(c).eigenvalues.max().max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_soft_threshold() {
        let inst = DenseInstance {
            a: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0])),
            f: DVector::from_vec(vec![3.0, 0.0]),
            tau: vec![1.0, 1.0],
        };
        let u = brute_sign_pattern(&inst).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-14 && u[1] == 0.0);
    }

    #[test]
    fn zero_thresholds_give_linear_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let f = DVector::from_vec(vec![1.0, 2.0]);
        let inst = DenseInstance {
            a: a.clone(),
            f: f.clone(),
            tau: vec![0.0, 0.0],
        };
        let u = brute_sign_pattern(&inst).unwrap();
        let direct = a.lu().solve(&f).unwrap();
        assert!((u - direct).amax() < 1e-14);
    }

    #[test]
    fn enumeration_cap() {
        let inst = DenseInstance {
            a: DMatrix::identity(13, 13),
            f: DVector::zeros(13),
            tau: vec![1.0; 13],
        };
        assert_eq!(brute_sign_pattern(&inst), Err(OracleError::TooManyThresholds(13)));
    }

    #[test]
    fn e3_scalar_values() {
        assert_eq!(scalar_e3_solution(0.7, 1.0, 1.0, 0.0), 0.7);
        assert_eq!(scalar_e3_solution(0.7, 0.0, 3.0, 5.0), 0.7);
        let omega = scalar_e3_solution(1.0, 1.0, 1.0, 1.0);
        assert!((omega - 0.567_143_290_409_783_8).abs() < 1e-12);
        assert!((omega.ln() + omega).abs() < 1e-12);
        let mut last = 1.0;
        for k in 1..20 {
            let b = scalar_e3_solution(1.0, 0.3, 1.5, k as f64 * 0.25);
            assert!(b < last);
            last = b;
        }
    }
}
