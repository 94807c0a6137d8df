//! A priori estimates evaluated as diagnostics. Universal constants are set
//! to 1, so the values are only meaningful as ratios tracked across
//! iterations and refinements.

use crate::bonding::BetaTrajectory;
use crate::fem::{h1_norm, linf};
use crate::laws::{AdhesionLaw, AdhesionSpec, HypothesisConstants};
use crate::scheme::{CoupledProblem, CoupledSolution};

/// Sup norms entering the L∞ constant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DataNorms {
    pub f0: f64,
    pub f_n: f64,
    pub beta: f64,
    pub xi: f64,
}

/// `K = (c0φ + ‖f0‖ + ‖fN‖ + c1φ‖β‖ + c2φ c0‖ξ‖ + c1ϕ c0‖β‖²‖ξ‖)/μ_*`.
pub fn compute_k(mu_star: f64, consts: &HypothesisConstants, norms: &DataNorms, c0_hat: f64) -> f64 {
    (consts.c0_phi
        + norms.f0
        + norms.f_n
        + consts.c1_phi * norms.beta
        + consts.c2_phi * c0_hat * norms.xi
        + consts.c1_vphi * c0_hat * norms.beta * norms.beta * norms.xi)
        / mu_star
}

/// H¹ bound with the universal constant taken as 1. `norms.xi` is the H¹
/// norm of the frozen displacement here, not its sup norm.
pub fn apriori_h1_rhs(mu_star: f64, consts: &HypothesisConstants, norms: &DataNorms, c0_hat: f64) -> f64 {
    let s = c0_hat / mu_star;
    consts.c1_phi * s * norms.beta
        + consts.c2_phi * s * norms.xi
        + consts.c1_vphi * s * norms.beta * norms.beta * norms.xi
        + (1.0 + norms.f0 + norms.f_n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GronwallValue {
    Finite(f64),
    /// The exponential overflowed.
    Infinite,
}

impl GronwallValue {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `‖β0‖(1 + x eˣ) + c0β T (1 + x eˣ)` with `x = c T U²`.
pub fn gronwall_beta_rhs(beta0_norm: f64, c0_beta: f64, c: f64, u_inf_norm: f64, horizon: f64) -> GronwallValue {
    let x = c * horizon * u_inf_norm * u_inf_norm;
    let growth = 1.0 + x * x.exp();
    let v = beta0_norm * growth + c0_beta * horizon * growth;
    if v.is_finite() {
        GronwallValue::Finite(v)
    } else {
        GronwallValue::Infinite
    }
}

pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxPolicy {
    pub upper: f64,
    pub check_monotone: bool,
}

impl BoxPolicy {
    pub const UNIT: Self = Self {
        upper: 1.0,
        check_monotone: true,
    };

    /// With a positive restoration energy under E1, bonds can regrow: only
    /// nonnegativity is checked.
    pub fn for_adhesion(adh: &AdhesionSpec) -> Self {
        if adh.law == AdhesionLaw::E1 && adh.e_d_linf() > 0.0 {
            Self {
                upper: f64::INFINITY,
                check_monotone: false,
            }
        } else {
            Self::UNIT
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxCheck {
    pub box_ok: bool,
    /// Always true when the policy skips the monotonicity check.
    pub monotone_ok: bool,
    pub worst_violation: f64,
}

pub fn verify_beta_box(traj: &BetaTrajectory, policy: BoxPolicy) -> BoxCheck {
    let mut box_excess: f64 = 0.0;
    let mut rise: f64 = 0.0;
    for (k, field) in traj.fields.iter().enumerate() {
        for (i, &b) in field.values.iter().enumerate() {
            let excess = if b.is_nan() {
                f64::INFINITY
            } else {
                (-b).max(b - policy.upper).max(0.0)
            };
            box_excess = box_excess.max(excess);
            if policy.check_monotone && k > 0 {
                rise = rise.max(b - traj.fields[k - 1].values[i]);
            }
        }
    }
    BoxCheck {
        box_ok: box_excess <= BOX_TOLERANCE,
        monotone_ok: rise <= BOX_TOLERANCE,
        worst_violation: box_excess.max(rise),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub c0_hat: f64,
    pub apriori_h1_rhs: f64,
    /// `max_k ‖u(t_k)‖_{H¹} / apriori_h1_rhs`.
    pub h1_ratio: f64,
    pub k_value: f64,
    /// `max_k ‖u(t_k)‖_{L∞} / K`.
    pub linf_ratio: f64,
    pub gronwall_rhs: GronwallValue,
    /// `‖β‖_{L∞} / gronwall_rhs`, zero when the bound is infinite.
    pub gronwall_ratio: f64,
    pub beta_box_ok: bool,
    pub beta_monotone_ok: bool,
    pub beta_worst_violation: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 && den.is_finite() {
        num / den
    } else {
        0.0
    }
}

/// Evaluates every bound on a converged (or last) iterate, where the frozen
/// displacement coincides with the solution.
pub fn evaluate_bounds(problem: &CoupledProblem, solution: &CoupledSolution, c0_hat: f64) -> BoundsReport {
    let consts = problem.constants();
    let mu_star = problem.material.mu_star;
    let f0 = problem.loads.f0.iter().map(|v| linf(v)).fold(0.0, f64::max);
    let f_n = problem.loads.f_n.iter().map(|v| linf(v)).fold(0.0, f64::max);
    let beta = solution.beta.linf();
    let u_inf = solution.u.iter().map(|u| linf(&u.values)).fold(0.0, f64::max);
    let u_h1 = solution
        .u
        .iter()
        .map(|u| h1_norm(&problem.mesh, &u.values))
        .fold(0.0, f64::max);

    let k_value = compute_k(
        mu_star,
        &consts,
        &DataNorms {
            f0,
            f_n,
            beta,
            xi: u_inf,
        },
        c0_hat,
    );
    let h1_rhs = apriori_h1_rhs(
        mu_star,
        &consts,
        &DataNorms {
            f0,
            f_n,
            beta,
            xi: u_h1,
        },
        c0_hat,
    );
    let horizon = solution.grid.horizon();
    let gronwall = gronwall_beta_rhs(
        problem.beta0.linf(),
        consts.c0_beta,
        consts.c3_beta * c0_hat,
        u_inf,
        horizon,
    );
    let check = verify_beta_box(&solution.beta, BoxPolicy::for_adhesion(&problem.adhesion));
    BoundsReport {
        c0_hat,
        apriori_h1_rhs: h1_rhs,
        h1_ratio: ratio(u_h1, h1_rhs),
        k_value,
        linf_ratio: ratio(u_inf, k_value),
        gronwall_rhs: gronwall,
        gronwall_ratio: ratio(beta, gronwall.value()),
        beta_box_ok: check.box_ok,
        beta_monotone_ok: check.monotone_ok,
        beta_worst_violation: check.worst_violation,
    }
}

/// Per-iterate H¹ ratio `‖u^n‖_{H¹} / RHS(β^{n−1}, u^{n−1})`.
pub fn h1_ratio_history(problem: &CoupledProblem, solution: &CoupledSolution, c0_hat: f64) -> Vec<f64> {
    let consts = problem.constants();
    let f0 = problem.loads.f0.iter().map(|v| linf(v)).fold(0.0, f64::max);
    let f_n = problem.loads.f_n.iter().map(|v| linf(v)).fold(0.0, f64::max);
    solution
        .report
        .iterations
        .iter()
        .map(|it| {
            let norms = DataNorms {
                f0,
                f_n,
                beta: it.beta_prev_linf,
                xi: it.xi_h1_max,
            };
            ratio(
                it.u_h1_max,
                apriori_h1_rhs(problem.material.mu_star, &consts, &norms, c0_hat),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bonding::TimeGrid;
    use crate::fem::BoundaryField;

    fn consts() -> HypothesisConstants {
        HypothesisConstants {
            c0_phi: 1.0,
            c1_phi: 0.3,
            c2_phi: 0.2,
            c1_vphi: 0.4,
            c2_vphi: 0.4,
            c3_vphi: 0.4,
            c0_beta: 0.1,
            c1_beta: 0.0,
            c2_beta: 0.0,
            c3_beta: 0.5,
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(compute_k(2.0, &consts(), &DataNorms::default(), 0.8), 0.5);
        let n = DataNorms {
            f0: 1.0,
            f_n: 0.5,
            beta: 0.9,
            xi: 2.0,
        };
        let k1 = compute_k(1.0, &consts(), &n, 0.8);
        assert_eq!(compute_k(2.0, &consts(), &n, 0.8), k1 / 2.0);
    }

    #[test]
    fn h1_rhs_examples() {
        let zero = HypothesisConstants {
            c0_phi: 0.0,
            ..consts()
        };
        assert_eq!(apriori_h1_rhs(1.0, &zero, &DataNorms::default(), 0.8), 1.0);
        let base = DataNorms {
            f0: 0.0,
            f_n: 0.0,
            beta: 0.7,
            xi: 1.0,
        };
        let xi_terms = |xi: f64| {
            apriori_h1_rhs(1.3, &zero, &DataNorms { xi, ..base }, 0.8)
                - apriori_h1_rhs(1.3, &zero, &DataNorms { xi: 0.0, ..base }, 0.8)
        };
        assert!((xi_terms(2.0) - 2.0 * xi_terms(1.0)).abs() < 1e-15);
    }

    #[test]
    fn gronwall_examples() {
        assert_eq!(gronwall_beta_rhs(0.8, 0.3, 2.0, 5.0, 0.0), GronwallValue::Finite(0.8));
        assert_eq!(gronwall_beta_rhs(0.8, 0.25, 2.0, 0.0, 2.0), GronwallValue::Finite(1.3));
        assert_eq!(gronwall_beta_rhs(1.0, 0.0, 1.0, 1e3, 1.0), GronwallValue::Infinite);
    }

    #[test]
    fn box_examples() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let mut traj = BetaTrajectory::constant(&BoundaryField::constant(4, 0.5, 0), &grid);
        assert_eq!(
            verify_beta_box(&traj, BoxPolicy::UNIT),
            BoxCheck {
                box_ok: true,
                monotone_ok: true,
                worst_violation: 0.0
            }
        );
        traj.fields[2].values[1] = 1.5;
        traj.fields[3].values[1] = 1.5;
        let c = verify_beta_box(&traj, BoxPolicy::UNIT);
        assert!(!c.box_ok && !c.monotone_ok);
        assert!((c.worst_violation - 1.0).abs() < 1e-15);
        let unbounded = BoxPolicy {
            upper: f64::INFINITY,
            check_monotone: false,
        };
        let c = verify_beta_box(&traj, unbounded);
        assert!(c.box_ok && c.monotone_ok && c.worst_violation == 0.0);
    }

    #[test]
    fn injected_excess_without_rise() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let mut traj = BetaTrajectory::constant(&BoundaryField::constant(2, 1.5, 0), &grid);
        traj.fields[0].values[0] = 1.5;
        let c = verify_beta_box(&traj, BoxPolicy::UNIT);
        assert!(!c.box_ok && c.monotone_ok);
        assert!((c.worst_violation - 0.5).abs() < 1e-15);
    }
}
