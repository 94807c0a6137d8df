//! Friction bound, bonding evolution laws, their structural constants and a
//! sampled checker for the structural inequalities those constants claim.
//!
//! Potentials on the contact boundary, with `y` the bonding value, `r` the
//! frozen displacement and `v` the test value:
//!
//! * frictional: `φ(y, r, v) = g(|r|, y)·|v|`
//! * adhesive:   `ϕ(y, r, v) = −λ·y²·r·v`

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LawError {
    #[error("friction bound evaluated at negative |u| = {0}")]
    NegativeSlip(f64),
    #[error("friction coefficient {name} = {value} must be finite and nonnegative")]
    BadFriction { name: &'static str, value: f64 },
    #[error("adhesion stiffness λ = {value} at contact vertex {vertex} must be finite and nonnegative")]
    BadLambda { vertex: usize, value: f64 },
    #[error("restoration rate E_D = {value} at contact vertex {vertex} is not finite")]
    BadRestoration { vertex: usize, value: f64 },
    #[error("law E3 is singular at β = {0} (needs β > −1)")]
    E3Singular(f64),
    #[error("coefficient table has {got} entries for {expected} contact vertices")]
    Length { expected: usize, got: usize },
    #[error("unknown law `{0}` (expected E1, E1_ED0, E2 or E3)")]
    UnknownLaw(String),
}

/// Affine-clamped friction bound `g(r, y) = max(0, c0g + c1g·y + c2g·r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrictionSpec {
    pub c0g: f64,
    pub c1g: f64,
    pub c2g: f64,
}

impl FrictionSpec {
    pub fn new(c0g: f64, c1g: f64, c2g: f64) -> Result<Self, LawError> {
        for (name, value) in [("c0g", c0g), ("c1g", c1g), ("c2g", c2g)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(LawError::BadFriction { name, value });
            }
        }
        Ok(Self { c0g, c1g, c2g })
    }

    pub fn zero() -> Self {
        Self {
            c0g: 0.0,
            c1g: 0.0,
            c2g: 0.0,
        }
    }

    pub fn eval_g(&self, r: f64, y: f64) -> Result<f64, LawError> {
        if r < 0.0 {
            return Err(LawError::NegativeSlip(r));
        }
        Ok(self.bound(r, y))
    }

    /// `g(|r|, y)`; total in `r`.
    pub fn bound(&self, r: f64, y: f64) -> f64 {
        (self.c0g + self.c1g * y + self.c2g * r.abs()).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AdhesionLaw {
    /// `H = E_D − λu²β`
    E1,
    /// `H = −λu²β`
    E1Ed0,
    /// `H = −(λu²β − E_D)₊`
    E2,
    /// `H = −λ·β/(1+β)·u²`
    E3,
}

impl AdhesionLaw {
    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "E1",
            Self::E1Ed0 => "E1_ED0",
            Self::E2 => "E2",
            Self::E3 => "E3",
        }
    }
}

impl fmt::Display for AdhesionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdhesionLaw {
    type Err = LawError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E1" => Ok(Self::E1),
            "E1_ED0" => Ok(Self::E1Ed0),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            other => Err(LawError::UnknownLaw(other.to_string())),
        }
    }
}

/// Pointwise rate of a law.
pub fn eval_h(law: AdhesionLaw, lambda: f64, e_d: f64, beta: f64, u: f64) -> Result<f64, LawError> {
    let decay = lambda * u * u * beta;
    Ok(match law {
        AdhesionLaw::E1 => e_d - decay,
        AdhesionLaw::E1Ed0 => -decay,
        AdhesionLaw::E2 => -(decay - e_d).max(0.0),
        AdhesionLaw::E3 => {
            if beta <= -1.0 {
                return Err(LawError::E3Singular(beta));
            }
            -lambda * beta / (1.0 + beta) * u * u
        }
    })
}

/// A law with per-contact-vertex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AdhesionSpec {
    pub law: AdhesionLaw,
    lambda: Vec<f64>,
    e_d: Vec<f64>,
}

impl AdhesionSpec {
    pub fn new(law: AdhesionLaw, lambda: Vec<f64>, e_d: Vec<f64>) -> Result<Self, LawError> {
        if lambda.len() != e_d.len() {
            return Err(LawError::Length {
                expected: lambda.len(),
                got: e_d.len(),
            });
        }
        for (vertex, &value) in lambda.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(LawError::BadLambda { vertex, value });
            }
        }
        for (vertex, &value) in e_d.iter().enumerate() {
            if !value.is_finite() {
                return Err(LawError::BadRestoration { vertex, value });
            }
        }
        // E_D has no meaning for these laws; keep the table but never read it.
        Ok(Self { law, lambda, e_d })
    }

    pub fn uniform(law: AdhesionLaw, lambda: f64, e_d: f64, n_contact: usize) -> Result<Self, LawError> {
        Self::new(law, vec![lambda; n_contact], vec![e_d; n_contact])
    }

    pub fn n_contact(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Restoration rate as the law sees it (zero for E1_ED0 and E3).
    pub fn e_d(&self, slot: usize) -> f64 {
        match self.law {
            AdhesionLaw::E1 | AdhesionLaw::E2 => self.e_d[slot],
            AdhesionLaw::E1Ed0 | AdhesionLaw::E3 => 0.0,
        }
    }

    pub fn lambda_linf(&self) -> f64 {
        self.lambda.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn e_d_linf(&self) -> f64 {
        (0..self.n_contact()).fold(0.0, |m, s| m.max(self.e_d(s).abs()))
    }

    pub fn rate(&self, slot: usize, beta: f64, u: f64) -> Result<f64, LawError> {
        eval_h(self.law, self.lambda[slot], self.e_d(slot), beta, u)
    }

    /// `ϕ(y, r, v) = −λ y² r v` at a contact vertex.
    pub fn adhesion_potential(&self, slot: usize, y: f64, r: f64, v: f64) -> f64 {
        -self.lambda[slot] * y * y * r * v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisConstants {
    pub c0_phi: f64,
    pub c1_phi: f64,
    pub c2_phi: f64,
    pub c1_vphi: f64,
    pub c2_vphi: f64,
    pub c3_vphi: f64,
    pub c0_beta: f64,
    pub c1_beta: f64,
    pub c2_beta: f64,
    pub c3_beta: f64,
}

impl HypothesisConstants {
    pub fn all_nonnegative(&self) -> bool {
        [
            self.c0_phi,
            self.c1_phi,
            self.c2_phi,
            self.c1_vphi,
            self.c2_vphi,
            self.c3_vphi,
            self.c0_beta,
            self.c1_beta,
            self.c2_beta,
            self.c3_beta,
        ]
        .iter()
        .all(|&c| c >= 0.0)
    }
}

/// The constant table as published for the concrete laws.
///
/// For E3 this lists `c3β = ‖λ‖/2`, which is too small near `β = 0`: with
/// `y₁ = 0`, `y₂ = ½`, `r₁ = r₂ = 1` the rate difference is `λ/3` while the
/// bound gives `λ/4`. [`derive_constants`] returns constants that hold.
pub fn published_constants(fric: &FrictionSpec, adh: &AdhesionSpec) -> HypothesisConstants {
    let lam = adh.lambda_linf();
    let (c0_beta, c3_beta) = match adh.law {
        AdhesionLaw::E1 | AdhesionLaw::E2 => (adh.e_d_linf(), lam),
        AdhesionLaw::E1Ed0 => (0.0, lam),
        AdhesionLaw::E3 => (0.0, 0.5 * lam),
    };
    HypothesisConstants {
        c0_phi: fric.c0g,
        c1_phi: fric.c1g,
        c2_phi: fric.c2g,
        c1_vphi: lam,
        c2_vphi: lam,
        c3_vphi: lam,
        c0_beta,
        c1_beta: lam,
        c2_beta: lam,
        c3_beta,
    }
}

/// Constants for which every sampled inequality holds on `β ∈ [0, 1]`.
///
/// Identical to [`published_constants`] except for E3, where the sharp value
/// is `c3β = ‖λ‖` because `β ↦ β/(1+β)` has slope 1 at `β = 0`.
pub fn derive_constants(fric: &FrictionSpec, adh: &AdhesionSpec) -> HypothesisConstants {
    let mut c = published_constants(fric, adh);
    if adh.law == AdhesionLaw::E3 {
        c.c3_beta = adh.lambda_linf();
    }
    c
}

/// Sampling box for [`check_hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBox {
    /// Range of `y` for the friction and adhesion potentials.
    pub y: (f64, f64),
    pub r: (f64, f64),
    pub v: (f64, f64),
    /// Range of `y` for the evolution-law checks.
    pub beta: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            y: (-2.0, 2.0),
            r: (-2.0, 2.0),
            v: (-2.0, 2.0),
            beta: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityResult {
    pub name: &'static str,
    /// Smallest `rhs − lhs` seen.
    pub worst_slack: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub samples: usize,
    pub checks: Vec<InequalityResult>,
}

impl HypothesisReport {
    pub fn worst_slack(&self) -> f64 {
        self.checks.iter().fold(f64::INFINITY, |m, c| m.min(c.worst_slack))
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&InequalityResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Slack below which a sample counts as a violation.
pub const SLACK_TOLERANCE: f64 = -1e-12;

pub const CHECK_NAMES: [&str; 9] = [
    "H1(ii)",
    "H1(iii)",
    "H2(ii)",
    "H2(iii)",
    "H3(ii)",
    "H3(iii)",
    "bound phi",
    "bound vphi",
    "bound H",
];

/// Evaluates every structural inequality on `n_samples` random tuples.
///
/// (H3)(iii) is checked as `|H(0,0)| ≤ c0β`: equality fails for E2 (where
/// `H(0,0) = 0`) and for nonuniform `E_D`, while the inequality is what the
/// downstream bound on `|H|` uses.
pub fn check_hypotheses(
    fric: &FrictionSpec,
    adh: &AdhesionSpec,
    consts: &HypothesisConstants,
    n_samples: usize,
    ranges: &SampleBox,
    seed: u64,
) -> HypothesisReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::INFINITY; 9];
    let mut violations = [0usize; 9];
    let mut record = |k: usize, slack: f64| {
        worst[k] = worst[k].min(slack);
        if slack < SLACK_TOLERANCE || slack.is_nan() {
            violations[k] += 1;
        }
    };
    let c = consts;
    let n_contact = adh.n_contact().max(1);
    let phi = |y: f64, r: f64, v: f64| fric.bound(r, y) * v.abs();
    let h = |s: usize, y: f64, r: f64| adh.rate(s, y, r).unwrap_or(f64::NAN);

    for _ in 0..n_samples {
        let s = rng.gen_range(0..n_contact);
        let mut draw = |range: (f64, f64)| {
            if range.0 == range.1 {
                range.0
            } else {
                rng.gen_range(range.0..range.1)
            }
        };
        let (y1, y2) = (draw(ranges.y), draw(ranges.y));
        let (r1, r2) = (draw(ranges.r), draw(ranges.r));
        let (v1, v2) = (draw(ranges.v), draw(ranges.v));
        let (b1, b2) = (draw(ranges.beta), draw(ranges.beta));
        let dv = (v1 - v2).abs();

        let lhs = phi(y1, r1, v2) - phi(y1, r1, v1) + phi(y2, r2, v1) - phi(y2, r2, v2);
        let rhs = c.c1_phi * (y1 - y2).abs() * dv + c.c2_phi * (r1 - r2).abs() * dv;
        record(0, rhs - lhs);
        record(1, c.c0_phi * dv - (phi(0.0, 0.0, v1) - phi(0.0, 0.0, v2)).abs());

        if adh.n_contact() > 0 {
            let vp = |y, r, v| adh.adhesion_potential(s, y, r, v);
            let lhs = vp(y1, r1, v2) - vp(y1, r1, v1) + vp(y2, r2, v1) - vp(y2, r2, v2);
            let rhs = c.c1_vphi * y1 * y1 * (r1 - r2).abs() * dv
                + c.c2_vphi * y2.abs() * r2.abs() * (y1 - y2).abs() * dv
                + c.c3_vphi * y1.abs() * r2.abs() * (y1 - y2).abs() * dv;
            record(2, rhs - lhs);
            record(3, -vp(0.0, 0.0, v1).abs());

            let lhs = (h(s, b1, r1) - h(s, b2, r2)).abs();
            let rhs = (c.c1_beta * b1.abs() * r1.abs() + c.c2_beta * b1.abs() * r2.abs()) * (r1 - r2).abs()
                + c.c3_beta * r2 * r2 * (b1 - b2).abs();
            record(4, rhs - lhs);
            record(5, c.c0_beta - h(s, 0.0, 0.0).abs());

            let lhs = vp(y1, r1, v2) - vp(y1, r1, v1);
            record(7, c.c1_vphi * y1 * y1 * r1.abs() * dv - lhs);
            let lhs = h(s, b1, r1).abs();
            record(8, c.c0_beta + c.c3_beta * b1.abs() * r1 * r1 - lhs);
        }

        let lhs = phi(y1, r1, v2) - phi(y1, r1, v1);
        record(6, (c.c0_phi + c.c1_phi * y1.abs() + c.c2_phi * r1.abs()) * dv - lhs);
    }

    let checks = CHECK_NAMES
        .iter()
        .enumerate()
        .filter(|&(k, _)| worst[k].is_finite() || violations[k] > 0)
        .map(|(k, &name)| InequalityResult {
            name,
            worst_slack: worst[k],
            violations: violations[k],
        })
        .collect();
    HypothesisReport {
        samples: n_samples,
        checks,
    }
}
