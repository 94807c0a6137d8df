//! Parameter sweeps over one or two axes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use antiplane_core::laws::FrictionSpec;

use crate::expr::Expr;
use crate::run::{build, run_scenario, smallness_of, CliError};
use crate::scenario::{Beta0Source, Scenario, ScenarioError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKey {
    /// Sets both `μ ≡ v` and `μ_* = v`.
    MuStar,
    C2g,
    Lambda,
    Beta0,
    Horizon,
}

impl AxisKey {
    pub fn name(self) -> &'static str {
        match self {
            Self::MuStar => "mu_star",
            Self::C2g => "c2g",
            Self::Lambda => "lambda",
            Self::Beta0 => "beta0",
            Self::Horizon => "T",
        }
    }

    fn apply(self, s: &mut Scenario, v: f64) -> Result<(), ScenarioError> {
        let bad = |msg: &str| ScenarioError::general(format!("sweep {}={v}: {msg}", self.name()));
        match self {
            Self::MuStar => {
                if !(v > 0.0) {
                    return Err(bad("must be positive"));
                }
                s.mu = Expr::constant(v);
                s.mu_star = Some(v);
            }
            Self::C2g => {
                s.friction = FrictionSpec::new(s.friction.c0g, s.friction.c1g, v).map_err(|e| bad(&e.to_string()))?;
            }
            Self::Lambda => s.lambda = Expr::constant(v),
            Self::Beta0 => s.beta0 = Beta0Source::Expr(Expr::constant(v)),
            Self::Horizon => {
                if !(v > 0.0) {
                    return Err(bad("must be positive"));
                }
                s.horizon = v;
            }
        }
        Ok(())
    }
}

impl FromStr for AxisKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mu_star" => Ok(Self::MuStar),
            "c2g" => Ok(Self::C2g),
            "lambda" => Ok(Self::Lambda),
            "beta0" => Ok(Self::Beta0),
            "T" => Ok(Self::Horizon),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected mu_star, c2g, lambda, beta0 or T)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub key: AxisKey,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = String;

    /// `key=v1,v2,...`
    fn from_str(s: &str) -> Result<Self, String> {
        let (k, vs) = s
            .split_once('=')
            .ok_or_else(|| format!("expected key=v1,v2,..., found `{s}`"))?;
        let key: AxisKey = k.trim().parse()?;
        let vs = vs.trim();
        if vs.is_empty() {
            return Err(format!("axis `{}` has no values", key.name()));
        }
        let values = vs
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("axis `{}`: bad value `{}`", key.name(), v.trim()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { key, values })
    }
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub params: Vec<(AxisKey, f64)>,
    pub delta_hat: Option<f64>,
    pub termination: String,
    pub b_fit: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.termination == "converged"
    }

    pub fn params_text(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{}={v}", k.name()))
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<String>| x.unwrap_or_default();
    let mut s = String::from("params,delta_hat,converged,termination,b_fit,iterations\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.params_text(),
            opt(r.delta_hat.map(|d| d.to_string())),
            r.converged(),
            r.termination,
            opt(r.b_fit.map(|b| b.to_string())),
            opt(r.iterations.map(|n| n.to_string())),
        );
    }
    s
}

fn grid(axes: &[Axis]) -> Vec<Vec<(AxisKey, f64)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((axis.key, v));
                    q
                })
            })
            .collect();
    }
    points
}

/// Runs every grid point into `out_dir/run_NNN` and writes `out_dir/sweep.csv`.
/// A failing point becomes a row with termination `error`; the sweep goes on.
pub fn run_sweep(base: &Scenario, axes: &[Axis], out_dir: &Path) -> Result<Vec<SweepRow>, CliError> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Data(format!(
            "a sweep takes one or two axes, found {}",
            axes.len()
        )));
    }
    if let Some(a) = axes.iter().find(|a| a.values.is_empty()) {
        return Err(CliError::Data(format!("axis `{}` has no values", a.key.name())));
    }
    if axes.len() == 2 && axes[0].key == axes[1].key {
        return Err(CliError::Data(format!("axis `{}` given twice", axes[0].key.name())));
    }
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, params) in grid(axes).into_iter().enumerate() {
        let run_dir = out_dir.join(format!("run_{i:03}"));
        let mut scenario = base.clone();
        let applied = params.iter().try_for_each(|&(k, v)| k.apply(&mut scenario, v));
        let result = applied
            .map_err(CliError::from)
            .and_then(|()| run_scenario(&scenario, &run_dir));
        let row = match result {
            Ok(out) => SweepRow {
                params,
                delta_hat: Some(out.smallness.delta_hat),
                termination: out.termination().name().to_string(),
                b_fit: out.fit.map(|f| f.0),
                iterations: Some(out.solution.report.iterations.len()),
                error: None,
            },
            Err(e) => {
                fs::create_dir_all(&run_dir)
                    .and_then(|()| fs::write(run_dir.join("error.txt"), format!("{e}\n")))
                    .map_err(|source| CliError::Io {
                        path: run_dir.clone(),
                        source,
                    })?;
                // δ_hat does not need a solve, so failed solves still report it.
                let delta_hat = build(&scenario, 0)
                    .and_then(|b| smallness_of(&b))
                    .ok()
                    .map(|s| s.delta_hat);
                SweepRow {
                    params,
                    delta_hat,
                    termination: "error".into(),
                    b_fit: None,
                    iterations: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let path = out_dir.join("sweep.csv");
    fs::write(&path, sweep_csv(&rows)).map_err(|source| CliError::Io { path, source })?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_syntax() {
        let a: Axis = "lambda=0.1, 0.2,1e-1".parse().unwrap();
        assert_eq!(a.key, AxisKey::Lambda);
        assert_eq!(a.values, vec![0.1, 0.2, 0.1]);
        assert!("lambda=".parse::<Axis>().unwrap_err().contains("no values"));
        assert!("nu=1".parse::<Axis>().unwrap_err().contains("unknown sweep axis"));
        assert!("T=1,x".parse::<Axis>().is_err());
        assert!("T".parse::<Axis>().is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let axes = [
            Axis {
                key: AxisKey::Lambda,
                values: vec![1.0, 2.0],
            },
            Axis {
                key: AxisKey::Horizon,
                values: vec![3.0, 4.0, 5.0],
            },
        ];
        let g = grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![(AxisKey::Lambda, 1.0), (AxisKey::Horizon, 4.0)]);
        assert_eq!(g[3], vec![(AxisKey::Lambda, 2.0), (AxisKey::Horizon, 3.0)]);
    }
}
