//! Scenario files: flat `section.key = value` lines, `#` comments.
//!
//! Every key is listed in [`KEYS`]; anything else is rejected with its line
//! number. Paths are relative to the scenario file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use antiplane_core::bonding::PicardOptions;
use antiplane_core::laws::{AdhesionLaw, FrictionSpec};
use antiplane_core::mesh::{BoundaryTag, GmshTagMap, MeshFormat, SideTags};
use antiplane_core::vi::{InnerMethod, InnerOptions};
use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl ScenarioError {
    pub fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: None,
            message: message.into(),
        }
    }
}

/// Accepted keys with a one-line description each.
pub const KEYS: &[(&str, &str)] = &[
    ("mesh.path", "mesh file"),
    ("mesh.format", "native | gmsh (default native)"),
    (
        "mesh.gmsh_dirichlet",
        "comma-separated physical groups for Γ_D (default 1)",
    ),
    ("mesh.gmsh_neumann", "physical groups for Γ_N (default 2)"),
    ("mesh.gmsh_contact", "physical groups for Γ_C (default 3)"),
    ("mesh.rectangle", "`width height nx ny`, instead of mesh.path"),
    (
        "mesh.sides",
        "tags of bottom right top left for mesh.rectangle (default `C N D N`)",
    ),
    ("mesh.refine", "uniform refinements applied after loading (default 0)"),
    (
        "material.mu",
        "shear modulus, expression in x, y at triangle centroids (default 1)",
    ),
    (
        "material.mu_star",
        "lower bound of μ (default: smallest triangle value)",
    ),
    ("friction.c0g", "friction bound constant (default 0)"),
    ("friction.c1g", "coefficient of the bonding field (default 0)"),
    ("friction.c2g", "coefficient of the slip (default 0)"),
    ("adhesion.law", "E1 | E1_ED0 | E2 | E3"),
    (
        "adhesion.lambda",
        "adhesion coefficient, expression in x, y (default 0)",
    ),
    ("adhesion.e_d", "restoration energy, expression in x, y (default 0)"),
    ("adhesion.beta0", "initial bonding field, expression in x, y"),
    ("adhesion.beta0_file", "CSV `vertex_id,beta` instead of adhesion.beta0"),
    ("loads.f0", "body force, expression in x, y, t (default 0)"),
    ("loads.f_n", "traction on Γ_N, expression in x, y, t (default 0)"),
    ("grid.T", "time horizon (default 1)"),
    ("grid.n_steps", "time steps (default 10)"),
    ("solver.tol_outer", "outer tolerance (default 1e-8)"),
    ("solver.max_outer", "outer iteration budget (default 100)"),
    ("solver.inner_tol", "inner optimality tolerance (default 1e-10)"),
    ("solver.inner_max_iter", "inner sweep budget (default 100000)"),
    (
        "solver.inner_method",
        "shrinkage_cd | regularized_newton (default shrinkage_cd)",
    ),
    ("solver.picard_tol", "bonding fixed-point tolerance (default 1e-13)"),
    ("solver.picard_max_iter", "bonding fixed-point budget (default 500)"),
    (
        "solver.initial_u",
        "zero | path of a field CSV `vertex_id,x,y,value` (default zero)",
    ),
    ("mode.clip_beta_box", "project β onto [0, 1] (default false)"),
    ("mode.verification", "accept an empty contact boundary (default false)"),
    ("mode.box_claims", "require c̃ ≤ β0 ≤ 1 with c̃ > 0 (default true)"),
    (
        "mode.waive_assumptions",
        "run even if β0 violates the assumptions (default false)",
    ),
    ("verify.exact_u", "exact solution for a refinement study"),
    ("verify.exact_ux", "its x derivative"),
    ("verify.exact_uy", "its y derivative"),
    ("verify.levels", "meshes in the refinement ladder (default 4)"),
    ("output.dir", "output directory (default `out`)"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    File {
        path: PathBuf,
        format: MeshFormat,
    },
    Rectangle {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        sides: SideTags,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Beta0Source {
    Expr(Expr),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exact {
    pub u: Expr,
    pub ux: Expr,
    pub uy: Expr,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub base_dir: PathBuf,
    pub mesh: MeshSource,
    pub refine: usize,
    pub mu: Expr,
    pub mu_star: Option<f64>,
    pub friction: FrictionSpec,
    pub law: AdhesionLaw,
    pub lambda: Expr,
    pub e_d: Expr,
    pub beta0: Beta0Source,
    pub f0: Expr,
    pub f_n: Expr,
    pub horizon: f64,
    pub n_steps: usize,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub inner: InnerOptions,
    pub picard: PicardOptions,
    pub initial_u: Option<PathBuf>,
    pub clip_beta_box: bool,
    pub verification: bool,
    pub box_claims: bool,
    pub waive_assumptions: bool,
    pub exact: Option<Exact>,
    pub output_dir: PathBuf,
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    map: BTreeMap<String, Entry>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|e| (e.line, e.value.as_str()))
    }

    fn parse<T>(&self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>, ScenarioError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => f(v)
                .map(Some)
                .ok_or_else(|| ScenarioError::at(line, key, format!("expected {what}, found `{v}`"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ScenarioError> {
        self.parse(key, "a finite number", |v| {
            v.parse::<f64>().ok().filter(|x| x.is_finite())
        })
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ScenarioError> {
        self.parse(key, "a nonnegative integer", |v| v.parse::<usize>().ok())
    }

    fn flag_or(&self, key: &str, default: bool) -> Result<bool, ScenarioError> {
        Ok(self
            .parse(key, "true or false", |v| match v {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            })?
            .unwrap_or(default))
    }

    fn flag(&self, key: &str) -> Result<bool, ScenarioError> {
        self.flag_or(key, false)
    }

    fn expr(&self, key: &str) -> Result<Option<Expr>, ScenarioError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<Expr>()
                .map(Some)
                .map_err(|e| ScenarioError::at(line, key, format!("bad expression: {e}"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.line)
    }
}

fn parse_groups(entries: &Entries, key: &str, default: i64) -> Result<Vec<i64>, ScenarioError> {
    match entries.raw(key) {
        None => Ok(vec![default]),
        Some((line, v)) => v
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ScenarioError::at(line, key, format!("expected comma-separated integers, found `{v}`"))),
    }
}

fn parse_sides(entries: &Entries) -> Result<SideTags, ScenarioError> {
    let Some((line, v)) = entries.raw("mesh.sides") else {
        return Ok(SideTags::contact_bottom());
    };
    let tags: Vec<BoundaryTag> = v
        .split_whitespace()
        .map(|s| s.parse::<BoundaryTag>())
        .collect::<Result<_, _>>()
        .map_err(|_| ScenarioError::at(line, "mesh.sides", format!("expected four of D, N, C, found `{v}`")))?;
    match tags[..] {
        [bottom, right, top, left] => Ok(SideTags {
            bottom,
            right,
            top,
            left,
        }),
        _ => Err(ScenarioError::at(
            line,
            "mesh.sides",
            format!("expected four tags, found {}", tags.len()),
        )),
    }
}

fn parse_mesh(entries: &Entries, base: &Path) -> Result<MeshSource, ScenarioError> {
    match (entries.raw("mesh.path"), entries.raw("mesh.rectangle")) {
        (Some(_), Some((line, _))) => Err(ScenarioError::at(
            line,
            "mesh.rectangle",
            "give either mesh.path or mesh.rectangle",
        )),
        (None, None) => Err(ScenarioError::general("missing mesh.path or mesh.rectangle")),
        (Some((line, p)), None) => {
            let path = base.join(p);
            if !path.is_file() {
                return Err(ScenarioError::at(
                    line,
                    "mesh.path",
                    format!("no such file `{}`", path.display()),
                ));
            }
            let format = match entries.raw("mesh.format") {
                None | Some((_, "native")) => MeshFormat::Native,
                Some((_, "gmsh")) => MeshFormat::GmshV2(GmshTagMap {
                    dirichlet: parse_groups(entries, "mesh.gmsh_dirichlet", 1)?,
                    neumann: parse_groups(entries, "mesh.gmsh_neumann", 2)?,
                    contact: parse_groups(entries, "mesh.gmsh_contact", 3)?,
                }),
                Some((line, other)) => {
                    return Err(ScenarioError::at(
                        line,
                        "mesh.format",
                        format!("expected native or gmsh, found `{other}`"),
                    ))
                }
            };
            Ok(MeshSource::File { path, format })
        }
        (None, Some((line, v))) => {
            let parts: Vec<&str> = v.split_whitespace().collect();
            let bad = || {
                ScenarioError::at(
                    line,
                    "mesh.rectangle",
                    format!("expected `width height nx ny`, found `{v}`"),
                )
            };
            if parts.len() != 4 {
                return Err(bad());
            }
            let width: f64 = parts[0].parse().map_err(|_| bad())?;
            let height: f64 = parts[1].parse().map_err(|_| bad())?;
            let nx: usize = parts[2].parse().map_err(|_| bad())?;
            let ny: usize = parts[3].parse().map_err(|_| bad())?;
            if !(width > 0.0 && height > 0.0 && nx > 0 && ny > 0) {
                return Err(bad());
            }
            Ok(MeshSource::Rectangle {
                width,
                height,
                nx,
                ny,
                sides: parse_sides(entries)?,
            })
        }
    }
}

/// Checks `β0` values against the assumptions selected by the scenario.
pub fn check_beta0(scenario: &Scenario, values: &[f64], line: Option<usize>) -> Result<(), ScenarioError> {
    if scenario.waive_assumptions || values.is_empty() {
        return Ok(());
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let key = Some(
        if matches!(scenario.beta0, Beta0Source::File(_)) {
            "adhesion.beta0_file"
        } else {
            "adhesion.beta0"
        }
        .to_string(),
    );
    let fail = |message: String| ScenarioError {
        line,
        key: key.clone(),
        message: format!("{message}; set mode.waive_assumptions = true to run anyway"),
    };
    if scenario.law == AdhesionLaw::E3 && !(lo > 0.0 && hi < 1.0) {
        return Err(fail(format!(
            "law E3 assumes 0 < c̃1 ≤ β0 ≤ c̃2 < 1, found β0 in [{lo}, {hi}]"
        )));
    }
    if scenario.box_claims && !(lo > 0.0 && hi <= 1.0) {
        return Err(fail(format!(
            "box claims assume c̃ ≤ β0 ≤ 1 with c̃ > 0, found β0 in [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn split_lines(text: &str) -> Result<Entries, ScenarioError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ScenarioError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(ScenarioError::at(line, k, "unknown key"));
        }
        if v.is_empty() {
            return Err(ScenarioError::at(line, k, "missing value"));
        }
        if let Some(prev) = map.get(k) {
            let prev: &Entry = prev;
            return Err(ScenarioError::at(
                line,
                k,
                format!("repeated key (first on line {})", prev.line),
            ));
        }
        map.insert(
            k.to_string(),
            Entry {
                line,
                value: v.to_string(),
            },
        );
    }
    Ok(Entries { map })
}

/// Parses scenario text; `base_dir` resolves relative paths.
pub fn parse_scenario_str(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let e = split_lines(text)?;
    let mesh = parse_mesh(&e, base_dir)?;
    let law = match e.raw("adhesion.law") {
        None => return Err(ScenarioError::general("missing adhesion.law")),
        Some((line, v)) => v
            .parse::<AdhesionLaw>()
            .map_err(|err| ScenarioError::at(line, "adhesion.law", err.to_string()))?,
    };
    let c0g = e.real("friction.c0g")?.unwrap_or(0.0);
    let c1g = e.real("friction.c1g")?.unwrap_or(0.0);
    let c2g = e.real("friction.c2g")?.unwrap_or(0.0);
    let friction = FrictionSpec::new(c0g, c1g, c2g).map_err(|err| {
        let key = ["friction.c0g", "friction.c1g", "friction.c2g"]
            .into_iter()
            .find(|k| e.raw(k).is_some())
            .unwrap_or("friction.c0g");
        ScenarioError::at(e.line(key), key, err.to_string())
    })?;
    let beta0 = match (e.expr("adhesion.beta0")?, e.raw("adhesion.beta0_file")) {
        (Some(_), Some((line, _))) => {
            return Err(ScenarioError::at(
                line,
                "adhesion.beta0_file",
                "give either adhesion.beta0 or adhesion.beta0_file",
            ))
        }
        (None, None) => return Err(ScenarioError::general("missing adhesion.beta0 or adhesion.beta0_file")),
        (Some(x), None) => Beta0Source::Expr(x),
        (None, Some((line, p))) => {
            let path = base_dir.join(p);
            if !path.is_file() {
                return Err(ScenarioError::at(
                    line,
                    "adhesion.beta0_file",
                    format!("no such file `{}`", path.display()),
                ));
            }
            Beta0Source::File(path)
        }
    };
    let horizon = e.real("grid.T")?.unwrap_or(1.0);
    if !(horizon > 0.0) {
        return Err(ScenarioError::at(e.line("grid.T"), "grid.T", "must be positive"));
    }
    let n_steps = e.count("grid.n_steps")?.unwrap_or(10);
    if n_steps == 0 {
        return Err(ScenarioError::at(
            e.line("grid.n_steps"),
            "grid.n_steps",
            "must be at least 1",
        ));
    }
    let tol_outer = e.real("solver.tol_outer")?.unwrap_or(1e-8);
    if !(tol_outer > 0.0) {
        return Err(ScenarioError::at(
            e.line("solver.tol_outer"),
            "solver.tol_outer",
            "must be positive",
        ));
    }
    let max_outer = e.count("solver.max_outer")?.unwrap_or(100);
    if max_outer == 0 {
        return Err(ScenarioError::at(
            e.line("solver.max_outer"),
            "solver.max_outer",
            "must be at least 1",
        ));
    }
    let defaults = InnerOptions::default();
    let method = match e.raw("solver.inner_method") {
        None => defaults.method,
        Some((line, v)) => InnerMethod::parse(v).ok_or_else(|| {
            ScenarioError::at(
                line,
                "solver.inner_method",
                format!("expected shrinkage_cd or regularized_newton, found `{v}`"),
            )
        })?,
    };
    let inner = InnerOptions {
        tol: e.real("solver.inner_tol")?.unwrap_or(defaults.tol),
        max_iter: e.count("solver.inner_max_iter")?.unwrap_or(defaults.max_iter),
        method,
    };
    let pdef = PicardOptions::default();
    let picard = PicardOptions {
        tol: e.real("solver.picard_tol")?.unwrap_or(pdef.tol),
        max_iter: e.count("solver.picard_max_iter")?.unwrap_or(pdef.max_iter),
        clip_box: false,
    };
    let initial_u = match e.raw("solver.initial_u") {
        None | Some((_, "zero")) => None,
        Some((line, p)) => {
            let path = base_dir.join(p);
            if !path.is_file() {
                return Err(ScenarioError::at(
                    line,
                    "solver.initial_u",
                    format!("no such file `{}`", path.display()),
                ));
            }
            Some(path)
        }
    };
    let exact = match e.expr("verify.exact_u")? {
        None => None,
        Some(u) => {
            let missing = |k: &str| ScenarioError::at(e.line("verify.exact_u"), k, "required with verify.exact_u");
            Some(Exact {
                u,
                ux: e.expr("verify.exact_ux")?.ok_or_else(|| missing("verify.exact_ux"))?,
                uy: e.expr("verify.exact_uy")?.ok_or_else(|| missing("verify.exact_uy"))?,
                levels: e.count("verify.levels")?.unwrap_or(4).max(2),
            })
        }
    };
    let mu_star = e.real("material.mu_star")?;
    if let Some(m) = mu_star {
        if !(m > 0.0) {
            return Err(ScenarioError::at(
                e.line("material.mu_star"),
                "material.mu_star",
                "must be positive",
            ));
        }
    }
    let scenario = Scenario {
        base_dir: base_dir.to_path_buf(),
        mesh,
        refine: e.count("mesh.refine")?.unwrap_or(0),
        mu: e.expr("material.mu")?.unwrap_or(Expr::constant(1.0)),
        mu_star,
        friction,
        law,
        lambda: e.expr("adhesion.lambda")?.unwrap_or(Expr::constant(0.0)),
        e_d: e.expr("adhesion.e_d")?.unwrap_or(Expr::constant(0.0)),
        beta0,
        f0: e.expr("loads.f0")?.unwrap_or(Expr::constant(0.0)),
        f_n: e.expr("loads.f_n")?.unwrap_or(Expr::constant(0.0)),
        horizon,
        n_steps,
        tol_outer,
        max_outer,
        inner,
        picard,
        initial_u,
        clip_beta_box: e.flag("mode.clip_beta_box")?,
        verification: e.flag("mode.verification")?,
        box_claims: e.flag_or("mode.box_claims", true)?,
        waive_assumptions: e.flag("mode.waive_assumptions")?,
        exact,
        output_dir: e
            .raw("output.dir")
            .map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v)),
    };
    if let Beta0Source::Expr(x) = &scenario.beta0 {
        if let Some(v) = x.as_constant() {
            check_beta0(&scenario, &[v], Some(e.line("adhesion.beta0")))?;
        }
    }
    for (key, x) in [("adhesion.lambda", &scenario.lambda), ("adhesion.e_d", &scenario.e_d)] {
        if x.depends_on_time() {
            return Err(ScenarioError::at(e.line(key), key, "must not depend on t"));
        }
    }
    if scenario.mu.depends_on_time() {
        return Err(ScenarioError::at(
            e.line("material.mu"),
            "material.mu",
            "must not depend on t",
        ));
    }
    Ok(scenario)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| ScenarioError::general(format!("cannot read `{}`: {err}", path.display())))?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    parse_scenario_str(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# unit square, contact at the bottom
mesh.rectangle = 1 1 4 4
adhesion.law = E1
adhesion.lambda = 0.2
adhesion.beta0 = 0.8
loads.f0 = 1 + x
";

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        parse_scenario_str(text, Path::new("."))
    }

    #[test]
    fn minimal_scenario() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.law, AdhesionLaw::E1);
        assert_eq!(s.n_steps, 10);
        assert!(s.box_claims && !s.waive_assumptions);
        assert_eq!(s.f0.eval(2.0, 0.0, 0.0), 3.0);
        assert!(matches!(s.mesh, MeshSource::Rectangle { nx: 4, .. }));
    }

    #[test]
    fn unknown_law_and_key() {
        let err = parse(&MINIMAL.replace("= E1", "= E4")).unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("unknown law"));
        let err = parse(&format!("{MINIMAL}adhesion.colour = red\n")).unwrap_err();
        assert_eq!(err.line, Some(7));
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn bonding_assumptions() {
        let err = parse(&MINIMAL.replace("beta0 = 0.8", "beta0 = 1.2")).unwrap_err();
        assert_eq!(err.line, Some(5));
        assert!(err.message.contains("c̃ ≤ β0 ≤ 1"));
        let ok = format!(
            "{}mode.waive_assumptions = true\n",
            MINIMAL.replace("beta0 = 0.8", "beta0 = 1.2")
        );
        assert!(parse(&ok).is_ok());
        let e3 = MINIMAL.replace("= E1", "= E3").replace("beta0 = 0.8", "beta0 = 1");
        assert!(parse(&e3).unwrap_err().message.contains("E3"));
        let relaxed = format!(
            "{}mode.box_claims = false\n",
            MINIMAL.replace("beta0 = 0.8", "beta0 = 1.2")
        );
        assert!(parse(&relaxed).is_ok());
    }

    #[test]
    fn malformed_values() {
        assert_eq!(
            parse(&format!("{MINIMAL}grid.n_steps = -3\n")).unwrap_err().line,
            Some(7)
        );
        assert!(parse(&format!("{MINIMAL}loads.f_n = 1 +\n"))
            .unwrap_err()
            .message
            .contains("bad expression"));
        assert!(parse(&format!("{MINIMAL}adhesion.lambda = 1\n"))
            .unwrap_err()
            .message
            .contains("repeated"));
        assert!(parse("mesh.rectangle = 1 1 4\nadhesion.law = E1\nadhesion.beta0 = 0.5\n").is_err());
        assert!(parse("adhesion.law = E1\nadhesion.beta0 = 0.5\n")
            .unwrap_err()
            .message
            .contains("mesh"));
        assert!(
            parse(&format!("{MINIMAL}friction.c2g = -1\n"))
                .unwrap_err()
                .key
                .as_deref()
                == Some("friction.c2g")
        );
        assert!(parse(&format!("{MINIMAL}mesh.path = nowhere.msh\n")).is_err());
        assert!(parse(&format!("{MINIMAL}mode.clip_beta_box = yes\n")).is_err());
        assert!(parse(&format!("{MINIMAL}mode.box_claims = maybe\n")).is_err());
    }

    #[test]
    fn every_key_is_documented_once() {
        let mut names: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), KEYS.len());
    }
}
