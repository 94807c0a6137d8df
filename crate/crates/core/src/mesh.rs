//! Conforming 2D triangulations with a three-way tagged boundary partition.
//!
//! A [`Mesh`] can only be obtained through validating constructors, so every
//! value of the type satisfies:
//!
//! * every triangle is counterclockwise with positive area,
//! * the tagged boundary edges cover the topological boundary exactly once,
//! * there are no hanging vertices and no orphan vertices.
//!
//! Boundary edges are stored in canonical orientation: walking from the first
//! to the second vertex keeps the adjacent triangle on the left, so the outward
//! normal is the edge tangent rotated by −90°.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Contact,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] = [Self::Dirichlet, Self::Neumann, Self::Contact];

    pub fn letter(self) -> char {
        match self {
            Self::Dirichlet => 'D',
            Self::Neumann => 'N',
            Self::Contact => 'C',
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "D" => Ok(Self::Dirichlet),
            "N" => Ok(Self::Neumann),
            "C" => Ok(Self::Contact),
            other => Err(format!("unknown boundary tag `{other}` (expected D, N or C)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown boundary tag `{tag}`")]
    UnknownTag { line: usize, column: usize, tag: String },
    #[error("negative triangle area: triangle {triangle} has signed area {area:e}")]
    NegativeArea { triangle: usize, area: f64 },
    #[error("degenerate triangle {triangle}: zero area")]
    DegenerateTriangle { triangle: usize },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("triangle {triangle} repeats a vertex")]
    RepeatedVertex { triangle: usize },
    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("boundary edge ({a}, {b}) carries no tag")]
    UntaggedBoundaryEdge { a: usize, b: usize },
    #[error("tagged edge ({a}, {b}) is not on the topological boundary")]
    NotABoundaryEdge { a: usize, b: usize },
    #[error("edge ({a}, {b}) is tagged more than once")]
    DuplicateBoundaryEdge { a: usize, b: usize },
    #[error("hanging vertex {vertex} lies inside edge ({a}, {b})")]
    HangingVertex { vertex: usize, a: usize, b: usize },
    #[error("vertex {vertex} belongs to no triangle")]
    OrphanVertex { vertex: usize },
    #[error("mesh has no triangles")]
    Empty,
}

/// How strictly [`validate_partition`] treats an empty contact boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    Strict,
    /// Pure elliptic reductions (manufactured solutions) may have no contact part.
    Verification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub dirichlet_length: f64,
    pub neumann_length: f64,
    pub contact_length: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
#[error("boundary partition rejected: {violations} (|Γ_D| = {dirichlet_length}, |Γ_N| = {neumann_length}, |Γ_C| = {contact_length})", violations = violations.join("; "))]
pub struct PartitionError {
    pub violations: Vec<String>,
    pub dirichlet_length: f64,
    pub neumann_length: f64,
    pub contact_length: f64,
}

/// Physical-group ids mapped onto boundary tags when importing Gmsh files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GmshTagMap {
    pub dirichlet: Vec<i64>,
    pub neumann: Vec<i64>,
    pub contact: Vec<i64>,
}

impl Default for GmshTagMap {
    fn default() -> Self {
        Self {
            dirichlet: vec![1],
            neumann: vec![2],
            contact: vec![3],
        }
    }
}

impl GmshTagMap {
    fn lookup(&self, group: i64) -> Option<BoundaryTag> {
        if self.dirichlet.contains(&group) {
            Some(BoundaryTag::Dirichlet)
        } else if self.neumann.contains(&group) {
            Some(BoundaryTag::Neumann)
        } else if self.contact.contains(&group) {
            Some(BoundaryTag::Contact)
        } else {
            None
        }
    }
}

/// Tags for the four sides of a structured rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl SideTags {
    /// Contact at the bottom, clamped at the top, traction-free sides.
    pub fn contact_bottom() -> Self {
        Self {
            bottom: BoundaryTag::Contact,
            right: BoundaryTag::Neumann,
            top: BoundaryTag::Dirichlet,
            left: BoundaryTag::Neumann,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct EdgeUse {
    /// Orientation as seen from the (last) adjacent triangle.
    oriented: [usize; 2],
    count: usize,
}

impl Mesh {
    /// Validates the input and canonicalizes boundary-edge orientation.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        what: "triangle vertex",
                        index: v,
                        len: nv,
                    });
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t });
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area < 0.0 {
                return Err(MeshError::NegativeArea { triangle: t, area });
            }
            if area == 0.0 {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
        }
        if let Some(vertex) = used.iter().position(|u| !u) {
            return Err(MeshError::OrphanVertex { vertex });
        }

        let mut edges: HashMap<(usize, usize), EdgeUse> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let entry = edges.entry(edge_key(a, b)).or_insert(EdgeUse {
                    oriented: [a, b],
                    count: 0,
                });
                entry.count += 1;
                entry.oriented = [a, b];
            }
        }
        let mut topological: Vec<(usize, usize)> = Vec::new();
        for (&key, info) in &edges {
            match info.count {
                1 => topological.push(key),
                2 => {}
                _ => {
                    return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
                }
            }
        }
        topological.sort_unstable();

        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        let mut canonical = Vec::with_capacity(boundary.len());
        for edge in &boundary {
            let [a, b] = edge.vertices;
            for v in [a, b] {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        what: "boundary edge vertex",
                        index: v,
                        len: nv,
                    });
                }
            }
            let key = edge_key(a, b);
            match edges.get(&key) {
                Some(info) if info.count == 1 => {
                    if tagged.insert(key, edge.tag).is_some() {
                        return Err(MeshError::DuplicateBoundaryEdge { a, b });
                    }
                    canonical.push(BoundaryEdge {
                        vertices: info.oriented,
                        tag: edge.tag,
                    });
                }
                _ => return Err(MeshError::NotABoundaryEdge { a, b }),
            }
        }
        for &(a, b) in &topological {
            if !tagged.contains_key(&(a, b)) {
                return Err(MeshError::UntaggedBoundaryEdge { a, b });
            }
        }

        // A hanging vertex shows up as a vertex lying strictly inside an edge
        // that only one triangle sees.
        for &(a, b) in &topological {
            let (p, q) = (vertices[a], vertices[b]);
            let d = [q[0] - p[0], q[1] - p[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            for (v, x) in vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                let w = [x[0] - p[0], x[1] - p[1]];
                let cross = d[0] * w[1] - d[1] * w[0];
                if cross.abs() > 1e-12 * len2 {
                    continue;
                }
                let s = (d[0] * w[0] + d[1] * w[1]) / len2;
                if s > 1e-12 && s < 1.0 - 1e-12 {
                    return Err(MeshError::HangingVertex { vertex: v, a, b });
                }
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary: canonical,
        })
    }

    /// Uniform structured triangulation of `[0, width] × [0, height]`.
    ///
    /// Every cell is split along its lower-left to upper-right diagonal.
    pub fn structured_rectangle(
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        sides: SideTags,
    ) -> Result<Self, MeshError> {
        assert!(
            nx >= 1 && ny >= 1,
            "structured mesh needs at least one cell per direction"
        );
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary.push(BoundaryEdge {
                vertices: [idx(i, 0), idx(i + 1, 0)],
                tag: sides.bottom,
            });
        }
        for j in 0..ny {
            boundary.push(BoundaryEdge {
                vertices: [idx(nx, j), idx(nx, j + 1)],
                tag: sides.right,
            });
        }
        for i in (0..nx).rev() {
            boundary.push(BoundaryEdge {
                vertices: [idx(i + 1, ny), idx(i, ny)],
                tag: sides.top,
            });
        }
        for j in (0..ny).rev() {
            boundary.push(BoundaryEdge {
                vertices: [idx(0, j + 1), idx(0, j)],
                tag: sides.left,
            });
        }
        Self::new(vertices, triangles, boundary)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let [a, b] = edge.vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Unit outward normal of a boundary edge.
    pub fn outward_normal(&self, edge: &BoundaryEdge) -> [f64; 2] {
        let [a, b] = edge.vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let t = [q[0] - p[0], q[1] - p[1]];
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    }

    /// Diameter of the largest triangle edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (p, q) = (self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]);
                h = h.max((q[0] - p[0]).hypot(q[1] - p[1]));
            }
        }
        h
    }

    /// Red refinement: every triangle is split into four congruent children.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for edge in &self.boundary {
            let [a, b] = edge.vertices;
            let m = mid(a, b, &mut vertices);
            boundary.push(BoundaryEdge {
                vertices: [a, m],
                tag: edge.tag,
            });
            boundary.push(BoundaryEdge {
                vertices: [m, b],
                tag: edge.tag,
            });
        }
        Mesh::new(vertices, triangles, boundary).expect("refinement of a valid mesh is valid")
    }

    /// Serializes to the native section format read by [`load_native`].
    pub fn to_native_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("$Vertices\n{}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("{:?} {:?}\n", v[0], v[1]));
        }
        out.push_str(&format!("$Triangles\n{}\n", self.triangles.len()));
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out.push_str(&format!("$BoundaryEdges\n{}\n", self.boundary.len()));
        for e in &self.boundary {
            out.push_str(&format!("{} {} {}\n", e.vertices[0], e.vertices[1], e.tag));
        }
        out
    }
}

/// Checks the measure of each boundary part.
pub fn validate_partition(mesh: &Mesh, mode: PartitionMode) -> Result<PartitionReport, PartitionError> {
    let dirichlet_length = mesh.boundary_length(BoundaryTag::Dirichlet);
    let neumann_length = mesh.boundary_length(BoundaryTag::Neumann);
    let contact_length = mesh.boundary_length(BoundaryTag::Contact);
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    if dirichlet_length <= 0.0 {
        violations.push("|Γ_D| = 0".to_string());
    }
    if contact_length <= 0.0 {
        match mode {
            PartitionMode::Strict => violations.push("|Γ_C| = 0".to_string()),
            PartitionMode::Verification => warnings.push("|Γ_C| = 0 accepted in verification mode".to_string()),
        }
    }
    if violations.is_empty() {
        Ok(PartitionReport {
            dirichlet_length,
            neumann_length,
            contact_length,
            warnings,
        })
    } else {
        Err(PartitionError {
            violations,
            dirichlet_length,
            neumann_length,
            contact_length,
        })
    }
}

/// Source format for [`load_mesh`].
#[derive(Clone, Debug, PartialEq)]
pub enum MeshFormat {
    Native,
    GmshV2(GmshTagMap),
}

pub fn load_mesh(source: &str, format: &MeshFormat) -> Result<Mesh, MeshError> {
    match format {
        MeshFormat::Native => load_native(source),
        MeshFormat::GmshV2(map) => load_gmsh_v2(source, map),
    }
}

/// Whitespace-separated fields of a line with their 1-based columns.
fn fields(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, f)| (line[..s].chars().count() + 1, f))
        .collect()
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| {
                let t = l.trim_start();
                !t.is_empty() && !t.starts_with('#')
            })
            .collect();
        Self { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn last_line(&self) -> usize {
        self.lines.last().map_or(1, |l| l.0)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        let last = self.last_line();
        self.next().ok_or_else(|| MeshError::Parse {
            line: last,
            column: 1,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_field<T: FromStr>(line: usize, column: usize, text: &str, what: &str) -> Result<T, MeshError> {
    text.parse().map_err(|_| MeshError::Parse {
        line,
        column,
        message: format!("cannot parse `{text}` as {what}"),
    })
}

fn expect_fields<'a>(
    line: usize,
    raw: &'a str,
    min: usize,
    max: usize,
    what: &str,
) -> Result<Vec<(usize, &'a str)>, MeshError> {
    let f = fields(raw);
    if f.len() < min || f.len() > max {
        let expected = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(MeshError::Parse {
            line,
            column: 1,
            message: format!("expected {expected} fields for {what}, found {}", f.len()),
        });
    }
    Ok(f)
}

fn read_count(cursor: &mut Cursor<'_>, section: &str) -> Result<usize, MeshError> {
    let (line, raw) = cursor.expect(&format!("{section} count"))?;
    let f = expect_fields(line, raw, 1, 1, &format!("{section} count"))?;
    parse_field(line, f[0].0, f[0].1, "a count")
}

/// Parses the native text format.
///
/// ```text
/// $Vertices
/// 4
/// 0 0
/// ...
/// $Triangles
/// 2
/// 0 1 2
/// ...
/// $BoundaryEdges
/// 4
/// 0 1 C
/// ...
/// ```
///
/// Blank lines, `#` comments and `$End...` markers are ignored.
pub fn load_native(source: &str) -> Result<Mesh, MeshError> {
    let mut cursor = Cursor::new(source);
    let mut vertices: Option<Vec<[f64; 2]>> = None;
    let mut triangles: Option<Vec<[usize; 3]>> = None;
    let mut boundary: Option<Vec<BoundaryEdge>> = None;

    while let Some((line, raw)) = cursor.next() {
        let header = raw.trim();
        let column = raw.len() - raw.trim_start().len() + 1;
        if header.starts_with("$End") {
            continue;
        }
        let duplicate = || MeshError::Parse {
            line,
            column,
            message: format!("section {header} appears twice"),
        };
        match header {
            "$Vertices" => {
                if vertices.is_some() {
                    return Err(duplicate());
                }
                let n = read_count(&mut cursor, "vertex")?;
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, r) = cursor.expect("a vertex line")?;
                    let f = expect_fields(l, r, 2, 2, "a vertex")?;
                    v.push([
                        parse_field(l, f[0].0, f[0].1, "a coordinate")?,
                        parse_field(l, f[1].0, f[1].1, "a coordinate")?,
                    ]);
                }
                vertices = Some(v);
            }
            "$Triangles" => {
                if triangles.is_some() {
                    return Err(duplicate());
                }
                let n = read_count(&mut cursor, "triangle")?;
                let mut t = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, r) = cursor.expect("a triangle line")?;
                    let f = expect_fields(l, r, 3, 3, "a triangle")?;
                    t.push([
                        parse_field(l, f[0].0, f[0].1, "a vertex index")?,
                        parse_field(l, f[1].0, f[1].1, "a vertex index")?,
                        parse_field(l, f[2].0, f[2].1, "a vertex index")?,
                    ]);
                }
                triangles = Some(t);
            }
            "$BoundaryEdges" => {
                if boundary.is_some() {
                    return Err(duplicate());
                }
                let n = read_count(&mut cursor, "boundary edge")?;
                let mut b = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, r) = cursor.expect("a boundary edge line")?;
                    let f = expect_fields(l, r, 3, 3, "a boundary edge")?;
                    let tag = f[2].1.parse().map_err(|_| MeshError::UnknownTag {
                        line: l,
                        column: f[2].0,
                        tag: f[2].1.to_string(),
                    })?;
                    b.push(BoundaryEdge {
                        vertices: [
                            parse_field(l, f[0].0, f[0].1, "a vertex index")?,
                            parse_field(l, f[1].0, f[1].1, "a vertex index")?,
                        ],
                        tag,
                    });
                }
                boundary = Some(b);
            }
            other => {
                return Err(MeshError::Parse {
                    line,
                    column,
                    message: format!("unexpected `{other}`, expected a section header"),
                })
            }
        }
    }
    let missing = |name: &str| MeshError::Parse {
        line: cursor.last_line(),
        column: 1,
        message: format!("missing section {name}"),
    };
    let vertices = vertices.ok_or_else(|| missing("$Vertices"))?;
    let triangles = triangles.ok_or_else(|| missing("$Triangles"))?;
    let boundary = boundary.ok_or_else(|| missing("$BoundaryEdges"))?;
    Mesh::new(vertices, triangles, boundary)
}

/// Parses the ASCII Gmsh MSH 2.x subset: `$Nodes` plus `$Elements` of type
/// 1 (two-node line) and 2 (three-node triangle). Point elements (type 15)
/// are skipped. Lines are tagged through their first (physical) tag.
///
/// Clockwise triangles are reversed and nodes referenced by no triangle are
/// dropped, so the result is numbered compactly in node order.
pub fn load_gmsh_v2(source: &str, tags: &GmshTagMap) -> Result<Mesh, MeshError> {
    let mut cursor = Cursor::new(source);
    let mut nodes: Vec<(i64, [f64; 2])> = Vec::new();
    let mut tris: Vec<[i64; 3]> = Vec::new();
    let mut lines: Vec<([i64; 2], i64, usize, usize)> = Vec::new();
    let mut seen_format = false;
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((line, raw)) = cursor.next() {
        let header = raw.trim();
        match header {
            "$MeshFormat" => {
                let (l, r) = cursor.expect("format line")?;
                let f = expect_fields(l, r, 3, 3, "the format line")?;
                if !f[0].1.starts_with('2') {
                    return Err(MeshError::Parse {
                        line: l,
                        column: f[0].0,
                        message: format!("unsupported MSH version {}", f[0].1),
                    });
                }
                if f[1].1 != "0" {
                    return Err(MeshError::Parse {
                        line: l,
                        column: f[1].0,
                        message: "only ASCII MSH files are supported".into(),
                    });
                }
                seen_format = true;
            }
            "$PhysicalNames" => {
                // Names are not needed: the tag map works on numeric ids.
                loop {
                    let (_, r) = cursor.expect("$EndPhysicalNames")?;
                    if r.trim() == "$EndPhysicalNames" {
                        break;
                    }
                }
            }
            "$Nodes" => {
                let n = read_count(&mut cursor, "node")?;
                for _ in 0..n {
                    let (l, r) = cursor.expect("a node line")?;
                    let f = expect_fields(l, r, 4, 4, "a node")?;
                    let id = parse_field(l, f[0].0, f[0].1, "a node id")?;
                    let x = parse_field(l, f[1].0, f[1].1, "a coordinate")?;
                    let y = parse_field(l, f[2].0, f[2].1, "a coordinate")?;
                    nodes.push((id, [x, y]));
                }
                seen_nodes = true;
            }
            "$Elements" => {
                let n = read_count(&mut cursor, "element")?;
                for _ in 0..n {
                    let (l, r) = cursor.expect("an element line")?;
                    let f = fields(r);
                    if f.len() < 3 {
                        return Err(MeshError::Parse {
                            line: l,
                            column: 1,
                            message: "element line too short".into(),
                        });
                    }
                    let kind: u32 = parse_field(l, f[1].0, f[1].1, "an element type")?;
                    let ntags: usize = parse_field(l, f[2].0, f[2].1, "a tag count")?;
                    let nodes_per = match kind {
                        1 => 2,
                        2 => 3,
                        15 => 1,
                        other => {
                            return Err(MeshError::Parse {
                                line: l,
                                column: f[1].0,
                                message: format!("unsupported element type {other}"),
                            })
                        }
                    };
                    if f.len() != 3 + ntags + nodes_per {
                        return Err(MeshError::Parse {
                            line: l,
                            column: 1,
                            message: format!(
                                "expected {} fields for element type {kind}, found {}",
                                3 + ntags + nodes_per,
                                f.len()
                            ),
                        });
                    }
                    let mut ids = [0i64; 3];
                    for k in 0..nodes_per {
                        let (c, s) = f[3 + ntags + k];
                        ids[k] = parse_field(l, c, s, "a node id")?;
                    }
                    match kind {
                        1 => {
                            if ntags == 0 {
                                return Err(MeshError::UnknownTag {
                                    line: l,
                                    column: f[2].0,
                                    tag: "<none>".into(),
                                });
                            }
                            let group = parse_field(l, f[3].0, f[3].1, "a physical tag")?;
                            lines.push(([ids[0], ids[1]], group, l, f[3].0));
                        }
                        2 => tris.push(ids),
                        _ => {}
                    }
                }
                seen_elements = true;
            }
            h if h.starts_with("$End") => {}
            h if h.starts_with('$') => {
                // Unknown section (e.g. $NodeData): skip to its end marker.
                let end = format!("$End{}", &h[1..]);
                loop {
                    let (_, r) = cursor.expect(&end)?;
                    if r.trim() == end {
                        break;
                    }
                }
            }
            other => {
                return Err(MeshError::Parse {
                    line,
                    column: 1,
                    message: format!("unexpected `{other}` outside a section"),
                })
            }
        }
    }
    if !seen_format || !seen_nodes || !seen_elements {
        return Err(MeshError::Parse {
            line: cursor.last_line(),
            column: 1,
            message: "MSH file needs $MeshFormat, $Nodes and $Elements".into(),
        });
    }

    let by_id: HashMap<i64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.0, i)).collect();
    let resolve = |id: i64| -> Result<usize, MeshError> {
        by_id.get(&id).copied().ok_or(MeshError::Parse {
            line: 0,
            column: 0,
            message: format!("element references unknown node {id}"),
        })
    };
    let mut referenced = vec![false; nodes.len()];
    let mut triangles = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut tri = [resolve(t[0])?, resolve(t[1])?, resolve(t[2])?];
        if signed_area(nodes[tri[0]].1, nodes[tri[1]].1, nodes[tri[2]].1) < 0.0 {
            tri.swap(1, 2);
        }
        for &v in &tri {
            referenced[v] = true;
        }
        triangles.push(tri);
    }
    let mut compact = vec![usize::MAX; nodes.len()];
    let mut vertices = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if referenced[i] {
            compact[i] = vertices.len();
            vertices.push(node.1);
        }
    }
    for tri in &mut triangles {
        for v in tri.iter_mut() {
            *v = compact[*v];
        }
    }
    let mut boundary = Vec::with_capacity(lines.len());
    for (ids, group, line, column) in lines {
        let tag = tags.lookup(group).ok_or(MeshError::UnknownTag {
            line,
            column,
            tag: group.to_string(),
        })?;
        let a = compact[resolve(ids[0])?];
        let b = compact[resolve(ids[1])?];
        if a == usize::MAX || b == usize::MAX {
            return Err(MeshError::Parse {
                line,
                column: 1,
                message: "line element uses a node outside every triangle".into(),
            });
        }
        boundary.push(BoundaryEdge { vertices: [a, b], tag });
    }
    Mesh::new(vertices, triangles, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_SQUARE: &str = "\
$Vertices
4
0 0
1 0
1 1
0 1
$Triangles
2
0 1 2
0 2 3
$BoundaryEdges
4
0 1 C
1 2 N
2 3 D
3 0 N
";

    #[test]
    fn loads_minimal_square() {
        let mesh = load_native(UNIT_SQUARE).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_triangles(), 2);
        assert!((mesh.total_area() - 1.0).abs() < 1e-15);
        assert_eq!(mesh.boundary_length(BoundaryTag::Neumann), 2.0);
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let text = UNIT_SQUARE.replace("0 2 3\n", "0 3 2\n");
        let err = load_native(&text).unwrap_err();
        assert!(err.to_string().contains("negative triangle area"), "{err}");
    }

    #[test]
    fn unknown_tag_reports_position() {
        let text = UNIT_SQUARE.replace("2 3 D", "2 3 X");
        match load_native(&text).unwrap_err() {
            MeshError::UnknownTag { line, column, tag } => {
                assert_eq!((line, column, tag.as_str()), (15, 5, "X"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line_and_column() {
        let text = UNIT_SQUARE.replace("1 0\n1 1", "1 zero\n1 1");
        let err = load_native(&text).unwrap_err();
        assert_eq!(
            err,
            MeshError::Parse {
                line: 4,
                column: 3,
                message: "cannot parse `zero` as a coordinate".into()
            }
        );
    }

    #[test]
    fn missing_and_duplicate_boundary_tags() {
        let missing = UNIT_SQUARE.replace("4\n0 1 C", "3\n0 1 C").replace("3 0 N\n", "");
        assert!(matches!(
            load_native(&missing).unwrap_err(),
            MeshError::UntaggedBoundaryEdge { .. }
        ));
        let twice = UNIT_SQUARE.replace("4\n0 1 C", "5\n1 0 N\n0 1 C");
        assert!(matches!(
            load_native(&twice).unwrap_err(),
            MeshError::DuplicateBoundaryEdge { .. }
        ));
        let interior = UNIT_SQUARE.replace("4\n0 1 C", "5\n0 2 C\n0 1 C");
        assert!(matches!(
            load_native(&interior).unwrap_err(),
            MeshError::NotABoundaryEdge { .. }
        ));
    }

    #[test]
    fn hanging_vertex_is_rejected() {
        // Triangle (0,1,2) is split at the midpoint of its hypotenuse on one
        // side only.
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let triangles = vec![[0, 1, 2], [0, 4, 3], [4, 2, 3]];
        let boundary = vec![
            BoundaryEdge {
                vertices: [0, 1],
                tag: BoundaryTag::Contact,
            },
            BoundaryEdge {
                vertices: [1, 2],
                tag: BoundaryTag::Neumann,
            },
            BoundaryEdge {
                vertices: [2, 3],
                tag: BoundaryTag::Dirichlet,
            },
            BoundaryEdge {
                vertices: [3, 0],
                tag: BoundaryTag::Neumann,
            },
            BoundaryEdge {
                vertices: [0, 2],
                tag: BoundaryTag::Neumann,
            },
            BoundaryEdge {
                vertices: [0, 4],
                tag: BoundaryTag::Neumann,
            },
            BoundaryEdge {
                vertices: [4, 2],
                tag: BoundaryTag::Neumann,
            },
        ];
        let err = Mesh::new(vertices, triangles, boundary).unwrap_err();
        assert!(matches!(err, MeshError::HangingVertex { vertex: 4, .. }), "{err:?}");
    }

    #[test]
    fn boundary_orientation_gives_outward_normals() {
        let mesh = load_native(&UNIT_SQUARE.replace("0 1 C", "1 0 C")).unwrap();
        let centroid = [0.5, 0.5];
        for e in mesh.boundary_edges() {
            let n = mesh.outward_normal(e);
            let p = mesh.vertices()[e.vertices[0]];
            let out = (p[0] - centroid[0]) * n[0] + (p[1] - centroid[1]) * n[1];
            assert!(out > 0.0);
        }
        let bottom = mesh.boundary_edges()[0];
        assert_eq!(mesh.outward_normal(&bottom), [0.0, -1.0]);
    }

    #[test]
    fn partition_strict_and_verification() {
        let mesh = Mesh::structured_rectangle(1.0, 1.0, 1, 1, SideTags::contact_bottom()).unwrap();
        let report = validate_partition(&mesh, PartitionMode::Strict).unwrap();
        assert_eq!(
            (report.contact_length, report.neumann_length, report.dirichlet_length),
            (1.0, 2.0, 1.0)
        );

        let all_d = SideTags {
            bottom: BoundaryTag::Dirichlet,
            right: BoundaryTag::Dirichlet,
            top: BoundaryTag::Dirichlet,
            left: BoundaryTag::Dirichlet,
        };
        let mesh = Mesh::structured_rectangle(1.0, 1.0, 1, 1, all_d).unwrap();
        let err = validate_partition(&mesh, PartitionMode::Strict).unwrap_err();
        assert!(err.to_string().contains("|Γ_C| = 0"));
        assert_eq!(err.dirichlet_length, 4.0);
        let report = validate_partition(&mesh, PartitionMode::Verification).unwrap();
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn refinement_counts() {
        let mesh = Mesh::structured_rectangle(1.0, 1.0, 1, 1, SideTags::contact_bottom()).unwrap();
        let once = mesh.refine_uniform();
        assert_eq!((once.n_triangles(), once.n_vertices()), (8, 9));
        let twice = once.refine_uniform();
        assert_eq!(twice.n_triangles(), 32);
        let contact: Vec<f64> = once
            .boundary_edges()
            .iter()
            .filter(|e| e.tag == BoundaryTag::Contact)
            .map(|e| once.edge_length(e))
            .collect();
        assert_eq!(contact, vec![0.5, 0.5]);
    }

    #[test]
    fn native_round_trip() {
        let mesh = Mesh::structured_rectangle(2.0, 1.0, 3, 2, SideTags::contact_bottom())
            .unwrap()
            .refine_uniform();
        let again = load_native(&mesh.to_native_string()).unwrap();
        assert_eq!(mesh, again);
    }

    #[test]
    fn gmsh_matches_native_twin() {
        let msh = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
3
1 1 \"clamped\"
1 2 \"free\"
1 3 \"contact\"
$EndPhysicalNames
$Nodes
5
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
9 5 5 0
$EndNodes
$Elements
7
1 15 2 0 1 1
2 1 2 3 1 1 2
3 1 2 2 2 2 3
4 1 2 1 3 3 4
5 1 2 2 4 4 1
6 2 2 0 1 1 2 3
7 2 2 0 1 1 4 3
$EndElements
";
        let from_gmsh = load_gmsh_v2(msh, &GmshTagMap::default()).unwrap();
        let native = load_native(UNIT_SQUARE).unwrap();
        assert_eq!(from_gmsh.vertices(), native.vertices());
        assert_eq!(from_gmsh.n_triangles(), native.n_triangles());
        for (t, _) in from_gmsh.triangles().iter().enumerate() {
            assert!((from_gmsh.triangle_area(t) - native.triangle_area(t)).abs() < 1e-15);
        }
        for tag in BoundaryTag::ALL {
            assert_eq!(from_gmsh.boundary_length(tag), native.boundary_length(tag));
        }
        let mut a: Vec<_> = from_gmsh.boundary_edges().to_vec();
        let mut b: Vec<_> = native.boundary_edges().to_vec();
        a.sort_by_key(|e| e.vertices);
        b.sort_by_key(|e| e.vertices);
        assert_eq!(a, b);

        let unmapped = GmshTagMap {
            dirichlet: vec![1],
            neumann: vec![2],
            contact: vec![],
        };
        assert!(matches!(
            load_gmsh_v2(msh, &unmapped).unwrap_err(),
            MeshError::UnknownTag { line: 21, .. }
        ));
    }
}
