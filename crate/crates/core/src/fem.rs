//! P1 discretization: degrees of freedom, assembly, discrete norms and the
//! trace constant of the contact boundary.

use thiserror::Error;

use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::{SparseError, SparseSymMatrix, TripletBuilder};

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("nonpositive shear modulus {value} on triangle {triangle}")]
    NonPositiveMu { triangle: usize, value: f64 },
    #[error("{what}: expected {expected} values, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("norm {kind:?} does not apply to a {field} field")]
    NormMismatch { kind: NormKind, field: &'static str },
    #[error("trace-constant power iteration did not converge in {iterations} iterations (last estimate {estimate})")]
    TraceNotConverged { iterations: usize, estimate: f64 },
    #[error(transparent)]
    Solver(#[from] SparseError),
}

/// Free/constrained numbering of the mesh vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    free_index: Vec<Option<usize>>,
    free_vertices: Vec<usize>,
    contact_vertices: Vec<usize>,
    contact_slot: Vec<Option<usize>>,
    contact_edges: Vec<[usize; 2]>,
    neumann_edges: Vec<[usize; 2]>,
}

pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    let mut constrained = vec![false; mesh.n_vertices()];
    for e in mesh.boundary_edges() {
        if e.tag == BoundaryTag::Dirichlet {
            constrained[e.vertices[0]] = true;
            constrained[e.vertices[1]] = true;
        }
    }
    DofMap::with_constraints(mesh, &constrained)
}

impl DofMap {
    /// Every vertex free, whatever the tags say. Only meaningful for
    /// assembling loads or Gram matrices, never for a solve.
    pub fn unconstrained(mesh: &Mesh) -> Self {
        Self::with_constraints(mesh, &vec![false; mesh.n_vertices()])
    }

    fn with_constraints(mesh: &Mesh, constrained: &[bool]) -> Self {
        let n = mesh.n_vertices();
        let mut free_index = vec![None; n];
        let mut free_vertices = Vec::new();
        for v in 0..n {
            if !constrained[v] {
                free_index[v] = Some(free_vertices.len());
                free_vertices.push(v);
            }
        }
        let mut contact_edges = Vec::new();
        let mut neumann_edges = Vec::new();
        let mut on_contact = vec![false; n];
        for e in mesh.boundary_edges() {
            match e.tag {
                BoundaryTag::Contact => {
                    contact_edges.push(e.vertices);
                    on_contact[e.vertices[0]] = true;
                    on_contact[e.vertices[1]] = true;
                }
                BoundaryTag::Neumann => neumann_edges.push(e.vertices),
                BoundaryTag::Dirichlet => {}
            }
        }
        let contact_vertices: Vec<usize> = (0..n).filter(|&v| on_contact[v]).collect();
        let mut contact_slot = vec![None; n];
        for (s, &v) in contact_vertices.iter().enumerate() {
            contact_slot[v] = Some(s);
        }
        Self {
            free_index,
            free_vertices,
            contact_vertices,
            contact_slot,
            contact_edges,
            neumann_edges,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.free_index.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_vertices.len()
    }

    pub fn n_constrained(&self) -> usize {
        self.n_vertices() - self.n_free()
    }

    pub fn free_index(&self, vertex: usize) -> Option<usize> {
        self.free_index[vertex]
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free_vertices
    }

    pub fn is_constrained(&self, vertex: usize) -> bool {
        self.free_index[vertex].is_none()
    }

    /// Sorted, duplicate-free contact vertices, corners included.
    pub fn contact_vertices(&self) -> &[usize] {
        &self.contact_vertices
    }

    pub fn n_contact(&self) -> usize {
        self.contact_vertices.len()
    }

    pub fn contact_slot(&self, vertex: usize) -> Option<usize> {
        self.contact_slot[vertex]
    }

    pub fn contact_edges(&self) -> &[[usize; 2]] {
        &self.contact_edges
    }

    pub fn neumann_edges(&self) -> &[[usize; 2]] {
        &self.neumann_edges
    }

    /// `(contact slot, free dof)` for contact vertices that are not clamped.
    pub fn contact_free_dofs(&self) -> Vec<(usize, usize)> {
        self.contact_vertices
            .iter()
            .enumerate()
            .filter_map(|(s, &v)| self.free_index[v].map(|d| (s, d)))
            .collect()
    }
}

/// Nodal values on Ω at one time node; clamped entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub time_index: usize,
}

impl ScalarField {
    pub fn zeros(n_vertices: usize, time_index: usize) -> Self {
        Self {
            values: vec![0.0; n_vertices],
            time_index,
        }
    }

    pub fn from_free(dofs: &DofMap, free: &[f64], time_index: usize) -> Self {
        assert_eq!(free.len(), dofs.n_free());
        let mut values = vec![0.0; dofs.n_vertices()];
        for (d, &v) in dofs.free_vertices().iter().enumerate() {
            values[v] = free[d];
        }
        Self { values, time_index }
    }

    pub fn free_values(&self, dofs: &DofMap) -> Vec<f64> {
        dofs.free_vertices().iter().map(|&v| self.values[v]).collect()
    }

    /// Whether the clamped entries are exactly zero.
    pub fn is_admissible(&self, dofs: &DofMap) -> bool {
        self.values.len() == dofs.n_vertices()
            && (0..dofs.n_vertices()).all(|v| !dofs.is_constrained(v) || self.values[v] == 0.0)
    }
}

/// Values at the contact vertices, in contact-list order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    pub values: Vec<f64>,
    pub time_index: usize,
}

impl BoundaryField {
    pub fn constant(n: usize, value: f64, time_index: usize) -> Self {
        Self {
            values: vec![value; n],
            time_index,
        }
    }

    pub fn linf(&self) -> f64 {
        linf(&self.values)
    }
}

pub type LoadVector = Vec<f64>;

fn corners(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    let [a, b, c] = mesh.triangles()[t];
    let v = mesh.vertices();
    [v[a], v[b], v[c]]
}

/// Gradients of the three barycentric coordinates and the area.
fn barycentric_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)];
    }
    (g, area)
}

/// `∫_T μ ∇φ_i·∇φ_j` for a counterclockwise triangle.
pub fn element_stiffness(p: [[f64; 2]; 3], mu: f64) -> [[f64; 3]; 3] {
    let (g, area) = barycentric_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = mu * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

/// `∫_T φ_i φ_j = |T|/12 · (1 + δ_ij)`.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

fn assemble(mesh: &Mesh, dofs: &DofMap, mut local: impl FnMut(usize) -> [[f64; 3]; 3]) -> SparseSymMatrix {
    let mut b = TripletBuilder::new(dofs.n_free());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local(t);
        for i in 0..3 {
            let Some(di) = dofs.free_index(tri[i]) else { continue };
            for j in 0..3 {
                if let Some(dj) = dofs.free_index(tri[j]) {
                    b.add(di, dj, k[i][j]);
                }
            }
        }
    }
    b.build()
}

/// Stiffness matrix of `a(u, v) = ∫ μ ∇u·∇v` over the free dofs.
pub fn assemble_stiffness(mesh: &Mesh, mu: &[f64], dofs: &DofMap) -> Result<SparseSymMatrix, FemError> {
    if mu.len() != mesh.n_triangles() {
        return Err(FemError::Length {
            what: "shear modulus per triangle",
            expected: mesh.n_triangles(),
            got: mu.len(),
        });
    }
    if let Some(t) = mu.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(FemError::NonPositiveMu {
            triangle: t,
            value: mu[t],
        });
    }
    Ok(assemble(mesh, dofs, |t| element_stiffness(corners(mesh, t), mu[t])))
}

pub fn assemble_mass(mesh: &Mesh, dofs: &DofMap) -> SparseSymMatrix {
    assemble(mesh, dofs, |t| element_mass(mesh.triangle_area(t)))
}

/// `∫ f0 φ_i + ∫_{Γ_N} fN φ_i` with `f0` interpolated (exact P1 mass) and the
/// Neumann term by the edge trapezoid rule. Both inputs are per vertex;
/// `f_n` is only read on Neumann edges.
pub fn assemble_load(mesh: &Mesh, f0: &[f64], f_n: &[f64], dofs: &DofMap) -> Result<LoadVector, FemError> {
    for (what, v) in [("f0 per vertex", f0), ("fN per vertex", f_n)] {
        if v.len() != mesh.n_vertices() {
            return Err(FemError::Length {
                what,
                expected: mesh.n_vertices(),
                got: v.len(),
            });
        }
    }
    let mut load = vec![0.0; dofs.n_free()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let m = element_mass(mesh.triangle_area(t));
        for i in 0..3 {
            if let Some(d) = dofs.free_index(tri[i]) {
                load[d] += (0..3).map(|j| m[i][j] * f0[tri[j]]).sum::<f64>();
            }
        }
    }
    let v = mesh.vertices();
    for &[a, b] in dofs.neumann_edges() {
        let half = 0.5 * (v[b][0] - v[a][0]).hypot(v[b][1] - v[a][1]);
        for x in [a, b] {
            if let Some(d) = dofs.free_index(x) {
                load[d] += half * f_n[x];
            }
        }
    }
    Ok(load)
}

/// Lumped contact weights: half the length of the contact edges at each
/// contact vertex, in contact-list order.
pub fn boundary_weights(mesh: &Mesh, dofs: &DofMap) -> Vec<f64> {
    let mut w = vec![0.0; dofs.n_contact()];
    let v = mesh.vertices();
    for &[a, b] in dofs.contact_edges() {
        let half = 0.5 * (v[b][0] - v[a][0]).hypot(v[b][1] - v[a][1]);
        w[dofs.contact_slot(a).unwrap()] += half;
        w[dofs.contact_slot(b).unwrap()] += half;
    }
    w
}

pub fn trace_restrict(field: &ScalarField, dofs: &DofMap) -> BoundaryField {
    BoundaryField {
        values: dofs.contact_vertices().iter().map(|&v| field.values[v]).collect(),
        time_index: field.time_index,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2Omega,
    H1Omega,
    LinfOmega,
    L2GammaC,
    LinfGammaC,
}

#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Omega(&'a ScalarField),
    GammaC(&'a BoundaryField),
}

pub fn norm(mesh: &Mesh, dofs: &DofMap, field: FieldRef<'_>, kind: NormKind) -> Result<f64, FemError> {
    match (field, kind) {
        (FieldRef::Omega(f), NormKind::L2Omega) => Ok(l2_omega(mesh, &f.values)),
        (FieldRef::Omega(f), NormKind::H1Omega) => Ok(h1_norm(mesh, &f.values)),
        (FieldRef::Omega(f), NormKind::LinfOmega) => Ok(linf(&f.values)),
        (FieldRef::GammaC(b), NormKind::L2GammaC) => {
            let w = boundary_weights(mesh, dofs);
            if w.len() != b.values.len() {
                return Err(FemError::Length {
                    what: "boundary field",
                    expected: w.len(),
                    got: b.values.len(),
                });
            }
            Ok(l2_gamma_c(&w, &b.values))
        }
        (FieldRef::GammaC(b), NormKind::LinfGammaC) => Ok(linf(&b.values)),
        (FieldRef::Omega(_), kind) => Err(FemError::NormMismatch { kind, field: "domain" }),
        (FieldRef::GammaC(_), kind) => Err(FemError::NormMismatch {
            kind,
            field: "boundary",
        }),
    }
}

pub fn linf(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Exact `‖v‖_{L²(Ω)}` of the P1 interpolant of nodal values.
pub fn l2_omega(mesh: &Mesh, values: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        let (x, y, z) = (values[a], values[b], values[c]);
        s += mesh.triangle_area(t) / 12.0 * (x * x + y * y + z * z + (x + y + z).powi(2));
    }
    s.sqrt()
}

/// `‖∇v‖_{L²(Ω)}`.
pub fn h1_seminorm(mesh: &Mesh, values: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = barycentric_gradients(corners(mesh, t));
        let mut grad = [0.0; 2];
        for i in 0..3 {
            grad[0] += values[tri[i]] * g[i][0];
            grad[1] += values[tri[i]] * g[i][1];
        }
        s += area * (grad[0] * grad[0] + grad[1] * grad[1]);
    }
    s.sqrt()
}

/// `‖v‖_{L²} + ‖∇v‖_{L²}` (sum convention used throughout the diagnostics).
pub fn h1_norm(mesh: &Mesh, values: &[f64]) -> f64 {
    l2_omega(mesh, values) + h1_seminorm(mesh, values)
}

/// Lumped `‖b‖_{L²(Γ_C)}` with the weights of [`boundary_weights`].
pub fn l2_gamma_c(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}

pub fn interpolate(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(|p| f(p[0], p[1])).collect()
}

// Degree-5 seven-point rule on the reference triangle, barycentric form.
const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `(‖u_h − u‖_{L²}, ‖∇(u_h − u)‖_{L²})` against an analytic solution, with a
/// degree-5 rule per triangle.
pub fn error_against(
    mesh: &Mesh,
    values: &[f64],
    exact: impl Fn(f64, f64) -> f64,
    exact_grad: impl Fn(f64, f64) -> [f64; 2],
) -> (f64, f64) {
    let (mut l2, mut h1) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = corners(mesh, t);
        let (g, area) = barycentric_gradients(p);
        let mut grad_h = [0.0; 2];
        for i in 0..3 {
            grad_h[0] += values[tri[i]] * g[i][0];
            grad_h[1] += values[tri[i]] * g[i][1];
        }
        for (bary, w) in DUNAVANT5 {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let uh = bary[0] * values[tri[0]] + bary[1] * values[tri[1]] + bary[2] * values[tri[2]];
            let ge = exact_grad(x, y);
            l2 += w * area * (uh - exact(x, y)).powi(2);
            h1 += w * area * ((grad_h[0] - ge[0]).powi(2) + (grad_h[1] - ge[1]).powi(2));
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// Discrete trace constant of `Γ_C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceConstant {
    /// `sqrt(θ_max)` for `B v = θ (M + K) v` on the free dofs: sharp for the
    /// Hilbert H¹ norm, hence valid for the sum-convention norm.
    pub c0_hat: f64,
    /// `c0_hat/√2`: no smaller constant can work for the sum-convention norm.
    pub sum_norm_lower: f64,
    pub iterations: usize,
}

/// Power iteration on `(M + K)⁻¹ B` with an Aitken error estimate as the
/// stopping test. Returns zero when no contact vertex is free.
pub fn estimate_trace_constant(mesh: &Mesh, dofs: &DofMap) -> Result<TraceConstant, FemError> {
    estimate_trace_constant_with(mesh, dofs, 1e-8, 100_000)
}

pub fn estimate_trace_constant_with(
    mesh: &Mesh,
    dofs: &DofMap,
    rtol: f64,
    max_iter: usize,
) -> Result<TraceConstant, FemError> {
    let weights = boundary_weights(mesh, dofs);
    let mut b = vec![0.0; dofs.n_free()];
    for (slot, dof) in dofs.contact_free_dofs() {
        b[dof] = weights[slot];
    }
    if b.iter().all(|&x| x == 0.0) {
        return Ok(TraceConstant {
            c0_hat: 0.0,
            sum_norm_lower: 0.0,
            iterations: 0,
        });
    }
    let mu_one = vec![1.0; mesh.n_triangles()];
    let k = assemble_stiffness(mesh, &mu_one, dofs)?;
    let m = assemble_mass(mesh, dofs);
    let n = dofs.n_free();
    let mut gb = TripletBuilder::new(n);
    for gram in [&k, &m] {
        for i in 0..n {
            let (cols, vals) = gram.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                gb.add(i, j, v);
            }
        }
    }
    let gram = gb.build();
    let chol = gram.cholesky()?;

    let rayleigh = |x: &[f64]| {
        let num: f64 = x.iter().zip(&b).map(|(x, b)| b * x * x).sum();
        num / gram.bilinear(x, x)
    };
    let mut x: Vec<f64> = b.iter().map(|&w| if w > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut theta = rayleigh(&x);
    let mut last_change = f64::INFINITY;
    for it in 1..=max_iter {
        let bx: Vec<f64> = x.iter().zip(&b).map(|(x, b)| x * b).collect();
        x = chol.solve(&bx);
        let scale = linf(&x);
        x.iter_mut().for_each(|v| *v /= scale);
        let next = rayleigh(&x);
        let change = (next - theta).abs();
        theta = next;
        // Rayleigh quotients increase monotonically; extrapolate the tail.
        let rho = if last_change.is_finite() && last_change > 0.0 {
            (change / last_change).min(0.999)
        } else {
            0.999
        };
        let err = change * rho / (1.0 - rho);
        if change <= rtol * theta && err <= rtol * theta {
            return Ok(TraceConstant {
                c0_hat: theta.sqrt(),
                sum_norm_lower: (0.5 * theta).sqrt(),
                iterations: it,
            });
        }
        last_change = change;
    }
    Err(FemError::TraceNotConverged {
        iterations: max_iter,
        estimate: theta.sqrt(),
    })
}
