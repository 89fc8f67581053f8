//! P1 finite-element assembly.
//!
//! Every area integral uses the 3-point midpoint-of-edges rule (exact to
//! degree 2) and every boundary integral the 3-point Gauss rule (exact to
//! degree 5), so each term of the time-step system is integrated exactly
//! for P1 data.

use crate::error::{Error, Result};
use crate::linalg::{solve, SolverConfig, SparseOperator};
use crate::mesh::{BoundaryTag, Mesh};
use std::sync::Arc;

/// Nodal coefficients of a P1 function on a mesh.
#[derive(Clone, Debug)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        Field {
            mesh: mesh.clone(),
            values: vec![0.0; mesh.n_nodes()],
        }
    }

    pub fn constant(mesh: &Arc<Mesh>, c: f64) -> Self {
        Field {
            mesh: mesh.clone(),
            values: vec![c; mesh.n_nodes()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = mesh.nodes.iter().map(|&(x, y)| f(x, y)).collect();
        Field {
            mesh: mesh.clone(),
            values,
        }
    }

    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_nodes(),
                found: values.len(),
            });
        }
        Ok(Field {
            mesh: mesh.clone(),
            values,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a point located inside the domain.
    pub fn eval(&self, p: (f64, f64)) -> Result<f64> {
        let (t, bary) = self.mesh.locate_point(p)?;
        Ok(self.eval_bary(t, bary))
    }

    /// Value from a known triangle and barycentric coordinates; convex
    /// combination of the three nodal values.
    pub fn eval_bary(&self, t: usize, bary: [f64; 3]) -> f64 {
        let [a, b, c] = self.mesh.triangles[t];
        bary[0] * self.values[a] + bary[1] * self.values[b] + bary[2] * self.values[c]
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }
}

/// Physical parameters of the stabilization problem.
#[derive(Clone, Copy, Debug)]
pub struct PhysicsParams {
    /// Viscosity ν > 0.
    pub nu: f64,
    /// Target constant steady state w_d ≥ 0.
    pub w_d: f64,
    /// Control gain c₀ > 0.
    pub c0: f64,
}

impl PhysicsParams {
    pub fn new(nu: f64, w_d: f64, c0: f64) -> Result<Self> {
        let p = PhysicsParams { nu, w_d, c0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidArgument(format!("c0 must be positive, got {}", self.c0)));
        }
        if !(self.w_d >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "w_d must be nonnegative, got {}",
                self.w_d
            )));
        }
        Ok(())
    }
}

/// Shift of the auxiliary projection defining the initial data.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionConfig {
    /// λ ≥ 1.
    pub lambda: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig { lambda: 1.0 }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "projection shift lambda must be >= 1, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Midpoint-of-edges quadrature on a triangle in barycentric coordinates;
/// weights sum to 1 (scale by the triangle area). Exact to degree 2, which
/// covers every polynomial integrand assembled here.
pub const TRI_QUAD: &[([f64; 3], f64)] = &[
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// 3-point Gauss rule on [0, 1]: positions and weights.
pub fn edge_quad() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6_f64).sqrt();
    [
        (0.5 - d, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + d, 5.0 / 18.0),
    ]
}

/// Constant gradients of the three P1 basis functions on triangle `t`.
pub fn p1_gradients(mesh: &Mesh, t: usize) -> [(f64, f64); 3] {
    let [(xa, ya), (xb, yb), (xc, yc)] = mesh.triangle_coords(t);
    let two_a = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya);
    [
        ((yb - yc) / two_a, (xc - xb) / two_a),
        ((yc - ya) / two_a, (xa - xc) / two_a),
        ((ya - yb) / two_a, (xb - xa) / two_a),
    ]
}

/// L² pairing matrix: (i, j) = ∫ φ_i φ_j. Symmetric positive definite.
pub fn assemble_mass(mesh: &Mesh) -> SparseOperator {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for (li, &i) in tri.iter().enumerate() {
            for (lj, &j) in tri.iter().enumerate() {
                let v = if li == lj { area / 6.0 } else { area / 12.0 };
                trip.push((i, j, v));
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Gradient pairing matrix: (i, j) = ∫ ∇φ_i · ∇φ_j. Symmetric positive
/// semidefinite; constants span the kernel.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseOperator {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let grads = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        for (li, &i) in tri.iter().enumerate() {
            for (lj, &j) in tri.iter().enumerate() {
                let g = grads[li].0 * grads[lj].0 + grads[li].1 * grads[lj].1;
                trip.push((i, j, area * g));
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Constant-coefficient drift matrix: (i, j) = w_d ∫ (∇φ_j · 1) φ_i.
pub fn assemble_drift(mesh: &Mesh, w_d: f64) -> SparseOperator {
    assemble_drift_weighted(mesh, |_, _| w_d)
}

/// Drift matrix with a spatially varying coefficient evaluated at the area
/// quadrature points: (i, j) = ∫ a(x) (∇φ_j · 1) φ_i.
pub fn assemble_drift_weighted(mesh: &Mesh, a: impl Fn(f64, f64) -> f64) -> SparseOperator {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let grads = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let coords = mesh.triangle_coords(t);
        for &(bary, w) in TRI_QUAD {
            let x = bary[0] * coords[0].0 + bary[1] * coords[1].0 + bary[2] * coords[2].0;
            let y = bary[0] * coords[0].1 + bary[1] * coords[1].1 + bary[2] * coords[2].1;
            let aq = a(x, y) * w * area;
            for (li, &i) in tri.iter().enumerate() {
                for (lj, &j) in tri.iter().enumerate() {
                    let dj = grads[lj].0 + grads[lj].1;
                    trip.push((i, j, aq * bary[li] * dj));
                }
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Weighted mass matrix: (i, j) = ∫ a(x) φ_i φ_j with `a` at quadrature
/// points (exact when `a` is constant or linear).
pub fn assemble_weighted_mass(mesh: &Mesh, a: impl Fn(f64, f64) -> f64) -> SparseOperator {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        let coords = mesh.triangle_coords(t);
        for &(bary, w) in TRI_QUAD {
            let x = bary[0] * coords[0].0 + bary[1] * coords[1].0 + bary[2] * coords[2].0;
            let y = bary[0] * coords[0].1 + bary[1] * coords[1].1 + bary[2] * coords[2].1;
            let aq = a(x, y) * w * area;
            for (li, &i) in tri.iter().enumerate() {
                for (lj, &j) in tri.iter().enumerate() {
                    trip.push((i, j, aq * bary[li] * bary[lj]));
                }
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Boundary mass matrix over edges carrying one of `tags`:
/// (i, j) = ∫_Γ φ_i φ_j. Per edge of length L the local block is
/// [[L/3, L/6], [L/6, L/3]].
pub fn assemble_boundary_mass(mesh: &Mesh, tags: &[BoundaryTag]) -> SparseOperator {
    let mut trip = Vec::new();
    for edge in &mesh.boundary_edges {
        if !tags.contains(&edge.tag) {
            continue;
        }
        let len = edge.length(mesh);
        trip.push((edge.a, edge.a, len / 3.0));
        trip.push((edge.b, edge.b, len / 3.0));
        trip.push((edge.a, edge.b, len / 6.0));
        trip.push((edge.b, edge.a, len / 6.0));
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Boundary matrix weighted by the square of a P1 field:
/// (i, j) = ∫_Γ w² φ_i φ_j, integrated with the 3-point Gauss rule (the
/// integrand has degree 4, so this is exact).
pub fn assemble_boundary_cubic(mesh: &Mesh, w_prev: &Field, tags: &[BoundaryTag]) -> SparseOperator {
    let mut trip = Vec::new();
    let rule = edge_quad();
    for edge in &mesh.boundary_edges {
        if !tags.contains(&edge.tag) {
            continue;
        }
        let len = edge.length(mesh);
        let wa = w_prev.values()[edge.a];
        let wb = w_prev.values()[edge.b];
        let mut local = [[0.0; 2]; 2];
        for (s, q) in rule {
            let phi = [1.0 - s, s];
            let w = wa * phi[0] + wb * phi[1];
            let coeff = q * len * w * w;
            for li in 0..2 {
                for lj in 0..2 {
                    local[li][lj] += coeff * phi[li] * phi[lj];
                }
            }
        }
        let nodes = [edge.a, edge.b];
        for li in 0..2 {
            for lj in 0..2 {
                trip.push((nodes[li], nodes[lj], local[li][lj]));
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_nodes(), &trip)
}

/// Load vector: component i = ∫ f φ_i with the area rule.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        let coords = mesh.triangle_coords(t);
        for &(bary, w) in TRI_QUAD {
            let x = bary[0] * coords[0].0 + bary[1] * coords[1].0 + bary[2] * coords[2].0;
            let y = bary[0] * coords[0].1 + bary[1] * coords[1].1 + bary[2] * coords[2].1;
            let fq = f(x, y) * w * area;
            for (li, &i) in tri.iter().enumerate() {
                out[i] += fq * bary[li];
            }
        }
    }
    out
}

/// Gradient load: component i = ∫ g · ∇φ_i with the area rule.
pub fn assemble_gradient_load(mesh: &Mesh, g: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let grads = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let coords = mesh.triangle_coords(t);
        for &(bary, w) in TRI_QUAD {
            let x = bary[0] * coords[0].0 + bary[1] * coords[1].0 + bary[2] * coords[2].0;
            let y = bary[0] * coords[0].1 + bary[1] * coords[1].1 + bary[2] * coords[2].1;
            let (gx, gy) = g(x, y);
            for (li, &i) in tri.iter().enumerate() {
                out[i] += w * area * (gx * grads[li].0 + gy * grads[li].1);
            }
        }
    }
    out
}

/// Boundary load over edges carrying one of `tags`: component
/// i = ∫_Γ g φ_i, where `g` sees the point and the edge's outward normal.
pub fn assemble_boundary_load(
    mesh: &Mesh,
    g: impl Fn(f64, f64, (f64, f64)) -> f64,
    tags: &[BoundaryTag],
) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    let rule = edge_quad();
    for edge in &mesh.boundary_edges {
        if !tags.contains(&edge.tag) {
            continue;
        }
        let len = edge.length(mesh);
        let (xa, ya) = mesh.nodes[edge.a];
        let (xb, yb) = mesh.nodes[edge.b];
        for (s, q) in rule {
            let x = xa + s * (xb - xa);
            let y = ya + s * (yb - ya);
            let gq = g(x, y, edge.normal) * q * len;
            out[edge.a] += gq * (1.0 - s);
            out[edge.b] += gq * s;
        }
    }
    out
}

/// H¹ projection of initial data: the unique p in V_h with
/// (∇p, ∇χ) + λ (p, χ) = (∇u₀, ∇χ) + λ (u₀, χ) for all χ.
pub fn h1_project_initial(
    mesh: &Arc<Mesh>,
    u0: impl Fn(f64, f64) -> f64,
    grad_u0: impl Fn(f64, f64) -> (f64, f64),
    cfg: &ProjectionConfig,
) -> Result<Field> {
    cfg.validate()?;
    let stiffness = assemble_stiffness(mesh);
    let mass = assemble_mass(mesh);
    let a = stiffness.add_scaled(&mass, cfg.lambda)?;
    let mut rhs = assemble_gradient_load(mesh, &grad_u0);
    let lin = assemble_load(mesh, &u0);
    for (r, l) in rhs.iter_mut().zip(&lin) {
        *r += cfg.lambda * l;
    }
    let solver = SolverConfig::auto_for_dim(mesh.n_nodes());
    let values = solve(&a, &rhs, &solver)?;
    Field::from_values(mesh, values)
}
