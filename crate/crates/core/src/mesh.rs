//! Conforming triangulations of the unit square and convex polygons.
//!
//! The mesh is immutable after construction: nodes, CCW triangles, and
//! tagged boundary edges with outward unit normals. Structured meshes
//! (`build_structured_mesh`) split every grid cell along the diagonal from
//! the lower-left to the upper-right corner, which gives O(1) point
//! location by cell-index arithmetic. Meshes assembled from raw parts
//! (e.g. imported from text) fall back to a straight-walk locator.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::Arc;

/// Tag carried by every boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Neumann edge where the feedback control acts.
    NeumannControl,
    /// Homogeneous Neumann edge (zero flux, no control).
    NeumannZero,
    /// Homogeneous Dirichlet edge; its nodes are pinned to zero.
    DirichletZero,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::NeumannControl => "NeumannControl",
            BoundaryTag::NeumannZero => "NeumannZero",
            BoundaryTag::DirichletZero => "DirichletZero",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "NeumannControl" => Ok(BoundaryTag::NeumannControl),
            "NeumannZero" => Ok(BoundaryTag::NeumannZero),
            "DirichletZero" => Ok(BoundaryTag::DirichletZero),
            other => Err(Error::Parse(format!("unknown boundary tag '{other}'"))),
        }
    }
}

/// One of the four sides of an axis-aligned rectangular domain.
///
/// A corner edge belongs to the side that contains its interior; on the
/// structured mesh every boundary edge lies entirely within one side, so
/// classifying by the edge midpoint is unambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// x₁ = 0
    Left,
    /// x₁ = 1
    Right,
    /// x₂ = 0
    Bottom,
    /// x₂ = 1
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Oriented boundary edge. `(a, b)` follows the CCW traversal of the
/// domain boundary; `normal` is the outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
    pub normal: (f64, f64),
}

impl BoundaryEdge {
    pub fn length(&self, mesh: &Mesh) -> f64 {
        let (xa, ya) = mesh.nodes[self.a];
        let (xb, yb) = mesh.nodes[self.b];
        ((xb - xa).powi(2) + (yb - ya).powi(2)).sqrt()
    }
}

/// Triangulation of a convex polygon with tagged boundary.
#[derive(Clone, Debug)]
pub struct Mesh {
    /// Node coordinates.
    pub nodes: Vec<(f64, f64)>,
    /// Triangles as node-index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Tagged boundary edges with outward unit normals.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Subdivision count for structured meshes; `None` for imported meshes
    /// that do not match the structured layout.
    subdivision: Option<usize>,
    /// Maximum triangle diameter.
    h: f64,
    /// Axis-aligned bounding box (min, max); equals the domain for
    /// rectangular meshes and is what characteristics clamp against.
    bbox: ((f64, f64), (f64, f64)),
    /// Neighbor triangle across each local edge (opposite local vertex i),
    /// used by the walk locator.
    neighbors: Vec<[Option<usize>; 3]>,
}

/// Build the structured triangulation of the unit square with `n`
/// subdivisions per side: (n+1)² nodes, 2n² triangles, 4n boundary edges
/// tagged [`BoundaryTag::NeumannControl`].
pub fn build_structured_mesh(n: usize) -> Result<Arc<Mesh>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "subdivision count must be at least 1".into(),
        ));
    }
    let np = n + 1;
    let idx = |i: usize, j: usize| j * np + i;
    let mut nodes = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push((i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (ll, lr, ur, ul) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    // Boundary edges in CCW order around the square.
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push((idx(i, 0), idx(i + 1, 0), (0.0, -1.0)));
    }
    for j in 0..n {
        boundary_edges.push((idx(n, j), idx(n, j + 1), (1.0, 0.0)));
    }
    for i in (0..n).rev() {
        boundary_edges.push((idx(i + 1, n), idx(i, n), (0.0, 1.0)));
    }
    for j in (0..n).rev() {
        boundary_edges.push((idx(0, j + 1), idx(0, j), (-1.0, 0.0)));
    }
    let boundary_edges = boundary_edges
        .into_iter()
        .map(|(a, b, normal)| BoundaryEdge {
            a,
            b,
            tag: BoundaryTag::NeumannControl,
            normal,
        })
        .collect();

    let neighbors = build_neighbors(&triangles, nodes.len());
    let h = max_diameter(&nodes, &triangles);
    let mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        subdivision: Some(n),
        h,
        bbox: ((0.0, 0.0), (1.0, 1.0)),
        neighbors,
    };
    debug_assert!(mesh.validate().is_ok());
    Ok(Arc::new(mesh))
}

/// Retag the boundary of a rectangular mesh side by side. Every side must
/// appear exactly once in `assignments`.
pub fn tag_boundary(mesh: &Mesh, assignments: &[(Side, BoundaryTag)]) -> Result<Arc<Mesh>> {
    let mut rule: HashMap<Side, BoundaryTag> = HashMap::new();
    for &(side, tag) in assignments {
        if rule.insert(side, tag).is_some() {
            return Err(Error::InvalidArgument(format!(
                "side {side:?} assigned more than once"
            )));
        }
    }
    for side in Side::ALL {
        if !rule.contains_key(&side) {
            return Err(Error::InvalidArgument(format!(
                "tag rule is missing side {side:?}"
            )));
        }
    }
    let ((x0, y0), (x1, y1)) = mesh.bbox;
    let tol = 1e-12 * mesh.h.max(1.0);
    let mut out = mesh.clone();
    for edge in &mut out.boundary_edges {
        let (xa, ya) = mesh.nodes[edge.a];
        let (xb, yb) = mesh.nodes[edge.b];
        let (mx, my) = (0.5 * (xa + xb), 0.5 * (ya + yb));
        // Classify by the midpoint: edge interiors never touch two sides.
        let side = if (mx - x0).abs() < tol {
            Side::Left
        } else if (mx - x1).abs() < tol {
            Side::Right
        } else if (my - y0).abs() < tol {
            Side::Bottom
        } else if (my - y1).abs() < tol {
            Side::Top
        } else {
            return Err(Error::InvalidArgument(format!(
                "boundary edge ({}, {}) is not on a side of the bounding rectangle",
                edge.a, edge.b
            )));
        };
        edge.tag = rule[&side];
    }
    Ok(Arc::new(out))
}

impl Mesh {
    /// Assemble a mesh from raw parts, deriving boundary edges, normals and
    /// adjacency, and validating all structural invariants. `tags` may
    /// override the default [`BoundaryTag::NeumannControl`] per unordered
    /// node pair.
    pub fn from_parts(
        nodes: Vec<(f64, f64)>,
        triangles: Vec<[usize; 3]>,
        tags: &[(usize, usize, BoundaryTag)],
    ) -> Result<Arc<Mesh>> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no nodes or triangles".into()));
        }
        for tri in &triangles {
            for &v in tri {
                if v >= nodes.len() {
                    return Err(Error::InvalidArgument(format!(
                        "triangle references node {v} out of {}",
                        nodes.len()
                    )));
                }
            }
        }
        // Count incidences per undirected edge and remember the directed
        // (CCW within its triangle) orientation of boundary edges.
        let mut incidence: HashMap<(usize, usize), (usize, (usize, usize), usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let entry = incidence.entry(key).or_insert((0, (u, v), t));
                entry.0 += 1;
            }
        }
        let mut tag_map: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for &(a, b, tag) in tags {
            tag_map.insert((a.min(b), a.max(b)), tag);
        }
        let mut boundary_edges = Vec::new();
        for (&key, &(count, (u, v), t)) in &incidence {
            match count {
                1 => {
                    let (xu, yu) = nodes[u];
                    let (xv, yv) = nodes[v];
                    let len = ((xv - xu).powi(2) + (yv - yu).powi(2)).sqrt();
                    if len == 0.0 {
                        return Err(Error::InvalidArgument("degenerate boundary edge".into()));
                    }
                    // CCW triangle => the outward normal of a boundary edge
                    // traversed with the triangle's orientation is the edge
                    // direction rotated by -90 degrees.
                    let normal = ((yv - yu) / len, -(xv - xu) / len);
                    let tag = tag_map
                        .get(&key)
                        .copied()
                        .unwrap_or(BoundaryTag::NeumannControl);
                    let _ = t;
                    boundary_edges.push(BoundaryEdge { a: u, b: v, tag, normal });
                }
                2 => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "edge ({}, {}) is shared by {count} triangles",
                        key.0, key.1
                    )))
                }
            }
        }
        // Canonical ordering: follow each boundary loop from its smallest
        // node index, so construction and re-import agree byte for byte.
        boundary_edges = order_boundary_loops(boundary_edges)?;

        let neighbors = build_neighbors(&triangles, nodes.len());
        let h = max_diameter(&nodes, &triangles);
        let bbox = bounding_box(&nodes);
        let mut mesh = Mesh {
            nodes,
            triangles,
            boundary_edges,
            subdivision: None,
            h,
            bbox,
            neighbors,
        };
        mesh.subdivision = mesh.detect_structured();
        mesh.validate()?;
        Ok(Arc::new(mesh))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Maximum triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Subdivision count when the mesh has the structured unit-square layout.
    pub fn subdivision(&self) -> Option<usize> {
        self.subdivision
    }

    pub fn bbox(&self) -> ((f64, f64), (f64, f64)) {
        self.bbox
    }

    /// Vertex coordinates of triangle `t`.
    pub fn triangle_coords(&self, t: usize) -> [(f64, f64); 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of triangle `t` (positive for CCW).
    pub fn area(&self, t: usize) -> f64 {
        let [(xa, ya), (xb, yb), (xc, yc)] = self.triangle_coords(t);
        0.5 * ((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya))
    }

    /// Total area of the triangulated polygon.
    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Euclidean projection onto the bounding rectangle. For rectangular
    /// domains (all experiments here) this is projection onto the domain.
    pub fn clamp_to_domain(&self, p: (f64, f64)) -> (f64, f64) {
        let ((x0, y0), (x1, y1)) = self.bbox;
        (p.0.clamp(x0, x1), p.1.clamp(y0, y1))
    }

    /// Locate the triangle containing `p` and the barycentric coordinates
    /// of `p` in it. Structured meshes use cell-index arithmetic; imported
    /// meshes use a straight walk with pseudo-random restarts.
    pub fn locate_point(&self, p: (f64, f64)) -> Result<(usize, [f64; 3])> {
        let ((x0, y0), (x1, y1)) = self.bbox;
        let tol = 1e-12;
        if p.0 < x0 - tol || p.0 > x1 + tol || p.1 < y0 - tol || p.1 > y1 + tol {
            return Err(Error::OutOfDomain { x: p.0, y: p.1 });
        }
        if let Some(n) = self.subdivision {
            let nf = n as f64;
            let i = ((p.0 * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
            let j = ((p.1 * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
            let xi = p.0 * nf - i as f64;
            let eta = p.1 * nf - j as f64;
            // Lower-right triangle of the cell iff the point lies on or
            // below the ll -> ur diagonal.
            let t = 2 * (j * n + i) + if xi >= eta { 0 } else { 1 };
            let bary = self.barycentric(t, p);
            return Ok((t, clamp_bary(bary)));
        }
        self.walk_locate(p)
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`
    /// (unclamped; coordinates are negative outside the triangle).
    pub fn barycentric(&self, t: usize, p: (f64, f64)) -> [f64; 3] {
        let [(xa, ya), (xb, yb), (xc, yc)] = self.triangle_coords(t);
        let det = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya);
        let l1 = ((p.0 - xa) * (yc - ya) - (xc - xa) * (p.1 - ya)) / det;
        let l2 = ((xb - xa) * (p.1 - ya) - (p.0 - xa) * (yb - ya)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    fn walk_locate(&self, p: (f64, f64)) -> Result<(usize, [f64; 3])> {
        let ntri = self.n_triangles();
        let max_steps = 2 * ntri;
        // Deterministic restart sequence so that runs are reproducible.
        let mut rng = XorShift::new(0x9e37_79b9 ^ p.0.to_bits() ^ p.1.to_bits().rotate_left(17));
        let mut t = 0usize;
        for _restart in 0..8 {
            let mut steps = 0;
            loop {
                let bary = self.barycentric(t, p);
                let (kmin, &bmin) = bary
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                if bmin >= -1e-12 {
                    return Ok((t, clamp_bary(bary)));
                }
                // Step across the edge opposite the most negative coordinate.
                match self.neighbors[t][kmin] {
                    Some(next) => t = next,
                    None => break,
                }
                steps += 1;
                if steps > max_steps {
                    break;
                }
            }
            t = (rng.next() as usize) % ntri;
        }
        Err(Error::OutOfDomain { x: p.0, y: p.1 })
    }

    /// Sorted, deduplicated node indices lying on edges with the given tag.
    pub fn boundary_nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| [e.a, e.b])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Check every structural invariant; called on import and in tests.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        for t in 0..self.n_triangles() {
            if self.area(t) <= 0.0 {
                return fail(format!("triangle {t} is not counterclockwise"));
            }
        }
        // Edge incidence: boundary edges once, interior edges twice.
        let mut incidence: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                *incidence.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        for (key, count) in &incidence {
            if *count > 2 {
                return fail(format!("edge {key:?} shared by {count} triangles"));
            }
        }
        let boundary_keys: Vec<_> = incidence
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&k, _)| k)
            .collect();
        if boundary_keys.len() != self.boundary_edges.len() {
            return fail(format!(
                "expected {} boundary edges, stored {}",
                boundary_keys.len(),
                self.boundary_edges.len()
            ));
        }
        for edge in &self.boundary_edges {
            let key = (edge.a.min(edge.b), edge.a.max(edge.b));
            if incidence.get(&key) != Some(&1) {
                return fail(format!("stored boundary edge {key:?} is not on the boundary"));
            }
        }
        // Boundary edges form closed loops: each boundary node appears
        // exactly once as a start and once as an end.
        let mut starts: HashMap<usize, usize> = HashMap::new();
        let mut ends: HashMap<usize, usize> = HashMap::new();
        for edge in &self.boundary_edges {
            *starts.entry(edge.a).or_insert(0) += 1;
            *ends.entry(edge.b).or_insert(0) += 1;
        }
        if starts.values().any(|&c| c != 1) || ends.values().any(|&c| c != 1) || starts.len() != ends.len() {
            return fail("boundary edges do not form closed loops".into());
        }
        // Normals: unit length, pointing away from the adjacent triangle.
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                owner.insert((u.min(v), u.max(v)), t);
            }
        }
        for edge in &self.boundary_edges {
            let n = edge.normal;
            let len = (n.0 * n.0 + n.1 * n.1).sqrt();
            if (len - 1.0).abs() > 1e-12 {
                return fail(format!("normal of edge ({}, {}) is not unit", edge.a, edge.b));
            }
            let t = owner[&(edge.a.min(edge.b), edge.a.max(edge.b))];
            let [(xa, ya), (xb, yb), (xc, yc)] = self.triangle_coords(t);
            let centroid = ((xa + xb + xc) / 3.0, (ya + yb + yc) / 3.0);
            let (ma, mb) = (self.nodes[edge.a], self.nodes[edge.b]);
            let mid = (0.5 * (ma.0 + mb.0), 0.5 * (ma.1 + mb.1));
            if n.0 * (mid.0 - centroid.0) + n.1 * (mid.1 - centroid.1) <= 0.0 {
                return fail(format!("normal of edge ({}, {}) points inward", edge.a, edge.b));
            }
        }
        Ok(())
    }

    /// Detect whether the node/triangle layout matches
    /// `build_structured_mesh(n)` exactly (bitwise node coordinates).
    fn detect_structured(&self) -> Option<usize> {
        let np = (self.nodes.len() as f64).sqrt().round() as usize;
        if np < 2 || np * np != self.nodes.len() {
            return None;
        }
        let n = np - 1;
        if self.triangles.len() != 2 * n * n {
            return None;
        }
        let idx = |i: usize, j: usize| j * np + i;
        for j in 0..np {
            for i in 0..np {
                let expect = (i as f64 / n as f64, j as f64 / n as f64);
                if self.nodes[idx(i, j)] != expect {
                    return None;
                }
            }
        }
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ur, ul) =
                    (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                let c = 2 * (j * n + i);
                if self.triangles[c] != [ll, lr, ur] || self.triangles[c + 1] != [ll, ur, ul] {
                    return None;
                }
            }
        }
        Some(n)
    }
}

fn order_boundary_loops(edges: Vec<BoundaryEdge>) -> Result<Vec<BoundaryEdge>> {
    let mut next: HashMap<usize, BoundaryEdge> = HashMap::new();
    for e in edges {
        if next.insert(e.a, e).is_some() {
            return Err(Error::InvalidArgument(format!(
                "node {} starts two boundary edges",
                e.a
            )));
        }
    }
    let mut ordered = Vec::with_capacity(next.len());
    while !next.is_empty() {
        let start = *next.keys().min().unwrap();
        let mut at = start;
        loop {
            let e = next.remove(&at).ok_or_else(|| {
                Error::InvalidArgument("boundary edges do not form closed loops".into())
            })?;
            at = e.b;
            ordered.push(e);
            if at == start {
                break;
            }
        }
    }
    Ok(ordered)
}

fn clamp_bary(mut b: [f64; 3]) -> [f64; 3] {
    for v in &mut b {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s = b[0] + b[1] + b[2];
    [b[0] / s, b[1] / s, b[2] / s]
}

fn max_diameter(nodes: &[(f64, f64)], triangles: &[[usize; 3]]) -> f64 {
    let mut h: f64 = 0.0;
    for tri in triangles {
        for e in 0..3 {
            let (xa, ya) = nodes[tri[e]];
            let (xb, yb) = nodes[tri[(e + 1) % 3]];
            h = h.max(((xb - xa).powi(2) + (yb - ya).powi(2)).sqrt());
        }
    }
    h
}

fn bounding_box(nodes: &[(f64, f64)]) -> ((f64, f64), (f64, f64)) {
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in nodes {
        min.0 = min.0.min(x);
        min.1 = min.1.min(y);
        max.0 = max.0.max(x);
        max.1 = max.1.max(y);
    }
    (min, max)
}

fn build_neighbors(triangles: &[[usize; 3]], _n_nodes: usize) -> Vec<[Option<usize>; 3]> {
    let mut by_edge: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            // Edge opposite local vertex k.
            let (u, v) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            by_edge
                .entry((u.min(v), u.max(v)))
                .or_default()
                .push((t, k));
        }
    }
    let mut neighbors = vec![[None; 3]; triangles.len()];
    for mates in by_edge.values() {
        if let [(t1, k1), (t2, k2)] = mates[..] {
            neighbors[t1][k1] = Some(t2);
            neighbors[t2][k2] = Some(t1);
        }
    }
    neighbors
}

/// Tiny deterministic generator for walk restarts.
struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> Self {
        XorShift(seed | 1)
    }
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
}
