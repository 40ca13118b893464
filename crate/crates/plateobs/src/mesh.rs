//! Conforming triangulations with uniform and red-green-blue refinement.
//!
//! A [`Mesh`] is immutable after construction; refinement returns a new mesh.
//! Green and blue triangles are closure bookkeeping only: before the next
//! adaptive pass they are removed and their parents re-refined, so every
//! triangle in any mesh is at most one green/blue split away from a purely
//! red descendant of the initial triangulation. This keeps the minimum angle
//! bounded under arbitrarily many adaptive passes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::PlateError;

/// How a triangle was created, kept for refinement closure bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineTag {
    /// Initial triangle or red (4-way) child; permanent.
    None,
    /// Red child created by [`Mesh::uniform_refine`] or [`Mesh::rgb_refine`].
    Red,
    /// Bisection child; removed and re-refined by the next adaptive pass.
    Green,
    /// 3-way closure child; removed and re-refined by the next adaptive pass.
    Blue,
}

#[derive(Debug, Clone)]
struct ClosureGroup {
    /// Vertex ids of the removed parent, counter-clockwise.
    parent: [usize; 3],
    /// Triangle ids of the green/blue children in the current mesh.
    children: Vec<usize>,
}

/// Geometric data of one triangle: diameter, area and per-edge frames.
///
/// Edge `i` runs from local vertex `i` to local vertex `(i + 1) % 3`; its
/// normal points out of the triangle (counter-clockwise orientation).
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub triangle: usize,
    pub vertices: [[f64; 2]; 3],
    /// Longest edge length.
    pub diameter: f64,
    pub area: f64,
    pub edge_lengths: [f64; 3],
    pub normals: [[f64; 2]; 3],
    pub tangents: [[f64; 2]; 3],
}

/// Conforming triangulation of a polygonal domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<RefineTag>,
    closure: Vec<ClosureGroup>,
    /// Edge (a, b) with a < b that has been split -> midpoint vertex id.
    /// Persisted so re-refinement reuses vertex ids.
    split_memo: HashMap<(usize, usize), usize>,
    // Derived connectivity, rebuilt on construction.
    edges: Vec<[usize; 2]>,
    edge_triangles: Vec<(usize, Option<usize>)>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
}

impl Mesh {
    /// Builds a mesh from raw vertex and (counter-clockwise) triangle lists,
    /// validating conformity and orientation.
    pub fn from_vertices_triangles(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, PlateError> {
        let tags = vec![RefineTag::None; triangles.len()];
        Self::assemble(vertices, triangles, tags, Vec::new(), HashMap::new())
    }

    fn assemble(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        tags: Vec<RefineTag>,
        closure: Vec<ClosureGroup>,
        split_memo: HashMap<(usize, usize), usize>,
    ) -> Result<Self, PlateError> {
        if triangles.is_empty() {
            return Err(PlateError::InvalidMesh("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(PlateError::InvalidMesh(format!(
                        "triangle {t} references vertex {v} out of {}",
                        vertices.len()
                    )));
                }
            }
            if signed_area(&vertices, tri) <= 0.0 {
                return Err(PlateError::InvalidMesh(format!(
                    "triangle {t} is degenerate or clockwise"
                )));
            }
        }
        // Deterministic edge numbering: sorted vertex pairs.
        let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
        for tri in &triangles {
            for k in 0..3 {
                edge_set.insert(edge_key(tri[k], tri[(k + 1) % 3]));
            }
        }
        let edges: Vec<[usize; 2]> = edge_set.iter().map(|&(a, b)| [a, b]).collect();
        let edge_index: HashMap<(usize, usize), usize> =
            edge_set.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let mut edge_triangles: Vec<(usize, Option<usize>)> = vec![(usize::MAX, None); edges.len()];
        let mut triangle_edges = vec![[0usize; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = edge_index[&edge_key(tri[k], tri[(k + 1) % 3])];
                triangle_edges[t][k] = e;
                let slot = &mut edge_triangles[e];
                if slot.0 == usize::MAX {
                    slot.0 = t;
                } else if slot.1.is_none() {
                    slot.1 = Some(t);
                } else {
                    return Err(PlateError::InvalidMesh(format!(
                        "edge ({}, {}) shared by more than two triangles",
                        edges[e][0], edges[e][1]
                    )));
                }
            }
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &(_, second)) in edge_triangles.iter().enumerate() {
            if second.is_none() {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }
        Ok(Mesh {
            vertices,
            triangles,
            tags,
            closure,
            split_memo,
            edges,
            edge_triangles,
            triangle_edges,
            boundary_vertex,
        })
    }

    /// A vertex lying in the interior of another triangle's edge makes the
    /// mesh non-conforming even when edge-triangle counts look right.
    fn check_no_hanging_nodes(&self) -> Result<(), PlateError> {
        let used: BTreeSet<usize> = self.triangles.iter().flatten().copied().collect();
        for &(a, b) in self.split_memo.iter().map(|(k, _)| k) {
            let m = self.split_memo[&(a, b)];
            if used.contains(&m)
                && used.contains(&a)
                && used.contains(&b)
                && self.edge_index_of(a, b).is_some()
            {
                return Err(PlateError::InvalidMesh(format!(
                    "hanging node {m} on edge ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    fn edge_index_of(&self, a: usize, b: usize) -> Option<usize> {
        let key = edge_key(a, b);
        self.edges
            .binary_search_by(|e| (e[0], e[1]).cmp(&key))
            .ok()
    }

    /// Structured triangulation of the unit square: `n x n` grid cells, each
    /// split along the same diagonal, `2 n^2` triangles.
    pub fn structured_unit_square(n: usize) -> Result<Self, PlateError> {
        if n == 0 {
            return Err(PlateError::InvalidMesh(
                "subdivision count must be at least 1".into(),
            ));
        }
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                // Split along the diagonal from lower-left to upper-right.
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::from_vertices_triangles(vertices, triangles)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tag(&self, t: usize) -> RefineTag {
        self.tags[t]
    }

    /// Edge endpoints, always with the lower vertex id first.
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    /// One or two triangles incident to an edge.
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_triangles[e]
    }

    /// The three edge ids of a triangle; edge `k` joins local vertices
    /// `k` and `(k + 1) % 3`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].1.is_none()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.is_boundary_edge(e))
    }

    /// Geometry of one triangle.
    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry, PlateError> {
        if t >= self.triangles.len() {
            return Err(PlateError::InvalidMesh(format!(
                "triangle id {t} out of range"
            )));
        }
        let tri = self.triangles[t];
        let v = [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ];
        let mut edge_lengths = [0.0; 3];
        let mut normals = [[0.0; 2]; 3];
        let mut tangents = [[0.0; 2]; 3];
        for k in 0..3 {
            let a = v[k];
            let b = v[(k + 1) % 3];
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            let len = (dx * dx + dy * dy).sqrt();
            edge_lengths[k] = len;
            tangents[k] = [dx / len, dy / len];
            // Outward for counter-clockwise orientation.
            normals[k] = [dy / len, -dx / len];
        }
        let area = 0.5 * signed_area(&self.vertices, &tri);
        Ok(ElementGeometry {
            triangle: t,
            vertices: v,
            diameter: edge_lengths[0].max(edge_lengths[1]).max(edge_lengths[2]),
            area,
            edge_lengths,
            normals,
            tangents,
        })
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let v = [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ];
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }

    /// Splits every triangle of the current mesh into four similar children.
    /// The result carries no closure bookkeeping: all children are permanent.
    pub fn uniform_refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut memo = self.split_memo.clone();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let m01 = midpoint(&mut vertices, &mut memo, tri[0], tri[1]);
            let m12 = midpoint(&mut vertices, &mut memo, tri[1], tri[2]);
            let m20 = midpoint(&mut vertices, &mut memo, tri[2], tri[0]);
            triangles.push([tri[0], m01, m20]);
            triangles.push([m01, tri[1], m12]);
            triangles.push([m20, m12, tri[2]]);
            triangles.push([m01, m12, m20]);
        }
        let tags = vec![RefineTag::Red; triangles.len()];
        Self::assemble(vertices, triangles, tags, Vec::new(), memo)
            .expect("uniform refinement preserves conformity")
    }

    /// Red-green-blue refinement of the marked triangles.
    ///
    /// Marked triangles are red-refined; conformity is restored with green
    /// (bisection) and blue (3-way) closure splits using the longest-edge
    /// rule, ties broken towards the lower vertex-id pair. Green/blue
    /// triangles left over from a previous pass are removed and their parents
    /// re-refined, so closure never stacks.
    pub fn rgb_refine(&self, marked: &BTreeSet<usize>) -> Result<Self, PlateError> {
        if let Some(&t) = marked.iter().next_back() {
            if t >= self.triangles.len() {
                return Err(PlateError::InvalidMesh(format!(
                    "marked triangle id {t} out of range"
                )));
            }
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        // One pass splits each triangle a single level, but a marked triangle
        // deep in a previously refined region can force splits two or more
        // levels down on a coarse neighbour. Re-run the pass on the triangles
        // still owning a hanging edge until the mesh is conforming; every
        // round lifts the lagging side one level, so this terminates.
        let mut mesh = self.rgb_pass(marked)?;
        for _ in 0..64 {
            let hanging = mesh.hanging_edge_triangles();
            if hanging.is_empty() {
                mesh.check_no_hanging_nodes()?;
                return Ok(mesh);
            }
            mesh = mesh.rgb_pass(&hanging)?;
        }
        Err(PlateError::InvalidMesh(
            "red-green-blue closure did not terminate".into(),
        ))
    }

    /// Triangles owning an edge with a vertex hanging on it (the midpoint
    /// tree of the edge contains a vertex used elsewhere in the mesh).
    fn hanging_edge_triangles(&self) -> BTreeSet<usize> {
        let used: Vec<bool> = {
            let mut used = vec![false; self.vertices.len()];
            for tri in &self.triangles {
                for &v in tri {
                    used[v] = true;
                }
            }
            used
        };
        let mut out = BTreeSet::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            'edges: for k in 0..3 {
                let mut stack = vec![edge_key(tri[k], tri[(k + 1) % 3])];
                while let Some(key) = stack.pop() {
                    if let Some(&m) = self.split_memo.get(&key) {
                        if used[m] {
                            out.insert(t);
                            continue 'edges;
                        }
                        stack.push(edge_key(key.0, m));
                        stack.push(edge_key(m, key.1));
                    }
                }
            }
        }
        out
    }

    /// One level of red-green-blue refinement (closure removal, marking,
    /// longest-edge fixpoint, splitting). The result may still carry hanging
    /// nodes against regions refined more than one level deeper.
    fn rgb_pass(&self, marked: &BTreeSet<usize>) -> Result<Self, PlateError> {

        // Restore closure parents: base mesh = permanent triangles + parents.
        let mut in_closure = vec![false; self.triangles.len()];
        let mut group_of = vec![usize::MAX; self.triangles.len()];
        for (g, group) in self.closure.iter().enumerate() {
            for &c in &group.children {
                in_closure[c] = true;
                group_of[c] = g;
            }
        }
        let mut base: Vec<[usize; 3]> = Vec::new();
        let mut base_marked: Vec<bool> = Vec::new();
        let mut group_base = vec![usize::MAX; self.closure.len()];
        for t in 0..self.triangles.len() {
            if !in_closure[t] {
                base.push(self.triangles[t]);
                base_marked.push(marked.contains(&t));
            }
        }
        for (g, group) in self.closure.iter().enumerate() {
            group_base[g] = base.len();
            base.push(group.parent);
            base_marked.push(group.children.iter().any(|c| marked.contains(c)));
        }

        // Edges already split in a neighbouring permanent triangle must be
        // honoured; a midpoint counts only while some base triangle uses it.
        let used: BTreeSet<usize> = base.iter().flatten().copied().collect();
        let mut split: BTreeSet<(usize, usize)> = BTreeSet::new();
        for tri in &base {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                if let Some(&m) = self.split_memo.get(&key) {
                    if used.contains(&m) {
                        split.insert(key);
                    }
                }
            }
        }
        for (tri, &mk) in base.iter().zip(&base_marked) {
            if mk {
                for k in 0..3 {
                    split.insert(edge_key(tri[k], tri[(k + 1) % 3]));
                }
            }
        }
        // Closure: any split edge forces the refinement edge of its triangle.
        loop {
            let mut changed = false;
            for tri in &base {
                let keys = [
                    edge_key(tri[0], tri[1]),
                    edge_key(tri[1], tri[2]),
                    edge_key(tri[2], tri[0]),
                ];
                if keys.iter().any(|k| split.contains(k)) {
                    let r = keys[self.refinement_edge(tri)];
                    if split.insert(r) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        let mut memo = self.split_memo.clone();
        // Create midpoints in deterministic (sorted) edge order.
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in &split {
            mid.insert((a, b), midpoint(&mut vertices, &mut memo, a, b));
        }

        let mut triangles: Vec<[usize; 3]> = Vec::new();
        let mut tags: Vec<RefineTag> = Vec::new();
        let mut closure: Vec<ClosureGroup> = Vec::new();
        for tri in &base {
            let keys = [
                edge_key(tri[0], tri[1]),
                edge_key(tri[1], tri[2]),
                edge_key(tri[2], tri[0]),
            ];
            let is_split = [
                split.contains(&keys[0]),
                split.contains(&keys[1]),
                split.contains(&keys[2]),
            ];
            match is_split.iter().filter(|&&s| s).count() {
                0 => {
                    triangles.push(*tri);
                    tags.push(RefineTag::None);
                }
                3 => {
                    let m01 = mid[&keys[0]];
                    let m12 = mid[&keys[1]];
                    let m20 = mid[&keys[2]];
                    for child in [
                        [tri[0], m01, m20],
                        [m01, tri[1], m12],
                        [m20, m12, tri[2]],
                        [m01, m12, m20],
                    ] {
                        triangles.push(child);
                        tags.push(RefineTag::Red);
                    }
                }
                1 => {
                    // Green: bisect through the refinement edge midpoint.
                    let r = self.refinement_edge(tri);
                    debug_assert!(is_split[r]);
                    let (a, b, c) = rotate(tri, r);
                    let m = mid[&keys[r]];
                    let first = triangles.len();
                    triangles.push([a, m, c]);
                    triangles.push([m, b, c]);
                    tags.push(RefineTag::Green);
                    tags.push(RefineTag::Green);
                    closure.push(ClosureGroup {
                        parent: *tri,
                        children: vec![first, first + 1],
                    });
                }
                2 => {
                    let r = self.refinement_edge(tri);
                    debug_assert!(is_split[r]);
                    let (a, b, c) = rotate(tri, r);
                    let m = mid[&keys[r]];
                    let first = triangles.len();
                    // The second split edge is (b, c) or (c, a) in rotated order.
                    if split.contains(&edge_key(b, c)) {
                        let n = mid[&edge_key(b, c)];
                        triangles.push([a, m, c]);
                        triangles.push([m, b, n]);
                        triangles.push([m, n, c]);
                    } else {
                        let n = mid[&edge_key(c, a)];
                        triangles.push([m, b, c]);
                        triangles.push([a, m, n]);
                        triangles.push([m, c, n]);
                    }
                    for _ in 0..3 {
                        tags.push(RefineTag::Blue);
                    }
                    closure.push(ClosureGroup {
                        parent: *tri,
                        children: vec![first, first + 1, first + 2],
                    });
                }
                _ => unreachable!(),
            }
        }
        Self::assemble(vertices, triangles, tags, closure, memo)
    }

    /// Local index of the refinement edge: longest, ties broken towards the
    /// lexicographically smallest (min, max) vertex-id pair.
    fn refinement_edge(&self, tri: &[usize; 3]) -> usize {
        let mut best = 0usize;
        let mut best_len = -1.0f64;
        for k in 0..3 {
            let a = self.vertices[tri[k]];
            let b = self.vertices[tri[(k + 1) % 3]];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let better = len > best_len + 1e-12 * best_len.abs()
                || (len >= best_len - 1e-12 * best_len.abs()
                    && edge_key(tri[k], tri[(k + 1) % 3])
                        < edge_key(tri[best], tri[(best + 1) % 3]));
            if better {
                best = k;
                best_len = len;
            }
        }
        best
    }

    /// Minimum interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let o = self.vertices[tri[k]];
                let p = self.vertices[tri[(k + 1) % 3]];
                let q = self.vertices[tri[(k + 2) % 3]];
                let u = [p[0] - o[0], p[1] - o[1]];
                let v = [q[0] - o[0], q[1] - o[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let cross = u[0] * v[1] - u[1] * v[0];
                min = min.min(cross.atan2(dot).abs());
            }
        }
        min
    }

    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| 0.5 * signed_area(&self.vertices, tri))
            .sum()
    }

    /// Plain text export: `vertices <count>`, one `x y` line per vertex,
    /// `triangles <count>`, one `i j k` line per triangle (0-based).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    /// Parses the format written by [`Mesh::to_text`].
    pub fn from_text(text: &str) -> Result<Self, PlateError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |msg: &str| PlateError::InvalidMesh(format!("mesh file: {msg}"));
        let header = lines.next().ok_or_else(|| bad("missing vertex header"))?;
        let n_vertices: usize = header
            .strip_prefix("vertices ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("expected `vertices <count>`"))?;
        let mut vertices = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            let line = lines.next().ok_or_else(|| bad("truncated vertex list"))?;
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad vertex line"))?;
            let y: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad vertex line"))?;
            vertices.push([x, y]);
        }
        let header = lines.next().ok_or_else(|| bad("missing triangle header"))?;
        let n_triangles: usize = header
            .strip_prefix("triangles ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("expected `triangles <count>`"))?;
        let mut triangles = Vec::with_capacity(n_triangles);
        for _ in 0..n_triangles {
            let line = lines.next().ok_or_else(|| bad("truncated triangle list"))?;
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("bad triangle line"))?;
            if ids.len() != 3 {
                return Err(bad("triangle line needs three indices"));
            }
            triangles.push([ids[0], ids[1], ids[2]]);
        }
        Self::from_vertices_triangles(vertices, triangles)
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let a = vertices[tri[0]];
    let b = vertices[tri[1]];
    let c = vertices[tri[2]];
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn midpoint(
    vertices: &mut Vec<[f64; 2]>,
    memo: &mut HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = edge_key(a, b);
    *memo.entry(key).or_insert_with(|| {
        let pa = vertices[a];
        let pb = vertices[b];
        vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
        vertices.len() - 1
    })
}

/// Rotates the vertex triple so the refinement edge becomes (a, b).
fn rotate(tri: &[usize; 3], r: usize) -> (usize, usize, usize) {
    (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3])
}
