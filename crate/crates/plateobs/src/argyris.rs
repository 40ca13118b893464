//! Quintic C¹ (Argyris) triangles: degree-of-freedom layout, physical-element
//! shape functions with derivatives up to order four, interpolation, and the
//! [`FeSpace`] bundle used by assembly and error estimation.
//!
//! Each triangle carries 21 degrees of freedom: value, gradient and Hessian
//! at the three vertices plus the normal derivative at each edge midpoint.
//! Shape functions are constructed per element by solving the 21x21 system
//! of DOF functionals applied to quintic monomials in a local frame centred
//! at the centroid and scaled by the element diameter, which keeps the system
//! well conditioned without the classical Argyris transformation matrices.

use nalgebra::DMatrix;

use crate::mesh::{ElementGeometry, Mesh};
use crate::plate::FieldDerivs;
use crate::quadrature::{edge_quadrature, triangle_quadrature, EdgeQuadrature, TriangleQuadrature};
use crate::PlateError;

/// Monomial exponents `(i, j)` for the quintic basis, graded order.
const MONOMIALS: [(u32, u32); 21] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
    (5, 0),
    (4, 1),
    (3, 2),
    (2, 3),
    (1, 4),
    (0, 5),
];

/// Derivative multi-indices `(p, q)` matching the layout of [`FieldDerivs`].
const DERIVS: [(u32, u32); 15] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

/// Global numbering of the Argyris space: vertex `v` owns DOFs
/// `6 v .. 6 v + 6` in the order `u, u_x, u_y, u_xx, u_xy, u_yy`; edge `e`
/// owns DOF `6 #vertices + e` (normal derivative at the edge midpoint).
#[derive(Debug, Clone)]
pub struct DofLayout {
    n_vertices: usize,
    n_edges: usize,
    triangle_dofs: Vec<[usize; 21]>,
}

impl DofLayout {
    pub fn new(mesh: &Mesh) -> Self {
        let n_vertices = mesh.n_vertices();
        let mut triangle_dofs = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangle(t);
            let edges = mesh.triangle_edges(t);
            let mut dofs = [0usize; 21];
            for local in 0..3 {
                for comp in 0..6 {
                    dofs[6 * local + comp] = 6 * tri[local] + comp;
                }
            }
            for local in 0..3 {
                dofs[18 + local] = 6 * n_vertices + edges[local];
            }
            triangle_dofs.push(dofs);
        }
        DofLayout {
            n_vertices,
            n_edges: mesh.n_edges(),
            triangle_dofs,
        }
    }

    pub fn n_dofs(&self) -> usize {
        6 * self.n_vertices + self.n_edges
    }

    /// The 21 global DOFs of a triangle: vertex blocks then edge DOFs, in the
    /// triangle's local order.
    pub fn triangle_dofs(&self, t: usize) -> &[usize; 21] {
        &self.triangle_dofs[t]
    }

    /// Global index of vertex DOF `comp` (0 = value, 1 = d/dx, 2 = d/dy,
    /// 3 = d²/dx², 4 = d²/dxdy, 5 = d²/dy²).
    pub fn vertex_dof(&self, v: usize, comp: usize) -> usize {
        6 * v + comp
    }

    pub fn edge_dof(&self, e: usize) -> usize {
        6 * self.n_vertices + e
    }
}

/// Fixed normal used for the edge-midpoint DOF: with the endpoints ordered by
/// vertex id, the tangent runs low-to-high and the normal is the tangent
/// rotated by +90°. Both incident triangles see the same sign.
pub fn edge_dof_normal(lo: [f64; 2], hi: [f64; 2]) -> [f64; 2] {
    let dx = hi[0] - lo[0];
    let dy = hi[1] - lo[1];
    let len = dx.hypot(dy);
    [-dy / len, dx / len]
}

/// Shape functions of one triangle in physical coordinates.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub triangle: usize,
    origin: [f64; 2],
    scale: f64,
    /// `coeffs[(m, j)]`: coefficient of monomial `m` in shape function `j`.
    coeffs: DMatrix<f64>,
}

impl ElementBasis {
    /// Builds the 21 shape functions dual to the element's DOF functionals.
    pub fn new(mesh: &Mesh, t: usize) -> Result<Self, PlateError> {
        let geo = mesh.element_geometry(t)?;
        if geo.area < 1e-14 * geo.diameter * geo.diameter {
            return Err(PlateError::DegenerateElement(t));
        }
        let tri = mesh.triangle(t);
        let origin = [
            (geo.vertices[0][0] + geo.vertices[1][0] + geo.vertices[2][0]) / 3.0,
            (geo.vertices[0][1] + geo.vertices[1][1] + geo.vertices[2][1]) / 3.0,
        ];
        let scale = geo.diameter;

        // Row r = functional r applied to the 21 monomials, with rows scaled
        // by scale^order so the system stays O(1).
        let mut system = DMatrix::<f64>::zeros(21, 21);
        let mut rhs = DMatrix::<f64>::zeros(21, 21);
        let table = |x: [f64; 2]| monomial_derivatives(x, origin, scale);

        for local in 0..3 {
            let derivs = table(geo.vertices[local]);
            for comp in 0..6 {
                // comp 0 = value (order 0), 1-2 gradient (order 1), 3-5 Hessian.
                let (slot, order) = match comp {
                    0 => (0, 0),
                    1 => (1, 1),
                    2 => (2, 1),
                    3 => (3, 2),
                    4 => (4, 2),
                    _ => (5, 2),
                };
                let row = 6 * local + comp;
                let factor = scale.powi(order);
                for m in 0..21 {
                    system[(row, m)] = derivs[m][slot] * factor;
                }
                rhs[(row, row)] = factor;
            }
        }
        for local in 0..3 {
            let (a, b) = (tri[local], tri[(local + 1) % 3]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let n = edge_dof_normal(mesh.vertex(lo), mesh.vertex(hi));
            let pa = mesh.vertex(a);
            let pb = mesh.vertex(b);
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let derivs = table(mid);
            let row = 18 + local;
            for m in 0..21 {
                system[(row, m)] = (n[0] * derivs[m][1] + n[1] * derivs[m][2]) * scale;
            }
            rhs[(row, row)] = scale;
        }

        let lu = system.full_piv_lu();
        let coeffs = lu
            .solve(&rhs)
            .ok_or(PlateError::DegenerateElement(t))?;
        Ok(ElementBasis {
            triangle: t,
            origin,
            scale,
            coeffs,
        })
    }

    /// Values and derivatives (to order four) of all 21 shape functions at a
    /// point, in physical coordinates.
    pub fn eval(&self, x: [f64; 2]) -> [FieldDerivs; 21] {
        let mono = monomial_derivatives(x, self.origin, self.scale);
        let mut out = [FieldDerivs::default(); 21];
        for (j, shape) in out.iter_mut().enumerate() {
            let mut acc = [0.0f64; 15];
            for m in 0..21 {
                let c = self.coeffs[(m, j)];
                if c != 0.0 {
                    let d = &mono[m];
                    for k in 0..15 {
                        acc[k] += c * d[k];
                    }
                }
            }
            *shape = FieldDerivs {
                value: acc[0],
                grad: [acc[1], acc[2]],
                hess: [acc[3], acc[4], acc[5]],
                third: [acc[6], acc[7], acc[8], acc[9]],
                fourth: [acc[10], acc[11], acc[12], acc[13], acc[14]],
            };
        }
        out
    }

    /// Field value and derivatives of a local DOF vector at a point.
    pub fn eval_field(&self, x: [f64; 2], local_dofs: &[f64; 21]) -> FieldDerivs {
        let shapes = self.eval(x);
        let mut out = FieldDerivs::default();
        for (c, shape) in local_dofs.iter().zip(shapes.iter()) {
            out.accumulate(*c, shape);
        }
        out
    }
}

/// All 15 derivative slots of the 21 scaled monomials at a physical point.
fn monomial_derivatives(x: [f64; 2], origin: [f64; 2], scale: f64) -> [[f64; 15]; 21] {
    let xs = (x[0] - origin[0]) / scale;
    let ys = (x[1] - origin[1]) / scale;
    let mut xp = [1.0f64; 6];
    let mut yp = [1.0f64; 6];
    for k in 1..6 {
        xp[k] = xp[k - 1] * xs;
        yp[k] = yp[k - 1] * ys;
    }
    let inv = 1.0 / scale;
    let mut inv_pow = [1.0f64; 5];
    for k in 1..5 {
        inv_pow[k] = inv_pow[k - 1] * inv;
    }
    let falling = |n: u32, k: u32| -> f64 {
        if k > n {
            return 0.0;
        }
        let mut f = 1.0;
        for step in 0..k {
            f *= (n - step) as f64;
        }
        f
    };
    let mut out = [[0.0f64; 15]; 21];
    for (m, &(i, j)) in MONOMIALS.iter().enumerate() {
        for (slot, &(p, q)) in DERIVS.iter().enumerate() {
            if p > i || q > j {
                continue;
            }
            let f = falling(i, p) * falling(j, q);
            out[m][slot] = f * xp[(i - p) as usize] * yp[(j - q) as usize]
                * inv_pow[(p + q) as usize];
        }
    }
    out
}

/// Value, gradient and Hessian of a smooth function at one point; the data
/// the Hermite interpolant consumes.
#[derive(Debug, Clone, Copy)]
pub struct SmoothPoint {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// Mesh plus everything derived from it that assembly, solving and error
/// estimation share: DOF layout, per-element geometry and shape functions,
/// and the quadrature rules.
pub struct FeSpace {
    pub mesh: Mesh,
    pub layout: DofLayout,
    pub geometries: Vec<ElementGeometry>,
    pub bases: Vec<ElementBasis>,
    pub tri_quad: TriangleQuadrature,
    pub edge_quad: EdgeQuadrature,
    locator: PointLocator,
}

impl FeSpace {
    /// Degree-10 triangle quadrature is exact for every polynomial integrand
    /// appearing with quintic elements; edges get a 10-point Gauss rule.
    pub fn new(mesh: Mesh) -> Result<Self, PlateError> {
        Self::with_quadrature(mesh, 10, 19)
    }

    pub fn with_quadrature(
        mesh: Mesh,
        tri_degree: usize,
        edge_degree: usize,
    ) -> Result<Self, PlateError> {
        let layout = DofLayout::new(&mesh);
        let mut geometries = Vec::with_capacity(mesh.n_triangles());
        let mut bases = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            geometries.push(mesh.element_geometry(t)?);
            bases.push(ElementBasis::new(&mesh, t)?);
        }
        let locator = PointLocator::new(&mesh);
        Ok(FeSpace {
            mesh,
            layout,
            geometries,
            bases,
            tri_quad: triangle_quadrature(tri_degree)?,
            edge_quad: edge_quadrature(edge_degree)?,
            locator,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }

    /// Extracts the local DOF vector of a global field on one triangle.
    pub fn local_dofs(&self, t: usize, global: &[f64]) -> [f64; 21] {
        let mut out = [0.0; 21];
        for (k, &g) in self.layout.triangle_dofs(t).iter().enumerate() {
            out[k] = global[g];
        }
        out
    }

    /// Physical quadrature nodes and weights of one triangle.
    pub fn quad_points(&self, t: usize) -> Vec<([f64; 2], f64)> {
        self.tri_quad.physical(&self.geometries[t].vertices)
    }

    /// Shape-function table at the triangle's quadrature nodes.
    pub fn shape_table(&self, t: usize) -> Vec<[FieldDerivs; 21]> {
        self.quad_points(t)
            .iter()
            .map(|&(x, _)| self.bases[t].eval(x))
            .collect()
    }

    /// Triangle containing the point, if any.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        self.locator.locate(&self.mesh, x)
    }

    /// Field value and derivatives at an arbitrary point of the domain.
    pub fn eval(&self, global: &[f64], x: [f64; 2]) -> Option<FieldDerivs> {
        let t = self.locate(x)?;
        let local = self.local_dofs(t, global);
        Some(self.bases[t].eval_field(x, &local))
    }

    /// Hermite interpolant: matches value, gradient and Hessian at vertices
    /// and the normal derivative at edge midpoints.
    pub fn interpolate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> SmoothPoint,
    {
        let mut dofs = vec![0.0; self.n_dofs()];
        for v in 0..self.mesh.n_vertices() {
            let p = self.mesh.vertex(v);
            let s = f(p[0], p[1]);
            dofs[self.layout.vertex_dof(v, 0)] = s.value;
            dofs[self.layout.vertex_dof(v, 1)] = s.grad[0];
            dofs[self.layout.vertex_dof(v, 2)] = s.grad[1];
            dofs[self.layout.vertex_dof(v, 3)] = s.hess[0];
            dofs[self.layout.vertex_dof(v, 4)] = s.hess[1];
            dofs[self.layout.vertex_dof(v, 5)] = s.hess[2];
        }
        for e in 0..self.mesh.n_edges() {
            let [a, b] = self.mesh.edge(e);
            let pa = self.mesh.vertex(a);
            let pb = self.mesh.vertex(b);
            let n = edge_dof_normal(pa, pb);
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let s = f(mid[0], mid[1]);
            dofs[self.layout.edge_dof(e)] = n[0] * s.grad[0] + n[1] * s.grad[1];
        }
        dofs
    }

    /// H² seminorm (squared integral of the Hessian) of a global DOF vector.
    pub fn h2_seminorm(&self, global: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let local = self.local_dofs(t, global);
            for (x, w) in self.quad_points(t) {
                let d = self.bases[t].eval_field(x, &local);
                total += w
                    * (d.hess[0] * d.hess[0]
                        + 2.0 * d.hess[1] * d.hess[1]
                        + d.hess[2] * d.hess[2]);
            }
        }
        total.sqrt()
    }
}

/// Uniform-grid bucket accelerator for point location.
struct PointLocator {
    min: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    fn new(mesh: &Mesh) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in mesh.vertices() {
            for k in 0..2 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        let n = (mesh.n_triangles() as f64).sqrt().ceil() as usize + 1;
        let cell = ((max[0] - min[0]).max(max[1] - min[1]) / n as f64).max(1e-12);
        let nx = ((max[0] - min[0]) / cell).ceil() as usize + 1;
        let ny = ((max[1] - min[1]) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangle(t);
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &v in &tri {
                let p = mesh.vertex(v);
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let i0 = ((lo[0] - min[0]) / cell).floor().max(0.0) as usize;
            let i1 = (((hi[0] - min[0]) / cell).floor() as usize).min(nx - 1);
            let j0 = ((lo[1] - min[1]) / cell).floor().max(0.0) as usize;
            let j1 = (((hi[1] - min[1]) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        PointLocator {
            min,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, mesh: &Mesh, x: [f64; 2]) -> Option<usize> {
        let i = ((x[0] - self.min[0]) / self.cell).floor();
        let j = ((x[1] - self.min[1]) / self.cell).floor();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        for &t in &self.buckets[j * self.nx + i] {
            if point_in_triangle(mesh, t, x) {
                return Some(t);
            }
        }
        None
    }
}

fn point_in_triangle(mesh: &Mesh, t: usize, x: [f64; 2]) -> bool {
    let tri = mesh.triangle(t);
    let v = [
        mesh.vertex(tri[0]),
        mesh.vertex(tri[1]),
        mesh.vertex(tri[2]),
    ];
    let area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
        - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
    let tol = -1e-12 * area2;
    for k in 0..3 {
        let a = v[k];
        let b = v[(k + 1) % 3];
        let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
        if cross < tol {
            return false;
        }
    }
    true
}
