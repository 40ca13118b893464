//! Global assembly: clamped boundary conditions as a DOF reduction, the
//! stabilised contact system for a frozen contact set, and the sparse direct
//! solve.
//!
//! The contact force has been eliminated elementwise, so for a given contact
//! indicator the problem is linear: on contact points the bilinear form gains
//! penalty and consistency terms weighted by `1/(eps + alpha h^4)`, elsewhere
//! only the stabilisation `-alpha h^4 (A u, A v)` remains. Contact is decided
//! pointwise at quadrature nodes, so the contact region may cut through
//! elements.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::argyris::FeSpace;
use crate::plate::{biharmonic, energy_density};
use crate::solver::ObstacleProblem;
use crate::PlateError;

/// What happens to one global DOF under the clamped boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
enum DofRule {
    /// Pinned to a prescribed value (zero for homogeneous clamping).
    Fixed,
    /// Scaled copy of a reduced unknown; interior DOFs have weight 1, the
    /// Hessian block of a smooth boundary vertex shares one unknown with
    /// direction weights `(n_x^2, n_x n_y, n_y^2)`.
    Reduced { index: usize, weight: f64 },
}

/// Linear map between the reduced unknowns of the solver and the full DOF
/// vector of the Argyris space.
#[derive(Debug, Clone)]
pub struct Constraints {
    rules: Vec<DofRule>,
    fixed_values: Vec<f64>,
    n_reduced: usize,
}

impl Constraints {
    /// Clamped plate: on the whole boundary the deflection and the normal
    /// derivative vanish. At boundary vertices this pins value, gradient and
    /// the tangential second derivatives `u_ss`, `u_sn` of every incident
    /// boundary edge (the full Hessian at corners); boundary edge midpoint
    /// DOFs are pinned as well.
    pub fn clamped(space: &FeSpace) -> Self {
        let mesh = &space.mesh;
        let n_dofs = space.n_dofs();
        // Tangent directions of boundary edges at each boundary vertex.
        let mut directions: Vec<Vec<[f64; 2]>> = vec![Vec::new(); mesh.n_vertices()];
        let mut boundary_edge = vec![false; mesh.n_edges()];
        for e in 0..mesh.n_edges() {
            if mesh.is_boundary_edge(e) {
                boundary_edge[e] = true;
                let [a, b] = mesh.edge(e);
                let pa = mesh.vertex(a);
                let pb = mesh.vertex(b);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                let t = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
                directions[a].push(t);
                directions[b].push(t);
            }
        }

        let mut rules = vec![DofRule::Fixed; n_dofs];
        let mut n_reduced = 0usize;
        for v in 0..mesh.n_vertices() {
            if !mesh.is_boundary_vertex(v) {
                for comp in 0..6 {
                    rules[space.layout.vertex_dof(v, comp)] = DofRule::Reduced {
                        index: n_reduced,
                        weight: 1.0,
                    };
                    n_reduced += 1;
                }
                continue;
            }
            // Value and gradient always pinned on the boundary.
            let dirs = &directions[v];
            let corner = dirs.iter().any(|d| {
                let first = dirs[0];
                (first[0] * d[1] - first[1] * d[0]).abs() > 1e-12
            });
            if corner {
                continue; // whole block stays Fixed
            }
            // Smooth boundary vertex: u_ss = u_sn = 0 leaves the Hessian a
            // multiple of n (x) n.
            let t = dirs[0];
            let n = [-t[1], t[0]];
            let weights = [n[0] * n[0], n[0] * n[1], n[1] * n[1]];
            let mut used = false;
            for (k, &w) in weights.iter().enumerate() {
                if w.abs() > 1e-12 {
                    rules[space.layout.vertex_dof(v, 3 + k)] = DofRule::Reduced {
                        index: n_reduced,
                        weight: w,
                    };
                    used = true;
                }
            }
            if used {
                n_reduced += 1;
            }
        }
        for e in 0..mesh.n_edges() {
            if !boundary_edge[e] {
                rules[space.layout.edge_dof(e)] = DofRule::Reduced {
                    index: n_reduced,
                    weight: 1.0,
                };
                n_reduced += 1;
            }
        }
        Constraints {
            rules,
            fixed_values: vec![0.0; n_dofs],
            n_reduced,
        }
    }

    /// Leaves every DOF free; used by tests that work without boundary
    /// conditions.
    pub fn unconstrained(n_dofs: usize) -> Self {
        Constraints {
            rules: (0..n_dofs)
                .map(|i| DofRule::Reduced {
                    index: i,
                    weight: 1.0,
                })
                .collect(),
            fixed_values: vec![0.0; n_dofs],
            n_reduced: n_dofs,
        }
    }

    pub fn n_reduced(&self) -> usize {
        self.n_reduced
    }

    pub fn n_fixed(&self) -> usize {
        self.rules.iter().filter(|r| matches!(r, DofRule::Fixed)).count()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        matches!(self.rules[dof], DofRule::Fixed)
    }

    /// Prescribes a value for a fixed DOF (inhomogeneous data). Ignored for
    /// free DOFs.
    pub fn set_fixed_value(&mut self, dof: usize, value: f64) {
        self.fixed_values[dof] = value;
    }

    /// Expands a reduced solution vector to the full DOF vector.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.rules
            .iter()
            .enumerate()
            .map(|(dof, rule)| match rule {
                DofRule::Fixed => self.fixed_values[dof],
                DofRule::Reduced { index, weight } => weight * reduced[*index],
            })
            .collect()
    }
}

/// Pointwise contact data at the quadrature nodes of every triangle.
#[derive(Debug, Clone)]
pub struct ContactState {
    /// `reaction[t][q] = F(w)` at quadrature node `q` of triangle `t`; the
    /// contact indicator is `F > 0`.
    pub reaction: Vec<Vec<f64>>,
}

impl ContactState {
    pub fn no_contact(space: &FeSpace) -> Self {
        ContactState {
            reaction: (0..space.mesh.n_triangles())
                .map(|_| vec![0.0; space.tri_quad.points.len()])
                .collect(),
        }
    }

    /// Fraction of the domain area currently in contact.
    pub fn contact_area_fraction(&self, space: &FeSpace) -> f64 {
        let mut contact = 0.0;
        let mut total = 0.0;
        for t in 0..space.mesh.n_triangles() {
            for ((_, w), &f) in space.quad_points(t).iter().zip(&self.reaction[t]) {
                total += w;
                if f > 0.0 {
                    contact += w;
                }
            }
        }
        contact / total
    }

    /// Bit pattern of the contact indicator, used to detect cycling of the
    /// fixed-point iteration.
    pub fn signature(&self) -> Vec<u64> {
        let mut bits = Vec::new();
        let mut word = 0u64;
        let mut filled = 0;
        for elem in &self.reaction {
            for &f in elem {
                word = (word << 1) | u64::from(f > 0.0);
                filled += 1;
                if filled == 64 {
                    bits.push(word);
                    word = 0;
                    filled = 0;
                }
            }
        }
        if filled > 0 {
            bits.push(word);
        }
        bits
    }
}

/// Evaluates the eliminated reaction force
/// `F(w) = (g - w + alpha h^4 (A(w) - f))_+ / (eps + alpha h^4)` pointwise at
/// every quadrature node.
pub fn contact_state(
    problem: &ObstacleProblem,
    space: &FeSpace,
    w: &[f64],
) -> Result<ContactState, PlateError> {
    if problem.epsilon == 0.0 && problem.alpha == 0.0 {
        return Err(PlateError::InvalidProblem(
            "epsilon and alpha cannot both vanish".into(),
        ));
    }
    let mut reaction = Vec::with_capacity(space.mesh.n_triangles());
    for t in 0..space.mesh.n_triangles() {
        let h4 = space.geometries[t].diameter.powi(4);
        let denom = problem.epsilon + problem.alpha * h4;
        let local = space.local_dofs(t, w);
        let mut per_point = Vec::with_capacity(space.tri_quad.points.len());
        for (x, _) in space.quad_points(t) {
            let d = space.bases[t].eval_field(x, &local);
            let a_w = biharmonic(&problem.model, &d.fourth);
            let g = (problem.obstacle)(x[0], x[1]);
            let f = (problem.load)(x[0], x[1]);
            let raw = g - d.value + problem.alpha * h4 * (a_w - f);
            per_point.push((raw / denom).max(0.0));
        }
        reaction.push(per_point);
    }
    Ok(ContactState { reaction })
}

/// Sparse symmetric system over the reduced DOFs.
pub struct LinearSystem {
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
}

/// Assembles the stabilised contact system for a frozen contact indicator.
pub fn assemble_nitsche(
    problem: &ObstacleProblem,
    space: &FeSpace,
    contact: &ContactState,
    constraints: &Constraints,
) -> Result<LinearSystem, PlateError> {
    if problem.epsilon == 0.0 && problem.alpha == 0.0 {
        return Err(PlateError::InvalidProblem(
            "epsilon and alpha cannot both vanish".into(),
        ));
    }
    let model = &problem.model;
    let eps = problem.epsilon;
    let n = constraints.n_reduced();
    let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let mut rhs = vec![0.0f64; n];

    for t in 0..space.mesh.n_triangles() {
        let h4 = space.geometries[t].diameter.powi(4);
        let ah4 = problem.alpha * h4;
        let denom = eps + ah4;
        let mut elem = [[0.0f64; 21]; 21];
        let mut load = [0.0f64; 21];
        for (q, (x, w)) in space.quad_points(t).into_iter().enumerate() {
            let shapes = space.bases[t].eval(x);
            let mut a_of = [0.0f64; 21];
            for j in 0..21 {
                a_of[j] = biharmonic(model, &shapes[j].fourth);
            }
            let f = (problem.load)(x[0], x[1]);
            let in_contact = contact.reaction[t][q] > 0.0;
            for i in 0..21 {
                for j in 0..21 {
                    let mut v = energy_density(model, &shapes[i].hess, &shapes[j].hess);
                    if in_contact {
                        v += shapes[i].value * shapes[j].value / denom
                            - ah4 / denom
                                * (a_of[i] * shapes[j].value + shapes[i].value * a_of[j])
                            - eps * ah4 / denom * a_of[i] * a_of[j];
                    } else {
                        v -= ah4 * a_of[i] * a_of[j];
                    }
                    elem[i][j] += w * v;
                }
            }
            if in_contact {
                let g = (problem.obstacle)(x[0], x[1]);
                for i in 0..21 {
                    load[i] += w
                        * (f * shapes[i].value + g * shapes[i].value / denom
                            - ah4 / denom * g * a_of[i]
                            - ah4 / denom * f * shapes[i].value
                            - eps * ah4 / denom * f * a_of[i]);
                }
            } else {
                for i in 0..21 {
                    load[i] += w * (f * shapes[i].value - ah4 * f * a_of[i]);
                }
            }
        }
        // The energy part is only symmetric up to rounding; make it exact.
        for i in 0..21 {
            for j in (i + 1)..21 {
                let s = 0.5 * (elem[i][j] + elem[j][i]);
                elem[i][j] = s;
                elem[j][i] = s;
            }
        }
        scatter(
            space,
            constraints,
            t,
            &elem,
            &load,
            &mut triplets,
            &mut rhs,
        );
    }
    let matrix = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| PlateError::SolveFailure(format!("assembly failed: {e:?}")))?;
    Ok(LinearSystem { matrix, rhs })
}

fn scatter(
    space: &FeSpace,
    constraints: &Constraints,
    t: usize,
    elem: &[[f64; 21]; 21],
    load: &[f64; 21],
    triplets: &mut Vec<Triplet<usize, usize, f64>>,
    rhs: &mut [f64],
) {
    let dofs = space.layout.triangle_dofs(t);
    let rules: Vec<DofRule> = dofs.iter().map(|&g| constraints.rules[g]).collect();
    for i in 0..21 {
        let DofRule::Reduced {
            index: ri,
            weight: wi,
        } = rules[i]
        else {
            continue;
        };
        rhs[ri] += wi * load[i];
        for j in 0..21 {
            match rules[j] {
                DofRule::Reduced {
                    index: rj,
                    weight: wj,
                } => {
                    triplets.push(Triplet::new(ri, rj, wi * wj * elem[i][j]));
                }
                DofRule::Fixed => {
                    let value = constraints.fixed_values[dofs[j]];
                    if value != 0.0 {
                        rhs[ri] -= wi * elem[i][j] * value;
                    }
                }
            }
        }
    }
}

/// Strain energy inner product `a(u, v)` of two full DOF vectors.
pub fn energy_inner_product(
    space: &FeSpace,
    model: &crate::plate::PlateModel,
    u: &[f64],
    v: &[f64],
) -> f64 {
    let mut total = 0.0;
    for t in 0..space.mesh.n_triangles() {
        let lu = space.local_dofs(t, u);
        let lv = space.local_dofs(t, v);
        for (x, w) in space.quad_points(t) {
            let du = space.bases[t].eval_field(x, &lu);
            let dv = space.bases[t].eval_field(x, &lv);
            total += w * energy_density(model, &du.hess, &dv.hess);
        }
    }
    total
}

/// Direct sparse solve with a residual check; returns the reduced solution.
pub fn solve(system: &LinearSystem) -> Result<Vec<f64>, PlateError> {
    let n = system.rhs.len();
    let rhs_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let lu = system
        .matrix
        .sp_lu()
        .map_err(|e| PlateError::SolveFailure(format!("sparse LU failed: {e:?}")))?;
    let mut x = faer::Mat::from_fn(n, 1, |i, _| system.rhs[i]);
    lu.solve_in_place(x.as_mut());
    let solution: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    // Residual check guards against near-singular systems.
    let mut residual = vec![0.0f64; n];
    residual.copy_from_slice(&system.rhs);
    for j in 0..n {
        let col = system.matrix.val_of_col(j);
        let rows = system.matrix.row_idx_of_col(j);
        for (i, &v) in rows.zip(col.iter()) {
            residual[i] -= v * solution[j];
        }
    }
    let res_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res_norm > 1e-10 * rhs_norm {
        return Err(PlateError::SolveFailure(format!(
            "relative residual {:.3e} exceeds 1e-10; condition estimate {:.3e}",
            res_norm / rhs_norm,
            condition_estimate(&system.matrix, &lu)
        )));
    }
    Ok(solution)
}

/// Rough 2-norm condition estimate by power iteration on `A` and `A^{-1}`.
fn condition_estimate(
    matrix: &SparseColMat<usize, f64>,
    lu: &faer::sparse::linalg::solvers::Lu<usize, f64>,
) -> f64 {
    let n = matrix.ncols();
    let matvec = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for j in 0..n {
            let col = matrix.val_of_col(j);
            let rows = matrix.row_idx_of_col(j);
            for (i, &val) in rows.zip(col.iter()) {
                out[i] += val * v[j];
            }
        }
        out
    };
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        norm
    };
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5).collect();
    normalize(&mut v);
    let mut sigma_max = 0.0;
    for _ in 0..8 {
        let mut w = matvec(&v);
        sigma_max = normalize(&mut w);
        v = w;
    }
    let mut u: Vec<f64> = (0..n).map(|i| ((i * 40503) % 997) as f64 / 997.0 - 0.5).collect();
    normalize(&mut u);
    let mut inv_norm = 0.0;
    for _ in 0..8 {
        let mut m = faer::Mat::from_fn(n, 1, |i, _| u[i]);
        lu.solve_in_place(m.as_mut());
        let mut w: Vec<f64> = (0..n).map(|i| m[(i, 0)]).collect();
        inv_norm = normalize(&mut w);
        u = w;
    }
    sigma_max * inv_norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::plate::PlateModel;
    use crate::solver::ObstacleProblem;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize) -> FeSpace {
        FeSpace::new(Mesh::structured_unit_square(n).unwrap()).unwrap()
    }

    fn rigid_problem() -> ObstacleProblem {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut p = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
            -100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
        });
        p.epsilon = 0.0;
        p.alpha = 1e-5;
        p
    }

    #[test]
    fn clamped_constraint_counts_match_enumeration() {
        // n=2 square: 4 corners x 6 + 4 smooth boundary vertices x 5 + 8
        // boundary edges = 52 fixed DOFs out of 70.
        let sp = space(2);
        let c = Constraints::clamped(&sp);
        assert_eq!(c.n_fixed(), 52);
        assert_eq!(c.n_reduced(), 18);

        // Independent enumeration oracle.
        let mesh = &sp.mesh;
        let mut fixed = 0;
        for v in 0..mesh.n_vertices() {
            if mesh.is_boundary_vertex(v) {
                let p = mesh.vertex(v);
                let corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
                fixed += if corner { 6 } else { 5 };
            }
        }
        for e in 0..mesh.n_edges() {
            if mesh.is_boundary_edge(e) {
                fixed += 1;
            }
        }
        assert_eq!(c.n_fixed(), fixed);
    }

    #[test]
    fn axis_aligned_hessian_rules() {
        // On a horizontal boundary edge of the unit square, u_xx and u_xy are
        // pinned and u_yy stays free.
        let sp = space(2);
        let c = Constraints::clamped(&sp);
        let mesh = &sp.mesh;
        for v in 0..mesh.n_vertices() {
            let p = mesh.vertex(v);
            let on_bottom = p[1] == 0.0 && p[0] > 0.0 && p[0] < 1.0;
            if on_bottom {
                assert!(c.is_fixed(sp.layout.vertex_dof(v, 3))); // u_xx
                assert!(c.is_fixed(sp.layout.vertex_dof(v, 4))); // u_xy
                assert!(!c.is_fixed(sp.layout.vertex_dof(v, 5))); // u_yy
            }
            let corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
            if corner {
                for comp in 0..6 {
                    assert!(c.is_fixed(sp.layout.vertex_dof(v, comp)));
                }
            }
        }
    }

    #[test]
    fn constrained_fields_vanish_on_boundary() {
        let sp = space(2);
        let c = Constraints::clamped(&sp);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reduced: Vec<f64> = (0..c.n_reduced()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let full = c.expand(&reduced);
        // Sample random boundary points: value and normal derivative vanish.
        for k in 0..20 {
            let s = (k as f64 + 0.5) / 20.0;
            for (point, normal) in [
                ([s, 0.0], [0.0, -1.0]),
                ([s, 1.0], [0.0, 1.0]),
                ([0.0, s], [-1.0, 0.0]),
                ([1.0, s], [1.0, 0.0]),
            ] {
                let t = sp.locate(point).unwrap();
                let local = sp.local_dofs(t, &full);
                let d = sp.bases[t].eval_field(point, &local);
                assert!(d.value.abs() < 1e-10, "trace {}", d.value);
                let dn = d.grad[0] * normal[0] + d.grad[1] * normal[1];
                assert!(dn.abs() < 1e-10, "normal derivative {dn}");
            }
        }
    }

    #[test]
    fn deep_obstacle_has_no_contact() {
        let sp = space(2);
        let mut p = rigid_problem();
        p.obstacle = std::sync::Arc::new(|_, _| -1e6);
        let w = vec![0.0; sp.n_dofs()];
        let state = contact_state(&p, &sp, &w).unwrap();
        assert!(state.reaction.iter().flatten().all(|&f| f == 0.0));
        assert_eq!(state.contact_area_fraction(&sp), 0.0);
    }

    #[test]
    fn reaction_direct_substitution() {
        // eps=0, alpha=1, h=sqrt(2) on the n=1 mesh... use a custom problem
        // where the formula is hand-checkable: g=1, w=0, A(w)=0, f=0 gives
        // F = 1 / (eps + alpha h^4) * 1.
        let sp = space(1);
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut p = ObstacleProblem::new(model, |_, _| 0.0, |_, _| 1.0);
        p.epsilon = 0.0;
        p.alpha = 1.0;
        let w = vec![0.0; sp.n_dofs()];
        let state = contact_state(&p, &sp, &w).unwrap();
        let h4 = sp.geometries[0].diameter.powi(4);
        for &f in &state.reaction[0] {
            assert!((f - 1.0 / h4).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_eps_and_alpha_rejected() {
        let sp = space(1);
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut p = ObstacleProblem::new(model, |_, _| 0.0, |_, _| 0.0);
        p.epsilon = 0.0;
        p.alpha = 0.0;
        let w = vec![0.0; sp.n_dofs()];
        assert!(contact_state(&p, &sp, &w).is_err());
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let sp = space(2);
        let p = rigid_problem();
        let c = Constraints::clamped(&sp);
        // Random contact state exercises every term.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut state = ContactState::no_contact(&sp);
        for elem in &mut state.reaction {
            for f in elem.iter_mut() {
                if rng.random_bool(0.5) {
                    *f = 1.0;
                }
            }
        }
        let sys = assemble_nitsche(&p, &sp, &state, &c).unwrap();
        let dense = sys.matrix.to_dense();
        let mut max = 0.0f64;
        let mut max_asym = 0.0f64;
        for i in 0..c.n_reduced() {
            for j in 0..c.n_reduced() {
                max = max.max(dense[(i, j)].abs());
                max_asym = max_asym.max((dense[(i, j)] - dense[(j, i)]).abs());
            }
        }
        assert!(max_asym <= 1e-10 * max);
    }

    #[test]
    fn no_contact_system_matches_term_oracle() {
        // With an empty contact set the system must equal
        // a(u, v) - alpha h^4 (A u, A v), rhs (f, v) - alpha h^4 (f, A v),
        // assembled here independently term by term with a denser rule.
        let mesh = Mesh::structured_unit_square(1).unwrap();
        let sp = FeSpace::new(mesh.clone()).unwrap();
        let dense = FeSpace::with_quadrature(mesh, 12, 19).unwrap();
        let p = rigid_problem();
        let c = Constraints::unconstrained(sp.n_dofs());
        let state = ContactState::no_contact(&sp);
        let sys = assemble_nitsche(&p, &sp, &state, &c).unwrap();
        let got = sys.matrix.to_dense();

        let model = &p.model;
        let n = sp.n_dofs();
        let mut want = vec![vec![0.0f64; n]; n];
        let mut want_rhs = vec![0.0f64; n];
        for t in 0..dense.mesh.n_triangles() {
            let h4 = dense.geometries[t].diameter.powi(4);
            let dofs = dense.layout.triangle_dofs(t);
            for (x, w) in dense.quad_points(t) {
                let shapes = dense.bases[t].eval(x);
                let f = (p.load)(x[0], x[1]);
                for i in 0..21 {
                    let ai = crate::plate::biharmonic(model, &shapes[i].fourth);
                    want_rhs[dofs[i]] += w * (f * shapes[i].value - p.alpha * h4 * f * ai);
                    for j in 0..21 {
                        let aj = crate::plate::biharmonic(model, &shapes[j].fourth);
                        want[dofs[i]][dofs[j]] += w
                            * (crate::plate::energy_density(
                                model,
                                &shapes[i].hess,
                                &shapes[j].hess,
                            ) - p.alpha * h4 * ai * aj);
                    }
                }
            }
        }
        let scale = want
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        for i in 0..n {
            assert!((sys.rhs[i] - want_rhs[i]).abs() < 1e-9 * scale);
            for j in 0..n {
                assert!(
                    (got[(i, j)] - want[i][j]).abs() < 1e-9 * scale,
                    "entry ({i}, {j}): {} vs {}",
                    got[(i, j)],
                    want[i][j]
                );
            }
        }
    }

    #[test]
    fn contact_terms_match_term_oracle() {
        // Full contact on one element, eps = 0: each stabilised term is
        // assembled independently and summed.
        let mesh = Mesh::from_vertices_triangles(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let sp = FeSpace::new(mesh.clone()).unwrap();
        let dense = FeSpace::with_quadrature(mesh, 12, 19).unwrap();
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut p = ObstacleProblem::new(model, |x, y| x - 2.0 * y, |x, y| x * y);
        p.epsilon = 0.0;
        p.alpha = 1e-2;
        let c = Constraints::unconstrained(sp.n_dofs());
        let mut state = ContactState::no_contact(&sp);
        state.reaction[0].iter_mut().for_each(|f| *f = 1.0);
        let sys = assemble_nitsche(&p, &sp, &state, &c).unwrap();
        let got = sys.matrix.to_dense();

        let h4 = dense.geometries[0].diameter.powi(4);
        let ah4 = p.alpha * h4;
        let n = sp.n_dofs();
        let map = dense.layout.triangle_dofs(0);
        let mut mass = vec![vec![0.0f64; n]; n];
        let mut cross = vec![vec![0.0f64; n]; n];
        let mut energy = vec![vec![0.0f64; n]; n];
        let mut rhs_g = vec![0.0f64; n];
        let mut rhs_f = vec![0.0f64; n];
        for (x, w) in dense.quad_points(0) {
            let shapes = dense.bases[0].eval(x);
            let g = (p.obstacle)(x[0], x[1]);
            let f = (p.load)(x[0], x[1]);
            for i in 0..21 {
                let ai = crate::plate::biharmonic(&model, &shapes[i].fourth);
                rhs_g[map[i]] += w * (g / ah4 * shapes[i].value - g * ai);
                rhs_f[map[i]] += w * (f * shapes[i].value - f * shapes[i].value);
                for j in 0..21 {
                    let aj = crate::plate::biharmonic(&model, &shapes[j].fourth);
                    mass[map[i]][map[j]] += w * shapes[i].value * shapes[j].value / ah4;
                    cross[map[i]][map[j]] += w * (ai * shapes[j].value + shapes[i].value * aj);
                    energy[map[i]][map[j]] += w
                        * crate::plate::energy_density(&model, &shapes[i].hess, &shapes[j].hess);
                }
            }
        }
        let scale = mass.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        for i in 0..n {
            let want_rhs = rhs_g[i] + rhs_f[i];
            assert!(
                (sys.rhs[i] - want_rhs).abs() < 1e-9 * scale,
                "rhs {i}: {} vs {}",
                sys.rhs[i],
                want_rhs
            );
            for j in 0..n {
                // eps = 0: a + (1/(alpha h^4)) (u, v) - [(A u, v) + (u, A v)];
                // the (A u, A v) terms drop since eps * ... = 0 and chi = 1.
                let want = energy[i][j] + mass[i][j] - cross[i][j];
                assert!(
                    (got[(i, j)] - want).abs() < 1e-9 * scale,
                    "entry ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn eps_limit_continuity() {
        // The entry perturbation is of order eps / (alpha h^4); alpha = 1 on
        // the n = 4 mesh makes the 1e-9 bound meaningful.
        let sp = space(4);
        let c = Constraints::clamped(&sp);
        let mut state = ContactState::no_contact(&sp);
        state.reaction.iter_mut().for_each(|e| e.iter_mut().for_each(|f| *f = 1.0));
        let mut p0 = rigid_problem();
        p0.epsilon = 0.0;
        p0.alpha = 1.0;
        let mut p1 = rigid_problem();
        p1.epsilon = 1e-12;
        p1.alpha = 1.0;
        let s0 = assemble_nitsche(&p0, &sp, &state, &c).unwrap();
        let s1 = assemble_nitsche(&p1, &sp, &state, &c).unwrap();
        let d0 = s0.matrix.to_dense();
        let d1 = s1.matrix.to_dense();
        let scale = (0..c.n_reduced())
            .flat_map(|i| (0..c.n_reduced()).map(move |j| (i, j)))
            .fold(0.0f64, |a, (i, j)| a.max(d0[(i, j)].abs()));
        for i in 0..c.n_reduced() {
            for j in 0..c.n_reduced() {
                assert!((d0[(i, j)] - d1[(i, j)]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn rhs_scales_linearly_with_load_and_obstacle() {
        let sp = space(2);
        let c = Constraints::clamped(&sp);
        let mut state = ContactState::no_contact(&sp);
        state.reaction.iter_mut().for_each(|e| e.iter_mut().for_each(|f| *f = 1.0));
        let p1 = rigid_problem();
        let model = p1.model;
        let mut p2 = ObstacleProblem::new(model, |_, _| -30.0, |x, y| {
            -300.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
        });
        p2.epsilon = p1.epsilon;
        p2.alpha = p1.alpha;
        let s1 = assemble_nitsche(&p1, &sp, &state, &c).unwrap();
        let s2 = assemble_nitsche(&p2, &sp, &state, &c).unwrap();
        let scale = s1.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for i in 0..c.n_reduced() {
            assert!((s2.rhs[i] - 3.0 * s1.rhs[i]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn solver_identity_and_random_spd() {
        // Identity system returns the rhs.
        let n = 10;
        let trips: Vec<Triplet<usize, usize, f64>> =
            (0..n).map(|i| Triplet::new(i, i, 1.0)).collect();
        let matrix = SparseColMat::try_new_from_triplets(n, n, &trips).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let sys = LinearSystem {
            matrix,
            rhs: rhs.clone(),
        };
        let x = solve(&sys).unwrap();
        for i in 0..n {
            assert!((x[i] - rhs[i]).abs() < 1e-14);
        }

        // Random SPD system: residual below 1e-10.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 50;
        let mut a = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = rng.random_range(-1.0..1.0);
            }
        }
        // A^T A + I is SPD.
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut v = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    v += a[k][i] * a[k][j];
                }
                trips.push(Triplet::new(i, j, v));
            }
        }
        let matrix = SparseColMat::try_new_from_triplets(n, n, &trips).unwrap();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sys = LinearSystem { matrix, rhs };
        assert!(solve(&sys).is_ok());
    }
}
