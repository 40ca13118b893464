//! Residual a posteriori error estimation, maximum-strategy marking and the
//! adaptive solve loop.
//!
//! Per element the estimator collects the weighted interior residual
//! `h_K^2 ||A(u_h) - lambda_h - f||_K`, per interior edge the jump terms
//! `h_E^{3/2} ||[[V_n]]||_E` and `h_E^{1/2} ||[[M_nn]]||_E`, and two obstacle
//! terms accounting for the unknown contact boundary: the contact consistency
//! integral `((u_h - g + eps lambda_h)_+, lambda_h)_K` and the penetration
//! `(eps + h_K^4)^{-1/2} ||(g - u_h - eps lambda_h)_+||_K`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::argyris::FeSpace;
use crate::assembly::{contact_state, ContactState};
use crate::mesh::Mesh;
use crate::plate::{biharmonic, edge_jumps, PlateModel};
use crate::solver::{solve_contact, DiscreteSolution, ObstacleProblem};
use crate::PlateError;

/// Elementwise and edgewise estimator contributions plus the global values.
#[derive(Debug, Clone)]
pub struct ErrorBreakdown {
    /// Interior residual `eta_K` per element.
    pub eta_k: Vec<f64>,
    /// Edge residual `eta_E` per edge; zero on boundary edges, which do not
    /// contribute.
    pub eta_e: Vec<f64>,
    /// Contact consistency integral per element, nonnegative.
    pub contact_consistency: Vec<f64>,
    /// Penetration term `S_{K,eps}` per element.
    pub penetration: Vec<f64>,
    /// Marking indicator `E_K` per element.
    pub indicators: Vec<f64>,
    /// Global residual estimator `eta`.
    pub eta: f64,
    /// Global obstacle estimator `S`.
    pub s: f64,
}

impl ErrorBreakdown {
    /// The error measure `eta + S`.
    pub fn total(&self) -> f64 {
        self.eta + self.s
    }
}

/// `eta_K = h_K^2 ||A(u_h) - lambda_h - f||_{0,K}` with the reaction taken
/// pointwise at the quadrature nodes.
pub fn interior_residual(
    problem: &ObstacleProblem,
    space: &FeSpace,
    contact: &ContactState,
    dofs: &[f64],
    t: usize,
) -> f64 {
    let local = space.local_dofs(t, dofs);
    let mut norm2 = 0.0;
    for (q, (x, w)) in space.quad_points(t).into_iter().enumerate() {
        let d = space.bases[t].eval_field(x, &local);
        let residual = biharmonic(&problem.model, &d.fourth)
            - contact.reaction[t][q]
            - (problem.load)(x[0], x[1]);
        norm2 += w * residual * residual;
    }
    space.geometries[t].diameter.powi(4).sqrt() * norm2.sqrt()
}

/// `eta_E` from explicit local DOF vectors on the two incident triangles.
pub fn edge_residual_local(
    model: &PlateModel,
    space: &FeSpace,
    e: usize,
    t1: usize,
    local1: &[f64; 21],
    t2: usize,
    local2: &[f64; 21],
) -> f64 {
    let [a, b] = space.mesh.edge(e);
    let pa = space.mesh.vertex(a);
    let pb = space.mesh.vertex(b);
    let h_e = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
    let frame = |t: usize| {
        let tri = space.mesh.triangle(t);
        let local_edge = (0..3)
            .find(|&k| {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                (p == a && q == b) || (p == b && q == a)
            })
            .expect("edge belongs to triangle");
        let geo = &space.geometries[t];
        (geo.normals[local_edge], geo.tangents[local_edge])
    };
    let (n1, s1) = frame(t1);
    let (n2, s2) = frame(t2);
    let mut v_norm2 = 0.0;
    let mut m_norm2 = 0.0;
    for (x, w) in space.edge_quad.physical(pa, pb) {
        let d1 = space.bases[t1].eval_field(x, local1);
        let d2 = space.bases[t2].eval_field(x, local2);
        let (m_jump, v_jump) = edge_jumps(model, &d1, n1, s1, &d2, n2, s2);
        m_norm2 += w * m_jump * m_jump;
        v_norm2 += w * v_jump * v_jump;
    }
    (h_e.powi(3) * v_norm2 + h_e * m_norm2).sqrt()
}

/// `eta_E^2 = h_E^3 ||[[V_n]]||^2 + h_E ||[[M_nn]]||^2` on an interior edge.
pub fn edge_residual(
    model: &PlateModel,
    space: &FeSpace,
    dofs: &[f64],
    e: usize,
) -> Result<f64, PlateError> {
    let (t1, second) = space.mesh.edge_triangles(e);
    let t2 = second.ok_or_else(|| {
        PlateError::InvalidMesh(format!("edge {e} is a boundary edge; no jump is defined"))
    })?;
    let local1 = space.local_dofs(t1, dofs);
    let local2 = space.local_dofs(t2, dofs);
    Ok(edge_residual_local(
        model, space, e, t1, &local1, t2, &local2,
    ))
}

/// Contact consistency integral and penetration term of one element.
pub fn obstacle_terms(
    problem: &ObstacleProblem,
    space: &FeSpace,
    contact: &ContactState,
    dofs: &[f64],
    t: usize,
) -> (f64, f64) {
    let local = space.local_dofs(t, dofs);
    let eps = problem.epsilon;
    let mut consistency = 0.0;
    let mut penetration2 = 0.0;
    for (q, (x, w)) in space.quad_points(t).into_iter().enumerate() {
        let d = space.bases[t].eval_field(x, &local);
        let g = (problem.obstacle)(x[0], x[1]);
        let lambda = contact.reaction[t][q];
        consistency += w * (d.value - g + eps * lambda).max(0.0) * lambda;
        penetration2 += w * (g - d.value - eps * lambda).max(0.0).powi(2);
    }
    let h4 = space.geometries[t].diameter.powi(4);
    (consistency, (penetration2 / (eps + h4)).sqrt())
}

/// Evaluates the full estimator for a DOF vector on a space. The reaction is
/// recomputed pointwise from the displacement, so this works for any field,
/// not only outputs of the contact iteration.
pub fn estimate(
    problem: &ObstacleProblem,
    space: &FeSpace,
    dofs: &[f64],
) -> Result<ErrorBreakdown, PlateError> {
    let contact = contact_state(problem, space, dofs)?;
    Ok(estimate_with_contact(problem, space, &contact, dofs))
}

/// As [`estimate`], reusing an already computed contact state.
pub fn estimate_with_contact(
    problem: &ObstacleProblem,
    space: &FeSpace,
    contact: &ContactState,
    dofs: &[f64],
) -> ErrorBreakdown {
    let n_tri = space.mesh.n_triangles();
    let mut eta_k = Vec::with_capacity(n_tri);
    let mut contact_consistency = Vec::with_capacity(n_tri);
    let mut penetration = Vec::with_capacity(n_tri);
    for t in 0..n_tri {
        eta_k.push(interior_residual(problem, space, contact, dofs, t));
        let (c, p) = obstacle_terms(problem, space, contact, dofs, t);
        contact_consistency.push(c);
        penetration.push(p);
    }
    let mut eta_e = vec![0.0; space.mesh.n_edges()];
    for e in space.mesh.interior_edges() {
        eta_e[e] = edge_residual(&problem.model, space, dofs, e)
            .expect("interior edge");
    }
    let eta2: f64 = eta_k.iter().map(|v| v * v).sum::<f64>()
        + eta_e.iter().map(|v| v * v).sum::<f64>();
    let s2: f64 = contact_consistency.iter().sum::<f64>()
        + penetration.iter().map(|v| v * v).sum::<f64>();
    // E_K^2 = eta_K^2 + 1/2 sum of edge terms + contact terms.
    let mut indicators = Vec::with_capacity(n_tri);
    for t in 0..n_tri {
        let mut e2 = eta_k[t] * eta_k[t] + contact_consistency[t] + penetration[t] * penetration[t];
        for &e in &space.mesh.triangle_edges(t) {
            if !space.mesh.is_boundary_edge(e) {
                e2 += 0.5 * eta_e[e] * eta_e[e];
            }
        }
        indicators.push(e2.sqrt());
    }
    ErrorBreakdown {
        eta_k,
        eta_e,
        contact_consistency,
        penetration,
        indicators,
        eta: eta2.sqrt(),
        s: s2.max(0.0).sqrt(),
    }
}

/// Maximum strategy: every element with `E_K >= theta * max E_K`. The
/// comparison is non-strict so the maximiser is always marked, even under
/// exact ties.
pub fn mark_elements(indicators: &[f64], theta: f64) -> Result<BTreeSet<usize>, PlateError> {
    if !(0.0..1.0).contains(&theta) || theta == 0.0 {
        return Err(PlateError::InvalidProblem(format!(
            "marking parameter theta must lie in (0, 1), got {theta}"
        )));
    }
    if indicators.is_empty() {
        return Err(PlateError::InvalidProblem(
            "cannot mark an empty indicator set".into(),
        ));
    }
    let max = indicators.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(indicators
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= theta * max)
        .map(|(t, _)| t)
        .collect())
}

/// Settings of the adaptive loop.
#[derive(Debug, Clone)]
pub struct AdaptiveOptions {
    /// Maximum-strategy marking parameter.
    pub theta: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { theta: 0.5 }
    }
}

/// One entry of the adaptive history: the solve on mesh `j`, its estimator
/// and the elements marked for the next refinement.
pub struct AdaptiveStep {
    pub solution: DiscreteSolution,
    pub breakdown: ErrorBreakdown,
    /// Free DOFs after constraint elimination.
    pub n_free_dofs: usize,
    pub marked: BTreeSet<usize>,
}

impl AdaptiveStep {
    pub fn mesh(&self) -> &Mesh {
        &self.solution.space.mesh
    }
}

/// A failure part-way through the adaptive loop, carrying the completed
/// steps so callers can persist the partial history.
pub struct AdaptiveFailure {
    pub error: PlateError,
    pub completed: Vec<AdaptiveStep>,
}

impl std::fmt::Debug for AdaptiveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "AdaptiveFailure {{ error: {:?}, completed: {} steps }}",
            self.error,
            self.completed.len()
        )
    }
}

impl std::fmt::Display for AdaptiveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "adaptive solve failed after {} completed steps: {}",
            self.completed.len(),
            self.error
        )
    }
}

impl std::error::Error for AdaptiveFailure {}

/// Solve - estimate - mark - refine, `steps` times, starting from the given
/// mesh. Step `j` solves on the mesh produced by `j` refinements.
pub fn adaptive_solve(
    problem: &ObstacleProblem,
    initial_mesh: Mesh,
    steps: usize,
    options: &AdaptiveOptions,
) -> Result<Vec<AdaptiveStep>, AdaptiveFailure> {
    let mut history: Vec<AdaptiveStep> = Vec::with_capacity(steps);
    let fail = |error: PlateError, completed: Vec<AdaptiveStep>| AdaptiveFailure {
        error,
        completed,
    };
    if steps == 0 {
        return Err(fail(
            PlateError::InvalidProblem("need at least one adaptive step".into()),
            history,
        ));
    }
    let mut mesh = initial_mesh;
    for step in 0..steps {
        let space = match FeSpace::new(mesh.clone()) {
            Ok(s) => Arc::new(s),
            Err(e) => return Err(fail(e, history)),
        };
        let solution = match solve_contact(problem, space.clone()) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, history)),
        };
        let breakdown =
            estimate_with_contact(problem, &space, &solution.contact, &solution.dofs);
        let marked = match mark_elements(&breakdown.indicators, options.theta) {
            Ok(m) => m,
            Err(e) => return Err(fail(e, history)),
        };
        let n_free_dofs = solution.constraints.n_reduced();
        let next = if step + 1 < steps {
            match mesh.rgb_refine(&marked) {
                Ok(m) => Some(m),
                Err(e) => return Err(fail(e, history)),
            }
        } else {
            None
        };
        history.push(AdaptiveStep {
            solution,
            breakdown,
            n_free_dofs,
            marked,
        });
        if let Some(next) = next {
            mesh = next;
        }
    }
    Ok(history)
}

/// Convergence history CSV: one row per adaptive (or uniform) step.
pub fn history_csv(steps: &[AdaptiveStep]) -> String {
    let mut out = String::from("step,N,eta,S,eta_plus_S,solver_iterations,contact_area_fraction\n");
    for (j, step) in steps.iter().enumerate() {
        let frac = step
            .solution
            .contact
            .contact_area_fraction(&step.solution.space);
        let _ = writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.12e},{},{:.12e}",
            j,
            step.n_free_dofs,
            step.breakdown.eta,
            step.breakdown.s,
            step.breakdown.total(),
            step.solution.iterations,
            frac
        );
    }
    out
}
