//! Contact fixed-point iteration: repeated linear solves with the contact
//! set frozen at the previous iterate, plus evaluators and plain-text export
//! of the discrete solution.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::argyris::FeSpace;
use crate::assembly::{
    assemble_nitsche, contact_state, energy_inner_product, solve, Constraints, ContactState,
};
use crate::plate::{biharmonic, PlateModel};
use crate::PlateError;

/// Pointwise data callable on the domain.
pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Problem data: load, obstacle, obstacle compliance, stabilisation and the
/// stopping rule of the contact iteration.
#[derive(Clone)]
pub struct ObstacleProblem {
    pub model: PlateModel,
    /// Distributed load `f`.
    pub load: ScalarField,
    /// Obstacle height `g`; contact enforces `u >= g` (up to compliance).
    pub obstacle: ScalarField,
    /// Obstacle compliance `eps >= 0`; zero means rigid.
    pub epsilon: f64,
    /// Stabilisation parameter `alpha > 0`.
    pub alpha: f64,
    /// Energy-norm stopping tolerance of the contact iteration.
    pub tol: f64,
    /// Iteration safeguard.
    pub max_iterations: usize,
}

impl ObstacleProblem {
    /// Rigid obstacle with the reference parameters `alpha = 1e-5`,
    /// `tol = 1e-10`; adjust fields afterwards as needed.
    pub fn new(
        model: PlateModel,
        load: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        obstacle: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ObstacleProblem {
            model,
            load: Arc::new(load),
            obstacle: Arc::new(obstacle),
            epsilon: 0.0,
            alpha: 1e-5,
            tol: 1e-10,
            max_iterations: 50,
        }
    }

    pub fn validate(&self) -> Result<(), PlateError> {
        if self.epsilon < 0.0 {
            return Err(PlateError::InvalidProblem(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(PlateError::InvalidProblem(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) {
            return Err(PlateError::InvalidProblem(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Converged (or safeguarded) discrete displacement with its reaction force.
pub struct DiscreteSolution {
    pub space: Arc<FeSpace>,
    pub constraints: Constraints,
    /// Full DOF vector over the Argyris space.
    pub dofs: Vec<f64>,
    pub contact: ContactState,
    pub iterations: usize,
    pub converged: bool,
    /// Energy norm of the last displacement increment.
    pub last_increment: f64,
}

impl DiscreteSolution {
    /// Displacement value and derivatives at an arbitrary point.
    pub fn eval(&self, x: [f64; 2]) -> Option<crate::plate::FieldDerivs> {
        self.space.eval(&self.dofs, x)
    }

    /// Reaction force `lambda = F(u_h)` at an arbitrary point.
    pub fn reaction_at(&self, problem: &ObstacleProblem, x: [f64; 2]) -> Option<f64> {
        let t = self.space.locate(x)?;
        let local = self.space.local_dofs(t, &self.dofs);
        let d = self.space.bases[t].eval_field(x, &local);
        let h4 = self.space.geometries[t].diameter.powi(4);
        let denom = problem.epsilon + problem.alpha * h4;
        let a_w = biharmonic(&problem.model, &d.fourth);
        let g = (problem.obstacle)(x[0], x[1]);
        let f = (problem.load)(x[0], x[1]);
        Some(((g - d.value + problem.alpha * h4 * (a_w - f)) / denom).max(0.0))
    }

    /// Reaction values at the quadrature nodes and per-element contact area
    /// fractions.
    pub fn reaction_field(&self) -> (&ContactState, Vec<f64>) {
        let fractions = (0..self.space.mesh.n_triangles())
            .map(|t| {
                let points = self.space.quad_points(t);
                let area: f64 = points.iter().map(|(_, w)| w).sum();
                let touched: f64 = points
                    .iter()
                    .zip(&self.contact.reaction[t])
                    .filter(|(_, &f)| f > 0.0)
                    .map(|((_, w), _)| w)
                    .sum();
                touched / area
            })
            .collect();
        (&self.contact, fractions)
    }

    /// Plain text export: `dofs <count>` then one value per line, pairing
    /// with the mesh file written alongside.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dofs {}", self.dofs.len());
        for v in &self.dofs {
            let _ = writeln!(out, "{v:.17e}");
        }
        out
    }

    /// Samples `(x, y, u, lambda)` on an `n x n` uniform grid over the unit
    /// square as CSV.
    pub fn sample_csv(&self, problem: &ObstacleProblem, n: usize) -> String {
        let mut out = String::from("x,y,u,lambda\n");
        for j in 0..n {
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                let u = self.eval([x, y]).map_or(f64::NAN, |d| d.value);
                let lam = self.reaction_at(problem, [x, y]).unwrap_or(f64::NAN);
                let _ = writeln!(out, "{x},{y},{u:.12e},{lam:.12e}");
            }
        }
        out
    }

    /// Contact indicator (0/1) sampled on an `n x n` grid as CSV.
    pub fn contact_raster(&self, problem: &ObstacleProblem, n: usize) -> Vec<Vec<bool>> {
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let x = (i as f64 + 0.5) / n as f64;
                        let y = (j as f64 + 0.5) / n as f64;
                        self.reaction_at(problem, [x, y]).is_some_and(|f| f > 0.0)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Contact fixed-point iteration: start from the source problem (empty
/// contact set), then re-solve with the contact set frozen at the previous
/// iterate until the energy norm of the increment drops below the tolerance.
/// If the contact indicator revisits an earlier pattern without meeting the
/// tolerance the iteration is cycling and stops with `converged = false`.
pub fn solve_contact(
    problem: &ObstacleProblem,
    space: Arc<FeSpace>,
) -> Result<DiscreteSolution, PlateError> {
    problem.validate()?;
    let constraints = Constraints::clamped(&space);
    let mut contact = ContactState::no_contact(&space);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    seen.insert(contact.signature());

    let system = assemble_nitsche(problem, &space, &contact, &constraints)?;
    let mut dofs = constraints.expand(&solve(&system)?);
    let mut iterations = 1usize;
    let mut converged = false;
    let mut last_increment = f64::INFINITY;

    while iterations < problem.max_iterations {
        contact = contact_state(problem, &space, &dofs)?;
        let signature = contact.signature();
        let repeated = !seen.insert(signature);

        let system = assemble_nitsche(problem, &space, &contact, &constraints)?;
        let next = constraints.expand(&solve(&system)?);
        let diff: Vec<f64> = next.iter().zip(&dofs).map(|(a, b)| a - b).collect();
        last_increment =
            energy_inner_product(&space, &problem.model, &diff, &diff).max(0.0).sqrt();
        dofs = next;
        iterations += 1;
        if last_increment <= problem.tol {
            converged = true;
            break;
        }
        if repeated {
            // Same contact pattern as an earlier iterate yet no convergence:
            // the indicator is cycling.
            break;
        }
    }
    contact = contact_state(problem, &space, &dofs)?;
    Ok(DiscreteSolution {
        space,
        constraints,
        dofs,
        contact,
        iterations,
        converged,
        last_increment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    fn space(n: usize) -> Arc<FeSpace> {
        Arc::new(FeSpace::new(Mesh::structured_unit_square(n).unwrap()).unwrap())
    }

    #[test]
    fn no_contact_converges_in_two_iterations() {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let problem = ObstacleProblem::new(model, |_, _| -10.0, |_, _| -1e6);
        let solution = solve_contact(&problem, space(2)).unwrap();
        assert!(solution.converged);
        assert!(solution.iterations <= 2);
        assert!(solution
            .contact
            .reaction
            .iter()
            .flatten()
            .all(|&f| f == 0.0));
        let (_, fractions) = solution.reaction_field();
        assert!(fractions.iter().all(|&f| f == 0.0));
        // The plate sags downward under a negative load.
        let mid = solution.eval([0.5, 0.5]).unwrap();
        assert!(mid.value < 0.0);
    }

    #[test]
    fn rigid_obstacle_touches_near_centre() {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut problem = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
            -100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
        });
        problem.epsilon = 0.0;
        let solution = solve_contact(&problem, space(8)).unwrap();
        assert!(solution.converged, "increment {}", solution.last_increment);
        // Contact happens somewhere near the midpoint.
        let (_, fractions) = solution.reaction_field();
        let touched: Vec<usize> = (0..fractions.len()).filter(|&t| fractions[t] > 0.0).collect();
        assert!(!touched.is_empty());
        for &t in &touched {
            let c = solution.space.mesh.centroid(t);
            let r = ((c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2)).sqrt();
            assert!(r < 0.3, "contact element at radius {r}");
        }
        // Penetration is small relative to the obstacle scale.
        let mut min_gap = f64::INFINITY;
        for j in 0..100 {
            for i in 0..100 {
                let x = (i as f64 + 0.5) / 100.0;
                let y = (j as f64 + 0.5) / 100.0;
                let u = solution.eval([x, y]).unwrap().value;
                let g = (problem.obstacle)(x, y);
                min_gap = min_gap.min(u - g);
            }
        }
        let g_sup = 100.0 * 0.5; // max |g| on the sample grid
        assert!(min_gap >= -1e-3 * g_sup, "penetration {min_gap}");
    }

    #[test]
    fn fixed_point_is_stationary() {
        // Once the contact pattern repeats, the next iterate is identical:
        // the final increment is (numerically) zero well below tol.
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut problem = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
            -100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
        });
        problem.epsilon = 1e-4;
        let solution = solve_contact(&problem, space(4)).unwrap();
        assert!(solution.converged);
        assert!(solution.last_increment <= problem.tol);
    }

    #[test]
    fn reaction_is_nonnegative_and_complementary() {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut problem = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
            if (0.3..=0.7).contains(&x) && (0.3..=0.7).contains(&y) {
                0.0
            } else {
                -1.0
            }
        });
        problem.epsilon = 1e-3;
        let solution = solve_contact(&problem, space(4)).unwrap();
        assert!(solution.converged);
        let mut any_contact = false;
        for t in 0..solution.space.mesh.n_triangles() {
            let h4 = solution.space.geometries[t].diameter.powi(4);
            let denom = problem.epsilon + problem.alpha * h4;
            let local = solution.space.local_dofs(t, &solution.dofs);
            for ((x, _), &lam) in solution
                .space
                .quad_points(t)
                .iter()
                .zip(&solution.contact.reaction[t])
            {
                assert!(lam >= 0.0);
                if lam > 0.0 {
                    any_contact = true;
                    // At contact points the positive part is active:
                    // lam * denom = g - u + alpha h^4 (A u - f) exactly.
                    let d = solution.space.bases[t].eval_field(*x, &local);
                    let a_u = biharmonic(&problem.model, &d.fourth);
                    let raw = (problem.obstacle)(x[0], x[1]) - d.value
                        + problem.alpha * h4 * (a_u - (problem.load)(x[0], x[1]));
                    assert!((lam * denom - raw).abs() <= 1e-8 * raw.abs().max(1.0));
                }
            }
        }
        assert!(any_contact);
    }

    #[test]
    fn eps_monotone_penetration() {
        // Stiffer obstacles admit less penetration at a fixed mesh.
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let sp = space(4);
        let mut previous = f64::INFINITY;
        for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
            let mut problem = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
                if (0.3..=0.7).contains(&x) && (0.3..=0.7).contains(&y) {
                    0.0
                } else {
                    -1.0
                }
            });
            problem.epsilon = eps;
            let solution = solve_contact(&problem, sp.clone()).unwrap();
            let mut max_pen = 0.0f64;
            for j in 0..60 {
                for i in 0..60 {
                    let x = (i as f64 + 0.5) / 60.0;
                    let y = (j as f64 + 0.5) / 60.0;
                    let u = solution.eval([x, y]).unwrap().value;
                    let g = (problem.obstacle)(x, y);
                    max_pen = max_pen.max(g - u);
                }
            }
            assert!(
                max_pen <= previous * (1.0 + 1e-9),
                "penetration grew: {max_pen} > {previous} at eps {eps}"
            );
            previous = max_pen;
        }
    }

    #[test]
    fn solution_text_export_shape() {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let problem = ObstacleProblem::new(model, |_, _| -10.0, |_, _| -1e6);
        let solution = solve_contact(&problem, space(2)).unwrap();
        let text = solution.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("dofs {}", solution.dofs.len()));
        assert_eq!(lines.count(), solution.dofs.len());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
        let mut problem = ObstacleProblem::new(model, |_, _| 0.0, |_, _| 0.0);
        problem.alpha = 0.0;
        assert!(problem.validate().is_err());
        problem.alpha = 1e-5;
        problem.epsilon = -1.0;
        assert!(problem.validate().is_err());
        problem.epsilon = 0.0;
        problem.tol = 0.0;
        assert!(problem.validate().is_err());
    }
}
