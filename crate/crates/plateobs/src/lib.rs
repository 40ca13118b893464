//! Conforming C¹ finite elements for the clamped Kirchhoff plate obstacle
//! problem.
//!
//! The crate solves for the deflection of a thin clamped plate pressed onto a
//! rigid or elastic obstacle. The displacement is discretised with quintic
//! Argyris triangles, the contact force is eliminated elementwise which turns
//! the constrained problem into a fixed-point iteration over plain linear
//! solves, and a residual error estimator drives red-green-blue adaptive
//! refinement.
//!
//! Typical use:
//!
//! ```
//! use plateobs::{AdaptiveOptions, Mesh, ObstacleProblem, PlateModel};
//!
//! let model = PlateModel::new(1.0, 0.0, 1.0).unwrap();
//! let problem = ObstacleProblem::new(model, |_, _| -10.0, |x, y| {
//!     -100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
//! });
//! let mesh = Mesh::structured_unit_square(4).unwrap();
//! let history = plateobs::adaptive_solve(&problem, mesh, 2, &AdaptiveOptions::default()).unwrap();
//! assert_eq!(history.len(), 2);
//! assert!(history[1].breakdown.total() < history[0].breakdown.total());
//! ```

pub mod argyris;
pub mod assembly;
pub mod estimator;
pub mod mesh;
pub mod plate;
pub mod quadrature;
pub mod solver;

pub use argyris::{DofLayout, ElementBasis, FeSpace, SmoothPoint};
pub use assembly::{ContactState, Constraints, LinearSystem};
pub use estimator::{
    adaptive_solve, estimate, history_csv, mark_elements, AdaptiveFailure, AdaptiveOptions,
    AdaptiveStep, ErrorBreakdown,
};
pub use mesh::{ElementGeometry, Mesh, RefineTag};
pub use plate::{FieldDerivs, PlateModel};
pub use solver::{solve_contact, DiscreteSolution, ObstacleProblem};

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum PlateError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("quadrature degree {0} not supported")]
    UnsupportedQuadratureDegree(usize),
    #[error("invalid plate model: {0}")]
    InvalidModel(String),
    #[error("degenerate element {0}")]
    DegenerateElement(usize),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(doctest)]
mod book_doctests {
    //! Every code block in the guide is compiled and run as a doctest so the
    //! book cannot drift from the library.
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/elements.md")]
    mod elements {}
    #[doc = include_str!("../../../book/src/plate-model.md")]
    mod plate_model {}
    #[doc = include_str!("../../../book/src/contact.md")]
    mod contact {}
    #[doc = include_str!("../../../book/src/adaptivity.md")]
    mod adaptivity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
