//! Finite elements for 2D linear elasticity driven by cellular traction forces.
//!
//! The crate compares three ways of loading a substrate with the pull of an
//! embedded square cell: point forces on the cell boundary, Gaussian-smoothed
//! forces, and a cavity with a traction boundary condition.

pub mod analysis;
pub mod elasticity;
pub mod forces;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod verify1d;

pub use analysis::{
    area_reduction, h1_diff_norm, l2_norm, l2_norm_in, AnalysisError, AreaChange,
    ConvergenceStudy, Solution,
};
pub use elasticity::{assemble, ElasticityError, MaterialParams, OuterBc, StiffnessSystem};
pub use forces::{discretize_cell_boundary, CellGeometry, ForceError, ForceModel, Traction};
pub use geometry::{Point2, SquareCell};
pub use mesh::{generate_mesh, BoundaryEdge, EdgeTag, Mesh, MeshError, Region};
pub use solver::{solve, SolveMethod, SolveOptions, SolveReport, SolverError};
pub use sparse::CsrMatrix;
