//! Shared fixtures for the benchmarks.

use cellforce_core::{generate_mesh, Mesh, Point2, SquareCell};

/// The reference configuration: 20 x 20 substrate, 6 x 6 cell at the centre.
pub fn reference_mesh(h: f64, exclude_cell: bool) -> Mesh {
    let cell = SquareCell::new(Point2::new(10.0, 10.0), 6.0);
    generate_mesh((20.0, 20.0), h, &cell, exclude_cell).expect("reference mesh is aligned")
}
