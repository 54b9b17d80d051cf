//! Post-processing: norms, area changes, convergence orders and the
//! consistency studies comparing the force models.

mod consistency;
mod convergence;
mod quadrature_order;
mod svg;

pub use consistency::{
    beta_consistency_sweep, momentum_balance, smoothing_consistency_sweep, BetaSweep,
    MomentumBalance, SmoothingGap,
};
pub use convergence::{estimate_order, loglog_slope, ConvergenceStudy};
pub use quadrature_order::{midpoint_quadrature_order, Surface};
pub use svg::{render_svg, SvgStyle};

use thiserror::Error;

use crate::elasticity::{shape_gradients, ElasticityError};
use crate::forces::ForceError;
use crate::geometry::{polygon_self_intersects, polygon_signed_area, Point2};
use crate::mesh::{Mesh, MeshError, Region};
use crate::solver::SolverError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("solutions live on different meshes")]
    MeshMismatch,
    #[error("displacement has {got} entries, mesh has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("order is undefined: {0}")]
    UndefinedOrder(String),
    #[error("momentum balance needs a Robin outer boundary")]
    NeedsRobin,
    #[error("polygon needs at least 3 nodes")]
    DegeneratePolygon,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Elasticity(#[from] ElasticityError),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Nodal displacement field on a mesh; dof `2 i + c` is component `c` of node `i`.
#[derive(Clone, Debug)]
pub struct Solution<'m> {
    mesh: &'m Mesh,
    displacement: Vec<f64>,
}

impl<'m> Solution<'m> {
    pub fn new(mesh: &'m Mesh, displacement: Vec<f64>) -> Result<Self, AnalysisError> {
        if displacement.len() != mesh.num_dofs() {
            return Err(AnalysisError::LengthMismatch {
                expected: mesh.num_dofs(),
                got: displacement.len(),
            });
        }
        Ok(Self { mesh, displacement })
    }

    pub fn zero(mesh: &'m Mesh) -> Self {
        Self {
            mesh,
            displacement: vec![0.0; mesh.num_dofs()],
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn displacement(&self) -> &[f64] {
        &self.displacement
    }

    pub fn into_displacement(self) -> Vec<f64> {
        self.displacement
    }

    pub fn at(&self, node: usize) -> Point2 {
        Point2::new(self.displacement[2 * node], self.displacement[2 * node + 1])
    }

    /// Largest nodal displacement magnitude.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.mesh.num_nodes())
            .map(|i| self.at(i).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mesh: self.mesh,
            displacement: self.displacement.iter().map(|v| v * factor).collect(),
        }
    }

    /// Displaced node positions.
    pub fn deformed_nodes(&self) -> Vec<Point2> {
        self.mesh
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &p)| p + self.at(i))
            .collect()
    }
}

fn in_region(mesh: &Mesh, t: usize, region: Option<Region>) -> bool {
    region.is_none_or(|r| mesh.regions()[t] == r)
}

/// Squared L2 norm of a P1 field over the triangles in `region`,
/// integrated exactly with the element mass matrix.
fn l2_squared(mesh: &Mesh, u: &[f64], region: Option<Region>) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !in_region(mesh, t, region) {
            continue;
        }
        let area = mesh.triangle_area(t);
        let mut s = 0.0;
        for c in 0..2 {
            let v = tri.map(|n| u[2 * n + c]);
            let sum: f64 = v.iter().sum();
            let sq: f64 = v.iter().map(|x| x * x).sum();
            // sum_ij (1 + delta_ij) v_i v_j
            s += sum * sum + sq;
        }
        total += area / 12.0 * s;
    }
    total
}

/// Squared gradient seminorm of a P1 field over `region`.
fn h1_semi_squared(mesh: &Mesh, u: &[f64], region: Option<Region>) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !in_region(mesh, t, region) {
            continue;
        }
        let (g, area) = shape_gradients(&mesh.triangle_points(t))
            .expect("mesh triangles have positive area");
        for c in 0..2 {
            let mut grad = [0.0; 2];
            for (k, &n) in tri.iter().enumerate() {
                grad[0] += g[k][0] * u[2 * n + c];
                grad[1] += g[k][1] * u[2 * n + c];
            }
            total += area * (grad[0] * grad[0] + grad[1] * grad[1]);
        }
    }
    total
}

/// L2 norm of the displacement over the whole meshed domain.
pub fn l2_norm(sol: &Solution) -> f64 {
    l2_squared(sol.mesh, &sol.displacement, None).sqrt()
}

/// L2 norm restricted to the triangles of one region.
pub fn l2_norm_in(sol: &Solution, region: Region) -> f64 {
    l2_squared(sol.mesh, &sol.displacement, Some(region)).sqrt()
}

/// Full H1 norm of a nodal field, optionally restricted to one region.
pub fn field_h1_norm(mesh: &Mesh, u: &[f64], region: Option<Region>) -> f64 {
    (l2_squared(mesh, u, region) + h1_semi_squared(mesh, u, region)).sqrt()
}

fn same_mesh(a: &Mesh, b: &Mesh) -> bool {
    std::ptr::eq(a, b) || (a.nodes() == b.nodes() && a.triangles() == b.triangles())
}

/// `|a - b|_{H1}` for two fields on the same mesh.
pub fn h1_diff_norm(a: &Solution, b: &Solution) -> Result<f64, AnalysisError> {
    if !same_mesh(a.mesh, b.mesh) {
        return Err(AnalysisError::MeshMismatch);
    }
    let d: Vec<f64> = a
        .displacement
        .iter()
        .zip(&b.displacement)
        .map(|(x, y)| x - y)
        .collect();
    Ok(field_h1_norm(a.mesh, &d, None))
}

/// Relative area change of a node loop under the displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaChange {
    /// `100 (A0 - A) / A0`; positive when the polygon shrinks.
    pub percent: f64,
    /// Set when the deformed polygon crosses itself; `percent` then uses the
    /// signed shoelace area.
    pub self_intersecting: bool,
}

/// Percentage area reduction of the polygon through `loop_nodes`.
pub fn area_reduction(sol: &Solution, loop_nodes: &[usize]) -> Result<AreaChange, AnalysisError> {
    if loop_nodes.len() < 3 {
        return Err(AnalysisError::DegeneratePolygon);
    }
    let before: Vec<Point2> = loop_nodes.iter().map(|&i| sol.mesh.nodes()[i]).collect();
    let after: Vec<Point2> = loop_nodes
        .iter()
        .map(|&i| sol.mesh.nodes()[i] + sol.at(i))
        .collect();
    let a0 = polygon_signed_area(&before);
    let a1 = polygon_signed_area(&after);
    let self_intersecting = polygon_self_intersects(&after);
    if self_intersecting {
        log::warn!("deformed polygon intersects itself; reporting the signed area change");
    }
    Ok(AreaChange {
        percent: 100.0 * (a0 - a1) / a0,
        self_intersecting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SquareCell;
    use crate::mesh::generate_mesh;

    fn unit_square_mesh(h: f64) -> Mesh {
        generate_mesh((1.0, 1.0), h, &SquareCell::new(Point2::new(0.5, 0.5), 0.5), false).unwrap()
    }

    fn field(mesh: &Mesh, f: impl Fn(Point2) -> Point2) -> Vec<f64> {
        mesh.nodes().iter().flat_map(|&p| {
            let v = f(p);
            [v.x, v.y]
        }).collect()
    }

    #[test]
    fn constant_and_zero_fields() {
        let m = unit_square_mesh(0.25);
        assert_eq!(l2_norm(&Solution::zero(&m)), 0.0);
        let s = Solution::new(&m, field(&m, |_| Point2::new(1.0, 0.0))).unwrap();
        assert!((l2_norm(&s) - 1.0).abs() < 1e-14);
        assert!((l2_norm_in(&s, Region::CellInterior) - 0.5).abs() < 1e-14);
        assert!(Solution::new(&m, vec![0.0; 3]).is_err());
    }

    #[test]
    fn linear_field_h1_norm_closed_form() {
        let m = unit_square_mesh(0.25);
        let s = Solution::new(&m, field(&m, |p| Point2::new(p.x, 0.0))).unwrap();
        let z = Solution::zero(&m);
        // int x^2 = 1/3, |grad|^2 = 1.
        let expected = (1.0f64 / 3.0 + 1.0).sqrt();
        assert!((h1_diff_norm(&s, &z).unwrap() - expected).abs() < 1e-14);
        assert_eq!(h1_diff_norm(&s, &s).unwrap(), 0.0);
        let other = unit_square_mesh(0.125);
        assert_eq!(
            h1_diff_norm(&s, &Solution::zero(&other)),
            Err(AnalysisError::MeshMismatch)
        );
        // Quadratic field: L2 part is exact for the interpolant.
        let q = Solution::new(&m, field(&m, |p| Point2::new(0.0, p.x * p.y))).unwrap();
        let u = q.displacement();
        let exact: f64 = m
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let a = m.triangle_area(t);
                let v = tri.map(|n| u[2 * n + 1]);
                a / 6.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[0] * v[1] + v[1] * v[2] + v[2] * v[0])
            })
            .sum();
        assert!((l2_norm(&q).powi(2) - exact).abs() < 1e-15);
    }

    #[test]
    fn uniform_shrink_reduces_area_by_nineteen_percent() {
        let m = generate_mesh((20.0, 20.0), 1.0, &SquareCell::new(Point2::new(10.0, 10.0), 6.0), false)
            .unwrap();
        let c = Point2::new(10.0, 10.0);
        let s = Solution::new(&m, field(&m, |p| (p - c) * -0.1)).unwrap();
        let lp = m.cell_boundary_loop().unwrap();
        let r = area_reduction(&s, &lp).unwrap();
        assert!((r.percent - 19.0).abs() < 1e-12);
        assert!(!r.self_intersecting);
        let z = area_reduction(&Solution::zero(&m), &lp).unwrap();
        assert_eq!(z.percent, 0.0);
        // A large rotation-free fold flips the polygon.
        let flip = Solution::new(&m, field(&m, |p| Point2::new(-2.0 * (p.x - c.x), 0.0))).unwrap();
        assert!(area_reduction(&flip, &lp).unwrap().percent > 100.0);
        assert_eq!(area_reduction(&s, &lp[..2]), Err(AnalysisError::DegeneratePolygon));
    }
}
