//! Load vectors for the different cell-force models.
//!
//! All builders return a vector over the `2 * nodes` displacement dofs.
//! Normals point into the cell, so a positive traction pulls the
//! surrounding substrate towards the cell.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Point2, SquareCell};
use crate::mesh::{EdgeTag, Mesh, MeshError};
use crate::quadrature::{gauss_legendre, TriangleRule};

/// Gaussians are truncated beyond this many widths (tail below 1e-14).
pub const GAUSSIAN_CUTOFF_WIDTHS: f64 = 8.0;

/// Triangles wider than this many Gaussian widths are subdivided before
/// applying the 13-point rule.
const SUBDIVIDE_WIDTHS: f64 = 2.0;
const MAX_SUBDIVISION_DEPTH: u32 = 6;

/// Gaussians narrower than this fraction of the mesh size are flagged.
pub const MIN_RESOLVED_WIDTH_RATIO: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForceError {
    #[error("segment count must be a positive multiple of 4, got {0}")]
    SegmentCount(usize),
    #[error("Gaussian width must be positive, got {0}")]
    Width(f64),
    #[error("dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("cell width must be positive, got {0}")]
    CellWidth(f64),
    #[error("quadrature order must be at least 1")]
    QuadratureOrder,
    #[error("traction boundary loads need a mesh with the cell interior removed")]
    NotAHoleMesh,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// One piece of the discretized cell boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub midpoint: Point2,
    /// Unit normal pointing into the cell.
    pub normal: Point2,
    /// Segment length.
    pub measure: f64,
}

/// Square cell together with its boundary split into equal segments.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub center: Point2,
    pub side: f64,
    pub segments: Vec<BoundarySegment>,
}

impl CellGeometry {
    pub fn square(&self) -> SquareCell {
        SquareCell::new(self.center, self.side)
    }

    /// `sum_j n_j |S_j|`, zero for a closed boundary.
    pub fn net_normal(&self) -> Point2 {
        self.segments
            .iter()
            .fold(Point2::default(), |acc, s| acc + s.normal * s.measure)
    }
}

/// The four sides counterclockwise from the lower-left corner, each with its
/// start point, direction and inward normal.
fn square_sides(cell: &SquareCell) -> [(Point2, Point2, Point2); 4] {
    let c = cell.corners();
    [
        (c[0], Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)),
        (c[1], Point2::new(0.0, 1.0), Point2::new(-1.0, 0.0)),
        (c[2], Point2::new(-1.0, 0.0), Point2::new(0.0, -1.0)),
        (c[3], Point2::new(0.0, -1.0), Point2::new(1.0, 0.0)),
    ]
}

/// Splits every side of the square into `n_segments / 4` equal pieces,
/// counterclockwise from the lower-left corner.
pub fn discretize_cell_boundary(
    cell: &SquareCell,
    n_segments: usize,
) -> Result<CellGeometry, ForceError> {
    if n_segments == 0 || n_segments % 4 != 0 {
        return Err(ForceError::SegmentCount(n_segments));
    }
    let per_side = n_segments / 4;
    let measure = cell.side / per_side as f64;
    let mut segments = Vec::with_capacity(n_segments);
    for (start, dir, normal) in square_sides(cell) {
        for k in 0..per_side {
            segments.push(BoundarySegment {
                midpoint: start + dir * ((k as f64 + 0.5) * measure),
                normal,
                measure,
            });
        }
    }
    Ok(CellGeometry {
        center: cell.center,
        side: cell.side,
        segments,
    })
}

/// Segment count that makes each segment one mesh edge long.
pub fn segments_matching_mesh(mesh: &Mesh) -> usize {
    4 * (mesh.cell().side / mesh.h_target()).round() as usize
}

/// Traction magnitude on the cell boundary, constant or position dependent.
#[derive(Clone)]
pub enum Traction {
    Uniform(f64),
    Field(Arc<dyn Fn(Point2) -> f64 + Send + Sync>),
}

impl Traction {
    pub fn field(f: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        Self::Field(Arc::new(f))
    }

    pub fn at(&self, p: Point2) -> f64 {
        match self {
            Self::Uniform(v) => *v,
            Self::Field(f) => f(p),
        }
    }
}

impl From<f64> for Traction {
    fn from(v: f64) -> Self {
        Self::Uniform(v)
    }
}

impl fmt::Debug for Traction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(v) => write!(f, "Uniform({v})"),
            Self::Field(_) => write!(f, "Field(..)"),
        }
    }
}

fn add_nodal(rhs: &mut [f64], nodes: [usize; 3], weights: [f64; 3], force: Point2) {
    for (&n, &w) in nodes.iter().zip(&weights) {
        rhs[2 * n] += w * force.x;
        rhs[2 * n + 1] += w * force.y;
    }
}

/// Point forces `P(x_j) n_j |S_j|` at the segment midpoints, spread to the
/// vertices of the containing triangle by barycentric weights.
pub fn rhs_point_forces(
    mesh: &Mesh,
    cell: &CellGeometry,
    traction: &Traction,
) -> Result<Vec<f64>, ForceError> {
    let mut rhs = vec![0.0; mesh.num_dofs()];
    for s in &cell.segments {
        let (t, l) = mesh.locate_point(s.midpoint)?;
        let force = s.normal * (traction.at(s.midpoint) * s.measure);
        add_nodal(&mut rhs, mesh.triangles()[t], l, force);
    }
    Ok(rhs)
}

/// Parameters in `[0, len]` where the segment `start + s * dir` meets a
/// mesh node or crosses a mesh edge.
fn edge_crossings(mesh: &Mesh, start: Point2, dir: Point2, len: f64) -> Vec<f64> {
    let tol = 1e-10 * mesh.h_target();
    let mut params = vec![0.0, len];
    for p in mesh.nodes() {
        let rel = *p - start;
        let s = rel.dot(dir);
        if s > 0.0 && s < len && rel.cross(dir).abs() <= tol {
            params.push(s);
        }
    }
    for tri in mesh.triangles() {
        for k in 0..3 {
            let a = mesh.nodes()[tri[k]];
            let b = mesh.nodes()[tri[(k + 1) % 3]];
            let e = b - a;
            let denom = dir.cross(e);
            if denom.abs() <= 1e-14 * e.norm() {
                continue;
            }
            // start + s dir = a + r e
            let s = (a - start).cross(e) / denom;
            let r = (a - start).cross(dir) / denom;
            if s > 0.0 && s < len && (-1e-12..=1.0 + 1e-12).contains(&r) {
                params.push(s);
            }
        }
    }
    params.sort_by(f64::total_cmp);
    params.dedup_by(|a, b| (*a - *b).abs() <= tol);
    params
}

/// `int_Gamma P n phi_i dS` over the exact square boundary, with Gauss
/// rules of `order` points on every piece between mesh-edge crossings.
pub fn rhs_continuous_immersed(
    mesh: &Mesh,
    cell: &SquareCell,
    traction: &Traction,
    order: usize,
) -> Result<Vec<f64>, ForceError> {
    if order == 0 {
        return Err(ForceError::QuadratureOrder);
    }
    let (gx, gw) = gauss_legendre(order);
    let mut rhs = vec![0.0; mesh.num_dofs()];
    for (start, dir, normal) in square_sides(cell) {
        let cuts = edge_crossings(mesh, start, dir, cell.side);
        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let half = 0.5 * (s1 - s0);
            let (t, _) = mesh.locate_point(start + dir * (s0 + half))?;
            let tri = mesh.triangles()[t];
            for (x, wt) in gx.iter().zip(&gw) {
                let p = start + dir * (s0 + half * (1.0 + x));
                let l = mesh.barycentric(t, p);
                add_nodal(&mut rhs, tri, l, normal * (traction.at(p) * wt * half));
            }
        }
    }
    Ok(rhs)
}

/// Gaussian density `(2 pi eps^2)^(-n/2) exp(-|d|^2 / (2 eps^2))` for the
/// offset `d = x - x'` in `n = d.len()` dimensions.
pub fn gaussian_delta(offset: &[f64], eps: f64) -> Result<f64, ForceError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ForceError::Width(eps));
    }
    let n = offset.len();
    if !(1..=3).contains(&n) {
        return Err(ForceError::Dimension(n));
    }
    let r2: f64 = offset.iter().map(|v| v * v).sum();
    Ok(gaussian_from_r2(r2, eps, n))
}

fn gaussian_from_r2(r2: f64, eps: f64, n: usize) -> f64 {
    let s2 = eps * eps;
    (2.0 * std::f64::consts::PI * s2).powf(-0.5 * n as f64) * (-0.5 * r2 / s2).exp()
}

/// Whether `eps` is resolved by the mesh; logs a warning otherwise.
pub fn check_width_resolution(mesh: &Mesh, eps: f64) -> bool {
    let ok = eps >= MIN_RESOLVED_WIDTH_RATIO * mesh.h_target();
    if !ok {
        log::warn!(
            "Gaussian width {eps} is below {MIN_RESOLVED_WIDTH_RATIO} x mesh size {}; the smoothed force is under-resolved",
            mesh.h_target()
        );
    }
    ok
}

/// A vector-valued source density concentrated around a set of centres.
trait Source: Sync {
    fn value(&self, p: Point2) -> Point2;
    /// Whether any centre lies within the cutoff of the box `[lo, hi]`.
    fn near_box(&self, lo: Point2, hi: Point2) -> bool;
}

fn box_distance(p: Point2, lo: Point2, hi: Point2) -> f64 {
    let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
    let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
    dx.hypot(dy)
}

struct FaceGaussians {
    centers: Vec<(Point2, Point2)>,
    eps: f64,
}

impl Source for FaceGaussians {
    fn value(&self, p: Point2) -> Point2 {
        let cutoff2 = (GAUSSIAN_CUTOFF_WIDTHS * self.eps).powi(2);
        let mut f = Point2::default();
        for &(c, strength) in &self.centers {
            let r2 = (p - c).norm_squared();
            if r2 <= cutoff2 {
                f = f + strength * gaussian_from_r2(r2, self.eps, 2);
            }
        }
        f
    }

    fn near_box(&self, lo: Point2, hi: Point2) -> bool {
        let cutoff = GAUSSIAN_CUTOFF_WIDTHS * self.eps;
        self.centers
            .iter()
            .any(|&(c, _)| box_distance(c, lo, hi) <= cutoff)
    }
}

struct GaussianGradient {
    center: Point2,
    /// `P * dx^2`.
    strength: f64,
    eps: f64,
}

impl Source for GaussianGradient {
    fn value(&self, p: Point2) -> Point2 {
        let d = p - self.center;
        let r2 = d.norm_squared();
        if r2 > (GAUSSIAN_CUTOFF_WIDTHS * self.eps).powi(2) {
            return Point2::default();
        }
        let g = gaussian_from_r2(r2, self.eps, 2);
        d * (-self.strength * g / (self.eps * self.eps))
    }

    fn near_box(&self, lo: Point2, hi: Point2) -> bool {
        box_distance(self.center, lo, hi) <= GAUSSIAN_CUTOFF_WIDTHS * self.eps
    }
}

/// `int_T f phi_i` for the three vertex basis functions of triangle `t`,
/// subdividing until pieces are at most `SUBDIVIDE_WIDTHS * eps` across.
fn integrate_triangle<S: Source>(
    mesh: &Mesh,
    t: usize,
    source: &S,
    eps: f64,
    rule: &TriangleRule,
) -> [Point2; 3] {
    let v = mesh.triangle_points(t);
    let area = mesh.triangle_area(t);
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut out = [Point2::default(); 3];
    integrate_piece(&v, identity, area, source, eps, rule, 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn integrate_piece<S: Source>(
    v: &[Point2; 3],
    piece: [[f64; 3]; 3],
    area: f64,
    source: &S,
    eps: f64,
    rule: &TriangleRule,
    depth: u32,
    out: &mut [Point2; 3],
) {
    let to_xy = |l: [f64; 3]| v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
    let corners = piece.map(to_xy);
    let lo = Point2::new(
        corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
        corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
    );
    let hi = Point2::new(
        corners.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
        corners.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
    );
    if !source.near_box(lo, hi) {
        return;
    }
    let diameter = (0..3)
        .map(|k| corners[k].distance(corners[(k + 1) % 3]))
        .fold(0.0, f64::max);
    if diameter > SUBDIVIDE_WIDTHS * eps && depth < MAX_SUBDIVISION_DEPTH {
        let mid = |a: [f64; 3], b: [f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let [a, b, c] = piece;
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            integrate_piece(v, sub, 0.25 * area, source, eps, rule, depth + 1, out);
        }
        return;
    }
    for (q, w) in rule.points.iter().zip(&rule.weights) {
        // Parent barycentrics of the quadrature point.
        let mut l = [0.0; 3];
        for k in 0..3 {
            for (m, corner) in piece.iter().enumerate() {
                l[k] += q[m] * corner[k];
            }
        }
        let f = source.value(to_xy(l));
        for k in 0..3 {
            out[k] = out[k] + f * (w * area * l[k]);
        }
    }
}

fn integrate_source<S: Source>(mesh: &Mesh, source: &S, eps: f64) -> Vec<f64> {
    let rule = TriangleRule::degree7();
    let local: Vec<[Point2; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| integrate_triangle(mesh, t, source, eps, &rule))
        .collect();
    let mut rhs = vec![0.0; mesh.num_dofs()];
    for (tri, loads) in mesh.triangles().iter().zip(&local) {
        for (&n, f) in tri.iter().zip(loads) {
            rhs[2 * n] += f.x;
            rhs[2 * n + 1] += f.y;
        }
    }
    rhs
}

/// Smoothed face forces: each segment contributes the density
/// `P(x_j) |S_j| n_j delta_eps(x - x_j)`, integrated against the basis.
pub fn rhs_smoothed_gaussian(
    mesh: &Mesh,
    cell: &CellGeometry,
    traction: &Traction,
    eps: f64,
) -> Result<Vec<f64>, ForceError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ForceError::Width(eps));
    }
    check_width_resolution(mesh, eps);
    let source = FaceGaussians {
        centers: cell
            .segments
            .iter()
            .map(|s| (s.midpoint, s.normal * (traction.at(s.midpoint) * s.measure)))
            .collect(),
        eps,
    };
    Ok(integrate_source(mesh, &source, eps))
}

/// Vanishing-cell limit `P dx^2 grad delta_eps(x - x')` anchored at `center`.
pub fn rhs_smoothed_particle_gradient(
    mesh: &Mesh,
    center: Point2,
    traction: f64,
    eps: f64,
    cell_width: f64,
) -> Result<Vec<f64>, ForceError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ForceError::Width(eps));
    }
    if !(cell_width.is_finite() && cell_width > 0.0) {
        return Err(ForceError::CellWidth(cell_width));
    }
    check_width_resolution(mesh, eps);
    let source = GaussianGradient {
        center,
        strength: traction * cell_width * cell_width,
        eps,
    };
    Ok(integrate_source(mesh, &source, eps))
}

/// `int P n phi_i dS` along the tagged cell-boundary edges, exact for
/// polynomial tractions up to degree 3.
fn cell_edge_traction(mesh: &Mesh, traction: &Traction) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(3);
    let mut rhs = vec![0.0; mesh.num_dofs()];
    for e in mesh.boundary_edges() {
        if e.tag != EdgeTag::CellBoundary {
            continue;
        }
        let [a, b] = e.nodes;
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let d = pb - pa;
        let len = d.norm();
        // The substrate is on the left of a -> b, so the cell is on the right.
        let normal = Point2::new(d.y, -d.x) * (1.0 / len);
        for (x, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (1.0 + x);
            let p = pa + d * s;
            let f = normal * (traction.at(p) * 0.5 * w * len);
            rhs[2 * a] += (1.0 - s) * f.x;
            rhs[2 * a + 1] += (1.0 - s) * f.y;
            rhs[2 * b] += s * f.x;
            rhs[2 * b + 1] += s * f.y;
        }
    }
    rhs
}

/// Traction boundary load on the cavity wall of a hole mesh.
pub fn rhs_hole_neumann(mesh: &Mesh, traction: &Traction) -> Result<Vec<f64>, ForceError> {
    if !mesh.cell_excluded() {
        return Err(ForceError::NotAHoleMesh);
    }
    Ok(cell_edge_traction(mesh, traction))
}

/// The cell-force model used to build a load vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForceModel {
    /// Midpoint point forces on `segments` boundary pieces.
    PointForces { segments: usize },
    /// Exact boundary integral with Gauss rules of the given order.
    ContinuousImmersed { order: usize },
    /// Face forces smoothed by Gaussians of width `eps`.
    SmoothedGaussian { eps: f64, segments: usize },
    /// Gradient of one Gaussian at the cell centre.
    SmoothedParticleGradient { eps: f64 },
    /// Traction condition on the wall of a hole mesh.
    HoleNeumann,
}

impl ForceModel {
    pub fn validate(&self, mesh: &Mesh) -> Result<(), ForceError> {
        let segments_ok = |n: usize| {
            if n == 0 || n % 4 != 0 {
                Err(ForceError::SegmentCount(n))
            } else {
                Ok(())
            }
        };
        let eps_ok = |eps: f64| {
            if eps.is_finite() && eps > 0.0 {
                Ok(())
            } else {
                Err(ForceError::Width(eps))
            }
        };
        match *self {
            Self::PointForces { segments } => segments_ok(segments),
            Self::ContinuousImmersed { order } => {
                if order == 0 {
                    Err(ForceError::QuadratureOrder)
                } else {
                    Ok(())
                }
            }
            Self::SmoothedGaussian { eps, segments } => {
                segments_ok(segments)?;
                eps_ok(eps)
            }
            Self::SmoothedParticleGradient { eps } => eps_ok(eps),
            Self::HoleNeumann => {
                if mesh.cell_excluded() {
                    Ok(())
                } else {
                    Err(ForceError::NotAHoleMesh)
                }
            }
        }
    }

    /// Builds the load vector for `cell` on `mesh`.
    ///
    /// The particle-gradient model uses the mean traction over the boundary
    /// midpoints (the exact value for a uniform traction).
    pub fn build_rhs(
        &self,
        mesh: &Mesh,
        cell: &SquareCell,
        traction: &Traction,
    ) -> Result<Vec<f64>, ForceError> {
        self.validate(mesh)?;
        match *self {
            Self::PointForces { segments } => {
                rhs_point_forces(mesh, &discretize_cell_boundary(cell, segments)?, traction)
            }
            Self::ContinuousImmersed { order } => {
                rhs_continuous_immersed(mesh, cell, traction, order)
            }
            Self::SmoothedGaussian { eps, segments } => rhs_smoothed_gaussian(
                mesh,
                &discretize_cell_boundary(cell, segments)?,
                traction,
                eps,
            ),
            Self::SmoothedParticleGradient { eps } => {
                let mid = discretize_cell_boundary(cell, 4)?;
                let p = mid
                    .segments
                    .iter()
                    .map(|s| traction.at(s.midpoint))
                    .sum::<f64>()
                    / 4.0;
                rhs_smoothed_particle_gradient(mesh, cell.center, p, eps, cell.side)
            }
            Self::HoleNeumann => rhs_hole_neumann(mesh, traction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;

    fn table1_cell() -> SquareCell {
        SquareCell::new(Point2::new(10.0, 10.0), 6.0)
    }

    fn mesh(h: f64, exclude: bool) -> Mesh {
        generate_mesh((20.0, 20.0), h, &table1_cell(), exclude).unwrap()
    }

    fn component_sums(rhs: &[f64]) -> (f64, f64) {
        let sx = rhs.iter().step_by(2).sum();
        let sy = rhs.iter().skip(1).step_by(2).sum();
        (sx, sy)
    }

    fn inf_norm(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn four_segments_sit_at_face_centres() {
        let g = discretize_cell_boundary(&table1_cell(), 4).unwrap();
        let mids: Vec<_> = g.segments.iter().map(|s| (s.midpoint, s.normal, s.measure)).collect();
        assert_eq!(
            mids,
            vec![
                (Point2::new(10.0, 7.0), Point2::new(0.0, 1.0), 6.0),
                (Point2::new(13.0, 10.0), Point2::new(-1.0, 0.0), 6.0),
                (Point2::new(10.0, 13.0), Point2::new(0.0, -1.0), 6.0),
                (Point2::new(7.0, 10.0), Point2::new(1.0, 0.0), 6.0),
            ]
        );
        let g8 = discretize_cell_boundary(&table1_cell(), 8).unwrap();
        assert_eq!(g8.segments[0].midpoint, Point2::new(8.5, 7.0));
        assert_eq!(g8.segments[1].midpoint, Point2::new(11.5, 7.0));
        assert_eq!(g8.segments[0].measure, 3.0);
        assert_eq!(g8.net_normal(), Point2::default());
        assert_eq!(
            discretize_cell_boundary(&table1_cell(), 6),
            Err(ForceError::SegmentCount(6))
        );
    }

    #[test]
    fn point_forces_on_nodes_give_full_weight() {
        let m = mesh(1.0, false);
        let g = discretize_cell_boundary(&table1_cell(), 4).unwrap();
        let rhs = rhs_point_forces(&m, &g, &Traction::Uniform(1.0)).unwrap();
        let nonzero: Vec<_> = rhs.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 4);
        let node = |x: f64, y: f64| m.find_node(Point2::new(x, y), 1e-12).unwrap();
        assert_eq!(rhs[2 * node(10.0, 7.0) + 1], 6.0);
        assert_eq!(rhs[2 * node(13.0, 10.0)], -6.0);
        assert_eq!(rhs[2 * node(10.0, 13.0) + 1], -6.0);
        assert_eq!(rhs[2 * node(7.0, 10.0)], 6.0);
    }

    #[test]
    fn every_model_is_self_equilibrated() {
        let full = mesh(0.5, false);
        let hole = mesh(0.5, true);
        let p = Traction::Uniform(1.0);
        let models = [
            (ForceModel::PointForces { segments: 48 }, &full),
            (ForceModel::PointForces { segments: 20 }, &full),
            (ForceModel::ContinuousImmersed { order: 2 }, &full),
            (ForceModel::SmoothedGaussian { eps: 0.5, segments: 48 }, &full),
            (ForceModel::SmoothedParticleGradient { eps: 1.0 }, &full),
            (ForceModel::HoleNeumann, &hole),
        ];
        for (model, m) in models {
            let rhs = model.build_rhs(m, &table1_cell(), &p).unwrap();
            let (sx, sy) = component_sums(&rhs);
            let scale = inf_norm(&rhs);
            assert!(scale > 0.0, "{model:?}");
            assert!(sx.abs() <= 1e-10 * scale && sy.abs() <= 1e-10 * scale, "{model:?}: {sx} {sy}");
            let zero = model.build_rhs(m, &table1_cell(), &Traction::Uniform(0.0)).unwrap();
            assert!(zero.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn hole_load_matches_continuous_immersed_on_shared_nodes() {
        let full = mesh(0.5, false);
        let hole = mesh(0.5, true);
        let p = Traction::Uniform(1.0);
        let a = rhs_continuous_immersed(&full, &table1_cell(), &p, 2).unwrap();
        let b = rhs_hole_neumann(&hole, &p).unwrap();
        let map = hole.node_map_to(&full);
        for (i, j) in map.iter().enumerate() {
            let j = j.unwrap();
            for c in 0..2 {
                assert!((a[2 * j + c] - b[2 * i + c]).abs() < 1e-12);
            }
        }
        // Aligned midpoints: point forces coincide with the exact integral too.
        let g = discretize_cell_boundary(&table1_cell(), segments_matching_mesh(&full)).unwrap();
        let pf = rhs_point_forces(&full, &g, &p).unwrap();
        for (x, y) in pf.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(rhs_hole_neumann(&full, &p), Err(ForceError::NotAHoleMesh));
    }

    #[test]
    fn single_left_edge_pushes_into_the_cell() {
        let hole = mesh(1.0, true);
        // Only the edge from (7,11) to (7,10) is loaded.
        let p = Traction::field(|q: Point2| if q.x == 7.0 && q.y > 10.0 && q.y < 11.0 { 1.0 } else { 0.0 });
        let rhs = rhs_hole_neumann(&hole, &p).unwrap();
        for y in [10.0, 11.0] {
            let n = hole.find_node(Point2::new(7.0, y), 1e-12).unwrap();
            assert!((rhs[2 * n] - 0.5).abs() < 1e-15);
            assert_eq!(rhs[2 * n + 1], 0.0);
        }
        assert!((rhs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn continuous_immersed_on_misaligned_square() {
        // Square boundary cutting through triangles: exact integral of P n phi.
        let m = mesh(1.0, false);
        let cell = SquareCell::new(Point2::new(10.3, 9.6), 3.7);
        let rhs2 = rhs_continuous_immersed(&m, &cell, &Traction::Uniform(1.0), 2).unwrap();
        let rhs5 = rhs_continuous_immersed(&m, &cell, &Traction::Uniform(1.0), 5).unwrap();
        for (a, b) in rhs2.iter().zip(&rhs5) {
            assert!((a - b).abs() < 1e-13);
        }
        // Total inward pull on the left side equals its length.
        let left: f64 = rhs2.iter().step_by(2).filter(|v| **v > 0.0).sum();
        assert!((left - 3.7).abs() < 1e-12);
        // Fine point forces approach it at second order in the segment size.
        let mut errs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let g = discretize_cell_boundary(&cell, 4 * n).unwrap();
            let pf = rhs_point_forces(&m, &g, &Traction::Uniform(1.0)).unwrap();
            errs.push(pf.iter().zip(&rhs5).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn gaussian_density_values() {
        let peak = gaussian_delta(&[0.0, 0.0], 1.0).unwrap();
        assert!((peak - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-16);
        let s = std::f64::consts::SQRT_2;
        let v = gaussian_delta(&[s, 0.0], 1.0).unwrap();
        assert!((v - peak * (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(gaussian_delta(&[0.0], 0.0), Err(ForceError::Width(0.0)));
        assert_eq!(gaussian_delta(&[0.0; 4], 1.0), Err(ForceError::Dimension(4)));
        let v1 = gaussian_delta(&[0.0], 0.5).unwrap();
        assert!((v1 - 1.0 / (0.5 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn smoothed_load_integrates_unit_mass() {
        // Single x-directed source far from the boundary: total load equals
        // the force, and the first moment equals the source position.
        let m = mesh(0.5, false);
        for eps in [1.0, 0.5, 0.25, 0.05] {
            let cell = CellGeometry {
                center: Point2::new(10.0, 10.0),
                side: 1.0,
                segments: vec![BoundarySegment {
                    midpoint: Point2::new(9.75, 10.25),
                    normal: Point2::new(1.0, 0.0),
                    measure: 1.0,
                }],
            };
            let rhs = rhs_smoothed_gaussian(&m, &cell, &Traction::Uniform(1.0), eps).unwrap();
            let (sx, sy) = component_sums(&rhs);
            assert!((sx - 1.0).abs() < 1e-7, "eps {eps}: {sx}");
            assert!(sy.abs() < 1e-15);
            let mx: f64 = (0..m.num_nodes()).map(|n| rhs[2 * n] * m.nodes()[n].x).sum();
            assert!((mx - 9.75).abs() < 1e-6, "eps {eps}: {mx}");
        }
    }

    #[test]
    fn smoothed_approaches_point_load_quadratically_off_edges() {
        // Source inside a triangle: phi is linear nearby, so the smoothed
        // load equals the point load up to the cutoff and quadrature error.
        let m = mesh(1.0, false);
        let at = Point2::new(10.3, 10.6);
        let cell = CellGeometry {
            center: at,
            side: 1.0,
            segments: vec![BoundarySegment {
                midpoint: at,
                normal: Point2::new(0.0, 1.0),
                measure: 1.0,
            }],
        };
        let exact = rhs_point_forces(&m, &cell, &Traction::Uniform(1.0)).unwrap();
        let rhs = rhs_smoothed_gaussian(&m, &cell, &Traction::Uniform(1.0), 0.02).unwrap();
        let diff = rhs.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn particle_gradient_is_odd_about_the_centre() {
        let m = mesh(0.5, false);
        let c = Point2::new(10.0, 10.0);
        let rhs = rhs_smoothed_particle_gradient(&m, c, 1.0, 0.75, 2.0).unwrap();
        let scale = inf_norm(&rhs);
        for (i, p) in m.nodes().iter().enumerate() {
            let mirror = m.find_node(Point2::new(20.0 - p.x, 20.0 - p.y), 1e-9).unwrap();
            assert!((rhs[2 * i] + rhs[2 * mirror]).abs() <= 1e-12 * scale);
            assert!((rhs[2 * i + 1] + rhs[2 * mirror + 1]).abs() <= 1e-12 * scale);
        }
        // Pulls towards the centre.
        let left = m.find_node(Point2::new(9.5, 10.0), 1e-9).unwrap();
        assert!(rhs[2 * left] > 0.0);
        assert!(rhs_smoothed_particle_gradient(&m, c, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn model_validation() {
        let full = mesh(1.0, false);
        assert_eq!(
            ForceModel::HoleNeumann.validate(&full),
            Err(ForceError::NotAHoleMesh)
        );
        assert!(ForceModel::SmoothedGaussian { eps: -1.0, segments: 4 }.validate(&full).is_err());
        assert!(ForceModel::PointForces { segments: 3 }.validate(&full).is_err());
        assert!(ForceModel::ContinuousImmersed { order: 0 }.validate(&full).is_err());
        assert!(check_width_resolution(&full, 0.1));
        assert!(!check_width_resolution(&full, 0.09));
    }
}
