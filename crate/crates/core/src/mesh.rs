//! Structured conforming triangulations of a rectangle containing a square cell.
//!
//! Every grid square is split along its lower-left to upper-right diagonal.
//! The mesh size must align the cell square with grid lines, so the cell
//! boundary is always a union of mesh edges. This keeps the immersed, the
//! stiffness-adjusted and the "hole" discretizations on one shared node set.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{twice_signed_area, Point2, SquareCell};

/// Relative tolerance used when checking that lengths are multiples of the mesh size.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("cell square [{lo_x}, {hi_x}] x [{lo_y}, {hi_y}] is not strictly inside the {width} x {height} domain")]
    CellOutsideDomain {
        lo_x: f64,
        lo_y: f64,
        hi_x: f64,
        hi_y: f64,
        width: f64,
        height: f64,
    },
    #[error("mesh size {h} does not align with {what} = {value}")]
    Misaligned { what: &'static str, value: f64, h: f64 },
    #[error("mesh size must be positive and finite, got {0}")]
    InvalidSize(f64),
    #[error("point ({x}, {y}) is not inside any triangle")]
    PointNotFound { x: f64, y: f64 },
    #[error("mesh invariant violated: {0}")]
    Invalid(String),
}

/// Material region of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    CellInterior,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    OuterBoundary,
    CellBoundary,
}

/// A tagged edge. Node order follows the owning exterior triangle's
/// counterclockwise orientation, so the substrate lies on the left of
/// `nodes[0] -> nodes[1]` and the cell (or the outside world) on the right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    boundary_edges: Vec<BoundaryEdge>,
    h_target: f64,
    domain: Point2,
    cell: SquareCell,
    cell_excluded: bool,
}

fn aligned_count(value: f64, h: f64, what: &'static str) -> Result<usize, MeshError> {
    let q = value / h;
    let r = q.round();
    if r < 0.0 || (q - r).abs() > ALIGN_TOL * q.abs().max(1.0) {
        return Err(MeshError::Misaligned { what, value, h });
    }
    Ok(r as usize)
}

/// Builds the structured triangulation of `[0, width] x [0, height]`.
///
/// With `exclude_cell_interior` the triangles inside the cell are dropped,
/// together with the nodes that only they used, giving the "hole" domain.
pub fn generate_mesh(
    domain: (f64, f64),
    h_target: f64,
    cell: &SquareCell,
    exclude_cell_interior: bool,
) -> Result<Mesh, MeshError> {
    if !(h_target.is_finite() && h_target > 0.0) {
        return Err(MeshError::InvalidSize(h_target));
    }
    let (width, height) = domain;
    let lo = cell.lower_left();
    let hi = cell.upper_right();
    if !(cell.side > 0.0 && lo.x > 0.0 && lo.y > 0.0 && hi.x < width && hi.y < height) {
        return Err(MeshError::CellOutsideDomain {
            lo_x: lo.x,
            lo_y: lo.y,
            hi_x: hi.x,
            hi_y: hi.y,
            width,
            height,
        });
    }
    let nx = aligned_count(width, h_target, "domain width")?;
    let ny = aligned_count(height, h_target, "domain height")?;
    let cx0 = aligned_count(lo.x, h_target, "cell left edge")?;
    let cy0 = aligned_count(lo.y, h_target, "cell bottom edge")?;
    let ncell = aligned_count(cell.side, h_target, "cell side")?;
    let hx = width / nx as f64;
    let hy = height / ny as f64;

    let grid_index = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point2::new(i as f64 * hx, j as f64 * hy));
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut regions = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let inside = (cx0..cx0 + ncell).contains(&i) && (cy0..cy0 + ncell).contains(&j);
            if inside && exclude_cell_interior {
                continue;
            }
            let region = if inside {
                Region::CellInterior
            } else {
                Region::Exterior
            };
            let a = grid_index(i, j);
            let b = grid_index(i + 1, j);
            let c = grid_index(i + 1, j + 1);
            let d = grid_index(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
            regions.push(region);
            regions.push(region);
        }
    }

    if exclude_cell_interior {
        compact_nodes(&mut nodes, &mut triangles);
    }

    let mut mesh = Mesh {
        nodes,
        triangles,
        regions,
        boundary_edges: Vec::new(),
        h_target,
        domain: Point2::new(width, height),
        cell: *cell,
        cell_excluded: exclude_cell_interior,
    };
    mesh.boundary_edges = mesh.classify_edges();
    Ok(mesh)
}

/// Drops nodes not referenced by any triangle, keeping the relative order.
fn compact_nodes(nodes: &mut Vec<Point2>, triangles: &mut [[usize; 3]]) {
    let mut used = vec![false; nodes.len()];
    for t in triangles.iter() {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::with_capacity(nodes.len());
    for (old, p) in nodes.iter().enumerate() {
        if used[old] {
            remap[old] = kept.len();
            kept.push(*p);
        }
    }
    for t in triangles.iter_mut() {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    *nodes = kept;
}

impl Mesh {
    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn h_target(&self) -> f64 {
        self.h_target
    }

    /// Domain extent `(width, height)`; the domain is anchored at the origin.
    pub fn domain_size(&self) -> (f64, f64) {
        (self.domain.x, self.domain.y)
    }

    pub fn cell(&self) -> &SquareCell {
        &self.cell
    }

    /// Whether the cell interior was removed (the "hole" domain).
    pub fn cell_excluded(&self) -> bool {
        self.cell_excluded
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * twice_signed_area(a, b, c)
    }

    /// Total area of the triangles, optionally restricted to one region.
    pub fn area(&self, region: Option<Region>) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| region.is_none_or(|r| self.regions[t] == r))
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Number of distinct edges.
    pub fn num_edges(&self) -> usize {
        self.edge_owners().len()
    }

    /// Maps every undirected edge `(min, max)` to the triangles that use it,
    /// in triangle order.
    fn edge_owners(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                owners.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        owners
    }

    fn on_outer_boundary(&self, p: Point2) -> bool {
        let tol = ALIGN_TOL * self.domain.x.max(self.domain.y);
        p.x.abs() <= tol
            || p.y.abs() <= tol
            || (p.x - self.domain.x).abs() <= tol
            || (p.y - self.domain.y).abs() <= tol
    }

    /// Derives the tagged edge list from connectivity, in triangle order.
    fn classify_edges(&self) -> Vec<BoundaryEdge> {
        let owners = self.edge_owners();
        let mut edges = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.regions[t] != Region::Exterior {
                continue;
            }
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let users = &owners[&(a.min(b), a.max(b))];
                let tag = match users.as_slice() {
                    [_] => {
                        let mid = self.nodes[a].midpoint(self.nodes[b]);
                        if self.on_outer_boundary(mid) {
                            EdgeTag::OuterBoundary
                        } else {
                            EdgeTag::CellBoundary
                        }
                    }
                    [s, u] => {
                        let other = if *s == t { *u } else { *s };
                        if self.regions[other] == Region::CellInterior {
                            EdgeTag::CellBoundary
                        } else {
                            continue;
                        }
                    }
                    _ => continue,
                };
                edges.push(BoundaryEdge { nodes: [a, b], tag });
            }
        }
        edges
    }

    /// Uniform red refinement: each triangle becomes four via its edge midpoints.
    pub fn refine(&self) -> Mesh {
        let mut nodes = self.nodes.clone();
        let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point2>| -> usize {
            *midpoint_of.entry((a.min(b), a.max(b))).or_insert_with(|| {
                nodes.push(nodes[a].midpoint(nodes[b]));
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut regions = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            regions.extend_from_slice(&[self.regions[t]; 4]);
        }
        let mut mesh = Mesh {
            nodes,
            triangles,
            regions,
            boundary_edges: Vec::new(),
            h_target: 0.5 * self.h_target,
            domain: self.domain,
            cell: self.cell,
            cell_excluded: self.cell_excluded,
        };
        mesh.boundary_edges = mesh.classify_edges();
        mesh
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point2) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let det = twice_signed_area(a, b, c);
        let l1 = twice_signed_area(p, b, c) / det;
        let l2 = twice_signed_area(a, p, c) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    /// Finds the lowest-index triangle containing `p` (closed triangles),
    /// returning clamped barycentric coordinates that sum to one.
    pub fn locate_point(&self, p: Point2) -> Result<(usize, [f64; 3]), MeshError> {
        let tol = 1e-12;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            if p.x < a.x.min(b.x).min(c.x) - tol
                || p.x > a.x.max(b.x).max(c.x) + tol
                || p.y < a.y.min(b.y).min(c.y) - tol
                || p.y > a.y.max(b.y).max(c.y) + tol
            {
                continue;
            }
            let l = self.barycentric(t, p);
            if l.iter().all(|&v| v >= -tol) {
                let mut l = l.map(|v| v.max(0.0));
                let s: f64 = l.iter().sum();
                for v in l.iter_mut() {
                    *v /= s;
                }
                return Ok((t, l));
            }
        }
        Err(MeshError::PointNotFound { x: p.x, y: p.y })
    }

    /// Index of the node at `p`, if any lies within `tol`.
    pub fn find_node(&self, p: Point2, tol: f64) -> Option<usize> {
        self.nodes.iter().position(|q| q.distance(p) <= tol)
    }

    /// For each node of `self`, the index of the coincident node in `other`.
    pub fn node_map_to(&self, other: &Mesh) -> Vec<Option<usize>> {
        let scale = 1e-9 * self.h_target.min(other.h_target);
        let key = |p: Point2| ((p.x / scale).round() as i64, (p.y / scale).round() as i64);
        let lookup: HashMap<(i64, i64), usize> = other
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| (key(p), i))
            .collect();
        self.nodes.iter().map(|&p| lookup.get(&key(p)).copied()).collect()
    }

    /// Node indices on the boundary of the axis-aligned rectangle
    /// `[lo, hi]`, counterclockwise from `lo`. Every mesh node on the
    /// rectangle's boundary is included.
    pub fn rectangle_loop(&self, lo: Point2, hi: Point2) -> Result<Vec<usize>, MeshError> {
        let tol = 1e-9 * self.h_target;
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        // Perimeter parameter, counterclockwise from `lo`.
        let param = |p: Point2| -> Option<f64> {
            let on_x = p.x >= lo.x - tol && p.x <= hi.x + tol;
            let on_y = p.y >= lo.y - tol && p.y <= hi.y + tol;
            if (p.y - lo.y).abs() <= tol && on_x {
                Some(p.x - lo.x)
            } else if (p.x - hi.x).abs() <= tol && on_y {
                Some(w + p.y - lo.y)
            } else if (p.y - hi.y).abs() <= tol && on_x {
                Some(w + h + hi.x - p.x)
            } else if (p.x - lo.x).abs() <= tol && on_y {
                Some(2.0 * w + h + hi.y - p.y)
            } else {
                None
            }
        };
        let mut found: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| param(p).map(|s| (s, i)))
            .collect();
        for corner in [lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)] {
            if self.find_node(corner, tol).is_none() {
                return Err(MeshError::Misaligned {
                    what: "rectangle corner",
                    value: corner.x,
                    h: self.h_target,
                });
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        let perimeter = 2.0 * (w + h);
        // The lower-left corner may also match the closing parameter.
        found.retain(|&(s, _)| s < perimeter - tol);
        found.dedup_by_key(|e| e.1);
        Ok(found.into_iter().map(|(_, i)| i).collect())
    }

    /// Nodes on the cell boundary, counterclockwise from the lower-left corner.
    pub fn cell_boundary_loop(&self) -> Result<Vec<usize>, MeshError> {
        self.rectangle_loop(self.cell.lower_left(), self.cell.upper_right())
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                best = best.min(ang);
            }
        }
        best
    }

    /// Checks the structural invariants: positive orientation, edge
    /// multiplicities, cell-boundary conformity and total area.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::Invalid(format!(
                    "triangle {t} has non-positive area"
                )));
            }
        }
        let owners = self.edge_owners();
        let mut boundary_count = 0usize;
        for (&(a, b), users) in &owners {
            match users.len() {
                1 => boundary_count += 1,
                2 => {}
                n => {
                    return Err(MeshError::Invalid(format!(
                        "edge ({a}, {b}) is shared by {n} triangles"
                    )))
                }
            }
        }
        let outer = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == EdgeTag::OuterBoundary)
            .count();
        let cell_edges: Vec<_> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == EdgeTag::CellBoundary)
            .collect();
        let expected_boundary = if self.cell_excluded {
            outer + cell_edges.len()
        } else {
            outer
        };
        if boundary_count != expected_boundary {
            return Err(MeshError::Invalid(format!(
                "{boundary_count} single-owner edges but {expected_boundary} tagged boundary edges"
            )));
        }
        for e in &cell_edges {
            let [a, b] = e.nodes;
            let users = &owners[&(a.min(b), a.max(b))];
            let ok = if self.cell_excluded {
                users.len() == 1 && self.regions[users[0]] == Region::Exterior
            } else {
                users.len() == 2 && self.regions[users[0]] != self.regions[users[1]]
            };
            if !ok {
                return Err(MeshError::Invalid(format!(
                    "cell boundary edge ({a}, {b}) is not conforming"
                )));
            }
            let mid = self.nodes[a].midpoint(self.nodes[b]);
            if self.cell.distance_to_boundary(mid) > 1e-9 * self.h_target {
                return Err(MeshError::Invalid(format!(
                    "cell boundary edge ({a}, {b}) is off the cell square"
                )));
            }
        }
        let expected_area = self.domain.x * self.domain.y
            - if self.cell_excluded {
                self.cell.area()
            } else {
                0.0
            };
        let area = self.area(None);
        if (area - expected_area).abs() > 1e-12 * expected_area {
            return Err(MeshError::Invalid(format!(
                "triangle areas sum to {area}, expected {expected_area}"
            )));
        }
        Ok(())
    }

    /// Plain-text dump: node, triangle and tagged-edge tables.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# nodes {}", self.nodes.len())?;
        writeln!(w, "# index x y")?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(w, "{i} {:.17e} {:.17e}", p.x, p.y)?;
        }
        writeln!(w, "# triangles {}", self.triangles.len())?;
        writeln!(w, "# index a b c region")?;
        for (t, tri) in self.triangles.iter().enumerate() {
            let tag = match self.regions[t] {
                Region::CellInterior => "cell",
                Region::Exterior => "exterior",
            };
            writeln!(w, "{t} {} {} {} {tag}", tri[0], tri[1], tri[2])?;
        }
        writeln!(w, "# edges {}", self.boundary_edges.len())?;
        writeln!(w, "# index a b tag")?;
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let tag = match e.tag {
                EdgeTag::OuterBoundary => "outer",
                EdgeTag::CellBoundary => "cell",
            };
            writeln!(w, "{k} {} {} {tag}", e.nodes[0], e.nodes[1])?;
        }
        Ok(())
    }
}
