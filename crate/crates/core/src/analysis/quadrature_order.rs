use crate::geometry::SquareCell;
use crate::quadrature::gauss_legendre;

use super::ConvergenceStudy;

/// Closed surface on which the midpoint rule is tested.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Surface {
    /// Boundary curve of a square in the plane (`z = 0`).
    Square(SquareCell),
    /// Surface of an axis-aligned cube, each face split into right triangles.
    Cube { origin: [f64; 3], side: f64 },
}

/// Starting subdivision of each square side; coarser levels are not yet
/// in the asymptotic regime for strongly varying integrands.
const SQUARE_BASE_PIECES: usize = 4;
const REFERENCE_POINTS: usize = 64;

type Triangle3 = [[f64; 3]; 3];

fn cube_faces(origin: [f64; 3], side: f64) -> Vec<([f64; 3], [f64; 3], [f64; 3])> {
    // (corner, edge u, edge v) for each of the six faces.
    let o = origin;
    let s = side;
    let mut faces = Vec::with_capacity(6);
    for axis in 0..3 {
        let u_axis = (axis + 1) % 3;
        let v_axis = (axis + 2) % 3;
        for offset in [0.0, s] {
            let mut corner = o;
            corner[axis] += offset;
            let mut u = [0.0; 3];
            let mut v = [0.0; 3];
            u[u_axis] = s;
            v[v_axis] = s;
            faces.push((corner, u, v));
        }
    }
    faces
}

fn cube_triangulation(origin: [f64; 3], side: f64, n: usize) -> Vec<Triangle3> {
    let mut tris = Vec::with_capacity(12 * n * n);
    let at = |c: [f64; 3], u: [f64; 3], v: [f64; 3], i: usize, j: usize| -> [f64; 3] {
        let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
        [
            c[0] + a * u[0] + b * v[0],
            c[1] + a * u[1] + b * v[1],
            c[2] + a * u[2] + b * v[2],
        ]
    };
    for (c, u, v) in cube_faces(origin, side) {
        for j in 0..n {
            for i in 0..n {
                let p00 = at(c, u, v, i, j);
                let p10 = at(c, u, v, i + 1, j);
                let p11 = at(c, u, v, i + 1, j + 1);
                let p01 = at(c, u, v, i, j + 1);
                tris.push([p00, p10, p11]);
                tris.push([p00, p11, p01]);
            }
        }
    }
    tris
}

fn triangle_area3(t: &Triangle3) -> f64 {
    let e1 = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let e2 = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let c = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

fn max_edge(t: &Triangle3) -> f64 {
    (0..3)
        .map(|k| {
            let a = t[k];
            let b = t[(k + 1) % 3];
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Segments `(start, direction)` of the square boundary, counterclockwise.
fn square_sides(cell: &SquareCell) -> [([f64; 2], [f64; 2]); 4] {
    let c = cell.corners();
    [
        ([c[0].x, c[0].y], [1.0, 0.0]),
        ([c[1].x, c[1].y], [0.0, 1.0]),
        ([c[2].x, c[2].y], [-1.0, 0.0]),
        ([c[3].x, c[3].y], [0.0, -1.0]),
    ]
}

fn square_reference(cell: &SquareCell, f: &dyn Fn([f64; 3]) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(REFERENCE_POINTS);
    let half = 0.5 * cell.side;
    let mut total = 0.0;
    for (s, d) in square_sides(cell) {
        for (x, w) in gx.iter().zip(&gw) {
            let t = half * (1.0 + x);
            total += w * half * f([s[0] + d[0] * t, s[1] + d[1] * t, 0.0]);
        }
    }
    total
}

fn cube_reference(origin: [f64; 3], side: f64, f: &dyn Fn([f64; 3]) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(REFERENCE_POINTS / 4);
    let mut total = 0.0;
    for (c, u, v) in cube_faces(origin, side) {
        for (a, wa) in gx.iter().zip(&gw) {
            for (b, wb) in gx.iter().zip(&gw) {
                let (sa, sb) = (0.5 * (1.0 + a), 0.5 * (1.0 + b));
                let p = [
                    c[0] + sa * u[0] + sb * v[0],
                    c[1] + sa * u[1] + sb * v[1],
                    c[2] + sa * u[2] + sb * v[2],
                ];
                total += 0.25 * wa * wb * side * side * f(p);
            }
        }
    }
    total
}

/// Midpoint-rule surface sums `sum f(x_j) |S_j|` under uniform refinement.
///
/// Each level records `(largest element diameter, |midpoint sum - reference|)`;
/// the reference is a high-order tensor Gauss rule on the exact surface.
/// Squares start at 4 pieces per side, cubes at one square per face.
pub fn midpoint_quadrature_order(
    surface: &Surface,
    f: &dyn Fn([f64; 3]) -> f64,
    levels: usize,
) -> ConvergenceStudy {
    let mut study = ConvergenceStudy::default();
    match *surface {
        Surface::Square(cell) => {
            let reference = square_reference(&cell, f);
            for level in 0..levels {
                let per_side = SQUARE_BASE_PIECES << level;
                let ds = cell.side / per_side as f64;
                let mut sum = 0.0;
                for (s, d) in square_sides(&cell) {
                    for k in 0..per_side {
                        let t = (k as f64 + 0.5) * ds;
                        sum += ds * f([s[0] + d[0] * t, s[1] + d[1] * t, 0.0]);
                    }
                }
                study.push(ds, sum - reference);
            }
        }
        Surface::Cube { origin, side } => {
            let reference = cube_reference(origin, side, f);
            for level in 0..levels {
                let tris = cube_triangulation(origin, side, 1 << level);
                let mut sum = 0.0;
                let mut h = 0.0f64;
                for t in &tris {
                    let centroid = [
                        (t[0][0] + t[1][0] + t[2][0]) / 3.0,
                        (t[0][1] + t[1][1] + t[2][1]) / 3.0,
                        (t[0][2] + t[1][2] + t[2][2]) / 3.0,
                    ];
                    sum += triangle_area3(t) * f(centroid);
                    h = h.max(max_edge(t));
                }
                study.push(h, sum - reference);
            }
        }
    }
    study
}
