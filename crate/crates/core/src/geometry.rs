//! Small planar geometry vocabulary shared by every module.

use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Axis-aligned square biological cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareCell {
    pub center: Point2,
    pub side: f64,
}

impl SquareCell {
    pub fn new(center: Point2, side: f64) -> Self {
        Self { center, side }
    }

    pub fn lower_left(&self) -> Point2 {
        Point2::new(self.center.x - 0.5 * self.side, self.center.y - 0.5 * self.side)
    }

    pub fn upper_right(&self) -> Point2 {
        Point2::new(self.center.x + 0.5 * self.side, self.center.y + 0.5 * self.side)
    }

    pub fn perimeter(&self) -> f64 {
        4.0 * self.side
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Strict containment of `p` in the open square.
    pub fn contains(&self, p: Point2) -> bool {
        let half = 0.5 * self.side;
        (p.x - self.center.x).abs() < half && (p.y - self.center.y).abs() < half
    }

    /// Corners in counterclockwise order starting at the lower left.
    pub fn corners(&self) -> [Point2; 4] {
        let lo = self.lower_left();
        let hi = self.upper_right();
        [lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)]
    }

    /// Distance from `p` to the square's boundary curve.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        let c = self.corners();
        (0..4)
            .map(|k| point_segment_distance(p, c[k], c[(k + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Twice the signed area of the triangle `abc` (positive when counterclockwise).
pub fn twice_signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Signed shoelace area of a closed polygon (positive when counterclockwise).
pub fn polygon_signed_area(points: &[Point2]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        twice += p.cross(q);
    }
    0.5 * twice
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// Proper or touching intersection of the closed segments `ab` and `cd`.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = twice_signed_area(a, b, c);
    let o2 = twice_signed_area(a, b, d);
    let o3 = twice_signed_area(c, d, a);
    let o4 = twice_signed_area(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on_segment = |p: Point2, q: Point2, r: Point2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// True when some pair of non-adjacent edges of the closed polygon intersect.
pub fn polygon_self_intersects(points: &[Point2]) -> bool {
    let n = points.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = points[j];
            let d = points[(j + 1) % n];
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_unit_square() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(polygon_signed_area(&sq), 1.0);
        let mut cw = sq;
        cw.reverse();
        assert_eq!(polygon_signed_area(&cw), -1.0);
        assert!(!polygon_self_intersects(&sq));
    }

    #[test]
    fn bow_tie_self_intersects() {
        let bow = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(polygon_self_intersects(&bow));
    }

    #[test]
    fn cell_boundary_distance() {
        let cell = SquareCell::new(Point2::new(10.0, 10.0), 6.0);
        assert_eq!(cell.distance_to_boundary(Point2::new(10.0, 10.0)), 3.0);
        assert_eq!(cell.distance_to_boundary(Point2::new(0.0, 10.0)), 7.0);
        assert!(cell.contains(Point2::new(12.9, 7.1)));
        assert!(!cell.contains(Point2::new(13.0, 10.0)));
    }
}
