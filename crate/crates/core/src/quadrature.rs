//! Quadrature rules on intervals and triangles.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `n` points.
///
/// Nodes are the roots of `P_n`, found by Newton iteration from the
/// Chebyshev-like initial guesses; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Symmetric quadrature on a triangle in barycentric coordinates.
/// Weights sum to one; multiply by the triangle area.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    fn from_orbits(orbits: &[(f64, Orbit)]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, orbit) in orbits {
            let pts: Vec<[f64; 3]> = match orbit {
                Orbit::Centroid => vec![[1.0 / 3.0; 3]],
                Orbit::Two(a, b) => vec![[a, b, b], [b, a, b], [b, b, a]],
                Orbit::Three(a, b, c) => vec![
                    [a, b, c],
                    [a, c, b],
                    [b, a, c],
                    [b, c, a],
                    [c, a, b],
                    [c, b, a],
                ],
            };
            for p in pts {
                points.push(p);
                weights.push(w);
            }
        }
        Self { points, weights }
    }

    /// 7-point rule, exact for degree 5.
    pub fn degree5() -> Self {
        Self::from_orbits(&[
            (0.225, Orbit::Centroid),
            (
                0.132_394_152_788_506,
                Orbit::Two(0.059_715_871_789_770, 0.470_142_064_105_115),
            ),
            (
                0.125_939_180_544_827,
                Orbit::Two(0.797_426_985_353_087, 0.101_286_507_323_456),
            ),
        ])
    }

    /// 13-point rule, exact for degree 7.
    pub fn degree7() -> Self {
        Self::from_orbits(&[
            (-0.149_570_044_467_682, Orbit::Centroid),
            (
                0.175_615_257_433_208,
                Orbit::Two(0.479_308_067_841_920, 0.260_345_966_079_040),
            ),
            (
                0.053_347_235_608_838,
                Orbit::Two(0.869_739_794_195_568, 0.065_130_102_902_216),
            ),
            (
                0.077_113_760_890_257,
                Orbit::Three(0.048_690_315_425_316, 0.312_865_496_004_874, 0.638_444_188_569_810),
            ),
        ])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
enum Orbit {
    Centroid,
    Two(f64, f64),
    Three(f64, f64, f64),
}
