//! One-dimensional model problem with a closed-form solution.
//!
//! `-u'' = delta(x - a) - delta(x - b)` on `(0, L)` with `u(0) = u(L) = 0`,
//! where `a = c - s/2` and `b = c + s/2` are the edges of a cell of size `s`
//! centred at `c`. The exact solution is piecewise linear with kinks at `a`
//! and `b`, so P1 elements reproduce it at the nodes whenever both points
//! are mesh nodes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Verify1dError {
    #[error("cell [{lo}, {hi}] must lie strictly inside (0, {length})")]
    CellOutside { lo: f64, hi: f64, length: f64 },
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("point {x} is outside [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("mesh too coarse to place both force points on distinct interior nodes")]
    CannotAlign,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell1D {
    pub length: f64,
    pub center: f64,
    pub size: f64,
}

impl Cell1D {
    pub fn new(length: f64, center: f64, size: f64) -> Result<Self, Verify1dError> {
        let c = Self {
            length,
            center,
            size,
        };
        let (lo, hi) = c.force_points();
        if !(size > 0.0 && lo > 0.0 && hi < length) {
            return Err(Verify1dError::CellOutside { lo, hi, length });
        }
        Ok(c)
    }

    /// `(c - s/2, c + s/2)`: where the cell pulls in the positive and the
    /// negative direction.
    pub fn force_points(&self) -> (f64, f64) {
        (self.center - 0.5 * self.size, self.center + 0.5 * self.size)
    }
}

/// `u(x) = s x / L + (x - b)_+ - (x - a)_+`.
pub fn exact_1d(cell: &Cell1D, x: f64) -> Result<f64, Verify1dError> {
    if !(0.0..=cell.length).contains(&x) {
        return Err(Verify1dError::OutOfDomain {
            x,
            length: cell.length,
        });
    }
    let (a, b) = cell.force_points();
    Ok(cell.size * x / cell.length + (x - b).max(0.0) - (x - a).max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution1D {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl Solution1D {
    /// Largest nodal deviation from the closed form.
    pub fn max_nodal_error(&self, cell: &Cell1D) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(&x, &u)| (u - exact_1d(cell, x).expect("nodes lie in the domain")).abs())
            .fold(0.0, f64::max)
    }

    /// L2 error of the piecewise-linear interpolant against the closed form,
    /// integrated with 5-point Gauss rules on each side of every kink.
    pub fn l2_error(&self, cell: &Cell1D) -> f64 {
        let (gx, gw) = crate::quadrature::gauss_legendre(5);
        let (a, b) = cell.force_points();
        let mut total = 0.0;
        for k in 0..self.nodes.len() - 1 {
            let (x0, x1) = (self.nodes[k], self.nodes[k + 1]);
            let (u0, u1) = (self.values[k], self.values[k + 1]);
            let mut cuts = vec![x0, x1];
            cuts.extend([a, b].into_iter().filter(|&p| p > x0 && p < x1));
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let half = 0.5 * (w[1] - w[0]);
                for (x, wt) in gx.iter().zip(&gw) {
                    let p = w[0] + half * (1.0 + x);
                    let uh = u0 + (u1 - u0) * (p - x0) / (x1 - x0);
                    let e = uh - exact_1d(cell, p).expect("inside");
                    total += wt * half * e * e;
                }
            }
        }
        total.sqrt()
    }
}

/// Uniform grid with `n` nodes; with `align`, the nodes nearest to the two
/// force points are moved onto them.
fn grid(cell: &Cell1D, n: usize, align: bool) -> Result<Vec<f64>, Verify1dError> {
    let h = cell.length / (n - 1) as f64;
    let mut x: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    x[n - 1] = cell.length;
    if align {
        let (a, b) = cell.force_points();
        let ia = (a / h).round() as usize;
        let ib = (b / h).round() as usize;
        if ia == 0 || ib >= n - 1 || ia == ib {
            return Err(Verify1dError::CannotAlign);
        }
        x[ia] = a;
        x[ib] = b;
    }
    Ok(x)
}

/// P1 Galerkin solution on `n` nodes with homogeneous Dirichlet ends.
pub fn solve_1d(cell: &Cell1D, n: usize, align: bool) -> Result<Solution1D, Verify1dError> {
    if n < 3 {
        return Err(Verify1dError::TooFewNodes(n));
    }
    let x = grid(cell, n, align)?;
    let (a, b) = cell.force_points();
    let mut rhs = vec![0.0; n];
    for (p, sign) in [(a, 1.0), (b, -1.0)] {
        // Lowest-index element containing p.
        let k = x.windows(2).position(|w| p >= w[0] && p <= w[1]).ok_or(
            Verify1dError::OutOfDomain {
                x: p,
                length: cell.length,
            },
        )?;
        let t = (p - x[k]) / (x[k + 1] - x[k]);
        rhs[k] += sign * (1.0 - t);
        rhs[k + 1] += sign * t;
    }

    // Tridiagonal system on the interior nodes 1..n-1 (Thomas algorithm).
    let m = n - 2;
    let inv_h: Vec<f64> = x.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
    let diag: Vec<f64> = (1..=m).map(|i| inv_h[i - 1] + inv_h[i]).collect();
    let off: Vec<f64> = (1..m).map(|i| -inv_h[i]).collect();
    let mut d = rhs[1..n - 1].to_vec();
    let mut c = vec![0.0; m];
    let mut piv = diag[0];
    c[0] = if m > 1 { off[0] / piv } else { 0.0 };
    d[0] /= piv;
    for i in 1..m {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if i < m - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (d[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..m.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    let mut values = vec![0.0; n];
    values[1..n - 1].copy_from_slice(&d);
    Ok(Solution1D { nodes: x, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let cell = Cell1D::new(1.0, 0.5, 0.25).unwrap();
        assert_eq!(exact_1d(&cell, 0.0).unwrap(), 0.0);
        assert!(exact_1d(&cell, 1.0).unwrap().abs() < 1e-16);
        // u(0.5) = 0.125 + 0 - 0.125.
        assert!(exact_1d(&cell, 0.5).unwrap().abs() < 1e-16);
        assert!((exact_1d(&cell, 0.375).unwrap() - 0.25 * 0.375).abs() < 1e-16);
        assert!(exact_1d(&cell, 1.5).is_err());
        let cell = Cell1D::new(20.0, 10.0, 6.0).unwrap();
        assert!((exact_1d(&cell, 7.0).unwrap() - 6.0 * 7.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn aligned_mesh_is_nodally_exact() {
        let cell = Cell1D::new(20.0, 10.0, 6.0).unwrap();
        let sol = solve_1d(&cell, 161, true).unwrap();
        assert!(sol.max_nodal_error(&cell) <= 1e-12);
        assert_eq!(sol.values[0], 0.0);
        assert_eq!(sol.values[160], 0.0);
        // Snapping also works when the force points are off the uniform grid.
        let cell = Cell1D::new(1.0, 0.41, 0.17).unwrap();
        let sol = solve_1d(&cell, 40, true).unwrap();
        assert!(sol.max_nodal_error(&cell) <= 1e-12);
    }

    #[test]
    fn misaligned_mesh_converges() {
        let cell = Cell1D::new(1.0, 0.41, 0.17).unwrap();
        let errs: Vec<f64> = [11, 21, 41, 81]
            .iter()
            .map(|&n| solve_1d(&cell, n, false).unwrap().l2_error(&cell))
            .collect();
        let h: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|k| 1.0 / k).collect();
        let order = crate::analysis::loglog_slope(&h, &errs).unwrap();
        assert!(order >= 1.0, "{order} {errs:?}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(Cell1D::new(1.0, 0.1, 0.4).is_err());
        let cell = Cell1D::new(1.0, 0.5, 0.25).unwrap();
        assert_eq!(solve_1d(&cell, 2, false), Err(Verify1dError::TooFewNodes(2)));
        assert_eq!(solve_1d(&cell, 3, true), Err(Verify1dError::CannotAlign));
    }
}
