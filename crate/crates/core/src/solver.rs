//! Solvers for the constrained stiffness systems.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::elasticity::StiffnessSystem;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Conjugate gradients with a diagonal preconditioner.
    CgJacobi,
    /// Envelope (skyline) Cholesky factorization.
    DirectCholesky,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CgJacobi => "cg-jacobi",
            Self::DirectCholesky => "cholesky",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Target relative residual `|K u - f| / |f|`.
    pub tol: f64,
    /// Iteration cap; `None` means `20 * dofs`.
    pub max_iter: Option<usize>,
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::CgJacobi,
            tol: 1e-10,
            max_iter: None,
            initial_guess: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Seconds; informational only.
    pub wall_time: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("load vector has {got} entries, system has {expected} dofs")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("matrix is not positive definite (curvature {curvature:.3e} at step {step})")]
    NotPositiveDefinite { step: usize, curvature: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `K u = f` with the boundary condition built into `system`.
/// Constrained entries of `f` are ignored and the matching `u` entries are zero.
pub fn solve(
    system: &StiffnessSystem,
    rhs: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let n = system.num_dofs();
    if rhs.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let start = Instant::now();
    let mut f = rhs.to_vec();
    system.mask(&mut f);
    let (mut u, iterations) = match opts.method {
        SolveMethod::CgJacobi => {
            let mut guess = opts.initial_guess.clone().unwrap_or_else(|| vec![0.0; n]);
            if guess.len() != n {
                return Err(SolverError::DimensionMismatch {
                    expected: n,
                    got: guess.len(),
                });
            }
            system.mask(&mut guess);
            let max_iter = opts.max_iter.unwrap_or(20 * n);
            pcg(&system.operator, &f, guess, opts.tol, max_iter)?
        }
        SolveMethod::DirectCholesky => {
            let factor = SkylineCholesky::factor(&system.operator)?;
            (factor.solve(&f), 0)
        }
    };
    system.mask(&mut u);
    let relative_residual = relative_residual(&system.operator, &u, &f);
    let report = SolveReport {
        method: opts.method,
        iterations,
        relative_residual,
        wall_time: start.elapsed().as_secs_f64(),
    };
    log::debug!(
        "{} solve: {} dofs, {} iterations, residual {:.3e}",
        report.method,
        n,
        report.iterations,
        report.relative_residual
    );
    Ok((u, report))
}

/// `|A x - b| / |b|`, or `|A x|` when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    a.mul_vec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let bn = norm(b);
    if bn > 0.0 {
        norm(&r) / bn
    } else {
        norm(&r)
    }
}

/// Jacobi-preconditioned conjugate gradients. Returns the iterate and the
/// number of iterations.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), SolverError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    let mut res = norm(&r) / bnorm;
    history.push(res);
    let mut k = 0;
    while res > tol {
        if k == max_iter {
            return Err(SolverError::NotConverged {
                iterations: k,
                residual: res,
                history,
            });
        }
        a.mul_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return Err(SolverError::NotPositiveDefinite { step: k, curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        k += 1;
        res = norm(&r) / bnorm;
        history.push(res);
    }
    // Guard against drift of the recursive residual.
    let true_res = relative_residual(a, &x, b);
    if true_res > tol {
        return pcg(a, b, x, tol, max_iter.saturating_sub(k)).map(|(x, extra)| (x, k + extra));
    }
    Ok((x, k))
}

/// Lower-triangular envelope factor `P A P^T = L L^T`. The ordering `P` is
/// the natural one or reverse Cuthill-McKee, whichever has the smaller
/// envelope.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    /// `perm[new] = old`; `None` for the natural ordering.
    perm: Option<Vec<usize>>,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Offsets of each row's envelope in `values`.
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolverError> {
        let identity: Vec<usize> = (0..a.dim()).collect();
        let rcm = a.reverse_cuthill_mckee();
        if a.envelope(&rcm) < a.envelope(&identity) {
            let mut f = Self::factor_in_place(&a.permuted(&rcm)).map_err(|e| match e {
                SolverError::NotPositiveDefinite { step, curvature } => {
                    SolverError::NotPositiveDefinite {
                        step: rcm[step],
                        curvature,
                    }
                }
                other => other,
            })?;
            f.perm = Some(rcm);
            Ok(f)
        } else {
            Self::factor_in_place(a)
        }
    }

    fn factor_in_place(a: &CsrMatrix) -> Result<Self, SolverError> {
        let n = a.dim();
        let first: Vec<usize> = (0..n).map(|i| a.first_col(i).unwrap_or(i).min(i)).collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (i, j, v) in a.entries() {
            if j <= i {
                values[offset[i] + j - first[i]] = v;
            }
        }
        let mut f = Self {
            perm: None,
            first,
            offset,
            values,
        };
        for i in 0..n {
            for j in f.first[i]..=i {
                let lo = f.first[i].max(f.first[j]);
                let mut s = f.values[f.offset[i] + j - f.first[i]];
                for k in lo..j {
                    s -= f.at(i, k) * f.at(j, k);
                }
                if j < i {
                    let v = s / f.at(j, j);
                    let idx = f.offset[i] + j - f.first[i];
                    f.values[idx] = v;
                } else {
                    if s <= 0.0 {
                        return Err(SolverError::NotPositiveDefinite {
                            step: i,
                            curvature: s,
                        });
                    }
                    let idx = f.offset[i] + i - f.first[i];
                    f.values[idx] = s.sqrt();
                }
            }
        }
        Ok(f)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.offset[i] + j - self.first[i]]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        for i in 0..n {
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.at(i, k) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            y[i] /= self.at(i, i);
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.at(i, k) * yi;
            }
        }
        match &self.perm {
            Some(p) => {
                let mut x = vec![0.0; n];
                for (new, &old) in p.iter().enumerate() {
                    x[old] = y[new];
                }
                x
            }
            None => y,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{assemble, MaterialParams, OuterBc};
    use crate::forces::{rhs_hole_neumann, Traction};
    use crate::geometry::{Point2, SquareCell};
    use crate::mesh::generate_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(exclude: bool, bc: OuterBc, params: &MaterialParams) -> StiffnessSystem {
        let mesh = generate_mesh(
            (20.0, 20.0),
            1.0,
            &SquareCell::new(Point2::new(10.0, 10.0), 6.0),
            exclude,
        )
        .unwrap();
        assemble(&mesh, params, bc).unwrap()
    }

    fn random_free(sys: &StiffnessSystem, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sys.num_dofs())
            .map(|d| if sys.constrained[d] { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect()
    }

    #[test]
    fn zero_load_gives_zero() {
        let sys = system(false, OuterBc::Dirichlet, &MaterialParams::default());
        let (u, rep) = solve(&sys, &vec![0.0; sys.num_dofs()], &SolveOptions::default()).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        for (exclude, bc) in [(false, OuterBc::Dirichlet), (true, OuterBc::Robin(1.0))] {
            let sys = system(exclude, bc, &MaterialParams::default());
            let w = random_free(&sys, 42);
            let mut f = vec![0.0; w.len()];
            sys.operator.mul_vec(&w, &mut f);
            let (u, rep) = solve(&sys, &f, &SolveOptions::with_tol(1e-12)).unwrap();
            assert!(rep.relative_residual <= 1e-12);
            let err = u.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            // Soft cell inflates the condition number; the residual bound still holds.
            assert!(err < 1e-3, "{err}");
            let direct = solve(
                &sys,
                &f,
                &SolveOptions {
                    method: SolveMethod::DirectCholesky,
                    ..Default::default()
                },
            )
            .unwrap()
            .0;
            let err = direct.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn cg_matches_cholesky_on_hole_load() {
        let params = MaterialParams::default();
        let mesh = generate_mesh(
            (20.0, 20.0),
            0.5,
            &SquareCell::new(Point2::new(10.0, 10.0), 6.0),
            true,
        )
        .unwrap();
        let sys = assemble(&mesh, &params, OuterBc::Dirichlet).unwrap();
        let f = rhs_hole_neumann(&mesh, &Traction::Uniform(1.0)).unwrap();
        let (a, _) = solve(&sys, &f, &SolveOptions::with_tol(1e-13)).unwrap();
        let (b, rep) = solve(
            &sys,
            &f,
            &SolveOptions {
                method: SolveMethod::DirectCholesky,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.relative_residual < 1e-13);
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9 * scale, "{diff}");
    }

    #[test]
    fn cholesky_reorders_refined_meshes() {
        // Refinement appends the new nodes, which scatters the profile.
        let mesh = generate_mesh((8.0, 8.0), 1.0, &SquareCell::new(Point2::new(4.0, 4.0), 2.0), false)
            .unwrap()
            .refine()
            .refine();
        let sys = assemble(&mesh, &MaterialParams::default(), OuterBc::Robin(1.0)).unwrap();
        let a = &sys.operator;
        let identity: Vec<usize> = (0..a.dim()).collect();
        assert!(a.envelope(&a.reverse_cuthill_mckee()) * 4 < a.envelope(&identity));
        let w = random_free(&sys, 3);
        let mut f = vec![0.0; w.len()];
        a.mul_vec(&w, &mut f);
        let factor = SkylineCholesky::factor(a).unwrap();
        assert!(factor.perm.is_some());
        let x = factor.solve(&f);
        let err = x.iter().zip(&w).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn linearity_uniqueness_and_modulus_scaling() {
        let params = MaterialParams::default();
        let sys = system(true, OuterBc::Dirichlet, &params);
        let f = random_free(&sys, 7);
        let tol = 1e-12;
        let (u, _) = solve(&sys, &f, &SolveOptions::with_tol(tol)).unwrap();
        let f3: Vec<f64> = f.iter().map(|v| 3.0 * v).collect();
        let (u3, _) = solve(&sys, &f3, &SolveOptions::with_tol(tol)).unwrap();
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in u.iter().zip(&u3) {
            assert!((3.0 * a - b).abs() < 1e-9 * scale);
        }
        let guess = random_free(&sys, 99);
        let (v, _) = solve(
            &sys,
            &f,
            &SolveOptions {
                initial_guess: Some(guess),
                ..SolveOptions::with_tol(tol)
            },
        )
        .unwrap();
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let energy = sys.operator.quadratic_form(&d).sqrt();
        let ref_energy = sys.operator.quadratic_form(&u).sqrt();
        assert!(energy <= 1e-9 * ref_energy, "{energy}");

        let stiff = MaterialParams {
            youngs_modulus: 2.0,
            ..params
        };
        let sys2 = system(true, OuterBc::Dirichlet, &stiff);
        let (w, _) = solve(&sys2, &f, &SolveOptions::with_tol(tol)).unwrap();
        for (a, b) in u.iter().zip(&w) {
            assert!((a - 2.0 * b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn errors_are_reported() {
        let sys = system(true, OuterBc::Dirichlet, &MaterialParams::default());
        let f = random_free(&sys, 1);
        let err = solve(
            &sys,
            &f,
            &SolveOptions {
                max_iter: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        match err {
            SolverError::NotConverged { iterations, history, .. } => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            solve(&sys, &[1.0], &SolveOptions::default()),
            Err(SolverError::DimensionMismatch { .. })
        ));
        let indefinite = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            SkylineCholesky::factor(&indefinite),
            Err(SolverError::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            pcg(&indefinite, &[1.0, -1.0], vec![0.0; 2], 1e-12, 10),
            Err(SolverError::NotPositiveDefinite { .. })
        ));
    }
}
