//! Structural checks run alongside every solve.

use cellforce_core::analysis::field_h1_norm;
use cellforce_core::{l2_norm, Mesh, Solution, StiffnessSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYMMETRY_TOL: f64 = 1e-12;
const NULL_SPACE_TOL: f64 = 1e-10;
const EQUILIBRIUM_TOL: f64 = 1e-10;
const HOMOGENEITY_TOL: f64 = 1e-12;
const COERCIVITY_SAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralReport {
    /// `max |K_ij - K_ji| / max |K|`.
    pub symmetry: f64,
    /// Largest entry of `K t` for unit translations, relative to `max |K|`.
    pub translation: f64,
    /// Largest entry of `K r` for the infinitesimal rotation, relative to
    /// `max |K| max |r|`.
    pub rotation: f64,
    /// Whether `v^T K v > 0` held for every random free vector.
    pub coercive: bool,
    /// `max_c |sum_i f_ic| / max |f|`.
    pub equilibrium: f64,
    /// Worst relative defect of `|a u| = |a| |u|` for the L2 and H1 norms.
    pub homogeneity: f64,
}

impl StructuralReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.symmetry > SYMMETRY_TOL {
            out.push(format!("stiffness asymmetry {:.3e}", self.symmetry));
        }
        if self.translation > NULL_SPACE_TOL {
            out.push(format!("translation residual {:.3e}", self.translation));
        }
        if self.rotation > NULL_SPACE_TOL {
            out.push(format!("rotation residual {:.3e}", self.rotation));
        }
        if !self.coercive {
            out.push("constrained stiffness is not positive definite".into());
        }
        if self.equilibrium > EQUILIBRIUM_TOL {
            out.push(format!("load imbalance {:.3e}", self.equilibrium));
        }
        if self.homogeneity > HOMOGENEITY_TOL {
            out.push(format!("norm homogeneity defect {:.3e}", self.homogeneity));
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Checks the assembled system, the load and the solution norms.
pub fn structural_checks(
    mesh: &Mesh,
    system: &StiffnessSystem,
    rhs: &[f64],
    displacement: &[f64],
    seed: u64,
) -> StructuralReport {
    let k = &system.stiffness;
    let kmax = k.max_abs();
    let n = mesh.num_dofs();
    let mut y = vec![0.0; n];

    let mut translation = 0.0f64;
    for comp in 0..2 {
        let t: Vec<f64> = (0..n).map(|d| if d % 2 == comp { 1.0 } else { 0.0 }).collect();
        k.mul_vec(&t, &mut y);
        translation = translation.max(max_abs(&y) / kmax);
    }
    let r: Vec<f64> = mesh.nodes().iter().flat_map(|p| [-p.y, p.x]).collect();
    k.mul_vec(&r, &mut y);
    let rotation = max_abs(&y) / (kmax * max_abs(&r));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coercive = (0..COERCIVITY_SAMPLES).all(|_| {
        let v: Vec<f64> = (0..n)
            .map(|d| {
                if system.constrained[d] {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        system.operator.quadratic_form(&v) > 0.0
    });

    let fx: f64 = rhs.iter().step_by(2).sum();
    let fy: f64 = rhs.iter().skip(1).step_by(2).sum();
    let fmax = max_abs(rhs);
    let equilibrium = if fmax > 0.0 { fx.abs().max(fy.abs()) / fmax } else { 0.0 };

    let sol = Solution::new(mesh, displacement.to_vec()).expect("solution matches mesh");
    let alpha = -2.5;
    let l2 = l2_norm(&sol);
    let h1 = field_h1_norm(mesh, displacement, None);
    let scaled = sol.scaled(alpha);
    let rel = |a: f64, b: f64| if b > 0.0 { (a - b).abs() / b } else { a.abs() };
    let homogeneity = rel(l2_norm(&scaled), alpha.abs() * l2)
        .max(rel(field_h1_norm(mesh, scaled.displacement(), None), alpha.abs() * h1));

    StructuralReport {
        symmetry: k.symmetry_defect() / kmax,
        translation,
        rotation,
        coercive,
        equilibrium,
        homogeneity,
    }
}
