//! Plane-strain P1 stiffness assembly with a softened cell region.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{twice_signed_area, Point2};
use crate::mesh::{EdgeTag, Mesh, Region};
use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticityError {
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("degenerate element (twice signed area {0})")]
    DegenerateElement(f64),
    #[error("cell stiffness factor is zero on a mesh that keeps the cell interior; the cell nodes would be unconstrained")]
    SingularCellStiffness,
    #[error("Robin boundary needs a positive spring constant, got {0}")]
    NonPositiveSpring(f64),
}

/// Constitutive and loading constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    /// Substrate Young's modulus.
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Cell stiffness relative to the substrate.
    pub cell_stiffness_ratio: f64,
    /// Spring constant of the Robin outer boundary.
    pub spring_constant: f64,
    /// Magnitude of the pulling force per unit boundary length.
    pub traction: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            youngs_modulus: 1.0,
            poisson_ratio: 0.48,
            cell_stiffness_ratio: 1e-5,
            spring_constant: 1.0,
            traction: 1.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), ElasticityError> {
        let bad = |msg: String| Err(ElasticityError::InvalidParameter(msg));
        if !(self.youngs_modulus.is_finite() && self.youngs_modulus > 0.0) {
            return bad(format!("Young's modulus must be positive, got {}", self.youngs_modulus));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return bad(format!("Poisson ratio must lie in (0, 0.5), got {}", self.poisson_ratio));
        }
        if !(self.cell_stiffness_ratio.is_finite() && self.cell_stiffness_ratio >= 0.0) {
            return bad(format!(
                "cell stiffness ratio must be non-negative, got {}",
                self.cell_stiffness_ratio
            ));
        }
        if !(self.spring_constant.is_finite() && self.spring_constant >= 0.0) {
            return bad(format!("spring constant must be non-negative, got {}", self.spring_constant));
        }
        if !self.traction.is_finite() {
            return bad(format!("traction must be finite, got {}", self.traction));
        }
        Ok(())
    }

    /// Lamé parameters `(lambda, mu)` for modulus `e`.
    pub fn lame(&self, e: f64) -> (f64, f64) {
        lame(e, self.poisson_ratio)
    }
}

fn lame(e: f64, nu: f64) -> (f64, f64) {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}

/// Plane-strain constitutive matrix in Voigt order `(xx, yy, xy)` with
/// engineering shear strain.
pub fn constitutive_matrix(e: f64, nu: f64) -> [[f64; 3]; 3] {
    let (lambda, mu) = lame(e, nu);
    [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ]
}

/// Outer boundary condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterBc {
    /// Zero displacement on the outer boundary.
    Dirichlet,
    /// Spring support `sigma n + kappa u = 0` with the given constant.
    Robin(f64),
}

/// Constant shape-function gradients of a P1 triangle, `(dphi/dx, dphi/dy)`
/// per vertex, and the triangle area.
pub fn shape_gradients(v: &[Point2; 3]) -> Result<([[f64; 2]; 3], f64), ElasticityError> {
    let det = twice_signed_area(v[0], v[1], v[2]);
    let scale = (v[1] - v[0]).norm_squared().max((v[2] - v[0]).norm_squared());
    if !(det.abs() > 1e-14 * scale) {
        return Err(ElasticityError::DegenerateElement(det));
    }
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(v[j].y - v[k].y) / det, (v[k].x - v[j].x) / det];
    }
    Ok((g, 0.5 * det.abs()))
}

/// Strain-displacement matrix (3 x 6) for dof order `[u0x, u0y, u1x, u1y, u2x, u2y]`.
fn strain_matrix(g: &[[f64; 2]; 3]) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        b[0][2 * i] = g[i][0];
        b[1][2 * i + 1] = g[i][1];
        b[2][2 * i] = g[i][1];
        b[2][2 * i + 1] = g[i][0];
    }
    b
}

/// Exact element stiffness `A B^T D B` of a constant-strain triangle.
pub fn element_stiffness(
    vertices: &[Point2; 3],
    e: f64,
    nu: f64,
) -> Result<[[f64; 6]; 6], ElasticityError> {
    let (g, area) = shape_gradients(vertices)?;
    let b = strain_matrix(&g);
    let d = constitutive_matrix(e, nu);
    let mut db = [[0.0; 6]; 3];
    for r in 0..3 {
        for c in 0..6 {
            db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
        }
    }
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in i..6 {
            let v = area * (0..3).map(|r| b[r][i] * db[r][j]).sum::<f64>();
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    Ok(k)
}

/// Assembled elasticity system over `2 * nodes` displacement unknowns
/// (dof `2 i + c` is component `c` of node `i`).
#[derive(Clone, Debug)]
pub struct StiffnessSystem {
    /// Unconstrained elastic stiffness, without boundary terms.
    pub stiffness: CsrMatrix,
    /// The matrix actually solved: Robin terms added, Dirichlet rows and
    /// columns replaced by the identity.
    pub operator: CsrMatrix,
    /// `true` for dofs fixed to zero.
    pub constrained: Vec<bool>,
    pub bc: OuterBc,
}

impl StiffnessSystem {
    pub fn num_dofs(&self) -> usize {
        self.constrained.len()
    }

    /// Zeroes the constrained entries of a load vector.
    pub fn mask(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }

    /// Coordinate-format dump of the solved operator: `row col value` per line.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {} {} {}", self.operator.dim(), self.operator.dim(), self.operator.nnz())?;
        for (i, j, v) in self.operator.entries() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Dof sparsity pattern induced by the triangle connectivity.
fn dof_pattern(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut node_adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_nodes()];
    for tri in mesh.triangles() {
        for &a in tri {
            node_adj[a].extend_from_slice(tri);
        }
    }
    let mut pattern = vec![Vec::new(); mesh.num_dofs()];
    for (a, adj) in node_adj.iter_mut().enumerate() {
        adj.sort_unstable();
        adj.dedup();
        let cols: Vec<usize> = adj.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();
        pattern[2 * a] = cols.clone();
        pattern[2 * a + 1] = cols;
    }
    pattern
}

/// Modulus used on triangle `t`.
pub fn local_modulus(mesh: &Mesh, t: usize, params: &MaterialParams) -> f64 {
    match mesh.regions()[t] {
        Region::CellInterior => params.cell_stiffness_ratio * params.youngs_modulus,
        Region::Exterior => params.youngs_modulus,
    }
}

/// Assembles the Galerkin stiffness with the outer boundary condition applied.
pub fn assemble(
    mesh: &Mesh,
    params: &MaterialParams,
    bc: OuterBc,
) -> Result<StiffnessSystem, ElasticityError> {
    params.validate()?;
    let has_cell = mesh.regions().contains(&Region::CellInterior);
    if has_cell && params.cell_stiffness_ratio == 0.0 {
        return Err(ElasticityError::SingularCellStiffness);
    }
    if let OuterBc::Robin(kappa) = bc {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(ElasticityError::NonPositiveSpring(kappa));
        }
    }

    let elements: Vec<[[f64; 6]; 6]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            element_stiffness(
                &mesh.triangle_points(t),
                local_modulus(mesh, t, params),
                params.poisson_ratio,
            )
            .map_err(|_| ElasticityError::DegenerateTriangle(t))
        })
        .collect::<Result<_, _>>()?;

    let pattern = dof_pattern(mesh);
    let mut stiffness = CsrMatrix::from_pattern(mesh.num_dofs(), pattern);
    for (tri, ke) in mesh.triangles().iter().zip(&elements) {
        let dofs = [
            2 * tri[0],
            2 * tri[0] + 1,
            2 * tri[1],
            2 * tri[1] + 1,
            2 * tri[2],
            2 * tri[2] + 1,
        ];
        for (r, &i) in dofs.iter().enumerate() {
            for (c, &j) in dofs.iter().enumerate() {
                stiffness.add(i, j, ke[r][c]);
            }
        }
    }

    let mut operator = stiffness.clone();
    let mut constrained = vec![false; mesh.num_dofs()];
    let outer = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == EdgeTag::OuterBoundary);
    match bc {
        OuterBc::Dirichlet => {
            for e in outer {
                for &n in &e.nodes {
                    constrained[2 * n] = true;
                    constrained[2 * n + 1] = true;
                }
            }
            for i in 0..operator.dim() {
                let row_fixed = constrained[i];
                let (cols, vals) = operator.row_mut(i);
                for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                    if row_fixed || constrained[j] {
                        *v = if i == j { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        OuterBc::Robin(kappa) => {
            for e in outer {
                let [a, b] = e.nodes;
                let len = mesh.nodes()[a].distance(mesh.nodes()[b]);
                let diag = kappa * len / 3.0;
                let off = kappa * len / 6.0;
                for c in 0..2 {
                    operator.add(2 * a + c, 2 * a + c, diag);
                    operator.add(2 * b + c, 2 * b + c, diag);
                    operator.add(2 * a + c, 2 * b + c, off);
                    operator.add(2 * b + c, 2 * a + c, off);
                }
            }
        }
    }

    Ok(StiffnessSystem {
        stiffness,
        operator,
        constrained,
        bc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SquareCell;
    use crate::mesh::generate_mesh;
    use crate::quadrature::TriangleRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_right() -> [Point2; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    /// Brute-force `sum_q w_q B^T D B |T|` with an independently written
    /// strain operator built from finite differences of the P1 basis.
    fn quadrature_oracle(v: &[Point2; 3], e: f64, nu: f64) -> [[f64; 6]; 6] {
        let area = 0.5 * twice_signed_area(v[0], v[1], v[2]);
        let basis = |p: Point2, i: usize| -> f64 {
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            twice_signed_area(p, b, c) / twice_signed_area(a, b, c)
        };
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let rule = TriangleRule::degree5();
        let step = 1e-3;
        let mut k = [[0.0; 6]; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = Point2::new(
                l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
                l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y,
            );
            // Strain of unit displacement in dof m.
            let strain = |m: usize| -> [f64; 3] {
                let (node, comp) = (m / 2, m % 2);
                let dx = (basis(p + Point2::new(step, 0.0), node)
                    - basis(p - Point2::new(step, 0.0), node))
                    / (2.0 * step);
                let dy = (basis(p + Point2::new(0.0, step), node)
                    - basis(p - Point2::new(0.0, step), node))
                    / (2.0 * step);
                if comp == 0 {
                    [dx, 0.0, 0.5 * dy]
                } else {
                    [0.0, dy, 0.5 * dx]
                }
            };
            for i in 0..6 {
                let ei = strain(i);
                for j in 0..6 {
                    let ej = strain(j);
                    let tr = ej[0] + ej[1];
                    // sigma : epsilon with tensor shear components.
                    let s = [
                        lambda * tr + 2.0 * mu * ej[0],
                        lambda * tr + 2.0 * mu * ej[1],
                        2.0 * mu * ej[2],
                    ];
                    let contraction = s[0] * ei[0] + s[1] * ei[1] + 2.0 * s[2] * ei[2];
                    k[i][j] += w * area * contraction;
                }
            }
        }
        k
    }

    #[test]
    fn unit_triangle_matches_quadrature_oracle() {
        for (e, nu) in [(1.0, 0.0), (1.0, 0.48), (3.5, 0.3)] {
            let k = element_stiffness(&unit_right(), e, nu).unwrap();
            let o = quadrature_oracle(&unit_right(), e, nu);
            for i in 0..6 {
                for j in 0..6 {
                    assert!((k[i][j] - o[i][j]).abs() < 1e-12, "{i},{j}: {} vs {}", k[i][j], o[i][j]);
                }
            }
        }
        // Classic values for nu = 0: K[0][0] = (lambda + 2 mu)/2 + mu/2 = 0.75.
        let k = element_stiffness(&unit_right(), 1.0, 0.0).unwrap();
        assert!((k[0][0] - 0.75).abs() < 1e-15);
        assert!((k[2][2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn element_rows_annihilate_rigid_modes() {
        let v = [Point2::new(0.3, -0.2), Point2::new(2.1, 0.4), Point2::new(0.7, 1.9)];
        let k = element_stiffness(&v, 2.0, 0.48).unwrap();
        let scale = k.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let rotation: Vec<f64> = v.iter().flat_map(|p| [-p.y, p.x]).collect();
        for row in &k {
            let tx: f64 = (0..3).map(|n| row[2 * n]).sum();
            let ty: f64 = (0..3).map(|n| row[2 * n + 1]).sum();
            let rot: f64 = row.iter().zip(&rotation).map(|(a, b)| a * b).sum();
            assert!(tx.abs() < 1e-13 * scale && ty.abs() < 1e-13 * scale);
            assert!(rot.abs() < 1e-13 * scale);
        }
        let k10 = element_stiffness(&v, 20.0, 0.48).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((k10[i][j] - 10.0 * k[i][j]).abs() < 1e-13 * scale * 10.0);
            }
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let v = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)];
        assert!(matches!(
            element_stiffness(&v, 1.0, 0.3),
            Err(ElasticityError::DegenerateElement(_))
        ));
    }

    fn table1_mesh(exclude: bool) -> Mesh {
        generate_mesh(
            (20.0, 20.0),
            1.0,
            &SquareCell::new(Point2::new(10.0, 10.0), 6.0),
            exclude,
        )
        .unwrap()
    }

    #[test]
    fn unit_ratio_equals_uniform_assembly() {
        let mesh = table1_mesh(false);
        let mut params = MaterialParams {
            cell_stiffness_ratio: 1.0,
            ..Default::default()
        };
        let a = assemble(&mesh, &params, OuterBc::Dirichlet).unwrap();
        // A uniform assembly written directly, independent of region lookup.
        let mut uniform = vec![vec![0.0; mesh.num_dofs()]; mesh.num_dofs()];
        for t in 0..mesh.num_triangles() {
            let ke = element_stiffness(&mesh.triangle_points(t), 1.0, 0.48).unwrap();
            let tri = mesh.triangles()[t];
            for r in 0..6 {
                for c in 0..6 {
                    uniform[2 * tri[r / 2] + r % 2][2 * tri[c / 2] + c % 2] += ke[r][c];
                }
            }
        }
        assert_eq!(a.stiffness.to_dense(), uniform);
        params.cell_stiffness_ratio = 0.0;
        assert_eq!(
            assemble(&mesh, &params, OuterBc::Dirichlet).unwrap_err(),
            ElasticityError::SingularCellStiffness
        );
        // On the hole mesh the ratio is irrelevant.
        assert!(assemble(&table1_mesh(true), &params, OuterBc::Dirichlet).is_ok());
    }

    #[test]
    fn assembled_matrix_symmetry_and_null_space() {
        let mesh = table1_mesh(false);
        let sys = assemble(&mesh, &MaterialParams::default(), OuterBc::Robin(1.0)).unwrap();
        let k = &sys.stiffness;
        assert!(k.symmetry_defect() <= 1e-12 * k.max_abs());
        assert!(sys.operator.symmetry_defect() <= 1e-12 * k.max_abs());
        let n = mesh.num_nodes();
        let mut y = vec![0.0; 2 * n];
        for comp in 0..2 {
            let t: Vec<f64> = (0..2 * n).map(|d| if d % 2 == comp { 1.0 } else { 0.0 }).collect();
            k.mul_vec(&t, &mut y);
            assert!(y.iter().all(|v| v.abs() <= 1e-10 * k.max_abs()));
        }
        let rot: Vec<f64> = mesh.nodes().iter().flat_map(|p| [-p.y, p.x]).collect();
        k.mul_vec(&rot, &mut y);
        assert!(y.iter().all(|v| v.abs() <= 1e-10 * k.max_abs() * 20.0));
    }

    #[test]
    fn constrained_operator_is_coercive_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (mesh, bc) in [
            (table1_mesh(false), OuterBc::Dirichlet),
            (table1_mesh(true), OuterBc::Robin(1.0)),
            (table1_mesh(true), OuterBc::Dirichlet),
        ] {
            let sys = assemble(&mesh, &MaterialParams::default(), bc).unwrap();
            for _ in 0..20 {
                let v: Vec<f64> = (0..mesh.num_dofs())
                    .map(|d| {
                        if sys.constrained[d] {
                            0.0
                        } else {
                            rng.random_range(-1.0..1.0)
                        }
                    })
                    .collect();
                assert!(sys.stiffness.quadratic_form(&v) > 0.0);
                assert!(sys.operator.quadratic_form(&v) > 0.0);
            }
        }
    }

    #[test]
    fn robin_terms_are_exact_edge_masses() {
        let mesh = table1_mesh(true);
        let sys = assemble(&mesh, &MaterialParams::default(), OuterBc::Robin(2.0)).unwrap();
        // Constant unit field in x: boundary mass sum equals kappa * perimeter.
        let n = mesh.num_nodes();
        let t: Vec<f64> = (0..2 * n).map(|d| if d % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let q = sys.operator.quadratic_form(&t) - sys.stiffness.quadratic_form(&t);
        assert!((q - 2.0 * 80.0).abs() < 1e-10);
        assert!(sys.constrained.iter().all(|&c| !c));
    }

    #[test]
    fn coo_dump_lists_every_entry() {
        let mesh = table1_mesh(true);
        let sys = assemble(&mesh, &MaterialParams::default(), OuterBc::Dirichlet).unwrap();
        let mut buf = Vec::new();
        sys.write_coo(&mut buf).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(lines, sys.operator.nnz() + 1);
    }

    #[test]
    fn invalid_parameters() {
        let p = MaterialParams {
            poisson_ratio: 0.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = MaterialParams {
            youngs_modulus: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(MaterialParams::default().validate().is_ok());
    }
}
