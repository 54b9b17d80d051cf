//! Experiment configuration: a TOML file with `[section]` tables, overridable
//! from the command line with `--set section.key=value`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cellforce_core::{MaterialParams, OuterBc, Point2, SolveMethod, SolveOptions, SquareCell};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// Domain extent in x.
    pub width: f64,
    /// Domain extent in y.
    pub height: f64,
    /// Size of the tracked region around the cell.
    pub wound_width: f64,
    pub wound_height: f64,
    pub cell_side: f64,
    /// Cell centre; the domain centre when absent.
    pub center_x: Option<f64>,
    pub center_y: Option<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            width: 20.0,
            height: 20.0,
            wound_width: 10.0,
            wound_height: 10.0,
            cell_side: 6.0,
            center_x: None,
            center_y: None,
        }
    }
}

impl Geometry {
    pub fn center(&self) -> Point2 {
        Point2::new(
            self.center_x.unwrap_or(0.5 * self.width),
            self.center_y.unwrap_or(0.5 * self.height),
        )
    }

    pub fn cell(&self) -> SquareCell {
        SquareCell::new(self.center(), self.cell_side)
    }

    /// Corners of the tracked region, centred on the cell.
    pub fn wound(&self) -> (Point2, Point2) {
        let c = self.center();
        let half = Point2::new(0.5 * self.wound_width, 0.5 * self.wound_height);
        (c - half, c + half)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub cell_stiffness_ratio: f64,
    pub spring_constant: f64,
    pub traction: f64,
}

impl Default for Material {
    fn default() -> Self {
        let p = MaterialParams::default();
        Self {
            youngs_modulus: p.youngs_modulus,
            poisson_ratio: p.poisson_ratio,
            cell_stiffness_ratio: p.cell_stiffness_ratio,
            spring_constant: p.spring_constant,
            traction: p.traction,
        }
    }
}

impl Material {
    pub fn params(&self) -> MaterialParams {
        MaterialParams {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            cell_stiffness_ratio: self.cell_stiffness_ratio,
            spring_constant: self.spring_constant,
            traction: self.traction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    /// Gaussian width of the smoothed approach.
    pub eps: f64,
    /// Point-force segments on the cell boundary; 0 matches the mesh edges.
    pub segments: usize,
    /// Gauss points per piece for the exact boundary integral.
    pub quadrature_order: usize,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            eps: 0.5,
            segments: 0,
            quadrature_order: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Robin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    /// Mesh size of the coarsest level.
    pub h: f64,
    /// Number of levels in refinement studies.
    pub levels: usize,
    pub boundary: BoundaryKind,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            h: 0.5,
            levels: 3,
            boundary: BoundaryKind::Dirichlet,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cg,
    Cholesky,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub method: SolverKind,
    pub tol: f64,
    /// 0 means `20 * dofs`.
    pub max_iter: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            method: SolverKind::Cg,
            tol: 1e-10,
            max_iter: 0,
        }
    }
}

impl Solver {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            method: match self.method {
                SolverKind::Cg => SolveMethod::CgJacobi,
                SolverKind::Cholesky => SolveMethod::DirectCholesky,
            },
            tol: self.tol,
            max_iter: (self.max_iter > 0).then_some(self.max_iter),
            initial_guess: None,
        }
    }
}

/// Parameters of the consistency sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweeps {
    pub betas: Vec<f64>,
    /// Mesh size of the smoothing studies.
    pub smoothing_h: f64,
    /// Cell width held fixed while the Gaussian width varies.
    pub fixed_width: f64,
    pub widths_eps: Vec<f64>,
    /// Gaussian width held fixed while the cell width varies.
    pub fixed_eps: f64,
    pub cell_widths: Vec<f64>,
    /// Cell widths (equal to the Gaussian width) of the combined study.
    pub combined: Vec<f64>,
    /// Refinement levels of the quadrature study.
    pub quadrature_levels: usize,
    /// Nodes of the 1D check.
    pub nodes_1d: usize,
}

impl Default for Sweeps {
    fn default() -> Self {
        Self {
            betas: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            smoothing_h: 0.25,
            fixed_width: 2.0,
            widths_eps: vec![0.1, 0.05, 0.025],
            fixed_eps: 1.0,
            cell_widths: vec![0.5, 0.25, 0.125],
            combined: vec![2.0, 1.0, 0.5],
            quadrature_levels: 4,
            nodes_1d: 161,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: PathBuf,
    /// Write one SVG per solution.
    pub svg: bool,
    /// Displacement magnification in the SVG.
    pub svg_scale: f64,
    pub dump_mesh: bool,
    pub dump_matrix: bool,
    pub dump_rhs: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            svg: false,
            svg_scale: 1.0,
            dump_mesh: false,
            dump_matrix: false,
            dump_rhs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub material: Material,
    pub model: Model,
    pub discretization: Discretization,
    pub solver: Solver,
    pub sweeps: Sweeps,
    pub outputs: Outputs,
    /// Seed of the random structural checks.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            material: Material::default(),
            model: Model::default(),
            discretization: Discretization::default(),
            solver: Solver::default(),
            sweeps: Sweeps::default(),
            outputs: Outputs::default(),
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("{}", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `section.key=value` overrides. Values are parsed as TOML
    /// literals, falling back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(&self.to_toml())?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{item}` is not of the form section.key=value"))?;
            let key = key.trim();
            let value = parse_value(raw.trim());
            let mut path: Vec<&str> = key.split('.').collect();
            let leaf = path.pop().filter(|s| !s.is_empty()).ok_or_else(|| anyhow!("empty key in `{item}`"))?;
            let mut node = &mut table;
            for part in path {
                node = node
                    .entry(part)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| anyhow!("`{part}` in `{key}` is not a section"))?;
            }
            node.insert(leaf.to_string(), value);
        }
        Self::from_table(table).context("invalid override")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.width > 0.0 && g.height > 0.0 && g.cell_side > 0.0) {
            bail!("geometry: width, height and cell_side must be positive");
        }
        if !(g.wound_width > 0.0 && g.wound_height > 0.0) {
            bail!("geometry: wound_width and wound_height must be positive");
        }
        self.material
            .params()
            .validate()
            .map_err(|e| anyhow!("material: {e}"))?;
        if !(self.discretization.h > 0.0) {
            bail!("discretization.h must be positive");
        }
        if self.discretization.levels < 1 {
            bail!("discretization.levels must be at least 1");
        }
        if !(self.model.eps > 0.0) {
            bail!("model.eps must be positive");
        }
        if self.model.segments % 4 != 0 {
            bail!("model.segments must be a multiple of 4 (or 0 to match the mesh)");
        }
        if self.model.quadrature_order == 0 {
            bail!("model.quadrature_order must be at least 1");
        }
        if !(self.solver.tol > 0.0) {
            bail!("solver.tol must be positive");
        }
        if self.sweeps.betas.iter().any(|b| !(*b > 0.0)) {
            bail!("sweeps.betas must be positive");
        }
        Ok(())
    }

    pub fn params(&self) -> MaterialParams {
        self.material.params()
    }

    pub fn outer_bc(&self) -> OuterBc {
        match self.discretization.boundary {
            BoundaryKind::Dirichlet => OuterBc::Dirichlet,
            BoundaryKind::Robin => OuterBc::Robin(self.material.spring_constant),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
