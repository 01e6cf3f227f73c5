//! Run configuration: one JSON document, unknown keys rejected.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fraclap_core::asymptotics::CheckConfig;
use fraclap_core::domain::{distance_field, inradius_node, DomainGrid, GridDescription};
use fraclap_core::eigensolver::{
    AlphaRule, Direction, InitKind, ProblemSpec, SolveOptions, Variant,
};
use fraclap_core::viscosity::{SignConvention, DEFAULT_LAYER_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: GridDescription,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub checks: ChecksBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantName {
    #[serde(alias = "p1")]
    P1,
    #[serde(rename = "P1MAX", alias = "p1max")]
    P1Max,
    #[serde(alias = "p2")]
    P2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub variant: VariantName,
    pub s: f64,
    pub t: f64,
    pub theta: f64,
    /// Exponent for `solve`; sweeps take `sweep.p_list`.
    #[serde(default)]
    pub p: Option<f64>,
    /// Anchor coordinates: one for `P1`, two for `P2`, none for `P1MAX`.
    /// A missing `P1` anchor defaults to the first inradius node.
    #[serde(default)]
    pub anchors: Vec<Vec<f64>>,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub positivity: bool,
    pub direction: Direction,
    pub polish_iter: usize,
    pub polish_tol: f64,
    pub init: InitKind,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverBlock {
            step: o.step,
            max_iter: o.max_iter,
            tol: o.tol,
            positivity: o.positivity,
            direction: o.direction,
            polish_iter: o.polish_iter,
            polish_tol: o.polish_tol,
            init: InitKind::default(),
        }
    }
}

impl SolverBlock {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            step: self.step,
            max_iter: self.max_iter,
            tol: self.tol,
            positivity: self.positivity,
            direction: self.direction,
            polish_iter: self.polish_iter,
            polish_tol: self.polish_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub p_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksBlock {
    pub limit_tol: f64,
    pub constraint_tol: f64,
    pub distance_tol: f64,
    pub max_shift_cells: f64,
    pub layer_k: usize,
    pub sign_conventions: Vec<SignConvention>,
}

impl Default for ChecksBlock {
    fn default() -> Self {
        let c = CheckConfig::default();
        ChecksBlock {
            limit_tol: c.limit_tol,
            constraint_tol: c.constraint_tol,
            distance_tol: c.distance_tol,
            max_shift_cells: c.max_shift_cells,
            layer_k: DEFAULT_LAYER_K,
            sign_conventions: SignConvention::BOTH.to_vec(),
        }
    }
}

impl ChecksBlock {
    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            limit_tol: self.limit_tol,
            constraint_tol: self.constraint_tol,
            distance_tol: self.distance_tol,
            max_shift_cells: self.max_shift_cells,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Gnuplot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: PathBuf::from("fraclap-out"),
            formats: vec![Format::Json, Format::Csv, Format::Gnuplot],
        }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).context("parsing configuration")
    }

    pub fn grid(&self) -> Result<Arc<DomainGrid>> {
        let g = DomainGrid::from_description(&self.domain).context("domain block")?;
        Ok(Arc::new(g))
    }

    /// Anchor indices snapped to the nearest interior node.
    pub fn variant(&self, grid: &DomainGrid) -> Result<Variant> {
        let a = &self.problem.anchors;
        let snap = |c: &Vec<f64>| grid.snap(c).context("problem.anchors");
        Ok(match self.problem.variant {
            VariantName::P1 => match a.len() {
                0 => Variant::P1 {
                    x0: inradius_node(grid, &distance_field(grid)),
                },
                1 => Variant::P1 { x0: snap(&a[0])? },
                k => bail!("problem.anchors: P1 takes one anchor, got {k}"),
            },
            VariantName::P1Max => {
                if !a.is_empty() {
                    bail!("problem.anchors: P1MAX takes no anchors");
                }
                Variant::P1Max
            }
            VariantName::P2 => {
                if a.len() != 2 {
                    bail!("problem.anchors: P2 takes two anchors, got {}", a.len());
                }
                Variant::P2 {
                    x1: snap(&a[0])?,
                    x2: snap(&a[1])?,
                }
            }
        })
    }

    /// Problem at exponent `p`.
    pub fn spec(&self, grid: Arc<DomainGrid>, p: f64) -> Result<ProblemSpec> {
        let variant = self.variant(&grid)?;
        let pb = &self.problem;
        ProblemSpec::new(grid, variant, pb.s, pb.t, pb.theta, p, pb.alpha_rule)
            .context("problem block")
    }

    pub fn validate_solver(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.step > 0.0 && s.step.is_finite()) {
            bail!("solver.step must be positive, got {}", s.step);
        }
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            bail!("solver.tol must be positive, got {}", s.tol);
        }
        Ok(())
    }
}
