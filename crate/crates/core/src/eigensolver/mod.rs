//! Rayleigh quotients of the coupled systems and their principal eigenpairs.
//!
//! Three variants share one quotient
//! `Q(u, v) = ((1/p)[u]^p_{s,p} + (1/p)[v]^p_{t,p}) / D(u, v)`:
//!
//! * `P1`:    `D = (∫|u|^α) |v(x0)|^β` with a fixed anchor `x0`;
//! * `P1Max`: `D = (∫|u|^α) ‖v‖_∞^β`, the anchor follows the maximum of `v`;
//! * `P2`:    `D = |u(x1)|^α |v(x2)|^β` with fixed `x1 ≠ x2`.

mod quotient;
mod residual;
mod solve;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainGrid, GridDescription};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::logspace::LogEnergy;

pub use quotient::{balance_factors, denominator, normalize, rayleigh, rebalance, Rayleigh};
pub use residual::{nodal_residual, weak_residual};
pub use solve::{solve, Direction, Init, InitKind, SolveOptions, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    P1 { x0: usize },
    P1Max,
    P2 { x1: usize, x2: usize },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::P1 { .. } => "P1",
            Variant::P1Max => "P1MAX",
            Variant::P2 { .. } => "P2",
        }
    }
}

/// How the exponent `α(p)` is derived from `p`; always `β(p) = p - α(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α = θ p`.
    #[default]
    Linear,
    /// `α = θ p + offset`; still `α/p → θ`.
    Affine { offset: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, theta: f64, p: f64) -> f64 {
        match *self {
            AlphaRule::Linear => theta * p,
            AlphaRule::Affine { offset } => theta * p + offset,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    grid: Arc<DomainGrid>,
    variant: Variant,
    s: f64,
    t: f64,
    theta: f64,
    p: f64,
    alpha_rule: AlphaRule,
    alpha: f64,
    beta: f64,
}

impl ProblemSpec {
    pub fn new(
        grid: Arc<DomainGrid>,
        variant: Variant,
        s: f64,
        t: f64,
        theta: f64,
        p: f64,
        alpha_rule: AlphaRule,
    ) -> Result<Self> {
        if !(s > 0.0 && s <= t && t < 1.0) {
            return Err(Error::param(
                "s, t",
                format!("need 0 < s <= t < 1, got s={s}, t={t}"),
            ));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("theta", format!("{theta} not in (0, 1)")));
        }
        let dim = grid.dim() as f64;
        if !(p.is_finite() && p > dim / s) {
            return Err(Error::param(
                "p",
                format!("{p} must exceed N/s = {}", dim / s),
            ));
        }
        let alpha = alpha_rule.alpha(theta, p);
        let beta = p - alpha;
        if !(alpha > 1.0 && beta > 1.0) {
            return Err(Error::param(
                "p",
                format!("alpha = {alpha} and beta = {beta} must both exceed 1"),
            ));
        }
        match variant {
            Variant::P1 { x0 } => grid.check_node(x0)?,
            Variant::P1Max => {}
            Variant::P2 { x1, x2 } => {
                grid.check_node(x1)?;
                grid.check_node(x2)?;
                if x1 == x2 {
                    return Err(Error::param("x1, x2", "anchors must differ"));
                }
            }
        }
        Ok(ProblemSpec {
            grid,
            variant,
            s,
            t,
            theta,
            p,
            alpha_rule,
            alpha,
            beta,
        })
    }

    /// Same problem at another exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        ProblemSpec::new(
            self.grid.clone(),
            self.variant,
            self.s,
            self.t,
            self.theta,
            p,
            self.alpha_rule,
        )
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn alpha_rule(&self) -> AlphaRule {
        self.alpha_rule
    }

    /// Anchor of `v` for the given field (`x0`, `argmax v` or `x2`).
    pub fn v_anchor(&self, v: &ScalarField) -> usize {
        match self.variant {
            Variant::P1 { x0 } => x0,
            Variant::P1Max => v.argmax(),
            Variant::P2 { x2, .. } => x2,
        }
    }

    pub(crate) fn check_pair(&self, u: &ScalarField, v: &ScalarField) -> Result<()> {
        self.grid.check_len(u.len())?;
        self.grid.check_len(v.len())?;
        if !u.same_grid(v) {
            return Err(Error::param("fields", "u and v live on different grids"));
        }
        Ok(())
    }

    pub fn describe(&self) -> ProblemDescription {
        let coord = |i: usize| {
            let c = self.grid.coord(i);
            c[..self.grid.dim()].to_vec()
        };
        let anchors = match self.variant {
            Variant::P1 { x0 } => vec![coord(x0)],
            Variant::P1Max => vec![],
            Variant::P2 { x1, x2 } => vec![coord(x1), coord(x2)],
        };
        ProblemDescription {
            variant: self.variant,
            anchor_coords: anchors,
            s: self.s,
            t: self.t,
            theta: self.theta,
            p: self.p,
            alpha: self.alpha,
            beta: self.beta,
            alpha_rule: self.alpha_rule,
        }
    }
}

/// Serializable echo of a [`ProblemSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescription {
    pub variant: Variant,
    pub anchor_coords: Vec<Vec<f64>>,
    pub s: f64,
    pub t: f64,
    pub theta: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_rule: AlphaRule,
}

/// Principal eigenpair estimate with solver diagnostics.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub u: ScalarField,
    pub v: ScalarField,
    /// `Λ₁(p)`, the quotient of the normalized pair.
    pub lambda: f64,
    pub log_lambda: f64,
    /// `((1/p)[u]^p_{s,p}, (1/p)[v]^p_{t,p})`.
    pub numerator_parts: (LogEnergy, LogEnergy),
    pub denominator: LogEnergy,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub weak_residual: f64,
    /// Per-node relative residual, each node against its own terms.
    pub nodal_residual: f64,
    /// `ln Q` after every accepted step, starting with the initial pair.
    pub history: Vec<f64>,
}

impl EigenPair {
    /// `Λ₁(p)^{1/p}`.
    pub fn lambda_root(&self, p: f64) -> f64 {
        (self.log_lambda / p).exp()
    }

    pub fn record(&self, spec: &ProblemSpec) -> EigenPairRecord {
        EigenPairRecord {
            problem: spec.describe(),
            grid: spec.grid().description(),
            lambda: self.lambda,
            log_lambda: self.log_lambda,
            lambda_root: self.lambda_root(spec.p()),
            numerator_parts: [self.numerator_parts.0, self.numerator_parts.1],
            denominator: self.denominator,
            iterations: self.iterations,
            converged: self.converged,
            status: self.status,
            weak_residual: self.weak_residual,
            nodal_residual: self.nodal_residual,
            u: self.u.values().to_vec(),
            v: self.v.values().to_vec(),
        }
    }
}

/// JSON form of an [`EigenPair`] together with the problem it solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairRecord {
    pub problem: ProblemDescription,
    pub grid: GridDescription,
    pub lambda: f64,
    pub log_lambda: f64,
    pub lambda_root: f64,
    pub numerator_parts: [LogEnergy; 2],
    pub denominator: LogEnergy,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub weak_residual: f64,
    pub nodal_residual: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl EigenPairRecord {
    /// Rebuilds the grid, the problem and the pair.
    pub fn restore(&self) -> Result<(ProblemSpec, EigenPair)> {
        let grid = Arc::new(DomainGrid::from_description(&self.grid)?);
        let pd = &self.problem;
        let spec = ProblemSpec::new(
            grid.clone(),
            pd.variant,
            pd.s,
            pd.t,
            pd.theta,
            pd.p,
            pd.alpha_rule,
        )?;
        let u = ScalarField::new(grid.clone(), self.u.clone())?;
        let v = ScalarField::new(grid, self.v.clone())?;
        let pair = EigenPair {
            u,
            v,
            lambda: self.lambda,
            log_lambda: self.log_lambda,
            numerator_parts: (self.numerator_parts[0], self.numerator_parts[1]),
            denominator: self.denominator,
            iterations: self.iterations,
            converged: self.converged,
            status: self.status,
            weak_residual: self.weak_residual,
            nodal_residual: self.nodal_residual,
            history: Vec::new(),
        };
        Ok((spec, pair))
    }
}
