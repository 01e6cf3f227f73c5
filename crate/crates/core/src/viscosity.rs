//! Pointwise residuals of the limit equations
//! `L_{t,∞} v = 0` in `Ω \ {x0}` and
//! `max{L_{s,∞} u, L⁻_{s,∞} u ∓ Λ_{1,∞} u^θ v(x0)^{1-θ}} = 0` in `Ω`
//! on discrete large-p eigenfunctions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sci, ScalarField};
use crate::nonlocal::{linf, linf_minus};

pub const DEFAULT_LAYER_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldId {
    U,
    V,
}

/// Sign in front of the `Λ_{1,∞}` term of the `u` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    Minus,
    Plus,
}

impl SignConvention {
    pub const BOTH: [SignConvention; 2] = [SignConvention::Minus, SignConvention::Plus];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub field: FieldId,
    pub sign_convention: Option<SignConvention>,
    pub layer_k: usize,
    /// Interior indices of the evaluation set.
    pub nodes: Vec<usize>,
    pub residuals: Vec<f64>,
    pub sup_norm: f64,
}

/// Interior nodes at distance at least `k h` from the complement, minus
/// `exclude`.
fn evaluation_set(
    field: &ScalarField,
    layer_k: usize,
    exclude: Option<usize>,
) -> Result<Vec<usize>> {
    let g = field.grid();
    let min_d = layer_k as f64 * g.h();
    let nodes: Vec<usize> = (0..g.interior_count())
        .filter(|&i| Some(i) != exclude)
        // small slack so that nodes exactly k h from the boundary are kept
        .filter(|&i| g.boundary_distance(g.coord(i)) >= min_d - 1e-12 * g.h())
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    Ok(nodes)
}

fn report(
    field: FieldId,
    sign: Option<SignConvention>,
    layer_k: usize,
    nodes: Vec<usize>,
    residuals: Vec<f64>,
) -> ResidualReport {
    let sup_norm = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    ResidualReport {
        field,
        sign_convention: sign,
        layer_k,
        nodes,
        residuals,
        sup_norm,
    }
}

/// `L_{t,∞} v(x)` on the evaluation set that excludes `x0`.
pub fn residual_v(v: &ScalarField, x0: usize, t: f64, layer_k: usize) -> Result<ResidualReport> {
    v.grid().check_node(x0)?;
    let nodes = evaluation_set(v, layer_k, Some(x0))?;
    let res = nodes
        .iter()
        .map(|&i| linf(v, t, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(FieldId::V, None, layer_k, nodes, res))
}

/// `max{L_{s,∞} u, L⁻_{s,∞} u ∓ Λ_∞ u^θ v_anchor^{1-θ}}` on the evaluation set.
pub fn residual_u(
    u: &ScalarField,
    v_anchor_value: f64,
    s: f64,
    theta: f64,
    lambda_inf: f64,
    layer_k: usize,
    sign: SignConvention,
) -> Result<ResidualReport> {
    if let Some(bad) = u.values().iter().find(|&&x| x < -1e-12) {
        return Err(Error::Negative(*bad));
    }
    if !(lambda_inf > 0.0) {
        return Err(Error::param(
            "lambda_inf",
            format!("{lambda_inf} must be positive"),
        ));
    }
    if !(v_anchor_value >= 0.0) {
        return Err(Error::Negative(v_anchor_value));
    }
    let nodes = evaluation_set(u, layer_k, None)?;
    let vs = v_anchor_value.powf(1.0 - theta);
    let res = nodes
        .iter()
        .map(|&i| {
            let term = lambda_inf * u.values()[i].max(0.0).powf(theta) * vs;
            let second = match sign {
                SignConvention::Minus => linf_minus(u, s, i)? - term,
                SignConvention::Plus => linf_minus(u, s, i)? + term,
            };
            Ok(linf(u, s, i)?.max(second))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(FieldId::U, Some(sign), layer_k, nodes, res))
}

impl ResidualReport {
    /// `node,x[,y],residual`.
    pub fn write_csv<W: Write>(&self, grid: &crate::domain::DomainGrid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if grid.dim() == 1 {
            w.write_record(["node", "x", "residual"])?;
        } else {
            w.write_record(["node", "x", "y", "residual"])?;
        }
        for (&i, &r) in self.nodes.iter().zip(&self.residuals) {
            let c = grid.coord(i);
            let mut row = vec![i.to_string(), sci(c[0])];
            if grid.dim() == 2 {
                row.push(sci(c[1]));
            }
            row.push(sci(r));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary without the per-node arrays.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "field": self.field,
            "sign_convention": self.sign_convention,
            "layer_k": self.layer_k,
            "evaluated": self.nodes.len(),
            "sup_norm": self.sup_norm,
        })
    }
}

/// Report with the smaller sup-norm; ties go to `a`.
pub fn smaller<'a>(a: &'a ResidualReport, b: &'a ResidualReport) -> &'a ResidualReport {
    if b.sup_norm < a.sup_norm {
        b
    } else {
        a
    }
}
