//! Cone extremals, the limit eigenvalue `Λ_{1,∞}`, p-sweeps with warm starts,
//! and pass/fail checks of the p → ∞ statements.

mod checks;
mod report;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{distance_field, inradius_node, DomainGrid, GridDescription};
use crate::eigensolver::{
    self, rayleigh, EigenPair, Init, ProblemDescription, ProblemSpec, SolveOptions, SolveStatus,
    Variant,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::nonlocal::holder_seminorm;

pub use checks::{thm_checks, Check, CheckConfig};

/// `Λ_{1,∞} = R^{-(sθ + (1-θ)t)}`.
pub fn lambda_infinity(s: f64, t: f64, theta: f64, r: f64) -> Result<f64> {
    if !(s > 0.0 && s <= t && t < 1.0) {
        return Err(Error::param(
            "s, t",
            format!("need 0 < s <= t < 1, got s={s}, t={t}"),
        ));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("{theta} not in (0, 1)")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("R", format!("{r} must be positive")));
    }
    Ok(r.powf(-(s * theta + (1.0 - theta) * t)))
}

/// Cone pair with radius equal to the grid inradius.
pub fn cone_pair(
    grid: &Arc<DomainGrid>,
    apex_u: usize,
    apex_v: usize,
    s: f64,
    t: f64,
    theta: f64,
) -> Result<(ScalarField, ScalarField)> {
    let r = distance_field(grid).r;
    cone_pair_with_radius(grid, apex_u, apex_v, s, t, theta, r)
}

/// `φ_R = R^{(θ-1)t-sθ} (R - |x - apex_u|)_+^s` and
/// `ψ_R = R^{(θ-1)t-sθ} (R - |x - apex_v|)_+^t`.
pub fn cone_pair_with_radius(
    grid: &Arc<DomainGrid>,
    apex_u: usize,
    apex_v: usize,
    s: f64,
    t: f64,
    theta: f64,
    r: f64,
) -> Result<(ScalarField, ScalarField)> {
    grid.check_node(apex_u)?;
    grid.check_node(apex_v)?;
    lambda_infinity(s, t, theta, r)?;
    let pre = r.powf((theta - 1.0) * t - s * theta);
    let cone = |apex: usize, e: f64| {
        (0..grid.interior_count())
            .map(|i| {
                let gap = r - grid.distance(i, apex);
                if gap > 0.0 {
                    pre * gap.powf(e)
                } else {
                    0.0
                }
            })
            .collect::<Vec<f64>>()
    };
    Ok((
        ScalarField::new(grid.clone(), cone(apex_u, s))?,
        ScalarField::new(grid.clone(), cone(apex_v, t))?,
    ))
}

/// Denominator of the limit quotient: `‖u‖_∞^θ |v(x0)|^{1-θ}`, with
/// `‖v‖_∞` for `P1Max` and `|u(x1)|^θ |v(x2)|^{1-θ}` for `P2`.
pub fn s_infinity(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<f64> {
    spec.check_pair(u, v)?;
    let th = spec.theta();
    let (a, b) = match spec.variant() {
        Variant::P1 { x0 } => (u.sup_norm(), v.values()[x0].abs()),
        Variant::P1Max => (u.sup_norm(), v.sup_norm()),
        Variant::P2 { x1, x2 } => (u.values()[x1].abs(), v.values()[x2].abs()),
    };
    Ok(a.powf(th) * b.powf(1.0 - th))
}

/// `max{|u|_s, |v|_t} / S_∞(u, v)`.
pub fn g_infinity(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<f64> {
    let den = s_infinity(spec, u, v)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let hu = holder_seminorm(u, spec.s())?;
    let hv = holder_seminorm(v, spec.t())?;
    Ok(hu.max(hv) / den)
}

/// `F_p = G_p + χ_{S_p}`; `infinite` when off the constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub value: f64,
    pub infinite: bool,
}

/// Constraint tolerance of `χ_{S_p}` in the log domain.
pub const CONSTRAINT_TOL: f64 = 1e-9;

pub fn f_p(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<FValue> {
    let inf = FValue {
        value: f64::INFINITY,
        infinite: true,
    };
    let ray = match rayleigh(spec, u, v) {
        Ok(r) => r,
        Err(Error::ZeroDenominator) => return Ok(inf),
        Err(e) => return Err(e),
    };
    if ray.denominator.ln().abs() > CONSTRAINT_TOL {
        return Ok(inf);
    }
    Ok(FValue {
        value: ray.q_root,
        infinite: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `Λ₁(p)^{1/p}`.
    pub lambda_root: f64,
    pub log_lambda: f64,
    /// `|u_p|_s`.
    pub holder_u: f64,
    /// `|v_p|_t`.
    pub holder_v: f64,
    /// `S_∞` of the normalized pair.
    pub s_infty_norm: f64,
    /// Value of the `S_p` constraint, 1 on the constraint set.
    pub constraint: f64,
    pub g_infinity: f64,
    /// `Q(φ_R, ψ_R)^{1/p}` for the cone pair at the default apexes.
    pub cone_lambda_root: f64,
    pub argmax_u: usize,
    pub argmax_v: usize,
    pub max_location_u: Vec<f64>,
    pub max_location_v: Vec<f64>,
    pub min_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub weak_residual: f64,
    pub nodal_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub problem: ProblemDescription,
    pub grid: GridDescription,
    pub r: f64,
    pub limit: f64,
    pub records: Vec<SweepRecord>,
    #[serde(skip)]
    pub pairs: Vec<EigenPair>,
    #[serde(skip)]
    pub specs: Vec<ProblemSpec>,
}

impl SweepReport {
    pub fn converged(&self) -> impl Iterator<Item = (usize, &SweepRecord)> {
        self.records.iter().enumerate().filter(|(_, r)| r.converged)
    }
}

/// Apexes used for the cone test pair of a spec.
pub fn default_apexes(spec: &ProblemSpec) -> (usize, usize) {
    match spec.variant() {
        Variant::P1 { x0 } => (x0, x0),
        Variant::P1Max => {
            let g = spec.grid();
            let k = inradius_node(g, &distance_field(g));
            (k, k)
        }
        Variant::P2 { x1, x2 } => (x1, x2),
    }
}

/// Builds the record of a solved pair.
pub fn record(spec: &ProblemSpec, pair: &EigenPair) -> Result<SweepRecord> {
    let g = spec.grid();
    let (au, av) = default_apexes(spec);
    let (phi, psi) = cone_pair(g, au, av, spec.s(), spec.t(), spec.theta())?;
    let cone = rayleigh(spec, &phi, &psi)?;
    let s_inf = s_infinity(spec, &pair.u, &pair.v)?;
    let hu = holder_seminorm(&pair.u, spec.s())?;
    let hv = holder_seminorm(&pair.v, spec.t())?;
    let (iu, iv) = (pair.u.argmax(), pair.v.argmax());
    let loc = |i: usize| g.coord(i)[..g.dim()].to_vec();
    Ok(SweepRecord {
        p: spec.p(),
        alpha: spec.alpha(),
        beta: spec.beta(),
        lambda_root: pair.lambda_root(spec.p()),
        log_lambda: pair.log_lambda,
        holder_u: hu,
        holder_v: hv,
        s_infty_norm: s_inf,
        constraint: pair.denominator.ln().exp(),
        g_infinity: if s_inf > 0.0 {
            hu.max(hv) / s_inf
        } else {
            f64::INFINITY
        },
        cone_lambda_root: cone.q_root,
        argmax_u: iu,
        argmax_v: iv,
        max_location_u: loc(iu),
        max_location_v: loc(iv),
        min_value: pair.u.min_value().min(pair.v.min_value()),
        iterations: pair.iterations,
        converged: pair.converged,
        status: pair.status,
        weak_residual: pair.weak_residual,
        nodal_residual: pair.nodal_residual,
    })
}

/// Largest ratio between consecutive exponents of the continuation; larger
/// gaps in a sweep are bridged by unrecorded intermediate solves.
pub const MAX_P_RATIO: f64 = 1.5;

/// Solves the template at every `p` in increasing order, warm-starting each
/// solve from the previous pair. Gaps wider than [`MAX_P_RATIO`] are crossed
/// through geometric intermediate exponents.
pub fn sweep(
    template: &ProblemSpec,
    p_list: &[f64],
    opts: &SolveOptions,
    init: Init,
) -> Result<SweepReport> {
    if p_list.is_empty() {
        return Err(Error::param("p_list", "empty"));
    }
    if p_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("p_list", "must be strictly increasing"));
    }
    let specs = p_list
        .iter()
        .map(|&p| template.with_p(p))
        .collect::<Result<Vec<_>>>()?;
    let r = distance_field(template.grid()).r;
    let limit = lambda_infinity(template.s(), template.t(), template.theta(), r)?;
    let mut records = Vec::with_capacity(specs.len());
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(specs.len());
    let mut next = init;
    let mut prev_p: Option<f64> = None;
    for spec in &specs {
        if let Some(p0) = prev_p {
            let steps = ((spec.p() / p0).ln() / MAX_P_RATIO.ln()).ceil() as usize;
            for k in 1..steps {
                let pk = p0 * (spec.p() / p0).powf(k as f64 / steps as f64);
                let inner = eigensolver::solve(&spec.with_p(pk)?, next, opts)?;
                next = Init::Given(inner.u, inner.v);
            }
        }
        prev_p = Some(spec.p());
        let pair = eigensolver::solve(spec, next, opts)?;
        records.push(record(spec, &pair)?);
        next = Init::Given(pair.u.clone(), pair.v.clone());
        pairs.push(pair);
    }
    let last = specs.last().expect("non-empty");
    Ok(SweepReport {
        problem: last.describe(),
        grid: template.grid().description(),
        r,
        limit,
        records,
        pairs,
        specs,
    })
}
