use serde::{Deserialize, Serialize};

use crate::domain::distance_field;
use crate::eigensolver::Variant;
use crate::error::{Error, Result};

use super::SweepReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Allowed gap to `Λ_{1,∞}` for the eigenvalue and seminorm limits, and
    /// for the `S_∞` normalization.
    pub limit_tol: f64,
    /// Allowed deviation of the `S_p` constraint from 1.
    pub constraint_tol: f64,
    /// Slack in the distance-cone bound `u ≤ (d/R)^s`.
    pub distance_tol: f64,
    /// Largest allowed movement of the maxima between the last two records,
    /// in cell widths.
    pub max_shift_cells: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            limit_tol: 0.15,
            constraint_tol: 1e-9,
            distance_tol: 0.05,
            max_shift_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, measured: f64, threshold: f64, detail: String) -> Check {
        Check {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            detail,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Checks of the limit statements on a sweep:
///
/// * `nonnegative_normalized`: final pair `≥ 0` and `|S_∞ - 1| ≤ limit_tol`;
/// * `constraint`: every converged record has `|S_p - 1| ≤ constraint_tol`;
/// * `eigenvalue_limit`: `|Λ₁(p)^{1/p} - Λ_{1,∞}| ≤ limit_tol` at the last
///   record and the error is non-increasing over the last three;
/// * `seminorm_limit`: `|max(|u|_s, |v|_t) - Λ_{1,∞}| ≤ limit_tol`;
///
///   both limits are only checked when every anchor sits at distance `R`
///   from the complement; for other anchors the value of the limit is open;
/// * `cone_upper_bound`: `Λ₁(p)^{1/p} ≤ Q(φ_R, ψ_R)^{1/p}` at every record;
/// * `maxima_stable` and `distance_bound` for `P2` (the latter for `s = t`).
pub fn thm_checks(report: &SweepReport, cfg: &CheckConfig) -> Result<Vec<Check>> {
    let conv: Vec<usize> = report.converged().map(|(i, _)| i).collect();
    if conv.len() < 3 {
        return Err(Error::Report(format!(
            "need at least 3 converged records, got {}",
            conv.len()
        )));
    }
    let recs = &report.records;
    let last = *conv.last().expect("non-empty");
    let mut out = Vec::new();

    let fin = &recs[last];
    let s_gap = (fin.s_infty_norm - 1.0).abs();
    let nonneg = fin.min_value >= 0.0;
    out.push(Check::new(
        "nonnegative_normalized",
        nonneg && s_gap <= cfg.limit_tol,
        s_gap,
        cfg.limit_tol,
        format!(
            "p={} min={:e} S_inf={}",
            fin.p, fin.min_value, fin.s_infty_norm
        ),
    ));

    let c_gap = conv
        .iter()
        .map(|&i| (recs[i].constraint - 1.0).abs())
        .fold(0.0f64, f64::max);
    out.push(Check::new(
        "constraint",
        c_gap <= cfg.constraint_tol,
        c_gap,
        cfg.constraint_tol,
        "max |S_p - 1| over converged records".into(),
    ));

    if anchors_at_inradius(report) {
        limit_checks(report, cfg, &conv, &mut out);
    }

    let excess = recs
        .iter()
        .map(|r| r.lambda_root - r.cone_lambda_root)
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * recs.iter().map(|r| r.cone_lambda_root).fold(1.0, f64::max);
    out.push(Check::new(
        "cone_upper_bound",
        excess <= slack,
        excess,
        slack,
        "max of lambda_root - cone_lambda_root".into(),
    ));

    if let Variant::P2 { .. } = report.problem.variant {
        let h = report.grid_h();
        let prev = &recs[conv[conv.len() - 2]];
        let shift = dist(&prev.max_location_u, &fin.max_location_u)
            .max(dist(&prev.max_location_v, &fin.max_location_v));
        out.push(Check::new(
            "maxima_stable",
            shift <= cfg.max_shift_cells * h + 1e-12,
            shift,
            cfg.max_shift_cells * h,
            format!(
                "u max {:?} -> {:?}, v max {:?} -> {:?}",
                prev.max_location_u, fin.max_location_u, prev.max_location_v, fin.max_location_v
            ),
        ));
        if report.problem.s == report.problem.t {
            if let (Some(pair), Some(spec)) = (report.pairs.get(last), report.specs.get(last)) {
                let g = spec.grid();
                let d = distance_field(g).interior_values(g);
                let s = spec.s();
                let over = pair
                    .u
                    .values()
                    .iter()
                    .chain(pair.v.values())
                    .zip(d.iter().chain(d.iter()))
                    .map(|(w, di)| w - (di / report.r).powf(s))
                    .fold(f64::NEG_INFINITY, f64::max);
                out.push(Check::new(
                    "distance_bound",
                    over <= cfg.distance_tol,
                    over,
                    cfg.distance_tol,
                    "max of w - (d/R)^s over u and v".into(),
                ));
            }
        }
    }
    Ok(out)
}

/// Whether every anchor of the sweep's problem is at distance `R`; the
/// max variant has no fixed anchor and always qualifies.
fn anchors_at_inradius(report: &SweepReport) -> bool {
    let Some(spec) = report.specs.first() else {
        return true;
    };
    let g = spec.grid();
    let at_r = |k: usize| {
        let d = g.boundary_distance(g.coord(k));
        (d - report.r).abs() <= 1e-12 * report.r
    };
    match spec.variant() {
        Variant::P1 { x0 } => at_r(x0),
        Variant::P1Max => true,
        Variant::P2 { x1, x2 } => at_r(x1) && at_r(x2),
    }
}

fn limit_checks(report: &SweepReport, cfg: &CheckConfig, conv: &[usize], out: &mut Vec<Check>) {
    let recs = &report.records;
    let lim = report.limit;
    let fin = &recs[*conv.last().expect("non-empty")];
    let errs: Vec<f64> = conv[conv.len() - 3..]
        .iter()
        .map(|&i| (recs[i].lambda_root - lim).abs())
        .collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    out.push(Check::new(
        "eigenvalue_limit",
        errs[2] <= cfg.limit_tol && monotone,
        errs[2],
        cfg.limit_tol,
        format!("errors over last three records {errs:?}, limit {lim}"),
    ));

    let h_gap = (fin.holder_u.max(fin.holder_v) - lim).abs();
    out.push(Check::new(
        "seminorm_limit",
        h_gap <= cfg.limit_tol,
        h_gap,
        cfg.limit_tol,
        format!("|u|_s={} |v|_t={}", fin.holder_u, fin.holder_v),
    ));
}
