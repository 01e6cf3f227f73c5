use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::logspace::{logsumexp, LogEnergy};
use crate::nonlocal::Kernel;

use super::{ProblemSpec, Variant};

/// `ln D(u, v)` for the spec's variant.
pub fn denominator(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<LogEnergy> {
    spec.check_pair(u, v)?;
    Ok(LogEnergy::from_log(log_denominator(
        spec,
        u.values(),
        v.values(),
    )))
}

pub(crate) fn log_integral(values: &[f64], alpha: f64, ln_cell: f64) -> f64 {
    logsumexp(
        values
            .iter()
            .filter(|x| **x != 0.0)
            .map(|x| alpha * x.abs().ln() + ln_cell),
    )
}

pub(crate) fn log_denominator(spec: &ProblemSpec, u: &[f64], v: &[f64]) -> f64 {
    let ln_cell = spec.grid().cell_volume().ln();
    let (a, b) = (spec.alpha(), spec.beta());
    let point = |x: f64, e: f64| {
        if x == 0.0 {
            f64::NEG_INFINITY
        } else {
            e * x.abs().ln()
        }
    };
    let ld = match spec.variant() {
        Variant::P1 { x0 } => log_integral(u, a, ln_cell) + point(v[x0], b),
        Variant::P1Max => {
            let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            log_integral(u, a, ln_cell) + point(m, b)
        }
        Variant::P2 { x1, x2 } => point(u[x1], a) + point(v[x2], b),
    };
    if ld.is_nan() {
        f64::NEG_INFINITY
    } else {
        ld
    }
}

/// Scales both fields by `exp(-ln D / p)` so that the denominator becomes 1.
pub fn normalize(
    spec: &ProblemSpec,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let d = denominator(spec, u, v)?;
    if d.is_zero {
        return Err(Error::ZeroDenominator);
    }
    let c = (-d.log_value / spec.p()).exp();
    Ok((u.scaled(c), v.scaled(c)))
}

/// `(ln a, ln b, ln λ)` minimizing `(a^p A + b^p B)/p` subject to
/// `a^α b^β = 1`, given `ln A` and `ln B`.
pub fn balance_factors(log_a: f64, log_b: f64, alpha: f64, beta: f64, p: f64) -> (f64, f64, f64) {
    let ln_lambda = (alpha * (log_a - alpha.ln()) + beta * (log_b - beta.ln())) / p;
    let la = (ln_lambda + alpha.ln() - log_a) / p;
    let lb = (ln_lambda + beta.ln() - log_b) / p;
    (la, lb, ln_lambda)
}

/// Separate rescaling `(a u, b v)` on the constraint curve `a^α b^β = 1`
/// that minimizes the numerator.
pub fn rebalance(
    spec: &ProblemSpec,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    spec.check_pair(u, v)?;
    let ks = Kernel::new(spec.grid(), spec.s(), spec.p())?;
    let kt = Kernel::new(spec.grid(), spec.t(), spec.p())?;
    let (lu, lv) = rebalanced_values(spec, &ks, &kt, u.values(), v.values())?;
    Ok((
        ScalarField::new(u.grid().clone(), lu)?,
        ScalarField::new(v.grid().clone(), lv)?,
    ))
}

pub(crate) fn rebalanced_values(
    spec: &ProblemSpec,
    ks: &Kernel,
    kt: &Kernel,
    u: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let la = ks.log_energy(u);
    let lb = kt.log_energy(v);
    if la == f64::NEG_INFINITY {
        return Err(Error::ZeroEnergy("u"));
    }
    if lb == f64::NEG_INFINITY {
        return Err(Error::ZeroEnergy("v"));
    }
    let (ln_a, ln_b, _) = balance_factors(la, lb, spec.alpha(), spec.beta(), spec.p());
    let (a, b) = (ln_a.exp(), ln_b.exp());
    Ok((
        u.iter().map(|x| a * x).collect(),
        v.iter().map(|x| b * x).collect(),
    ))
}

/// Quotient of a pair in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rayleigh {
    pub log_q: f64,
    /// `Q^{1/p}`.
    pub q_root: f64,
    pub numerator_parts: (LogEnergy, LogEnergy),
    pub denominator: LogEnergy,
}

pub fn rayleigh(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<Rayleigh> {
    spec.check_pair(u, v)?;
    let ks = Kernel::new(spec.grid(), spec.s(), spec.p())?;
    let kt = Kernel::new(spec.grid(), spec.t(), spec.p())?;
    rayleigh_values(spec, &ks, &kt, u.values(), v.values())
}

pub(crate) fn rayleigh_values(
    spec: &ProblemSpec,
    ks: &Kernel,
    kt: &Kernel,
    u: &[f64],
    v: &[f64],
) -> Result<Rayleigh> {
    let ld = log_denominator(spec, u, v);
    if ld == f64::NEG_INFINITY {
        return Err(Error::ZeroDenominator);
    }
    let lnp = spec.p().ln();
    let nu = LogEnergy::from_log(ks.log_energy(u)).scale_log(-lnp);
    let nv = LogEnergy::from_log(kt.log_energy(v)).scale_log(-lnp);
    let log_q = nu.log_add(nv).ln() - ld;
    Ok(Rayleigh {
        log_q,
        q_root: (log_q / spec.p()).exp(),
        numerator_parts: (nu, nv),
        denominator: LogEnergy::from_log(ld),
    })
}
