use crate::error::{Error, Result};
use crate::nonlocal::Kernel;

use super::quotient::{log_integral, rayleigh_values};
use super::{EigenPair, ProblemSpec, Variant};

/// Gradients of `ln N` and `ln D` with respect to `(u, v)`, stacked.
pub(crate) struct Gradients {
    pub log_num: Vec<f64>,
    pub log_den: Vec<f64>,
    /// Sum of the absolute row terms of `log_num`.
    pub row_scale: Vec<f64>,
    /// Anchor used for the `v` factor of the denominator.
    pub v_anchor: usize,
}

pub(crate) fn abs_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

pub(crate) fn integral_gradient(values: &[f64], alpha: f64, ln_cell: f64) -> (f64, Vec<f64>) {
    let la = log_integral(values, alpha, ln_cell);
    let g = values
        .iter()
        .map(|&x| {
            if x == 0.0 {
                0.0
            } else {
                alpha * x.signum() * ((alpha - 1.0) * x.abs().ln() + ln_cell - la).exp()
            }
        })
        .collect();
    (la, g)
}

pub(crate) fn gradients(
    spec: &ProblemSpec,
    ks: &Kernel,
    kt: &Kernel,
    u: &[f64],
    v: &[f64],
) -> Result<Gradients> {
    let n = u.len();
    let p = spec.p();
    let ln_e = crate::logspace::logaddexp(ks.log_energy(u), kt.log_energy(v));
    if ln_e == f64::NEG_INFINITY {
        return Err(Error::ZeroEnergy("u and v"));
    }
    let (mut log_num, mut row_scale) = ks.energy_gradient_parts_shifted(u, ln_e);
    let (gv, rv) = kt.energy_gradient_parts_shifted(v, ln_e);
    log_num.extend(gv);
    row_scale.extend(rv);
    log_num.iter_mut().for_each(|g| *g *= p);
    row_scale.iter_mut().for_each(|g| *g *= p);

    let ln_cell = spec.grid().cell_volume().ln();
    let mut log_den = vec![0.0; 2 * n];
    let point = |w: f64, e: f64| {
        if w == 0.0 {
            Err(Error::ZeroDenominator)
        } else {
            Ok(e / w)
        }
    };
    let v_anchor = match spec.variant() {
        Variant::P1 { x0 } => x0,
        Variant::P1Max => abs_argmax(v),
        Variant::P2 { x2, .. } => x2,
    };
    match spec.variant() {
        Variant::P1 { .. } | Variant::P1Max => {
            let (la, g) = integral_gradient(u, spec.alpha(), ln_cell);
            if la == f64::NEG_INFINITY {
                return Err(Error::ZeroDenominator);
            }
            log_den[..n].copy_from_slice(&g);
        }
        Variant::P2 { x1, .. } => log_den[x1] = point(u[x1], spec.alpha())?,
    }
    log_den[n + v_anchor] = point(v[v_anchor], spec.beta())?;
    Ok(Gradients {
        log_num,
        log_den,
        row_scale,
        v_anchor,
    })
}

/// `max_i |LHS_i - ratio * RHS_i| / max(|LHS|, ratio |RHS|)` where both sides
/// are divided by the numerator `N`.
pub(crate) fn relative_gap(g: &Gradients, ratio: f64) -> f64 {
    let mut gap = 0.0f64;
    let mut scale = 0.0f64;
    for (a, b) in g.log_num.iter().zip(&g.log_den) {
        let rb = ratio * b;
        gap = gap.max((a - rb).abs());
        scale = scale.max(a.abs()).max(rb.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        gap / scale
    }
}

/// Per-node version of [`relative_gap`]: each node's gap is measured against
/// the size of the terms in its own row.
pub(crate) fn nodal_gap(g: &Gradients, ratio: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.log_num.len() {
        let rb = ratio * g.log_den[i];
        let scale = g.row_scale[i].max(rb.abs());
        if scale > 0.0 {
            worst = worst.max((g.log_num[i] - rb).abs() / scale);
        }
    }
    worst
}

/// Relative gap in the weak-solution identity
/// `<(-Δ_p)^s u, φ> + <(-Δ_p)^t v, ψ> = λ <∂D(u,v), (φ, ψ)>`
/// over all single-node test pairs `(e_i, 0)` and `(0, e_j)`.
///
/// Both sides are divided by the numerator before comparison, so the value
/// stays finite for large `p`. The right side uses `pair.lambda`.
pub fn weak_residual(spec: &ProblemSpec, pair: &EigenPair) -> Result<f64> {
    spec.check_pair(&pair.u, &pair.v)?;
    let ks = Kernel::new(spec.grid(), spec.s(), spec.p())?;
    let kt = Kernel::new(spec.grid(), spec.t(), spec.p())?;
    let (u, v) = (pair.u.values(), pair.v.values());
    let ray = rayleigh_values(spec, &ks, &kt, u, v)?;
    let g = gradients(spec, &ks, &kt, u, v)?;
    let ratio = (pair.log_lambda - ray.log_q).exp();
    Ok(relative_gap(&g, ratio))
}

/// Largest per-node relative gap in the weak-solution identity, each node
/// measured against the magnitude of its own terms.
pub fn nodal_residual(spec: &ProblemSpec, pair: &EigenPair) -> Result<f64> {
    spec.check_pair(&pair.u, &pair.v)?;
    let ks = Kernel::new(spec.grid(), spec.s(), spec.p())?;
    let kt = Kernel::new(spec.grid(), spec.t(), spec.p())?;
    let (u, v) = (pair.u.values(), pair.v.values());
    let ray = rayleigh_values(spec, &ks, &kt, u, v)?;
    let g = gradients(spec, &ks, &kt, u, v)?;
    let ratio = (pair.log_lambda - ray.log_q).exp();
    Ok(nodal_gap(&g, ratio))
}
