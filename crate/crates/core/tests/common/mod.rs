//! Reference computations written from the defining formulas in plain `f64`
//! loops. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

/// Cell-centred nodes `a + (i + 1/2) h` of `(a, b)` with `n` cells.
pub fn nodes_1d(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..n).map(|i| a + (i as f64 + 0.5) * h).collect()
}

/// `Σ_{i≠j} |u_i-u_j|^p |x_i-x_j|^{-(1+σp)} h² + 2 Σ_i |u_i|^p h T(x_i)`,
/// `T(x) = ((x-a)^{-σp} + (b-x)^{-σp}) / (σp)` the integral over the complement.
pub fn energy_1d(a: f64, b: f64, u: &[f64], sigma: f64, p: f64) -> f64 {
    let n = u.len();
    let h = (b - a) / n as f64;
    let x = nodes_1d(a, b, n);
    let mut pairs = 0.0;
    let mut tails = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs += (u[i] - u[j]).abs().powf(p) * (x[i] - x[j]).abs().powf(-1.0 - sigma * p);
            }
        }
        let t = ((x[i] - a).powf(-sigma * p) + (b - x[i]).powf(-sigma * p)) / (sigma * p);
        tails += u[i].abs().powf(p) * t;
    }
    pairs * h * h + 2.0 * tails * h
}

/// P1 quotient on `(0, 1)`:
/// `(E_s(u) + E_t(v)) / p` over `(h Σ|u|^α) |v(x0)|^β`.
#[allow(clippy::too_many_arguments)]
pub fn quotient_p1(u: &[f64], v: &[f64], x0: usize, s: f64, t: f64, p: f64, alpha: f64) -> f64 {
    let h = 1.0 / u.len() as f64;
    let num = (energy_1d(0.0, 1.0, u, s, p) + energy_1d(0.0, 1.0, v, t, p)) / p;
    let int: f64 = u.iter().map(|x| x.abs().powf(alpha)).sum::<f64>() * h;
    num / (int * v[x0].abs().powf(p - alpha))
}

/// Zero-extended Hölder quotient sup on `(0, 1)` by brute force.
pub fn holder_1d(u: &[f64], sigma: f64) -> f64 {
    let x = nodes_1d(0.0, 1.0, u.len());
    let mut best = 0.0f64;
    for i in 0..u.len() {
        for j in 0..u.len() {
            if i != j {
                best = best.max((u[i] - u[j]).abs() / (x[i] - x[j]).abs().powf(sigma));
            }
        }
        let d = x[i].min(1.0 - x[i]);
        best = best.max(u[i].abs() / d.powf(sigma));
    }
    best
}

/// `R^{-e}` in 256-bit arithmetic, rounded to `f64`.
pub fn neg_power_bigfloat(r: f64, e: f64) -> f64 {
    const PREC: usize = 256;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constants cache");
    let base = BigFloat::from_f64(r, PREC);
    let exp = BigFloat::from_f64(-e, PREC);
    let v = base.pow(&exp, PREC, rm, &mut cc);
    format!("{v}").parse::<f64>().expect("decimal output")
}

/// Gradient of `f` by central differences with a relative step.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, u: &[f64], rel_step: f64) -> Vec<f64> {
    let mut w = u.to_vec();
    (0..u.len())
        .map(|i| {
            let hstep = rel_step * u[i].abs().max(1e-3);
            w[i] = u[i] + hstep;
            let fp = f(&w);
            w[i] = u[i] - hstep;
            let fm = f(&w);
            w[i] = u[i];
            (fp - fm) / (2.0 * hstep)
        })
        .collect()
}

/// Compass search: per coordinate try multiplicative moves `x (1 ± δ)`,
/// keep improvements, halve `δ` when a full pass stalls.
pub fn coordinate_search(
    f: impl Fn(&[f64]) -> f64,
    x0: Vec<f64>,
    delta0: f64,
    delta_min: f64,
) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut fx = f(&x);
    let mut delta = delta0;
    while delta > delta_min {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let old = x[i];
                x[i] = old * (1.0 + sign * delta);
                let ft = f(&x);
                if ft < fx {
                    fx = ft;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (x, fx)
}
