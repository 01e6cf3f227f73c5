//! Discrete Gagliardo and Hölder seminorms, the fractional p-Laplacian
//! `L_{σ,p}` and the limit operators `L^±_{σ,∞}`.
//!
//! Quadrature: nodes are cell centres with weight `h^N`; the diagonal `x = y`
//! is dropped. The exterior `ℝ^N \ Ω` enters through a per-node tail
//! `T_{σ,p}(x) = ∫_{ℝ^N\Ω} |x-y|^{-(N+σp)} dy`, analytic on an interval and an
//! explicit sum over exterior grid nodes plus a radial bound in 2D. All
//! p-powered sums are accumulated in the log domain.

use serde::{Deserialize, Serialize};

use crate::domain::{DomainGrid, Exterior};
use crate::error::{Error, Result};
use crate::exec;
use crate::field::ScalarField;
use crate::logspace::{pow_log, LogEnergy};

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
pub(crate) struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    pub(crate) fn new() -> Self {
        Lse {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, t: f64) {
        if t == f64::NEG_INFINITY {
            return;
        }
        if t > self.max {
            self.sum = self.sum * (self.max - t).exp() + 1.0;
            self.max = t;
        } else {
            self.sum += (t - self.max).exp();
        }
    }

    pub(crate) fn merge(mut self, other: Lse) -> Lse {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
        self
    }

    pub(crate) fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// A field stored as `mantissa * exp(log_scale)`, used when the plain values
/// would overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledField {
    pub mantissa: Vec<f64>,
    pub log_scale: f64,
}

impl ScaledField {
    /// Plain values, or [`Error::Overflow`] when they do not fit in `f64`.
    pub fn to_values(&self) -> Result<Vec<f64>> {
        let factor = self.log_scale.exp();
        if !factor.is_finite() {
            if self.mantissa.iter().all(|&m| m == 0.0) {
                return Ok(vec![0.0; self.mantissa.len()]);
            }
            return Err(Error::Overflow(self.log_scale));
        }
        let out: Vec<f64> = self.mantissa.iter().map(|m| m * factor).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow(self.log_scale));
        }
        Ok(out)
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("{sigma} not in (0, 1)")));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::param("p", format!("{p} must be a finite real > 1")));
    }
    Ok(())
}

/// Log quadrature weights of the discrete energy
/// `E(u) = Σ_{i≠j} |u_i-u_j|^p w_ij + Σ_i |u_i|^p τ_i` for fixed `(σ, p)`,
/// with `w_ij = h^{2N} |x_i-x_j|^{-(N+σp)}` and `τ_i = 2 h^N T_{σ,p}(x_i)`.
#[derive(Debug, Clone)]
pub struct Kernel {
    n: usize,
    sigma: f64,
    p: f64,
    ln_cell: f64,
    ln_w: Vec<f64>,
    ln_tail: Vec<f64>,
}

impl Kernel {
    pub fn new(grid: &DomainGrid, sigma: f64, p: f64) -> Result<Kernel> {
        check_sigma(sigma)?;
        check_p(p)?;
        let n = grid.interior_count();
        let dim = grid.dim() as f64;
        let ln_cell = grid.cell_volume().ln();
        let expo = dim + sigma * p;
        let mut ln_w = vec![f64::NEG_INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    ln_w[i * n + j] = 2.0 * ln_cell - expo * grid.ln_dist(i, j);
                }
            }
        }
        let sp = sigma * p;
        let ln_tail = match grid.exterior() {
            Exterior::Interval { ln_left, ln_right } => ln_left
                .iter()
                .zip(ln_right)
                .map(|(l, r)| {
                    let t = crate::logspace::logaddexp(-sp * l, -sp * r) - sp.ln();
                    std::f64::consts::LN_2 + ln_cell + t
                })
                .collect(),
            Exterior::Plane {
                ln_ext_dist,
                n_ext,
                ln_far,
            } => (0..n)
                .map(|i| {
                    let mut acc = Lse::new();
                    for &ld in &ln_ext_dist[i * n_ext..(i + 1) * n_ext] {
                        acc.push(ln_cell - expo * ld);
                    }
                    acc.push((2.0 * std::f64::consts::PI).ln() - sp * ln_far[i] - sp.ln());
                    std::f64::consts::LN_2 + ln_cell + acc.value()
                })
                .collect(),
        };
        Ok(Kernel {
            n,
            sigma,
            p,
            ln_cell,
            ln_w,
            ln_tail,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `ln h^N`.
    pub fn ln_cell(&self) -> f64 {
        self.ln_cell
    }

    /// Natural log of the energy `E(u)`; `-inf` for the zero field.
    pub fn log_energy(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let p = self.p;
        let rows = exec::map_range(n, |i| {
            let mut acc = Lse::new();
            let ui = u[i];
            let w = &self.ln_w[i * n..(i + 1) * n];
            for (uj, lw) in u.iter().zip(w).skip(i + 1) {
                let d = (ui - uj).abs();
                if d > 0.0 {
                    acc.push(std::f64::consts::LN_2 + p * d.ln() + lw);
                }
            }
            if ui != 0.0 {
                acc.push(p * ui.abs().ln() + self.ln_tail[i]);
            }
            acc
        });
        rows.into_iter().fold(Lse::new(), Lse::merge).value()
    }

    /// Per-node `∂(E/p)/∂u_i` as signed (mantissa, log scale) pairs, with the
    /// sum of the absolute values of the row terms relative to the same scale.
    fn grad_rows(&self, u: &[f64]) -> Vec<(f64, f64, f64)> {
        let n = self.n;
        let p = self.p;
        exec::map_range(n, |i| {
            let ui = u[i];
            // collect magnitudes first so that the row can be rescaled once
            let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n);
            let w = &self.ln_w[i * n..(i + 1) * n];
            for (j, (uj, lw)) in u.iter().zip(w).enumerate() {
                if j == i {
                    continue;
                }
                let d = ui - uj;
                if d != 0.0 {
                    let lm = std::f64::consts::LN_2 + pow_log(d.abs().ln(), p - 1.0) + lw;
                    terms.push((d.signum(), lm));
                }
            }
            if ui != 0.0 {
                terms.push((
                    ui.signum(),
                    pow_log(ui.abs().ln(), p - 1.0) + self.ln_tail[i],
                ));
            }
            let m = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return (0.0, f64::NEG_INFINITY, 0.0);
            }
            let (mut s, mut a) = (0.0, 0.0);
            for (sg, lm) in &terms {
                let e = (lm - m).exp();
                s += sg * e;
                a += e;
            }
            (s, m, a)
        })
    }

    /// `∂(E/p)/∂u` as a scaled field sharing a single scale.
    pub fn energy_gradient(&self, u: &[f64]) -> ScaledField {
        rescale(
            self.grad_rows(u)
                .into_iter()
                .map(|(s, m, _)| (s, m))
                .collect(),
        )
    }

    /// `∂(E/p)/∂u_i * exp(-shift)` in plain arithmetic.
    pub fn energy_gradient_shifted(&self, u: &[f64], shift: f64) -> Vec<f64> {
        self.grad_rows(u)
            .into_iter()
            .map(|(s, m, _)| if s == 0.0 { 0.0 } else { s * (m - shift).exp() })
            .collect()
    }

    /// As [`Kernel::energy_gradient_shifted`], together with the per-node sum
    /// of the absolute values of the terms, on the same scale.
    pub fn energy_gradient_parts_shifted(&self, u: &[f64], shift: f64) -> (Vec<f64>, Vec<f64>) {
        self.grad_rows(u)
            .into_iter()
            .map(|(s, m, a)| {
                if a == 0.0 {
                    (0.0, 0.0)
                } else {
                    let f = (m - shift).exp();
                    (s * f, a * f)
                }
            })
            .unzip()
    }

    /// Row-major `∂²(E/p)/∂u_i∂u_j * exp(-shift)`.
    pub fn energy_hessian_shifted(&self, u: &[f64], shift: f64) -> Vec<f64> {
        let n = self.n;
        let p = self.p;
        let rows = exec::map_range(n, |i| {
            let ui = u[i];
            let mut row = vec![0.0; n];
            let mut diag = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = (ui - u[j]).abs();
                let k = p - 2.0;
                if d == 0.0 && k > 0.0 {
                    continue;
                }
                let c = 2.0 * (p - 1.0) * (pow_log(d.ln(), k) + self.ln_w[i * n + j] - shift).exp();
                row[j] = -c;
                diag += c;
            }
            let k = p - 2.0;
            if ui != 0.0 || k == 0.0 {
                diag += (p - 1.0) * (pow_log(ui.abs().ln(), k) + self.ln_tail[i] - shift).exp();
            }
            row[i] = diag;
            row
        });
        rows.concat()
    }
}

fn rescale(rows: Vec<(f64, f64)>) -> ScaledField {
    let m = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return ScaledField {
            mantissa: vec![0.0; rows.len()],
            log_scale: 0.0,
        };
    }
    ScaledField {
        mantissa: rows
            .into_iter()
            .map(|(s, lm)| if s == 0.0 { 0.0 } else { s * (lm - m).exp() })
            .collect(),
        log_scale: m,
    }
}

/// Gagliardo energy `[u]^p_{σ,p}` (log domain) and seminorm `[u]_{σ,p}`.
pub fn gagliardo(field: &ScalarField, sigma: f64, p: f64) -> Result<(LogEnergy, f64)> {
    let kernel = Kernel::new(field.grid(), sigma, p)?;
    let e = LogEnergy::from_log(kernel.log_energy(field.values()));
    let seminorm = if e.is_zero {
        0.0
    } else {
        (e.log_value / p).exp()
    };
    Ok((e, seminorm))
}

/// Discrete `L_{σ,p} u`, per node
/// `2[Σ_{y≠x} |Δ|^{p-2}Δ |x-y|^{-(N+σp)} h^N + |u(x)|^{p-2}u(x) T_{σ,p}(x)]`.
pub fn frac_p_laplacian(field: &ScalarField, sigma: f64, p: f64) -> Result<ScaledField> {
    let kernel = Kernel::new(field.grid(), sigma, p)?;
    let mut g = kernel.energy_gradient(field.values());
    if g.mantissa.iter().any(|&m| m != 0.0) {
        g.log_scale -= kernel.ln_cell;
    }
    Ok(g)
}

/// `sup_{x≠y} |u(x)-u(y)| / |x-y|^σ` with `u` zero-extended; the exterior is
/// realised exactly through `|u(x)| / d(x)^σ`.
pub fn holder_seminorm(field: &ScalarField, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let grid = field.grid();
    let u = field.values();
    let n = u.len();
    let rows = exec::map_range(n, |i| {
        let mut best = 0.0f64;
        for j in (i + 1)..n {
            let d = (u[i] - u[j]).abs();
            if d > 0.0 {
                best = best.max(d * (-sigma * grid.ln_dist(i, j)).exp());
            }
        }
        if u[i] != 0.0 {
            let dx = grid.boundary_distance(grid.coord(i));
            best = best.max(u[i].abs() / dx.powf(sigma));
        }
        best
    });
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Candidates `(u(x)-u(y))/|x-y|^σ` over all `y ≠ x`, reduced by `pick`.
fn linf_reduce(field: &ScalarField, sigma: f64, x: usize, upper: bool) -> Result<f64> {
    check_sigma(sigma)?;
    let grid = field.grid();
    grid.check_node(x)?;
    let u = field.values();
    let ux = u[x];
    let pick = |a: f64, b: f64| if upper { a.max(b) } else { a.min(b) };
    let mut best = if upper {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for (j, &uj) in u.iter().enumerate() {
        if j != x {
            best = pick(best, (ux - uj) * (-sigma * grid.ln_dist(x, j)).exp());
        }
    }
    // exterior: u = 0 there; the nearest point gives ux / d^σ and points far
    // away give values tending to 0
    let dx = grid.boundary_distance(grid.coord(x));
    best = pick(best, ux / dx.powf(sigma));
    best = pick(best, 0.0);
    Ok(best)
}

/// `L⁺_{σ,∞}u(x) = sup_{y≠x} (u(x)-u(y)) / |x-y|^σ`.
pub fn linf_plus(field: &ScalarField, sigma: f64, x: usize) -> Result<f64> {
    linf_reduce(field, sigma, x, true)
}

/// `L⁻_{σ,∞}u(x) = inf_{y≠x} (u(x)-u(y)) / |x-y|^σ`.
pub fn linf_minus(field: &ScalarField, sigma: f64, x: usize) -> Result<f64> {
    linf_reduce(field, sigma, x, false)
}

/// `L_{σ,∞} = L⁺_{σ,∞} + L⁻_{σ,∞}`.
pub fn linf(field: &ScalarField, sigma: f64, x: usize) -> Result<f64> {
    Ok(linf_plus(field, sigma, x)? + linf_minus(field, sigma, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_box2d, build_interval, MaskRule};
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn interval(n: usize) -> Arc<DomainGrid> {
        Arc::new(build_interval(0.0, 1.0, n).unwrap())
    }

    fn random_field(g: &Arc<DomainGrid>, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.interior_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        ScalarField::new(g.clone(), v).unwrap()
    }

    #[test]
    fn zero_field() {
        let g = interval(16);
        let z = ScalarField::zeros(g);
        let (e, s) = gagliardo(&z, 0.5, 3.0).unwrap();
        assert!(e.is_zero);
        assert_eq!(s, 0.0);
        assert_eq!(holder_seminorm(&z, 0.5).unwrap(), 0.0);
        let l = frac_p_laplacian(&z, 0.5, 3.0).unwrap().to_values().unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
        for x in 0..z.len() {
            assert_eq!(linf_plus(&z, 0.5, x).unwrap(), 0.0);
            assert_eq!(linf_minus(&z, 0.5, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = interval(8);
        let z = ScalarField::zeros(g);
        assert!(gagliardo(&z, 1.0, 3.0).is_err());
        assert!(gagliardo(&z, 0.5, 1.0).is_err());
        assert!(holder_seminorm(&z, 0.0).is_err());
        assert!(linf(&z, 0.5, 8).is_err());
    }

    #[test]
    fn single_spike_against_naive_sum() {
        let g = interval(8);
        let mut v = vec![0.0; 8];
        v[4] = 1.0;
        let f = ScalarField::new(g.clone(), v).unwrap();
        let (e, _) = gagliardo(&f, 0.5, 3.0).unwrap();
        let naive = oracle::gagliardo_energy_1d(&g, f.values(), 0.5, 3.0);
        assert!((e.value() - naive).abs() / naive <= 1e-12);
    }

    #[test]
    fn single_spike_holder() {
        let g = interval(16);
        let k = 5;
        let mut v = vec![0.0; 16];
        v[k] = 1.0;
        let f = ScalarField::new(g.clone(), v).unwrap();
        let d = g.boundary_distance(g.coord(k));
        let expect = (1.0 / g.h().powf(0.3)).max(1.0 / d.powf(0.3));
        assert!((holder_seminorm(&f, 0.3).unwrap() - expect).abs() < 1e-12);
        let brute = oracle::holder_seminorm(&g, f.values(), 0.3);
        assert!((brute - expect).abs() < 1e-12);
    }

    #[test]
    fn odd_symmetry_of_laplacian() {
        let g = interval(16);
        let u = random_field(&g, 3);
        let lu = frac_p_laplacian(&u, 0.5, 3.0).unwrap().to_values().unwrap();
        let lm = frac_p_laplacian(&u.scaled(-1.0), 0.5, 3.0)
            .unwrap()
            .to_values()
            .unwrap();
        for (a, b) in lu.iter().zip(&lm) {
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn laplacian_is_energy_gradient() {
        let g = interval(12);
        let u = random_field(&g, 11);
        let lu = frac_p_laplacian(&u, 0.5, 3.0).unwrap().to_values().unwrap();
        let fd = oracle::energy_gradient_fd(&g, u.values(), 0.5, 3.0);
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in lu.iter().zip(&fd) {
            assert!((a - b).abs() / scale <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = interval(10);
        let u = random_field(&g, 5);
        let k = Kernel::new(&g, 0.4, 4.0).unwrap();
        let h = k.energy_hessian_shifted(u.values(), 0.0);
        let eps = 1e-6;
        for j in 0..u.len() {
            let mut up = u.values().to_vec();
            let mut dn = u.values().to_vec();
            up[j] += eps;
            dn[j] -= eps;
            let gp = k.energy_gradient_shifted(&up, 0.0);
            let gm = k.energy_gradient_shifted(&dn, 0.0);
            for i in 0..u.len() {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                let an = h[i * u.len() + j];
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "({i},{j}) {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn plane_energy_against_naive_sum() {
        let g = Arc::new(
            build_box2d(
                [0.0, 1.0, 0.0, 1.0],
                8,
                MaskRule::Disc {
                    center: [0.5, 0.5],
                    radius: 0.45,
                },
            )
            .unwrap(),
        );
        let u = random_field(&g, 9);
        let (e, _) = gagliardo(&u, 0.5, 3.0).unwrap();
        let naive = oracle::gagliardo_energy_2d(&g, u.values(), 0.5, 3.0);
        assert!((e.value() - naive).abs() / naive <= 1e-12);
    }

    #[test]
    fn large_p_stays_finite() {
        let g = interval(64);
        let u = random_field(&g, 1);
        let (e, s) = gagliardo(&u, 0.5, 512.0).unwrap();
        assert!(e.log_value.is_finite() && !e.is_zero);
        assert!(s.is_finite() && s > 0.0);
        let l = frac_p_laplacian(&u, 0.5, 512.0).unwrap();
        assert!(l.log_scale.is_finite());
        assert!(matches!(l.to_values(), Err(Error::Overflow(_))));
    }

    #[test]
    fn maximum_node_signs() {
        let g = interval(32);
        let u =
            ScalarField::from_fn(g, |x| (std::f64::consts::PI * x[0]).sin() + 0.1 * x[0]).unwrap();
        let top = u.argmax();
        let lp = linf_plus(&u, 0.5, top).unwrap();
        let lm = linf_minus(&u, 0.5, top).unwrap();
        assert!(lp > 0.0);
        assert!(lm >= -lp);
        assert!(lm <= 0.0);
        assert!((linf(&u, 0.5, top).unwrap() - (lp + lm)).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn energy_scales_homogeneously(seed in 0u64..1000, c in proptest::sample::select(vec![2.0, 0.5, -3.0])) {
            let g = interval(16);
            let u = random_field(&g, seed);
            for p in [3.0, 8.0, 40.0] {
                let (e, _) = gagliardo(&u, 0.5, p).unwrap();
                let (ec, _) = gagliardo(&u.scaled(c), 0.5, p).unwrap();
                proptest::prop_assert!((ec.log_value - e.log_value - p * c.abs().ln()).abs() < 1e-10);
            }
            let hs = holder_seminorm(&u, 0.5).unwrap();
            let hc = holder_seminorm(&u.scaled(c), 0.5).unwrap();
            proptest::prop_assert!((hc - c.abs() * hs).abs() <= 1e-12 * hc);
        }
    }
}
