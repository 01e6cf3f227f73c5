use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::cone_pair;
use crate::domain::{distance_field, inradius_node};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::nonlocal::Kernel;

use super::quotient::{log_denominator, rayleigh_values, rebalanced_values, Rayleigh};
use super::residual::{gradients, integral_gradient, nodal_gap, relative_gap, Gradients};
use super::{EigenPair, ProblemSpec, Variant};

/// Search direction of the projected descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Damped Newton step on `ln Q` (Levenberg-Marquardt regularized).
    #[default]
    Newton,
    /// Steepest descent on `ln Q`.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Largest trial step relative to the sup-norm of the iterate.
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub positivity: bool,
    pub direction: Direction,
    /// Extra Newton iterations after convergence that reduce the per-node
    /// residual; `0` disables them.
    pub polish_iter: usize,
    /// Target per-node residual of the polish phase.
    pub polish_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            step: 0.5,
            max_iter: 500,
            tol: 1e-8,
            positivity: true,
            direction: Direction::Newton,
            polish_iter: 100,
            polish_tol: 1e-8,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param(
                "step",
                format!("{} must be positive", self.step),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::param(
                "tol",
                format!("{} must be positive", self.tol),
            ));
        }
        Ok(())
    }
}

/// Serializable initialization choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitKind {
    #[default]
    Cones,
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub enum Init {
    /// Cone pair centred at the anchors (inradius node for `P1Max`).
    Cones,
    /// Uniform values in `[0.1, 1)` from a seeded generator.
    Random {
        seed: u64,
    },
    Given(ScalarField, ScalarField),
}

impl From<InitKind> for Init {
    fn from(k: InitKind) -> Self {
        match k {
            InitKind::Cones => Init::Cones,
            InitKind::Random { seed } => Init::Random { seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    /// No decrease found down to the step floor, or `ln Q` stopped moving
    /// while the residual stayed above threshold.
    Stalled,
    /// `ln Q` increased on 20 consecutive descent attempts.
    Diverged,
}

const STEP_FLOOR: f64 = 1e-12;
const MAX_FAILED: usize = 20;
const MAX_FLAT: usize = 100;

struct State {
    u: Vec<f64>,
    v: Vec<f64>,
    ray: Rayleigh,
}

struct Ctx<'a> {
    spec: &'a ProblemSpec,
    ks: Kernel,
    kt: Kernel,
    positivity: bool,
}

impl Ctx<'_> {
    /// Normalize, rebalance and evaluate a candidate.
    fn project(&self, mut u: Vec<f64>, mut v: Vec<f64>) -> Result<State> {
        if self.positivity {
            u.iter_mut().for_each(|x| *x = x.max(0.0));
            v.iter_mut().for_each(|x| *x = x.max(0.0));
        }
        let ld = log_denominator(self.spec, &u, &v);
        if !ld.is_finite() {
            return Err(Error::ZeroDenominator);
        }
        let c = (-ld / self.spec.p()).exp();
        u.iter_mut().for_each(|x| *x *= c);
        v.iter_mut().for_each(|x| *x *= c);
        let (u, v) = rebalanced_values(self.spec, &self.ks, &self.kt, &u, &v)?;
        let ray = rayleigh_values(self.spec, &self.ks, &self.kt, &u, &v)?;
        if !ray.log_q.is_finite() {
            return Err(Error::Overflow(ray.log_q));
        }
        Ok(State { u, v, ray })
    }

    fn gradients(&self, st: &State) -> Result<Gradients> {
        gradients(self.spec, &self.ks, &self.kt, &st.u, &st.v)
    }

    /// Hessian of `ln Q = ln N - ln D` in the stacked variables.
    fn hessian(&self, st: &State, g: &Gradients) -> DMatrix<f64> {
        let n = st.u.len();
        let m = 2 * n;
        let p = self.spec.p();
        let ln_e = crate::logspace::logaddexp(self.ks.log_energy(&st.u), self.kt.log_energy(&st.v));
        let hu = self.ks.energy_hessian_shifted(&st.u, ln_e);
        let hv = self.kt.energy_hessian_shifted(&st.v, ln_e);
        let mut h = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = p * hu[i * n + j];
                h[(n + i, n + j)] = p * hv[i * n + j];
            }
        }
        let gn = &g.log_num;
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] -= gn[i] * gn[j];
            }
        }
        // subtract the Hessian of ln D
        let (alpha, beta) = (self.spec.alpha(), self.spec.beta());
        match self.spec.variant() {
            Variant::P1 { .. } | Variant::P1Max => {
                let ln_cell = self.spec.grid().cell_volume().ln();
                let (la, gd) = integral_gradient(&st.u, alpha, ln_cell);
                for i in 0..n {
                    let x = st.u[i];
                    if x != 0.0 {
                        let k = alpha - 2.0;
                        let lk = if k == 0.0 { 0.0 } else { k * x.abs().ln() };
                        h[(i, i)] -= alpha * (alpha - 1.0) * (lk + ln_cell - la).exp();
                    }
                    for j in 0..n {
                        h[(i, j)] += gd[i] * gd[j];
                    }
                }
            }
            Variant::P2 { x1, .. } => h[(x1, x1)] += alpha / (st.u[x1] * st.u[x1]),
        }
        let a = g.v_anchor;
        h[(n + a, n + a)] += beta / (st.v[a] * st.v[a]);
        h
    }
}

fn sup(w: &[f64]) -> f64 {
    w.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Marquardt-damped Newton direction `(H + μ diag|H_ii|) d = -g`, solved in
/// the Jacobi-scaled form `(S H S + μ I) y = -S g`, `d = S y` with
/// `S = diag(|H_ii|^{-1/2})`. Raises `μ` until the factorization succeeds.
fn newton_direction(h: &DMatrix<f64>, g: &[f64], mu: &mut f64) -> Option<Vec<f64>> {
    let m = g.len();
    let sc: Vec<f64> = (0..m)
        .map(|i| {
            let d = h[(i, i)].abs();
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    if sc.iter().all(|&x| x == 0.0) {
        return None;
    }
    let mut a = h.clone();
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] *= sc[i] * sc[j];
        }
    }
    let rhs = DVector::from_iterator(m, (0..m).map(|i| -sc[i] * g[i]));
    for _ in 0..40 {
        let mut b = a.clone();
        for i in 0..m {
            b[(i, i)] += *mu + if sc[i] == 0.0 { 1.0 } else { 0.0 };
        }
        if let Some(ch) = b.cholesky() {
            let y = ch.solve(&rhs);
            if y.iter().all(|x| x.is_finite()) {
                return Some((0..m).map(|i| sc[i] * y[i]).collect());
            }
        }
        *mu = (*mu * 10.0).max(1e-12);
    }
    None
}

/// Newton iterations on the stationarity equations with the per-node residual
/// as merit; `ln Q` may only move within round-off.
fn polish(
    ctx: &Ctx,
    st: &mut State,
    grads: &mut Gradients,
    history: &mut Vec<f64>,
    opts: &SolveOptions,
) -> Result<usize> {
    let n = st.u.len();
    let mut merit = nodal_gap(grads, 1.0);
    let mut steps = 0;
    for _ in 0..opts.polish_iter {
        if merit <= opts.polish_tol {
            break;
        }
        let g: Vec<f64> = grads
            .log_num
            .iter()
            .zip(&grads.log_den)
            .map(|(a, b)| a - b)
            .collect();
        let h = ctx.hessian(st, grads);
        let mut mu = 0.0;
        let Some(d) = newton_direction(&h, &g, &mut mu) else {
            break;
        };
        let f = st.ray.log_q;
        let noise = 1e-13 * f.abs().max(1.0);
        let mut tau = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let tu: Vec<f64> = (0..n).map(|i| st.u[i] + tau * d[i]).collect();
            let tv: Vec<f64> = (0..n).map(|i| st.v[i] + tau * d[n + i]).collect();
            if let Ok(trial) = ctx.project(tu, tv) {
                if trial.ray.log_q <= f + noise {
                    if let Ok(tg) = ctx.gradients(&trial) {
                        let tm = nodal_gap(&tg, 1.0);
                        if tm < merit {
                            accepted = Some((trial, tg, tm));
                            break;
                        }
                    }
                }
            }
            tau *= 0.5;
        }
        let Some((trial, tg, tm)) = accepted else {
            break;
        };
        *st = trial;
        *grads = tg;
        merit = tm;
        history.push(st.ray.log_q);
        steps += 1;
    }
    Ok(steps)
}

fn initial_pair(spec: &ProblemSpec, init: &Init) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = spec.grid();
    match init {
        Init::Given(u, v) => {
            spec.check_pair(u, v)?;
            Ok((u.values().to_vec(), v.values().to_vec()))
        }
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let n = grid.interior_count();
            let u = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let v = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            Ok((u, v))
        }
        Init::Cones => {
            let (au, av) = match spec.variant() {
                Variant::P1 { x0 } => (x0, x0),
                Variant::P1Max => {
                    let k = inradius_node(grid, &distance_field(grid));
                    (k, k)
                }
                Variant::P2 { x1, x2 } => (x1, x2),
            };
            let (u, v) = cone_pair(grid, au, av, spec.s(), spec.t(), spec.theta())?;
            Ok((u.into_values(), v.into_values()))
        }
    }
}

/// Minimizes the Rayleigh quotient on the constraint set by projected descent.
///
/// Each step moves along a descent direction of `ln Q`, clamps at zero when
/// `positivity` is set, then normalizes and rebalances. Steps are halved
/// until `ln Q` decreases. The returned pair is the last accepted iterate,
/// which is also the best one seen.
pub fn solve(spec: &ProblemSpec, init: Init, opts: &SolveOptions) -> Result<EigenPair> {
    opts.validate()?;
    let ctx = Ctx {
        spec,
        ks: Kernel::new(spec.grid(), spec.s(), spec.p())?,
        kt: Kernel::new(spec.grid(), spec.t(), spec.p())?,
        positivity: opts.positivity,
    };
    let (u0, v0) = initial_pair(spec, &init)?;
    let mut st = ctx.project(u0, v0)?;
    let mut history = vec![st.ray.log_q];
    let mut grads = ctx.gradients(&st)?;
    let mut residual = relative_gap(&grads, 1.0);

    let mut mu = 1e-8;
    let mut radius = opts.step;
    let mut last_delta = f64::INFINITY;
    let mut failed = 0usize;
    let mut flat = 0usize;
    let mut iterations = 0usize;
    let mut status = SolveStatus::MaxIter;

    loop {
        if residual <= 10.0 * opts.tol && (iterations == 0 || last_delta < opts.tol) {
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let n = st.u.len();
        let g: Vec<f64> = grads
            .log_num
            .iter()
            .zip(&grads.log_den)
            .map(|(a, b)| a - b)
            .collect();
        let d = match opts.direction {
            Direction::Newton => {
                let h = ctx.hessian(&st, &grads);
                newton_direction(&h, &g, &mut mu).unwrap_or_else(|| g.iter().map(|x| -x).collect())
            }
            Direction::Gradient => g.iter().map(|x| -x).collect(),
        };
        let w_sup = sup(&st.u).max(sup(&st.v));
        let d_sup = sup(&d);
        if d_sup == 0.0 {
            status = SolveStatus::Stalled;
            break;
        }
        let f = st.ray.log_q;
        let noise = 1e-14 * f.abs().max(1.0);
        let mut tau = (radius * w_sup / d_sup).min(1.0);
        let first_tau = tau;
        let mut accepted = None;
        while tau * d_sup >= STEP_FLOOR * w_sup {
            let tu: Vec<f64> = (0..n).map(|i| st.u[i] + tau * d[i]).collect();
            let tv: Vec<f64> = (0..n).map(|i| st.v[i] + tau * d[n + i]).collect();
            if let Ok(trial) = ctx.project(tu, tv) {
                let ft = trial.ray.log_q;
                if ft < f {
                    accepted = Some((trial, None));
                    break;
                }
                // below round-off in ln Q, accept only if the residual drops
                if ft <= f + noise {
                    if let Ok(tg) = ctx.gradients(&trial) {
                        let tr = relative_gap(&tg, 1.0);
                        if tr < residual {
                            accepted = Some((trial, Some((tg, tr))));
                            break;
                        }
                    }
                }
            }
            tau *= 0.5;
        }

        match accepted {
            Some((trial, cached)) => {
                failed = 0;
                last_delta = (f - trial.ray.log_q).abs();
                if tau == first_tau {
                    mu = (mu * 0.1).max(1e-12);
                    radius = (radius * 2.0).min(opts.step.max(1.0));
                } else {
                    radius = (tau * d_sup / w_sup).max(STEP_FLOOR);
                }
                st = trial;
                history.push(st.ray.log_q);
                let (gr, r) = match cached {
                    Some(c) => c,
                    None => {
                        let gr = ctx.gradients(&st)?;
                        let r = relative_gap(&gr, 1.0);
                        (gr, r)
                    }
                };
                grads = gr;
                residual = r;
                if last_delta < opts.tol {
                    flat += 1;
                    if flat >= MAX_FLAT && residual > 10.0 * opts.tol {
                        status = SolveStatus::Stalled;
                        break;
                    }
                } else {
                    flat = 0;
                }
            }
            None => {
                failed += 1;
                if failed >= MAX_FAILED {
                    status = SolveStatus::Diverged;
                    break;
                }
                match opts.direction {
                    Direction::Newton if mu < 1e12 => mu = (mu * 100.0).max(1e-6),
                    _ => {
                        status = SolveStatus::Stalled;
                        break;
                    }
                }
            }
        }
    }

    if status == SolveStatus::Converged && opts.polish_iter > 0 {
        iterations += polish(&ctx, &mut st, &mut grads, &mut history, opts)?;
        residual = relative_gap(&grads, 1.0);
    }

    // final exact renormalization
    let ld = log_denominator(spec, &st.u, &st.v);
    let c = (-ld / spec.p()).exp();
    let grid = spec.grid().clone();
    let u = ScalarField::new(grid.clone(), st.u.iter().map(|x| x * c).collect())?;
    let v = ScalarField::new(grid, st.v.iter().map(|x| x * c).collect())?;
    let ray = rayleigh_values(spec, &ctx.ks, &ctx.kt, u.values(), v.values())?;
    Ok(EigenPair {
        u,
        v,
        lambda: ray.log_q.exp(),
        log_lambda: ray.log_q,
        numerator_parts: ray.numerator_parts,
        denominator: ray.denominator,
        iterations,
        converged: status == SolveStatus::Converged,
        status,
        weak_residual: residual,
        nodal_residual: nodal_gap(&grads, 1.0),
        history,
    })
}
