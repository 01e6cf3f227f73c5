mod common;

use std::sync::Arc;

use proptest::prelude::*;

use fraclap_core::asymptotics::{cone_pair, default_apexes};
use fraclap_core::domain::build_interval;
use fraclap_core::eigensolver::{
    denominator, normalize, rayleigh, rebalance, solve, weak_residual, AlphaRule, Init,
    ProblemSpec, SolveOptions, Variant,
};
use fraclap_core::nonlocal::{gagliardo, holder_seminorm};
use fraclap_core::{DomainGrid, ScalarField};

fn interval(n: usize) -> Arc<DomainGrid> {
    Arc::new(build_interval(0.0, 1.0, n).unwrap())
}

fn field(g: &Arc<DomainGrid>, vals: &[f64]) -> ScalarField {
    ScalarField::new(g.clone(), vals[..g.interior_count()].to_vec()).unwrap()
}

fn values(n: usize, lo: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_matches_nested_loops(n in 8usize..20, p in 2.0f64..12.0, sigma in 0.1f64..0.9,
                                   vals in values(20, -1.0)) {
        let g = interval(n);
        let (e, _) = gagliardo(&field(&g, &vals), sigma, p).unwrap();
        let naive = common::energy_1d(0.0, 1.0, &vals[..n], sigma, p);
        prop_assert!((e.value() - naive).abs() <= 1e-11 * naive);
    }

    #[test]
    fn energy_is_p_homogeneous(p in 2.0f64..300.0, c in 1e-3f64..1e3, vals in values(16, -1.0)) {
        let g = interval(16);
        let f = field(&g, &vals);
        let (e, _) = gagliardo(&f, 0.5, p).unwrap();
        let (ec, _) = gagliardo(&f.scaled(c), 0.5, p).unwrap();
        let want = e.ln() + p * c.ln();
        prop_assert!((ec.ln() - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn holder_matches_brute_force(sigma in 0.05f64..0.95, vals in values(24, -1.0)) {
        let g = interval(24);
        let got = holder_seminorm(&field(&g, &vals), sigma).unwrap();
        let want = common::holder_1d(&vals, sigma);
        prop_assert!((got - want).abs() <= 1e-13 * want);
    }

    #[test]
    fn normalization_and_rebalancing(p in 5.0f64..200.0, vals in values(32, 0.05)) {
        let g = interval(16);
        let spec = ProblemSpec::new(g.clone(), Variant::P1 { x0: 5 }, 0.4, 0.6, 0.3, p, AlphaRule::Linear).unwrap();
        let (u, v) = (field(&g, &vals[..16]), field(&g, &vals[16..]));
        let (nu, nv) = normalize(&spec, &u, &v).unwrap();
        prop_assert!(denominator(&spec, &nu, &nv).unwrap().ln().abs() <= 1e-12 * p);
        let q0 = rayleigh(&spec, &u, &v).unwrap().log_q;
        prop_assert!((rayleigh(&spec, &nu, &nv).unwrap().log_q - q0).abs() <= 1e-12 * q0.abs().max(1.0));
        let (bu, bv) = rebalance(&spec, &nu, &nv).unwrap();
        let rb = rayleigh(&spec, &bu, &bv).unwrap();
        prop_assert!(rb.denominator.ln().abs() <= 1e-10 * p);
        prop_assert!(rb.log_q <= q0 + 1e-12 * q0.abs().max(1.0));
    }
}

fn p1(n: usize, p: f64) -> ProblemSpec {
    let g = interval(n);
    let x0 = g.snap(&[0.5]).unwrap();
    ProblemSpec::new(g, Variant::P1 { x0 }, 0.5, 0.5, 0.5, p, AlphaRule::Linear).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_invariants(n in 8usize..20, p in 4.5f64..40.0, seed in 0u64..1000,
                         s in 0.3f64..0.6, dt in 0.0f64..0.3, theta in 0.1f64..0.9) {
        let g = interval(n);
        let x0 = n / 3;
        let spec = ProblemSpec::new(g, Variant::P1 { x0 }, s, s + dt, theta, p, AlphaRule::Linear).unwrap();
        let pair = solve(&spec, Init::Random { seed }, &SolveOptions::default()).unwrap();
        prop_assert!(pair.converged, "{:?}", pair.status);
        for w in pair.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!(pair.u.min_value() >= 0.0 && pair.v.min_value() >= 0.0);
        prop_assert!(pair.denominator.ln().abs() <= 1e-12 * p);
        prop_assert!(pair.weak_residual <= 1e-4);

        let (au, av) = default_apexes(&spec);
        let (phi, psi) = cone_pair(spec.grid(), au, av, spec.s(), spec.t(), spec.theta()).unwrap();
        prop_assert!(pair.log_lambda <= rayleigh(&spec, &phi, &psi).unwrap().log_q + 1e-12);
    }
}

#[test]
fn restarting_from_a_solution_is_immediate() {
    let spec = p1(24, 10.0);
    let opts = SolveOptions::default();
    let pair = solve(&spec, Init::Cones, &opts).unwrap();
    let again = solve(&spec, Init::Given(pair.u.clone(), pair.v.clone()), &opts).unwrap();
    assert!(again.converged);
    assert!(again.iterations <= 2, "{} iterations", again.iterations);
    assert!((again.log_lambda - pair.log_lambda).abs() <= 1e-10 * pair.log_lambda.abs());
}

#[test]
fn perturbation_raises_the_weak_residual() {
    let spec = p1(24, 8.0);
    let mut pair = solve(&spec, Init::Cones, &SolveOptions::default()).unwrap();
    let base = pair.weak_residual;
    let bumped: Vec<f64> = pair
        .u
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| x * if i % 3 == 0 { 1.1 } else { 0.9 })
        .collect();
    pair.u = ScalarField::new(spec.grid().clone(), bumped).unwrap();
    let (u, v) = normalize(&spec, &pair.u, &pair.v).unwrap();
    let r = rayleigh(&spec, &u, &v).unwrap();
    pair.u = u;
    pair.v = v;
    pair.log_lambda = r.log_q;
    let perturbed = weak_residual(&spec, &pair).unwrap();
    assert!(perturbed > 100.0 * base.max(1e-12), "{perturbed} vs {base}");
}

#[test]
fn max_variant_is_below_every_fixed_anchor() {
    let g = interval(20);
    let opts = SolveOptions::default();
    let max = ProblemSpec::new(
        g.clone(),
        Variant::P1Max,
        0.5,
        0.5,
        0.5,
        8.0,
        AlphaRule::Linear,
    )
    .unwrap();
    let lmax = solve(&max, Init::Cones, &opts).unwrap();
    let mut best = f64::INFINITY;
    for x0 in [4, 7, 9, 10, 15] {
        let spec = ProblemSpec::new(
            g.clone(),
            Variant::P1 { x0 },
            0.5,
            0.5,
            0.5,
            8.0,
            AlphaRule::Linear,
        )
        .unwrap();
        let l = solve(&spec, Init::Cones, &opts).unwrap().log_lambda;
        assert!(
            lmax.log_lambda <= l + 1e-10,
            "x0={x0}: {} > {l}",
            lmax.log_lambda
        );
        best = best.min(l);
    }
    // max |v| sits at some node, so the best fixed anchor matches the max variant
    assert!((lmax.log_lambda - best).abs() <= 1e-6 * best.abs());
}

#[test]
fn eigenvalue_is_independent_of_the_start() {
    let spec = p1(20, 12.0);
    let opts = SolveOptions::default();
    let a = solve(&spec, Init::Cones, &opts).unwrap();
    let b = solve(&spec, Init::Random { seed: 3 }, &opts).unwrap();
    assert!((a.log_lambda - b.log_lambda).abs() <= 1e-9 * a.log_lambda.abs());
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = interval(16);
    let mk = |s, t, theta, p| {
        ProblemSpec::new(
            g.clone(),
            Variant::P1 { x0: 3 },
            s,
            t,
            theta,
            p,
            AlphaRule::Linear,
        )
    };
    assert!(mk(0.5, 0.5, 1.5, 8.0).is_err());
    assert!(mk(0.6, 0.5, 0.5, 8.0).is_err());
    assert!(mk(0.5, 0.5, 0.5, 1.5).is_err());
    assert!(mk(0.5, 1.0, 0.5, 8.0).is_err());
    assert!(ProblemSpec::new(
        g.clone(),
        Variant::P2 { x1: 4, x2: 4 },
        0.5,
        0.5,
        0.5,
        8.0,
        AlphaRule::Linear
    )
    .is_err());
    assert!(ProblemSpec::new(
        g.clone(),
        Variant::P1 { x0: 99 },
        0.5,
        0.5,
        0.5,
        8.0,
        AlphaRule::Linear
    )
    .is_err());
}
