//! End-to-end smoke suite: log-domain energies against the nested-loop
//! oracle, operator against finite differences, cone identities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{cone_pair, Check};
use crate::domain::{build_interval, distance_field, DomainGrid};
use crate::error::Result;
use crate::field::ScalarField;
use crate::nonlocal::{frac_p_laplacian, gagliardo};
use crate::oracle;

fn random_field(g: &Arc<DomainGrid>, rng: &mut ChaCha8Rng) -> Result<ScalarField> {
    let vals = (0..g.interior_count())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    ScalarField::new(g.clone(), vals)
}

fn check(name: &str, measured: f64, threshold: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        passed: measured <= threshold,
        measured,
        threshold,
        detail,
    }
}

pub fn run() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for n in [8, 16] {
        let g = Arc::new(build_interval(0.0, 1.0, n)?);
        for p in [3.0, 8.0] {
            for sigma in [0.3, 0.7] {
                let f = random_field(&g, &mut rng)?;
                let (e, _) = gagliardo(&f, sigma, p)?;
                let naive = oracle::gagliardo_energy(&g, f.values(), sigma, p);
                worst = worst.max((e.value() - naive).abs() / naive);
            }
        }
    }
    out.push(check(
        "energy_vs_naive_sum",
        worst,
        1e-10,
        "n in {8,16}".into(),
    ));

    let g = Arc::new(build_interval(0.0, 1.0, 12)?);
    let mut worst = 0.0f64;
    for p in [3.0, 6.0] {
        let f = random_field(&g, &mut rng)?;
        let op = frac_p_laplacian(&f, 0.5, p)?.to_values()?;
        let fd = oracle::energy_gradient_fd(&g, f.values(), 0.5, p);
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in op.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    out.push(check(
        "operator_vs_finite_differences",
        worst,
        1e-5,
        "n = 12".into(),
    ));

    let g = Arc::new(build_interval(0.0, 1.0, 64)?);
    let r = distance_field(&g).r;
    let x0 = g.snap(&[0.5])?;
    let (s, t, th) = (0.3, 0.6, 0.4);
    let (phi, psi) = cone_pair(&g, x0, x0, s, t, th)?;
    let sup = r.powf((th - 1.0) * (t - s));
    let prod = phi.sup_norm().powf(th) * psi.values()[x0].powf(1.0 - th);
    let gap = ((phi.sup_norm() - sup) / sup).abs().max((prod - 1.0).abs());
    out.push(check("cone_identities", gap, 1e-12, format!("R = {r}")));
    Ok(out)
}
