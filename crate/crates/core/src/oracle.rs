//! Plain nested-loop reference implementations, written directly from the
//! defining sums without log-domain tricks. They share no code with the
//! production kernels and back both the `selftest` command and the tests.
//! Only usable where the energies fit in `f64` (moderate `p`).

use crate::domain::{DomainGrid, MaskRule};

/// Double sum over ordered interior pairs plus both exterior half-lines,
/// `2 Σ_x |u(x)|^p h [(x-a)^{-σp} + (b-x)^{-σp}] / (σp)`.
pub fn gagliardo_energy_1d(grid: &DomainGrid, u: &[f64], sigma: f64, p: f64) -> f64 {
    assert_eq!(grid.dim(), 1);
    let h = grid.h();
    let b = grid.bounds();
    let n = u.len();
    let mut total = 0.0;
    for i in 0..n {
        let xi = grid.coord(i)[0];
        for j in 0..n {
            if i == j {
                continue;
            }
            let xj = grid.coord(j)[0];
            total += (u[i] - u[j]).abs().powf(p) / (xi - xj).abs().powf(1.0 + sigma * p) * h * h;
        }
        let tail = ((xi - b.xmin).powf(-sigma * p) + (b.xmax - xi).powf(-sigma * p)) / (sigma * p);
        total += 2.0 * u[i].abs().powf(p) * tail * h;
    }
    total
}

/// 2D analogue: explicit sum over the exterior grid nodes plus the radial
/// tail `2π D^{-σp}/(σp)` beyond the distance `D` to the outer grid edge.
pub fn gagliardo_energy_2d(grid: &DomainGrid, u: &[f64], sigma: f64, p: f64) -> f64 {
    assert_eq!(grid.dim(), 2);
    let h = grid.h();
    let h2 = h * h;
    let nodes = grid.nodes();
    let mask = grid.interior_mask();
    let c = grid.collar_width();
    let b = grid.bounds();
    let expo = 2.0 + sigma * p;
    let n = u.len();
    let mut total = 0.0;
    for i in 0..n {
        let xi = grid.coord(i);
        for j in 0..n {
            if i != j {
                let r = grid.distance(i, j);
                total += (u[i] - u[j]).abs().powf(p) / r.powf(expo) * h2 * h2;
            }
        }
        let mut tail = 0.0;
        for (k, y) in nodes.iter().enumerate() {
            if !mask[k] {
                let r = ((xi[0] - y[0]).powi(2) + (xi[1] - y[1]).powi(2)).sqrt();
                tail += r.powf(-expo) * h2;
            }
        }
        let far = (xi[0] - (b.xmin - c))
            .min(b.xmax + c - xi[0])
            .min(xi[1] - (b.ymin - c))
            .min(b.ymax + c - xi[1]);
        tail += 2.0 * std::f64::consts::PI * far.powf(-sigma * p) / (sigma * p);
        total += 2.0 * u[i].abs().powf(p) * tail * h2;
    }
    total
}

pub fn gagliardo_energy(grid: &DomainGrid, u: &[f64], sigma: f64, p: f64) -> f64 {
    if grid.dim() == 1 {
        gagliardo_energy_1d(grid, u, sigma, p)
    } else {
        gagliardo_energy_2d(grid, u, sigma, p)
    }
}

/// Central differences of `u ↦ (1/p) E(u) / h^N`.
pub fn energy_gradient_fd(grid: &DomainGrid, u: &[f64], sigma: f64, p: f64) -> Vec<f64> {
    let cell = grid.h().powi(grid.dim() as i32);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let eps = 1e-6 * scale;
    (0..u.len())
        .map(|k| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[k] += eps;
            dn[k] -= eps;
            let ep = gagliardo_energy(grid, &up, sigma, p);
            let em = gagliardo_energy(grid, &dn, sigma, p);
            (ep - em) / (2.0 * eps) / p / cell
        })
        .collect()
}

/// Brute-force Hölder seminorm over interior pairs and the nearest exterior
/// boundary point of each node.
pub fn holder_seminorm(grid: &DomainGrid, u: &[f64], sigma: f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..u.len() {
        for j in 0..u.len() {
            if i != j {
                best = best.max((u[i] - u[j]).abs() / grid.distance(i, j).powf(sigma));
            }
        }
        let x = grid.coord(i);
        let d = match (grid.dim(), grid.mask_rule()) {
            (1, _) => (x[0] - grid.bounds().xmin).min(grid.bounds().xmax - x[0]),
            (_, MaskRule::Rectangle) => {
                let b = grid.bounds();
                (x[0] - b.xmin)
                    .min(b.xmax - x[0])
                    .min(x[1] - b.ymin)
                    .min(b.ymax - x[1])
            }
            (_, MaskRule::Disc { center, radius }) => {
                radius - ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt()
            }
        };
        best = best.max(u[i].abs() / d.powf(sigma));
    }
    best
}
