use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use fraclap_core::asymptotics::{
    self, cone_pair, default_apexes, lambda_infinity, thm_checks, Check,
};
use fraclap_core::domain::distance_field;
use fraclap_core::eigensolver::{self, EigenPairRecord, Init, ProblemSpec};
use fraclap_core::nonlocal::holder_seminorm;
use fraclap_core::selftest;
use fraclap_core::viscosity::{residual_u, residual_v, smaller, SignConvention};
use fraclap_core::ScalarField;

use crate::config::{Format, RunConfig};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// Errors mapped to exit status 2.
#[derive(Debug)]
pub struct InvalidInput(pub anyhow::Error);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InvalidInput {}

fn invalid(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(InvalidInput(e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    field.write_csv(f)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn p_tag(p: f64) -> String {
    format!("{p}").replace('.', "_")
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "{} {}: measured {:.6e} threshold {:.6e} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold,
            c.detail
        );
    }
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (spec, opts) = (|| {
        cfg.validate_solver()?;
        let p = cfg.problem.p.context("problem.p is required for solve")?;
        let grid = cfg.grid()?;
        Ok::<_, anyhow::Error>((cfg.spec(grid, p)?, cfg.solver.options()))
    })()
    .map_err(invalid)?;
    prepare_dir(out)?;
    let pair = eigensolver::solve(&spec, Init::from(cfg.solver.init), &opts)?;
    if cfg.output.wants(Format::Json) {
        let mut rec = serde_json::to_value(pair.record(&spec))?;
        rec["history"] = json!(pair.history);
        write_json(&out.join("pair.json"), &rec)?;
    }
    if cfg.output.wants(Format::Csv) {
        write_field(&out.join("u.csv"), &pair.u)?;
        write_field(&out.join("v.csv"), &pair.v)?;
    }
    println!(
        "{} p={} lambda={:e} lambda_root={:.12} iterations={} status={:?} weak_residual={:e}",
        spec.variant().name(),
        spec.p(),
        pair.lambda,
        pair.lambda_root(spec.p()),
        pair.iterations,
        pair.status,
        pair.weak_residual
    );
    Ok(if pair.converged {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p_list = &cfg.sweep.p_list;
    let template = (|| {
        cfg.validate_solver()?;
        if p_list.is_empty() {
            bail!("sweep.p_list is empty");
        }
        if p_list.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("sweep.p_list must be strictly increasing");
        }
        let grid = cfg.grid()?;
        for &p in p_list {
            cfg.spec(grid.clone(), p)?;
        }
        cfg.spec(grid, p_list[0])
    })()
    .map_err(invalid)?;
    prepare_dir(out)?;
    let report = asymptotics::sweep(
        &template,
        p_list,
        &cfg.solver.options(),
        Init::from(cfg.solver.init),
    )?;

    for r in &report.records {
        println!(
            "p={} lambda_root={:.12} holder_u={:.6} holder_v={:.6} status={:?} weak_residual={:e}",
            r.p, r.lambda_root, r.holder_u, r.holder_v, r.status, r.weak_residual
        );
    }
    println!("limit={:.12} R={}", report.limit, report.r);
    let checks = match thm_checks(&report, &cfg.checks.check_config()) {
        Ok(c) => c,
        Err(e) => vec![Check {
            name: "records".into(),
            passed: false,
            measured: report.converged().count() as f64,
            threshold: 3.0,
            detail: e.to_string(),
        }],
    };
    print_checks(&checks);

    if cfg.output.wants(Format::Json) {
        write_json(&out.join("sweep.json"), &report)?;
        write_json(&out.join("checks.json"), &checks)?;
        for (spec, pair) in report.specs.iter().zip(&report.pairs) {
            let name = format!("pair_p{}.json", p_tag(spec.p()));
            write_json(&out.join(name), &pair.record(spec))?;
        }
    }
    if cfg.output.wants(Format::Csv) {
        let f = fs::File::create(out.join("sweep.csv"))?;
        report.write_csv(f)?;
    }
    if cfg.output.wants(Format::Gnuplot) {
        report.write_gnuplot(out)?;
    }
    let all_converged = report.records.iter().all(|r| r.converged);
    Ok(if all_converged && checks.iter().all(|c| c.passed) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

pub fn cones(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = (|| {
        let grid = cfg.grid()?;
        let p = cfg
            .problem
            .p
            .or_else(|| cfg.sweep.p_list.last().copied())
            .unwrap_or(8.0);
        cfg.spec(grid, p)
    })()
    .map_err(invalid)?;
    prepare_dir(out)?;
    let g = spec.grid();
    let r = distance_field(g).r;
    let (s, t, th) = (spec.s(), spec.t(), spec.theta());
    let (au, av) = default_apexes(&spec);
    let (phi, psi) = cone_pair(g, au, av, s, t, th)?;
    let lim = lambda_infinity(s, t, th, r)?;
    let sup = r.powf((th - 1.0) * (t - s));
    let prod = phi.sup_norm().powf(th) * psi.values()[av].powf(1.0 - th);
    let hol = r.powf((th - 1.0) * t - s * th);
    let checks = vec![
        Check {
            name: "sup_norm_identity".into(),
            passed: ((phi.sup_norm() - sup) / sup).abs() <= 1e-12,
            measured: ((phi.sup_norm() - sup) / sup).abs(),
            threshold: 1e-12,
            detail: format!(
                "|phi|_inf = {} vs R^((theta-1)(t-s)) = {sup}",
                phi.sup_norm()
            ),
        },
        Check {
            name: "normalization_identity".into(),
            passed: (prod - 1.0).abs() <= 1e-12,
            measured: (prod - 1.0).abs(),
            threshold: 1e-12,
            detail: format!("|phi|_inf^theta psi(x0)^(1-theta) = {prod}"),
        },
    ];
    print_checks(&checks);
    let hu = holder_seminorm(&phi, s)?;
    let hv = holder_seminorm(&psi, t)?;
    println!("holder phi={hu:.6} psi={hv:.6} formula={hol:.6} limit={lim:.6} R={r}");
    if cfg.output.wants(Format::Csv) {
        write_field(&out.join("phi.csv"), &phi)?;
        write_field(&out.join("psi.csv"), &psi)?;
    }
    if cfg.output.wants(Format::Json) {
        write_json(
            &out.join("cones.json"),
            &json!({
                "r": r,
                "apex_u": au,
                "apex_v": av,
                "lambda_infinity": lim,
                "holder_phi": hu,
                "holder_psi": hv,
                "holder_formula": hol,
                "checks": checks,
            }),
        )?;
    }
    Ok(if checks.iter().all(|c| c.passed) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn load_pairs(dir: &Path) -> Result<Vec<(ProblemSpec, eigensolver::EigenPair)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("pair") && n.ends_with(".json"))
        })
        .collect();
    // a sweep directory may also hold a single-p `pair.json`
    if files
        .iter()
        .any(|f| f.file_name().is_some_and(|n| n != "pair.json"))
    {
        files.retain(|f| f.file_name().is_some_and(|n| n != "pair.json"));
    }
    files.sort();
    let mut pairs = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f)?;
        let rec: EigenPairRecord =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
        pairs.push(rec.restore()?);
    }
    if pairs.is_empty() {
        bail!("no pair JSON files in {}", dir.display());
    }
    pairs.sort_by(|a, b| a.0.p().total_cmp(&b.0.p()));
    Ok(pairs)
}

pub fn viscosity_check(cfg: Option<&RunConfig>, input: &Path, out: &Path) -> Result<Outcome> {
    let pairs = load_pairs(input).map_err(invalid)?;
    let (layer_k, conventions) = match cfg {
        Some(c) => (c.checks.layer_k, c.checks.sign_conventions.clone()),
        None => (3, SignConvention::BOTH.to_vec()),
    };
    if conventions.is_empty() {
        return Err(invalid(anyhow::anyhow!("checks.sign_conventions is empty")));
    }
    prepare_dir(out)?;
    let mut summary = Vec::new();
    let mut v_sup = Vec::new();
    for (spec, pair) in &pairs {
        let g = spec.grid();
        let r = distance_field(g).r;
        let lim = lambda_infinity(spec.s(), spec.t(), spec.theta(), r)?;
        let anchor = spec.v_anchor(&pair.v);
        let rv = residual_v(&pair.v, anchor, spec.t(), layer_k)?;
        let tag = p_tag(spec.p());
        let f = fs::File::create(out.join(format!("residual_v_p{tag}.csv")))?;
        rv.write_csv(g, f)?;
        let va = pair.v.values()[anchor];
        let mut ru = Vec::new();
        for &sign in &conventions {
            let rep = residual_u(&pair.u, va, spec.s(), spec.theta(), lim, layer_k, sign)?;
            let name = match sign {
                SignConvention::Minus => "minus",
                SignConvention::Plus => "plus",
            };
            let f = fs::File::create(out.join(format!("residual_u_{name}_p{tag}.csv")))?;
            rep.write_csv(g, f)?;
            ru.push(rep);
        }
        let best = ru.iter().skip(1).fold(&ru[0], |a, b| smaller(a, b));
        println!(
            "p={} residual_v={:.6e} residual_u: {} smaller={:?}",
            spec.p(),
            rv.sup_norm,
            ru.iter()
                .map(|r| format!(
                    "{:?}={:.6e}",
                    r.sign_convention.expect("u report"),
                    r.sup_norm
                ))
                .collect::<Vec<_>>()
                .join(" "),
            best.sign_convention.expect("u report"),
        );
        v_sup.push(rv.sup_norm);
        summary.push(json!({
            "p": spec.p(),
            "lambda_infinity": lim,
            "residual_v": rv.summary(),
            "residual_u": ru.iter().map(|r| r.summary()).collect::<Vec<_>>(),
            "smaller_convention": best.sign_convention,
        }));
    }
    let trend = v_sup.windows(2).last().map(|w| w[1] <= w[0]);
    match trend {
        Some(ok) => println!(
            "{} residual_v non-increasing over the last two exponents",
            if ok { "PASS" } else { "FAIL" }
        ),
        None => println!("residual_v trend needs at least two exponents"),
    }
    write_json(
        &out.join("viscosity.json"),
        &json!({ "layer_k": layer_k, "records": summary, "trend_non_increasing": trend }),
    )?;
    Ok(if trend == Some(false) {
        Outcome::Fail
    } else {
        Outcome::Pass
    })
}

pub fn selftest() -> Result<Outcome> {
    let checks = selftest::run()?;
    print_checks(&checks);
    Ok(if checks.iter().all(|c| c.passed) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
