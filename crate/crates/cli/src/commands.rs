use std::path::Path;
use std::time::Instant;

use pu_risklab::bounds::{bound_report, h_prime, BoundConstants};
use pu_risklab::erm::{erm, loss_for};
use pu_risklab::experiments::{
    calibrate_kappa1, default_cannings_pair, run_cannings_study, run_minimax_experiment, run_rate_sweep,
    run_validation, write_csv, write_manifest, HSpec, Manifest, MinimaxConfig, SweepConfig, SweepParam, SweepTemplate,
    ValidationConfig, PROOF_P_CONSTANT,
};
use pu_risklab::losses::{risk_report, LossKind};
use pu_risklab::parallel::{stream_rng, try_map_replicates, with_workers};
use pu_risklab::{Hypothesis, HypothesisClass, Scenario};
use serde::Serialize;

use crate::config::{config_error, parse_scenario, CliError, CliResult, RunConfig};

/// Writes the CSV and its manifest, returning the CSV path for the summary.
fn emit<S: Serialize>(
    command: &str,
    schema: &str,
    cfg: &RunConfig,
    rows: &[S],
    started: Instant,
) -> CliResult<std::path::PathBuf> {
    let out = cfg.out_or(&format!("{command}.csv"));
    write_csv(&out, schema, rows).map_err(|e| config_error("out", e))?;
    let config = serde_json::to_value(cfg).map_err(|e| config_error("config", e))?;
    let mut manifest = Manifest::new(command, schema, cfg.seed, config, &out);
    manifest.workers = cfg.workers;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    write_manifest(&manifest).map_err(|e| config_error("out", e))?;
    Ok(out)
}

fn pooled<R: Send>(cfg: &RunConfig, f: impl FnOnce() -> CliResult<R> + Send) -> CliResult<R> {
    with_workers(cfg.workers, f)?
}

fn need<T: Copy>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| config_error(field, "required"))
}

fn class_for(scenario: &Scenario) -> CliResult<HypothesisClass> {
    Ok(match scenario.discrete_support() {
        Some(d) => HypothesisClass::all_labelings(d.points().clone())?,
        None => HypothesisClass::stumps_1d(),
    })
}

fn print_written(path: &Path) {
    println!("wrote {} and {}", path.display(), Manifest::path_for(path).display());
}

pub fn validate(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let defaults = ValidationConfig::default();
    let vc = ValidationConfig {
        seed: cfg.seed()?,
        unbiasedness_n: *cfg.n.get_or_insert(defaults.unbiasedness_n),
        unbiasedness_replicates: *cfg.replicates.get_or_insert(defaults.unbiasedness_replicates),
        variance_triples: defaults.variance_triples,
    };
    let report = pooled(&cfg, || Ok(run_validation(&vc)?))?;
    let out = emit("validate", "validation", &cfg, &report.checks, started)?;
    for c in &report.checks {
        println!("{:<20} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    print_written(&out);
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Failed(format!("invariant suite failed: {}", failed.join(", "))))
    }
}

pub fn risk(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let seed = cfg.seed()?;
    let n = need(cfg.n, "n")?;
    let scenario = cfg.scenario()?;
    let mut classifiers = vec![
        ("bayes".to_string(), scenario.bayes_classifier()?),
        ("nontraditional_bayes".to_string(), scenario.nontraditional_bayes_classifier()?),
    ];
    if let Some(d) = scenario.discrete_support() {
        let v = d.len();
        classifiers.push(("all_zero".into(), Hypothesis::table(d.points().clone(), vec![false; v])?));
        classifiers.push(("all_one".into(), Hypothesis::table(d.points().clone(), vec![true; v])?));
    }
    let sample = scenario.sample(n, &mut stream_rng(seed, 0, 0));
    let alpha = Some(scenario.alpha());
    let e_m = scenario.is_scar().then(|| scenario.e_m());
    let scenario_id =
        serde_json::to_value(scenario.kind()).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut rows = Vec::with_capacity(classifiers.len());
    for (id, g) in &classifiers {
        rows.push(risk_report(&scenario, &sample, g, alpha, e_m)?.row(scenario_id.clone(), id.clone(), seed));
    }
    let out = emit("risk", "risk", cfg, &rows, started)?;
    println!("n = {n}, labeled = {}", sample.labeled_count());
    for r in &rows {
        println!(
            "{:<22} R = {:.6}  R_sar = {:.6}  R_nontrad = {:.6}",
            r.g_id, r.r_true, r.r_emp_sar, r.r_emp_nontraditional
        );
    }
    print_written(&out);
    Ok(())
}

#[derive(Serialize)]
struct ErmRow {
    replicate: usize,
    n: usize,
    loss_kind: LossKind,
    min_emp_risk: f64,
    num_ties: u64,
    hypothesis_encoding: String,
    true_risk: f64,
    excess_risk: f64,
}

pub fn erm_cmd(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let seed = cfg.seed()?;
    let n = need(cfg.n, "n")?;
    let replicates = *cfg.replicates.get_or_insert(1);
    if replicates == 0 {
        return Err(config_error("replicates", "must be at least 1"));
    }
    let kind = *cfg.loss.get_or_insert(LossKind::Sar);
    let scenario = cfg.scenario()?;
    let class = class_for(&scenario)?;
    let loss = loss_for(&scenario, kind);
    let r_star = scenario.true_risk(&scenario.bayes_classifier()?)?;
    let rows = pooled(&cfg, || {
        Ok(try_map_replicates(seed, 0, replicates, |r, rng| {
            let sample = scenario.sample(n, rng);
            let fit = erm(&class, &sample, &loss)?;
            let true_risk = scenario.true_risk(&fit.minimizer)?;
            Ok(ErmRow {
                replicate: r,
                n,
                loss_kind: kind,
                min_emp_risk: fit.min_emp_risk,
                num_ties: fit.num_ties,
                hypothesis_encoding: fit.minimizer.encoding(),
                true_risk,
                excess_risk: true_risk - r_star,
            })
        })?)
    })?;
    let out = emit("erm", "erm", &cfg, &rows, started)?;
    let mean = rows.iter().map(|r| r.excess_risk).sum::<f64>() / rows.len() as f64;
    println!("{} ERM over {replicates} sample(s) of size {n}: mean excess risk {mean:.6}", kind.name());
    if let Some(first) = rows.first() {
        println!(
            "first minimizer {} (empirical risk {:.6}, {} tied)",
            first.hypothesis_encoding, first.min_emp_risk, first.num_ties
        );
    }
    print_written(&out);
    Ok(())
}

pub fn bounds(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let constants =
        BoundConstants { kappa1: *cfg.kappa1.get_or_insert(1.0), kappa2: cfg.kappa2, k: *cfg.k.get_or_insert(1.0) };
    let report = bound_report(need(cfg.n, "n")?, need(cfg.v, "V")?, need(cfg.h, "h")?, need(cfg.em, "em")?, constants)?;
    let out = emit("bounds", "bounds", &cfg, std::slice::from_ref(&report), started)?;
    println!(
        "upper = {:.6} ({:?}; fast {:.6}, slow {:.6}), h' = {:.6}",
        report.upper, report.regime, report.upper_fast, report.upper_slow, report.h_prime
    );
    match (report.lower, report.lower_case) {
        (Some(l), Some(case)) => println!("lower = {l:.6} ({case:?})"),
        _ => println!("lower bound not applicable: n * e_m < V"),
    }
    print_written(&out);
    Ok(())
}

pub fn curve(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let seed = cfg.seed()?;
    let parameter: SweepParam = need(cfg.sweep.as_deref(), "sweep")?.parse()?;
    let grid = cfg.grid.clone().ok_or_else(|| config_error("grid", "required"))?;
    let first = *grid.first().ok_or_else(|| config_error("grid", "must not be empty"))?;
    let template = match (&cfg.template, &cfg.scenario) {
        (Some(t), _) => t.clone(),
        (None, Some(_)) => SweepTemplate::Fixed { scenario: cfg.scenario()? },
        (None, None) => {
            let swept = |p: SweepParam| parameter == p;
            let h = match (cfg.beta, cfg.h) {
                _ if swept(SweepParam::H) => HSpec::Fixed(first),
                (Some(beta), _) => HSpec::RelativeToHPrime(beta),
                (None, h) => HSpec::Fixed(need(h, "h")?),
            };
            SweepTemplate::LeastFavourable {
                v: *cfg.v.get_or_insert(4),
                n: if swept(SweepParam::N) { first as usize } else { need(cfg.n, "n")? },
                h,
                e_m: if swept(SweepParam::Em) { first } else { need(cfg.em, "em")? },
                c: PROOF_P_CONSTANT,
                b: cfg.b.as_ref().map(|b| b.iter().map(|&x| x != 0).collect()),
            }
        }
    };
    cfg.template = Some(template.clone());
    let sweep = SweepConfig {
        template,
        parameter,
        grid,
        replicates: *cfg.replicates.get_or_insert(1000),
        seed,
        loss: *cfg.loss.get_or_insert(LossKind::Sar),
    };
    let result = pooled(&cfg, || Ok(run_rate_sweep(&sweep)?))?;
    let out = emit("curve", "curve", &cfg, &result.points, started)?;
    for p in &result.points {
        println!(
            "{:>10}  mean excess {:.3e} (se {:.1e})  upper {:.3e} {:?}",
            p.x, p.mean_excess, p.se, p.upper_unit, p.regime
        );
    }
    match &result.fit {
        Some(fit) => {
            println!("log-log slope {:.3} (R^2 {:.3}, {} point(s) excluded)", fit.slope, fit.r_squared, fit.excluded)
        }
        None => println!("too few grid points above the noise floor to fit a slope"),
    }
    print_written(&out);
    Ok(())
}

pub fn minimax(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let seed = cfg.seed()?;
    let v = *cfg.v.get_or_insert(4);
    let (n, h, em) = (need(cfg.n, "n")?, need(cfg.h, "h")?, need(cfg.em, "em")?);
    if v < 2 {
        return Err(config_error("V", format!("need V >= 2, got {v}")));
    }
    let replicates = *cfg.replicates.get_or_insert(1000);
    let p = match cfg.p {
        Some(p) => p,
        None => {
            let h_eff = h.max(h_prime(n, v, em));
            (PROOF_P_CONSTANT / (n as f64 * em * h_eff * h_eff)).min(1.0 / (v - 1) as f64)
        }
    };
    cfg.p = Some(p);
    let result = pooled(&cfg, || {
        let kappa1_hat = match &cfg.calibration {
            Some(grid) => Some(calibrate_kappa1(grid, replicates, seed.wrapping_add(1))?.kappa1_hat),
            None => cfg.kappa1,
        };
        let mc = MinimaxConfig {
            v,
            p,
            h,
            e_values: cfg.e_values.clone().unwrap_or_else(|| vec![em; v - 1]),
            n,
            replicates,
            seed,
            kappa2: cfg.kappa2,
            kappa1_hat,
        };
        Ok(run_minimax_experiment(&mc)?)
    })?;
    let out = emit("minimax", "minimax", &cfg, &result.rows, started)?;
    println!(
        "p = {p:.6}; sup over b at b = {}: mean excess {:.4e} (se {:.1e})",
        result.sup_b, result.sup_mean, result.sup_se
    );
    println!(
        "lower bound {:.4e} ({:?}): {}",
        result.lower,
        result.lower_case,
        if result.lower_holds() { "holds" } else { "violated" }
    );
    match (result.upper_calibrated, result.upper_holds()) {
        (Some(u), Some(ok)) => println!("calibrated upper {u:.4e}: {}", if ok { "holds" } else { "violated" }),
        _ => println!("unit upper {:.4e} (no calibrated kappa1 given)", result.upper_unit),
    }
    print_written(&out);
    Ok(())
}

pub fn cannings(cfg: &RunConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let started = Instant::now();
    let seed = cfg.seed()?;
    let (default_holds, default_violated) = default_cannings_pair()?;
    let holds = match &cfg.holds {
        Some(v) => parse_scenario("holds", v)?,
        None => default_holds,
    };
    let violated = match &cfg.violated {
        Some(v) => parse_scenario("violated", v)?,
        None => default_violated,
    };
    let grid: Vec<usize> = match (&cfg.grid, cfg.n) {
        (Some(g), _) => g
            .iter()
            .map(|&x| {
                if x >= 1.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(config_error("grid", format!("{x} is not a sample size")))
                }
            })
            .collect::<CliResult<_>>()?,
        (None, Some(n)) => vec![n],
        (None, None) => vec![10_000],
    };
    cfg.grid = Some(grid.iter().map(|&n| n as f64).collect());
    let replicates = *cfg.replicates.get_or_insert(500);
    let study = pooled(&cfg, || Ok(run_cannings_study(&holds, &violated, &grid, replicates, seed)?))?;
    let out = emit("cannings", "cannings", &cfg, &study.rows, started)?;
    println!("plateau: holds {:.6}, violated {:.6}", study.plateau_holds, study.plateau_violated);
    for r in &study.rows {
        println!(
            "{:<9} n = {:<6} {:<7} mean excess {:.4e} (se {:.1e})",
            r.scenario,
            r.n,
            r.loss.name(),
            r.mean_excess,
            r.se
        );
    }
    print_written(&out);
    Ok(())
}
