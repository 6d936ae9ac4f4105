use rand::Rng;
use serde::{Deserialize, Serialize};

use super::unbiasedness::{default_unbiasedness_cases, run_unbiasedness_suite, UnbiasednessRow};
use crate::bounds::{
    c_e, hellinger_sq_exact, lemma1_series, margin_sandwich, solve_fixed_point, zero_envelope, WhichW, FIXED_POINT_RTOL,
};
use crate::error::Result;
use crate::losses::sar_increment_moments;
use crate::model::{Hypothesis, HypothesisClass, Scenario, MARGIN_TOLERANCE};
use crate::parallel::stream_rng;
use crate::scalar::CompensatedSum;

/// Agreement required between closed forms and their enumerations.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HellingerRow {
    pub p: f64,
    pub e: f64,
    pub h: f64,
    pub closed_form: f64,
    pub brute_force: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Closed form against enumeration, and against `2 p e h^2`, on a 5x5x5 grid
/// of adjacent members of the `V = 3` family.
pub fn hellinger_grid() -> Result<Vec<HellingerRow>> {
    let ps: [f64; 5] = [0.02, 0.1, 0.2, 0.35, 0.5];
    let es = [0.05, 0.25, 0.5, 0.75, 1.0];
    let hs = [0.05, 0.25, 0.5, 0.75, 1.0];
    let mut rows = Vec::new();
    for &p in &ps {
        for &e in &es {
            for &h in &hs {
                let a = Scenario::<f64>::assouad(3, p, h, vec![true, false], vec![e, e])?;
                let b = Scenario::<f64>::assouad(3, p, h, vec![false, false], vec![e, e])?;
                let check = hellinger_sq_exact(&a, &b)?;
                let pass = (check.closed_form - check.brute_force).abs() <= EXACT_TOLERANCE
                    && check.closed_form <= check.bound + EXACT_TOLERANCE;
                rows.push(HellingerRow {
                    p,
                    e,
                    h,
                    closed_form: check.closed_form,
                    brute_force: check.brute_force,
                    bound: check.bound,
                    pass,
                });
            }
        }
    }
    Ok(rows)
}

/// A random finite scenario: 2 to 6 points on a line, random masses,
/// `eta` uniform on `[0, 1]` and propensities uniform on `[0.05, 1]`.
pub fn random_discrete_scenario<R: Rng + ?Sized>(rng: &mut R) -> Result<Scenario<f64>> {
    let k = rng.random_range(2..=6);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    let eta = (0..k).map(|_| rng.random::<f64>()).collect();
    let e = (0..k).map(|_| rng.random_range(0.05..=1.0)).collect();
    Scenario::discrete((0..k).map(|i| vec![i as f64]).collect(), probs, eta, e, 0.0)
}

fn random_table<R: Rng + ?Sized>(scenario: &Scenario<f64>, rng: &mut R) -> Result<Hypothesis<f64>> {
    let points = scenario.discrete_support().expect("discrete").points().clone();
    let labels = (0..points.len()).map(|_| rng.random::<bool>()).collect();
    Hypothesis::table(points, labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub case: usize,
    pub variance: f64,
    /// `2 C_e E|g - g'|^2`.
    pub bound: f64,
    pub second_moment: f64,
    /// `E[(g - g')^2 (1 + 4 eta (1 - e) / e)]`.
    pub identity: f64,
    pub pass: bool,
}

/// Exact variance of the SAR loss increment against its bound on random triples.
pub fn variance_triples(count: usize, seed: u64) -> Result<Vec<VarianceRow>> {
    let mut rows = Vec::with_capacity(count);
    for case in 0..count {
        let mut rng = stream_rng(seed, u64::MAX, case as u64);
        let scenario = random_discrete_scenario(&mut rng)?;
        let (g, g_prime) = (random_table(&scenario, &mut rng)?, random_table(&scenario, &mut rng)?);
        let m = sar_increment_moments(&scenario, &g, &g_prime)?;
        let bound = 2.0 * c_e(scenario.e_m())? * m.disagreement;

        let d = scenario.discrete_support().expect("discrete");
        let mut identity = CompensatedSum::new();
        for (i, x) in d.points().iter().enumerate() {
            if g.predict(x, Some(i)) != g_prime.predict(x, Some(i)) {
                let (eta, e) = (d.eta()[i], d.propensity()[i]);
                identity.add(d.probs()[i] * (1.0 + 4.0 * eta * (1.0 - e) / e));
            }
        }
        let identity = identity.value();
        let pass = m.variance <= bound + EXACT_TOLERANCE && (identity - m.second_moment).abs() <= EXACT_TOLERANCE;
        rows.push(VarianceRow { case, variance: m.variance, bound, second_moment: m.second_moment, identity, pass });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub c_e: f64,
    pub sigma: f64,
    pub lhs_partial: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// The series inequality on `{1.5, 3, 19} x {0.01, 0.1, 1, 10}` with 60 terms.
pub fn lemma1_grid() -> Result<Vec<Lemma1Row>> {
    let mut rows = Vec::new();
    for &ce in &[1.5, 3.0, 19.0] {
        for &sigma in &[0.01, 0.1, 1.0, 10.0] {
            let (lhs, rhs) = lemma1_series(ce, sigma, 60)?;
            rows.push(Lemma1Row { c_e: ce, sigma, lhs_partial: lhs, rhs, pass: lhs <= rhs });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRow {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub h: f64,
    pub e_m: f64,
    pub eps_star_sq: f64,
    /// `|F(eps*)| / (sqrt(n) eps*^2)`.
    pub relative_residual: f64,
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
    pub margin_pass: bool,
    pub zero_eps_star_sq: f64,
    pub zero_envelope: f64,
    pub zero_pass: bool,
}

/// Both fixed points on the 3x3x3x3 grid of `(n, V, h, e_m)` with `K = 1`.
// When `w(eps*) >= C_e` the log term is 1 and `eps*^2` equals the lower end
// exactly, so the comparison allows the bisection's own relative width.
fn within(x: f64, lo: f64, hi: f64) -> bool {
    let slack = 4.0 * FIXED_POINT_RTOL;
    x >= lo * (1.0 - slack) && x <= hi * (1.0 + slack)
}

pub fn fixed_point_grid() -> Result<Vec<FixedPointRow>> {
    let mut rows = Vec::new();
    for &n in &[100usize, 1000, 10_000] {
        for &v in &[2usize, 4, 8] {
            for &h in &[0.1, 0.4, 1.0] {
                for &e_m in &[0.2, 0.5, 1.0] {
                    let fp = solve_fixed_point(n, v, h, e_m, 1.0, WhichW::Margin)?;
                    let (lo, hi) = margin_sandwich(n, v, h, e_m, 1.0)?;
                    let scale = (n as f64).sqrt() * fp.eps_star_sq;
                    let relative_residual = fp.residual.abs() / scale;
                    let zero = solve_fixed_point(n, v, h, e_m, 1.0, WhichW::Zero)?;
                    let zero_scale = (n as f64).sqrt() * zero.eps_star_sq;
                    let env = zero_envelope(n, v, e_m, 1.0);
                    rows.push(FixedPointRow {
                        n,
                        v,
                        h,
                        e_m,
                        eps_star_sq: fp.eps_star_sq,
                        relative_residual,
                        sandwich_lower: lo,
                        sandwich_upper: hi,
                        margin_pass: relative_residual < 1e-9 && within(fp.eps_star_sq, lo, hi),
                        zero_eps_star_sq: zero.eps_star_sq,
                        zero_envelope: env,
                        zero_pass: zero.residual.abs() < 1e-9 * zero_scale && zero.eps_star_sq <= env,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Checks `h E|g - g*|^2 <= l(g, g*)` and `l(g, g*) = E[|g - g*| |2 eta - 1|]`
/// for every labeling of each scenario's support. Returns `(checked, failures)`.
pub fn margin_checks(scenarios: &[Scenario<f64>]) -> Result<(usize, usize)> {
    let (mut checked, mut failures) = (0, 0);
    for scenario in scenarios {
        let Some(d) = scenario.discrete_support() else { continue };
        let g_star = scenario.bayes_classifier()?;
        let class = HypothesisClass::all_labelings(d.points().clone())?;
        let h = scenario.margin_h();
        for g in class.members().expect("finite class") {
            let excess = scenario.excess_risk(&g)?;
            let by_margin = scenario.excess_risk_by_margin(&g)?;
            let dist = scenario.disagreement(&g, &g_star)?;
            checked += 1;
            if h * dist > excess + MARGIN_TOLERANCE || (excess - by_margin).abs() > EXACT_TOLERANCE {
                failures += 1;
            }
        }
    }
    Ok((checked, failures))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub unbiasedness_n: usize,
    pub unbiasedness_replicates: usize,
    pub variance_triples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { seed: 0, unbiasedness_n: 50, unbiasedness_replicates: 100_000, variance_triples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub unbiasedness: Vec<UnbiasednessRow>,
    pub hellinger: Vec<HellingerRow>,
    pub variance: Vec<VarianceRow>,
    pub lemma1: Vec<Lemma1Row>,
    pub fixed_point: Vec<FixedPointRow>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn outcome(name: &str, total: usize, failed: usize) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed: failed == 0, detail: format!("{} of {total} passed", total - failed) }
}

/// Every invariant suite: unbiasedness, Hellinger, variance bound, margin
/// bound, Lemma 1 and the fixed-point sandwich.
pub fn run_validation(config: &ValidationConfig) -> Result<ValidationReport> {
    let cases = default_unbiasedness_cases()?;
    let unbiasedness =
        run_unbiasedness_suite(&cases, config.unbiasedness_n, config.unbiasedness_replicates, config.seed)?;
    let hellinger = hellinger_grid()?;
    let variance = variance_triples(config.variance_triples, config.seed)?;
    let lemma1 = lemma1_grid()?;
    let fixed_point = fixed_point_grid()?;
    let scenarios: Vec<Scenario<f64>> = cases.into_iter().map(|c| c.scenario).collect();
    let (margin_total, margin_failed) = margin_checks(&scenarios)?;

    let failed = |flags: &mut dyn Iterator<Item = bool>| flags.filter(|&ok| !ok).count();
    let checks = vec![
        outcome("unbiasedness", unbiasedness.len(), failed(&mut unbiasedness.iter().map(|r| r.pass))),
        outcome("hellinger", hellinger.len(), failed(&mut hellinger.iter().map(|r| r.pass))),
        outcome("variance_bound", variance.len(), failed(&mut variance.iter().map(|r| r.pass))),
        outcome("margin_bound", margin_total, margin_failed),
        outcome("lemma1_series", lemma1.len(), failed(&mut lemma1.iter().map(|r| r.pass))),
        outcome("fixed_point_margin", fixed_point.len(), failed(&mut fixed_point.iter().map(|r| r.margin_pass))),
        outcome("fixed_point_zero", fixed_point.len(), failed(&mut fixed_point.iter().map(|r| r.zero_pass))),
    ];
    Ok(ValidationReport { checks, unbiasedness, hellinger, variance, lemma1, fixed_point })
}
