use serde::{Deserialize, Serialize};

use super::McSummary;
use crate::error::Result;
use crate::losses::{emp_risk_nontraditional, emp_risk_sar, emp_risk_scar_alpha, emp_risk_scar_em, emp_risk_standard};
use crate::model::{Hypothesis, Scenario};
use crate::parallel::try_map_replicates;

/// Largest |z| accepted by the suite.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Sar,
    ScarEm,
    ScarAlpha,
    Nontraditional,
    Standard,
}

/// A discrete scenario and the classifiers to evaluate on it.
#[derive(Clone, Debug)]
pub struct UnbiasednessCase {
    pub id: String,
    pub scenario: Scenario<f64>,
    pub classifiers: Vec<(String, Hypothesis<f64>)>,
}

impl UnbiasednessCase {
    /// The Bayes rule, both constant rules and the complement of the Bayes rule.
    pub fn with_standard_classifiers(id: impl Into<String>, scenario: Scenario<f64>) -> Result<Self> {
        let g_star = scenario.bayes_classifier()?;
        let table = g_star.as_table().expect("discrete scenario").clone();
        let points = table.points().clone();
        let v = points.len();
        let complement = table.labels().iter().map(|&b| !b).collect();
        let classifiers = vec![
            ("bayes".to_string(), g_star),
            ("all_zero".to_string(), Hypothesis::table(points.clone(), vec![false; v])?),
            ("all_one".to_string(), Hypothesis::table(points.clone(), vec![true; v])?),
            ("bayes_complement".to_string(), Hypothesis::table(points, complement)?),
        ];
        Ok(Self { id: id.into(), scenario, classifiers })
    }
}

/// Five discrete scenarios, three SCAR and two SAR, each labeling at least a
/// fifth of the sample on average so the `N_L = 0` convention stays negligible.
pub fn default_unbiasedness_cases() -> Result<Vec<UnbiasednessCase>> {
    let line = |k: usize| (0..k).map(|i| vec![i as f64]).collect::<Vec<_>>();
    let scenarios = vec![
        ("assouad_v3_scar", Scenario::assouad(3, 0.3, 0.4, vec![true, true], vec![0.8, 0.8])?),
        ("assouad_v4_full", Scenario::assouad(4, 0.25, 0.6, vec![true, false, true], vec![1.0; 3])?),
        (
            "discrete_scar",
            Scenario::discrete(line(4), vec![0.3, 0.3, 0.2, 0.2], vec![0.9, 0.7, 0.2, 0.05], vec![0.6; 4], 0.4)?,
        ),
        (
            "discrete_sar",
            Scenario::discrete(line(4), vec![0.25; 4], vec![0.85, 0.65, 0.3, 0.1], vec![0.9, 0.4, 0.2, 0.6], 0.3)?,
        ),
        ("assouad_v5_sar", Scenario::assouad(5, 0.2, 0.5, vec![true, false, true, true], vec![0.3, 0.9, 0.5, 0.7])?),
    ];
    scenarios.into_iter().map(|(id, s)| UnbiasednessCase::with_standard_classifiers(id, s)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessRow {
    pub scenario_id: String,
    pub g_id: String,
    pub estimator: Estimator,
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub se: f64,
    /// `R(g)`, or `P(g(X) != S)` for the nontraditional estimator.
    pub target: f64,
    pub z: f64,
    pub pass: bool,
}

/// Monte Carlo means of every estimator against its exact target.
///
/// The SCAR estimators are only evaluated on constant-propensity scenarios,
/// the only ones on which they are unbiased.
pub fn run_unbiasedness_suite(
    cases: &[UnbiasednessCase],
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<UnbiasednessRow>> {
    let mut rows = Vec::new();
    for (case_index, case) in cases.iter().enumerate() {
        let scenario = &case.scenario;
        let scar = scenario.is_scar();
        let (alpha, e_m) = (scenario.alpha(), scenario.e_m());
        let mut estimators = vec![Estimator::Sar];
        if scar {
            estimators.extend([Estimator::ScarEm, Estimator::ScarAlpha]);
        }
        estimators.extend([Estimator::Nontraditional, Estimator::Standard]);
        let width = estimators.len();

        let per_replicate = try_map_replicates(seed, case_index as u64, replicates, |_, rng| {
            let sample = scenario.sample(n, rng);
            let mut out = Vec::with_capacity(case.classifiers.len() * width);
            for (_, g) in &case.classifiers {
                for &est in &estimators {
                    out.push(match est {
                        Estimator::Sar => emp_risk_sar(&sample, g)?,
                        Estimator::ScarEm => emp_risk_scar_em(&sample, g, e_m)?,
                        Estimator::ScarAlpha => emp_risk_scar_alpha(&sample, g, alpha)?,
                        Estimator::Nontraditional => emp_risk_nontraditional(&sample, g),
                        Estimator::Standard => emp_risk_standard(&sample, g),
                    });
                }
            }
            Ok(out)
        })?;

        for (gi, (g_id, g)) in case.classifiers.iter().enumerate() {
            let risk = scenario.true_risk(g)?;
            let nontraditional = scenario.nontraditional_risk(g)?;
            for (k, &est) in estimators.iter().enumerate() {
                let column: Vec<f64> = per_replicate.iter().map(|r| r[gi * width + k]).collect();
                let summary = McSummary::of(&column);
                let target = if est == Estimator::Nontraditional { nontraditional } else { risk };
                let z = summary.z_score(target);
                rows.push(UnbiasednessRow {
                    scenario_id: case.id.clone(),
                    g_id: g_id.clone(),
                    estimator: est,
                    n,
                    replicates,
                    mean: summary.mean,
                    se: summary.se,
                    target,
                    z,
                    pass: z.abs() <= Z_LIMIT,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cases_are_well_formed() {
        let cases = default_unbiasedness_cases().unwrap();
        assert_eq!(cases.len(), 5);
        assert_eq!(cases.iter().filter(|c| c.scenario.is_scar()).count(), 3);
        for c in &cases {
            assert_eq!(c.classifiers.len(), 4);
            assert!(c.scenario.prob_labeled() >= 0.2);
        }
    }

    #[test]
    fn small_suite_runs_and_is_deterministic() {
        let cases = default_unbiasedness_cases().unwrap();
        let a = run_unbiasedness_suite(&cases[..2], 20, 300, 3).unwrap();
        let b = run_unbiasedness_suite(&cases[..2], 20, 300, 3).unwrap();
        assert_eq!(a, b);
        // 4 classifiers x 5 estimators on each SCAR case.
        assert_eq!(a.len(), 40);
    }

    #[test]
    fn full_labeling_makes_estimators_identical() {
        let cases = default_unbiasedness_cases().unwrap();
        let rows = run_unbiasedness_suite(&cases[1..2], 30, 200, 1).unwrap();
        for g in ["bayes", "all_zero", "all_one", "bayes_complement"] {
            let means: Vec<f64> =
                rows.iter().filter(|r| r.g_id == g && r.estimator != Estimator::ScarAlpha).map(|r| r.mean).collect();
            assert!(means.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12), "{g}: {means:?}");
        }
    }
}
