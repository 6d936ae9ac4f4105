use serde::{Deserialize, Serialize};

use super::McSummary;
use crate::bounds::cannings_holds;
use crate::erm::excess_of_erm_at;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::model::{HypothesisClass, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanningsRow {
    pub scenario: String,
    pub n: usize,
    pub loss: LossKind,
    pub replicates: usize,
    pub mean_excess: f64,
    pub se: f64,
    /// Exact excess risk of the labeled-class Bayes rule.
    pub plateau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanningsStudy {
    pub rows: Vec<CanningsRow>,
    pub plateau_holds: f64,
    pub plateau_violated: f64,
}

impl CanningsStudy {
    pub fn row(&self, scenario: &str, n: usize, loss: LossKind) -> Option<&CanningsRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.n == n && r.loss == loss)
    }
}

/// Four equally likely points; the first two positive.
///
/// In the first scenario `e eta >= 1/2` wherever `eta >= 1/2`; in the second
/// the labeled-class Bayes rule discards both positive points.
pub fn default_cannings_pair() -> Result<(Scenario<f64>, Scenario<f64>)> {
    let points: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
    let holds = Scenario::discrete(points.clone(), vec![0.25; 4], vec![0.9, 0.9, 0.1, 0.1], vec![0.6; 4], 0.8)?;
    let violated = Scenario::discrete(points, vec![0.25; 4], vec![0.6, 0.6, 0.1, 0.1], vec![0.5; 4], 0.2)?;
    Ok((holds, violated))
}

/// Mean excess risk of nontraditional and SAR ERM on a pair of scenarios,
/// one satisfying the Cannings condition and one violating it.
pub fn run_cannings_study(
    holds: &Scenario<f64>,
    violated: &Scenario<f64>,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<CanningsStudy> {
    if !cannings_holds(holds).0 {
        return Err(Error::param("holds", "scenario violates the Cannings condition"));
    }
    if cannings_holds(violated).0 {
        return Err(Error::param("violated", "scenario satisfies the Cannings condition"));
    }
    let mut rows = Vec::new();
    let mut plateaus = [0.0; 2];
    for (si, (name, scenario)) in [("holds", holds), ("violated", violated)].into_iter().enumerate() {
        let support = scenario
            .discrete_support()
            .ok_or_else(|| Error::param(name, "the Cannings study needs a discrete scenario"))?;
        let class = HypothesisClass::all_labelings(support.points().clone())?;
        let plateau = scenario.excess_risk(&scenario.nontraditional_bayes_classifier()?)?;
        plateaus[si] = plateau;
        for (ni, &n) in n_grid.iter().enumerate() {
            for (li, loss) in [LossKind::Nontraditional, LossKind::Sar].into_iter().enumerate() {
                let stream = ((si as u64) << 32) | ((ni as u64) << 1) | li as u64;
                let excess = excess_of_erm_at(scenario, &class, n, loss, replicates, seed, stream)?;
                let summary = McSummary::of(&excess);
                rows.push(CanningsRow {
                    scenario: name.to_string(),
                    n,
                    loss,
                    replicates,
                    mean_excess: summary.mean,
                    se: summary.se,
                    plateau,
                });
            }
        }
    }
    Ok(CanningsStudy { rows, plateau_holds: plateaus[0], plateau_violated: plateaus[1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pair_and_plateaus() {
        let (holds, violated) = default_cannings_pair().unwrap();
        assert!(cannings_holds(&holds).0);
        assert!(!cannings_holds(&violated).0);
        let study = run_cannings_study(&holds, &violated, &[200], 20, 1).unwrap();
        assert_eq!(study.rows.len(), 4);
        assert_eq!(study.plateau_holds, 0.0);
        // Both positive points lost: 2 * 0.25 * |2 * 0.6 - 1|.
        assert!((study.plateau_violated - 0.1).abs() < 1e-12);
    }

    #[test]
    fn swapped_pair_is_rejected() {
        let (holds, violated) = default_cannings_pair().unwrap();
        assert!(run_cannings_study(&violated, &holds, &[10], 10, 1).is_err());
    }
}
