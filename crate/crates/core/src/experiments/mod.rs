//! Monte Carlo campaigns and invariant suites.
//!
//! Campaigns work in `f64`. Each one is a pure function of its configuration
//! and seed: replicate streams come from [`crate::parallel`] and results are
//! reduced in replicate order.

mod cannings;
mod minimax;
mod output;
mod sweep;
mod unbiasedness;
mod validation;

pub use cannings::{default_cannings_pair, run_cannings_study, CanningsRow, CanningsStudy};
pub use minimax::{
    all_bit_vectors, calibrate_kappa1, run_minimax_experiment, CalibrationPoint, CalibrationRow, Kappa1Calibration,
    MinimaxConfig, MinimaxResult, SupRow,
};
pub use output::{read_csv_schema, write_csv, write_manifest, Manifest};
pub use sweep::{
    fit_rate, least_favourable, run_rate_sweep, HSpec, RateFit, SweepConfig, SweepParam, SweepPoint, SweepResult,
    SweepTemplate, PROOF_P_CONSTANT,
};
pub use unbiasedness::{
    default_unbiasedness_cases, run_unbiasedness_suite, Estimator, UnbiasednessCase, UnbiasednessRow,
};
pub use validation::{
    fixed_point_grid, hellinger_grid, lemma1_grid, margin_checks, random_discrete_scenario, run_validation,
    variance_triples, CheckOutcome, FixedPointRow, HellingerRow, Lemma1Row, ValidationConfig, ValidationReport,
    VarianceRow,
};

use crate::scalar::CompensatedSum;

/// Mean and standard error of a batch of replicate values.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McSummary {
    pub mean: f64,
    pub se: f64,
    pub replicates: usize,
}

impl McSummary {
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        if m == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, replicates: 0 };
        }
        let mut sum = CompensatedSum::new();
        sum.extend(values.iter().copied());
        let mean = sum.value() / m as f64;
        if m == 1 {
            return Self { mean, se: 0.0, replicates: 1 };
        }
        let mut sq = CompensatedSum::new();
        sq.extend(values.iter().map(|v| (v - mean) * (v - mean)));
        let var = sq.value() / (m - 1) as f64;
        Self { mean, se: (var / m as f64).sqrt(), replicates: m }
    }

    /// `(mean - target) / se`. A gap within 1e-12 counts as exact agreement:
    /// estimators that are constant up to rounding have a spurious, tiny `se`.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = self.mean - target;
        if gap.abs() <= 1e-12 {
            0.0
        } else if self.se > 0.0 {
            gap / self.se
        } else {
            gap.signum() * f64::INFINITY
        }
    }
}
