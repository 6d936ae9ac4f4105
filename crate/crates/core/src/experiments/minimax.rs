use serde::{Deserialize, Serialize};

use super::sweep::{least_favourable, HSpec, PROOF_P_CONSTANT};
use super::McSummary;
use crate::bounds::{lower_bound, upper_bound, LowerCase};
use crate::erm::excess_of_erm_at;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::model::{HypothesisClass, Scenario};

/// Largest `V` for which every `b` in `{0,1}^(V-1)` is enumerated.
pub const MAX_MINIMAX_V: usize = 13;

/// All bit vectors of length `len`, in lexicographic order.
pub fn all_bit_vectors(len: usize) -> Vec<Vec<bool>> {
    (0..1u64 << len).map(|mask| (0..len).map(|j| (mask >> (len - 1 - j)) & 1 == 1).collect()).collect()
}

fn bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxConfig {
    #[serde(rename = "V")]
    pub v: usize,
    pub p: f64,
    pub h: f64,
    /// Propensity on `x_1..x_{V-1}` (and optionally `x_V`).
    pub e_values: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub kappa2: Option<f64>,
    /// Calibrated constant for the upper envelope, if one is available.
    #[serde(default)]
    pub kappa1_hat: Option<f64>,
}

/// Mean SAR-ERM excess risk under one member `P_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupRow {
    pub b: String,
    pub mean_excess: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxResult {
    pub rows: Vec<SupRow>,
    pub sup_b: String,
    pub sup_mean: f64,
    pub sup_se: f64,
    pub lower: f64,
    pub lower_case: LowerCase,
    pub upper_unit: f64,
    pub upper_calibrated: Option<f64>,
}

impl MinimaxResult {
    pub fn lower_holds(&self) -> bool {
        self.sup_mean >= self.lower
    }

    pub fn upper_holds(&self) -> Option<bool> {
        self.upper_calibrated.map(|u| self.sup_mean <= u)
    }
}

fn sup_over_b(
    build: impl Fn(Vec<bool>) -> Result<Scenario<f64>>,
    v: usize,
    n: usize,
    replicates: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<Vec<SupRow>> {
    if v > MAX_MINIMAX_V {
        return Err(Error::param("V", format!("sup over b enumerates 2^(V-1) members; V <= {MAX_MINIMAX_V}")));
    }
    let mut rows = Vec::new();
    for (mask, b) in all_bit_vectors(v - 1).into_iter().enumerate() {
        let label = bits(&b);
        let scenario = build(b)?;
        let class = HypothesisClass::all_labelings(scenario.discrete_support().expect("discrete").points().clone())?;
        let excess =
            excess_of_erm_at(&scenario, &class, n, LossKind::Sar, replicates, seed, stream_offset + mask as u64)?;
        let summary = McSummary::of(&excess);
        rows.push(SupRow { b: label, mean_excess: summary.mean, se: summary.se });
    }
    Ok(rows)
}

fn argmax(rows: &[SupRow]) -> &SupRow {
    rows.iter()
        .fold(None::<&SupRow>, |best, r| match best {
            Some(b) if b.mean_excess >= r.mean_excess => Some(b),
            _ => Some(r),
        })
        .expect("at least one member")
}

/// Worst-case mean excess of SAR-ERM over the Assouad family, next to the
/// lower bound and the upper envelope.
pub fn run_minimax_experiment(config: &MinimaxConfig) -> Result<MinimaxResult> {
    let MinimaxConfig { v, p, h, ref e_values, n, replicates, seed, kappa2, kappa1_hat } = *config;
    let build = |b: Vec<bool>| Scenario::assouad(v, p, h, b, e_values.clone());
    let e_m = build(vec![true; v.saturating_sub(1)])?.e_m();
    let rows = sup_over_b(build, v, n, replicates, seed, 0)?;
    let top = argmax(&rows).clone();
    let lower = lower_bound(n, v, h, e_m, kappa2)?;
    let upper = upper_bound(n, v, h, e_m, 1.0)?;
    Ok(MinimaxResult {
        sup_b: top.b,
        sup_mean: top.mean_excess,
        sup_se: top.se,
        lower: lower.value,
        lower_case: lower.case,
        upper_unit: upper.value,
        upper_calibrated: kappa1_hat.map(|k| k * upper.value),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub h: f64,
    pub e_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub h: f64,
    pub e_m: f64,
    pub p: f64,
    pub sup_mean: f64,
    pub sup_se: f64,
    pub upper_unit: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa1Calibration {
    pub kappa1_hat: f64,
    pub rows: Vec<CalibrationRow>,
}

/// Smallest `kappa1` such that the worst-case mean excess over the
/// least-favourable Assouad family stays below `kappa1` times the unit upper
/// bound at every grid point.
pub fn calibrate_kappa1(grid: &[CalibrationPoint], replicates: usize, seed: u64) -> Result<Kappa1Calibration> {
    if grid.is_empty() {
        return Err(Error::param("grid", "calibration grid must not be empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, pt) in grid.iter().enumerate() {
        let build = |b: Vec<bool>| least_favourable(pt.v, pt.n, HSpec::Fixed(pt.h), pt.e_m, PROOF_P_CONSTANT, b);
        let p = build(vec![true; pt.v - 1])?.assouad_params().expect("assouad").p;
        let sup = sup_over_b(build, pt.v, pt.n, replicates, seed, (i as u64) << 32)?;
        let top = argmax(&sup);
        let upper = upper_bound(pt.n, pt.v, pt.h, pt.e_m, 1.0)?.value;
        rows.push(CalibrationRow {
            n: pt.n,
            v: pt.v,
            h: pt.h,
            e_m: pt.e_m,
            p,
            sup_mean: top.mean_excess,
            sup_se: top.se,
            upper_unit: upper,
            ratio: top.mean_excess / upper,
        });
    }
    let kappa1_hat = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(Kappa1Calibration { kappa1_hat, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_vectors_are_lexicographic() {
        let all = all_bit_vectors(2);
        assert_eq!(all, vec![vec![false, false], vec![false, true], vec![true, false], vec![true, true]]);
        assert_eq!(all_bit_vectors(0), vec![Vec::<bool>::new()]);
    }

    #[test]
    fn noiseless_fully_labeled_family_has_no_excess() {
        let cfg = MinimaxConfig {
            v: 3,
            p: 0.3,
            h: 1.0,
            e_values: vec![1.0, 1.0],
            n: 400,
            replicates: 50,
            seed: 2,
            kappa2: None,
            kappa1_hat: Some(1.0),
        };
        let r = run_minimax_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.sup_mean, 0.0);
        assert_eq!(r.upper_holds(), Some(true));
    }

    #[test]
    fn oversized_family_is_rejected() {
        let cfg = MinimaxConfig {
            v: 14,
            p: 0.01,
            h: 0.5,
            e_values: vec![0.5; 13],
            n: 100,
            replicates: 10,
            seed: 0,
            kappa2: None,
            kappa1_hat: None,
        };
        assert!(run_minimax_experiment(&cfg).is_err());
    }

    #[test]
    fn calibration_is_deterministic() {
        let grid = [CalibrationPoint { n: 500, v: 3, h: 0.5, e_m: 0.5 }];
        let a = calibrate_kappa1(&grid, 100, 4).unwrap();
        assert_eq!(a, calibrate_kappa1(&grid, 100, 4).unwrap());
        assert!(a.kappa1_hat > 0.0 && a.kappa1_hat.is_finite());
    }
}
