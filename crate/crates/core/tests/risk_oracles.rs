//! Risks and estimators against exact enumeration over the support.

use proptest::prelude::*;
use pu_risklab::experiments::random_discrete_scenario;
use pu_risklab::losses::{emp_risk_nontraditional, emp_risk_sar, emp_risk_scar_alpha, emp_risk_standard, loss_sar};
use pu_risklab::model::{Covariate, Hypothesis, PUObservation, PUSample, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ex() -> Scenario<f64> {
    Scenario::assouad(3, 0.2, 0.4, vec![true, false], vec![0.5, 0.5]).unwrap()
}

fn table(s: &Scenario<f64>, labels: &[bool]) -> Hypothesis<f64> {
    Hypothesis::table(s.discrete_support().unwrap().points().clone(), labels.to_vec()).unwrap()
}

/// `sum_x P(x) [g(x) (1 - eta(x)) + (1 - g(x)) eta(x)]`.
fn enumerated_risk(s: &Scenario<f64>, labels: &[bool]) -> f64 {
    let d = s.discrete_support().unwrap();
    (0..d.len()).map(|j| d.probs()[j] * if labels[j] { 1.0 - d.eta()[j] } else { d.eta()[j] }).sum()
}

/// Expectation of the SAR loss for one draw, summing over `(x, y, s)`.
fn enumerated_sar_expectation(s: &Scenario<f64>, labels: &[bool]) -> f64 {
    let d = s.discrete_support().unwrap();
    let mut total = 0.0;
    for (j, &g) in labels.iter().enumerate() {
        let (p, eta, e) = (d.probs()[j], d.eta()[j], d.propensity()[j]);
        let labeled = p * eta * e;
        let unlabeled = p - labeled;
        total += labeled * ((1.0 / e) * if g { -1.0 } else { 1.0 } + if g { 1.0 } else { 0.0 });
        total += unlabeled * if g { 1.0 } else { 0.0 };
    }
    total
}

fn labelings(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << k).map(move |m| (0..k).map(|j| m >> j & 1 == 1).collect())
}

#[test]
fn assouad_example_risks() {
    let s = ex();
    let eta = s.discrete_support().unwrap().eta().to_vec();
    assert!((eta[0] - 0.7).abs() < 1e-15 && (eta[1] - 0.3).abs() < 1e-15 && eta[2] == 0.0);
    let g_star = s.bayes_classifier().unwrap();
    assert_eq!(g_star, table(&s, &[true, false, false]));
    assert!((s.true_risk(&g_star).unwrap() - 0.12).abs() < 1e-15);
    let flipped = table(&s, &[false, false, false]);
    assert!((s.true_risk(&flipped).unwrap() - 0.20).abs() < 1e-15);
    for (labels, k) in [(vec![false, false, false], 1.0), (vec![false, true, false], 2.0)] {
        assert!((s.excess_risk(&table(&s, &labels)).unwrap() - k * 0.2 * 0.4).abs() < 1e-15);
    }
    assert!((s.expected_labeled_count(1000) - 100.0).abs() < 1e-12);
}

#[test]
fn all_ones_family_bayes_rule_is_b() {
    let s = Scenario::assouad(5, 0.1, 0.3, vec![true; 4], vec![0.5; 4]).unwrap();
    assert_eq!(s.bayes_classifier().unwrap(), table(&s, &[true, true, true, true, false]));
}

#[test]
fn risks_match_enumeration_on_random_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let s = random_discrete_scenario(&mut rng).unwrap();
        let k = s.discrete_support().unwrap().len();
        let r_star = enumerated_risk(&s, s.bayes_classifier().unwrap().as_table().unwrap().labels());
        for labels in labelings(k) {
            let g = table(&s, &labels);
            let exact = enumerated_risk(&s, &labels);
            assert!((s.true_risk(&g).unwrap() - exact).abs() < 1e-12);
            assert!((s.excess_risk(&g).unwrap() - (exact - r_star)).abs() < 1e-12);
            // One-draw unbiasedness of the SAR loss, with no sampling involved.
            assert!((enumerated_sar_expectation(&s, &labels) - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn nontraditional_risk_matches_eta_tilde_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let s = random_discrete_scenario(&mut rng).unwrap();
        let d = s.discrete_support().unwrap();
        for labels in labelings(d.len()) {
            let exact: f64 = (0..d.len())
                .map(|j| {
                    let tilde = d.eta()[j] * d.propensity()[j];
                    d.probs()[j] * if labels[j] { 1.0 - tilde } else { tilde }
                })
                .sum();
            assert!((s.nontraditional_risk(&table(&s, &labels)).unwrap() - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn loss_sar_examples() {
    assert_eq!(loss_sar(true, true, Some(0.5)).unwrap(), -1.0);
    assert_eq!(loss_sar::<f64>(false, false, None).unwrap(), 0.0);
    assert_eq!(loss_sar(false, true, Some(0.25)).unwrap(), 4.0);
    assert_eq!(loss_sar(true, true, Some(1.0)).unwrap(), 0.0);
    assert_eq!(loss_sar(false, true, Some(1.0)).unwrap(), 1.0);
    assert!(loss_sar(true, true, Some(0.0)).is_err());
    assert!(loss_sar(true, true, Some(1.5)).is_err());
    assert!(loss_sar::<f64>(true, true, None).is_err());
}

fn one_point_sample(obs: &[(bool, bool, f64)], e_m: f64) -> PUSample<f64> {
    let x = Covariate::scalar(0.0).unwrap();
    let obs = obs.iter().map(|&(s, y, e)| PUObservation::new(x.clone(), s, Some(e), y).unwrap()).collect();
    PUSample::new(obs, e_m).unwrap()
}

fn constant(value: bool) -> Hypothesis<f64> {
    Hypothesis::explicit(if value { "one" } else { "zero" }, move |_| value)
}

#[test]
fn empirical_risk_examples() {
    let single = one_point_sample(&[(true, true, 0.5)], 0.5);
    assert_eq!(emp_risk_sar(&single, &constant(true)).unwrap(), -1.0);
    let unlabeled = one_point_sample(&[(false, true, 0.5), (false, false, 0.5), (false, true, 0.5)], 0.5);
    assert_eq!(emp_risk_sar(&unlabeled, &constant(true)).unwrap(), 1.0);
    assert_eq!(emp_risk_sar(&unlabeled, &constant(false)).unwrap(), 0.0);
    assert_eq!(emp_risk_scar_alpha(&unlabeled, &constant(true), 0.4).unwrap(), 1.0);
    assert_eq!(emp_risk_nontraditional(&unlabeled, &constant(false)), 0.0);
}

proptest! {
    #[test]
    fn sar_risk_is_mean_of_losses(
        obs in prop::collection::vec((any::<bool>(), any::<bool>(), 0.2f64..=1.0), 1..40),
        g in any::<bool>(),
    ) {
        let obs: Vec<(bool, bool, f64)> = obs.into_iter().map(|(s, y, e)| (s && y, y, e)).collect();
        let sample = one_point_sample(&obs, 0.2);
        let mean = obs.iter().map(|&(s, _, e)| loss_sar(g, s, Some(e)).unwrap()).sum::<f64>() / obs.len() as f64;
        prop_assert!((emp_risk_sar(&sample, &constant(g)).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn full_propensity_collapses_every_estimator(
        ys in prop::collection::vec(any::<bool>(), 1..40),
        g in any::<bool>(),
    ) {
        // e = 1 means S = Y, so SAR, nontraditional and standard risks coincide.
        let obs: Vec<(bool, bool, f64)> = ys.iter().map(|&y| (y, y, 1.0)).collect();
        let sample = one_point_sample(&obs, 1.0);
        let h = constant(g);
        let standard = emp_risk_standard(&sample, &h);
        prop_assert!((emp_risk_sar(&sample, &h).unwrap() - standard).abs() < 1e-12);
        prop_assert!((emp_risk_nontraditional(&sample, &h) - standard).abs() < 1e-12);
        let alpha = ys.iter().filter(|&&y| y).count() as f64 / ys.len() as f64;
        if alpha > 0.0 {
            prop_assert!((emp_risk_scar_alpha(&sample, &h, alpha).unwrap() - standard).abs() < 1e-12);
        }
    }
}
