//! ERM against brute force: every member re-evaluated with risk formulas
//! written out independently of the library.

use std::sync::Arc;

use pu_risklab::erm::{erm_finite, erm_stump, TIE_TOLERANCE};
use pu_risklab::losses::{Loss, LossKind};
use pu_risklab::model::{Covariate, Hypothesis, HypothesisClass, PUObservation, PUSample, Polarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Draw {
    /// Index into the point list (finite case) or the raw value (stump case).
    at: usize,
    x: f64,
    s: bool,
    y: bool,
    e: f64,
}

fn oracle_risk(kind: LossKind, draws: &[Draw], g: impl Fn(&Draw) -> bool, alpha: f64, e_m: f64) -> f64 {
    let n = draws.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    match kind {
        LossKind::Sar | LossKind::ScarEm => {
            draws
                .iter()
                .map(|d| {
                    let e = if kind == LossKind::Sar { d.e } else { e_m };
                    let weight = if d.s { 1.0 / e } else { 0.0 };
                    weight * (2.0 * ind(!g(d)) - 1.0) + ind(g(d))
                })
                .sum::<f64>()
                / nf
        }
        LossKind::ScarAlpha => {
            let n_l = draws.iter().filter(|d| d.s).count();
            let labeled = if n_l == 0 {
                0.0
            } else {
                alpha / n_l as f64 * draws.iter().filter(|d| d.s).map(|d| ind(!g(d)) - ind(g(d))).sum::<f64>()
            };
            labeled + draws.iter().map(|d| ind(g(d))).sum::<f64>() / nf
        }
        LossKind::Nontraditional => draws.iter().map(|d| ind(g(d) != d.s)).sum::<f64>() / nf,
        LossKind::Standard => draws.iter().map(|d| ind(g(d) != d.y)).sum::<f64>() / nf,
    }
}

fn random_draws(
    rng: &mut ChaCha8Rng,
    n: usize,
    e_m: f64,
    value: impl Fn(&mut ChaCha8Rng) -> (usize, f64),
) -> Vec<Draw> {
    (0..n)
        .map(|_| {
            let (at, x) = value(rng);
            let y = rng.random_bool(0.5);
            let e = rng.random_range(e_m..=1.0);
            let s = y && rng.random_bool(e);
            Draw { at, x, s, y, e }
        })
        .collect()
}

fn to_sample(draws: &[Draw], xs: impl Fn(&Draw) -> (Covariate<f64>, Option<usize>), e_m: f64) -> PUSample<f64> {
    let obs = draws
        .iter()
        .map(|d| {
            let (x, hint) = xs(d);
            let mut o = PUObservation::new(x, d.s, Some(d.e), d.y).unwrap();
            o.support_index = hint;
            o
        })
        .collect();
    PUSample::new(obs, e_m).unwrap()
}

fn random_loss(rng: &mut ChaCha8Rng, e_m: f64) -> (LossKind, f64, Loss<f64>) {
    let kind = LossKind::ALL[rng.random_range(0..LossKind::ALL.len())];
    let alpha = rng.random_range(0.05..=1.0);
    (kind, alpha, Loss::new(kind).with_alpha(alpha).with_e_m(e_m))
}

fn all_masks(k: usize) -> Vec<Vec<bool>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                [false, true].into_iter().map(move |b| {
                    let mut next = prefix.clone();
                    next.push(b);
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn erm_finite_matches_brute_force_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE4A1);
    let tol = TIE_TOLERANCE;
    for case in 0..1000 {
        let k = rng.random_range(1..=7usize);
        let dim = rng.random_range(1..=2usize);
        let points: Vec<Covariate<f64>> = (0..k)
            .map(|j| {
                let mut c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                c[0] += 3.0 * j as f64;
                Covariate::new(c).unwrap()
            })
            .collect();
        let points: Arc<[Covariate<f64>]> = points.into();
        let every = all_masks(k);
        let (class, mut members) = if rng.random_bool(0.5) {
            (HypothesisClass::all_labelings(points.clone()).unwrap(), every)
        } else {
            let m = rng.random_range(1..=every.len());
            let chosen: Vec<Vec<bool>> = (0..m).map(|_| every[rng.random_range(0..every.len())].clone()).collect();
            (HypothesisClass::finite(points.clone(), chosen.clone()).unwrap(), chosen)
        };
        members.sort();
        members.dedup();

        let e_m = rng.random_range(0.1..=1.0);
        let n = rng.random_range(0..=40usize);
        let draws = random_draws(&mut rng, n, e_m, |r| (r.random_range(0..k), 0.0));
        let use_hint = rng.random_bool(0.5);
        let sample = to_sample(&draws, |d| (points[d.at].clone(), use_hint.then_some(d.at)), e_m);
        let (kind, alpha, loss) = random_loss(&mut rng, e_m);

        let risks: Vec<f64> = members.iter().map(|m| oracle_risk(kind, &draws, |d| m[d.at], alpha, e_m)).collect();
        let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
        let first = risks.iter().position(|&r| r <= min + tol).unwrap();
        let ties = risks.iter().filter(|&&r| r <= min + tol).count() as u64;

        let got = erm_finite(&class, &sample, &loss).unwrap();
        assert!((got.min_emp_risk - min).abs() < 1e-9, "case {case}: {} vs {min}", got.min_emp_risk);
        assert_eq!(got.minimizer, Hypothesis::table(points.clone(), members[first].clone()).unwrap(), "case {case}");
        assert_eq!(got.num_ties, ties, "case {case}");
    }
}

#[test]
fn erm_stump_matches_naive_scan_on_200_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57A4);
    let tol = TIE_TOLERANCE;
    for case in 0..200 {
        let n = rng.random_range(1..=30usize);
        // Coarse values on half the cases so that duplicates occur.
        let coarse = rng.random_bool(0.5);
        let e_m = rng.random_range(0.1..=1.0);
        let draws = random_draws(&mut rng, n, e_m, |r| {
            let x = if coarse { r.random_range(0..6) as f64 / 2.0 } else { r.random_range(-5.0..5.0) };
            (0, x)
        });
        let sample = to_sample(&draws, |d| (Covariate::scalar(d.x).unwrap(), None), e_m);
        let (kind, alpha, loss) = random_loss(&mut rng, e_m);

        // Thresholds at each distinct value and above the maximum give every
        // split of the sorted sample; O(n) candidates, each evaluated in O(n).
        let mut values: Vec<f64> = draws.iter().map(|d| d.x).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut thresholds = values.clone();
        thresholds.push(values[values.len() - 1] + 1.0);
        let mut scan = Vec::new();
        for &t in &thresholds {
            scan.push((t, Polarity::GreaterEq, oracle_risk(kind, &draws, |d| d.x >= t, alpha, e_m)));
            scan.push((t, Polarity::Less, oracle_risk(kind, &draws, |d| d.x < t, alpha, e_m)));
        }
        let min = scan.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let best = scan.iter().find(|c| c.2 <= min + tol).unwrap();
        let ties = scan.iter().filter(|c| c.2 <= min + tol).count() as u64;

        let got = erm_stump(&sample, &loss).unwrap();
        assert!((got.min_emp_risk - min).abs() < 1e-9, "case {case}: {} vs {min}", got.min_emp_risk);
        assert_eq!(got.num_ties, ties, "case {case}");
        let stump = *got.minimizer.as_stump().expect("stump");
        assert_eq!(stump.polarity, best.1, "case {case}");
        for d in &draws {
            let naive = match best.1 {
                Polarity::GreaterEq => d.x >= best.0,
                Polarity::Less => d.x < best.0,
            };
            assert_eq!(stump.predict_value(d.x), naive, "case {case} at x = {}", d.x);
        }
        let refit = oracle_risk(kind, &draws, |d| stump.predict_value(d.x), alpha, e_m);
        assert!((refit - min).abs() < 1e-9, "case {case}");
    }
}

#[test]
fn empty_sample_selects_first_labeling() {
    let points: Arc<[Covariate<f64>]> = vec![Covariate::scalar(0.0).unwrap(), Covariate::scalar(1.0).unwrap()].into();
    let class = HypothesisClass::all_labelings(points.clone()).unwrap();
    let sample = PUSample::new(Vec::new(), 0.5).unwrap();
    let got = erm_finite(&class, &sample, &Loss::sar()).unwrap();
    assert_eq!(got.minimizer, Hypothesis::table(points, vec![false, false]).unwrap());
    assert_eq!(got.min_emp_risk, 0.0);
    assert_eq!(got.num_ties, 4);
}

#[test]
fn separable_fully_labeled_sample_gives_zero_risk_stump() {
    let draws: Vec<Draw> = (0..20)
        .map(|i| {
            let x = i as f64 / 10.0;
            Draw { at: 0, x, s: x >= 1.0, y: x >= 1.0, e: 1.0 }
        })
        .collect();
    let sample = to_sample(&draws, |d| (Covariate::scalar(d.x).unwrap(), None), 1.0);
    let got = erm_stump(&sample, &Loss::sar()).unwrap();
    assert_eq!(got.min_emp_risk, 0.0);
    let s = got.minimizer.as_stump().unwrap();
    assert_eq!(s.polarity, Polarity::GreaterEq);
    assert!(s.threshold > 0.9 && s.threshold <= 1.0);
}
