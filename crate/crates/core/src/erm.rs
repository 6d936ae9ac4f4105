//! Exact empirical risk minimization over finite classes and 1-D stumps.
//!
//! The argmin is set-valued; we return the lexicographically smallest member
//! whose risk is within [`TIE_TOLERANCE`] of the minimum. For table classes
//! that is the smallest label vector (`0 < 1`, point 0 first); for stumps it
//! is the smallest threshold, then `GreaterEq` before `Less`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::losses::{Cost, Loss, LossKind};
use crate::model::{Covariate, Hypothesis, HypothesisClass, PUSample, Polarity, Scenario};
use crate::parallel::try_map_replicates;
use crate::scalar::{CompensatedSum, Scalar};

/// Largest class `erm_finite` will enumerate.
pub const ENUMERATION_GUARD: u128 = 1 << 20;

/// Two empirical risks closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ErmResult<T> {
    pub minimizer: Hypothesis<T>,
    pub min_emp_risk: T,
    /// Number of class members tied with the minimizer (at least 1).
    pub num_ties: u64,
    pub loss_kind: LossKind,
}

impl<T: Scalar> PartialEq for ErmResult<T> {
    fn eq(&self, other: &Self) -> bool {
        self.minimizer == other.minimizer
            && self.min_emp_risk == other.min_emp_risk
            && self.num_ties == other.num_ties
            && self.loss_kind == other.loss_kind
    }
}

impl<T: Scalar> Serialize for ErmResult<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ErmResult", 4)?;
        st.serialize_field("loss_kind", &self.loss_kind)?;
        st.serialize_field("min_emp_risk", &self.min_emp_risk)?;
        st.serialize_field("num_ties", &self.num_ties)?;
        st.serialize_field("hypothesis_encoding", &self.minimizer.encoding())?;
        st.end()
    }
}

/// Index of `x` among `points`, trying the sampler's hint first.
#[inline]
fn locate<T: Scalar>(points: &[Covariate<T>], x: &Covariate<T>, hint: Option<usize>) -> Option<usize> {
    if let Some(i) = hint {
        if let Some(p) = points.get(i) {
            if p.same_allocation(x) || p == x {
                return Some(i);
            }
        }
    }
    points.iter().position(|p| p == x)
}

/// Risk of the all-zero labeling and the per-point change from labeling each point 1.
fn per_point<T: Scalar>(points: &[Covariate<T>], sample: &PUSample<T>, costs: &[Cost<T>]) -> Result<(T, Vec<T>)> {
    let mut base = CompensatedSum::new();
    let mut delta = vec![CompensatedSum::new(); points.len()];
    for (index, (obs, c)) in sample.iter().zip(costs).enumerate() {
        let j = locate(points, &obs.x, obs.support_index).ok_or(Error::OffSupport { index })?;
        base.add(c.cost0);
        delta[j].add(c.delta());
    }
    Ok((base.value(), delta.into_iter().map(|d| d.value()).collect()))
}

fn check_guard<T: Scalar>(class: &HypothesisClass<T>) -> Result<()> {
    match class.size() {
        None => Err(Error::param("class", "erm_finite needs a finite class")),
        Some(size) if size > ENUMERATION_GUARD => Err(Error::EnumerationGuard { size, limit: ENUMERATION_GUARD }),
        Some(_) => Ok(()),
    }
}

/// Exact minimizer of the empirical risk over a finite table class.
pub fn erm_finite<T: Scalar>(class: &HypothesisClass<T>, sample: &PUSample<T>, loss: &Loss<T>) -> Result<ErmResult<T>> {
    check_guard(class)?;
    let points = class.points().expect("finite classes carry points");
    let costs = loss.costs(sample)?;
    let (base, delta) = per_point(points, sample, &costs)?;
    let tol = T::of(TIE_TOLERANCE);

    let (labels, risk, num_ties) = match class {
        HypothesisClass::AllLabelingsOfPoints { .. } => separable_minimum(base, &delta, tol),
        HypothesisClass::FiniteEnumeration { members, .. } => {
            let risks: Vec<T> = members
                .iter()
                .map(|m| {
                    let mut r = CompensatedSum::new();
                    r.add(base);
                    for (j, &on) in m.iter().enumerate() {
                        if on {
                            r.add(delta[j]);
                        }
                    }
                    r.value()
                })
                .collect();
            let min = risks.iter().copied().fold(T::infinity(), T::min);
            let best = risks.iter().position(|&r| r <= min + tol).expect("class is non-empty");
            let ties = risks.iter().filter(|&&r| r <= min + tol).count() as u64;
            (members[best].clone(), risks[best], ties)
        }
        HypothesisClass::Stumps1D => unreachable!("rejected by the guard"),
    };
    Ok(ErmResult {
        minimizer: Hypothesis::table(points.clone(), labels)?,
        min_emp_risk: risk,
        num_ties,
        loss_kind: loss.kind,
    })
}

/// Lexicographically smallest near-minimizer when the risk is `base + sum_{j on} delta_j`.
///
/// Each point that departs from its optimal label costs `|delta_j|`; walking
/// the points in order, a 0 is kept whenever the accumulated cost stays within
/// the tolerance. This is the same labeling a full enumeration would select.
fn separable_minimum<T: Scalar>(base: T, delta: &[T], tol: T) -> (Vec<bool>, T, u64) {
    let mut slack = tol;
    let mut labels = Vec::with_capacity(delta.len());
    let mut risk = CompensatedSum::new();
    risk.add(base);
    for &d in delta {
        let extra = (-d).max(T::zero());
        if extra <= slack {
            slack = slack - extra;
            labels.push(false);
        } else {
            labels.push(true);
            risk.add(d);
        }
    }
    // Ties: subsets of near-free points whose combined departure cost fits the tolerance.
    let near: Vec<T> = delta.iter().map(|d| d.abs()).filter(|&c| c <= tol).collect();
    let mut num_ties = 0u64;
    for mask in 0u64..(1u64 << near.len()) {
        let cost: T = near.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &c)| c).sum();
        if cost <= tol {
            num_ties += 1;
        }
    }
    (labels, risk.value(), num_ties)
}

/// Exact minimizer over `{1[x >= t], 1[x < t]}` on one-dimensional covariates.
///
/// Candidate thresholds sit below the smallest value, at midpoints between
/// consecutive distinct values, and above the largest value.
pub fn erm_stump<T: Scalar>(sample: &PUSample<T>, loss: &Loss<T>) -> Result<ErmResult<T>> {
    if let Some(o) = sample.iter().find(|o| o.x.dim() != 1) {
        return Err(Error::NotOneDimensional(o.x.dim()));
    }
    let costs = loss.costs(sample)?;
    if sample.is_empty() {
        return Ok(ErmResult {
            minimizer: Hypothesis::stump(0, T::zero(), Polarity::GreaterEq),
            min_emp_risk: T::zero(),
            num_ties: 2,
            loss_kind: loss.kind,
        });
    }

    let mut order: Vec<usize> = (0..sample.n()).collect();
    let obs = sample.observations();
    let x = |i: usize| obs[i].x.coords()[0];
    order.sort_by(|&a, &b| x(a).partial_cmp(&x(b)).expect("finite covariates"));

    let mut base = CompensatedSum::new();
    for c in &costs {
        base.add(c.cost0);
    }
    let base = base.value();

    // values[k] and prefix[k] = sum of deltas over the first k distinct values.
    let mut values: Vec<T> = Vec::new();
    let mut prefix = vec![T::zero()];
    let mut running = CompensatedSum::new();
    for &i in &order {
        if values.last() != Some(&x(i)) {
            if !values.is_empty() {
                prefix.push(running.value());
            }
            values.push(x(i));
        }
        running.add(costs[i].delta());
    }
    prefix.push(running.value());
    let total = running.value();
    let m = values.len();

    let threshold = |k: usize| -> T {
        if k == 0 {
            values[0] - T::one()
        } else if k == m {
            values[m - 1] + T::one()
        } else {
            let (a, b) = (values[k - 1], values[k]);
            let mid = (a + b) * T::half();
            if mid > a {
                mid
            } else {
                b
            }
        }
    };

    let tol = T::of(TIE_TOLERANCE);
    let candidates = (0..=m)
        .flat_map(|k| [(k, Polarity::GreaterEq, base + (total - prefix[k])), (k, Polarity::Less, base + prefix[k])]);
    let min = candidates.clone().map(|c| c.2).fold(T::infinity(), T::min);
    let mut chosen = None;
    let mut num_ties = 0u64;
    for c in candidates {
        if c.2 <= min + tol {
            num_ties += 1;
            chosen.get_or_insert(c);
        }
    }
    let (k, polarity, risk) = chosen.expect("at least two candidates");
    Ok(ErmResult {
        minimizer: Hypothesis::stump(0, threshold(k), polarity),
        min_emp_risk: risk,
        num_ties,
        loss_kind: loss.kind,
    })
}

/// Minimizer over any supported class.
pub fn erm<T: Scalar>(class: &HypothesisClass<T>, sample: &PUSample<T>, loss: &Loss<T>) -> Result<ErmResult<T>> {
    match class {
        HypothesisClass::Stumps1D => erm_stump(sample, loss),
        _ => erm_finite(class, sample, loss),
    }
}

/// The loss of kind `kind` with the side information the scenario provides.
pub fn loss_for<T: Scalar>(scenario: &Scenario<T>, kind: LossKind) -> Loss<T> {
    Loss::new(kind).with_alpha(scenario.alpha()).with_e_m(scenario.e_m())
}

/// Exact excess risk of the ERM for each of `replicates` independent samples.
pub fn excess_of_erm<T: Scalar>(
    scenario: &Scenario<T>,
    class: &HypothesisClass<T>,
    n: usize,
    loss_kind: LossKind,
    replicates: usize,
    seed: u64,
) -> Result<Vec<T>> {
    excess_of_erm_at(scenario, class, n, loss_kind, replicates, seed, 0)
}

/// [`excess_of_erm`] on the streams of grid point `grid_index`.
pub fn excess_of_erm_at<T: Scalar>(
    scenario: &Scenario<T>,
    class: &HypothesisClass<T>,
    n: usize,
    loss_kind: LossKind,
    replicates: usize,
    seed: u64,
    grid_index: u64,
) -> Result<Vec<T>> {
    let g_star = scenario.bayes_classifier()?;
    if !class.contains(&g_star) {
        return Err(Error::ApproximationErrorNonzero);
    }
    if let Some(size) = class.size() {
        if size > ENUMERATION_GUARD {
            return Err(Error::EnumerationGuard { size, limit: ENUMERATION_GUARD });
        }
    }
    let r_star = scenario.true_risk(&g_star)?;
    let loss = loss_for(scenario, loss_kind);
    try_map_replicates(seed, grid_index, replicates, |_, rng| {
        let sample = scenario.sample(n, rng);
        let fit = erm(class, &sample, &loss)?;
        Ok(scenario.true_risk(&fit.minimizer)? - r_star)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::emp_risk_sar;
    use crate::model::PUObservation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn points(v: usize) -> Arc<[Covariate<f64>]> {
        (0..v).map(|i| Covariate::basis(v, i)).collect::<Vec<_>>().into()
    }

    fn obs1(x: f64, s: bool, e: f64, y: bool) -> PUObservation<f64> {
        PUObservation::new(Covariate::scalar(x).unwrap(), s, Some(e), y).unwrap()
    }

    #[test]
    fn empty_sample_returns_first_member() {
        let class = HypothesisClass::all_labelings(points(3)).unwrap();
        let sample = PUSample::new(vec![], 0.5).unwrap();
        let fit = erm_finite(&class, &sample, &Loss::sar()).unwrap();
        assert_eq!(fit.minimizer.encoding(), "table:000");
        assert_eq!(fit.min_emp_risk, 0.0);
        assert_eq!(fit.num_ties, 8);
    }

    #[test]
    fn single_labeled_point_is_classified_positive() {
        let pts = points(3);
        let class = HypothesisClass::all_labelings(pts.clone()).unwrap();
        let o = PUObservation::new(pts[1].clone(), true, Some(1.0), true).unwrap();
        let sample = PUSample::new(vec![o.clone(), o], 1.0).unwrap();
        let fit = erm_finite(&class, &sample, &Loss::sar()).unwrap();
        assert_eq!(fit.minimizer.encoding(), "table:010");
        assert_eq!(fit.min_emp_risk, 0.0);
        assert_eq!(fit.num_ties, 4);
    }

    #[test]
    fn guard_and_support_errors() {
        let class = HypothesisClass::all_labelings(points(21)).unwrap();
        let sample = PUSample::new(vec![], 0.5).unwrap();
        assert!(matches!(erm_finite(&class, &sample, &Loss::sar()), Err(Error::EnumerationGuard { .. })));

        let class = HypothesisClass::all_labelings(points(2)).unwrap();
        let stray = PUSample::new(vec![obs1(0.3, false, 0.5, false)], 0.5).unwrap();
        assert_eq!(erm_finite(&class, &stray, &Loss::sar()), Err(Error::OffSupport { index: 0 }));
    }

    #[test]
    fn separable_and_enumerated_paths_agree() {
        let scenario =
            Scenario::<f64>::assouad(6, 0.15, 0.2, vec![true, false, true, true, false], vec![0.3, 0.9, 0.5, 0.6, 0.4])
                .unwrap();
        let pts = scenario.discrete_support().unwrap().points().clone();
        let all = HypothesisClass::all_labelings(pts.clone()).unwrap();
        let listed = HypothesisClass::finite(pts, all.labelings().unwrap().collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let sample = scenario.sample(rng.random_range(1..60), &mut rng);
            let a = erm_finite(&all, &sample, &Loss::sar()).unwrap();
            let b = erm_finite(&listed, &sample, &Loss::sar()).unwrap();
            assert_eq!(a.minimizer, b.minimizer);
            assert_eq!(a.num_ties, b.num_ties);
            assert!((a.min_emp_risk - b.min_emp_risk).abs() < 1e-12);
            assert!((a.min_emp_risk - emp_risk_sar(&sample, &a.minimizer).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn stump_on_separable_sample() {
        let sample = PUSample::new(
            vec![
                obs1(0.1, false, 1.0, false),
                obs1(0.2, false, 1.0, false),
                obs1(0.7, true, 1.0, true),
                obs1(0.9, true, 1.0, true),
            ],
            1.0,
        )
        .unwrap();
        let fit = erm_stump(&sample, &Loss::sar()).unwrap();
        assert_eq!(fit.min_emp_risk, 0.0);
        let s = fit.minimizer.as_stump().unwrap();
        assert_eq!(s.polarity, Polarity::GreaterEq);
        assert!((s.threshold - 0.45).abs() < 1e-15);
        assert_eq!(fit.num_ties, 1);
    }

    #[test]
    fn stump_single_point() {
        let sample = PUSample::new(vec![obs1(0.5, true, 0.5, true)], 0.5).unwrap();
        let fit = erm_stump(&sample, &Loss::sar()).unwrap();
        assert_eq!(fit.min_emp_risk, -1.0);
        assert_eq!(fit.minimizer, Hypothesis::stump(0, -0.5, Polarity::GreaterEq));
        assert_eq!(fit.num_ties, 2);
    }

    #[test]
    fn stump_rejects_multivariate_input() {
        let x = Covariate::new(vec![0.1, 0.2]).unwrap();
        let sample = PUSample::new(vec![PUObservation::new(x, false, Some(0.5), false).unwrap()], 0.5).unwrap();
        assert_eq!(erm_stump(&sample, &Loss::sar()), Err(Error::NotOneDimensional(2)));
    }

    #[test]
    fn json_shape() {
        let sample = PUSample::new(vec![obs1(0.5, true, 0.5, true)], 0.5).unwrap();
        let fit = erm_stump(&sample, &Loss::sar()).unwrap();
        let json = serde_json::to_value(&fit).unwrap();
        assert_eq!(json["loss_kind"], "sar");
        assert_eq!(json["min_emp_risk"], -1.0);
        assert_eq!(json["num_ties"], 2);
        assert_eq!(json["hypothesis_encoding"], "stump:0:-0.5:ge");
    }

    #[test]
    fn full_labeling_makes_sar_and_standard_coincide() {
        let scenario = Scenario::<f64>::assouad(4, 0.3, 0.4, vec![true, false, true], vec![1.0; 3]).unwrap();
        let class = HypothesisClass::all_labelings(scenario.discrete_support().unwrap().points().clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sample = scenario.sample(40, &mut rng);
            let sar = erm_finite(&class, &sample, &Loss::sar()).unwrap();
            let std = erm_finite(&class, &sample, &Loss::new(LossKind::Standard)).unwrap();
            assert_eq!(sar.minimizer, std.minimizer);
        }
    }

    #[test]
    fn excess_of_erm_contract() {
        let scenario = Scenario::<f64>::assouad(3, 0.3, 1.0, vec![true, false], vec![1.0, 1.0]).unwrap();
        let class = HypothesisClass::all_labelings(scenario.discrete_support().unwrap().points().clone()).unwrap();
        let a = excess_of_erm(&scenario, &class, 200, LossKind::Sar, 50, 1).unwrap();
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|&x| x == 0.0));
        let noisy = Scenario::<f64>::assouad(3, 0.3, 0.2, vec![true, false], vec![0.5, 0.5]).unwrap();
        let b1 = excess_of_erm(&noisy, &class, 30, LossKind::Sar, 40, 5).unwrap();
        let b2 = excess_of_erm(&noisy, &class, 30, LossKind::Sar, 40, 5).unwrap();
        assert_eq!(b1, b2);
        assert!(b1.iter().all(|&x| x >= 0.0));

        let listed = HypothesisClass::finite(class.points().unwrap().clone(), vec![vec![false, false, false]]).unwrap();
        assert_eq!(excess_of_erm(&noisy, &listed, 30, LossKind::Sar, 4, 5), Err(Error::ApproximationErrorNonzero));
    }
}
