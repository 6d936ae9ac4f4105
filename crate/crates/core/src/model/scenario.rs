use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::hypothesis::{Hypothesis, Polarity};
use super::sample::{check_propensity, Covariate, PUObservation, PUSample};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Slack allowed when certifying a declared margin: `eta` itself is rounded.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DiscreteAssouad,
    DiscreteGeneral,
    ContinuousMargin,
}

/// Finite support with point masses, regression function and propensity per point.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSupport<T> {
    points: Arc<[Covariate<T>]>,
    probs: Vec<T>,
    eta: Vec<T>,
    propensity: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Scalar> DiscreteSupport<T> {
    fn new(points: Vec<Covariate<T>>, probs: Vec<T>, eta: Vec<T>, propensity: Vec<T>) -> Result<Self> {
        let len = points.len();
        if len == 0 {
            return Err(Error::param("points", "support must be non-empty"));
        }
        for (name, v) in [("probs", &probs), ("eta", &eta), ("e", &propensity)] {
            if v.len() != len {
                return Err(Error::param(name, format!("expected {len} entries, found {}", v.len())));
            }
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::param("points", "support points must share one dimension"));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::param("probs", format!("entry {i} = {p} outside [0, 1]")));
            }
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - T::one()).abs() > T::of(1e-9) {
            return Err(Error::param("probs", format!("point masses sum to {total}, not 1")));
        }
        for (i, &h) in eta.iter().enumerate() {
            if !(h >= T::zero() && h <= T::one()) {
                return Err(Error::param("eta", format!("entry {i} = {h} outside [0, 1]")));
            }
        }
        for &e in &propensity {
            check_propensity(e)?;
        }

        let mut cumulative = Vec::with_capacity(len);
        let mut acc = 0.0;
        for p in &probs {
            acc += p.as_f64();
            cumulative.push(acc);
        }
        // Guard against rounding so the categorical draw always lands on a
        // point with positive mass.
        if let Some(last) = probs.iter().rposition(|&p| p > T::zero()) {
            for c in &mut cumulative[last..] {
                *c = f64::INFINITY;
            }
        }
        Ok(Self { points: points.into(), probs, eta, propensity, cumulative })
    }

    pub fn points(&self) -> &Arc<[Covariate<T>]> {
        &self.points
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn eta(&self) -> &[T] {
        &self.eta
    }

    pub fn propensity(&self) -> &[T] {
        &self.propensity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, x: &Covariate<T>) -> Option<usize> {
        self.points.iter().position(|p| p == x)
    }

    #[inline]
    fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.points.len() - 1)
    }
}

/// Uniform marginal on `[0, 1)` with piecewise-constant `eta` and propensity.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseSupport<T> {
    breaks: Vec<T>,
    eta: Vec<T>,
    propensity: Vec<T>,
}

impl<T: Scalar> PiecewiseSupport<T> {
    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn eta(&self) -> &[T] {
        &self.eta
    }

    pub fn propensity(&self) -> &[T] {
        &self.propensity
    }

    pub fn cells(&self) -> usize {
        self.eta.len()
    }

    pub fn cell_of(&self, x: T) -> Option<usize> {
        if x < self.breaks[0] || x >= self.breaks[self.breaks.len() - 1] {
            return None;
        }
        Some(self.breaks.partition_point(|&b| b <= x) - 1)
    }

    fn cell_bounds(&self, k: usize) -> (T, T) {
        (self.breaks[k], self.breaks[k + 1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Support<T> {
    Discrete(DiscreteSupport<T>),
    Piecewise(PiecewiseSupport<T>),
}

/// Parameters of a member `P_b` of the Assouad family.
#[derive(Clone, Debug, PartialEq)]
pub struct AssouadParams<T> {
    pub v: usize,
    pub p: T,
    pub h: T,
    pub b: Vec<bool>,
    /// Propensity at `x_1..x_V`; the last entry belongs to the class-0 point.
    pub e_values: Vec<T>,
}

/// Fully specified joint law of `(X, Y, S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    kind: ScenarioKind,
    support: Support<T>,
    assouad: Option<AssouadParams<T>>,
    alpha: T,
    margin_h: T,
    e_m: T,
}

impl<T: Scalar> Scenario<T> {
    /// Member `P_b` of the Assouad family on the standard basis of `R^V`.
    ///
    /// `e_values` has length `V - 1` (the class-0 point `x_V` then receives the
    /// smallest of them) or `V`.
    pub fn assouad(v: usize, p: T, h: T, b: Vec<bool>, e_values: Vec<T>) -> Result<Self> {
        if v < 2 {
            return Err(Error::param("V", format!("need V >= 2, got {v}")));
        }
        if b.len() != v - 1 {
            return Err(Error::param("b", format!("expected {} bits, found {}", v - 1, b.len())));
        }
        let p_max = T::one() / T::of_usize(v - 1);
        if !(p > T::zero() && p <= p_max * (T::one() + T::epsilon())) {
            return Err(Error::param("p", format!("{p} outside (0, 1/(V-1)]")));
        }
        if !(h >= T::zero() && h <= T::one()) {
            return Err(Error::param("h", format!("{h} outside [0, 1]")));
        }
        let mut e_values = e_values;
        if e_values.len() + 1 == v {
            let floor = e_values.iter().copied().fold(T::one(), T::min);
            e_values.push(floor);
        }
        if e_values.len() != v {
            return Err(Error::param("e", format!("expected {} or {v} propensities, found {}", v - 1, e_values.len())));
        }

        let points: Vec<Covariate<T>> = (0..v).map(|i| Covariate::basis(v, i)).collect();
        let last = (T::one() - p * T::of_usize(v - 1)).max(T::zero());
        let probs: Vec<T> = (0..v).map(|i| if i + 1 < v { p } else { last }).collect();
        let eta: Vec<T> = (0..v)
            .map(|i| {
                if i + 1 < v {
                    let sign = if b[i] { T::one() } else { -T::one() };
                    T::half() * (T::one() + sign * h)
                } else {
                    T::zero()
                }
            })
            .collect();
        let support = DiscreteSupport::new(points, probs, eta, e_values.clone())?;
        let mut scenario = Self::from_discrete(ScenarioKind::DiscreteAssouad, support, h)?;
        scenario.assouad = Some(AssouadParams { v, p, h, b, e_values });
        Ok(scenario)
    }

    /// Arbitrary finite support with a declared (and certified) margin.
    pub fn discrete(points: Vec<Vec<T>>, probs: Vec<T>, eta: Vec<T>, propensity: Vec<T>, margin_h: T) -> Result<Self> {
        let points = points.into_iter().map(Covariate::new).collect::<Result<Vec<_>>>()?;
        let support = DiscreteSupport::new(points, probs, eta, propensity)?;
        Self::from_discrete(ScenarioKind::DiscreteGeneral, support, margin_h)
    }

    /// One-dimensional uniform covariate with `eta` in `{(1-h)/2, (1+h)/2}` per cell.
    pub fn continuous_margin(breaks: Vec<T>, eta: Vec<T>, propensity: Vec<T>, h: T) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::param("breaks", "need at least one cell"));
        }
        if breaks[0] != T::zero() || breaks[breaks.len() - 1] != T::one() {
            return Err(Error::param("breaks", "cells must cover [0, 1]"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("breaks", "must be strictly increasing"));
        }
        let cells = breaks.len() - 1;
        for (name, v) in [("eta", &eta), ("e", &propensity)] {
            if v.len() != cells {
                return Err(Error::param(name, format!("expected {cells} entries, found {}", v.len())));
            }
        }
        if !(h >= T::zero() && h <= T::one()) {
            return Err(Error::param("h", format!("{h} outside [0, 1]")));
        }
        let lo = T::half() * (T::one() - h);
        let hi = T::half() * (T::one() + h);
        let tol = T::of(MARGIN_TOLERANCE);
        for (k, &value) in eta.iter().enumerate() {
            if (value - lo).abs() > tol && (value - hi).abs() > tol {
                return Err(Error::param("eta", format!("cell {k} has eta = {value}, expected (1 -/+ h)/2")));
            }
        }
        for &e in &propensity {
            check_propensity(e)?;
        }
        let alpha = compensated_sum((0..cells).map(|k| (breaks[k + 1] - breaks[k]) * eta[k]));
        let e_m = propensity.iter().copied().fold(T::one(), T::min);
        Ok(Self {
            kind: ScenarioKind::ContinuousMargin,
            support: Support::Piecewise(PiecewiseSupport { breaks, eta, propensity }),
            assouad: None,
            alpha,
            margin_h: h,
            e_m,
        })
    }

    /// Single threshold at `t`: class 1 w.p. `(1+h)/2` above it, `(1-h)/2` below.
    pub fn threshold_1d(t: T, h: T, e_below: T, e_above: T) -> Result<Self> {
        let lo = T::half() * (T::one() - h);
        let hi = T::half() * (T::one() + h);
        Self::continuous_margin(vec![T::zero(), t, T::one()], vec![lo, hi], vec![e_below, e_above], h)
    }

    fn from_discrete(kind: ScenarioKind, support: DiscreteSupport<T>, margin_h: T) -> Result<Self> {
        if !(margin_h >= T::zero() && margin_h <= T::one()) {
            return Err(Error::param("margin_h", format!("{margin_h} outside [0, 1]")));
        }
        if margin_h > T::zero() {
            let tol = T::of(MARGIN_TOLERANCE);
            for (i, &h) in support.eta.iter().enumerate() {
                let m = (T::two() * h - T::one()).abs();
                if m + tol < margin_h {
                    return Err(Error::param(
                        "margin_h",
                        format!("point {i} has |2 eta - 1| = {m} below declared margin {margin_h}"),
                    ));
                }
            }
        }
        let alpha = compensated_sum(support.probs.iter().zip(&support.eta).map(|(&p, &h)| p * h));
        let e_m = support.propensity.iter().copied().fold(T::one(), T::min);
        Ok(Self { kind, support: Support::Discrete(support), assouad: None, alpha, margin_h, e_m })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn support(&self) -> &Support<T> {
        &self.support
    }

    pub fn discrete_support(&self) -> Option<&DiscreteSupport<T>> {
        match &self.support {
            Support::Discrete(d) => Some(d),
            Support::Piecewise(_) => None,
        }
    }

    pub fn piecewise_support(&self) -> Option<&PiecewiseSupport<T>> {
        match &self.support {
            Support::Piecewise(p) => Some(p),
            Support::Discrete(_) => None,
        }
    }

    pub fn assouad_params(&self) -> Option<&AssouadParams<T>> {
        self.assouad.as_ref()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.support, Support::Discrete(_))
    }

    /// Class prior `alpha = E[eta(X)]`.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Certified Massart margin, 0 if none.
    pub fn margin_h(&self) -> T {
        self.margin_h
    }

    /// Smallest propensity over the support.
    pub fn e_m(&self) -> T {
        self.e_m
    }

    pub fn dim(&self) -> usize {
        match &self.support {
            Support::Discrete(d) => d.points[0].dim(),
            Support::Piecewise(_) => 1,
        }
    }

    /// Constant propensity over the support.
    pub fn is_scar(&self) -> bool {
        let e = match &self.support {
            Support::Discrete(d) => &d.propensity,
            Support::Piecewise(p) => &p.propensity,
        };
        e.iter().all(|&v| v == e[0])
    }

    pub fn eta_at(&self, x: &Covariate<T>) -> Option<T> {
        match &self.support {
            Support::Discrete(d) => d.index_of(x).map(|i| d.eta[i]),
            Support::Piecewise(p) => p.cell_of(x.coords()[0]).map(|k| p.eta[k]),
        }
    }

    pub fn propensity_at(&self, x: &Covariate<T>) -> Option<T> {
        match &self.support {
            Support::Discrete(d) => d.index_of(x).map(|i| d.propensity[i]),
            Support::Piecewise(p) => p.cell_of(x.coords()[0]).map(|k| p.propensity[k]),
        }
    }

    /// `P(S = 1) = E[eta(X) e(X)]`.
    pub fn prob_labeled(&self) -> T {
        match &self.support {
            Support::Discrete(d) => compensated_sum((0..d.len()).map(|i| d.probs[i] * d.eta[i] * d.propensity[i])),
            Support::Piecewise(p) => compensated_sum((0..p.cells()).map(|k| {
                let (a, b) = p.cell_bounds(k);
                (b - a) * p.eta[k] * p.propensity[k]
            })),
        }
    }

    /// `E[N_L]`: `n alpha e_m` under SCAR, `n E[eta(X) e(X)]` in general.
    pub fn expected_labeled_count(&self, n: usize) -> T {
        let n = T::of_usize(n);
        if self.is_scar() {
            n * self.alpha * self.e_m
        } else {
            n * self.prob_labeled()
        }
    }

    /// Bayes classifier `g*(x) = 1[eta(x) >= 1/2]`.
    pub fn bayes_classifier(&self) -> Result<Hypothesis<T>> {
        match &self.support {
            Support::Discrete(d) => {
                let labels = d.eta.iter().map(|&h| h >= T::half()).collect();
                Hypothesis::table(d.points.clone(), labels)
            }
            Support::Piecewise(p) => {
                let labels: Vec<bool> = p.eta.iter().map(|&h| h >= T::half()).collect();
                piecewise_as_stump(&p.breaks, &labels).ok_or_else(|| {
                    Error::NotRepresentable("Bayes classifier of this piecewise scenario is not a stump".into())
                })
            }
        }
    }

    /// Bayes classifier for the observed label, `1[e(x) eta(x) >= 1/2]`.
    pub fn nontraditional_bayes_classifier(&self) -> Result<Hypothesis<T>> {
        match &self.support {
            Support::Discrete(d) => {
                let labels = (0..d.len()).map(|i| d.eta[i] * d.propensity[i] >= T::half()).collect();
                Hypothesis::table(d.points.clone(), labels)
            }
            Support::Piecewise(p) => {
                let labels: Vec<bool> = (0..p.cells()).map(|k| p.eta[k] * p.propensity[k] >= T::half()).collect();
                piecewise_as_stump(&p.breaks, &labels)
                    .ok_or_else(|| Error::NotRepresentable("labeled-class Bayes rule is not a stump".into()))
            }
        }
    }

    /// Integrates `f(mass, eta, e, g)` over the support, where `mass` is the
    /// probability of the region on which `g` takes value `g`.
    fn integrate(&self, g: &Hypothesis<T>, f: impl Fn(T, T, T, bool) -> T) -> Result<T> {
        match &self.support {
            Support::Discrete(d) => Ok(compensated_sum((0..d.len()).map(|i| {
                let gi = g.predict(&d.points[i], Some(i));
                f(d.probs[i], d.eta[i], d.propensity[i], gi)
            }))),
            Support::Piecewise(p) => {
                let stump = match g {
                    Hypothesis::Stump(s) if s.feature == 0 => s,
                    _ => {
                        return Err(Error::NotRepresentable(
                            "only stumps on feature 0 have exact risk on a continuous scenario".into(),
                        ))
                    }
                };
                let mut terms = Vec::with_capacity(2 * p.cells());
                for k in 0..p.cells() {
                    let (a, b) = p.cell_bounds(k);
                    let len = b - a;
                    let on = positive_measure(stump.threshold, stump.polarity, a, b);
                    terms.push(f(on, p.eta[k], p.propensity[k], true));
                    terms.push(f(len - on, p.eta[k], p.propensity[k], false));
                }
                Ok(compensated_sum(terms))
            }
        }
    }

    /// Misclassification risk `R(g) = P(g(X) != Y)`.
    pub fn true_risk(&self, g: &Hypothesis<T>) -> Result<T> {
        self.integrate(g, |mass, eta, _, gi| if gi { mass * (T::one() - eta) } else { mass * eta })
    }

    /// Excess risk `R(g) - R(g*)`.
    pub fn excess_risk(&self, g: &Hypothesis<T>) -> Result<T> {
        let g_star = self.bayes_classifier()?;
        Ok(self.true_risk(g)? - self.true_risk(&g_star)?)
    }

    /// Excess risk through `E[|g - g*|^2 |2 eta - 1|]`, without forming `g*`.
    pub fn excess_risk_by_margin(&self, g: &Hypothesis<T>) -> Result<T> {
        self.integrate(
            g,
            |mass, eta, _, gi| {
                if gi != (eta >= T::half()) {
                    mass * (T::two() * eta - T::one()).abs()
                } else {
                    T::zero()
                }
            },
        )
    }

    /// Nontraditional risk `P(g(X) != S)`.
    pub fn nontraditional_risk(&self, g: &Hypothesis<T>) -> Result<T> {
        self.integrate(g, |mass, eta, e, gi| {
            let eta_s = eta * e;
            if gi {
                mass * (T::one() - eta_s)
            } else {
                mass * eta_s
            }
        })
    }

    /// `E[|g - g'|^2]` under the covariate marginal (discrete supports only).
    pub fn disagreement(&self, g: &Hypothesis<T>, other: &Hypothesis<T>) -> Result<T> {
        let d = self
            .discrete_support()
            .ok_or_else(|| Error::NotRepresentable("disagreement needs a discrete support".into()))?;
        Ok(compensated_sum((0..d.len()).map(|i| {
            let x = &d.points[i];
            if g.predict(x, Some(i)) != other.predict(x, Some(i)) {
                d.probs[i]
            } else {
                T::zero()
            }
        })))
    }

    /// Draws `n` i.i.d. observations: `x ~ P_X`, `y ~ Bern(eta(x))`, `s = y * Bern(e(x))`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PUSample<T> {
        let mut observations = Vec::with_capacity(n);
        match &self.support {
            Support::Discrete(d) => {
                for _ in 0..n {
                    let i = d.draw_index(rng);
                    let (y, s) = draw_labels(rng, d.eta[i], d.propensity[i]);
                    observations.push(PUObservation {
                        x: d.points[i].clone(),
                        support_index: Some(i),
                        s,
                        e_at_x: Some(d.propensity[i]),
                        y_hidden: y,
                    });
                }
            }
            Support::Piecewise(p) => {
                for _ in 0..n {
                    let x = T::of(rng.random::<f64>());
                    let k = p.cell_of(x).unwrap_or(p.cells() - 1);
                    let (y, s) = draw_labels(rng, p.eta[k], p.propensity[k]);
                    observations.push(PUObservation {
                        x: Covariate(vec![x].into()),
                        support_index: None,
                        s,
                        e_at_x: Some(p.propensity[k]),
                        y_hidden: y,
                    });
                }
            }
        }
        PUSample::from_parts(observations, self.e_m)
    }
}

#[inline]
fn draw_labels<T: Scalar, R: Rng + ?Sized>(rng: &mut R, eta: T, e: T) -> (bool, bool) {
    let y = rng.random::<f64>() < eta.as_f64();
    let selected = rng.random::<f64>() < e.as_f64();
    (y, y && selected)
}

/// Length of `{x in [a, b) : stump(x) = 1}`.
fn positive_measure<T: Scalar>(t: T, polarity: Polarity, a: T, b: T) -> T {
    let clamp = t.max(a).min(b);
    match polarity {
        Polarity::GreaterEq => b - clamp,
        Polarity::Less => clamp - a,
    }
}

/// Stump equal to the cell labeling, when the positive cells form a prefix or a suffix.
fn piecewise_as_stump<T: Scalar>(breaks: &[T], labels: &[bool]) -> Option<Hypothesis<T>> {
    let cells = labels.len();
    let first_pos = labels.iter().position(|&l| l);
    let Some(first_pos) = first_pos else {
        return Some(Hypothesis::stump(0, breaks[cells], Polarity::GreaterEq));
    };
    if labels[first_pos..].iter().all(|&l| l) {
        return Some(Hypothesis::stump(0, breaks[first_pos], Polarity::GreaterEq));
    }
    let first_neg = labels.iter().position(|&l| !l)?;
    if labels[first_neg..].iter().all(|&l| !l) {
        return Some(Hypothesis::stump(0, breaks[first_neg], Polarity::Less));
    }
    None
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ScenarioRecord<T> {
    kind: ScenarioKind,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    margin_h: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<Covariate<T>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    breaks: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e: Option<Vec<T>>,
}

fn require<V>(value: Option<V>, field: &str) -> Result<V> {
    value.ok_or_else(|| Error::param(field, "missing"))
}

fn check_table<T: Scalar>(field: &str, given: Option<&Vec<T>>, derived: &[T]) -> Result<()> {
    if let Some(given) = given {
        let matches =
            given.len() == derived.len() && given.iter().zip(derived).all(|(&a, &b)| (a - b).abs() <= T::of(1e-12));
        if !matches {
            return Err(Error::param(field, "inconsistent with the Assouad parameters"));
        }
    }
    Ok(())
}

impl<T: Scalar> TryFrom<ScenarioRecord<T>> for Scenario<T> {
    type Error = Error;

    fn try_from(r: ScenarioRecord<T>) -> Result<Self> {
        match r.kind {
            ScenarioKind::DiscreteAssouad => {
                let v = require(r.v, "V")?;
                let b = require(r.b, "b")?;
                if b.iter().any(|&bit| bit > 1) {
                    return Err(Error::param("b", "bits must be 0 or 1"));
                }
                let scenario = Scenario::assouad(
                    v,
                    require(r.p, "p")?,
                    require(r.h, "h")?,
                    b.into_iter().map(|bit| bit == 1).collect(),
                    require(r.e, "e")?,
                )?;
                let d = scenario.discrete_support().expect("assouad scenarios are discrete");
                check_table("probs", r.probs.as_ref(), &d.probs)?;
                check_table("eta", r.eta.as_ref(), &d.eta)?;
                if let Some(points) = &r.points {
                    if points.as_slice() != &d.points[..] {
                        return Err(Error::param("points", "inconsistent with the Assouad parameters"));
                    }
                }
                Ok(scenario)
            }
            ScenarioKind::DiscreteGeneral => {
                let points = require(r.points, "points")?;
                let support = DiscreteSupport::new(
                    points,
                    require(r.probs, "probs")?,
                    require(r.eta, "eta")?,
                    require(r.e, "e")?,
                )?;
                Scenario::from_discrete(ScenarioKind::DiscreteGeneral, support, r.margin_h.unwrap_or_else(T::zero))
            }
            ScenarioKind::ContinuousMargin => Scenario::continuous_margin(
                require(r.breaks, "breaks")?,
                require(r.eta, "eta")?,
                require(r.e, "e")?,
                require(r.h.or(r.margin_h), "h")?,
            ),
        }
    }
}

impl<T: Scalar> Serialize for Scenario<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut record = ScenarioRecord {
            kind: self.kind,
            v: None,
            p: None,
            h: None,
            b: None,
            margin_h: None,
            points: None,
            probs: None,
            breaks: None,
            eta: None,
            e: None,
        };
        match &self.support {
            Support::Discrete(d) => {
                record.points = Some(d.points.to_vec());
                record.probs = Some(d.probs.clone());
                record.eta = Some(d.eta.clone());
                record.e = Some(d.propensity.clone());
            }
            Support::Piecewise(p) => {
                record.breaks = Some(p.breaks.clone());
                record.eta = Some(p.eta.clone());
                record.e = Some(p.propensity.clone());
            }
        }
        match (&self.assouad, self.kind) {
            (Some(a), _) => {
                record.v = Some(a.v);
                record.p = Some(a.p);
                record.h = Some(a.h);
                record.b = Some(a.b.iter().map(|&bit| bit as u8).collect());
            }
            (None, ScenarioKind::ContinuousMargin) => record.h = Some(self.margin_h),
            (None, _) => record.margin_h = Some(self.margin_h),
        }
        record.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Scenario<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let record = ScenarioRecord::<T>::deserialize(deserializer)?;
        Scenario::try_from(record).map_err(serde::de::Error::custom)
    }
}
