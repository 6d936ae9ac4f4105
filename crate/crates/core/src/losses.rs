//! Per-observation losses and the empirical risk estimators built from them.
//!
//! Every estimator is linear in the classifier's predictions, so it can be
//! written as `sum_i cost_i(g(x_i))`. [`Loss::costs`] exposes that form; the
//! ERM routines aggregate it per support point or along a sorted axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_propensity, Hypothesis, PUSample, Scenario};
use crate::scalar::{CompensatedSum, Scalar};

/// Propensity-weighted loss of one observation:
/// `(s / e)(2 * 1[g = 0] - 1) + 1[g = 1]`.
///
/// `e_at_x` is only read when `s` is set.
#[inline]
pub fn loss_sar<T: Scalar>(g_of_x: bool, s: bool, e_at_x: Option<T>) -> Result<T> {
    let labeled = if s {
        let e = e_at_x.ok_or(Error::MissingPropensity { index: 0 })?;
        check_propensity(e)?;
        let sign = if g_of_x { -T::one() } else { T::one() };
        sign / e
    } else {
        if let Some(e) = e_at_x {
            check_propensity(e)?;
        }
        T::zero()
    };
    Ok(labeled + if g_of_x { T::one() } else { T::zero() })
}

fn mean<T: Scalar>(sum: CompensatedSum<T>, n: usize) -> T {
    if n == 0 {
        T::zero()
    } else {
        sum.value() / T::of_usize(n)
    }
}

/// SAR risk: average of [`loss_sar`] with the recorded propensities.
pub fn emp_risk_sar<T: Scalar>(sample: &PUSample<T>, g: &Hypothesis<T>) -> Result<T> {
    let mut acc = CompensatedSum::new();
    for (index, obs) in sample.iter().enumerate() {
        let e = if obs.s { Some(obs.e_at_x.ok_or(Error::MissingPropensity { index })?) } else { None };
        acc.add(loss_sar(g.predict_obs(obs), obs.s, e)?);
    }
    Ok(mean(acc, sample.n()))
}

/// SCAR risk with the constant propensity `e_m` in place of `e(x)`.
pub fn emp_risk_scar_em<T: Scalar>(sample: &PUSample<T>, g: &Hypothesis<T>, e_m: T) -> Result<T> {
    check_propensity(e_m)?;
    let mut acc = CompensatedSum::new();
    for obs in sample {
        acc.add(loss_sar(g.predict_obs(obs), obs.s, Some(e_m))?);
    }
    Ok(mean(acc, sample.n()))
}

/// SCAR risk through the class prior:
/// `(alpha / N_L) sum_{s=1} (1[g=0] - 1[g=1]) + (1/n) sum 1[g=1]`.
///
/// With no labeled observation the first term is 0.
pub fn emp_risk_scar_alpha<T: Scalar>(sample: &PUSample<T>, g: &Hypothesis<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let mut labeled = CompensatedSum::new();
    let mut positive = CompensatedSum::new();
    let mut n_l = 0usize;
    for obs in sample {
        let gi = g.predict_obs(obs);
        if obs.s {
            n_l += 1;
            labeled.add(if gi { -T::one() } else { T::one() });
        }
        if gi {
            positive.add(T::one());
        }
    }
    let first = if n_l == 0 { T::zero() } else { alpha * labeled.value() / T::of_usize(n_l) };
    Ok(first + mean(positive, sample.n()))
}

/// Nontraditional risk `(1/n) sum 1[g(x_i) != s_i]`: the observed label taken as the class.
pub fn emp_risk_nontraditional<T: Scalar>(sample: &PUSample<T>, g: &Hypothesis<T>) -> T {
    let mut acc = CompensatedSum::new();
    for obs in sample {
        if g.predict_obs(obs) != obs.s {
            acc.add(T::one());
        }
    }
    mean(acc, sample.n())
}

/// Ordinary 0-1 risk on the hidden classes. Diagnostics only.
pub fn emp_risk_standard<T: Scalar>(sample: &PUSample<T>, g: &Hypothesis<T>) -> T {
    let mut acc = CompensatedSum::new();
    for obs in sample {
        if g.predict_obs(obs) != obs.y_hidden {
            acc.add(T::one());
        }
    }
    mean(acc, sample.n())
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<T> {
    if alpha >= T::zero() && alpha <= T::one() {
        Ok(alpha)
    } else {
        Err(Error::param("alpha", format!("{alpha} outside [0, 1]")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "standard")]
    Standard,
    #[serde(rename = "nontrad")]
    Nontraditional,
    #[serde(rename = "scar-alpha")]
    ScarAlpha,
    #[serde(rename = "scar-em")]
    ScarEm,
    #[serde(rename = "sar")]
    Sar,
}

impl LossKind {
    pub const ALL: [LossKind; 5] =
        [LossKind::Standard, LossKind::Nontraditional, LossKind::ScarAlpha, LossKind::ScarEm, LossKind::Sar];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Standard => "standard",
            LossKind::Nontraditional => "nontrad",
            LossKind::ScarAlpha => "scar-alpha",
            LossKind::ScarEm => "scar-em",
            LossKind::Sar => "sar",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::param("loss", format!("unknown loss `{s}`, expected standard|nontrad|scar-alpha|scar-em|sar"))
        })
    }
}

/// A loss variant together with the side information it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loss<T> {
    pub kind: LossKind,
    /// Class prior, read by the `scar-alpha` form.
    pub alpha: Option<T>,
    /// Constant propensity, read by the `scar-em` form. Defaults to the sample's `e_m`.
    pub e_m: Option<T>,
}

/// Contribution of one observation: `cost0` if `g(x) = 0`, `cost1` if `g(x) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cost<T> {
    pub cost0: T,
    pub cost1: T,
}

impl<T: Scalar> Cost<T> {
    #[inline]
    pub fn at(&self, g: bool) -> T {
        if g {
            self.cost1
        } else {
            self.cost0
        }
    }

    /// `cost1 - cost0`: change in risk when the observation flips to class 1.
    #[inline]
    pub fn delta(&self) -> T {
        self.cost1 - self.cost0
    }
}

impl<T: Scalar> Loss<T> {
    pub fn new(kind: LossKind) -> Self {
        Self { kind, alpha: None, e_m: None }
    }

    pub fn sar() -> Self {
        Self::new(LossKind::Sar)
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_e_m(mut self, e_m: T) -> Self {
        self.e_m = Some(e_m);
        self
    }

    /// Per-observation costs such that the empirical risk of `g` is
    /// `sum_i costs[i].at(g(x_i))`.
    pub fn costs(&self, sample: &PUSample<T>) -> Result<Vec<Cost<T>>> {
        let n = sample.n();
        if n == 0 {
            return Ok(Vec::new());
        }
        let inv_n = T::one() / T::of_usize(n);
        let unit = |flag: bool| if flag { inv_n } else { T::zero() };
        match self.kind {
            LossKind::Standard => {
                Ok(sample.iter().map(|o| Cost { cost0: unit(o.y_hidden), cost1: unit(!o.y_hidden) }).collect())
            }
            LossKind::Nontraditional => {
                Ok(sample.iter().map(|o| Cost { cost0: unit(o.s), cost1: unit(!o.s) }).collect())
            }
            LossKind::Sar | LossKind::ScarEm => {
                let constant = match self.kind {
                    LossKind::ScarEm => Some(check_propensity(self.e_m.unwrap_or(sample.e_m()))?),
                    _ => None,
                };
                sample
                    .iter()
                    .enumerate()
                    .map(|(index, o)| {
                        if !o.s {
                            return Ok(Cost { cost0: T::zero(), cost1: inv_n });
                        }
                        let e = match constant {
                            Some(e) => e,
                            None => check_propensity(o.e_at_x.ok_or(Error::MissingPropensity { index })?)?,
                        };
                        let w = inv_n / e;
                        Ok(Cost { cost0: w, cost1: inv_n - w })
                    })
                    .collect()
            }
            LossKind::ScarAlpha => {
                let alpha = check_alpha(
                    self.alpha.ok_or_else(|| Error::param("alpha", "the scar-alpha loss needs a class prior"))?,
                )?;
                let n_l = sample.labeled_count();
                let w = if n_l == 0 { T::zero() } else { alpha / T::of_usize(n_l) };
                Ok(sample
                    .iter()
                    .map(|o| {
                        if o.s {
                            Cost { cost0: w, cost1: inv_n - w }
                        } else {
                            Cost { cost0: T::zero(), cost1: inv_n }
                        }
                    })
                    .collect())
            }
        }
    }

    /// Empirical risk of `g` on `sample` under this loss.
    pub fn emp_risk(&self, sample: &PUSample<T>, g: &Hypothesis<T>) -> Result<T> {
        match self.kind {
            LossKind::Standard => Ok(emp_risk_standard(sample, g)),
            LossKind::Nontraditional => Ok(emp_risk_nontraditional(sample, g)),
            LossKind::Sar => emp_risk_sar(sample, g),
            LossKind::ScarEm => emp_risk_scar_em(sample, g, self.e_m.unwrap_or(sample.e_m())),
            LossKind::ScarAlpha => emp_risk_scar_alpha(
                sample,
                g,
                self.alpha.ok_or_else(|| Error::param("alpha", "the scar-alpha loss needs a class prior"))?,
            ),
        }
    }
}

/// Exact and empirical risks of one classifier on one sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct RiskReport<T> {
    pub n: usize,
    pub r_true: T,
    pub r_excess: T,
    pub r_emp_standard: T,
    pub r_emp_nontraditional: T,
    pub r_emp_scar_alpha: Option<T>,
    pub r_emp_scar_em: Option<T>,
    pub r_emp_sar: T,
}

/// One CSV row of a [`RiskReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub scenario_id: String,
    pub g_id: String,
    pub n: usize,
    pub seed: u64,
    pub r_true: f64,
    pub r_excess: f64,
    pub r_emp_sar: f64,
    pub r_emp_scar_alpha: Option<f64>,
    pub r_emp_scar_em: Option<f64>,
    pub r_emp_nontraditional: f64,
    pub r_emp_standard: f64,
}

impl<T: Scalar> RiskReport<T> {
    pub fn row(&self, scenario_id: impl Into<String>, g_id: impl Into<String>, seed: u64) -> RiskRow {
        RiskRow {
            scenario_id: scenario_id.into(),
            g_id: g_id.into(),
            n: self.n,
            seed,
            r_true: self.r_true.as_f64(),
            r_excess: self.r_excess.as_f64(),
            r_emp_sar: self.r_emp_sar.as_f64(),
            r_emp_scar_alpha: self.r_emp_scar_alpha.map(Scalar::as_f64),
            r_emp_scar_em: self.r_emp_scar_em.map(Scalar::as_f64),
            r_emp_nontraditional: self.r_emp_nontraditional.as_f64(),
            r_emp_standard: self.r_emp_standard.as_f64(),
        }
    }
}

/// Evaluates every estimator for `g` on `sample`. The SCAR forms are
/// reported only when their side information is supplied.
pub fn risk_report<T: Scalar>(
    scenario: &Scenario<T>,
    sample: &PUSample<T>,
    g: &Hypothesis<T>,
    alpha: Option<T>,
    e_m: Option<T>,
) -> Result<RiskReport<T>> {
    Ok(RiskReport {
        n: sample.n(),
        r_true: scenario.true_risk(g)?,
        r_excess: scenario.excess_risk(g)?,
        r_emp_standard: emp_risk_standard(sample, g),
        r_emp_nontraditional: emp_risk_nontraditional(sample, g),
        r_emp_scar_alpha: alpha.map(|a| emp_risk_scar_alpha(sample, g, a)).transpose()?,
        r_emp_scar_em: e_m.map(|e| emp_risk_scar_em(sample, g, e)).transpose()?,
        r_emp_sar: emp_risk_sar(sample, g)?,
    })
}

/// Exact moments of the loss increment `D = r_SAR(g) - r_SAR(g')` for one draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncrementMoments<T> {
    pub mean: T,
    pub second_moment: T,
    pub variance: T,
    /// `E|g - g'|^2` under the covariate marginal.
    pub disagreement: T,
}

/// Enumerates the `(x, s)` outcomes of a discrete scenario to get the
/// moments of `r_SAR(g) - r_SAR(g')`.
pub fn sar_increment_moments<T: Scalar>(
    scenario: &Scenario<T>,
    g: &Hypothesis<T>,
    g_prime: &Hypothesis<T>,
) -> Result<IncrementMoments<T>> {
    let d = scenario
        .discrete_support()
        .ok_or_else(|| Error::NotRepresentable("increment moments need a discrete support".into()))?;
    let mut mean = CompensatedSum::new();
    let mut second = CompensatedSum::new();
    let mut disagreement = CompensatedSum::new();
    for (i, x) in d.points().iter().enumerate() {
        let (a, b) = (g.predict(x, Some(i)), g_prime.predict(x, Some(i)));
        if a == b {
            continue;
        }
        let (p, eta, e) = (d.probs()[i], d.eta()[i], d.propensity()[i]);
        disagreement.add(p);
        let p_labeled = eta * e;
        for (s, prob_s) in [(false, T::one() - p_labeled), (true, p_labeled)] {
            let value = loss_sar(a, s, Some(e))? - loss_sar(b, s, Some(e))?;
            mean.add(p * prob_s * value);
            second.add(p * prob_s * value * value);
        }
    }
    let (m, s2) = (mean.value(), second.value());
    Ok(IncrementMoments { mean: m, second_moment: s2, variance: s2 - m * m, disagreement: disagreement.value() })
}
