//! Closed-form theoretical quantities: the upper and lower excess-risk
//! bounds, the complexity function and its fixed point, Assouad's inequality,
//! Hellinger distances inside the Assouad family and the Cannings condition.
//!
//! Logarithms are natural throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_propensity, Covariate, Scenario, Support};
use crate::scalar::{CompensatedSum, Scalar};

/// Default `kappa_2` in the large-margin case.
pub const KAPPA2_C1: f64 = 1.0 / 54.0;

/// Default `kappa_2` in the small-margin case, `1 / (54 sqrt 2)`.
pub const KAPPA2_C2: f64 = 1.0 / (54.0 * std::f64::consts::SQRT_2);

fn check_positive_count(field: &str, value: usize) -> Result<()> {
    if value == 0 {
        Err(Error::param(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_unit<T: Scalar>(field: &str, value: T, allow_zero: bool) -> Result<T> {
    let low_ok = if allow_zero { value >= T::zero() } else { value > T::zero() };
    if low_ok && value <= T::one() {
        Ok(value)
    } else {
        let interval = if allow_zero { "[0, 1]" } else { "(0, 1]" };
        Err(Error::param(field, format!("{value} outside {interval}")))
    }
}

/// `C_e = 2 / e_m - 1`, the width of the range of the SAR loss.
pub fn c_e<T: Scalar>(e_m: T) -> Result<T> {
    check_propensity(e_m)?;
    Ok(T::two() / e_m - T::one())
}

/// `h' = sqrt(V / (n e_m))`, the margin at which the two regimes meet.
pub fn h_prime<T: Scalar>(n: usize, v: usize, e_m: T) -> T {
    (T::of_usize(v) / (T::of_usize(n) * e_m)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Fast,
    Slow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBound<T> {
    pub fast: T,
    pub slow: T,
    pub value: T,
    pub regime: Regime,
}

/// `kappa1 * min{ V/(n e_m h) (1 + log(n h^2 / V v 1)), sqrt(V / (n e_m)) }`.
///
/// The regime names the branch attaining the minimum (fast on equality).
pub fn upper_bound<T: Scalar>(n: usize, v: usize, h: T, e_m: T, kappa1: T) -> Result<UpperBound<T>> {
    check_positive_count("n", n)?;
    check_positive_count("V", v)?;
    check_unit("h", h, false)?;
    check_propensity(e_m)?;
    let (nf, vf) = (T::of_usize(n), T::of_usize(v));
    let log_term = T::one() + (nf * h * h / vf).max(T::one()).ln();
    let fast = kappa1 * vf / (nf * e_m * h) * log_term;
    let slow = kappa1 * (vf / (nf * e_m)).sqrt();
    let (value, regime) = if fast <= slow { (fast, Regime::Fast) } else { (slow, Regime::Slow) };
    Ok(UpperBound { fast, slow, value, regime })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LowerCase {
    /// `h >= h'`: rate `(V - 1) / (h n e_m)`.
    C1,
    /// `h < h'`: rate `sqrt((V - 1) / (n e_m))`.
    C2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBound<T> {
    pub value: T,
    pub case: LowerCase,
    pub kappa2: T,
}

/// Minimax lower bound over distributions with margin `h` and propensity floor `e_m`.
///
/// `kappa2 = None` uses the constants produced by the Assouad argument,
/// [`KAPPA2_C1`] or [`KAPPA2_C2`] depending on the case.
pub fn lower_bound<T: Scalar>(n: usize, v: usize, h: T, e_m: T, kappa2: Option<T>) -> Result<LowerBound<T>> {
    if v < 2 {
        return Err(Error::param("V", format!("need V >= 2, got {v}")));
    }
    check_positive_count("n", n)?;
    check_unit("h", h, true)?;
    check_propensity(e_m)?;
    let n_em = T::of_usize(n) * e_m;
    if n_em < T::of_usize(v) {
        return Err(Error::HypothesisViolated { n_em: n_em.as_f64(), v });
    }
    let vm1 = T::of_usize(v - 1);
    if h >= h_prime(n, v, e_m) {
        let kappa2 = kappa2.unwrap_or_else(|| T::of(KAPPA2_C1));
        Ok(LowerBound { value: kappa2 * vm1 / (h * n_em), case: LowerCase::C1, kappa2 })
    } else {
        let kappa2 = kappa2.unwrap_or_else(|| T::of(KAPPA2_C2));
        Ok(LowerBound { value: kappa2 * (vm1 / n_em).sqrt(), case: LowerCase::C2, kappa2 })
    }
}

/// Assouad's inequality for the hypercube family: `(V - 1)/2 (1 - sqrt(gamma n))`.
/// Negative (vacuous) values are returned as they are.
pub fn assouad_lower<T: Scalar>(v: usize, gamma: T, n: usize) -> Result<T> {
    if v < 2 {
        return Err(Error::param("V", format!("need V >= 2, got {v}")));
    }
    if !(gamma >= T::zero()) {
        return Err(Error::param("gamma", format!("{gamma} must be non-negative")));
    }
    Ok(T::of_usize(v - 1) * T::half() * (T::one() - (gamma * T::of_usize(n)).sqrt()))
}

/// Squared Hellinger distance between two members of the Assouad family that
/// differ at one point of mass `p`, propensity `e` and margin `h`.
pub fn hellinger_sq_closed_form<T: Scalar>(p: T, e: T, h: T) -> T {
    let root = (T::one() - h * h).sqrt();
    let inner = (T::one() - e + e * e * (T::one() - h * h) / T::of(4.0)).sqrt();
    p * T::half() * (T::two() - e * root - T::two() * inner)
}

/// Closed form, brute-force value and the upper bound `2 p e h^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HellingerCheck<T> {
    pub closed_form: T,
    pub brute_force: T,
    pub bound: T,
    /// Index of the coordinate where the two bit vectors differ.
    pub coordinate: usize,
}

/// Squared Hellinger distance of the laws of `(X, S)` under two adjacent
/// Assouad scenarios, both by enumerating the `2V` outcomes and in closed form.
pub fn hellinger_sq_exact<T: Scalar>(b: &Scenario<T>, b_prime: &Scenario<T>) -> Result<HellingerCheck<T>> {
    let (pa, pb) = match (b.assouad_params(), b_prime.assouad_params()) {
        (Some(pa), Some(pb)) => (pa, pb),
        _ => return Err(Error::param("scenario", "Hellinger comparison needs two Assouad scenarios")),
    };
    if pa.v != pb.v || pa.p != pb.p || pa.h != pb.h || pa.e_values != pb.e_values {
        return Err(Error::param("scenario", "Assouad scenarios differ in (V, p, h, e)"));
    }
    let differing: Vec<usize> = (0..pa.b.len()).filter(|&i| pa.b[i] != pb.b[i]).collect();
    if differing.len() != 1 {
        return Err(Error::NotAdjacent(differing.len()));
    }
    let i = differing[0];

    let (da, db) = (b.discrete_support().expect("discrete"), b_prime.discrete_support().expect("discrete"));
    let mut acc = CompensatedSum::new();
    for j in 0..da.len() {
        let (mass, e) = (da.probs()[j], da.propensity()[j]);
        let qa = mass * da.eta()[j] * e;
        let qb = mass * db.eta()[j] * e;
        for (x, y) in [(qa, qb), (mass - qa, mass - qb)] {
            let d = x.max(T::zero()).sqrt() - y.max(T::zero()).sqrt();
            acc.add(d * d);
        }
    }
    let e = pa.e_values[i];
    Ok(HellingerCheck {
        closed_form: hellinger_sq_closed_form(pa.p, e, pa.h),
        brute_force: T::half() * acc.value(),
        bound: T::two() * pa.p * e * pa.h * pa.h,
        coordinate: i,
    })
}

/// Whether `e(x) >= 1 / (2 eta(x))` wherever `eta(x) >= 1/2`; otherwise the
/// first violating support point (left end of the cell for piecewise scenarios).
pub fn cannings_holds<T: Scalar>(scenario: &Scenario<T>) -> (bool, Option<Covariate<T>>) {
    let violates = |eta: T, e: T| eta >= T::half() && e * T::two() * eta < T::one();
    match scenario.support() {
        Support::Discrete(d) => {
            match (0..d.len()).find(|&i| d.probs()[i] > T::zero() && violates(d.eta()[i], d.propensity()[i])) {
                Some(i) => (false, Some(d.points()[i].clone())),
                None => (true, None),
            }
        }
        Support::Piecewise(p) => match (0..p.cells()).find(|&k| violates(p.eta()[k], p.propensity()[k])) {
            Some(k) => (false, Covariate::scalar(p.breaks()[k]).ok()),
            None => (true, None),
        },
    }
}

/// `Phi(sigma) = K sigma sqrt(V (1 + log(C_e / sigma v 1)))`.
pub fn phi<T: Scalar>(sigma: T, v: usize, c_e: T, k: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    let log_term = T::one() + (c_e / sigma).max(T::one()).ln();
    Ok(k * sigma * (T::of_usize(v) * log_term).sqrt())
}

/// `w(x) = sqrt(2 C_e / h) x`.
pub fn w_margin<T: Scalar>(x: T, c_e: T, h: T) -> T {
    (T::two() * c_e / h).sqrt() * x
}

/// `w_0(x) = max(sqrt(2 C_e), x sqrt(2 C_e / h'))`.
pub fn w_zero<T: Scalar>(x: T, c_e: T, h_prime: T) -> T {
    (T::two() * c_e).sqrt().max(x * (T::two() * c_e / h_prime).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhichW {
    /// Uses `w`, valid under a margin `h > 0`.
    Margin,
    /// Uses `w_0`, which needs no margin.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint<T> {
    pub eps_star: T,
    pub eps_star_sq: T,
    /// `F(eps*) = sqrt(n) eps*^2 - Phi(w(eps*))` at the returned root.
    pub residual: T,
    pub iterations: usize,
}

/// Relative width at which the bisection stops.
pub const FIXED_POINT_RTOL: f64 = 1e-10;

/// Solves `sqrt(n) eps^2 = Phi(w(eps))` by bisection.
///
/// `F(eps) = sqrt(n) eps^2 - Phi(w(eps))` is negative near 0 and eventually
/// positive; the initial bracket is `[1e-9, C_e + 1]`, doubled on the right
/// until it changes sign.
pub fn solve_fixed_point<T: Scalar>(n: usize, v: usize, h: T, e_m: T, k: T, which: WhichW) -> Result<FixedPoint<T>> {
    check_positive_count("n", n)?;
    check_positive_count("V", v)?;
    if !(k >= T::one()) {
        return Err(Error::param("K", format!("{k} must be at least 1")));
    }
    let ce = c_e(e_m)?;
    let hp = h_prime(n, v, e_m);
    if which == WhichW::Margin {
        check_unit("h", h, false)?;
    }
    let sqrt_n = T::of_usize(n).sqrt();
    let w = |eps: T| match which {
        WhichW::Margin => w_margin(eps, ce, h),
        WhichW::Zero => w_zero(eps, ce, hp),
    };
    let f = |eps: T| -> Result<T> { Ok(sqrt_n * eps * eps - phi(w(eps), v, ce, k)?) };

    let mut lo = T::of(1e-9);
    let mut hi = ce + T::one();
    if f(lo)? >= T::zero() {
        return Err(Error::NonBracketing);
    }
    let mut expansions = 0;
    while f(hi)? <= T::zero() {
        lo = hi;
        hi = hi * T::two();
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::NonBracketing);
        }
    }
    let rtol = T::of(FIXED_POINT_RTOL);
    let mut iterations = 0;
    while hi - lo > rtol * hi {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let eps = (lo + hi) * T::half();
    Ok(FixedPoint { eps_star: eps, eps_star_sq: eps * eps, residual: f(eps)?, iterations })
}

/// Interval `[2 C_e V / (n h), 4 K^2 V / (n h e_m) (1 + log(n h^2 / V v 1))]`
/// that must contain the margin-case `eps*^2`.
pub fn margin_sandwich<T: Scalar>(n: usize, v: usize, h: T, e_m: T, k: T) -> Result<(T, T)> {
    let ce = c_e(e_m)?;
    let (nf, vf) = (T::of_usize(n), T::of_usize(v));
    let lower = T::two() * ce * vf / (nf * h);
    let upper = T::of(4.0) * k * k * vf / (nf * h * e_m) * (T::one() + (nf * h * h / vf).max(T::one()).ln());
    Ok((lower, upper))
}

/// `max(h', 4 K^2 sqrt(V / (n e_m)))`, the claimed ceiling of the zero-margin `eps*^2`.
pub fn zero_envelope<T: Scalar>(n: usize, v: usize, e_m: T, k: T) -> T {
    let hp = h_prime(n, v, e_m);
    hp.max(T::of(4.0) * k * k * hp)
}

/// Partial sum `sum_{j < terms} 2^-j sqrt(1 + log(2^(j+1) C_e / sigma v 1))`
/// and its bound `2 (1 + log 2) sqrt(1 + log(C_e / sigma v 1))`.
pub fn lemma1_series<T: Scalar>(c_e: T, sigma: T, terms: usize) -> Result<(T, T)> {
    if !(sigma > T::zero()) {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    let mut lhs = CompensatedSum::new();
    let mut weight = T::one();
    let mut scale = T::two() * c_e / sigma;
    for _ in 0..terms {
        lhs.add(weight * (T::one() + scale.max(T::one()).ln()).sqrt());
        weight = weight * T::half();
        scale = scale * T::two();
    }
    let rhs = T::two() * (T::one() + T::two().ln()) * (T::one() + (c_e / sigma).max(T::one()).ln()).sqrt();
    Ok((lhs.value(), rhs))
}

/// Constants used when evaluating the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundConstants<T> {
    pub kappa1: T,
    /// `None`: case-dependent defaults [`KAPPA2_C1`] / [`KAPPA2_C2`].
    pub kappa2: Option<T>,
    #[serde(rename = "K")]
    pub k: T,
}

impl<T: Scalar> Default for BoundConstants<T> {
    fn default() -> Self {
        Self { kappa1: T::one(), kappa2: None, k: T::one() }
    }
}

/// Every closed-form quantity for one parameter tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundReport<T> {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub h: T,
    pub e_m: T,
    pub c_e: T,
    pub upper_fast: T,
    pub upper_slow: T,
    pub upper: T,
    pub regime: Regime,
    /// Absent when `n e_m < V`, where the lower bound does not apply.
    pub lower: Option<T>,
    pub lower_case: Option<LowerCase>,
    pub h_prime: T,
    pub kappa1: T,
    pub kappa2: Option<T>,
    #[serde(rename = "K")]
    pub k: T,
    pub eps_star_sq: Option<T>,
}

pub fn bound_report<T: Scalar>(
    n: usize,
    v: usize,
    h: T,
    e_m: T,
    constants: BoundConstants<T>,
) -> Result<BoundReport<T>> {
    let upper = upper_bound(n, v, h, e_m, constants.kappa1)?;
    let lower = match lower_bound(n, v, h, e_m, constants.kappa2) {
        Ok(l) => Some(l),
        Err(Error::HypothesisViolated { .. }) => None,
        Err(e) => return Err(e),
    };
    let eps = solve_fixed_point(n, v, h, e_m, constants.k, WhichW::Margin)?;
    Ok(BoundReport {
        n,
        v,
        h,
        e_m,
        c_e: c_e(e_m)?,
        upper_fast: upper.fast,
        upper_slow: upper.slow,
        upper: upper.value,
        regime: upper.regime,
        lower: lower.map(|l| l.value),
        lower_case: lower.map(|l| l.case),
        h_prime: h_prime(n, v, e_m),
        kappa1: constants.kappa1,
        kappa2: lower.map(|l| l.kappa2).or(constants.kappa2),
        k: constants.k,
        eps_star_sq: Some(eps.eps_star_sq),
    })
}
