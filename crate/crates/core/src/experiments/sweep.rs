use serde::{Deserialize, Serialize};

use super::McSummary;
use crate::bounds::{h_prime, lower_bound, upper_bound, Regime};
use crate::erm::excess_of_erm_at;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::model::{HypothesisClass, Scenario};

/// Constant `c` in the mass `p = c / (n e_m h^2)` of the hardest Assouad member.
pub const PROOF_P_CONSTANT: f64 = 2.0 / 9.0;

/// How the margin of a least-favourable scenario is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSpec {
    Fixed(f64),
    /// `h = beta * h'(n, V, e_m)`, keeping every grid point in the small-margin case.
    RelativeToHPrime(f64),
}

/// Assouad member that is hardest at sample size `n`: mass
/// `p = c / (n e_m max(h, h')^2)` on each shattered point, capped at `1 / (V - 1)`.
///
/// With a fixed distribution the ERM excess risk decays exponentially in `n`;
/// tying the scenario to `n` this way makes the excess risk track the minimax rate.
pub fn least_favourable(v: usize, n: usize, h: HSpec, e_m: f64, c: f64, b: Vec<bool>) -> Result<Scenario<f64>> {
    if v < 2 {
        return Err(Error::param("V", format!("need V >= 2, got {v}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let hp = h_prime(n, v, e_m);
    let h = match h {
        HSpec::Fixed(h) => h,
        HSpec::RelativeToHPrime(beta) => beta * hp,
    };
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::param("h", format!("{h} outside (0, 1]")));
    }
    if !(c > 0.0) {
        return Err(Error::param("c", format!("{c} must be positive")));
    }
    let h_eff = h.max(hp);
    let p = (c / (n as f64 * e_m * h_eff * h_eff)).min(1.0 / (v - 1) as f64);
    Scenario::assouad(v, p, h, b, vec![e_m; v - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepTemplate {
    LeastFavourable {
        #[serde(rename = "V")]
        v: usize,
        n: usize,
        h: HSpec,
        e_m: f64,
        #[serde(default = "default_c")]
        c: f64,
        /// Defaults to all ones.
        #[serde(default)]
        b: Option<Vec<bool>>,
    },
    /// A fixed scenario; only `n` can be swept.
    Fixed { scenario: Scenario<f64> },
}

fn default_c() -> f64 {
    PROOF_P_CONSTANT
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "h")]
    H,
    #[serde(rename = "e_m")]
    Em,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepParam::N),
            "h" => Ok(SweepParam::H),
            "e_m" | "em" => Ok(SweepParam::Em),
            other => Err(Error::param("sweep", format!("unknown parameter `{other}`, expected n|h|em"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub template: SweepTemplate,
    pub parameter: SweepParam,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
}

fn default_loss() -> LossKind {
    LossKind::Sar
}

/// Mean ERM excess risk at one grid value, with the theoretical envelopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub h: f64,
    pub e_m: f64,
    pub p: Option<f64>,
    pub replicates: usize,
    pub mean_excess: f64,
    pub se: f64,
    /// Upper bound with `kappa1 = 1`.
    pub upper_unit: f64,
    pub regime: Regime,
    pub lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(log x, log mean excess)` of the fitted points.
    pub points: Vec<(f64, f64)>,
    /// Grid points left out because their mean was within 10 standard errors of 0.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub fit: Option<RateFit>,
}

/// Least-squares line through `(log x, log mean)` over points whose mean
/// exceeds 10 standard errors. `None` with fewer than two such points.
pub fn fit_rate(points: &[(f64, f64, f64)]) -> Option<RateFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, mean, se)| x > 0.0 && mean > 0.0 && mean > 10.0 * se)
        .map(|&(x, mean, _)| (x.ln(), mean.ln()))
        .collect();
    let excluded = points.len() - kept.len();
    if kept.len() < 2 {
        return None;
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / m;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(RateFit { slope, intercept: my - slope * mx, r_squared, points: kept, excluded })
}

fn class_for(scenario: &Scenario<f64>) -> Result<HypothesisClass<f64>> {
    match scenario.discrete_support() {
        Some(d) => HypothesisClass::all_labelings(d.points().clone()),
        None => Ok(HypothesisClass::stumps_1d()),
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::param("grid", "must not be empty"));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("grid", "must be strictly increasing"));
        }
        if self.replicates < 100 {
            return Err(Error::param("replicates", format!("need at least 100, got {}", self.replicates)));
        }
        if self.parameter == SweepParam::N && self.grid.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
            return Err(Error::param("grid", "sample sizes must be positive integers"));
        }
        if matches!(self.template, SweepTemplate::Fixed { .. }) && self.parameter != SweepParam::N {
            return Err(Error::param("sweep", "a fixed scenario can only be swept over n"));
        }
        Ok(())
    }

    /// Scenario and sample size at grid value `x`.
    pub fn scenario_at(&self, x: f64) -> Result<(Scenario<f64>, usize)> {
        match &self.template {
            SweepTemplate::Fixed { scenario } => Ok((scenario.clone(), x as usize)),
            SweepTemplate::LeastFavourable { v, n, h, e_m, c, b } => {
                let (mut n, mut h, mut e_m) = (*n, *h, *e_m);
                match self.parameter {
                    SweepParam::N => n = x as usize,
                    SweepParam::H => h = HSpec::Fixed(x),
                    SweepParam::Em => e_m = x,
                }
                let b = b.clone().unwrap_or_else(|| vec![true; v - 1]);
                Ok((least_favourable(*v, n, h, e_m, *c, b)?, n))
            }
        }
    }
}

/// Mean ERM excess risk along the grid and the fitted log-log slope.
pub fn run_rate_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.grid.len());
    for (i, &x) in config.grid.iter().enumerate() {
        let (scenario, n) = config.scenario_at(x)?;
        let class = class_for(&scenario)?;
        let excess = excess_of_erm_at(&scenario, &class, n, config.loss, config.replicates, config.seed, i as u64)?;
        let summary = McSummary::of(&excess);
        let v = class.vc_dim();
        let (h, e_m) = (scenario.margin_h(), scenario.e_m());
        let upper = upper_bound(n, v, h, e_m, 1.0)?;
        let lower = lower_bound(n, v, h, e_m, None).ok().map(|l| l.value);
        points.push(SweepPoint {
            x,
            n,
            v,
            h,
            e_m,
            p: scenario.assouad_params().map(|a| a.p),
            replicates: config.replicates,
            mean_excess: summary.mean,
            se: summary.se,
            upper_unit: upper.value,
            regime: upper.regime,
            lower,
        });
    }
    let fit = fit_rate(&points.iter().map(|p| (p.x, p.mean_excess, p.se)).collect::<Vec<_>>());
    Ok(SweepResult { points, fit })
}
