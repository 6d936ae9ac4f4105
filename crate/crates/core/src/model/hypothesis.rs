use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sample::{Covariate, PUObservation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Orientation of a decision stump. Declaration order is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// `x -> 1[x >= t]`
    GreaterEq,
    /// `x -> 1[x < t]`
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump<T> {
    pub feature: usize,
    pub threshold: T,
    pub polarity: Polarity,
}

impl<T: Scalar> Stump<T> {
    pub fn new(feature: usize, threshold: T, polarity: Polarity) -> Self {
        Self { feature, threshold, polarity }
    }

    #[inline]
    pub fn predict_value(&self, x: T) -> bool {
        match self.polarity {
            Polarity::GreaterEq => x >= self.threshold,
            Polarity::Less => x < self.threshold,
        }
    }
}

/// Labels attached to a finite point set. Points off the set are classified 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelTable<T> {
    points: Arc<[Covariate<T>]>,
    labels: Vec<bool>,
}

impl<T: Scalar> LabelTable<T> {
    pub fn new(points: Arc<[Covariate<T>]>, labels: Vec<bool>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::param("labels", format!("{} labels for {} points", labels.len(), points.len())));
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &Arc<[Covariate<T>]> {
        &self.points
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Locates `x` in the point set, trying `hint` first.
    pub fn index_of(&self, x: &Covariate<T>, hint: Option<usize>) -> Option<usize> {
        if let Some(i) = hint {
            if let Some(p) = self.points.get(i) {
                if p.same_allocation(x) || p == x {
                    return Some(i);
                }
            }
        }
        self.points.iter().position(|p| p == x)
    }

    pub fn predict(&self, x: &Covariate<T>, hint: Option<usize>) -> bool {
        self.index_of(x, hint).is_some_and(|i| self.labels[i])
    }
}

type RuleFn<T> = Arc<dyn Fn(&[T]) -> bool + Send + Sync>;

/// Arbitrary decision rule, identified by name.
#[derive(Clone)]
pub struct ExplicitRule<T> {
    name: String,
    rule: RuleFn<T>,
}

impl<T> ExplicitRule<T> {
    pub fn new(name: impl Into<String>, rule: impl Fn(&[T]) -> bool + Send + Sync + 'static) -> Self {
        Self { name: name.into(), rule: Arc::new(rule) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<T> fmt::Debug for ExplicitRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExplicitRule").field("name", &self.name).finish()
    }
}

/// A binary classifier `g: R^d -> {0, 1}`.
#[derive(Clone, Debug)]
pub enum Hypothesis<T> {
    Table(LabelTable<T>),
    Stump(Stump<T>),
    Explicit(ExplicitRule<T>),
}

impl<T: Scalar> Hypothesis<T> {
    pub fn table(points: Arc<[Covariate<T>]>, labels: Vec<bool>) -> Result<Self> {
        LabelTable::new(points, labels).map(Hypothesis::Table)
    }

    pub fn stump(feature: usize, threshold: T, polarity: Polarity) -> Self {
        Hypothesis::Stump(Stump::new(feature, threshold, polarity))
    }

    pub fn explicit(name: impl Into<String>, rule: impl Fn(&[T]) -> bool + Send + Sync + 'static) -> Self {
        Hypothesis::Explicit(ExplicitRule::new(name, rule))
    }

    /// Evaluates `g(x)`; `hint` is the index of `x` in a discrete support, when known.
    #[inline]
    pub fn predict(&self, x: &Covariate<T>, hint: Option<usize>) -> bool {
        match self {
            Hypothesis::Table(t) => t.predict(x, hint),
            Hypothesis::Stump(s) => x.coords().get(s.feature).is_some_and(|&v| s.predict_value(v)),
            Hypothesis::Explicit(r) => (r.rule)(x.coords()),
        }
    }

    #[inline]
    pub fn predict_obs(&self, obs: &PUObservation<T>) -> bool {
        self.predict(&obs.x, obs.support_index)
    }

    /// Stable textual encoding, used in reports and for tie-breaking order.
    pub fn encoding(&self) -> String {
        match self {
            Hypothesis::Table(t) => {
                let bits: String = t.labels.iter().map(|&b| if b { '1' } else { '0' }).collect();
                format!("table:{bits}")
            }
            Hypothesis::Stump(s) => {
                let pol = match s.polarity {
                    Polarity::GreaterEq => "ge",
                    Polarity::Less => "lt",
                };
                format!("stump:{}:{}:{}", s.feature, s.threshold, pol)
            }
            Hypothesis::Explicit(r) => format!("explicit:{}", r.name),
        }
    }

    pub fn as_table(&self) -> Option<&LabelTable<T>> {
        match self {
            Hypothesis::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_stump(&self) -> Option<&Stump<T>> {
        match self {
            Hypothesis::Stump(s) => Some(s),
            _ => None,
        }
    }
}

impl<T: Scalar> PartialEq for Hypothesis<T> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Hypothesis::Table(a), Hypothesis::Table(b)) => a == b,
            (Hypothesis::Stump(a), Hypothesis::Stump(b)) => a == b,
            (Hypothesis::Explicit(a), Hypothesis::Explicit(b)) => Arc::ptr_eq(&a.rule, &b.rule),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    FiniteEnumeration,
    AllLabelingsOfPoints,
    Stumps1D,
}

/// An enumerable hypothesis class with known VC dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum HypothesisClass<T> {
    /// Explicit list of labelings of `points`, kept in lexicographic order.
    FiniteEnumeration { points: Arc<[Covariate<T>]>, members: Vec<Vec<bool>>, vc_dim: usize },
    /// Every labeling of `points`; shatters them, so the VC dimension is `points.len()`.
    AllLabelingsOfPoints { points: Arc<[Covariate<T>]> },
    /// Both polarities of one-dimensional thresholds.
    Stumps1D,
}

impl<T: Scalar> HypothesisClass<T> {
    pub fn all_labelings(points: Arc<[Covariate<T>]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("points", "class needs at least one point"));
        }
        Ok(HypothesisClass::AllLabelingsOfPoints { points })
    }

    pub fn finite(points: Arc<[Covariate<T>]>, mut members: Vec<Vec<bool>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::param("members", "class needs at least one member"));
        }
        if let Some(m) = members.iter().find(|m| m.len() != points.len()) {
            return Err(Error::param("members", format!("member of length {} for {} points", m.len(), points.len())));
        }
        members.sort();
        members.dedup();
        let vc_dim = shattering_dimension(points.len(), &members);
        Ok(HypothesisClass::FiniteEnumeration { points, members, vc_dim })
    }

    pub fn stumps_1d() -> Self {
        HypothesisClass::Stumps1D
    }

    pub fn kind(&self) -> ClassKind {
        match self {
            HypothesisClass::FiniteEnumeration { .. } => ClassKind::FiniteEnumeration,
            HypothesisClass::AllLabelingsOfPoints { .. } => ClassKind::AllLabelingsOfPoints,
            HypothesisClass::Stumps1D => ClassKind::Stumps1D,
        }
    }

    pub fn vc_dim(&self) -> usize {
        match self {
            HypothesisClass::FiniteEnumeration { vc_dim, .. } => *vc_dim,
            HypothesisClass::AllLabelingsOfPoints { points } => points.len(),
            HypothesisClass::Stumps1D => 2,
        }
    }

    pub fn points(&self) -> Option<&Arc<[Covariate<T>]>> {
        match self {
            HypothesisClass::FiniteEnumeration { points, .. } | HypothesisClass::AllLabelingsOfPoints { points } => {
                Some(points)
            }
            HypothesisClass::Stumps1D => None,
        }
    }

    /// Number of members, `None` for the (uncountable) stump class.
    pub fn size(&self) -> Option<u128> {
        match self {
            HypothesisClass::FiniteEnumeration { members, .. } => Some(members.len() as u128),
            HypothesisClass::AllLabelingsOfPoints { points } => {
                Some(1u128.checked_shl(points.len() as u32).unwrap_or(u128::MAX))
            }
            HypothesisClass::Stumps1D => None,
        }
    }

    /// Membership, judged on the class support for table classes.
    pub fn contains(&self, g: &Hypothesis<T>) -> bool {
        match self {
            HypothesisClass::Stumps1D => matches!(g, Hypothesis::Stump(s) if s.feature == 0),
            HypothesisClass::AllLabelingsOfPoints { points } => {
                matches!(g, Hypothesis::Table(t) if same_points(t.points(), points))
            }
            HypothesisClass::FiniteEnumeration { points, members, .. } => match g {
                Hypothesis::Table(t) if same_points(t.points(), points) => {
                    members.binary_search_by(|m| m.as_slice().cmp(t.labels())).is_ok()
                }
                _ => false,
            },
        }
    }

    /// Label vectors of a finite class, in lexicographic order (`false < true`).
    pub fn labelings(&self) -> Option<Box<dyn Iterator<Item = Vec<bool>> + '_>> {
        match self {
            HypothesisClass::FiniteEnumeration { members, .. } => Some(Box::new(members.iter().cloned())),
            HypothesisClass::AllLabelingsOfPoints { points } => {
                let v = points.len();
                if v >= 64 {
                    return None;
                }
                Some(Box::new((0..1u64 << v).map(move |mask| mask_to_labels(mask, v))))
            }
            HypothesisClass::Stumps1D => None,
        }
    }

    /// Members of a finite class as hypotheses, in lexicographic order.
    pub fn members(&self) -> Option<Vec<Hypothesis<T>>> {
        let points = self.points()?.clone();
        let labelings = self.labelings()?;
        Some(labelings.map(|labels| Hypothesis::Table(LabelTable { points: points.clone(), labels })).collect())
    }
}

/// Labels for `mask`, with point 0 as the most significant bit, so that
/// increasing masks enumerate labelings in lexicographic order.
pub(crate) fn mask_to_labels(mask: u64, v: usize) -> Vec<bool> {
    (0..v).map(|j| (mask >> (v - 1 - j)) & 1 == 1).collect()
}

fn same_points<T: Scalar>(a: &Arc<[Covariate<T>]>, b: &Arc<[Covariate<T>]>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Largest size of a subset of `0..v` on which `members` realise every labeling.
fn shattering_dimension(v: usize, members: &[Vec<bool>]) -> usize {
    let mut best = 0;
    if v >= 32 {
        return best;
    }
    for subset in 1u32..(1 << v) {
        let k = subset.count_ones() as usize;
        if k <= best || (1usize << k) > members.len() {
            continue;
        }
        let idx: Vec<usize> = (0..v).filter(|&j| subset >> j & 1 == 1).collect();
        let mut seen = vec![false; 1 << k];
        for m in members {
            let pattern = idx.iter().fold(0usize, |acc, &j| acc << 1 | m[j] as usize);
            seen[pattern] = true;
        }
        if seen.iter().all(|&s| s) {
            best = k;
        }
    }
    best
}
