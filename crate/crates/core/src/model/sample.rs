use std::fmt;
use std::sync::Arc;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of the covariate space. Cheap to clone: coordinates are shared.
#[derive(Clone, PartialEq)]
pub struct Covariate<T>(pub(crate) Arc<[T]>);

impl<T: Scalar> Covariate<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::param("coords", "covariate must have dimension >= 1"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::param("coords", format!("non-finite entry {bad}")));
        }
        Ok(Self(coords.into()))
    }

    /// One-dimensional covariate.
    pub fn scalar(x: T) -> Result<Self> {
        Self::new(vec![x])
    }

    /// Standard basis vector `e_index` of `R^dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut coords = vec![T::zero(); dim];
        coords[index] = T::one();
        Self(coords.into())
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// True when both handles point at the same allocation.
    pub fn same_allocation(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl<T: fmt::Debug> fmt::Debug for Covariate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<T: Serialize> Serialize for Covariate<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_ref().serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Covariate<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<T>::deserialize(deserializer)?;
        Covariate::new(coords).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_propensity<T: Scalar>(e: T) -> Result<T> {
    if e > T::zero() && e <= T::one() {
        Ok(e)
    } else {
        Err(Error::InvalidPropensity(e.as_f64()))
    }
}

/// One PU observation `(x, s, e(x))`, with the hidden class kept for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PUObservation<T> {
    pub x: Covariate<T>,
    /// Index of `x` in the generating scenario's discrete support, if any.
    pub support_index: Option<usize>,
    pub s: bool,
    pub e_at_x: Option<T>,
    /// Ground truth. Only diagnostics and the standard risk may read it.
    pub y_hidden: bool,
}

impl<T: Scalar> PUObservation<T> {
    pub fn new(x: Covariate<T>, s: bool, e_at_x: Option<T>, y_hidden: bool) -> Result<Self> {
        if s && !y_hidden {
            return Err(Error::param("s", "a labeled observation must be positive"));
        }
        if let Some(e) = e_at_x {
            check_propensity(e)?;
        }
        Ok(Self { x, support_index: None, s, e_at_x, y_hidden })
    }

    pub fn with_support_index(mut self, index: usize) -> Self {
        self.support_index = Some(index);
        self
    }
}

/// A PU training sample together with the certified propensity floor `e_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PUSample<T> {
    observations: Vec<PUObservation<T>>,
    e_m: T,
}

impl<T: Scalar> PUSample<T> {
    pub fn new(observations: Vec<PUObservation<T>>, e_m: T) -> Result<Self> {
        check_propensity(e_m)?;
        for (i, obs) in observations.iter().enumerate() {
            if let Some(e) = obs.e_at_x {
                if e < e_m {
                    return Err(Error::param(
                        "e_at_x",
                        format!("observation {i} has propensity {e} below e_m = {e_m}"),
                    ));
                }
            }
        }
        Ok(Self { observations, e_m })
    }

    pub(crate) fn from_parts(observations: Vec<PUObservation<T>>, e_m: T) -> Self {
        Self { observations, e_m }
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn e_m(&self) -> T {
        self.e_m
    }

    pub fn observations(&self) -> &[PUObservation<T>] {
        &self.observations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PUObservation<T>> {
        self.observations.iter()
    }

    /// `N_L`, the number of labeled observations.
    pub fn labeled_count(&self) -> usize {
        self.observations.iter().filter(|o| o.s).count()
    }
}

impl<'a, T> IntoIterator for &'a PUSample<T> {
    type Item = &'a PUObservation<T>;
    type IntoIter = std::slice::Iter<'a, PUObservation<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.observations.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeled_negative_is_rejected() {
        let x = Covariate::scalar(0.3).unwrap();
        assert!(PUObservation::new(x, true, Some(0.5), false).is_err());
    }

    #[test]
    fn propensity_domain() {
        let x = Covariate::scalar(0.3).unwrap();
        assert_eq!(PUObservation::new(x.clone(), true, Some(0.0), true), Err(Error::InvalidPropensity(0.0)));
        assert!(PUObservation::new(x.clone(), true, Some(1.2), true).is_err());
        assert!(PUObservation::new(x, true, Some(1.0), true).is_ok());
    }

    #[test]
    fn sample_enforces_propensity_floor() {
        let x = Covariate::scalar(0.3).unwrap();
        let obs = PUObservation::new(x, true, Some(0.4), true).unwrap();
        assert!(PUSample::new(vec![obs.clone()], 0.5).is_err());
        let sample = PUSample::new(vec![obs], 0.4).unwrap();
        assert_eq!(sample.n(), 1);
        assert_eq!(sample.labeled_count(), 1);
    }

    #[test]
    fn covariate_rejects_non_finite() {
        assert!(Covariate::new(vec![0.0, f64::NAN]).is_err());
        assert!(Covariate::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn covariate_json_is_a_plain_array() {
        let x: Covariate<f64> = Covariate::basis(3, 1);
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "[0.0,1.0,0.0]");
        let back: Covariate<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }
}
