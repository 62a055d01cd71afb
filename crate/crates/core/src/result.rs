//! The common output type of every importance method.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lmg,
    LmgSampled,
    Owen,
    Johnson,
    Pmvd,
    ProportionalValue,
    Forest,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lmg => "lmg",
            Method::LmgSampled => "lmg_sampled",
            Method::Owen => "owen",
            Method::Johnson => "johnson",
            Method::Pmvd => "pmvd",
            Method::ProportionalValue => "proportional_value",
            Method::Forest => "forest",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-variable (or per-group) allocation of a fit statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceResult<T> {
    pub method: Method,
    pub labels: Vec<String>,
    /// Absolute allocations of `total`.
    pub shares: Vec<T>,
    pub proportions: Vec<T>,
    pub total: T,
    /// Unrenormalized Monte Carlo means, sampled methods only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_shares: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<T>>,
    /// Intervals on the absolute shares.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<(T, T)>>,
    /// Intervals on the proportions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportion_intervals: Option<Vec<(T, T)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl<T: Scalar> ImportanceResult<T> {
    /// Result with proportions `shares / total` (zeros when total is 0).
    pub fn new(method: Method, labels: Vec<String>, shares: Vec<T>, total: T) -> Self {
        let proportions = proportions_of(&shares, total);
        ImportanceResult {
            method,
            labels,
            shares,
            proportions,
            total,
            raw_shares: None,
            stderr: None,
            intervals: None,
            proportion_intervals: None,
            level: None,
            seed: None,
            settings: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn share_of(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.shares[i])
    }

    /// Checks that the shares sum to the total and are non-negative.
    pub fn check_decomposition(&self, tol: T) -> Result<()> {
        let sum: T = self.shares.iter().copied().sum();
        if (sum - self.total).abs() > tol {
            return Err(Error::Numerical(format!(
                "{}: shares sum to {sum}, total is {}",
                self.method, self.total
            )));
        }
        if let Some(s) = self.shares.iter().find(|s| **s < -T::r2_slack()) {
            return Err(Error::Numerical(format!(
                "{}: negative share {s}",
                self.method
            )));
        }
        Ok(())
    }
}

pub(crate) fn proportions_of<T: Scalar>(shares: &[T], total: T) -> Vec<T> {
    if total > T::zero() {
        shares.iter().map(|&s| s / total).collect()
    } else {
        vec![T::zero(); shares.len()]
    }
}
