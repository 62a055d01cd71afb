//! Practical significance ("oomph"): usefulness, t², the coefficient shift
//! transform and cutoff-based verdicts on importance proportions.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::moments::{moments, MomentModel};
use crate::result::ImportanceResult;
use crate::scalar::Scalar;

pub const DEFAULT_CUTOFF: f64 = 0.15;

/// R² lost when regressor `j` is dropped from the full model.
pub fn usefulness<T: Scalar>(mm: &MomentModel<T>, j: usize) -> Result<T> {
    let n = mm.n_regressors();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
    mm.seq_r2(&[j], &others)
}

/// Squared t-statistic of coefficient `j` in the intercept model,
/// `(R² − R²₋ⱼ)(m − n − 1) / (1 − R²)`. With weights, `m` is `Σw`.
pub fn t_squared<T: Scalar>(d: &Dataset<T>, j: usize) -> Result<T> {
    d.check_regressor(j)?;
    let mm = moments(d)?;
    t_squared_from_moments(&mm, d.effective_obs(), j)
}

pub fn t_squared_from_moments<T: Scalar>(mm: &MomentModel<T>, m_eff: T, j: usize) -> Result<T> {
    let n = mm.n_regressors();
    let df = m_eff - T::from_usize_lossy(n + 1);
    if !(df > T::zero()) {
        return Err(Error::NoResidualDf(format!(
            "{} observations for {n} regressors and an intercept",
            m_eff
        )));
    }
    let r2 = mm.full_r2();
    let resid = T::one() - r2;
    if resid <= T::epsilon() * T::lit(64.0) {
        return Err(Error::NoResidualDf("saturated fit (R² = 1)".into()));
    }
    Ok(usefulness(mm, j)? * df / resid)
}

/// Dataset with response `y − C·x_j`. Refitting it moves the coefficient on
/// `x_j` by exactly `−C` and leaves every other coefficient alone, so a zero
/// coefficient after the shift corresponds to `β_j = C` before it.
pub fn shift_response<T: Scalar>(d: &Dataset<T>, j: usize, c: T) -> Result<Dataset<T>> {
    d.check_regressor(j)?;
    if !c.is_finite() {
        return Err(Error::InvalidArgument(
            "shift constant must be finite".into(),
        ));
    }
    let y = d
        .response()
        .iter()
        .zip(d.regressor(j))
        .map(|(&y, &x)| y - c * x)
        .collect();
    d.with_response(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Oomphy,
    NotOomphy,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OomphEntry<T> {
    pub label: String,
    pub proportion: T,
    pub interval: Option<(T, T)>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OomphAssessment<T> {
    pub cutoff: f64,
    pub entries: Vec<OomphEntry<T>>,
}

/// Verdict per variable. Without an interval the proportion is compared with
/// the cutoff (`≥` is oomphy); with one, an interval reaching from below the
/// cutoff to at or above it is indeterminate.
pub fn assess_oomph<T: Scalar>(
    res: &ImportanceResult<T>,
    cutoff: f64,
) -> Result<OomphAssessment<T>> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff must lie in (0, 1), got {cutoff}"
        )));
    }
    let c = T::lit(cutoff);
    let intervals: Option<Vec<(T, T)>> = res.proportion_intervals.clone().or_else(|| {
        res.intervals.as_ref().and_then(|iv| {
            (res.total > T::zero()).then(|| {
                iv.iter()
                    .map(|&(lo, hi)| (lo / res.total, hi / res.total))
                    .collect()
            })
        })
    });
    let entries = res
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let proportion = res.proportions[j];
            let interval = intervals.as_ref().map(|iv| iv[j]);
            let verdict = match interval {
                Some((lo, hi)) if lo < c && hi >= c => Verdict::Indeterminate,
                Some((lo, _)) if lo >= c => Verdict::Oomphy,
                Some(_) => Verdict::NotOomphy,
                None if proportion >= c => Verdict::Oomphy,
                None => Verdict::NotOomphy,
            };
            OomphEntry {
                label: label.clone(),
                proportion,
                interval,
                verdict,
            }
        })
        .collect();
    Ok(OomphAssessment { cutoff, entries })
}
