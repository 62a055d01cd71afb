//! Out-of-bag error, OOB-R² and permutation importance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ForestModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-row average over the trees for which the row was out-of-bag.
#[derive(Debug, Clone, PartialEq)]
pub struct OobPredictions<T> {
    /// `None` for rows that were in-bag for every tree.
    pub predictions: Vec<Option<T>>,
    /// Number of OOB trees behind each prediction.
    pub tree_counts: Vec<usize>,
}

impl<T: Scalar> OobPredictions<T> {
    pub fn never_oob(&self) -> Vec<usize> {
        self.predictions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// Mean squared OOB error over the scored rows.
    pub fn mse(&self, y: &[T]) -> Result<T> {
        let (sse, count) = self.sse(y)?;
        Ok(sse / T::from_usize_lossy(count))
    }

    fn sse(&self, y: &[T]) -> Result<(T, usize)> {
        let mut sse = T::zero();
        let mut count = 0;
        for (p, &yi) in self.predictions.iter().zip(y) {
            if let Some(p) = p {
                sse += (yi - *p) * (yi - *p);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Numerical("no row is out-of-bag for any tree".into()));
        }
        Ok((sse, count))
    }

    /// `1 − SSE/SST`, both sums over the scored rows.
    pub fn r2(&self, y: &[T]) -> Result<T> {
        let (sse, count) = self.sse(y)?;
        let scored: Vec<T> = self
            .predictions
            .iter()
            .zip(y)
            .filter(|(p, _)| p.is_some())
            .map(|(_, &v)| v)
            .collect();
        let mean = scored.iter().copied().sum::<T>() / T::from_usize_lossy(count);
        let sst: T = scored.iter().map(|&v| (v - mean) * (v - mean)).sum();
        if !(sst > T::zero()) {
            return Err(Error::ZeroVariance("response over scored rows".into()));
        }
        Ok(T::one() - sse / sst)
    }
}

pub fn oob_predictions<T: Scalar>(f: &ForestModel<T>, d: &Dataset<T>) -> Result<OobPredictions<T>> {
    f.check_shape(d)?;
    let m = d.n_obs();
    let mut sums = vec![T::zero(); m];
    let mut counts = vec![0usize; m];
    for (t, tree) in f.trees.iter().enumerate() {
        for i in 0..m {
            if f.is_oob(t, i) {
                sums[i] += tree.predict(|j| d.regressor(j)[i]);
                counts[i] += 1;
            }
        }
    }
    let predictions = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s / T::from_usize_lossy(c)))
        .collect();
    Ok(OobPredictions {
        predictions,
        tree_counts: counts,
    })
}

pub fn oob_r2<T: Scalar>(f: &ForestModel<T>, d: &Dataset<T>) -> Result<T> {
    oob_predictions(f, d)?.r2(d.response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestImportance<T> {
    pub labels: Vec<String>,
    /// Mean over all trees of (permuted OOB MSE − OOB MSE); trees that do not
    /// split on a variable contribute 0.
    pub raw: Vec<T>,
    /// Non-negative shares summing to one; all zero when no raw value is
    /// positive.
    pub shares: Vec<T>,
    pub oob_r2: T,
    pub oob_mse: T,
    /// `per_tree[t][j]`, the tree-level differences behind `raw`.
    pub per_tree: Vec<Vec<T>>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn tree_mse<T: Scalar>(
    f: &ForestModel<T>,
    d: &Dataset<T>,
    t: usize,
    rows: &[usize],
    swapped: Option<(usize, &[T])>,
) -> T {
    let y = d.response();
    let tree = &f.trees[t];
    let sse: T = rows
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let pred = tree.predict(|j| match swapped {
                Some((v, vals)) if v == j => vals[k],
                _ => d.regressor(j)[i],
            });
            (y[i] - pred) * (y[i] - pred)
        })
        .sum();
    sse / T::from_usize_lossy(rows.len())
}

/// Permutation importance on out-of-bag rows.
///
/// For tree `t` and each variable it splits on, the variable is shuffled
/// among that tree's OOB rows (ChaCha stream `(seed, t·n + j)`) and the tree's
/// OOB MSE is recomputed. Trees with no OOB rows contribute 0.
pub fn permutation_importance<T: Scalar>(
    f: &ForestModel<T>,
    d: &Dataset<T>,
    seed: u64,
) -> Result<ForestImportance<T>> {
    f.check_shape(d)?;
    let n = d.n_regressors();
    let m = d.n_obs();
    let per_tree: Vec<Vec<T>> = (0..f.n_trees())
        .into_par_iter()
        .map(|t| {
            let mut row = vec![T::zero(); n];
            let oob: Vec<usize> = (0..m).filter(|&i| f.is_oob(t, i)).collect();
            if oob.is_empty() {
                return row;
            }
            let base = tree_mse(f, d, t, &oob, None);
            for &j in &f.used_vars[t] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((t * n + j) as u64);
                let mut vals: Vec<T> = oob.iter().map(|&i| d.regressor(j)[i]).collect();
                vals.shuffle(&mut rng);
                row[j] = tree_mse(f, d, t, &oob, Some((j, &vals))) - base;
            }
            row
        })
        .collect();
    let nt = T::from_usize_lossy(f.n_trees());
    let raw: Vec<T> = (0..n)
        .map(|j| per_tree.iter().map(|r| r[j]).sum::<T>() / nt)
        .collect();

    let oob = oob_predictions(f, d)?;
    let mut warnings = Vec::new();
    let never = oob.never_oob().len();
    if never > 0 {
        warnings.push(format!(
            "{never} rows were never out-of-bag and were not scored"
        ));
    }
    let shares = match importance_shares(&raw) {
        Ok((s, w)) => {
            warnings.extend(w);
            s
        }
        Err(Error::NoPositiveImportance) => {
            warnings.push("no variable has positive raw importance".into());
            vec![T::zero(); n]
        }
        Err(e) => return Err(e),
    };
    Ok(ForestImportance {
        labels: d.regressor_names(),
        raw,
        shares,
        oob_r2: oob.r2(d.response())?,
        oob_mse: oob.mse(d.response())?,
        per_tree,
        seed,
        warnings,
    })
}

/// Shares proportional to the positive part of the raw importances.
/// Returns a warning when negative values were clipped.
pub fn importance_shares<T: Scalar>(raw: &[T]) -> Result<(Vec<T>, Option<String>)> {
    let pos: Vec<T> = raw.iter().map(|&r| r.max(T::zero())).collect();
    let sum: T = pos.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(Error::NoPositiveImportance);
    }
    let warning = raw
        .iter()
        .any(|r| *r < T::zero())
        .then(|| "negative raw importances clipped to zero for shares".to_string());
    Ok((pos.into_iter().map(|p| p / sum).collect(), warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestOomph<T> {
    /// `share_j · OOB-R²`.
    pub scaled: Vec<T>,
    /// Normal-approximation intervals on the tree-level mean differences,
    /// multiplied by `OOB-R² / Σ max(raw, 0)`.
    pub intervals: Vec<(T, T)>,
    pub level: f64,
    pub warnings: Vec<String>,
}

/// Puts forest shares on an R²-like scale.
pub fn forest_oomph<T: Scalar>(fi: &ForestImportance<T>, level: f64) -> Result<ForestOomph<T>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let n = fi.raw.len();
    if !(fi.oob_r2 > T::zero()) {
        return Ok(ForestOomph {
            scaled: vec![T::zero(); n],
            intervals: vec![(T::zero(), T::zero()); n],
            level,
            warnings: vec![format!(
                "OOB-R² is {} (not positive); scaled importances reported as 0",
                fi.oob_r2
            )],
        });
    }
    let scaled = fi.shares.iter().map(|&s| s * fi.oob_r2).collect();
    let pos_sum: T = fi.raw.iter().map(|&r| r.max(T::zero())).sum();
    let factor = if pos_sum > T::zero() {
        fi.oob_r2 / pos_sum
    } else {
        T::zero()
    };
    let z = T::lit(Normal::standard().inverse_cdf(0.5 + level / 2.0));
    let nt = fi.per_tree.len();
    let intervals = (0..n)
        .map(|j| {
            let mean = fi.raw[j];
            let sd = if nt > 1 {
                (fi.per_tree
                    .iter()
                    .map(|r| (r[j] - mean) * (r[j] - mean))
                    .sum::<T>()
                    / T::from_usize_lossy(nt - 1))
                .sqrt()
            } else {
                T::zero()
            };
            let half = z * sd / T::from_usize_lossy(nt).sqrt();
            ((mean - half) * factor, (mean + half) * factor)
        })
        .collect();
    Ok(ForestOomph {
        scaled,
        intervals,
        level,
        warnings: Vec::new(),
    })
}
