//! Weighted moment model and subset R² queries.
//!
//! Everything linear-model related in this crate is a function of the
//! correlation matrix of `(y, x_1, ..., x_n)` and the sample size. Subset R²
//! is the squared multiple correlation `r_Sy' C_SS⁺ r_Sy`, evaluated through a
//! pivoted Cholesky factorization so exactly collinear subsets stay defined.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::PivotedCholesky;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentModel<T> {
    n_obs: usize,
    response_name: String,
    var_names: Vec<String>,
    /// (n+1)×(n+1), row-major, index 0 is the response.
    corr: Vec<T>,
    sd: Vec<T>,
    means: Vec<T>,
}

impl<T: Scalar> MomentModel<T> {
    /// Builds a model directly from a correlation matrix over `(y, x_1..x_n)`.
    /// Means are set to zero and standard deviations to one.
    pub fn from_correlations(
        n_obs: usize,
        response_name: impl Into<String>,
        var_names: Vec<String>,
        corr: Vec<T>,
    ) -> Result<Self> {
        let dim = var_names.len() + 1;
        if var_names.is_empty() {
            return Err(Error::InvalidArgument("need at least one regressor".into()));
        }
        if corr.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "correlation matrix must be {dim}x{dim}"
            )));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        for i in 0..dim {
            if (corr[i * dim + i] - T::one()).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {i} is not 1"
                )));
            }
            for j in 0..dim {
                let v = corr[i * dim + j];
                if !v.is_finite() || v.abs() > T::one() + tol {
                    return Err(Error::InvalidArgument(format!(
                        "correlation ({i},{j}) outside [-1, 1]"
                    )));
                }
                if (v - corr[j * dim + i]).abs() > tol {
                    return Err(Error::InvalidArgument(
                        "correlation matrix not symmetric".into(),
                    ));
                }
            }
        }
        Ok(MomentModel {
            n_obs,
            response_name: response_name.into(),
            var_names,
            corr,
            sd: vec![T::one(); dim],
            means: vec![T::zero(); dim],
        })
    }

    /// Model from response correlations `r_xy` and the regressor correlation
    /// matrix `r_xx` (row-major n×n). Names default to `x1..xn`.
    pub fn from_parts(n_obs: usize, r_xy: &[T], r_xx: &[T]) -> Result<Self> {
        let n = r_xy.len();
        if r_xx.len() != n * n {
            return Err(Error::InvalidArgument("r_xx must be n x n".into()));
        }
        let dim = n + 1;
        let mut corr = vec![T::zero(); dim * dim];
        corr[0] = T::one();
        for i in 0..n {
            corr[i + 1] = r_xy[i];
            corr[(i + 1) * dim] = r_xy[i];
            for j in 0..n {
                corr[(i + 1) * dim + j + 1] = r_xx[i * n + j];
            }
        }
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        Self::from_correlations(n_obs, "y", names, corr)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_regressors(&self) -> usize {
        self.var_names.len()
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Full correlation matrix over `(y, x_1..x_n)`, row-major.
    pub fn corr(&self) -> &[T] {
        &self.corr
    }

    /// Standard deviations of `(y, x_1..x_n)`.
    pub fn sd(&self) -> &[T] {
        &self.sd
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    fn dim(&self) -> usize {
        self.var_names.len() + 1
    }

    pub fn response_correlation(&self, j: usize) -> T {
        self.corr[j + 1]
    }

    pub fn regressor_correlation(&self, i: usize, j: usize) -> T {
        self.corr[(i + 1) * self.dim() + j + 1]
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        let n = self.n_regressors();
        match idx.iter().find(|&&j| j >= n) {
            Some(&j) => Err(Error::IndexOutOfRange { index: j, n }),
            None => Ok(()),
        }
    }

    /// R² of the regression of y on the listed regressors (0-based).
    pub fn subset_r2(&self, subset: &[usize]) -> Result<T> {
        self.check(subset)?;
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        Ok(self.r2_unchecked(&s))
    }

    /// R² for the regressors whose bits are set in `mask`.
    pub fn r2_mask(&self, mask: u64) -> T {
        let idx: Vec<usize> = (0..self.n_regressors())
            .filter(|j| mask >> j & 1 == 1)
            .collect();
        self.r2_unchecked(&idx)
    }

    pub fn full_r2(&self) -> T {
        let all: Vec<usize> = (0..self.n_regressors()).collect();
        self.r2_unchecked(&all)
    }

    pub(crate) fn r2_unchecked(&self, s: &[usize]) -> T {
        let k = s.len();
        if k == 0 {
            return T::zero();
        }
        let dim = self.dim();
        let mut a = Vec::with_capacity(k * k);
        for &i in s {
            for &j in s {
                a.push(self.corr[(i + 1) * dim + j + 1]);
            }
        }
        let r: Vec<T> = s.iter().map(|&j| self.corr[j + 1]).collect();
        let q = PivotedCholesky::factor(a, k).quad_form(&r);
        q.max(T::zero()).min(T::one())
    }

    /// R²(given ∪ added) − R²(given), clamped at zero within the slack.
    pub fn seq_r2(&self, added: &[usize], given: &[usize]) -> Result<T> {
        self.check(added)?;
        self.check(given)?;
        if added.is_empty() {
            return Err(Error::InvalidArgument("added set is empty".into()));
        }
        if let Some(j) = added.iter().find(|j| given.contains(j)) {
            return Err(Error::InvalidArgument(format!(
                "regressor {j} is both added and given"
            )));
        }
        let mut union: Vec<usize> = given.iter().chain(added).copied().collect();
        union.sort_unstable();
        union.dedup();
        let mut g = given.to_vec();
        g.sort_unstable();
        g.dedup();
        clamp_increment(self.r2_unchecked(&union) - self.r2_unchecked(&g))
    }

    /// Model over a re-ordered subset of regressors: `order[k]` becomes the
    /// new regressor `k`.
    pub fn reorder(&self, order: &[usize]) -> Result<Self> {
        self.check(order)?;
        let dim = self.dim();
        let map: Vec<usize> = std::iter::once(0)
            .chain(order.iter().map(|j| j + 1))
            .collect();
        let nd = map.len();
        let mut corr = vec![T::zero(); nd * nd];
        for (a, &i) in map.iter().enumerate() {
            for (b, &j) in map.iter().enumerate() {
                corr[a * nd + b] = self.corr[i * dim + j];
            }
        }
        Ok(MomentModel {
            n_obs: self.n_obs,
            response_name: self.response_name.clone(),
            var_names: order.iter().map(|&j| self.var_names[j].clone()).collect(),
            corr,
            sd: map.iter().map(|&i| self.sd[i]).collect(),
            means: map.iter().map(|&i| self.means[i]).collect(),
        })
    }
}

/// Negative increments within the slack become 0; larger ones are a failure.
pub(crate) fn clamp_increment<T: Scalar>(d: T) -> Result<T> {
    if d >= T::zero() {
        Ok(d)
    } else if d >= -T::r2_slack() {
        Ok(T::zero())
    } else {
        Err(Error::Numerical(format!(
            "sequential R² increment {d} is negative"
        )))
    }
}

/// Weighted means, standard deviations and Pearson correlations.
///
/// Weights act as frequency weights: integer weights give the same model as
/// duplicating rows. The variance denominator is `Σw − 1`.
pub fn moments<T: Scalar>(d: &Dataset<T>) -> Result<MomentModel<T>> {
    let m = d.n_obs();
    let n = d.n_regressors();
    let ones;
    let w: &[T] = match d.weights() {
        Some(w) => w,
        None => {
            ones = vec![T::one(); m];
            &ones
        }
    };
    let wsum: T = w.iter().copied().sum();
    let denom = if wsum > T::one() {
        wsum - T::one()
    } else {
        wsum
    };

    let mut names = vec![d.response_name().to_string()];
    let mut cols: Vec<&[T]> = vec![d.response()];
    for j in 0..n {
        names.push(d.regressor_name(j).to_string());
        cols.push(d.regressor(j));
    }

    let mut means = Vec::with_capacity(n + 1);
    let mut centered: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    for (name, col) in names.iter().zip(&cols) {
        let first = col
            .iter()
            .zip(w)
            .find(|(_, &wi)| wi > T::zero())
            .map(|(v, _)| *v);
        let constant = col
            .iter()
            .zip(w)
            .filter(|(_, &wi)| wi > T::zero())
            .all(|(v, _)| Some(*v) == first);
        if constant {
            return Err(Error::ZeroVariance(name.clone()));
        }
        let mean = col.iter().zip(w).map(|(&x, &wi)| x * wi).sum::<T>() / wsum;
        means.push(mean);
        centered.push(col.iter().map(|&x| x - mean).collect());
    }

    let dim = n + 1;
    let mut cov = vec![T::zero(); dim * dim];
    for a in 0..dim {
        for b in a..dim {
            let s: T = centered[a]
                .iter()
                .zip(&centered[b])
                .zip(w)
                .map(|((&u, &v), &wi)| wi * u * v)
                .sum::<T>()
                / denom;
            cov[a * dim + b] = s;
            cov[b * dim + a] = s;
        }
    }
    let sd: Vec<T> = (0..dim).map(|a| cov[a * dim + a].sqrt()).collect();
    for (a, s) in sd.iter().enumerate() {
        if !(*s > T::zero()) {
            return Err(Error::ZeroVariance(names[a].clone()));
        }
    }
    let mut corr = vec![T::zero(); dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            corr[a * dim + b] = if a == b {
                T::one()
            } else {
                (cov[a * dim + b] / (sd[a] * sd[b]))
                    .max(-T::one())
                    .min(T::one())
            };
        }
    }
    Ok(MomentModel {
        n_obs: m,
        response_name: names[0].clone(),
        var_names: names[1..].to_vec(),
        corr,
        sd,
        means,
    })
}
