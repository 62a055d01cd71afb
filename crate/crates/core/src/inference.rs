//! Bootstrap confidence intervals for linear-model importance shares.
//!
//! Two resampling schemes are supported: pairs (rows drawn with replacement)
//! and a fixed-design parametric scheme that keeps X, fits least squares once
//! and rebuilds y from the fitted values plus fresh normal errors with the
//! residual standard deviation. Intervals are percentile (type-7 quantiles)
//! or BCa.
//!
//! Replicate `b` draws from ChaCha stream `(seed, b)`, so results are
//! independent of the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::importance::ImportanceMethod;
use crate::moments::{moments, MomentModel};
use crate::regression::fit_least_squares;
use crate::result::ImportanceResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapScheme {
    Pairs,
    ResidualFixedDesign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    Percentile,
    Bca,
}

#[derive(Debug, Clone)]
pub struct BootstrapPlan {
    pub scheme: BootstrapScheme,
    pub replicates: usize,
    pub interval: IntervalKind,
    pub level: f64,
    pub seed: u64,
    pub method: ImportanceMethod,
}

impl BootstrapPlan {
    pub fn new(method: ImportanceMethod, replicates: usize, seed: u64) -> Self {
        BootstrapPlan {
            scheme: BootstrapScheme::Pairs,
            replicates,
            interval: IntervalKind::Percentile,
            level: 0.95,
            seed,
            method,
        }
    }

    /// Smallest replicate count that is not flagged as too low.
    pub fn recommended_replicates(&self) -> usize {
        let tail = (2.0 / (1.0 - self.level)).ceil() as usize;
        tail.max(100)
    }
}

/// Point estimate with intervals, plus the raw replicate draws.
#[derive(Debug, Clone)]
pub struct BootstrapOutcome<T> {
    pub result: ImportanceResult<T>,
    /// `replicates[b][j]`: share of variable `j` in replicate `b`.
    pub replicates: Vec<Vec<T>>,
    pub replicate_totals: Vec<T>,
    /// Degenerate resamples that were drawn again.
    pub redraws: usize,
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_type7<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sorted_copy<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite replicates"));
    s
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Equal-tailed percentile interval.
pub fn percentile_interval<T: Scalar>(replicates: &[T], level: f64) -> Result<(T, T)> {
    check_level(level)?;
    if replicates.len() < 2 {
        return Err(Error::InsufficientReplicates(format!(
            "percentile interval needs at least 2 replicates, got {}",
            replicates.len()
        )));
    }
    let s = sorted_copy(replicates);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile_type7(&s, alpha), quantile_type7(&s, 1.0 - alpha)))
}

/// BCa interval with its correction constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcaInterval<T> {
    pub lo: T,
    pub hi: T,
    pub z0: f64,
    pub acceleration: f64,
    /// All replicates were identical; the interval collapses to the point.
    pub degenerate: bool,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Bias-corrected and accelerated interval.
///
/// `z0 = Φ⁻¹(#{replicates < point} / B)`, with the fraction kept inside
/// `[1/(2B), 1 − 1/(2B)]`; the acceleration is the jackknife skewness
/// `Σd³ / (6 (Σd²)^{3/2})` with `d_i = mean(jack) − jack_i`.
pub fn bca_interval<T: Scalar>(
    replicates: &[T],
    point: T,
    jackknife: &[T],
    level: f64,
) -> Result<BcaInterval<T>> {
    check_level(level)?;
    if replicates.is_empty() {
        return Err(Error::InsufficientReplicates("no replicates".into()));
    }
    if jackknife.is_empty() {
        return Err(Error::InvalidArgument("empty jackknife sample".into()));
    }
    if replicates.iter().all(|r| *r == replicates[0]) {
        return Ok(BcaInterval {
            lo: point,
            hi: point,
            z0: 0.0,
            acceleration: 0.0,
            degenerate: true,
        });
    }
    let b = replicates.len() as f64;
    let below = replicates.iter().filter(|r| **r < point).count() as f64;
    let frac = (below / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let norm = std_normal();
    let z0 = norm.inverse_cdf(frac);

    let jk: Vec<f64> = jackknife.iter().map(|v| v.as_f64()).collect();
    let mean = jk.iter().sum::<f64>() / jk.len() as f64;
    let (s2, s3) = jk.iter().fold((0.0, 0.0), |(s2, s3), v| {
        let d = mean - v;
        (s2 + d * d, s3 + d * d * d)
    });
    let acceleration = if s2 > 0.0 {
        s3 / (6.0 * s2.powf(1.5))
    } else {
        0.0
    };

    let alpha = (1.0 - level) / 2.0;
    let adjust = |q: f64| {
        let z = norm.inverse_cdf(q);
        norm.cdf(z0 + (z0 + z) / (1.0 - acceleration * (z0 + z)))
    };
    let s = sorted_copy(replicates);
    let lo = quantile_type7(&s, adjust(alpha));
    let hi = quantile_type7(&s, adjust(1.0 - alpha));
    Ok(BcaInterval {
        lo: lo.min(hi),
        hi: lo.max(hi),
        z0,
        acceleration,
        degenerate: false,
    })
}

enum Resampler<T> {
    Pairs,
    Residual { fitted: Vec<T>, sigma: T },
}

impl<T: Scalar> Resampler<T> {
    fn draw(&self, d: &Dataset<T>, rng: &mut ChaCha8Rng) -> Result<Dataset<T>> {
        match self {
            Resampler::Pairs => {
                let m = d.n_obs();
                let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
                d.select_rows(&rows)
            }
            Resampler::Residual { fitted, sigma } => {
                let y = fitted
                    .iter()
                    .map(|&f| {
                        let e: f64 = StandardNormal.sample(rng);
                        f + *sigma * T::lit(e)
                    })
                    .collect();
                d.with_response(y)
            }
        }
    }
}

fn replicate_moments<T: Scalar>(
    d: &Dataset<T>,
    sampler: &Resampler<T>,
    seed: u64,
    b: usize,
    cap: usize,
) -> Result<(MomentModel<T>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    let mut redraws = 0;
    loop {
        let sample = sampler.draw(d, &mut rng)?;
        match moments(&sample) {
            Ok(mm) => return Ok((mm, redraws)),
            Err(Error::ZeroVariance(_)) => {
                redraws += 1;
                if redraws > cap {
                    return Err(Error::RedrawCapExceeded(redraws));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Bootstraps the chosen importance method on `d`.
pub fn bootstrap_importance<T: Scalar>(
    d: &Dataset<T>,
    plan: &BootstrapPlan,
) -> Result<BootstrapOutcome<T>> {
    let b_count = plan.replicates;
    if b_count < 2 {
        return Err(Error::InsufficientReplicates(format!(
            "need at least 2, got {b_count}"
        )));
    }
    check_level(plan.level)?;

    let mm = moments(d)?;
    let mut point = plan.method.compute(&mm)?;
    let p = point.len();

    let sampler = match plan.scheme {
        BootstrapScheme::Pairs => Resampler::Pairs,
        BootstrapScheme::ResidualFixedDesign => {
            let fit = fit_least_squares(d)?;
            let df = d.effective_obs() - T::from_usize_lossy(d.n_regressors() + 1);
            if !(df > T::zero()) {
                return Err(Error::NoResidualDf(
                    "residual bootstrap needs more observations than parameters".into(),
                ));
            }
            // an exact fit leaves only rounding residue; treat it as noiseless
            let y = d.response();
            let mean = y.iter().copied().sum::<T>() / T::from_usize_lossy(y.len());
            let sst: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sse = if fit.sse <= sst * T::epsilon() {
                T::zero()
            } else {
                fit.sse
            };
            Resampler::Residual {
                sigma: (sse / df).sqrt(),
                fitted: fit.fitted,
            }
        }
    };

    let cap = 10 * b_count;
    let tol = T::lit(1e-9).max(T::r2_slack());
    let reps: Vec<(Vec<T>, Vec<T>, T, usize)> = (0..b_count)
        .into_par_iter()
        .map(|b| {
            let (rmm, redraws) = replicate_moments(d, &sampler, plan.seed, b, cap)?;
            let r = plan.method.compute(&rmm)?;
            r.check_decomposition(tol)?;
            Ok((r.shares, r.proportions, r.total, redraws))
        })
        .collect::<Result<_>>()?;
    let redraws: usize = reps.iter().map(|r| r.3).sum();
    if redraws > cap {
        return Err(Error::RedrawCapExceeded(redraws));
    }

    let column = |j: usize, which: usize| -> Vec<T> {
        reps.iter()
            .map(|r| if which == 0 { r.0[j] } else { r.1[j] })
            .collect()
    };

    let (intervals, prop_intervals) = match plan.interval {
        IntervalKind::Percentile => {
            let a = (0..p)
                .map(|j| percentile_interval(&column(j, 0), plan.level))
                .collect::<Result<Vec<_>>>()?;
            let b = (0..p)
                .map(|j| percentile_interval(&column(j, 1), plan.level))
                .collect::<Result<Vec<_>>>()?;
            (a, b)
        }
        IntervalKind::Bca => {
            let jack: Vec<ImportanceResult<T>> = (0..d.n_obs())
                .into_par_iter()
                .map(|i| plan.method.compute(&moments(&d.without_row(i)?)?))
                .collect::<Result<_>>()?;
            let mut a = Vec::with_capacity(p);
            let mut b = Vec::with_capacity(p);
            for j in 0..p {
                let js: Vec<T> = jack.iter().map(|r| r.shares[j]).collect();
                let jp: Vec<T> = jack.iter().map(|r| r.proportions[j]).collect();
                let s = bca_interval(&column(j, 0), point.shares[j], &js, plan.level)?;
                let q = bca_interval(&column(j, 1), point.proportions[j], &jp, plan.level)?;
                if s.degenerate {
                    point
                        .warnings
                        .push(format!("{}: all replicates identical", point.labels[j]));
                }
                a.push((s.lo, s.hi));
                b.push((q.lo, q.hi));
            }
            (a, b)
        }
    };

    let bm1 = T::from_usize_lossy(b_count - 1);
    let stderr = (0..p)
        .map(|j| {
            let c = column(j, 0);
            let mean = c.iter().copied().sum::<T>() / T::from_usize_lossy(b_count);
            (c.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / bm1).sqrt()
        })
        .collect();

    if b_count < plan.recommended_replicates() {
        point.warnings.push(format!(
            "{b_count} replicates is below the recommended {}",
            plan.recommended_replicates()
        ));
    }
    if matches!(plan.method, ImportanceMethod::Pmvd(_)) {
        point
            .warnings
            .push("pmvd bootstrap intervals are typically wider than lmg intervals".into());
    }
    if redraws > 0 {
        point
            .warnings
            .push(format!("{redraws} degenerate resamples were redrawn"));
    }
    point.intervals = Some(intervals);
    point.proportion_intervals = Some(prop_intervals);
    point.stderr = Some(stderr);
    point.level = Some(plan.level);
    point.seed = Some(plan.seed);
    let point = point
        .with_setting("bootstrap_replicates", b_count)
        .with_setting(
            "bootstrap_scheme",
            match plan.scheme {
                BootstrapScheme::Pairs => "pairs",
                BootstrapScheme::ResidualFixedDesign => "residual_fixed_design",
            },
        )
        .with_setting(
            "interval",
            match plan.interval {
                IntervalKind::Percentile => "percentile",
                IntervalKind::Bca => "bca",
            },
        );

    Ok(BootstrapOutcome {
        result: point,
        replicate_totals: reps.iter().map(|r| r.2).collect(),
        replicates: reps.into_iter().map(|r| r.0).collect(),
        redraws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let s: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&s, 0.0), 1.0);
        assert_eq!(quantile_type7(&s, 1.0), 4.0);
        assert!((quantile_type7(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_type7(&s, 0.1) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn bca_degenerate() {
        let r = bca_interval(&[0.3; 20], 0.3, &[0.3; 5], 0.95).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.lo, r.hi), (0.3, 0.3));
    }

    #[test]
    fn bca_symmetric_is_percentile() {
        let reps: Vec<f64> = (-10..=10)
            .filter(|k| *k != 0)
            .map(|k| k as f64 * 0.01)
            .collect();
        let jack = [-0.2, -0.1, 0.0, 0.1, 0.2];
        let b = bca_interval(&reps, 0.0, &jack, 0.9).unwrap();
        let p = percentile_interval(&reps, 0.9).unwrap();
        assert_eq!(b.z0, 0.0);
        assert_eq!(b.acceleration, 0.0);
        assert!((b.lo - p.0).abs() < 1e-12 && (b.hi - p.1).abs() < 1e-12);
    }

    #[test]
    fn bca_definitional_fixture() {
        // pinned by a straight-from-definition script (scipy.stats.norm)
        let reps: [f64; 10] = [0.42, 0.51, 0.38, 0.47, 0.55, 0.49, 0.44, 0.60, 0.36, 0.52];
        let jack = [0.45, 0.48, 0.46, 0.50, 0.44, 0.47, 0.49, 0.43, 0.52, 0.46];
        let b = bca_interval(&reps, 0.47, &jack, 0.9).unwrap();
        assert!((b.z0 - -0.2533471031357997).abs() < 1e-12);
        assert!((b.acceleration - -0.017074694419062623).abs() < 1e-12);
        assert!((b.lo - 0.3624075928590038).abs() < 1e-10);
        assert!((b.hi - 0.5437140397844553).abs() < 1e-10);
    }

    #[test]
    fn percentile_needs_two() {
        assert!(percentile_interval(&[1.0], 0.95).is_err());
        assert!(percentile_interval(&[1.0, 2.0], 1.0).is_err());
    }
}
