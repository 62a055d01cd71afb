//! Shapley-value decompositions of R²: exact LMG (subset form), the grouped
//! (Owen) variant, the all-orders oracle, Monte Carlo sampling over orders and
//! the Johnson relative-weight approximation.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{singleton_players, GroupSpec, Player};
use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::moments::{clamp_increment, MomentModel};
use crate::result::{proportions_of, ImportanceResult, Method};
use crate::scalar::Scalar;

/// Default cap on the number of players for exact enumeration (2^p subsets).
pub const DEFAULT_MAX_PLAYERS: usize = 20;

/// Factorial guard for the all-orders oracle.
pub const ORACLE_MAX_N: usize = 8;

/// Weight of a size-`m_sub` coalition in the subset form of the Shapley value,
/// `m_sub! (n - m_sub - 1)! / n!`, kept exact.
pub fn gamma_weight(n: usize, m_sub: usize) -> Result<Ratio<u128>> {
    if m_sub >= n {
        return Err(Error::InvalidArgument(format!(
            "subset size {m_sub} must be below n = {n}"
        )));
    }
    // m!(n-m-1)!/n! = 1 / (n * C(n-1, m))
    let mut binom: u128 = 1;
    let k = m_sub.min(n - 1 - m_sub) as u128;
    let top = (n - 1) as u128;
    for i in 0..k {
        binom = binom
            .checked_mul(top - i)
            .ok_or_else(|| Error::InvalidArgument(format!("n = {n} overflows exact weights")))?
            / (i + 1);
    }
    let den = binom
        .checked_mul(n as u128)
        .ok_or_else(|| Error::InvalidArgument(format!("n = {n} overflows exact weights")))?;
    Ok(Ratio::new(1, den))
}

pub(crate) fn ratio_to_scalar<T: Scalar>(r: &Ratio<u128>) -> T {
    let num = T::from_u128(*r.numer()).expect("representable");
    let den = T::from_u128(*r.denom()).expect("representable");
    num / den
}

/// Options for [`lmg_exact`].
#[derive(Debug, Clone)]
pub struct LmgSettings {
    pub max_players: usize,
}

impl Default for LmgSettings {
    fn default() -> Self {
        LmgSettings {
            max_players: DEFAULT_MAX_PLAYERS,
        }
    }
}

/// R² of every union of players, indexed by player bitmask.
pub(crate) fn coalition_r2_table<T: Scalar>(mm: &MomentModel<T>, players: &[Player]) -> Vec<T> {
    let p = players.len();
    (0u64..1 << p)
        .into_par_iter()
        .map(|mask| {
            let mut idx: Vec<usize> = (0..p)
                .filter(|k| mask >> k & 1 == 1)
                .flat_map(|k| players[k].members.iter().copied())
                .collect();
            idx.sort_unstable();
            mm.r2_unchecked(&idx)
        })
        .collect()
}

/// Exact LMG by subset enumeration. With `groups`, each group is a single
/// player and the result is the Owen-style grouped decomposition.
pub fn lmg_exact<T: Scalar>(
    mm: &MomentModel<T>,
    groups: Option<&GroupSpec>,
    settings: &LmgSettings,
) -> Result<ImportanceResult<T>> {
    let players = match groups {
        Some(g) => {
            GroupSpec::new(g.groups.clone(), mm.n_regressors())?;
            g.players(mm.var_names())
        }
        None => singleton_players(mm.var_names()),
    };
    let p = players.len();
    if p > settings.max_players || p > 63 {
        return Err(Error::TooManyPlayers {
            players: p,
            cap: settings.max_players.min(63),
        });
    }
    let table = coalition_r2_table(mm, &players);
    let gamma: Vec<T> = (0..p)
        .map(|k| gamma_weight(p, k).map(|r| ratio_to_scalar(&r)))
        .collect::<Result<_>>()?;

    let shares: Vec<T> = (0..p)
        .into_par_iter()
        .map(|j| {
            let bit = 1u64 << j;
            let mut acc = T::zero();
            for mask in 0u64..1 << p {
                if mask & bit != 0 {
                    continue;
                }
                let inc = clamp_increment(table[(mask | bit) as usize] - table[mask as usize])?;
                acc += gamma[mask.count_ones() as usize] * inc;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let total = table[(1usize << p) - 1];
    let method = if groups.is_some() {
        Method::Owen
    } else {
        Method::Lmg
    };
    let labels = players.iter().map(|p| p.label.clone()).collect();
    Ok(ImportanceResult::new(method, labels, shares, total)
        .with_setting("players", p)
        .with_setting("subsets_evaluated", 1u64 << p))
}

/// Sequential R² increments of each regressor along `order`.
///
/// Uses one incremental Cholesky pass in the given order; a regressor whose
/// residual variance given its predecessors vanishes contributes 0.
pub fn order_increments<T: Scalar>(mm: &MomentModel<T>, order: &[usize]) -> Vec<T> {
    let n = mm.n_regressors();
    let tol = T::lit(T::PIVOT_TOL);
    let mut inc = vec![T::zero(); n];
    // accepted variables, their Cholesky rows and forward-solved response terms
    let mut accepted: Vec<usize> = Vec::with_capacity(n);
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut z: Vec<T> = Vec::with_capacity(n);
    for &k in order {
        let mut l = Vec::with_capacity(accepted.len());
        for (i, &a) in accepted.iter().enumerate() {
            let mut s = mm.regressor_correlation(k, a);
            for (t, lt) in l.iter().enumerate() {
                s -= rows[i][t] * *lt;
            }
            l.push(s / rows[i][i]);
        }
        let d = T::one() - l.iter().map(|&v| v * v).sum::<T>();
        if !(d > tol) {
            continue;
        }
        let diag = d.sqrt();
        let mut s = mm.response_correlation(k);
        for (t, lt) in l.iter().enumerate() {
            s -= *lt * z[t];
        }
        let zk = s / diag;
        inc[k] = zk * zk;
        l.push(diag);
        rows.push(l);
        z.push(zk);
        accepted.push(k);
    }
    inc
}

fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// The permutation of `0..n` with lexicographic rank `rank`.
pub fn nth_permutation(n: usize, mut rank: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i).expect("small n");
        let k = (rank / f) as usize;
        rank %= f;
        out.push(pool.remove(k));
    }
    out
}

/// LMG as the plain average of sequential increments over all `n!` orders.
/// Only meant as a cross-check of [`lmg_exact`].
pub fn lmg_permutation_oracle<T: Scalar>(mm: &MomentModel<T>) -> Result<ImportanceResult<T>> {
    let n = mm.n_regressors();
    if n > ORACLE_MAX_N {
        return Err(Error::FactorialGuard {
            n,
            cap: ORACLE_MAX_N,
            what: "the permutation oracle",
        });
    }
    let count = factorial(n).expect("guarded");
    // summed in blocks of SAMPLE_BLOCK ranks, blocks added in rank order
    let mut sums = vec![T::zero(); n];
    let mut start = 0;
    while start < count {
        let end = (start + SAMPLE_BLOCK as u64).min(count);
        let mut block = vec![T::zero(); n];
        for rank in start..end {
            let inc = order_increments(mm, &nth_permutation(n, rank));
            for (s, v) in block.iter_mut().zip(inc) {
                *s += v;
            }
        }
        for (s, b) in sums.iter_mut().zip(block) {
            *s += b;
        }
        start = end;
    }
    let denom = T::from_u64(count).expect("small");
    let shares = sums.into_iter().map(|s| s / denom).collect();
    Ok(
        ImportanceResult::new(Method::Lmg, mm.var_names().to_vec(), shares, mm.full_r2())
            .with_setting("orders", count),
    )
}

/// How orders are drawn for [`lmg_sampled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSampling {
    /// `k` independent uniform orders.
    WithReplacement(usize),
    /// `k` distinct orders (`k >= n!` means every order once).
    WithoutReplacement(usize),
}

const SAMPLE_BLOCK: usize = 256;

#[derive(Clone)]
struct Moments1<T> {
    count: usize,
    sum: Vec<T>,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Scalar> Moments1<T> {
    fn empty(n: usize) -> Self {
        Moments1 {
            count: 0,
            sum: vec![T::zero(); n],
            mean: vec![T::zero(); n],
            m2: vec![T::zero(); n],
        }
    }

    fn push(&mut self, x: &[T]) {
        self.count += 1;
        let c = T::from_usize_lossy(self.count);
        for (j, &v) in x.iter().enumerate() {
            self.sum[j] += v;
            let delta = v - self.mean[j];
            self.mean[j] += delta / c;
            self.m2[j] += delta * (v - self.mean[j]);
        }
    }

    fn merge(mut self, o: &Self) -> Self {
        if o.count == 0 {
            return self;
        }
        if self.count == 0 {
            return o.clone();
        }
        let (na, nb) = (
            T::from_usize_lossy(self.count),
            T::from_usize_lossy(o.count),
        );
        let nt = na + nb;
        for j in 0..self.mean.len() {
            self.sum[j] += o.sum[j];
            let delta = o.mean[j] - self.mean[j];
            self.mean[j] += delta * nb / nt;
            self.m2[j] += o.m2[j] + delta * delta * na * nb / nt;
        }
        self.count += o.count;
        self
    }
}

fn sampled_order(n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Monte Carlo LMG over random orders.
///
/// Each order `i` gets its own ChaCha stream `(seed, i)`, and blocks of orders
/// are reduced in index order, so the result does not depend on how many
/// worker threads run. `raw_shares` holds the plain means; `shares` are
/// rescaled to sum to the exact full-model R².
pub fn lmg_sampled<T: Scalar>(
    mm: &MomentModel<T>,
    sampling: OrderSampling,
    seed: u64,
) -> Result<ImportanceResult<T>> {
    let n = mm.n_regressors();
    let (k, orders): (usize, Option<Vec<u64>>) = match sampling {
        OrderSampling::WithReplacement(k) => (k, None),
        OrderSampling::WithoutReplacement(k) => {
            let total = factorial(n)
                .filter(|&t| t <= usize::MAX as u64 && t <= 1 << 32)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "sampling without replacement needs n! to be enumerable (n = {n})"
                    ))
                })?;
            let mut ranks: Vec<u64> = if k as u64 >= total {
                (0..total).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rand::seq::index::sample(&mut rng, total as usize, k)
                    .into_iter()
                    .map(|r| r as u64)
                    .collect()
            };
            ranks.sort_unstable();
            (ranks.len(), Some(ranks))
        }
    };
    if k == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }

    let blocks: Vec<Moments1<T>> = (0..k.div_ceil(SAMPLE_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = Moments1::empty(n);
            for i in b * SAMPLE_BLOCK..((b + 1) * SAMPLE_BLOCK).min(k) {
                let order = match &orders {
                    Some(r) => nth_permutation(n, r[i]),
                    None => sampled_order(n, seed, i as u64),
                };
                acc.push(&order_increments(mm, &order));
            }
            acc
        })
        .collect();
    let stats = blocks
        .iter()
        .fold(Moments1::empty(n), |acc, b| acc.merge(b));

    let kk = T::from_usize_lossy(k);
    let raw: Vec<T> = stats.sum.iter().map(|&s| s / kk).collect();
    let mut stderr: Vec<T> = if k > 1 {
        stats
            .m2
            .iter()
            .map(|&m2| (m2 / (kk - T::one())).sqrt() / kk.sqrt())
            .collect()
    } else {
        vec![T::nan(); n]
    };
    if let Some(r) = &orders {
        // finite population correction for draws without replacement
        let total = T::from_u64(factorial(n).expect("checked")).expect("small");
        let fpc = if total > T::one() {
            ((total - kk) / (total - T::one())).max(T::zero()).sqrt()
        } else {
            T::zero()
        };
        if r.len() as u64 == factorial(n).expect("checked") {
            stderr = vec![T::zero(); n];
        } else {
            stderr.iter_mut().for_each(|s| *s *= fpc);
        }
    }

    let total = mm.full_r2();
    let raw_sum: T = raw.iter().copied().sum();
    let shares: Vec<T> = if raw_sum > T::zero() {
        raw.iter().map(|&s| s * total / raw_sum).collect()
    } else {
        raw.clone()
    };
    let mut res = ImportanceResult::new(Method::LmgSampled, mm.var_names().to_vec(), shares, total);
    res.proportions = proportions_of(&res.shares, total);
    res.raw_shares = Some(raw);
    res.stderr = Some(stderr);
    res.seed = Some(seed);
    let (mode, requested) = match sampling {
        OrderSampling::WithReplacement(k) => ("with_replacement", k),
        OrderSampling::WithoutReplacement(k) => ("without_replacement", k),
    };
    Ok(res
        .with_setting("sampling", mode)
        .with_setting("orders_requested", requested)
        .with_setting("orders_used", k))
}

/// Johnson's relative weights: an approximation of LMG through the symmetric
/// square root of the regressor correlation matrix.
pub fn johnson_weights<T: Scalar>(mm: &MomentModel<T>) -> Result<ImportanceResult<T>> {
    let n = mm.n_regressors();
    let mut rxx = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            rxx[i * n + j] = mm.regressor_correlation(i, j);
        }
    }
    let eig = SymmetricEigen::new(rxx, n);
    let min = eig.values.iter().copied().fold(T::infinity(), T::min);
    if !(min > T::lit(T::PIVOT_TOL) * T::from_usize_lossy(n)) {
        return Err(Error::NotPositiveDefinite(min.as_f64()));
    }
    let v = &eig.vectors;
    let root: Vec<T> = eig.values.iter().map(|l| l.sqrt()).collect();
    // Λ = V diag(√λ) Vᵀ, b = V diag(1/√λ) Vᵀ r
    let mut lambda = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            lambda[i * n + j] = (0..n).map(|k| v[i * n + k] * root[k] * v[j * n + k]).sum();
        }
    }
    let r: Vec<T> = (0..n).map(|j| mm.response_correlation(j)).collect();
    let vt_r: Vec<T> = (0..n)
        .map(|k| (0..n).map(|i| v[i * n + k] * r[i]).sum::<T>() / root[k])
        .collect();
    let b: Vec<T> = (0..n)
        .map(|i| (0..n).map(|k| v[i * n + k] * vt_r[k]).sum())
        .collect();
    let shares: Vec<T> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| lambda[j * n + k] * lambda[j * n + k] * b[k] * b[k])
                .sum()
        })
        .collect();
    let mut res = ImportanceResult::new(
        Method::Johnson,
        mm.var_names().to_vec(),
        shares,
        mm.full_r2(),
    )
    .with_setting("approximates", "lmg");
    res.warnings
        .push("johnson relative weights approximate lmg; they are not exact shapley shares".into());
    Ok(res)
}
