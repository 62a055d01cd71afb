//! Proportional marginal variance decomposition.
//!
//! Two constructions live here and they do not agree in general:
//!
//! * [`pmvd_exact`] averages sequential increments over all `n!` orders with
//!   data-dependent weights `L(r) = Π_{i<n} (R²_N − R²_{prefix_i})⁻¹`. Orders
//!   whose remaining-variance factor vanishes would get infinite weight; they
//!   are handled as limit classes (more zero factors dominate, ties broken by
//!   the finite part), which gives regressors with no additional explanatory
//!   power a zero share.
//! * [`proportional_value`] runs the potential recursion
//!   `P(S) = R²_S / Σ_{j∈S} P(S∖j)⁻¹` over the `2^n` subsets and allocates
//!   `P(N) / P(N∖j)`.
//!
//! [`pmvd_cross_check`] reports the gap between the two.

use rayon::prelude::*;

use crate::dataset::singleton_players;
use crate::error::{Error, Result};
use crate::moments::{clamp_increment, MomentModel};
use crate::result::{ImportanceResult, Method};
use crate::scalar::Scalar;
use crate::shapley::{coalition_r2_table, nth_permutation};

pub const DEFAULT_PMVD_MAX_N: usize = 9;
pub const DEFAULT_PROPVAL_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PmvdSettings {
    /// `P(∅)` in the potential recursion.
    pub base_constant: f64,
    /// Value substituted for zero factors in the perturbation cross-check.
    pub epsilon_check: f64,
    /// Increments below this count as exact zeros.
    pub zero_tolerance: f64,
    pub max_orders_n: usize,
    pub max_subsets_n: usize,
}

impl Default for PmvdSettings {
    fn default() -> Self {
        PmvdSettings {
            base_constant: 1.0,
            epsilon_check: 1e-8,
            zero_tolerance: 1e-12,
            max_orders_n: DEFAULT_PMVD_MAX_N,
            max_subsets_n: DEFAULT_PROPVAL_MAX_N,
        }
    }
}

impl PmvdSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("base_constant", self.base_constant),
            ("epsilon_check", self.epsilon_check),
            ("zero_tolerance", self.zero_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Weight of one order as `ε^{-zero_factor_count} · exp(finite_log_weight)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderWeight<T> {
    pub order: Vec<usize>,
    pub zero_factor_count: usize,
    pub finite_log_weight: T,
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidArgument(format!(
            "order has {} entries, expected {n}",
            order.len()
        )));
    }
    for &j in order {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidArgument(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Weight and sequential increments of an order, from a subset R² table.
fn weigh_order<T: Scalar>(
    table: &[T],
    order: &[usize],
    zero_tol: T,
    perturb: Option<T>,
) -> Result<(usize, T, Vec<T>)> {
    let n = order.len();
    let full = table[(1usize << n) - 1];
    let mut inc = vec![T::zero(); n];
    let mut prefix = 0usize;
    let mut zeros = 0;
    let mut log_w = T::zero();
    for (i, &j) in order.iter().enumerate() {
        let next = prefix | 1 << j;
        inc[j] = clamp_increment(table[next] - table[prefix])?;
        prefix = next;
        if i + 1 < n {
            let f = clamp_increment(full - table[prefix])?;
            if f < zero_tol {
                match perturb {
                    Some(eps) => log_w -= eps.ln(),
                    None => zeros += 1,
                }
            } else {
                log_w -= f.ln();
            }
        }
    }
    Ok((zeros, log_w, inc))
}

fn check_pmvd_n<T: Scalar>(mm: &MomentModel<T>, settings: &PmvdSettings) -> Result<usize> {
    settings.validate()?;
    let n = mm.n_regressors();
    if n > settings.max_orders_n || n > 20 {
        return Err(Error::FactorialGuard {
            n,
            cap: settings.max_orders_n.min(20),
            what: "pmvd order enumeration",
        });
    }
    Ok(n)
}

fn r2_table<T: Scalar>(mm: &MomentModel<T>) -> Vec<T> {
    coalition_r2_table(mm, &singleton_players(mm.var_names()))
}

/// Weight of a single order (0-based regressor indices).
pub fn order_weight<T: Scalar>(
    mm: &MomentModel<T>,
    order: &[usize],
    settings: &PmvdSettings,
) -> Result<OrderWeight<T>> {
    let n = check_pmvd_n(
        mm,
        &PmvdSettings {
            max_orders_n: 20,
            ..settings.clone()
        },
    )?;
    check_order(order, n)?;
    let table = r2_table(mm);
    let (zeros, lw, _) = weigh_order(&table, order, T::lit(settings.zero_tolerance), None)?;
    Ok(OrderWeight {
        order: order.to_vec(),
        zero_factor_count: zeros,
        finite_log_weight: lw,
    })
}

/// Running weighted mean over orders in the dominant limit class.
#[derive(Debug, Clone)]
struct ClassAccumulator<T> {
    class: Option<usize>,
    max_log: T,
    weight: T,
    acc: Vec<T>,
}

impl<T: Scalar> ClassAccumulator<T> {
    fn new(n: usize) -> Self {
        ClassAccumulator {
            class: None,
            max_log: T::neg_infinity(),
            weight: T::zero(),
            acc: vec![T::zero(); n],
        }
    }

    fn absorb(&mut self, class: usize, log_w: T, weight: T, acc: &[T]) {
        match self.class {
            Some(c) if c > class => return,
            Some(c) if c == class => {}
            _ => {
                self.class = Some(class);
                self.max_log = log_w;
                self.weight = weight;
                self.acc = acc.to_vec();
                return;
            }
        }
        if log_w > self.max_log {
            let s = (self.max_log - log_w).exp();
            self.weight = self.weight * s + weight;
            for (a, v) in self.acc.iter_mut().zip(acc) {
                *a = *a * s + *v;
            }
            self.max_log = log_w;
        } else {
            let s = (log_w - self.max_log).exp();
            self.weight += weight * s;
            for (a, v) in self.acc.iter_mut().zip(acc) {
                *a += *v * s;
            }
        }
    }

    fn push(&mut self, class: usize, log_w: T, inc: &[T]) {
        self.absorb(class, log_w, T::one(), inc);
    }

    fn merge(mut self, other: &Self) -> Self {
        if let Some(c) = other.class {
            self.absorb(c, other.max_log, other.weight, &other.acc);
        }
        self
    }
}

const ORDER_CHUNK: u64 = 2048;

fn weighted_order_average<T: Scalar>(
    mm: &MomentModel<T>,
    settings: &PmvdSettings,
    perturb: Option<T>,
) -> Result<(Vec<T>, T)> {
    let n = mm.n_regressors();
    let table = r2_table(mm);
    let zero_tol = T::lit(settings.zero_tolerance);
    let count: u64 = (1..=n as u64).product();
    let chunks: Vec<ClassAccumulator<T>> = (0..count.div_ceil(ORDER_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = ClassAccumulator::new(n);
            for rank in c * ORDER_CHUNK..((c + 1) * ORDER_CHUNK).min(count) {
                let order = nth_permutation(n, rank);
                let (zeros, lw, inc) = weigh_order(&table, &order, zero_tol, perturb)?;
                acc.push(zeros, lw, &inc);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let total = chunks
        .iter()
        .fold(ClassAccumulator::new(n), |a, c| a.merge(c));
    if !(total.weight > T::zero()) || total.acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("pmvd order weights degenerate".into()));
    }
    let shares = total.acc.iter().map(|&a| a / total.weight).collect();
    Ok((shares, table[(1usize << n) - 1]))
}

/// PMVD over all orders with limit-class weights.
pub fn pmvd_exact<T: Scalar>(
    mm: &MomentModel<T>,
    settings: &PmvdSettings,
) -> Result<ImportanceResult<T>> {
    check_pmvd_n(mm, settings)?;
    let (shares, total) = weighted_order_average(mm, settings, None)?;
    Ok(
        ImportanceResult::new(Method::Pmvd, mm.var_names().to_vec(), shares, total)
            .with_setting("zero_tolerance", settings.zero_tolerance)
            .with_setting("weights", "limit_classes"),
    )
}

/// PMVD with each zero factor replaced by `epsilon_check` instead of the
/// limit rule. Used to confirm the limit classes.
pub fn pmvd_perturbed<T: Scalar>(
    mm: &MomentModel<T>,
    settings: &PmvdSettings,
) -> Result<ImportanceResult<T>> {
    check_pmvd_n(mm, settings)?;
    let eps = T::lit(settings.epsilon_check);
    let (shares, total) = weighted_order_average(mm, settings, Some(eps))?;
    Ok(
        ImportanceResult::new(Method::Pmvd, mm.var_names().to_vec(), shares, total)
            .with_setting("zero_tolerance", settings.zero_tolerance)
            .with_setting("weights", format!("perturbed:{}", settings.epsilon_check)),
    )
}

/// Proportional value from the potential recursion over all subsets.
///
/// Subsets with `R²_S` below `zero_tolerance` are treated as `ε` and carried
/// as an exponent of `ε` alongside a finite coefficient; allocations whose
/// ε-exponent is positive are exactly zero in the limit.
pub fn proportional_value<T: Scalar>(
    mm: &MomentModel<T>,
    settings: &PmvdSettings,
) -> Result<ImportanceResult<T>> {
    settings.validate()?;
    let n = mm.n_regressors();
    if n > settings.max_subsets_n || n > 30 {
        return Err(Error::TooManyPlayers {
            players: n,
            cap: settings.max_subsets_n.min(30),
        });
    }
    let table = r2_table(mm);
    let zero_tol = T::lit(settings.zero_tolerance);
    let size = 1usize << n;
    let mut exp = vec![0u32; size];
    let mut coef = vec![T::zero(); size];
    coef[0] = T::lit(settings.base_constant);

    let describe = |mask: usize| -> String {
        let names: Vec<&str> = (0..n)
            .filter(|j| mask >> j & 1 == 1)
            .map(|j| mm.var_names()[j].as_str())
            .collect();
        format!("{{{}}}", names.join(", "))
    };

    // numeric order visits every S∖j before S
    for mask in 1..size {
        let mut max_exp = 0u32;
        let mut inv_sum = T::zero();
        for j in (0..n).filter(|j| mask >> j & 1 == 1) {
            let sub = mask & !(1 << j);
            match exp[sub].cmp(&max_exp) {
                std::cmp::Ordering::Greater => {
                    max_exp = exp[sub];
                    inv_sum = T::one() / coef[sub];
                }
                std::cmp::Ordering::Equal => inv_sum += T::one() / coef[sub],
                std::cmp::Ordering::Less => {}
            }
        }
        let v = table[mask];
        let (e, c) = if v < zero_tol {
            (max_exp + 1, T::one() / inv_sum)
        } else {
            (max_exp, v / inv_sum)
        };
        if !(c.is_finite() && c > T::zero()) {
            return Err(Error::Numerical(format!(
                "proportional value potential undefined at subset {}",
                describe(mask)
            )));
        }
        exp[mask] = e;
        coef[mask] = c;
    }

    let full = size - 1;
    let shares: Vec<T> = (0..n)
        .map(|j| {
            let sub = full & !(1 << j);
            if exp[full] > exp[sub] {
                T::zero()
            } else {
                coef[full] / coef[sub]
            }
        })
        .collect();
    let total = table[full];
    let res = ImportanceResult::new(
        Method::ProportionalValue,
        mm.var_names().to_vec(),
        shares,
        total,
    )
    .with_setting("base_constant", settings.base_constant)
    .with_setting("zero_tolerance", settings.zero_tolerance);
    let tol = T::lit(1e-9).max(T::r2_slack());
    res.check_decomposition(tol)?;
    Ok(res)
}

/// Side-by-side comparison of the order-weighted PMVD and the recursion.
#[derive(Debug, Clone)]
pub struct PmvdCrossCheck<T> {
    pub pmvd: ImportanceResult<T>,
    pub proportional: ImportanceResult<T>,
    /// Largest absolute share difference.
    pub max_abs_difference: T,
    /// `max_abs_difference / R²` (0 when R² is 0).
    pub relative_difference: T,
}

impl<T: Scalar> PmvdCrossCheck<T> {
    pub fn disagrees(&self, relative_tol: T) -> bool {
        self.relative_difference > relative_tol
    }
}

pub fn pmvd_cross_check<T: Scalar>(
    mm: &MomentModel<T>,
    settings: &PmvdSettings,
) -> Result<PmvdCrossCheck<T>> {
    let pmvd = pmvd_exact(mm, settings)?;
    let proportional = proportional_value(mm, settings)?;
    let max_abs_difference = pmvd
        .shares
        .iter()
        .zip(&proportional.shares)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    let relative_difference = if pmvd.total > T::zero() {
        max_abs_difference / pmvd.total
    } else {
        T::zero()
    };
    Ok(PmvdCrossCheck {
        pmvd,
        proportional,
        max_abs_difference,
        relative_difference,
    })
}
