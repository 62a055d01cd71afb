//! Shared generators and independent least-squares oracles.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use relimp::{moments, Dataset, MomentModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn dataset(y: Vec<f64>, xs: Vec<Vec<f64>>) -> Dataset<f64> {
    let regs = names(xs.len()).into_iter().zip(xs).collect();
    Dataset::from_response_and_regressors("y", y, regs).unwrap()
}

/// Correlated Gaussian regressors (random mixing) and a linear response with
/// random coefficients plus unit noise.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset<f64> {
    let mix: Vec<f64> = (0..n * n).map(|_| rng.random_range(-0.8..0.8)).collect();
    let beta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let mut xs = vec![vec![0.0; m]; n];
    let mut y = vec![0.0; m];
    for i in 0..m {
        let z: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        for j in 0..n {
            let mut v = z[j];
            for k in 0..n {
                if k != j {
                    v += mix[j * n + k] * z[k];
                }
            }
            xs[j][i] = v;
        }
        y[i] = (0..n).map(|j| beta[j] * xs[j][i]).sum::<f64>() + normal(rng);
    }
    dataset(y, xs)
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> MomentModel<f64> {
    moments(&random_dataset(rng, n, 60)).unwrap()
}

/// Intercept plus the chosen regressor columns.
fn design(d: &Dataset<f64>, subset: &[usize]) -> DMatrix<f64> {
    let m = d.n_obs();
    DMatrix::from_fn(m, subset.len() + 1, |i, c| {
        if c == 0 {
            1.0
        } else {
            d.regressor(subset[c - 1])[i]
        }
    })
}

/// Coefficients (intercept first) and SSE of an unweighted least-squares fit.
pub fn ols(d: &Dataset<f64>, subset: &[usize]) -> (DVector<f64>, f64) {
    let x = design(d, subset);
    let y = DVector::from_column_slice(d.response());
    let beta = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
    let resid = &y - &x * &beta;
    (beta, resid.norm_squared())
}

pub fn ols_r2(d: &Dataset<f64>, subset: &[usize]) -> f64 {
    let y = d.response();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    1.0 - ols(d, subset).1 / sst
}

/// Squared t-statistic of regressor `j` in the full model.
pub fn ols_t2(d: &Dataset<f64>, j: usize) -> f64 {
    let n = d.n_regressors();
    let m = d.n_obs();
    let all: Vec<usize> = (0..n).collect();
    let x = design(d, &all);
    let (beta, sse) = ols(d, &all);
    let sigma2 = sse / (m - n - 1) as f64;
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let se2 = sigma2 * xtx_inv[(j + 1, j + 1)];
    beta[j + 1] * beta[j + 1] / se2
}

pub fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Population moment model of `y = Σ β_j x_j + e` with `cov(x) = cxx`
/// (row-major) and `var(e) = s2`.
pub fn population_model(cxx: &[f64], beta: &[f64], s2: f64) -> MomentModel<f64> {
    let n = beta.len();
    let cxy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| cxx[i * n + k] * beta[k]).sum())
        .collect();
    let vy: f64 = (0..n).map(|i| beta[i] * cxy[i]).sum::<f64>() + s2;
    let dim = n + 1;
    let mut corr = vec![0.0; dim * dim];
    corr[0] = 1.0;
    for i in 0..n {
        let r = cxy[i] / (vy * cxx[i * n + i]).sqrt();
        corr[i + 1] = r;
        corr[(i + 1) * dim] = r;
        for k in 0..n {
            corr[(i + 1) * dim + k + 1] = if i == k {
                1.0
            } else {
                cxx[i * n + k] / (cxx[i * n + i] * cxx[k * n + k]).sqrt()
            };
        }
    }
    MomentModel::from_correlations(1_000_000, "y", names(n), corr).unwrap()
}

/// Random symmetric positive-definite matrix `A Aᵀ + 0.2 I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            c[i * n + k] = (0..n).map(|l| a[i * n + l] * a[k * n + l]).sum::<f64>()
                + if i == k { 0.2 } else { 0.0 };
        }
    }
    c
}
