//! Weighted least squares with an intercept.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::linalg::PivotedQr;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearFit<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
    /// Weighted residual sum of squares.
    pub sse: T,
}

/// Fits `y ~ 1 + x_1 + ... + x_n` by a pivoted QR of the centered,
/// √w-scaled design. Exactly collinear regressors get coefficient 0.
pub fn fit_least_squares<T: Scalar>(d: &Dataset<T>) -> Result<LinearFit<T>> {
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
    let wmean = |c: &[T]| c.iter().zip(w).map(|(&x, &wi)| x * wi).sum::<T>() / wsum;

    let y = d.response();
    let ybar = wmean(y);
    let xbar: Vec<T> = (0..n).map(|j| wmean(d.regressor(j))).collect();
    let sw: Vec<T> = w.iter().map(|wi| wi.sqrt()).collect();
    let xc: Vec<Vec<T>> = (0..n)
        .map(|j| {
            d.regressor(j)
                .iter()
                .zip(&sw)
                .map(|(&v, &s)| (v - xbar[j]) * s)
                .collect()
        })
        .collect();
    let yc: Vec<T> = y.iter().zip(&sw).map(|(&v, &s)| (v - ybar) * s).collect();
    let coefficients = PivotedQr::factor(xc).solve(&yc);
    let intercept = ybar
        - coefficients
            .iter()
            .zip(&xbar)
            .map(|(&b, &mx)| b * mx)
            .sum::<T>();
    let fitted: Vec<T> = (0..m)
        .map(|i| {
            intercept
                + (0..n)
                    .map(|j| coefficients[j] * d.regressor(j)[i])
                    .sum::<T>()
        })
        .collect();
    let residuals: Vec<T> = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
    let sse = residuals.iter().zip(w).map(|(&r, &wi)| wi * r * r).sum();
    Ok(LinearFit {
        intercept,
        coefficients,
        fitted,
        residuals,
        sse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_plane() {
        let x1 = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let x2 = vec![1.0, -1.0, 0.5, 2.0, 0.0, 3.0];
        let y: Vec<f64> = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| 2.0 + 3.0 * a - 0.5 * b)
            .collect();
        let d = Dataset::from_response_and_regressors(
            "y",
            y,
            vec![("x1".into(), x1), ("x2".into(), x2)],
        )
        .unwrap();
        let f = fit_least_squares(&d).unwrap();
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!((f.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((f.coefficients[1] + 0.5).abs() < 1e-12);
        assert!(f.sse < 1e-20);
    }
}
