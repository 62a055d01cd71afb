//! Small dense kernels: pivoted Cholesky, pivoted Householder QR and a cyclic
//! Jacobi eigensolver.
//!
//! Square matrices here are at most a few dozen rows (one row per regressor),
//! so they are row-major `Vec<T>` without any blocking; the QR works on tall
//! design matrices stored as columns.

#![allow(clippy::needless_range_loop)]

use crate::scalar::Scalar;

/// Cholesky factorization with symmetric (diagonal) pivoting.
///
/// Pivots whose updated diagonal falls below `PIVOT_TOL` times the largest
/// initial diagonal are treated as linearly dependent and dropped, so a
/// positive semi-definite input yields a rank-revealing factor.
#[derive(Debug, Clone)]
pub struct PivotedCholesky<T> {
    dim: usize,
    rank: usize,
    perm: Vec<usize>,
    // lower factor, row-major dim x dim; only columns < rank are meaningful
    l: Vec<T>,
}

impl<T: Scalar> PivotedCholesky<T> {
    pub fn factor(mut a: Vec<T>, dim: usize) -> Self {
        assert_eq!(a.len(), dim * dim);
        let mut perm: Vec<usize> = (0..dim).collect();
        let max_diag = (0..dim).map(|i| a[i * dim + i]).fold(T::zero(), T::max);
        let tol = T::lit(T::PIVOT_TOL) * max_diag.max(T::min_positive_value());
        let mut rank = 0;
        for k in 0..dim {
            let mut p = k;
            for i in k + 1..dim {
                if a[i * dim + i] > a[p * dim + p] {
                    p = i;
                }
            }
            if !(a[p * dim + p] > tol) {
                break;
            }
            if p != k {
                for c in 0..dim {
                    a.swap(k * dim + c, p * dim + c);
                }
                for r in 0..dim {
                    a.swap(r * dim + k, r * dim + p);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * dim + k].sqrt();
            a[k * dim + k] = pivot;
            for i in k + 1..dim {
                let v = a[i * dim + k] / pivot;
                a[i * dim + k] = v;
                a[k * dim + i] = v;
            }
            for i in k + 1..dim {
                let lik = a[i * dim + k];
                for j in k + 1..dim {
                    let ajk = a[j * dim + k];
                    a[i * dim + j] -= lik * ajk;
                }
            }
            rank += 1;
        }
        PivotedCholesky {
            dim,
            rank,
            perm,
            l: a,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn forward(&self, b: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut z: Vec<T> = (0..self.rank).map(|i| b[self.perm[i]]).collect();
        for i in 0..self.rank {
            let mut s = z[i];
            for j in 0..i {
                s -= self.l[i * d + j] * z[j];
            }
            z[i] = s / self.l[i * d + i];
        }
        z
    }

    /// `b' A⁺ b`, exact when `b` lies in the column space of `A`.
    pub fn quad_form(&self, b: &[T]) -> T {
        self.forward(b).into_iter().map(|z| z * z).sum()
    }

    /// Basic solution of `A x = b`: dependent coordinates are set to zero.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut y = self.forward(b);
        for i in (0..self.rank).rev() {
            let mut s = y[i];
            for j in i + 1..self.rank {
                s -= self.l[j * d + i] * y[j];
            }
            y[i] = s / self.l[i * d + i];
        }
        let mut x = vec![T::zero(); d];
        for (i, v) in y.into_iter().enumerate() {
            x[self.perm[i]] = v;
        }
        x
    }
}

/// Householder QR with column pivoting of a tall matrix given by columns.
///
/// Columns whose remaining norm falls below `sqrt(PIVOT_TOL)` times the
/// largest initial column norm are treated as dependent, matching the rank
/// decisions of [`PivotedCholesky`] on the cross-product matrix.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    cols: usize,
    rank: usize,
    perm: Vec<usize>,
    // reflector k acts on rows k.. and is stored in full length m
    reflectors: Vec<Vec<T>>,
    // upper triangle, r[j][i] for i <= j < rank
    r: Vec<Vec<T>>,
}

impl<T: Scalar> PivotedQr<T> {
    pub fn factor(mut a: Vec<Vec<T>>) -> Self {
        let cols = a.len();
        let m = a.first().map_or(0, Vec::len);
        let mut perm: Vec<usize> = (0..cols).collect();
        let sq = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>();
        let max_norm2 = a.iter().map(|c| sq(c)).fold(T::zero(), T::max);
        let tol2 = T::lit(T::PIVOT_TOL) * max_norm2.max(T::min_positive_value());
        let mut reflectors = Vec::new();
        let mut rank = 0;
        for k in 0..cols.min(m) {
            let (p, best) =
                (k..cols)
                    .map(|j| (j, sq(&a[j][k..])))
                    .fold(
                        (k, T::neg_infinity()),
                        |acc, x| if x.1 > acc.1 { x } else { acc },
                    );
            if !(best > tol2) {
                break;
            }
            a.swap(k, p);
            perm.swap(k, p);
            let alpha = best.sqrt();
            let sign = if a[k][k] < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            let mut v = vec![T::zero(); m];
            v[k..].copy_from_slice(&a[k][k..]);
            v[k] += sign * alpha;
            let vv = sq(&v[k..]);
            for col in a.iter_mut().skip(k + 1) {
                let s: T = (k..m).map(|i| v[i] * col[i]).sum();
                let f = (s + s) / vv;
                for i in k..m {
                    col[i] -= f * v[i];
                }
            }
            a[k][k] = -sign * alpha;
            for x in a[k][k + 1..].iter_mut() {
                *x = T::zero();
            }
            reflectors.push(v);
            rank += 1;
        }
        let r = a
            .into_iter()
            .take(rank)
            .map(|c| c[..rank].to_vec())
            .collect();
        PivotedQr {
            cols,
            rank,
            perm,
            reflectors,
            r,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Basic least-squares solution of `A x ≈ b`; dependent columns get 0.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut qb = b.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            let vv: T = v[k..].iter().map(|&x| x * x).sum();
            let s: T = (k..qb.len()).map(|i| v[i] * qb[i]).sum();
            let f = (s + s) / vv;
            for i in k..qb.len() {
                qb[i] -= f * v[i];
            }
        }
        let mut y = vec![T::zero(); self.rank];
        for i in (0..self.rank).rev() {
            let mut s = qb[i];
            for j in i + 1..self.rank {
                s -= self.r[j][i] * y[j];
            }
            y[i] = s / self.r[i][i];
        }
        let mut x = vec![T::zero(); self.cols];
        for (i, v) in y.into_iter().enumerate() {
            x[self.perm[i]] = v;
        }
        x
    }
}

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Row-major; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
    pub fn new(mut a: Vec<T>, dim: usize) -> Self {
        assert_eq!(a.len(), dim * dim);
        let mut v = vec![T::zero(); dim * dim];
        for i in 0..dim {
            v[i * dim + i] = T::one();
        }
        let two = T::lit(2.0);
        for _sweep in 0..100 {
            let off: T = (0..dim)
                .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * dim + j] * a[i * dim + j])
                .sum();
            let diag: T = (0..dim).map(|i| a[i * dim + i] * a[i * dim + i]).sum();
            if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
                break;
            }
            for p in 0..dim {
                for q in p + 1..dim {
                    let apq = a[p * dim + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * dim + q] - a[p * dim + p]) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..dim {
                        let akp = a[k * dim + p];
                        let akq = a[k * dim + q];
                        a[k * dim + p] = c * akp - s * akq;
                        a[k * dim + q] = s * akp + c * akq;
                    }
                    for k in 0..dim {
                        let apk = a[p * dim + k];
                        let aqk = a[q * dim + k];
                        a[p * dim + k] = c * apk - s * aqk;
                        a[q * dim + k] = s * apk + c * aqk;
                    }
                    for k in 0..dim {
                        let vkp = v[k * dim + p];
                        let vkq = v[k * dim + q];
                        v[k * dim + p] = c * vkp - s * vkq;
                        v[k * dim + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..dim).map(|i| a[i * dim + i]).collect();
        SymmetricEigen { values, vectors: v }
    }
}
