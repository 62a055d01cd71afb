//! Randomized invariants of the linear-model importance measures.

mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use relimp::causal::{discern_structure, ScreenSettings};
use relimp::pmvd::{pmvd_exact, proportional_value, PmvdSettings};
use relimp::shapley::{johnson_weights, lmg_exact, LmgSettings};
use relimp::{moments, Dataset, GroupSpec, ImportanceResult, MomentModel};

fn lmg(mm: &MomentModel<f64>) -> ImportanceResult<f64> {
    lmg_exact(mm, None, &LmgSettings::default()).unwrap()
}

fn scale_column(d: &Dataset<f64>, j: Option<usize>, c: f64) -> Dataset<f64> {
    let regs = (0..d.n_regressors())
        .map(|k| {
            let col = d
                .regressor(k)
                .iter()
                .map(|v| if Some(k) == j { v * c } else { *v })
                .collect();
            (d.regressor_name(k).to_string(), col)
        })
        .collect();
    let y = d
        .response()
        .iter()
        .map(|v| if j.is_none() { v * c } else { *v })
        .collect();
    Dataset::from_response_and_regressors("y", y, regs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn r2_is_monotone(seed in any::<u64>(), n in 2usize..=6, a in any::<u64>(), b in any::<u64>()) {
        let mm = random_model(&mut rng(seed), n);
        let full = (1u64 << n) - 1;
        let s = a & full;
        let t = s | (b & full);
        prop_assert!(mm.r2_mask(t) >= mm.r2_mask(s) - 1e-10);
    }

    #[test]
    fn r2_is_scale_invariant(seed in any::<u64>(), n in 1usize..=5, j in 0usize..5, c in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64]) {
        let d = random_dataset(&mut rng(seed), n, 80);
        let j = j % n;
        let base = moments(&d).unwrap();
        let xs = moments(&scale_column(&d, Some(j), c)).unwrap();
        let ys = moments(&scale_column(&d, None, c.abs())).unwrap();
        for mask in 1..(1u64 << n) {
            prop_assert!((base.r2_mask(mask) - xs.r2_mask(mask)).abs() < 1e-12);
            prop_assert!((base.r2_mask(mask) - ys.r2_mask(mask)).abs() < 1e-12);
        }
    }

    #[test]
    fn r2_matches_least_squares(seed in any::<u64>(), n in 1usize..=6) {
        let d = random_dataset(&mut rng(seed), n, 200);
        let mm = moments(&d).unwrap();
        for mask in 1..(1u64 << n) {
            let subset: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let ours = mm.subset_r2(&subset).unwrap();
            prop_assert!((ours - ols_r2(&d, &subset)).abs() < 1e-9, "mask {mask}");
        }
    }

    #[test]
    fn integer_weights_equal_duplication(seed in any::<u64>(), n in 1usize..=4, w in proptest::collection::vec(1u32..4, 12)) {
        let d = random_dataset(&mut rng(seed), n, 12);
        let weighted = d.clone().with_weights(w.iter().map(|&k| k as f64).collect()).unwrap();
        let rows: Vec<usize> = (0..12).flat_map(|i| std::iter::repeat_n(i, w[i] as usize)).collect();
        let dup = d.select_rows(&rows).unwrap();
        let a = moments(&weighted).unwrap();
        let b = moments(&dup).unwrap();
        prop_assert!(max_abs_diff(a.corr(), b.corr()) < 1e-12);
    }

    #[test]
    fn shares_decompose_r2(seed in any::<u64>(), n in 2usize..=6) {
        let mm = random_model(&mut rng(seed), n);
        let r2 = mm.full_r2();
        let s = PmvdSettings::default();
        for res in [lmg(&mm), pmvd_exact(&mm, &s).unwrap(), proportional_value(&mm, &s).unwrap(), johnson_weights(&mm).unwrap()] {
            prop_assert!((sum(&res.shares) - r2).abs() < 1e-9, "{}", res.method);
            prop_assert!(res.shares.iter().all(|&v| v >= -1e-10), "{}", res.method);
            prop_assert!((sum(&res.proportions) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn anonymity(seed in any::<u64>(), n in 2usize..=6, shuffle in any::<u64>()) {
        let mut r = rng(seed);
        let mm = random_model(&mut r, n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut key = shuffle;
        for i in (1..n).rev() {
            order.swap(i, (key % (i as u64 + 1)) as usize);
            key /= i as u64 + 1;
        }
        let permuted = mm.reorder(&order).unwrap();
        let s = PmvdSettings::default();
        let pairs = [
            (lmg(&mm), lmg(&permuted)),
            (pmvd_exact(&mm, &s).unwrap(), pmvd_exact(&permuted, &s).unwrap()),
            (proportional_value(&mm, &s).unwrap(), proportional_value(&permuted, &s).unwrap()),
        ];
        for (a, b) in pairs {
            for (pos, &j) in order.iter().enumerate() {
                prop_assert!((a.shares[j] - b.shares[pos]).abs() < 1e-12, "{}", a.method);
            }
        }
    }

    #[test]
    fn noise_immunity(seed in any::<u64>(), n in 1usize..=5) {
        let mm = random_model(&mut rng(seed), n);
        let dim = n + 1;
        let mut corr = vec![0.0; (dim + 1) * (dim + 1)];
        for i in 0..dim {
            for k in 0..dim {
                corr[i * (dim + 1) + k] = mm.corr()[i * dim + k];
            }
        }
        corr[dim * (dim + 1) + dim] = 1.0;
        let noisy = MomentModel::from_correlations(mm.n_obs(), "y", names(n + 1), corr).unwrap();
        let a = lmg(&mm);
        let b = lmg(&noisy);
        prop_assert!(max_abs_diff(&a.shares, &b.shares[..n]) < 1e-9);
        prop_assert!(b.shares[n].abs() < 1e-9);
    }

    #[test]
    fn subset_transformation(seed in any::<u64>(), n in 2usize..=5, coef in proptest::array::uniform4(-2.0..2.0f64)) {
        let [a, b, c, e] = coef;
        prop_assume!((a * e - b * c).abs() > 0.2);
        let d = random_dataset(&mut rng(seed), n, 120);
        let x1 = d.regressor(0).to_vec();
        let x2 = d.regressor(1).to_vec();
        let mut regs: Vec<(String, Vec<f64>)> = vec![
            ("x1".into(), x1.iter().zip(&x2).map(|(u, v)| a * u + b * v).collect()),
            ("x2".into(), x1.iter().zip(&x2).map(|(u, v)| c * u + e * v).collect()),
        ];
        for j in 2..n {
            regs.push((d.regressor_name(j).into(), d.regressor(j).to_vec()));
        }
        let t = Dataset::from_response_and_regressors("y", d.response().to_vec(), regs).unwrap();
        // the pair forms one player, so coalitions hold both or neither
        let pair = GroupSpec::new(vec![("pair".into(), BTreeSet::from([0, 1]))], n).unwrap();
        let grouped = |d: &Dataset<f64>| lmg_exact(&moments(d).unwrap(), Some(&pair), &LmgSettings::default()).unwrap();
        let before = grouped(&d);
        let after = grouped(&t);
        prop_assert_eq!(&before.labels, &after.labels);
        prop_assert!(max_abs_diff(&before.shares, &after.shares) < 1e-9);
    }

    #[test]
    fn orthogonal_blocks(seed in any::<u64>(), k in 1usize..=3, l in 1usize..=3) {
        let mut r = rng(seed);
        let n = k + l;
        let b1 = random_spd(&mut r, k);
        let b2 = random_spd(&mut r, l);
        let mut cxx = vec![0.0; n * n];
        for i in 0..k { for j in 0..k { cxx[i * n + j] = b1[i * k + j]; } }
        for i in 0..l { for j in 0..l { cxx[(k + i) * n + k + j] = b2[i * l + j]; } }
        let beta: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mm = population_model(&cxx, &beta, 1.0);
        let res = lmg(&mm);
        let first: Vec<usize> = (0..k).collect();
        let second: Vec<usize> = (k..n).collect();
        prop_assert!((sum(&res.shares[..k]) - mm.subset_r2(&first).unwrap()).abs() < 1e-9);
        prop_assert!((sum(&res.shares[k..]) - mm.subset_r2(&second).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn owen_consistency(seed in any::<u64>(), n in 2usize..=6) {
        let mm = random_model(&mut rng(seed), n);
        let plain = lmg(&mm);
        let singletons = GroupSpec::new((0..n).map(|j| (format!("g{j}"), BTreeSet::from([j]))).collect(), n).unwrap();
        let owen = lmg_exact(&mm, Some(&singletons), &LmgSettings::default()).unwrap();
        prop_assert!(max_abs_diff(&plain.shares, &owen.shares) < 1e-12);
        let one = GroupSpec::new(vec![("all".into(), (0..n).collect())], n).unwrap();
        let whole = lmg_exact(&mm, Some(&one), &LmgSettings::default()).unwrap();
        prop_assert_eq!(whole.len(), 1);
        prop_assert!((whole.shares[0] - mm.full_r2()).abs() < 1e-12);
    }

    #[test]
    fn johnson_equals_lmg_when_orthogonal(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let mut cxx = vec![0.0; n * n];
        for i in 0..n { cxx[i * n + i] = r.random_range(0.5..2.0); }
        let beta: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mm = population_model(&cxx, &beta, 0.5);
        prop_assert!(max_abs_diff(&johnson_weights(&mm).unwrap().shares, &lmg(&mm).shares) < 1e-10);
    }

    #[test]
    fn proportional_value_ignores_base_constant(seed in any::<u64>(), n in 1usize..=6) {
        let mm = random_model(&mut rng(seed), n);
        let one = proportional_value(&mm, &PmvdSettings::default()).unwrap();
        let ten = proportional_value(&mm, &PmvdSettings { base_constant: 10.0, ..PmvdSettings::default() }).unwrap();
        prop_assert!(max_abs_diff(&one.shares, &ten.shares) < 1e-12);
    }

    #[test]
    fn causal_screening_is_monotone_and_order_free(seed in any::<u64>(), n in 2usize..=5, c1 in 0.02..0.5f64, c2 in 0.02..0.5f64) {
        let mm = random_model(&mut rng(seed), n);
        let marg = lmg(&mm);
        let cond = pmvd_exact(&mm, &PmvdSettings::default()).unwrap();
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        let screen = |c: f64| ScreenSettings { importance_cutoff: c, ..ScreenSettings::default() };
        let a = discern_structure(&marg, &cond, &mm, &screen(lo)).unwrap();
        let b = discern_structure(&marg, &cond, &mm, &screen(hi)).unwrap();
        let union = |r: &relimp::causal::CausalReport<f64>| -> BTreeSet<String> { r.direct.union(&r.indirect).cloned().collect() };
        prop_assert!(union(&b).is_subset(&union(&a)));

        let order: Vec<usize> = (0..n).rev().collect();
        let rev = mm.reorder(&order).unwrap();
        let c = discern_structure(&lmg(&rev), &pmvd_exact(&rev, &PmvdSettings::default()).unwrap(), &rev, &screen(lo)).unwrap();
        prop_assert_eq!(&a.direct, &c.direct);
        prop_assert_eq!(&a.indirect, &c.indirect);
        prop_assert_eq!(&a.unclassifiable, &c.unclassifiable);
        let accepted = |r: &relimp::causal::CausalReport<f64>| -> BTreeSet<(String, String)> {
            r.accepted_edges().map(|e| (e.from.clone(), e.to.clone())).collect()
        };
        prop_assert_eq!(accepted(&a), accepted(&c));
    }
}
