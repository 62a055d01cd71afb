//! Regression random forest with out-of-bag bookkeeping.
//!
//! Each tree is grown on a bootstrap sample of the rows, trying `mtry`
//! randomly chosen variables at every node. Tree `t` draws from ChaCha stream
//! `(seed, t)`; fitting is parallel over trees and deterministic.

mod importance;
mod tree;

pub use importance::{
    forest_oomph, importance_shares, oob_predictions, oob_r2, permutation_importance,
    ForestImportance, ForestOomph, OobPredictions,
};
pub use tree::{Node, Tree};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use tree::{grow, GrowConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Variables tried per split; `None` means `⌈n/3⌉`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_node_size: 5,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, n: usize) -> usize {
        self.mtry.unwrap_or_else(|| n.div_ceil(3).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<T> {
    pub var_names: Vec<String>,
    pub n_obs: usize,
    pub params: ForestParams,
    pub trees: Vec<Tree<T>>,
    /// `inbag[t][i]`: how many times row `i` was drawn for tree `t`.
    pub inbag: Vec<Vec<u32>>,
    /// Split variables of each tree, ascending.
    pub used_vars: Vec<Vec<usize>>,
}

impl<T: Scalar> ForestModel<T> {
    /// Assembles a forest from prebuilt trees and in-bag counts.
    pub fn from_parts(
        var_names: Vec<String>,
        n_obs: usize,
        trees: Vec<Tree<T>>,
        inbag: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if trees.len() != inbag.len() || trees.is_empty() {
            return Err(Error::InvalidArgument(
                "need one in-bag vector per tree and at least one tree".into(),
            ));
        }
        if inbag.iter().any(|b| b.len() != n_obs) {
            return Err(Error::InvalidArgument(
                "in-bag vectors must cover every row".into(),
            ));
        }
        let used_vars = trees.iter().map(Tree::split_vars).collect();
        let params = ForestParams {
            n_trees: trees.len(),
            ..Default::default()
        };
        Ok(ForestModel {
            var_names,
            n_obs,
            params,
            trees,
            inbag,
            used_vars,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn is_oob(&self, tree: usize, row: usize) -> bool {
        self.inbag[tree][row] == 0
    }

    /// Rows that are in-bag for every tree.
    pub fn never_oob_rows(&self) -> Vec<usize> {
        (0..self.n_obs)
            .filter(|&i| (0..self.n_trees()).all(|t| !self.is_oob(t, i)))
            .collect()
    }

    pub(crate) fn check_shape(&self, d: &Dataset<T>) -> Result<()> {
        if d.n_obs() != self.n_obs || d.regressor_names() != self.var_names {
            return Err(Error::InvalidArgument(
                "dataset does not match the fitted forest".into(),
            ));
        }
        Ok(())
    }
}

/// Fits a regression forest. Observation weights are not used.
pub fn fit_forest<T: Scalar>(d: &Dataset<T>, p: &ForestParams) -> Result<ForestModel<T>> {
    let n = d.n_regressors();
    let m = d.n_obs();
    let mtry = p.resolved_mtry(n);
    if mtry == 0 || mtry > n {
        return Err(Error::InvalidArgument(format!(
            "mtry must lie in 1..={n}, got {mtry}"
        )));
    }
    if p.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    if p.min_node_size < 2 {
        return Err(Error::InvalidArgument(
            "min_node_size must be at least 2".into(),
        ));
    }
    if m < 2 * p.min_node_size {
        return Err(Error::InvalidArgument(format!(
            "{m} rows are fewer than twice min_node_size ({})",
            p.min_node_size
        )));
    }
    let columns: Vec<&[T]> = (0..n).map(|j| d.regressor(j)).collect();
    let y = d.response();
    let cfg = GrowConfig {
        mtry,
        min_node_size: p.min_node_size,
    };
    let grown: Vec<(Tree<T>, Vec<u32>)> = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(t as u64);
            let mut counts = vec![0u32; m];
            let rows: Vec<usize> = (0..m)
                .map(|_| {
                    let i = rng.random_range(0..m);
                    counts[i] += 1;
                    i
                })
                .collect();
            (grow(&columns, y, rows, &cfg, &mut rng), counts)
        })
        .collect();
    let (trees, inbag): (Vec<_>, Vec<_>) = grown.into_iter().unzip();
    let used_vars = trees.iter().map(Tree::split_vars).collect();
    let params = ForestParams {
        mtry: Some(mtry),
        ..p.clone()
    };
    let model = ForestModel {
        var_names: d.regressor_names(),
        n_obs: m,
        params,
        trees,
        inbag,
        used_vars,
    };
    let never = model.never_oob_rows().len();
    if never > 0 {
        log::warn!("{never} rows are never out-of-bag and will not be scored");
    }
    Ok(model)
}
