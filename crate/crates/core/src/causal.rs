//! Marginal-versus-conditional screening for partial causal structure, and
//! ranking of intervention targets.
//!
//! A variable important under both a marginal measure (LMG, forest
//! permutation importance) and a conditional one (PMVD) is read as directly
//! causing the response. One important only marginally is read as an
//! indirect cause, linked to the direct causes it is sufficiently correlated
//! with. Orderings among several indirect causes are never guessed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentModel;
use crate::result::ImportanceResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSettings {
    pub importance_cutoff: f64,
    pub corr_threshold: f64,
    /// Defaults to `corr_threshold` when `None`.
    pub ambiguity_threshold: Option<f64>,
}

impl Default for ScreenSettings {
    fn default() -> Self {
        ScreenSettings {
            importance_cutoff: 0.15,
            corr_threshold: 0.3,
            ambiguity_threshold: None,
        }
    }
}

impl ScreenSettings {
    pub fn ambiguity(&self) -> f64 {
        self.ambiguity_threshold.unwrap_or(self.corr_threshold)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("importance_cutoff", self.importance_cutoff),
            ("corr_threshold", self.corr_threshold),
            ("ambiguity_threshold", self.ambiguity()),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge<T> {
    pub from: String,
    pub to: String,
    pub correlation: T,
    pub status: EdgeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedPair<T> {
    pub a: String,
    pub b: String,
    pub correlation: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalReport<T> {
    pub direct: BTreeSet<String>,
    pub indirect: BTreeSet<String>,
    pub edges: Vec<Edge<T>>,
    pub unresolved_pairs: Vec<UnresolvedPair<T>>,
    pub unclassifiable: BTreeSet<String>,
    pub assumptions: Vec<String>,
    pub notes: Vec<String>,
}

impl<T> CausalReport<T> {
    pub fn accepted_edges(&self) -> impl Iterator<Item = &Edge<T>> {
        self.edges
            .iter()
            .filter(|e| e.status == EdgeStatus::Accepted)
    }

    pub fn has_accepted_edge(&self, from: &str, to: &str) -> bool {
        self.accepted_edges().any(|e| e.from == from && e.to == to)
    }
}

pub const ASSUMPTIONS: [&str; 4] = [
    "every candidate causal link is substantively plausible",
    "correlations among all variables are low enough to rule out confounding",
    "indirectly causal variables are neither mediators nor suppressors",
    "all regressors are numeric; correlations are Pearson",
];

/// Variables whose proportion is at least `cutoff`.
pub fn important_set<T: Scalar>(res: &ImportanceResult<T>, cutoff: f64) -> BTreeSet<String> {
    let c = T::lit(cutoff);
    res.labels
        .iter()
        .zip(&res.proportions)
        .filter(|(_, p)| **p >= c)
        .map(|(l, _)| l.clone())
        .collect()
}

pub fn discern_structure<T: Scalar>(
    marginal: &ImportanceResult<T>,
    conditional: &ImportanceResult<T>,
    mm: &MomentModel<T>,
    s: &ScreenSettings,
) -> Result<CausalReport<T>> {
    s.validate()?;
    let ml: BTreeSet<&String> = marginal.labels.iter().collect();
    let cl: BTreeSet<&String> = conditional.labels.iter().collect();
    if ml != cl || ml.len() != marginal.labels.len() {
        let only_m: Vec<&&String> = ml.difference(&cl).collect();
        let only_c: Vec<&&String> = cl.difference(&ml).collect();
        return Err(Error::LabelMismatch(format!(
            "marginal-only {only_m:?}, conditional-only {only_c:?}"
        )));
    }
    let index: BTreeMap<&str, usize> = mm
        .var_names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if let Some(missing) = ml.iter().find(|l| !index.contains_key(l.as_str())) {
        return Err(Error::LabelMismatch(format!(
            "`{missing}` is not a regressor of the moment model"
        )));
    }
    let corr = |a: &str, b: &str| mm.regressor_correlation(index[a], index[b]);

    let m = important_set(marginal, s.importance_cutoff);
    let c = important_set(conditional, s.importance_cutoff);
    let direct: BTreeSet<String> = m.intersection(&c).cloned().collect();
    let indirect: BTreeSet<String> = m.difference(&c).cloned().collect();
    let mut unclassifiable: BTreeSet<String> = c.difference(&m).cloned().collect();

    let corr_t = T::lit(s.corr_threshold);
    let mut edges = Vec::new();
    for d in &indirect {
        let mut any = false;
        for t in &direct {
            let r = corr(d, t);
            let status = if r.abs() >= corr_t {
                any = true;
                EdgeStatus::Accepted
            } else {
                EdgeStatus::Rejected
            };
            edges.push(Edge {
                from: d.clone(),
                to: t.clone(),
                correlation: r,
                status,
            });
        }
        if !any {
            unclassifiable.insert(d.clone());
        }
    }

    let amb = T::lit(s.ambiguity());
    let ind: Vec<&String> = indirect.iter().collect();
    let mut unresolved_pairs = Vec::new();
    for (i, a) in ind.iter().enumerate() {
        for b in &ind[i + 1..] {
            let r = corr(a, b);
            if r.abs() >= amb {
                unresolved_pairs.push(UnresolvedPair {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    correlation: r,
                });
            }
        }
    }

    Ok(CausalReport {
        direct,
        indirect,
        edges,
        unresolved_pairs,
        unclassifiable,
        assumptions: ASSUMPTIONS.iter().map(|a| a.to_string()).collect(),
        notes: vec![
            "interventions can change the correlation structure among regressors".into(),
            format!(
                "marginal measure: {}; conditional measure: {}",
                marginal.method, conditional.method
            ),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVariable<T> {
    pub label: String,
    pub share: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedVariable {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionRanking<T> {
    pub ranked: Vec<RankedVariable<T>>,
    pub excluded: Vec<ExcludedVariable>,
}

/// Candidates by descending share (ties by label); excluded variables are
/// listed separately.
pub fn rank_interventions<T: Scalar>(
    res: &ImportanceResult<T>,
    excluded: &BTreeSet<String>,
) -> InterventionRanking<T> {
    let mut ranked: Vec<RankedVariable<T>> = res
        .labels
        .iter()
        .zip(&res.shares)
        .filter(|(l, _)| !excluded.contains(*l))
        .map(|(l, &s)| RankedVariable {
            label: l.clone(),
            share: s,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.share
            .partial_cmp(&a.share)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.label.cmp(&b.label))
    });
    let excluded = res
        .labels
        .iter()
        .filter(|l| excluded.contains(*l))
        .map(|l| ExcludedVariable {
            label: l.clone(),
            reason: "user-excluded".into(),
        })
        .collect();
    InterventionRanking { ranked, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::result::Method;

    fn res(method: Method, props: &[f64]) -> ImportanceResult<f64> {
        let labels = (1..=props.len()).map(|i| format!("x{i}")).collect();
        ImportanceResult::new(method, labels, props.to_vec(), 1.0)
    }

    #[test]
    fn important_set_boundary() {
        let r = res(Method::Lmg, &[0.5, 0.3, 0.02]);
        assert_eq!(
            important_set(&r, 0.15),
            ["x1", "x2"].map(String::from).into()
        );
        assert!(important_set(&res(Method::Lmg, &[0.1, 0.05]), 0.15).is_empty());
        assert!(important_set(&res(Method::Lmg, &[0.15, 0.85]), 0.15).contains("x1"));
    }

    #[test]
    fn equal_sets_have_no_indirect() {
        let mm: MomentModel<f64> =
            MomentModel::from_parts(10, &[0.5, 0.5], &[1.0, 0.2, 0.2, 1.0]).unwrap();
        let r = res(Method::Lmg, &[0.5, 0.5]);
        let rep = discern_structure(&r, &r, &mm, &ScreenSettings::default()).unwrap();
        assert!(rep.indirect.is_empty());
        assert!(rep.edges.is_empty());
        assert_eq!(rep.assumptions.len(), 4);
    }

    #[test]
    fn correlated_indirect_pair_is_unresolved() {
        // x1 direct; x2, x3 marginal-only and correlated 0.6 with each other
        let rxx = [1.0, 0.5, 0.5, 0.5, 1.0, 0.6, 0.5, 0.6, 1.0];
        let mm: MomentModel<f64> = MomentModel::from_parts(10, &[0.6, 0.3, 0.3], &rxx).unwrap();
        let marg = res(Method::Lmg, &[0.5, 0.25, 0.25]);
        let cond = res(Method::Pmvd, &[1.0, 0.0, 0.0]);
        let rep = discern_structure(&marg, &cond, &mm, &ScreenSettings::default()).unwrap();
        assert_eq!(rep.unresolved_pairs.len(), 1);
        assert_eq!(
            (
                rep.unresolved_pairs[0].a.as_str(),
                rep.unresolved_pairs[0].b.as_str()
            ),
            ("x2", "x3")
        );
        assert!(rep.has_accepted_edge("x2", "x1"));
    }

    #[test]
    fn mismatched_labels() {
        let mm: MomentModel<f64> =
            MomentModel::from_parts(10, &[0.5, 0.5], &[1.0, 0.2, 0.2, 1.0]).unwrap();
        let a = res(Method::Lmg, &[0.5, 0.5]);
        let mut b = a.clone();
        b.labels[1] = "z".into();
        assert!(matches!(
            discern_structure(&a, &b, &mm, &ScreenSettings::default()),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn ranking() {
        let r = res(Method::Lmg, &[0.4, 0.1, 0.3]);
        let labels = |x: &InterventionRanking<f64>| -> Vec<String> {
            x.ranked.iter().map(|v| v.label.clone()).collect()
        };
        assert_eq!(
            labels(&rank_interventions(&r, &BTreeSet::new())),
            ["x1", "x3", "x2"]
        );
        let ex = rank_interventions(&r, &["x1".to_string()].into());
        assert_eq!(labels(&ex), ["x3", "x2"]);
        assert_eq!(ex.excluded[0].reason, "user-excluded");
        let all: BTreeSet<String> = ["x1", "x2", "x3"].map(String::from).into();
        let none = rank_interventions(&r, &all);
        assert!(none.ranked.is_empty());
        assert_eq!(none.excluded.len(), 3);
        let tie = res(Method::Lmg, &[0.2, 0.2]);
        assert_eq!(
            labels(&rank_interventions(&tie, &BTreeSet::new())),
            ["x1", "x2"]
        );
    }
}
