//! Method selection shared by the bootstrap and the command line.

use crate::dataset::GroupSpec;
use crate::error::Result;
use crate::moments::MomentModel;
use crate::pmvd::{pmvd_exact, proportional_value, PmvdSettings};
use crate::result::ImportanceResult;
use crate::scalar::Scalar;
use crate::shapley::{johnson_weights, lmg_exact, lmg_sampled, LmgSettings, OrderSampling};

/// A linear-model importance method together with its settings.
#[derive(Debug, Clone)]
pub enum ImportanceMethod {
    Lmg {
        groups: Option<GroupSpec>,
        settings: LmgSettings,
    },
    LmgSampled {
        sampling: OrderSampling,
        seed: u64,
    },
    Pmvd(PmvdSettings),
    ProportionalValue(PmvdSettings),
    Johnson,
}

impl ImportanceMethod {
    pub fn lmg() -> Self {
        ImportanceMethod::Lmg {
            groups: None,
            settings: LmgSettings::default(),
        }
    }

    pub fn pmvd() -> Self {
        ImportanceMethod::Pmvd(PmvdSettings::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ImportanceMethod::Lmg {
                groups: Some(_), ..
            } => "owen",
            ImportanceMethod::Lmg { .. } => "lmg",
            ImportanceMethod::LmgSampled { .. } => "lmg_sampled",
            ImportanceMethod::Pmvd(_) => "pmvd",
            ImportanceMethod::ProportionalValue(_) => "proportional_value",
            ImportanceMethod::Johnson => "johnson",
        }
    }

    pub fn compute<T: Scalar>(&self, mm: &MomentModel<T>) -> Result<ImportanceResult<T>> {
        match self {
            ImportanceMethod::Lmg { groups, settings } => lmg_exact(mm, groups.as_ref(), settings),
            ImportanceMethod::LmgSampled { sampling, seed } => lmg_sampled(mm, *sampling, *seed),
            ImportanceMethod::Pmvd(s) => pmvd_exact(mm, s),
            ImportanceMethod::ProportionalValue(s) => proportional_value(mm, s),
            ImportanceMethod::Johnson => johnson_weights(mm),
        }
    }
}
