//! The payment contract: turns priced progress deltas into atomic
//! payment + lien-token batches under a granularity configuration.

mod config;
mod dataset;
mod metrics;
mod plan;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::Address;
use crate::ledger::LedgerError;
use crate::product::ProductError;
use crate::store::StoreError;

pub use config::{parse_config_list, GranularityConfig, Level};
pub use dataset::{parse_csv, CsvRow, CSV_HEADER, FailureRecord, PaymentDataset, PaymentRecord, RegressionRecord};
pub use metrics::{GranularityMetrics, PaymentShape, Rational};
pub use plan::{
    partition_scope, plan_periods, resolve_payees, Horizon, PayeeDirectory, PayeeGroup, DAY, WEEK_DAYS,
};
pub use scenario::{run_scenario, PaymentEngine, PeriodSettlement, PlannedPayment, ScenarioOutcome};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("trade {0:?} has no subcontractor")]
    UnmappedTrade(String),
    #[error("escrow holds {available}, period needs {needed}")]
    EscrowInsufficient { needed: u128, available: u128 },
    #[error("batch {index} was rejected: {cause}")]
    Rejected { index: usize, cause: LedgerError },
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Settlement asset for payments. Lien tokens are always minted alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Native,
    Token,
}

impl std::str::FromStr for AssetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(AssetKind::Native),
            "token" => Ok(AssetKind::Token),
            _ => Err(format!("unknown asset {s:?} (expected native or token)")),
        }
    }
}

/// Fixed addresses of the parties and contracts in a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub owner: Address,
    pub escrow: Address,
    pub token: Address,
    pub lien_registry: Address,
}

impl Default for Roles {
    fn default() -> Self {
        Roles {
            owner: Address::derive("owner"),
            escrow: Address::derive("escrow"),
            token: Address::derive("token"),
            lien_registry: Address::derive("lien-registry"),
        }
    }
}

#[cfg(test)]
mod tests;
