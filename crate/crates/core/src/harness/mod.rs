//! Experiment harness: synthetic datasets, the eight-configuration matrix,
//! run-directory export, verification and reports.

mod generate;
mod report;
mod run;
mod verify;

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::engine::{CsvRow, EngineError, GranularityMetrics, Rational};
use crate::ledger::LedgerError;
use crate::product::ProductError;
use crate::store::StoreError;

pub use generate::*;
pub use report::{test_mapping, MappingRow, Report, ScenarioSummary};
pub use run::*;
pub use verify::{verify, Finding, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

/// The three ratio metrics, which are all a payments CSV can support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvMetrics {
    pub payments_per_trade_per_month: Rational,
    pub mean_payees_per_payment: Rational,
    pub mean_elements_per_payment: Rational,
}

impl CsvMetrics {
    pub fn of(m: &GranularityMetrics) -> Self {
        CsvMetrics {
            payments_per_trade_per_month: m.payments_per_trade_per_month,
            mean_payees_per_payment: m.mean_payees_per_payment,
            mean_elements_per_payment: m.mean_elements_per_payment,
        }
    }
}

/// Recounts the metrics in one pass over a payments CSV.
pub fn metrics_from_csv(bytes: &[u8]) -> Result<CsvMetrics, csv::Error> {
    let (mut rows, mut incidences, mut elements) = (0u64, 0u64, 0u64);
    let mut trades = BTreeSet::new();
    for row in csv::Reader::from_reader(bytes).deserialize::<CsvRow>() {
        let row = row?;
        rows += 1;
        elements += row.element_count;
        for t in row.trades.split(';').filter(|t| !t.is_empty()) {
            incidences += 1;
            trades.insert(t.to_string());
        }
    }
    Ok(CsvMetrics {
        payments_per_trade_per_month: Rational::new(incidences, trades.len() as u64),
        mean_payees_per_payment: Rational::new(incidences, rows),
        mean_elements_per_payment: Rational::new(elements, rows),
    })
}
