use serde::{Deserialize, Serialize};

use super::metrics::{GranularityMetrics, PaymentShape};
use super::{AssetKind, GranularityConfig};
use crate::hash::Address;
use crate::ledger::Transaction;
use crate::product::{Regression, WorkScope};
use crate::store::Cid;

/// One settled payment and the lien token released with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentRecord {
    pub period: String,
    pub block_height: u64,
    pub payee: Address,
    pub trades: Vec<String>,
    pub element_count: u64,
    pub amount_cents: u64,
    pub evidence_cid: Cid,
    pub lien_token_id: u64,
    pub scope: WorkScope,
    pub payment: Transaction,
    pub lien: Transaction,
}

/// A scope that could not be paid in a period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub period: String,
    pub scope: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionRecord {
    pub period: String,
    #[serde(flatten)]
    pub regression: Regression,
}

/// Everything one scenario emitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentDataset {
    pub dataset: String,
    pub scenario_id: u8,
    pub config: GranularityConfig,
    pub asset: AssetKind,
    pub funding: u128,
    pub payments: Vec<PaymentRecord>,
    pub failures: Vec<FailureRecord>,
    pub regressions: Vec<RegressionRecord>,
    pub metrics: GranularityMetrics,
}

pub const CSV_HEADER: [&str; 8] = [
    "scenario",
    "period",
    "payee",
    "trades",
    "element_count",
    "amount_cents",
    "evidence_cid",
    "lien_token_id",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: u8,
    pub period: String,
    pub payee: String,
    pub trades: String,
    pub element_count: u64,
    pub amount_cents: u64,
    pub evidence_cid: String,
    pub lien_token_id: u64,
}

impl PaymentDataset {
    pub fn total_paid(&self) -> u64 {
        self.payments.iter().map(|p| p.amount_cents).sum()
    }

    pub fn recompute_metrics(&self) -> GranularityMetrics {
        GranularityMetrics::compute(
            self.payments
                .iter()
                .map(|p| PaymentShape { trades: &p.trades, element_count: p.element_count }),
            self.failures.len() as u32,
        )
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.payments
            .iter()
            .map(|p| CsvRow {
                scenario: self.scenario_id,
                period: p.period.clone(),
                payee: p.payee.to_string(),
                trades: p.trades.join(";"),
                element_count: p.element_count,
                amount_cents: p.amount_cents,
                evidence_cid: p.evidence_cid.to_string(),
                lien_token_id: p.lien_token_id,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        // explicit header so an empty scenario still yields one
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory CSV");
        for row in self.csv_rows() {
            w.serialize(row).expect("in-memory CSV");
        }
        w.into_inner().expect("in-memory CSV")
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("in-memory JSON");
        out.push(b'\n');
        out
    }
}

/// Reads a payments CSV back into rows.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}
