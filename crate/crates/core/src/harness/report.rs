//! Matrix report: configuration-to-test mapping, granularity metrics, and
//! the fiat-vs-crypto evidence comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::*;
use super::HarnessError;
use crate::engine::{AssetKind, GranularityConfig, GranularityMetrics, PaymentDataset};
use crate::fiat::{self, InformationLoss};
use crate::ledger::{import_jsonl, verify_chain, Genesis};
use crate::product::{Project, ProjectDataset};
use crate::store::ContentStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRow {
    pub scenario_id: u8,
    pub code: String,
    pub product: String,
    pub time: String,
    pub trade: String,
    /// Test number in the published experiment, aggregate-data project.
    pub reference_test_ugv: u8,
    /// Test number in the published experiment, per-element project.
    pub reference_test_uav: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub dataset: String,
    pub profile: String,
    pub scenario_id: u8,
    pub code: String,
    pub reference_test: Option<u8>,
    pub payments: usize,
    pub failures: usize,
    pub regressions: usize,
    pub total_paid_cents: u64,
    pub metrics: GranularityMetrics,
    pub information_loss: InformationLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub seed: u64,
    pub asset: AssetKind,
    pub metric_definitions: BTreeMap<String, String>,
    pub test_mapping: Vec<MappingRow>,
    pub scenarios: Vec<ScenarioSummary>,
}

fn level(l: crate::engine::Level) -> String {
    match l {
        crate::engine::Level::Low => "low".into(),
        crate::engine::Level::High => "high".into(),
    }
}

pub fn test_mapping() -> Vec<MappingRow> {
    GranularityConfig::all()
        .into_iter()
        .map(|c| MappingRow {
            scenario_id: c.scenario_id(),
            code: c.code(),
            product: level(c.product),
            time: level(c.time),
            trade: level(c.trade),
            reference_test_ugv: c.reference_test_index(),
            reference_test_uav: c.reference_test_index() + 8,
        })
        .collect()
}

fn metric_definitions() -> BTreeMap<String, String> {
    [
        ("payments_per_trade_per_month", "time axis: (payment, trade) incidences / distinct trades paid, one-month horizon"),
        ("mean_payees_per_payment", "trade axis: trades (parties) covered per payment"),
        ("mean_elements_per_payment", "product axis: building elements covered per payment"),
        ("failure_count", "scopes that could not be paid for lack of per-element progress"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn reference_test(profile: &str, config: &GranularityConfig) -> Option<u8> {
    match profile {
        "ugv" => Some(config.reference_test_index()),
        "uav" => Some(config.reference_test_index() + 8),
        _ => None,
    }
}

impl Report {
    pub fn build<'a>(
        manifest: &RunManifest,
        profiles: &BTreeMap<String, String>,
        scenarios: impl IntoIterator<Item = (&'a ScenarioEntry, &'a PaymentDataset, InformationLoss)>,
    ) -> Self {
        let scenarios = scenarios
            .into_iter()
            .map(|(entry, ds, loss)| {
                let profile = profiles.get(&entry.dataset).cloned().unwrap_or_default();
                ScenarioSummary {
                    dataset: entry.dataset.clone(),
                    reference_test: reference_test(&profile, &ds.config),
                    profile,
                    scenario_id: entry.scenario_id,
                    code: entry.code.clone(),
                    payments: ds.payments.len(),
                    failures: ds.failures.len(),
                    regressions: ds.regressions.len(),
                    total_paid_cents: ds.total_paid(),
                    metrics: ds.metrics.clone(),
                    information_loss: loss,
                }
            })
            .collect();
        Report {
            tool_version: manifest.tool_version.clone(),
            seed: manifest.seed,
            asset: manifest.asset,
            metric_definitions: metric_definitions(),
            test_mapping: test_mapping(),
            scenarios,
        }
    }

    /// Rebuilds the report from a run directory, replaying each chain to
    /// look lien tokens up.
    pub fn from_dir(dir: &Path) -> Result<Self, HarnessError> {
        let manifest = load_manifest(dir)?;
        let mut datasets = BTreeMap::new();
        for d in &manifest.datasets {
            let ds = ProjectDataset::from_slice(&read(&dir.join(&d.file))?)
                .map_err(|e| HarnessError::Usage(format!("{}: {e}", d.file)))?;
            datasets.insert(d.name.clone(), ds);
        }
        let profiles = datasets.iter().map(|(k, v)| (k.clone(), v.project.profile.clone())).collect();
        let mut rows = Vec::new();
        for entry in &manifest.scenarios {
            let sdir = dir.join(&entry.dir);
            let payments: PaymentDataset = serde_json::from_slice(&read(&sdir.join(PAYMENTS_JSON))?)
                .map_err(|e| HarnessError::Usage(format!("{}/{PAYMENTS_JSON}: {e}", entry.dir)))?;
            let genesis: Genesis = serde_json::from_slice(&read(&sdir.join(GENESIS))?)
                .map_err(|e| HarnessError::Usage(format!("{}/{GENESIS}: {e}", entry.dir)))?;
            let blocks = import_jsonl(&read(&sdir.join(CHAIN))?)?;
            let store = ContentStore::open(sdir.join(EVIDENCE_DIR))?;
            let dataset = datasets
                .get(&entry.dataset)
                .ok_or_else(|| HarnessError::Usage(format!("dataset {:?} missing", entry.dataset)))?;
            let project = Project::from_dataset(dataset, &mut ContentStore::in_memory())?;
            let replay = verify_chain(&genesis, &blocks, &store);
            let state = replay.replayed_state.unwrap_or_default();
            let fiat_run = fiat::simulate(&payments);
            let loss = fiat::information_loss(&payments, &fiat_run, |p| recover_from_lien(&project, &state, &store, p));
            rows.push((entry.clone(), payments, loss));
        }
        Ok(Report::build(&manifest, &profiles, rows.iter().map(|(e, p, l)| (e, p, *l))))
    }

    pub fn to_json(&self) -> Vec<u8> {
        pretty(self)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "profile",
            "scenario",
            "code",
            "reference_test",
            "payments",
            "failures",
            "total_paid_cents",
            "payments_per_trade_per_month",
            "mean_payees_per_payment",
            "mean_elements_per_payment",
            "fiat_pooled_entries",
            "fiat_pooled_recovered",
            "crypto_payments",
            "crypto_recovered",
        ])
        .expect("in-memory CSV");
        for s in &self.scenarios {
            w.write_record([
                s.dataset.clone(),
                s.profile.clone(),
                s.scenario_id.to_string(),
                s.code.clone(),
                s.reference_test.map(|t| t.to_string()).unwrap_or_default(),
                s.payments.to_string(),
                s.failures.to_string(),
                s.total_paid_cents.to_string(),
                s.metrics.payments_per_trade_per_month.to_string(),
                s.metrics.mean_payees_per_payment.to_string(),
                s.metrics.mean_elements_per_payment.to_string(),
                s.information_loss.fiat_pooled_entries.to_string(),
                s.information_loss.fiat_pooled_recovered.to_string(),
                s.information_loss.crypto_payments.to_string(),
                s.information_loss.crypto_recovered.to_string(),
            ])
            .expect("in-memory CSV");
        }
        w.into_inner().expect("in-memory CSV")
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Scenario matrix report\n");
        let _ = writeln!(md, "seed {} · asset {:?} · flowledger {}\n", self.seed, self.asset, self.tool_version);
        let _ = writeln!(md, "## Configuration to reference test mapping\n");
        let _ = writeln!(md, "| scenario | code | product | time | trade | test (UGV) | test (UAV) |");
        let _ = writeln!(md, "|---|---|---|---|---|---|---|");
        for m in &self.test_mapping {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                m.scenario_id, m.code, m.product, m.time, m.trade, m.reference_test_ugv, m.reference_test_uav
            );
        }
        let _ = writeln!(md, "\n## Metrics\n");
        for (k, v) in &self.metric_definitions {
            let _ = writeln!(md, "- `{k}`: {v}");
        }
        let _ = writeln!(md);
        let _ = writeln!(
            md,
            "| dataset | scenario | test | payments | failures | paid (cents) | payments/trade/month | payees/payment | elements/payment |"
        );
        let _ = writeln!(md, "|---|---|---|---|---|---|---|---|---|");
        for s in &self.scenarios {
            let _ = writeln!(
                md,
                "| {} | s{}-{} | {} | {} | {} | {} | {} ({:.2}) | {} ({:.2}) | {} ({:.2}) |",
                s.dataset,
                s.scenario_id,
                s.code,
                s.reference_test.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
                s.payments,
                s.failures,
                s.total_paid_cents,
                s.metrics.payments_per_trade_per_month,
                s.metrics.payments_per_trade_per_month.to_f64(),
                s.metrics.mean_payees_per_payment,
                s.metrics.mean_payees_per_payment.to_f64(),
                s.metrics.mean_elements_per_payment,
                s.metrics.mean_elements_per_payment.to_f64(),
            );
        }
        let _ = writeln!(md, "\n## Evidence recoverability: bank books vs lien tokens\n");
        let _ = writeln!(
            md,
            "Per-element scope recovered from bank entries that pool two or more elements, and from each crypto payment via its lien token.\n"
        );
        let _ = writeln!(md, "| dataset | scenario | fiat pooled entries | recovered | crypto payments | recovered |");
        let _ = writeln!(md, "|---|---|---|---|---|---|");
        for s in &self.scenarios {
            let l = &s.information_loss;
            let _ = writeln!(
                md,
                "| {} | s{}-{} | {} | {} | {} | {} |",
                s.dataset,
                s.scenario_id,
                s.code,
                l.fiat_pooled_entries,
                pct(l.fiat_rate()),
                l.crypto_payments,
                pct(l.crypto_rate()),
            );
        }
        md
    }
}

fn pct(rate: Option<f64>) -> String {
    rate.map_or_else(|| "n/a".into(), |r| format!("{:.0}%", r * 100.0))
}
