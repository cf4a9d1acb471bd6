//! Independent re-check of a run directory.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::run::*;
use super::HarnessError;
use crate::engine::{PaymentDataset, Roles};
use crate::fiat;
use crate::hash::Digest;
use crate::ledger::{import_jsonl, verify_chain, Block, Genesis, StateDump, TxKind};
use crate::product::{Project, ProjectDataset};
use crate::store::{canonical_json, Cid, ContentStore, EvidenceBundle, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    /// File or directory, relative to the run directory.
    pub location: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cid: Option<Cid>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.location)?;
        if let Some(h) = self.height {
            write!(f, " height {h}")?;
        }
        if let Some(c) = &self.cid {
            write!(f, " cid {c}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub scenarios: usize,
    pub blocks: usize,
    pub payments: usize,
    pub evidence_objects: usize,
    pub findings: Vec<Finding>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, location: &str, message: impl Into<String>) {
        self.findings.push(Finding { location: location.into(), height: None, cid: None, message: message.into() });
    }

    fn push_at(&mut self, location: &str, height: Option<u64>, cid: Option<Cid>, message: impl Into<String>) {
        self.findings.push(Finding { location: location.into(), height, cid, message: message.into() });
    }
}

fn store_cid(e: &StoreError) -> Option<Cid> {
    match e {
        StoreError::NotFound(c) | StoreError::IntegrityFailure(c) => Some(*c),
        _ => None,
    }
}

/// Height of the first export line that does not round-trip to itself.
fn first_bad_line(bytes: &[u8]) -> Option<u64> {
    for (height, line) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        let ok = serde_json::from_slice::<Block>(line.strip_suffix(b"\n").unwrap_or(line))
            .is_ok_and(|b| crate::ledger::export_jsonl(std::slice::from_ref(&b)) == line);
        if !ok {
            return Some(height as u64);
        }
    }
    None
}

/// Re-checks everything a run wrote. Problems become findings; only an
/// unreadable manifest is an error.
pub fn verify(dir: &Path) -> Result<VerifyReport, HarnessError> {
    let manifest_bytes = read(&dir.join(MANIFEST))?;
    let manifest: RunManifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| HarnessError::Usage(format!("{MANIFEST}: {e}")))?;
    let mut report = VerifyReport::default();
    if manifest.to_bytes() != manifest_bytes {
        report.push(MANIFEST, "not in canonical form");
    }

    let mut projects = Vec::new();
    for d in &manifest.datasets {
        let bytes = match read(&dir.join(&d.file)) {
            Ok(b) => b,
            Err(e) => {
                report.push(&d.file, e.to_string());
                continue;
            }
        };
        if Digest::of(&bytes) != d.sha256 {
            report.push(&d.file, "digest differs from manifest");
        }
        match ProjectDataset::from_slice(&bytes) {
            Ok(ds) if ds.to_canonical_bytes() == bytes => projects.push((d.name.clone(), ds)),
            Ok(_) => report.push(&d.file, "not in canonical form"),
            Err(e) => report.push(&d.file, e.to_string()),
        }
    }

    for entry in &manifest.scenarios {
        report.scenarios += 1;
        let Some((_, dataset)) = projects.iter().find(|(n, _)| *n == entry.dataset) else {
            report.push(&entry.dir, format!("dataset {:?} unavailable", entry.dataset));
            continue;
        };
        verify_scenario(dir, entry, dataset, &mut report);
    }
    Ok(report)
}

fn verify_scenario(root: &Path, entry: &ScenarioEntry, dataset: &ProjectDataset, report: &mut VerifyReport) {
    let dir = root.join(&entry.dir);
    let loc = |f: &str| format!("{}/{f}", entry.dir);

    let store = match ContentStore::open(dir.join(EVIDENCE_DIR)) {
        Ok(s) => s,
        Err(e) => return report.push(&loc(EVIDENCE_DIR), e.to_string()),
    };
    match store.audit() {
        Ok(failures) => {
            for f in failures {
                report.push_at(&loc(EVIDENCE_DIR), None, store_cid(&f), f.to_string());
            }
        }
        Err(e) => report.push(&loc(EVIDENCE_DIR), e.to_string()),
    }
    report.evidence_objects += store.list().map_or(0, |l| l.len());

    // the project documents must be the ones the run stored
    let mut scratch = ContentStore::in_memory();
    let project = match Project::from_dataset(dataset, &mut scratch) {
        Ok(p) => p,
        Err(e) => return report.push(&entry.dir, e.to_string()),
    };
    for cid in scratch.list().unwrap_or_default() {
        if let Err(e) = store.get_content(&cid) {
            report.push_at(&loc(EVIDENCE_DIR), None, Some(cid), format!("project document: {e}"));
        }
    }

    let genesis = match read(&dir.join(GENESIS)).and_then(|b| {
        let g: Genesis =
            serde_json::from_slice(&b).map_err(|e| HarnessError::Usage(format!("{GENESIS}: {e}")))?;
        if canonical_json(&g) != b {
            return Err(HarnessError::Usage(format!("{GENESIS}: not in canonical form")));
        }
        Ok(g)
    }) {
        Ok(g) => g,
        Err(e) => return report.push(&loc(GENESIS), e.to_string()),
    };
    let blocks: Vec<Block> = match read(&dir.join(CHAIN)).and_then(|b| import_jsonl(&b).map_err(Into::into)) {
        Ok(b) => b,
        Err(e) => {
            let height = read(&dir.join(CHAIN)).ok().and_then(|b| first_bad_line(&b));
            return report.push_at(&loc(CHAIN), height, None, e.to_string());
        }
    };
    report.blocks += blocks.len();
    let chain = verify_chain(&genesis, &blocks, &store);
    for f in &chain.findings {
        report.push_at(&loc(CHAIN), Some(f.height), None, format!("{:?}", f.kind));
    }
    let Some(state) = chain.replayed_state else { return };

    match read(&dir.join(STATE)) {
        Ok(bytes) => match serde_json::from_slice::<StateDump>(&bytes) {
            Ok(dump) if canonical_json(&dump) != bytes => report.push(&loc(STATE), "not in canonical form"),
            Ok(dump) if dump != state.dump() => report.push(&loc(STATE), "differs from the replayed state"),
            Ok(_) => {}
            Err(e) => report.push(&loc(STATE), e.to_string()),
        },
        Err(e) => report.push(&loc(STATE), e.to_string()),
    }

    let payments: PaymentDataset = match read(&dir.join(PAYMENTS_JSON)).and_then(|b| {
        let ds: PaymentDataset =
            serde_json::from_slice(&b).map_err(|e| HarnessError::Usage(format!("{PAYMENTS_JSON}: {e}")))?;
        if ds.to_json() != b {
            return Err(HarnessError::Usage(format!("{PAYMENTS_JSON}: not in canonical form")));
        }
        Ok(ds)
    }) {
        Ok(ds) => ds,
        Err(e) => return report.push(&loc(PAYMENTS_JSON), e.to_string()),
    };
    if payments.dataset != entry.dataset || payments.scenario_id != entry.scenario_id {
        report.push(&loc(PAYMENTS_JSON), "does not belong to this scenario");
    }
    if payments.recompute_metrics() != payments.metrics {
        report.push(&loc(PAYMENTS_JSON), "metrics do not match the payments");
    }
    match read(&dir.join(PAYMENTS_CSV)) {
        Ok(b) if b != payments.to_csv() => report.push(&loc(PAYMENTS_CSV), "differs from payments.json"),
        Ok(b) => match super::metrics_from_csv(&b) {
            Ok(m) if m != super::CsvMetrics::of(&payments.metrics) => {
                report.push(&loc(PAYMENTS_CSV), "recounted metrics differ")
            }
            Ok(_) => {}
            Err(e) => report.push(&loc(PAYMENTS_CSV), e.to_string()),
        },
        Err(e) => report.push(&loc(PAYMENTS_CSV), e.to_string()),
    }
    match read(&dir.join(FIAT_CSV)) {
        Ok(b) if b != fiat::simulate(&payments).reserve.entries_csv() => {
            report.push(&loc(FIAT_CSV), "differs from the simulated bank books")
        }
        Ok(_) => {}
        Err(e) => report.push(&loc(FIAT_CSV), e.to_string()),
    }

    let roles = Roles::default();
    let registry = state.lien_registry(&roles.lien_registry);
    let mut seen_batches = 0usize;
    for p in &payments.payments {
        report.payments += 1;
        let at = Some(p.block_height);
        let cid = Some(p.evidence_cid);
        let location = loc(PAYMENTS_JSON);
        let in_block = blocks.get(p.block_height as usize).is_some_and(|b| {
            b.batches.iter().any(|batch| batch.transactions == [p.payment.clone(), p.lien.clone()])
        });
        if !in_block {
            report.push_at(&location, at, cid, "payment batch not found in its block");
        }
        if p.payment.evidence_cid != cid || p.lien.evidence_cid != cid {
            report.push_at(&location, at, cid, "payment and lien do not share the evidence CID");
        }
        if p.lien.kind != TxKind::LienMintTransfer || p.payment.amount != u128::from(p.amount_cents) {
            report.push_at(&location, at, cid, "transaction pair does not match the record");
        }
        let bundle = match store.get_content(&p.evidence_cid) {
            Ok(bytes) => match EvidenceBundle::from_slice(&bytes) {
                Ok(b) if b.to_canonical_bytes() == bytes => b,
                Ok(_) => {
                    report.push_at(&location, at, cid, "evidence not in canonical form");
                    continue;
                }
                Err(e) => {
                    report.push_at(&location, at, cid, format!("evidence does not decode: {e}"));
                    continue;
                }
            },
            Err(e) => {
                report.push_at(&location, at, cid, format!("evidence: {e}"));
                continue;
            }
        };
        if bundle.rederive_amount() != Some(p.amount_cents) || bundle.payee != p.payee || bundle.scope != p.scope {
            report.push_at(&location, at, cid, "amount or scope cannot be re-derived from the evidence");
        }
        if bundle.sov_cid != project.sov_cid() {
            report.push_at(&location, at, cid, "evidence cites a different schedule of values");
        }
        for c in &bundle.snapshot_cids {
            if let Err(e) = store.get_content(c) {
                report.push_at(&loc(EVIDENCE_DIR), at, Some(*c), format!("snapshot: {e}"));
            }
        }
        let token = registry.and_then(|r| r.token(p.lien_token_id).ok());
        match token {
            Some(t) if t.uri_cid == p.evidence_cid && t.scope == bundle.scope && t.owner == roles.owner => {}
            _ => report.push_at(&location, at, cid, format!("lien token {} does not point at the evidence", p.lien_token_id)),
        }
        if bundle_elements(&project, &bundle).len() as u64 != p.element_count {
            report.push_at(&location, at, cid, "element count differs from the evidence");
        }
        seen_batches += 1;
    }
    let batches: usize = blocks.iter().map(|b| b.batches.len()).sum();
    if batches != seen_batches {
        report.push(&loc(CHAIN), format!("{batches} batches on chain, {seen_batches} verified payment records"));
    }
}
