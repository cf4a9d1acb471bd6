use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::*;
use super::valuation::{item_payment, valuation, FULL_BP};
use crate::store::{canonical_json, Cid, ContentStore, StoreError};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unknown element type {0:?}")]
    UnknownElementType(String),
    #[error("unknown trade {trade:?} for {key:?}")]
    UnknownTrade { key: String, trade: String },
    #[error("duplicate snapshot id {0:?}")]
    DuplicateSnapshotId(String),
    #[error("duplicate element guid {0:?}")]
    DuplicateElement(String),
    #[error("element {0:?} lists no trades")]
    NoTrades(String),
    #[error("schedule of values has no entry for ({guid:?}, {trade:?})")]
    MissingScheduleEntry { guid: String, trade: String },
    #[error("schedule of values entry ({guid:?}, {trade:?}) does not match the project")]
    StrayScheduleEntry { guid: String, trade: String },
    #[error("snapshot {0:?} populates the wrong progress section for its level of detail")]
    LodSections(String),
    #[error("snapshot {id:?} reports {bp} basis points, above 10000")]
    BasisPointsRange { id: String, bp: u32 },
    #[error("scope {scope} needs per-element progress but period {period:?} only has aggregate snapshots")]
    LodMismatch { scope: ScopeSelector, period: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Fixed project information carried by a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectInfo {
    pub name: String,
    pub profile: String,
    pub bim_ref: Option<String>,
    pub horizon_start: u64,
    pub horizon_days: u32,
    /// Trades in payment-routing order.
    pub trades: Vec<String>,
}

/// On-disk project dataset (see `docs/project-schema.md`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectDataset {
    pub project: ProjectInfo,
    pub elements: Vec<BuildingElement>,
    pub schedule_of_values: Vec<SovEntry>,
    pub snapshots: Vec<ProgressSnapshot>,
}

impl ProjectDataset {
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = canonical_json(self);
        out.push(b'\n');
        out
    }

    pub fn from_slice(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }
}

/// A snapshot accepted into the project timeline, with the CID of its
/// canonical bytes.
#[derive(Debug, Clone)]
pub struct IngestedSnapshot {
    pub snapshot: ProgressSnapshot,
    pub cid: Cid,
}

/// Payment history per item: basis points and cents already compensated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PaidItem {
    pub bp: u32,
    pub cents: u64,
}

pub type ItemKey = (KeyKind, String, String);

#[derive(Debug, Clone, Default)]
pub struct PaidState {
    items: BTreeMap<ItemKey, PaidItem>,
}

impl PaidState {
    pub fn get(&self, kind: KeyKind, key: &str, trade: &str) -> PaidItem {
        self.items
            .get(&(kind, key.to_string(), trade.to_string()))
            .copied()
            .unwrap_or_default()
    }

    /// Records that `item` has been paid.
    pub fn commit(&mut self, item: &DeltaItem) {
        let e = self.items.entry((item.key_kind, item.key.clone(), item.trade.clone())).or_default();
        e.bp += item.delta_basis_points;
        e.cents += item.value_cents;
        debug_assert!(e.bp <= FULL_BP);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ItemKey, &PaidItem)> {
        self.items.iter()
    }
}

/// A reading that went backwards relative to what was already paid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regression {
    pub key: String,
    pub trade: String,
    pub paid_bp: u32,
    pub observed_bp: u32,
}

#[derive(Debug, Clone)]
pub struct DeltaOutcome {
    pub delta: WorkDelta,
    pub regressions: Vec<Regression>,
    /// Snapshots the delta was read from.
    pub snapshots: Vec<(String, Cid)>,
}

/// Latest basis points per (key, trade).
type LatestReadings<'a> = BTreeMap<(&'a str, &'a str), u32>;

#[derive(Debug, Clone)]
pub struct Project {
    info: ProjectInfo,
    elements: Vec<BuildingElement>,
    by_guid: BTreeMap<String, usize>,
    by_type: BTreeMap<String, Vec<usize>>,
    sov: BTreeMap<(String, String), u64>,
    sov_cid: Cid,
    timeline: Vec<IngestedSnapshot>,
}

impl Project {
    /// Validates the static part of a project and stores its schedule of
    /// values document.
    pub fn new(
        info: ProjectInfo,
        elements: Vec<BuildingElement>,
        schedule: &[SovEntry],
        store: &mut ContentStore,
    ) -> Result<Self, ProductError> {
        let known_trades: BTreeSet<&String> = info.trades.iter().collect();
        let mut by_guid = BTreeMap::new();
        let mut by_type: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, el) in elements.iter().enumerate() {
            if by_guid.insert(el.guid.clone(), i).is_some() {
                return Err(ProductError::DuplicateElement(el.guid.clone()));
            }
            if el.trades.is_empty() {
                return Err(ProductError::NoTrades(el.guid.clone()));
            }
            if let Some(t) = el.trades.iter().find(|t| !known_trades.contains(t)) {
                return Err(ProductError::UnknownTrade { key: el.guid.clone(), trade: t.clone() });
            }
            by_type.entry(el.element_type.clone()).or_default().push(i);
        }
        let mut sov = BTreeMap::new();
        for e in schedule {
            let ok = by_guid
                .get(&e.guid)
                .is_some_and(|&i| elements[i].trades.contains(&e.trade));
            if !ok || sov.insert((e.guid.clone(), e.trade.clone()), e.value_cents).is_some() {
                return Err(ProductError::StrayScheduleEntry { guid: e.guid.clone(), trade: e.trade.clone() });
            }
        }
        for el in &elements {
            for t in &el.trades {
                if !sov.contains_key(&(el.guid.clone(), t.clone())) {
                    return Err(ProductError::MissingScheduleEntry { guid: el.guid.clone(), trade: t.clone() });
                }
            }
        }
        let sov_cid = store.put_content(&canonical_json(&schedule))?;
        Ok(Project { info, elements, by_guid, by_type, sov, sov_cid, timeline: Vec::new() })
    }

    /// Builds a project from a dataset file, ingesting every snapshot.
    pub fn from_dataset(dataset: &ProjectDataset, store: &mut ContentStore) -> Result<Self, ProductError> {
        let mut project = Project::new(
            dataset.project.clone(),
            dataset.elements.clone(),
            &dataset.schedule_of_values,
            store,
        )?;
        for s in &dataset.snapshots {
            project.ingest_snapshot(s.clone(), store)?;
        }
        Ok(project)
    }

    pub fn info(&self) -> &ProjectInfo {
        &self.info
    }

    pub fn elements(&self) -> &[BuildingElement] {
        &self.elements
    }

    pub fn element(&self, guid: &str) -> Option<&BuildingElement> {
        self.by_guid.get(guid).map(|&i| &self.elements[i])
    }

    pub fn element_types(&self) -> impl Iterator<Item = &str> {
        self.by_type.keys().map(String::as_str)
    }

    pub fn elements_of_type<'a>(&'a self, element_type: &str) -> impl Iterator<Item = &'a BuildingElement> + 'a {
        self.by_type
            .get(element_type)
            .into_iter()
            .flatten()
            .map(move |&i| &self.elements[i])
    }

    pub fn scheduled_value(&self, guid: &str, trade: &str) -> Option<u64> {
        self.sov.get(&(guid.to_string(), trade.to_string())).copied()
    }

    /// Sum of scheduled values of every element of `element_type` for `trade`.
    pub fn type_scheduled_value(&self, element_type: &str, trade: &str) -> u64 {
        self.elements_of_type(element_type)
            .filter_map(|e| self.scheduled_value(&e.guid, trade))
            .sum()
    }

    pub fn total_scheduled_value(&self) -> u64 {
        self.sov.values().sum()
    }

    pub fn sov_cid(&self) -> Cid {
        self.sov_cid
    }

    pub fn timeline(&self) -> &[IngestedSnapshot] {
        &self.timeline
    }

    /// Trades applicable to at least one element of `element_type`, in
    /// project trade order.
    pub fn type_trades(&self, element_type: &str) -> Vec<String> {
        let used: BTreeSet<&String> = self.elements_of_type(element_type).flat_map(|e| &e.trades).collect();
        self.info.trades.iter().filter(|t| used.contains(t)).cloned().collect()
    }

    /// Validates a snapshot, stores its canonical bytes and appends it to
    /// the timeline in capture order.
    pub fn ingest_snapshot(
        &mut self,
        snapshot: ProgressSnapshot,
        store: &mut ContentStore,
    ) -> Result<Cid, ProductError> {
        if self.timeline.iter().any(|s| s.snapshot.snapshot_id == snapshot.snapshot_id) {
            return Err(ProductError::DuplicateSnapshotId(snapshot.snapshot_id));
        }
        let wrong_section = match snapshot.lod {
            Lod::PerElement => !snapshot.per_type.is_empty(),
            Lod::Aggregate => !snapshot.per_element.is_empty(),
        };
        if wrong_section {
            return Err(ProductError::LodSections(snapshot.snapshot_id));
        }
        for r in snapshot.readings() {
            if r.basis_points > FULL_BP {
                return Err(ProductError::BasisPointsRange {
                    id: snapshot.snapshot_id.clone(),
                    bp: r.basis_points,
                });
            }
            let trade_ok = match snapshot.lod {
                Lod::PerElement => {
                    let el = self.element(&r.key).ok_or_else(|| ProductError::UnknownElement(r.key.clone()))?;
                    el.trades.contains(&r.trade)
                }
                Lod::Aggregate => {
                    if !self.by_type.contains_key(&r.key) {
                        return Err(ProductError::UnknownElementType(r.key.clone()));
                    }
                    self.type_trades(&r.key).contains(&r.trade)
                }
            };
            if !trade_ok {
                return Err(ProductError::UnknownTrade { key: r.key.clone(), trade: r.trade.clone() });
            }
        }
        let cid = store.put_content(&canonical_json(&snapshot))?;
        let pos = self
            .timeline
            .partition_point(|s| s.snapshot.captured_at <= snapshot.captured_at);
        self.timeline.insert(pos, IngestedSnapshot { snapshot, cid });
        Ok(cid)
    }

    /// Latest reading per (key, trade) among snapshots of `lod` captured in
    /// `window`, plus the snapshots consulted.
    fn latest_readings(
        &self,
        window: &BillingPeriod,
        lod: Lod,
    ) -> (LatestReadings<'_>, Vec<(String, Cid)>) {
        let mut latest = BTreeMap::new();
        let mut used = Vec::new();
        for s in self
            .timeline
            .iter()
            .filter(|s| s.snapshot.lod == lod && window.contains(s.snapshot.captured_at))
        {
            used.push((s.snapshot.snapshot_id.clone(), s.cid));
            for r in s.snapshot.readings() {
                latest.insert((r.key.as_str(), r.trade.as_str()), r.basis_points);
            }
        }
        (latest, used)
    }

    fn has_lod_in(&self, window: &BillingPeriod, lod: Lod) -> bool {
        self.timeline
            .iter()
            .any(|s| s.snapshot.lod == lod && window.contains(s.snapshot.captured_at))
    }

    /// Progress made on `scope` during `window` beyond what `paid` already
    /// covers, priced per item. Items with no new progress are omitted;
    /// readings below the paid level are reported as regressions.
    pub fn compute_delta(
        &self,
        paid: &PaidState,
        window: &BillingPeriod,
        scope: &ScopeSelector,
    ) -> Result<DeltaOutcome, ProductError> {
        let per_element = self.has_lod_in(window, Lod::PerElement);
        let aggregate = self.has_lod_in(window, Lod::Aggregate);

        // (key kind, key, trade, scheduled value) candidates in scope
        let mut candidates: Vec<(KeyKind, String, String, u64)> = Vec::new();
        let lod = match scope {
            ScopeSelector::Element(guid) => {
                let el = self.element(guid).ok_or_else(|| ProductError::UnknownElement(guid.clone()))?;
                if !per_element && aggregate {
                    return Err(ProductError::LodMismatch { scope: scope.clone(), period: window.label.clone() });
                }
                for t in &el.trades {
                    let v = self.sov[&(guid.clone(), t.clone())];
                    candidates.push((KeyKind::Element, guid.clone(), t.clone(), v));
                }
                Lod::PerElement
            }
            ScopeSelector::ElementType(ty) => {
                if !self.by_type.contains_key(ty) {
                    return Err(ProductError::UnknownElementType(ty.clone()));
                }
                if per_element || !aggregate {
                    for el in self.elements_of_type(ty) {
                        for t in &el.trades {
                            let v = self.sov[&(el.guid.clone(), t.clone())];
                            candidates.push((KeyKind::Element, el.guid.clone(), t.clone(), v));
                        }
                    }
                    Lod::PerElement
                } else {
                    for t in self.type_trades(ty) {
                        let v = self.type_scheduled_value(ty, &t);
                        candidates.push((KeyKind::ElementType, ty.clone(), t, v));
                    }
                    Lod::Aggregate
                }
            }
        };

        let (latest, snapshots) = self.latest_readings(window, lod);
        let mut items = Vec::new();
        let mut regressions = Vec::new();
        for (kind, key, trade, scheduled) in candidates {
            let Some(&observed) = latest.get(&(key.as_str(), trade.as_str())) else {
                continue;
            };
            let before = paid.get(kind, &key, &trade);
            if observed < before.bp {
                regressions.push(Regression { key, trade, paid_bp: before.bp, observed_bp: observed });
                continue;
            }
            let delta = (observed - before.bp).min(FULL_BP - before.bp);
            if delta == 0 {
                continue;
            }
            items.push(DeltaItem {
                value_cents: item_payment(scheduled, before.bp, before.cents, delta),
                key,
                key_kind: kind,
                trade,
                delta_basis_points: delta,
                scheduled_cents: scheduled,
                paid_bp_before: before.bp,
                paid_cents_before: before.cents,
            });
        }
        Ok(DeltaOutcome {
            delta: WorkDelta { items, period: window.clone() },
            regressions,
            snapshots,
        })
    }

    /// Valuation of aggregate progress: the percentage applies to the
    /// type's total scheduled value for the trade.
    pub fn aggregate_valuation(&self, element_type: &str, trade: &str, delta_bp: u32) -> u64 {
        valuation(delta_bp, self.type_scheduled_value(element_type, trade))
    }
}
