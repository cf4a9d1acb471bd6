//! Evidence bundles: the off-chain record a payment and its lien token
//! point to.

use serde::{Deserialize, Serialize};

use super::Cid;
use crate::hash::Address;
use crate::product::{item_payment, WorkDelta, WorkScope};

pub use crate::product::DeltaItem as EvidenceItem;

/// Canonical JSON: UTF-8, object keys sorted, no insignificant whitespace.
/// Every value this crate serializes is an integer, string, bool, null or
/// container, so the bytes are stable across platforms.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    // serde_json::Value keeps objects in a BTreeMap, which sorts keys.
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_vec(&v).expect("in-memory JSON")
}

/// Everything needed to re-derive one payment from its product-flow
/// trigger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceBundle {
    pub payee: Address,
    pub amount_cents: u64,
    pub scope: WorkScope,
    pub progress_delta: WorkDelta,
    pub snapshot_ids: Vec<String>,
    pub snapshot_cids: Vec<Cid>,
    pub sov_cid: Cid,
    pub bim_ref: Option<String>,
}

impl EvidenceBundle {
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        canonical_json(self)
    }

    pub fn from_slice(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    /// Recomputes the payment from the itemised delta: every item must be
    /// priced by the valuation rule and the items must sum to the amount.
    /// Returns the re-derived amount.
    pub fn rederive_amount(&self) -> Option<u64> {
        let mut total = 0u64;
        for item in &self.progress_delta.items {
            let expected = item_payment(
                item.scheduled_cents,
                item.paid_bp_before,
                item.paid_cents_before,
                item.delta_basis_points,
            );
            if expected != item.value_cents || item.delta_basis_points == 0 {
                return None;
            }
            total = total.checked_add(expected)?;
        }
        (total == self.amount_cents).then_some(total)
    }
}
