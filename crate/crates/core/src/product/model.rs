use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingElement {
    pub guid: String,
    pub element_type: String,
    pub trades: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SovEntry {
    pub guid: String,
    pub trade: String,
    pub value_cents: u64,
}

/// Level of detail of a progress snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lod {
    PerElement,
    Aggregate,
}

/// One progress observation: cumulative completion of `trade` on `key`
/// (an element GUID or, for aggregate snapshots, an element type).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressReading {
    pub key: String,
    pub trade: String,
    pub basis_points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressSnapshot {
    pub snapshot_id: String,
    pub captured_at: u64,
    pub lod: Lod,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_element: Vec<ProgressReading>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_type: Vec<ProgressReading>,
    pub source: String,
}

impl ProgressSnapshot {
    pub fn readings(&self) -> &[ProgressReading] {
        match self.lod {
            Lod::PerElement => &self.per_element,
            Lod::Aggregate => &self.per_type,
        }
    }
}

/// A half-open logical time window `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BillingPeriod {
    pub start: u64,
    pub end: u64,
    pub label: String,
}

impl BillingPeriod {
    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t < self.end
    }
}

/// What a scope key names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyKind {
    Element,
    ElementType,
}

/// Unit of work a payment is computed over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "key", rename_all = "snake_case")]
pub enum ScopeSelector {
    Element(String),
    ElementType(String),
}

impl fmt::Display for ScopeSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeSelector::Element(g) => write!(f, "element:{g}"),
            ScopeSelector::ElementType(t) => write!(f, "type:{t}"),
        }
    }
}

/// The work settled by one payment: which keys, which trades, which period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkScope {
    pub selector: ScopeSelector,
    pub key_kind: KeyKind,
    pub keys: Vec<String>,
    pub trades: Vec<String>,
    pub period: BillingPeriod,
}

const TAG_SCOPE: u8 = 0x57;
const TAG_LIST: u8 = 0x4b;

impl WorkScope {
    /// Canonical binary form, as stored inside lien tokens.
    pub fn encode(&self) -> Vec<u8> {
        let (sel_kind, sel_key) = match &self.selector {
            ScopeSelector::Element(k) => (0u8, k),
            ScopeSelector::ElementType(k) => (1u8, k),
        };
        let key_kind = match self.key_kind {
            KeyKind::Element => 0u8,
            KeyKind::ElementType => 1u8,
        };
        codec::encode_fields(
            TAG_SCOPE,
            &[
                vec![sel_kind],
                sel_key.as_bytes().to_vec(),
                vec![key_kind],
                codec::encode_fields(TAG_LIST, &self.keys),
                codec::encode_fields(TAG_LIST, &self.trades),
                self.period.start.to_be_bytes().to_vec(),
                self.period.end.to_be_bytes().to_vec(),
                self.period.label.as_bytes().to_vec(),
            ],
        )
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, codec::CodecError> {
        let f = codec::decode_exact(bytes, TAG_SCOPE, 8)?;
        let sel_key = codec::str_field(&f, 1)?;
        let selector = match f[0] {
            [0] => ScopeSelector::Element(sel_key),
            [1] => ScopeSelector::ElementType(sel_key),
            other => return Err(codec::CodecError::FieldLength { index: 0, len: other.len() }),
        };
        let key_kind = match f[2] {
            [0] => KeyKind::Element,
            [1] => KeyKind::ElementType,
            other => return Err(codec::CodecError::FieldLength { index: 2, len: other.len() }),
        };
        let list = |i: usize| -> Result<Vec<String>, codec::CodecError> {
            let (tag, items) = codec::decode_fields(f[i])?;
            if tag != TAG_LIST {
                return Err(codec::CodecError::Tag { expected: TAG_LIST, found: tag });
            }
            (0..items.len()).map(|j| codec::str_field(&items, j)).collect()
        };
        Ok(WorkScope {
            selector,
            key_kind,
            keys: list(3)?,
            trades: list(4)?,
            period: BillingPeriod {
                start: codec::u64_field(&f, 5)?,
                end: codec::u64_field(&f, 6)?,
                label: codec::str_field(&f, 7)?,
            },
        })
    }
}

/// One priced line of a progress delta.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaItem {
    pub key: String,
    pub key_kind: KeyKind,
    pub trade: String,
    pub delta_basis_points: u32,
    /// Amount this item contributes to the payment.
    pub value_cents: u64,
    /// Scheduled value the item is priced against.
    pub scheduled_cents: u64,
    pub paid_bp_before: u32,
    pub paid_cents_before: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkDelta {
    pub items: Vec<DeltaItem>,
    pub period: BillingPeriod,
}

impl WorkDelta {
    pub fn total_cents(&self) -> u64 {
        self.items.iter().map(|i| i.value_cents).sum()
    }
}
