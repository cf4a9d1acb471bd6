use serde::{Deserialize, Serialize};

use crate::codec::{self, CodecError};
use crate::hash::{Address, Digest};
use crate::product::WorkScope;
use crate::store::Cid;

const TAG_TX: u8 = 0x54;
const TAG_BATCH: u8 = 0x62;
const TAG_TOKEN_PAYLOAD: u8 = 0x46;
const TAG_MINT_PAYLOAD: u8 = 0x4d;
const CALL_LIEN_TRANSFER: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TxKind {
    NativeTransfer,
    TokenTransfer,
    LienMintTransfer,
    ContractCall,
}

impl TxKind {
    fn code(self) -> u8 {
        match self {
            TxKind::NativeTransfer => 0,
            TxKind::TokenTransfer => 1,
            TxKind::LienMintTransfer => 2,
            TxKind::ContractCall => 3,
        }
    }
}

/// A ledger transaction. `id` is the SHA-256 of the canonical encoding of
/// every other field (see `docs/tx-format.md`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub id: Digest,
    pub from: Address,
    pub to: Address,
    pub kind: TxKind,
    pub amount: u128,
    #[serde(with = "crate::hexfmt::bytes")]
    pub payload: Vec<u8>,
    pub evidence_cid: Option<Cid>,
    pub nonce: u64,
}

impl Transaction {
    pub fn new(
        from: Address,
        to: Address,
        kind: TxKind,
        amount: u128,
        payload: Vec<u8>,
        evidence_cid: Option<Cid>,
        nonce: u64,
    ) -> Self {
        let mut tx = Transaction { id: Digest::ZERO, from, to, kind, amount, payload, evidence_cid, nonce };
        tx.id = Digest::of(&tx.encode());
        tx
    }

    pub fn native(from: Address, to: Address, amount: u128, nonce: u64) -> Self {
        Self::new(from, to, TxKind::NativeTransfer, amount, Vec::new(), None, nonce)
    }

    /// Canonical encoding of every field except `id`.
    pub fn encode(&self) -> Vec<u8> {
        let cid = self.evidence_cid.map(|c| c.to_bytes().to_vec()).unwrap_or_default();
        codec::encode_fields(
            TAG_TX,
            &[
                self.from.as_bytes().as_slice(),
                self.to.as_bytes(),
                &[self.kind.code()],
                &self.amount.to_be_bytes(),
                &self.payload,
                &cid,
                &self.nonce.to_be_bytes(),
            ],
        )
    }

    pub fn computed_id(&self) -> Digest {
        Digest::of(&self.encode())
    }

    pub fn id_is_consistent(&self) -> bool {
        self.computed_id() == self.id
    }
}

/// Recipient of a fungible-token transfer.
pub fn token_payload(recipient: &Address) -> Vec<u8> {
    codec::encode_fields(TAG_TOKEN_PAYLOAD, &[recipient.as_bytes()])
}

pub fn decode_token_payload(bytes: &[u8]) -> Result<Address, CodecError> {
    let f = codec::decode_exact(bytes, TAG_TOKEN_PAYLOAD, 1)?;
    Ok(Address(codec::fixed::<20>(&f, 0)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LienMint {
    pub owner: Address,
    pub uri_cid: Cid,
    pub scope: WorkScope,
}

pub fn lien_mint_payload(mint: &LienMint) -> Vec<u8> {
    codec::encode_fields(
        TAG_MINT_PAYLOAD,
        &[mint.owner.as_bytes().as_slice(), &mint.uri_cid.to_bytes(), &mint.scope.encode()],
    )
}

pub fn decode_lien_mint_payload(bytes: &[u8]) -> Result<LienMint, CodecError> {
    let f = codec::decode_exact(bytes, TAG_MINT_PAYLOAD, 3)?;
    Ok(LienMint {
        owner: Address(codec::fixed::<20>(&f, 0)?),
        uri_cid: Cid::from_bytes(f[1]).map_err(|_| CodecError::FieldLength { index: 1, len: f[1].len() })?,
        scope: WorkScope::decode(f[2])?,
    })
}

/// Contract calls understood by the built-in contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractCall {
    LienTransfer { token_id: u64, to: Address },
}

pub fn call_payload(call: &ContractCall) -> Vec<u8> {
    match call {
        ContractCall::LienTransfer { token_id, to } => {
            codec::encode_fields(CALL_LIEN_TRANSFER, &[token_id.to_be_bytes().as_slice(), to.as_bytes()])
        }
    }
}

pub fn decode_call_payload(bytes: &[u8]) -> Result<ContractCall, CodecError> {
    let f = codec::decode_exact(bytes, CALL_LIEN_TRANSFER, 2)?;
    Ok(ContractCall::LienTransfer { token_id: codec::u64_field(&f, 0)?, to: Address(codec::fixed::<20>(&f, 1)?) })
}

/// Transactions executed all-or-nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicBatch {
    pub batch_id: Digest,
    pub transactions: Vec<Transaction>,
}

impl AtomicBatch {
    pub fn new(transactions: Vec<Transaction>) -> Self {
        let batch_id = Self::compute_id(&transactions);
        AtomicBatch { batch_id, transactions }
    }

    pub fn compute_id(transactions: &[Transaction]) -> Digest {
        let ids: Vec<&[u8]> = transactions.iter().map(|t| t.id.as_bytes().as_slice()).collect();
        Digest::of(&codec::encode_fields(TAG_BATCH, &ids))
    }
}
