//! Deterministic single-node ledger.
//!
//! Accounts live in a state trie keyed by address; contract accounts carry
//! the root of their own storage trie; each block commits the state root
//! after its batches and a transaction trie root. There is no consensus,
//! gas, fee or signature layer: senders are trusted by construction, which
//! makes this a simulator and not a secure chain.

mod account;
mod chain;
mod state;
mod tx;

use thiserror::Error;

use crate::assets::AssetError;
use crate::hash::{Address, Digest};

pub use account::{code, Account};
pub use chain::{
    export_jsonl, import_jsonl, tx_root, verify_chain, Block, Chain, ChainFinding, ChainReport, FindingKind, Genesis,
    GenesisAccount, GenesisMint, GenesisToken, SealOutcome,
};
pub use state::{AccountDump, StateDump, StorageDump, StorageEntry, WorldState};
pub use tx::{
    call_payload, decode_call_payload, decode_lien_mint_payload, decode_token_payload, lien_mint_payload,
    token_payload, AtomicBatch, ContractCall, LienMint, Transaction, TxKind,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("address {0} already has an account")]
    AddressInUse(Address),
    #[error("the zero address is reserved")]
    ReservedAddress,
    #[error("insufficient funds: {available} available, {needed} needed")]
    InsufficientFunds { needed: u128, available: u128 },
    #[error("unknown sender {0}")]
    UnknownSender(Address),
    #[error("nonce mismatch: account is at {expected}, transaction has {found}")]
    BadNonce { expected: u64, found: u64 },
    #[error("balance overflow")]
    BalanceOverflow,
    #[error("no contract at {0}")]
    UnknownContract(Address),
    #[error("malformed payload: {0}")]
    BadPayload(String),
    #[error("transaction id {0} does not match its contents")]
    TxIdMismatch(Digest),
    #[error("batch id {0} does not match its transactions")]
    BatchIdMismatch(Digest),
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch aborted at transaction {index}: {cause}")]
    BatchAborted { index: usize, cause: Box<LedgerError> },
    #[error("timestamp {requested} precedes previous block timestamp {previous}")]
    NonMonotonicTimestamp { previous: u64, requested: u64 },
    #[error(transparent)]
    Asset(AssetError),
    #[error("corrupt chain export: {0}")]
    CorruptExport(String),
    #[error("corrupt state dump: {0}")]
    CorruptDump(String),
}
