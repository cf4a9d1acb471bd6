//! Settlement simulator that ties crypto-asset payments to construction
//! product-flow updates.
//!
//! The crate is organised bottom-up:
//!
//! - [`trie`]: hash-committed key/value maps (state, storage and
//!   transaction tries) with inclusion proofs.
//! - [`store`]: content-addressed evidence store and CIDs.
//! - [`assets`]: fungible-token ledger and lien-token registry.
//! - [`ledger`]: accounts, transactions, atomic batches and blocks.
//! - [`product`]: project model, progress snapshots and priced deltas.
//! - [`engine`]: the payment contract that turns deltas into paired
//!   payment + lien batches under a granularity configuration.
//! - [`fiat`]: bank-ledger baseline used for comparison.
//! - [`harness`]: dataset generation, the scenario matrix, run-directory
//!   export, verification and reports.

pub mod assets;
pub mod codec;
pub mod engine;
pub mod fiat;
pub mod harness;
pub mod hash;
pub mod hexfmt;
pub mod ledger;
pub mod product;
pub mod store;
pub mod trie;

pub use hash::{Address, Digest};
pub use store::Cid;
