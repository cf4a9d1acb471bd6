//! Contract-account asset state machines.
//!
//! Both assets keep their entire state in an [`AuthenticatedMap`] that
//! serves as the contract's storage trie, so the storage root committed in
//! the contract account always reflects every balance and token.
//!
//! [`AuthenticatedMap`]: crate::trie::AuthenticatedMap

mod fungible;
mod lien;

use thiserror::Error;

use crate::codec::CodecError;
use crate::hash::Address;
use crate::store::Cid;

pub use fungible::FungibleLedger;
pub use lien::{LienRegistry, LienToken};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AssetError {
    #[error("token supply would overflow")]
    SupplyOverflow,
    #[error("insufficient tokens: {available} available, {needed} needed")]
    InsufficientTokens { needed: u128, available: u128 },
    #[error("the zero address cannot hold assets")]
    ReservedAddress,
    #[error("unknown lien token {0}")]
    UnknownToken(u64),
    #[error("CID {0} does not resolve in the evidence store")]
    UnresolvableCid(Cid),
    #[error("{caller} does not own lien token {token_id}")]
    NotOwner { caller: Address, token_id: u64 },
    #[error("corrupt contract storage: {0}")]
    Corrupt(#[from] CodecError),
}
