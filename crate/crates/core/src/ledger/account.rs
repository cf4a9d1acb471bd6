use crate::codec::{self, CodecError};
use crate::hash::Digest;
use crate::trie;

const TAG_ACCOUNT: u8 = 0x41;

/// Ledger account. A zero `code_hash` marks an externally owned account.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Account {
    pub nonce: u64,
    pub balance: u128,
    pub storage_root: Digest,
    pub code_hash: Digest,
}

impl Account {
    pub fn new(balance: u128, code_hash: Digest) -> Self {
        Account { nonce: 0, balance, storage_root: trie::empty_root(), code_hash }
    }

    pub fn is_contract(&self) -> bool {
        !self.code_hash.is_zero()
    }

    /// Fields in the order nonce, balance, storage root, code hash.
    pub fn encode(&self) -> Vec<u8> {
        codec::encode_fields(
            TAG_ACCOUNT,
            &[
                self.nonce.to_be_bytes().as_slice(),
                &self.balance.to_be_bytes(),
                self.storage_root.as_bytes(),
                self.code_hash.as_bytes(),
            ],
        )
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let f = codec::decode_exact(bytes, TAG_ACCOUNT, 4)?;
        Ok(Account {
            nonce: codec::u64_field(&f, 0)?,
            balance: codec::u128_field(&f, 1)?,
            storage_root: Digest(codec::fixed::<32>(&f, 2)?),
            code_hash: Digest(codec::fixed::<32>(&f, 3)?),
        })
    }
}

/// Code hashes identifying the built-in contract kinds.
pub mod code {
    use crate::hash::Digest;

    pub fn fungible_token() -> Digest {
        Digest::of(b"flowledger:code:fungible-token")
    }

    pub fn lien_registry() -> Digest {
        Digest::of(b"flowledger:code:lien-registry")
    }

    pub fn payment_escrow() -> Digest {
        Digest::of(b"flowledger:code:payment-escrow")
    }
}
