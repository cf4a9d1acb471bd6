use crate::codec::{self, CodecError};
use crate::hash::Address;
use crate::product::WorkScope;
use crate::store::{Cid, ContentResolver};
use crate::trie::AuthenticatedMap;

use super::AssetError;

const TOKEN_PREFIX: u8 = 0x4c;
const NEXT_ID_KEY: &[u8] = b"N";
const TAG_TOKEN: u8 = 0x4c;

/// A non-fungible lien right over one scope of work. `uri_cid` points at
/// the evidence bundle of the payment that released the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LienToken {
    pub token_id: u64,
    pub owner: Address,
    pub uri_cid: Cid,
    pub scope: WorkScope,
}

impl LienToken {
    pub fn encode(&self) -> Vec<u8> {
        codec::encode_fields(
            TAG_TOKEN,
            &[
                self.token_id.to_be_bytes().as_slice(),
                self.owner.as_bytes(),
                &self.uri_cid.to_bytes(),
                &self.scope.encode(),
            ],
        )
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let f = codec::decode_exact(bytes, TAG_TOKEN, 4)?;
        Ok(LienToken {
            token_id: codec::u64_field(&f, 0)?,
            owner: Address(codec::fixed::<20>(&f, 1)?),
            uri_cid: Cid::from_bytes(f[2]).map_err(|_| CodecError::FieldLength { index: 2, len: f[2].len() })?,
            scope: WorkScope::decode(f[3])?,
        })
    }
}

fn token_key(id: u64) -> [u8; 9] {
    let mut k = [0u8; 9];
    k[0] = TOKEN_PREFIX;
    k[1..].copy_from_slice(&id.to_be_bytes());
    k
}

/// Registry of lien tokens. Storage layout: `0x4C ‖ token_id (u64 BE)` →
/// encoded token, plus the next id under `"N"`. Tokens are never deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LienRegistry {
    contract: Address,
    storage: AuthenticatedMap,
}

impl LienRegistry {
    pub fn new(contract: Address) -> Self {
        let mut storage = AuthenticatedMap::new();
        storage.put(NEXT_ID_KEY, 0u64.to_be_bytes().to_vec()).expect("static key");
        LienRegistry { contract, storage }
    }

    pub fn from_storage(contract: Address, storage: AuthenticatedMap) -> Result<Self, AssetError> {
        let reg = LienRegistry { contract, storage };
        let next = reg.read_next_id()?;
        for (k, v) in reg.storage.entries() {
            if k == NEXT_ID_KEY {
                continue;
            }
            let token = LienToken::decode(&v)?;
            if k != token_key(token.token_id) || token.token_id >= next {
                return Err(AssetError::Corrupt(CodecError::FieldLength { index: 0, len: k.len() }));
            }
        }
        Ok(reg)
    }

    pub fn contract_address(&self) -> Address {
        self.contract
    }

    pub fn storage(&self) -> &AuthenticatedMap {
        &self.storage
    }

    fn read_next_id(&self) -> Result<u64, AssetError> {
        let v = self.storage.get(NEXT_ID_KEY).unwrap_or(&[0u8; 8]);
        <[u8; 8]>::try_from(v)
            .map(u64::from_be_bytes)
            .map_err(|_| AssetError::Corrupt(CodecError::FieldLength { index: 0, len: v.len() }))
    }

    pub fn next_id(&self) -> u64 {
        self.read_next_id().unwrap_or(0)
    }

    pub fn token(&self, token_id: u64) -> Result<LienToken, AssetError> {
        let bytes = self.storage.get(&token_key(token_id)).ok_or(AssetError::UnknownToken(token_id))?;
        Ok(LienToken::decode(bytes)?)
    }

    pub fn tokens(&self) -> Vec<LienToken> {
        (0..self.next_id()).filter_map(|id| self.token(id).ok()).collect()
    }

    /// Mints the next token to `to_owner`. The URI CID must resolve in the
    /// evidence store at mint time.
    pub fn mint_and_transfer(
        &mut self,
        to_owner: &Address,
        uri_cid: Cid,
        scope: WorkScope,
        resolver: &dyn ContentResolver,
    ) -> Result<u64, AssetError> {
        if to_owner.is_zero() {
            return Err(AssetError::ReservedAddress);
        }
        if !resolver.contains(&uri_cid) {
            return Err(AssetError::UnresolvableCid(uri_cid));
        }
        let token_id = self.read_next_id()?;
        let token = LienToken { token_id, owner: *to_owner, uri_cid, scope };
        self.storage.put(&token_key(token_id), token.encode()).expect("9-byte key");
        self.storage
            .put(NEXT_ID_KEY, (token_id + 1).to_be_bytes().to_vec())
            .expect("static key");
        Ok(token_id)
    }

    pub fn owner_of(&self, token_id: u64) -> Result<Address, AssetError> {
        self.token(token_id).map(|t| t.owner)
    }

    pub fn token_uri(&self, token_id: u64) -> Result<Cid, AssetError> {
        self.token(token_id).map(|t| t.uri_cid)
    }

    /// Moves a token to a new owner; only the current owner may do so.
    pub fn transfer(&mut self, caller: &Address, token_id: u64, to: &Address) -> Result<(), AssetError> {
        if to.is_zero() {
            return Err(AssetError::ReservedAddress);
        }
        let mut token = self.token(token_id)?;
        if token.owner != *caller {
            return Err(AssetError::NotOwner { caller: *caller, token_id });
        }
        token.owner = *to;
        self.storage.put(&token_key(token_id), token.encode()).expect("9-byte key");
        Ok(())
    }
}
