use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::account::{code, Account};
use super::tx::{self, AtomicBatch, ContractCall, Transaction, TxKind};
use super::LedgerError;
use crate::assets::{AssetError, FungibleLedger, LienRegistry};
use crate::hash::{Address, Digest};
use crate::store::ContentResolver;
use crate::trie::AuthenticatedMap;

/// World state: the state trie of accounts plus the typed views of every
/// built-in contract's storage trie.
///
/// Cloning is cheap (tries share structure), which is what makes batch
/// rollback a matter of keeping the previous value.
#[derive(Debug, Clone, Default)]
pub struct WorldState {
    accounts: AuthenticatedMap,
    tokens: BTreeMap<Address, FungibleLedger>,
    liens: BTreeMap<Address, LienRegistry>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root_hash(&self) -> Digest {
        self.accounts.root_hash()
    }

    pub fn account(&self, address: &Address) -> Option<Account> {
        self.accounts
            .get(address.as_bytes())
            .map(|b| Account::decode(b).expect("state trie holds valid accounts"))
    }

    pub fn accounts(&self) -> Vec<(Address, Account)> {
        self.accounts
            .entries()
            .into_iter()
            .map(|(k, v)| (Address::from_slice(&k).expect("20-byte key"), Account::decode(&v).expect("valid account")))
            .collect()
    }

    pub fn balance(&self, address: &Address) -> u128 {
        self.account(address).map_or(0, |a| a.balance)
    }

    pub fn nonce(&self, address: &Address) -> u64 {
        self.account(address).map_or(0, |a| a.nonce)
    }

    /// Sum of all native balances.
    pub fn native_supply(&self) -> u128 {
        self.accounts().iter().map(|(_, a)| a.balance).sum()
    }

    pub fn fungible(&self, contract: &Address) -> Option<&FungibleLedger> {
        self.tokens.get(contract)
    }

    pub fn lien_registry(&self, contract: &Address) -> Option<&LienRegistry> {
        self.liens.get(contract)
    }

    pub fn fungible_contracts(&self) -> impl Iterator<Item = &FungibleLedger> {
        self.tokens.values()
    }

    pub fn lien_registries(&self) -> impl Iterator<Item = &LienRegistry> {
        self.liens.values()
    }

    fn store_account(&mut self, address: &Address, account: &Account) {
        self.accounts.put(address.as_bytes(), account.encode()).expect("20-byte key");
    }

    pub fn create_account(&mut self, address: Address, initial_balance: u128, code_hash: Digest) -> Result<(), LedgerError> {
        if address.is_zero() {
            return Err(LedgerError::ReservedAddress);
        }
        if self.accounts.contains_key(address.as_bytes()) {
            return Err(LedgerError::AddressInUse(address));
        }
        self.store_account(&address, &Account::new(initial_balance, code_hash));
        Ok(())
    }

    /// Creates a fungible-token contract account with empty supply.
    pub fn deploy_fungible(&mut self, contract: Address) -> Result<(), LedgerError> {
        self.create_account(contract, 0, code::fungible_token())?;
        self.tokens.insert(contract, FungibleLedger::new(contract));
        self.sync_storage_root(&contract);
        Ok(())
    }

    pub fn deploy_lien_registry(&mut self, contract: Address) -> Result<(), LedgerError> {
        self.create_account(contract, 0, code::lien_registry())?;
        self.liens.insert(contract, LienRegistry::new(contract));
        self.sync_storage_root(&contract);
        Ok(())
    }

    /// Mints tokens outside any transaction (genesis funding path).
    pub fn ft_mint(&mut self, contract: &Address, to: &Address, amount: u128) -> Result<(), LedgerError> {
        let ledger = self.tokens.get_mut(contract).ok_or(LedgerError::UnknownContract(*contract))?;
        ledger.mint(to, amount)?;
        self.sync_storage_root(contract);
        Ok(())
    }

    fn sync_storage_root(&mut self, contract: &Address) {
        let root = match (self.tokens.get(contract), self.liens.get(contract)) {
            (Some(t), _) => t.storage().root_hash(),
            (_, Some(l)) => l.storage().root_hash(),
            _ => return,
        };
        let mut account = self.account(contract).expect("contract account exists");
        account.storage_root = root;
        self.store_account(contract, &account);
    }

    /// Direct native transfer by `from`, consuming its next nonce.
    pub fn native_transfer(&mut self, from: Address, to: Address, amount: u128) -> Result<(), LedgerError> {
        let nonce = self.account(&from).ok_or(LedgerError::UnknownSender(from))?.nonce;
        self.apply_transaction(&Transaction::native(from, to, amount, nonce), &NoContent)
    }

    fn credit_native(&mut self, to: &Address, amount: u128) -> Result<(), LedgerError> {
        if to.is_zero() {
            return Err(LedgerError::ReservedAddress);
        }
        let mut account = self.account(to).unwrap_or_else(|| Account::new(0, Digest::ZERO));
        account.balance = account.balance.checked_add(amount).ok_or(LedgerError::BalanceOverflow)?;
        self.store_account(to, &account);
        Ok(())
    }

    /// Applies one transaction. On error the state may be partially
    /// modified; callers that need atomicity go through
    /// [`execute_atomic_batch`](Self::execute_atomic_batch).
    pub fn apply_transaction(&mut self, tx: &Transaction, resolver: &dyn ContentResolver) -> Result<(), LedgerError> {
        if !tx.id_is_consistent() {
            return Err(LedgerError::TxIdMismatch(tx.id));
        }
        let mut sender = self.account(&tx.from).ok_or(LedgerError::UnknownSender(tx.from))?;
        if sender.nonce != tx.nonce {
            return Err(LedgerError::BadNonce { expected: sender.nonce, found: tx.nonce });
        }
        match tx.kind {
            TxKind::NativeTransfer => {
                if !tx.payload.is_empty() {
                    return Err(LedgerError::BadPayload("native transfers carry no payload".into()));
                }
                if sender.balance < tx.amount {
                    return Err(LedgerError::InsufficientFunds { needed: tx.amount, available: sender.balance });
                }
                sender.balance -= tx.amount;
                sender.nonce += 1;
                self.store_account(&tx.from, &sender);
                self.credit_native(&tx.to, tx.amount)?;
            }
            TxKind::TokenTransfer => {
                let recipient = tx::decode_token_payload(&tx.payload).map_err(|e| LedgerError::BadPayload(e.to_string()))?;
                let ledger = self.tokens.get_mut(&tx.to).ok_or(LedgerError::UnknownContract(tx.to))?;
                ledger.transfer(&tx.from, &recipient, tx.amount)?;
                self.sync_storage_root(&tx.to);
                self.bump_nonce(&tx.from);
            }
            TxKind::LienMintTransfer => {
                let mint = tx::decode_lien_mint_payload(&tx.payload).map_err(|e| LedgerError::BadPayload(e.to_string()))?;
                if tx.amount != 0 {
                    return Err(LedgerError::BadPayload("lien mints carry no amount".into()));
                }
                if tx.evidence_cid.is_some_and(|c| c != mint.uri_cid) {
                    return Err(LedgerError::BadPayload("lien URI differs from the evidence CID".into()));
                }
                let registry = self.liens.get_mut(&tx.to).ok_or(LedgerError::UnknownContract(tx.to))?;
                registry.mint_and_transfer(&mint.owner, mint.uri_cid, mint.scope, resolver)?;
                self.sync_storage_root(&tx.to);
                self.bump_nonce(&tx.from);
            }
            TxKind::ContractCall => {
                let call = tx::decode_call_payload(&tx.payload).map_err(|e| LedgerError::BadPayload(e.to_string()))?;
                if tx.amount != 0 {
                    return Err(LedgerError::BadPayload("contract calls carry no amount".into()));
                }
                match call {
                    ContractCall::LienTransfer { token_id, to } => {
                        let registry = self.liens.get_mut(&tx.to).ok_or(LedgerError::UnknownContract(tx.to))?;
                        registry.transfer(&tx.from, token_id, &to)?;
                    }
                }
                self.sync_storage_root(&tx.to);
                self.bump_nonce(&tx.from);
            }
        }
        Ok(())
    }

    fn bump_nonce(&mut self, address: &Address) {
        let mut account = self.account(address).expect("sender exists");
        account.nonce += 1;
        self.store_account(address, &account);
    }

    /// Applies every transaction of `batch` in order, or none of them.
    pub fn execute_atomic_batch(&mut self, batch: &AtomicBatch, resolver: &dyn ContentResolver) -> Result<(), LedgerError> {
        if batch.transactions.is_empty() {
            return Err(LedgerError::EmptyBatch);
        }
        if AtomicBatch::compute_id(&batch.transactions) != batch.batch_id {
            return Err(LedgerError::BatchIdMismatch(batch.batch_id));
        }
        let mut next = self.clone();
        for (index, tx) in batch.transactions.iter().enumerate() {
            next.apply_transaction(tx, resolver)
                .map_err(|cause| LedgerError::BatchAborted { index, cause: Box::new(cause) })?;
        }
        *self = next;
        Ok(())
    }

    pub fn dump(&self) -> StateDump {
        let accounts = self
            .accounts()
            .into_iter()
            .map(|(address, a)| AccountDump {
                address,
                nonce: a.nonce,
                balance: a.balance,
                storage_root: a.storage_root,
                code_hash: a.code_hash,
            })
            .collect();
        let storage_of = |contract: Address, map: &AuthenticatedMap| StorageDump {
            contract,
            entries: map
                .entries()
                .into_iter()
                .map(|(key, value)| StorageEntry { key, value })
                .collect(),
        };
        let mut storage: Vec<StorageDump> = self
            .tokens
            .iter()
            .map(|(a, t)| storage_of(*a, t.storage()))
            .chain(self.liens.iter().map(|(a, l)| storage_of(*a, l.storage())))
            .collect();
        storage.sort_by_key(|s| s.contract);
        StateDump { accounts, storage }
    }

    /// Rebuilds a world state from a dump, checking that each contract's
    /// storage matches the root its account commits to.
    pub fn from_dump(dump: &StateDump) -> Result<Self, LedgerError> {
        let mut state = WorldState::new();
        for a in &dump.accounts {
            if a.address.is_zero() || state.accounts.contains_key(a.address.as_bytes()) {
                return Err(LedgerError::CorruptDump(format!("bad or duplicate account {}", a.address)));
            }
            let account = Account { nonce: a.nonce, balance: a.balance, storage_root: a.storage_root, code_hash: a.code_hash };
            state.store_account(&a.address, &account);
        }
        for s in &dump.storage {
            let account = state
                .account(&s.contract)
                .ok_or_else(|| LedgerError::CorruptDump(format!("storage for unknown account {}", s.contract)))?;
            let map = AuthenticatedMap::from_entries(s.entries.iter().map(|e| (&e.key, e.value.clone())))
                .map_err(|e| LedgerError::CorruptDump(e.to_string()))?;
            if map.len() != s.entries.len() || map.root_hash() != account.storage_root {
                return Err(LedgerError::CorruptDump(format!("storage of {} does not match its root", s.contract)));
            }
            if account.code_hash == code::fungible_token() {
                state.tokens.insert(s.contract, FungibleLedger::from_storage(s.contract, map)?);
            } else if account.code_hash == code::lien_registry() {
                state.liens.insert(s.contract, LienRegistry::from_storage(s.contract, map)?);
            } else {
                return Err(LedgerError::CorruptDump(format!("{} has storage but no known code", s.contract)));
            }
        }
        Ok(state)
    }
}

/// Resolver that knows no content; direct native transfers never need one.
struct NoContent;

impl ContentResolver for NoContent {
    fn contains(&self, _: &crate::store::Cid) -> bool {
        false
    }
}

impl From<AssetError> for LedgerError {
    fn from(e: AssetError) -> Self {
        LedgerError::Asset(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountDump {
    pub address: Address,
    pub nonce: u64,
    pub balance: u128,
    pub storage_root: Digest,
    pub code_hash: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageEntry {
    #[serde(with = "crate::hexfmt::bytes")]
    pub key: Vec<u8>,
    #[serde(with = "crate::hexfmt::bytes")]
    pub value: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageDump {
    pub contract: Address,
    pub entries: Vec<StorageEntry>,
}

/// Full world-state export: accounts plus every contract storage trie.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDump {
    pub accounts: Vec<AccountDump>,
    pub storage: Vec<StorageDump>,
}
