use crate::hash::Address;
use crate::trie::AuthenticatedMap;

use super::AssetError;

/// Storage key of the total supply. Holder keys are 20-byte addresses, so a
/// one-byte key cannot collide with them.
const SUPPLY_KEY: &[u8] = b"S";

/// Fungible token ledger. Storage layout: holder address → u128 BE balance,
/// plus the total supply under `"S"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FungibleLedger {
    contract: Address,
    storage: AuthenticatedMap,
}

impl FungibleLedger {
    pub fn new(contract: Address) -> Self {
        let mut storage = AuthenticatedMap::new();
        storage.put(SUPPLY_KEY, 0u128.to_be_bytes().to_vec()).expect("static key");
        FungibleLedger { contract, storage }
    }

    pub fn from_storage(contract: Address, storage: AuthenticatedMap) -> Result<Self, AssetError> {
        let ledger = FungibleLedger { contract, storage };
        ledger.read(SUPPLY_KEY)?;
        for (k, _) in ledger.storage.entries() {
            if k != SUPPLY_KEY && k.len() != 20 {
                return Err(AssetError::Corrupt(crate::codec::CodecError::FieldLength { index: 0, len: k.len() }));
            }
        }
        Ok(ledger)
    }

    pub fn contract_address(&self) -> Address {
        self.contract
    }

    pub fn storage(&self) -> &AuthenticatedMap {
        &self.storage
    }

    fn read(&self, key: &[u8]) -> Result<u128, AssetError> {
        match self.storage.get(key) {
            None => Ok(0),
            Some(v) => <[u8; 16]>::try_from(v)
                .map(u128::from_be_bytes)
                .map_err(|_| AssetError::Corrupt(crate::codec::CodecError::FieldLength { index: 0, len: v.len() })),
        }
    }

    fn write(&mut self, key: &[u8], value: u128) {
        self.storage.put(key, value.to_be_bytes().to_vec()).expect("keys are at most 20 bytes");
    }

    pub fn total_supply(&self) -> u128 {
        self.read(SUPPLY_KEY).unwrap_or(0)
    }

    pub fn balance_of(&self, holder: &Address) -> u128 {
        self.read(holder.as_bytes()).unwrap_or(0)
    }

    /// Every holder with a recorded balance, in address order.
    pub fn balances(&self) -> Vec<(Address, u128)> {
        self.storage
            .entries()
            .into_iter()
            .filter_map(|(k, v)| {
                let holder = Address::from_slice(&k)?;
                Some((holder, u128::from_be_bytes(v.as_slice().try_into().ok()?)))
            })
            .collect()
    }

    pub fn mint(&mut self, to: &Address, amount: u128) -> Result<(), AssetError> {
        if to.is_zero() {
            return Err(AssetError::ReservedAddress);
        }
        if amount == 0 {
            return Ok(());
        }
        let supply = self.total_supply().checked_add(amount).ok_or(AssetError::SupplyOverflow)?;
        let balance = self.balance_of(to) + amount;
        self.write(SUPPLY_KEY, supply);
        self.write(to.as_bytes(), balance);
        Ok(())
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: u128) -> Result<(), AssetError> {
        if to.is_zero() {
            return Err(AssetError::ReservedAddress);
        }
        let available = self.balance_of(from);
        if available < amount {
            return Err(AssetError::InsufficientTokens { needed: amount, available });
        }
        if from == to || amount == 0 {
            return Ok(());
        }
        self.write(from.as_bytes(), available - amount);
        let credited = self.balance_of(to) + amount;
        self.write(to.as_bytes(), credited);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn addr(n: u8) -> Address {
        Address([n; 20])
    }

    #[test]
    fn mint_cases() {
        let mut l = FungibleLedger::new(addr(9));
        let root = l.storage().root_hash();
        l.mint(&addr(1), 0).unwrap();
        assert_eq!(l.storage().root_hash(), root);
        l.mint(&addr(1), 1_000_000).unwrap();
        assert_eq!(l.total_supply(), 1_000_000);
        assert_eq!(l.balance_of(&addr(1)), 1_000_000);
        let before = l.clone();
        assert_eq!(l.mint(&addr(2), u128::MAX), Err(AssetError::SupplyOverflow));
        assert_eq!(l, before);
    }

    #[test]
    fn transfer_and_reverse() {
        let mut l = FungibleLedger::new(addr(9));
        l.mint(&addr(1), 500).unwrap();
        l.mint(&addr(2), 10).unwrap();
        let original = l.balances();
        l.transfer(&addr(1), &addr(2), 120).unwrap();
        assert_eq!(l.balance_of(&addr(1)), 380);
        l.transfer(&addr(2), &addr(1), 120).unwrap();
        assert_eq!(l.balances(), original);
        assert_eq!(l.total_supply(), 510);
    }

    #[test]
    fn overdraft_leaves_state_unchanged() {
        let mut l = FungibleLedger::new(addr(9));
        l.mint(&addr(1), 5).unwrap();
        let before = l.clone();
        assert_eq!(
            l.transfer(&addr(1), &addr(2), 6),
            Err(AssetError::InsufficientTokens { needed: 6, available: 5 })
        );
        assert_eq!(l, before);
    }

    #[test]
    fn different_balances_give_different_storage_roots() {
        let mut a = FungibleLedger::new(addr(9));
        a.mint(&addr(1), 10).unwrap();
        let mut b = a.clone();
        b.transfer(&addr(1), &addr(2), 1).unwrap();
        assert_ne!(a.storage().root_hash(), b.storage().root_hash());
    }

    proptest! {
        #[test]
        fn supply_equals_sum_of_balances(ops in prop::collection::vec((0u8..3, 1u8..6, 1u8..6, 0u128..1_000), 1..200)) {
            let mut l = FungibleLedger::new(addr(9));
            let mut running: u128 = 0;
            for (op, a, b, amount) in ops {
                match op {
                    0 => {
                        l.mint(&addr(a), amount).unwrap();
                        running += amount;
                    }
                    _ => {
                        let _ = l.transfer(&addr(a), &addr(b), amount);
                    }
                }
                let sum: u128 = l.balances().iter().map(|(_, v)| v).sum();
                prop_assert_eq!(sum, l.total_supply());
                prop_assert_eq!(running, l.total_supply());
            }
        }
    }
}
