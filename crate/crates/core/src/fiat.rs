//! Bank-ledger baseline: same-bank transfers, batch netting through a
//! central reserve, and the aggregate entries a bank keeps per customer.
//!
//! Correspondent banking is the two-bank case of [`CentralReserve::net_and_settle`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{PaymentDataset, PaymentRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiatError {
    #[error("unknown holder {holder:?} at bank {bank:?}")]
    UnknownHolder { bank: String, holder: String },
    #[error("bank {0:?} is not registered at the central reserve")]
    UnregisteredBank(String),
    #[error("bank {0:?} is already registered")]
    DuplicateBank(String),
    #[error("negative amount {0}")]
    NegativeAmount(i64),
}

/// What a bank's books say about a customer's payment. There is no field
/// for what the payment was for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub window: String,
    pub counterparty_bank: String,
    pub amount_cents: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bank {
    pub bank_id: String,
    /// Liability to each holder.
    pub customer_accounts: BTreeMap<String, i64>,
    /// Position at the central reserve.
    pub nostro_central: i64,
    entries: BTreeMap<String, Vec<LedgerEntry>>,
}

impl Bank {
    pub fn new(bank_id: impl Into<String>) -> Self {
        Bank {
            bank_id: bank_id.into(),
            customer_accounts: BTreeMap::new(),
            nostro_central: 0,
            entries: BTreeMap::new(),
        }
    }

    pub fn open_account(&mut self, holder: impl Into<String>, liability_cents: i64) {
        self.customer_accounts.insert(holder.into(), liability_cents);
    }

    pub fn liability(&self, holder: &str) -> Result<i64, FiatError> {
        self.customer_accounts.get(holder).copied().ok_or_else(|| self.unknown(holder))
    }

    pub fn total_liabilities(&self) -> i64 {
        self.customer_accounts.values().sum()
    }

    fn unknown(&self, holder: &str) -> FiatError {
        FiatError::UnknownHolder { bank: self.bank_id.clone(), holder: holder.to_string() }
    }

    fn require(&self, holder: &str) -> Result<(), FiatError> {
        self.liability(holder).map(|_| ())
    }

    /// Debits the payer by exactly what is credited to the payee.
    pub fn same_bank_settle(&mut self, window: &str, payer: &str, payee: &str, amount: i64) -> Result<(), FiatError> {
        if amount < 0 {
            return Err(FiatError::NegativeAmount(amount));
        }
        self.require(payer)?;
        self.require(payee)?;
        if amount == 0 {
            return Ok(());
        }
        let own = self.bank_id.clone();
        self.post(payer, window, &own, -amount);
        self.post(payee, window, &own, amount);
        Ok(())
    }

    fn post(&mut self, holder: &str, window: &str, counterparty: &str, signed: i64) {
        *self.customer_accounts.get_mut(holder).expect("checked holder") += signed;
        self.entries.entry(holder.to_string()).or_default().push(LedgerEntry {
            window: window.to_string(),
            counterparty_bank: counterparty.to_string(),
            amount_cents: signed,
        });
    }

    /// Entries on the holder's account, in posting order.
    pub fn query_payment_records(&self, holder: &str) -> Result<&[LedgerEntry], FiatError> {
        self.require(holder)?;
        Ok(self.entries.get(holder).map_or(&[], Vec::as_slice))
    }

    pub fn holders(&self) -> impl Iterator<Item = &str> {
        self.customer_accounts.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub from_bank: String,
    pub to_bank: String,
    pub from_holder: String,
    pub to_holder: String,
    pub amount_cents: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClearingBatch {
    pub window_id: String,
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CentralReserve {
    banks: BTreeMap<String, Bank>,
}

impl CentralReserve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, bank: Bank) -> Result<(), FiatError> {
        if self.banks.contains_key(&bank.bank_id) {
            return Err(FiatError::DuplicateBank(bank.bank_id));
        }
        self.banks.insert(bank.bank_id.clone(), bank);
        Ok(())
    }

    pub fn bank(&self, id: &str) -> Option<&Bank> {
        self.banks.get(id)
    }

    pub fn bank_mut(&mut self, id: &str) -> Option<&mut Bank> {
        self.banks.get_mut(id)
    }

    pub fn banks(&self) -> impl Iterator<Item = &Bank> {
        self.banks.values()
    }

    /// Settles a batch as one netting event and returns each bank's net
    /// position change (incoming minus outgoing). Customer books get one
    /// entry per holder and counterparty bank for the window, whatever the
    /// number of instructions behind it. Nothing changes on error.
    pub fn net_and_settle(&mut self, batch: &ClearingBatch) -> Result<BTreeMap<String, i64>, FiatError> {
        for ins in &batch.instructions {
            if ins.amount_cents < 0 {
                return Err(FiatError::NegativeAmount(ins.amount_cents));
            }
            for (bank, holder) in [(&ins.from_bank, &ins.from_holder), (&ins.to_bank, &ins.to_holder)] {
                self.banks
                    .get(bank)
                    .ok_or_else(|| FiatError::UnregisteredBank(bank.clone()))?
                    .require(holder)?;
            }
        }
        let mut nets: BTreeMap<String, i64> = BTreeMap::new();
        // (bank, holder, counterparty bank) -> signed sum
        let mut postings: BTreeMap<(String, String, String), i64> = BTreeMap::new();
        for ins in &batch.instructions {
            *nets.entry(ins.from_bank.clone()).or_default() -= ins.amount_cents;
            *nets.entry(ins.to_bank.clone()).or_default() += ins.amount_cents;
            *postings
                .entry((ins.from_bank.clone(), ins.from_holder.clone(), ins.to_bank.clone()))
                .or_default() -= ins.amount_cents;
            *postings
                .entry((ins.to_bank.clone(), ins.to_holder.clone(), ins.from_bank.clone()))
                .or_default() += ins.amount_cents;
        }
        for (bank, net) in &nets {
            self.banks.get_mut(bank).expect("checked bank").nostro_central += net;
        }
        for ((bank, holder, counterparty), signed) in postings {
            if signed != 0 {
                self.banks.get_mut(&bank).expect("checked bank").post(&holder, &batch.window_id, &counterparty, signed);
            }
        }
        Ok(nets)
    }

    /// Writes every customer entry as CSV: bank, holder, window,
    /// counterparty_bank, amount_cents.
    pub fn entries_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bank", "holder", "window", "counterparty_bank", "amount_cents"]).expect("in-memory CSV");
        for bank in self.banks.values() {
            for (holder, entries) in &bank.entries {
                for e in entries {
                    w.write_record([
                        bank.bank_id.as_str(),
                        holder,
                        &e.window,
                        &e.counterparty_bank,
                        &e.amount_cents.to_string(),
                    ])
                    .expect("in-memory CSV");
                }
            }
        }
        w.into_inner().expect("in-memory CSV")
    }
}

pub const OWNER_BANK: &str = "bank-owner";
pub const CONTRACTOR_BANK: &str = "bank-contractors";
pub const OWNER_HOLDER: &str = "owner";

/// The same payments settled through banks: the owner's bank pays every
/// contractor through the central reserve, one clearing batch per period.
#[derive(Debug, Clone)]
pub struct FiatRun {
    pub reserve: CentralReserve,
    /// Per contractor entry (holder, entry index): the payments pooled into it.
    pub pooled: BTreeMap<(String, usize), Vec<usize>>,
}

pub fn simulate(dataset: &PaymentDataset) -> FiatRun {
    let mut owner_bank = Bank::new(OWNER_BANK);
    owner_bank.open_account(OWNER_HOLDER, i64::try_from(dataset.funding).unwrap_or(i64::MAX));
    let mut contractors = Bank::new(CONTRACTOR_BANK);
    for p in &dataset.payments {
        contractors.customer_accounts.entry(p.payee.to_string()).or_insert(0);
    }
    let mut reserve = CentralReserve::new();
    reserve.register(owner_bank).expect("fresh reserve");
    reserve.register(contractors).expect("fresh reserve");

    let mut windows: Vec<&str> = Vec::new();
    for p in &dataset.payments {
        if !windows.contains(&p.period.as_str()) {
            windows.push(&p.period);
        }
    }
    let mut pooled: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for window in windows {
        let members: Vec<(usize, &PaymentRecord)> =
            dataset.payments.iter().enumerate().filter(|(_, p)| p.period == window).collect();
        let batch = ClearingBatch {
            window_id: window.to_string(),
            instructions: members
                .iter()
                .map(|(_, p)| Instruction {
                    from_bank: OWNER_BANK.into(),
                    to_bank: CONTRACTOR_BANK.into(),
                    from_holder: OWNER_HOLDER.into(),
                    to_holder: p.payee.to_string(),
                    amount_cents: p.amount_cents as i64,
                })
                .collect(),
        };
        reserve.net_and_settle(&batch).expect("all parties registered");
        let bank = reserve.bank(CONTRACTOR_BANK).expect("registered");
        for (i, p) in &members {
            let holder = p.payee.to_string();
            let last = bank.query_payment_records(&holder).expect("opened").len() - 1;
            pooled.entry((holder, last)).or_default().push(*i);
        }
    }
    FiatRun { reserve, pooled }
}

/// Element scope recoverable from a bank entry. The entry carries only a
/// window, a counterparty bank and an amount, so there is nothing to map
/// back to building elements.
pub fn recover_scope_from_entry(entry: &LedgerEntry) -> Option<BTreeSet<String>> {
    let LedgerEntry { window: _, counterparty_bank: _, amount_cents: _ } = entry;
    None
}

/// Side-by-side recoverability of per-element scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationLoss {
    pub fiat_entries: usize,
    /// Entries whose underlying payments cover two or more elements.
    pub fiat_pooled_entries: usize,
    pub fiat_pooled_recovered: usize,
    pub crypto_payments: usize,
    pub crypto_recovered: usize,
}

impl InformationLoss {
    pub fn fiat_rate(&self) -> Option<f64> {
        (self.fiat_pooled_entries > 0).then(|| self.fiat_pooled_recovered as f64 / self.fiat_pooled_entries as f64)
    }

    pub fn crypto_rate(&self) -> Option<f64> {
        (self.crypto_payments > 0).then(|| self.crypto_recovered as f64 / self.crypto_payments as f64)
    }
}

/// Compares what the bank books and the crypto records let an auditor
/// recover. `crypto_recover` is given each payment and returns the element
/// set recovered through its lien token and evidence, if any; recovery
/// counts when it names exactly `element_count` elements.
pub fn information_loss(
    dataset: &PaymentDataset,
    fiat: &FiatRun,
    mut crypto_recover: impl FnMut(&PaymentRecord) -> Option<BTreeSet<String>>,
) -> InformationLoss {
    let bank = fiat.reserve.bank(CONTRACTOR_BANK).expect("registered");
    let mut out = InformationLoss {
        fiat_entries: 0,
        fiat_pooled_entries: 0,
        fiat_pooled_recovered: 0,
        crypto_payments: dataset.payments.len(),
        crypto_recovered: 0,
    };
    for ((holder, index), payments) in &fiat.pooled {
        out.fiat_entries += 1;
        let elements: u64 = payments.iter().map(|&i| dataset.payments[i].element_count).sum();
        if elements >= 2 {
            out.fiat_pooled_entries += 1;
            let entry = &bank.query_payment_records(holder).expect("opened")[*index];
            if recover_scope_from_entry(entry).is_some_and(|s| s.len() as u64 == elements) {
                out.fiat_pooled_recovered += 1;
            }
        }
    }
    for p in &dataset.payments {
        if crypto_recover(p).is_some_and(|s| s.len() as u64 == p.element_count) {
            out.crypto_recovered += 1;
        }
    }
    out
}
