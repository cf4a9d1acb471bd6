use std::collections::BTreeSet;

use super::dataset::{FailureRecord, PaymentDataset, PaymentRecord, RegressionRecord};
use super::metrics::GranularityMetrics;
use super::plan::{partition_scope, plan_periods, resolve_payees, Horizon, PayeeDirectory};
use super::{AssetKind, EngineError, GranularityConfig, Roles};
use crate::hash::{Address, Digest};
use crate::ledger::{
    code, lien_mint_payload, token_payload, AtomicBatch, Chain, Genesis, GenesisAccount, GenesisMint, GenesisToken,
    LienMint, Transaction, TxKind,
};
use crate::product::{DeltaItem, KeyKind, PaidState, ProductError, Project, ScopeSelector, WorkDelta, WorkScope};
use crate::product::BillingPeriod;
use crate::store::{ContentStore, EvidenceBundle};

/// A payment + lien batch ready for sealing.
#[derive(Debug, Clone)]
pub struct PlannedPayment {
    pub batch: AtomicBatch,
    pub bundle: EvidenceBundle,
    pub record: PaymentRecord,
}

#[derive(Debug, Default)]
pub struct PeriodSettlement {
    pub payments: Vec<PlannedPayment>,
    pub failures: Vec<FailureRecord>,
    pub regressions: Vec<RegressionRecord>,
}

/// The payment contract for one scenario: owns the chain, the escrow and the
/// record of what has been paid per item.
pub struct PaymentEngine<'p> {
    project: &'p Project,
    config: GranularityConfig,
    asset: AssetKind,
    roles: Roles,
    payees: PayeeDirectory,
    paid: PaidState,
    chain: Chain,
}

impl<'p> PaymentEngine<'p> {
    /// Sets up a fresh chain whose escrow contract holds `funding` units of
    /// the settlement asset (one unit per cent).
    pub fn new(
        project: &'p Project,
        config: GranularityConfig,
        asset: AssetKind,
        funding: u128,
    ) -> Result<Self, EngineError> {
        let roles = Roles::default();
        let payees = PayeeDirectory::for_trades(&project.info().trades);
        let genesis = scenario_genesis(project, &roles, &payees, asset, funding);
        Ok(PaymentEngine { project, config, asset, roles, payees, paid: PaidState::default(), chain: Chain::new(genesis)? })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn into_chain(self) -> Chain {
        self.chain
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    pub fn paid(&self) -> &PaidState {
        &self.paid
    }

    pub fn escrow_balance(&self) -> u128 {
        let state = self.chain.state();
        match self.asset {
            AssetKind::Native => state.balance(&self.roles.escrow),
            AssetKind::Token => state.fungible(&self.roles.token).map_or(0, |t| t.balance_of(&self.roles.escrow)),
        }
    }

    /// Builds the batches for one billing period: for each scope and payee
    /// group with a positive amount, an evidence bundle is stored and a
    /// payment is paired with a lien mint carrying the same CID. Scopes
    /// whose level of detail the data cannot support become failure
    /// records. Nothing is executed here.
    pub fn settle_period(&self, period: &BillingPeriod, store: &mut ContentStore) -> Result<PeriodSettlement, EngineError> {
        let mut out = PeriodSettlement::default();
        let mut nonce = self.chain.state().nonce(&self.roles.escrow);
        let registry = self
            .chain
            .state()
            .lien_registry(&self.roles.lien_registry)
            .expect("scenario genesis deploys the registry");
        let mut next_token = registry.next_id();
        let mut total: u128 = 0;

        for selector in partition_scope(self.config.product, self.project.elements()) {
            let outcome = match self.project.compute_delta(&self.paid, period, &selector) {
                Ok(o) => o,
                Err(e @ ProductError::LodMismatch { .. }) => {
                    out.failures.push(FailureRecord {
                        period: period.label.clone(),
                        scope: selector.to_string(),
                        reason: e.to_string(),
                    });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            out.regressions.extend(
                outcome
                    .regressions
                    .iter()
                    .map(|r| RegressionRecord { period: period.label.clone(), regression: r.clone() }),
            );
            let active: BTreeSet<&str> = outcome.delta.items.iter().map(|i| i.trade.as_str()).collect();
            let trades: Vec<String> =
                self.project.info().trades.iter().filter(|t| active.contains(t.as_str())).cloned().collect();

            for group in resolve_payees(self.config.trade, &trades, &self.payees)? {
                let items: Vec<DeltaItem> =
                    outcome.delta.items.iter().filter(|i| group.trades.contains(&i.trade)).cloned().collect();
                let amount: u64 = items.iter().map(|i| i.value_cents).sum();
                if amount == 0 {
                    // below one cent: progress stays unpaid and carries over
                    continue;
                }
                total += u128::from(amount);
                let scope = work_scope(&selector, &items, &group.trades, period);
                let bundle = EvidenceBundle {
                    payee: group.payee,
                    amount_cents: amount,
                    scope: scope.clone(),
                    progress_delta: WorkDelta { items, period: period.clone() },
                    snapshot_ids: outcome.snapshots.iter().map(|(id, _)| id.clone()).collect(),
                    snapshot_cids: outcome.snapshots.iter().map(|(_, c)| *c).collect(),
                    sov_cid: self.project.sov_cid(),
                    bim_ref: self.project.info().bim_ref.clone(),
                };
                let cid = store.put_content(&bundle.to_canonical_bytes())?;
                let payment = self.payment_tx(group.payee, amount, cid, nonce);
                let lien = Transaction::new(
                    self.roles.escrow,
                    self.roles.lien_registry,
                    TxKind::LienMintTransfer,
                    0,
                    lien_mint_payload(&LienMint { owner: self.roles.owner, uri_cid: cid, scope: scope.clone() }),
                    Some(cid),
                    nonce + 1,
                );
                nonce += 2;
                let record = PaymentRecord {
                    period: period.label.clone(),
                    block_height: self.chain.tip().height + 1,
                    payee: group.payee,
                    trades: group.trades.clone(),
                    element_count: self.element_count(&bundle),
                    amount_cents: amount,
                    evidence_cid: cid,
                    lien_token_id: next_token,
                    scope,
                    payment: payment.clone(),
                    lien: lien.clone(),
                };
                next_token += 1;
                out.payments.push(PlannedPayment { batch: AtomicBatch::new(vec![payment, lien]), bundle, record });
            }
        }

        let available = self.escrow_balance();
        if total > available {
            return Err(EngineError::EscrowInsufficient { needed: total, available });
        }
        Ok(out)
    }

    fn payment_tx(&self, payee: Address, amount: u64, cid: crate::store::Cid, nonce: u64) -> Transaction {
        let (to, kind, payload) = match self.asset {
            AssetKind::Native => (payee, TxKind::NativeTransfer, Vec::new()),
            AssetKind::Token => (self.roles.token, TxKind::TokenTransfer, token_payload(&payee)),
        };
        Transaction::new(self.roles.escrow, to, kind, u128::from(amount), payload, Some(cid), nonce)
    }

    fn element_count(&self, bundle: &EvidenceBundle) -> u64 {
        let mut elements = BTreeSet::new();
        for item in &bundle.progress_delta.items {
            match item.key_kind {
                KeyKind::Element => {
                    elements.insert(item.key.clone());
                }
                KeyKind::ElementType => {
                    elements.extend(self.project.elements_of_type(&item.key).map(|e| e.guid.clone()));
                }
            }
        }
        elements.len() as u64
    }

    /// Seals the period's batches into one block and records the items as
    /// paid. Every batch must apply; a rejection means the settlement was
    /// built against a stale state.
    pub fn commit_period(
        &mut self,
        period: &BillingPeriod,
        settlement: &PeriodSettlement,
        store: &ContentStore,
    ) -> Result<u64, EngineError> {
        let batches = settlement.payments.iter().map(|p| p.batch.clone()).collect();
        let outcome = self.chain.seal_block(batches, period.end, store)?;
        if let Some((index, cause)) = outcome.rejected.into_iter().next() {
            return Err(EngineError::Rejected { index, cause });
        }
        for p in &settlement.payments {
            for item in &p.bundle.progress_delta.items {
                self.paid.commit(item);
            }
        }
        Ok(outcome.height)
    }
}

fn work_scope(selector: &ScopeSelector, items: &[DeltaItem], trades: &[String], period: &BillingPeriod) -> WorkScope {
    let mut keys: Vec<String> = Vec::new();
    for i in items {
        if !keys.contains(&i.key) {
            keys.push(i.key.clone());
        }
    }
    WorkScope {
        selector: selector.clone(),
        key_kind: items.first().map_or(KeyKind::Element, |i| i.key_kind),
        keys,
        trades: trades.to_vec(),
        period: period.clone(),
    }
}

fn scenario_genesis(project: &Project, roles: &Roles, payees: &PayeeDirectory, asset: AssetKind, funding: u128) -> Genesis {
    let eoa = |address: Address| GenesisAccount { address, balance: 0, code_hash: Digest::ZERO };
    let mut accounts = vec![
        GenesisAccount {
            address: roles.escrow,
            balance: if asset == AssetKind::Native { funding } else { 0 },
            code_hash: code::payment_escrow(),
        },
        eoa(roles.owner),
        eoa(payees.general_contractor),
    ];
    accounts.extend(payees.subcontractors.values().map(|a| eoa(*a)));
    let fungible_tokens = match asset {
        AssetKind::Native => Vec::new(),
        AssetKind::Token => vec![GenesisToken {
            contract: roles.token,
            mints: vec![GenesisMint { to: roles.escrow, amount: funding }],
        }],
    };
    Genesis {
        timestamp: project.info().horizon_start,
        accounts,
        fungible_tokens,
        lien_registries: vec![roles.lien_registry],
    }
}

/// Result of one scenario run.
pub struct ScenarioOutcome {
    pub dataset: PaymentDataset,
    pub chain: Chain,
}

/// Plans the periods for `config`, settles and seals each in order, and
/// collects the emitted payments, failures and metrics.
pub fn run_scenario(
    dataset_name: &str,
    project: &Project,
    config: GranularityConfig,
    asset: AssetKind,
    funding: u128,
    store: &mut ContentStore,
) -> Result<ScenarioOutcome, EngineError> {
    let mut engine = PaymentEngine::new(project, config, asset, funding)?;
    let horizon = Horizon { start: project.info().horizon_start, days: project.info().horizon_days };
    let mut payments = Vec::new();
    let mut failures = Vec::new();
    let mut regressions = Vec::new();
    for period in plan_periods(config.time, horizon) {
        let settlement = engine.settle_period(&period, store)?;
        let height = engine.commit_period(&period, &settlement, store)?;
        let registry = engine.chain().state().lien_registry(&engine.roles().lien_registry).expect("registry");
        for p in settlement.payments {
            debug_assert_eq!(p.record.block_height, height);
            debug_assert_eq!(registry.token_uri(p.record.lien_token_id).ok(), Some(p.record.evidence_cid));
            payments.push(p.record);
        }
        failures.extend(settlement.failures);
        regressions.extend(settlement.regressions);
    }
    let metrics = GranularityMetrics::compute(
        payments
            .iter()
            .map(|p: &PaymentRecord| super::metrics::PaymentShape { trades: &p.trades, element_count: p.element_count }),
        failures.len() as u32,
    );
    let dataset = PaymentDataset {
        dataset: dataset_name.to_string(),
        scenario_id: config.scenario_id(),
        config,
        asset,
        funding,
        payments,
        failures,
        regressions,
        metrics,
    };
    Ok(ScenarioOutcome { dataset, chain: engine.into_chain() })
}
