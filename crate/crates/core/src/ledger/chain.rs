use serde::{Deserialize, Serialize};

use super::state::WorldState;
use super::tx::AtomicBatch;
use super::LedgerError;
use crate::codec;
use crate::hash::{Address, Digest};
use crate::store::ContentResolver;
use crate::trie::AuthenticatedMap;

const TAG_HEADER: u8 = 0x42;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisAccount {
    pub address: Address,
    pub balance: u128,
    pub code_hash: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisMint {
    pub to: Address,
    pub amount: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisToken {
    pub contract: Address,
    pub mints: Vec<GenesisMint>,
}

/// Initial allocation. This is the only place native coin and tokens are
/// created.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Genesis {
    pub timestamp: u64,
    pub accounts: Vec<GenesisAccount>,
    pub fungible_tokens: Vec<GenesisToken>,
    pub lien_registries: Vec<Address>,
}

impl Genesis {
    pub fn build_state(&self) -> Result<WorldState, LedgerError> {
        let mut state = WorldState::new();
        for a in &self.accounts {
            state.create_account(a.address, a.balance, a.code_hash)?;
        }
        for t in &self.fungible_tokens {
            state.deploy_fungible(t.contract)?;
            for m in &t.mints {
                state.ft_mint(&t.contract, &m.to, m.amount)?;
            }
        }
        for r in &self.lien_registries {
            state.deploy_lien_registry(*r)?;
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub parent: Digest,
    pub state_root: Digest,
    pub tx_root: Digest,
    pub timestamp: u64,
    /// Header digest, recomputed and checked on import.
    pub hash: Digest,
    pub batches: Vec<AtomicBatch>,
}

impl Block {
    /// Header encoding. The batch layout (transaction count per batch) is
    /// committed because batch boundaries decide what rolls back together.
    pub fn header_bytes(&self) -> Vec<u8> {
        let layout: Vec<u8> = self
            .batches
            .iter()
            .flat_map(|b| (b.transactions.len() as u32).to_be_bytes())
            .collect();
        codec::encode_fields(
            TAG_HEADER,
            &[
                self.height.to_be_bytes().as_slice(),
                self.parent.as_bytes(),
                self.state_root.as_bytes(),
                self.tx_root.as_bytes(),
                &self.timestamp.to_be_bytes(),
                &layout,
            ],
        )
    }

    pub fn compute_hash(&self) -> Digest {
        Digest::of(&self.header_bytes())
    }

    pub fn transaction_count(&self) -> usize {
        self.batches.iter().map(|b| b.transactions.len()).sum()
    }
}

/// Transaction trie root: index (u32 BE, counting across batches) →
/// canonical transaction encoding.
pub fn tx_root(batches: &[AtomicBatch]) -> Digest {
    let mut map = AuthenticatedMap::new();
    for (i, tx) in batches.iter().flat_map(|b| &b.transactions).enumerate() {
        map.put(&(i as u32).to_be_bytes(), tx.encode()).expect("4-byte key");
    }
    map.root_hash()
}

#[derive(Debug)]
pub struct SealOutcome {
    pub height: u64,
    /// Batches that aborted, by position in the submitted list. They are not
    /// part of the block.
    pub rejected: Vec<(usize, LedgerError)>,
}

/// A single-writer chain: genesis, sealed blocks and the tip state.
#[derive(Debug, Clone)]
pub struct Chain {
    genesis: Genesis,
    blocks: Vec<Block>,
    state: WorldState,
}

impl Chain {
    pub fn new(genesis: Genesis) -> Result<Self, LedgerError> {
        let state = genesis.build_state()?;
        let mut block0 = Block {
            height: 0,
            parent: Digest::ZERO,
            state_root: state.root_hash(),
            tx_root: tx_root(&[]),
            timestamp: genesis.timestamp,
            hash: Digest::ZERO,
            batches: Vec::new(),
        };
        block0.hash = block0.compute_hash();
        Ok(Chain { genesis, blocks: vec![block0], state })
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("genesis block")
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Executes `batches` in order against the tip state and appends a
    /// block holding the ones that succeeded.
    pub fn seal_block(
        &mut self,
        batches: Vec<AtomicBatch>,
        timestamp: u64,
        resolver: &dyn ContentResolver,
    ) -> Result<SealOutcome, LedgerError> {
        let (parent_height, parent_hash, parent_time) = {
            let p = self.tip();
            (p.height, p.hash, p.timestamp)
        };
        if timestamp < parent_time {
            return Err(LedgerError::NonMonotonicTimestamp { previous: parent_time, requested: timestamp });
        }
        let mut applied = Vec::with_capacity(batches.len());
        let mut rejected = Vec::new();
        for (i, batch) in batches.into_iter().enumerate() {
            match self.state.execute_atomic_batch(&batch, resolver) {
                Ok(()) => applied.push(batch),
                Err(e) => rejected.push((i, e)),
            }
        }
        let mut block = Block {
            height: parent_height + 1,
            parent: parent_hash,
            state_root: self.state.root_hash(),
            tx_root: tx_root(&applied),
            timestamp,
            hash: Digest::ZERO,
            batches: applied,
        };
        block.hash = block.compute_hash();
        let height = block.height;
        self.blocks.push(block);
        Ok(SealOutcome { height, rejected })
    }

    pub fn export_jsonl(&self) -> Vec<u8> {
        export_jsonl(&self.blocks)
    }
}

pub fn export_jsonl(blocks: &[Block]) -> Vec<u8> {
    let mut out = Vec::new();
    for b in blocks {
        serde_json::to_writer(&mut out, b).expect("in-memory JSON");
        out.push(b'\n');
    }
    out
}

/// Parses a JSON-lines chain export. The input must be exactly the bytes
/// [`export_jsonl`] would produce for the parsed blocks.
pub fn import_jsonl(bytes: &[u8]) -> Result<Vec<Block>, LedgerError> {
    let text = std::str::from_utf8(bytes).map_err(|e| LedgerError::CorruptExport(e.to_string()))?;
    let mut blocks = Vec::new();
    for (i, line) in text.split_terminator('\n').enumerate() {
        let block: Block =
            serde_json::from_str(line).map_err(|e| LedgerError::CorruptExport(format!("line {}: {e}", i + 1)))?;
        blocks.push(block);
    }
    if export_jsonl(&blocks) != bytes {
        return Err(LedgerError::CorruptExport("export is not in canonical form".into()));
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FindingKind {
    HeightSequence { found: u64 },
    BlockHash,
    ParentLinkage,
    NonMonotonicTimestamp,
    TxId { index: usize },
    BatchId { index: usize },
    TxRoot,
    StateRoot,
    BatchRejected { index: usize, cause: String },
    Genesis { cause: String },
    MissingGenesisBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainFinding {
    pub height: u64,
    #[serde(flatten)]
    pub kind: FindingKind,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub findings: Vec<ChainFinding>,
    /// State obtained by replaying every block, if genesis was valid.
    pub replayed_state: Option<WorldState>,
}

impl ChainReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn first_mismatch_height(&self) -> Option<u64> {
        self.findings.iter().map(|f| f.height).min()
    }
}

/// Re-executes every block from genesis and reports each height whose
/// linkage, transaction root or state root disagrees with the replay.
pub fn verify_chain(genesis: &Genesis, blocks: &[Block], resolver: &dyn ContentResolver) -> ChainReport {
    let mut findings = Vec::new();
    let mut state = match genesis.build_state() {
        Ok(s) => s,
        Err(e) => {
            findings.push(ChainFinding { height: 0, kind: FindingKind::Genesis { cause: e.to_string() } });
            return ChainReport { findings, replayed_state: None };
        }
    };
    if blocks.is_empty() {
        findings.push(ChainFinding { height: 0, kind: FindingKind::MissingGenesisBlock });
    }
    let mut push = |height, kind| findings.push(ChainFinding { height, kind });
    let mut prev: Option<&Block> = None;
    for (i, block) in blocks.iter().enumerate() {
        let h = i as u64;
        if block.height != h {
            push(h, FindingKind::HeightSequence { found: block.height });
        }
        if block.compute_hash() != block.hash {
            push(h, FindingKind::BlockHash);
        }
        match prev {
            None => {
                if !block.parent.is_zero() {
                    push(h, FindingKind::ParentLinkage);
                }
                if block.timestamp != genesis.timestamp || !block.batches.is_empty() {
                    push(h, FindingKind::Genesis { cause: "genesis block does not match genesis".into() });
                }
            }
            Some(p) => {
                if block.parent != p.hash {
                    push(h, FindingKind::ParentLinkage);
                }
                if block.timestamp < p.timestamp {
                    push(h, FindingKind::NonMonotonicTimestamp);
                }
            }
        }
        for (bi, batch) in block.batches.iter().enumerate() {
            for (ti, tx) in batch.transactions.iter().enumerate() {
                if !tx.id_is_consistent() {
                    push(h, FindingKind::TxId { index: ti });
                }
            }
            if AtomicBatch::compute_id(&batch.transactions) != batch.batch_id {
                push(h, FindingKind::BatchId { index: bi });
            }
        }
        if tx_root(&block.batches) != block.tx_root {
            push(h, FindingKind::TxRoot);
        }
        for (bi, batch) in block.batches.iter().enumerate() {
            if let Err(e) = state.execute_atomic_batch(batch, resolver) {
                push(h, FindingKind::BatchRejected { index: bi, cause: e.to_string() });
            }
        }
        if state.root_hash() != block.state_root {
            push(h, FindingKind::StateRoot);
        }
        prev = Some(block);
    }
    ChainReport { findings, replayed_state: Some(state) }
}
