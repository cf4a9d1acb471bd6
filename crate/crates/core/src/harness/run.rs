//! The scenario matrix and its on-disk run directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_dataset, GenOptions, Profile};
use super::HarnessError;
use crate::engine::{run_scenario, AssetKind, GranularityConfig, PaymentDataset, PaymentRecord, Roles};
use crate::fiat::{self, InformationLoss};
use crate::hash::Digest;
use crate::ledger::{Chain, WorldState};
use crate::product::{KeyKind, Project, ProjectDataset};
use crate::store::{canonical_json, ContentStore, EvidenceBundle};

pub const MANIFEST: &str = "manifest.json";
pub const DATASETS_DIR: &str = "datasets";
pub const GENESIS: &str = "genesis.json";
pub const CHAIN: &str = "chain.jsonl";
pub const STATE: &str = "state.json";
pub const EVIDENCE_DIR: &str = "evidence";
pub const PAYMENTS_JSON: &str = "payments.json";
pub const PAYMENTS_CSV: &str = "payments.csv";
pub const FIAT_CSV: &str = "fiat.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

/// Default seed of the reference matrix.
pub const DEFAULT_SEED: u64 = 2020;
pub const SEED_ENV: &str = "FLOWLEDGER_SEED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub name: String,
    /// Generator options, when the dataset was generated for this run.
    pub generated: Option<GenOptions>,
    pub file: String,
    pub sha256: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub dataset: String,
    pub scenario_id: u8,
    pub code: String,
    pub dir: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub asset: AssetKind,
    pub configs: Vec<GranularityConfig>,
    pub datasets: Vec<DatasetDescriptor>,
    pub scenarios: Vec<ScenarioEntry>,
}

impl RunManifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        pretty(self)
    }
}

pub(crate) fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory JSON");
    out.push(b'\n');
    out
}

/// Seed from `FLOWLEDGER_SEED` when set, else `fallback`.
pub fn seed_from_env(fallback: u64) -> Result<u64, HarnessError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| HarnessError::Usage(format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(fallback),
    }
}

/// The reference pair: a 104-element per-element dataset and an aggregate
/// one, both from `seed`.
pub fn default_datasets(seed: u64) -> Vec<GenOptions> {
    vec![GenOptions::new(Profile::Uav, seed), GenOptions::new(Profile::Ugv, seed)]
}

/// A dataset to run, with its origin.
#[derive(Debug, Clone)]
pub struct DatasetInput {
    pub name: String,
    pub generated: Option<GenOptions>,
    pub dataset: ProjectDataset,
}

impl DatasetInput {
    pub fn generated(opts: GenOptions) -> Self {
        DatasetInput { name: opts.name(), dataset: generate_dataset(&opts), generated: Some(opts) }
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        let dataset = ProjectDataset::from_slice(&bytes)
            .map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
        Ok(DatasetInput { name: dataset.project.name.clone(), generated: None, dataset })
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub asset: AssetKind,
    pub configs: Vec<GranularityConfig>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: DEFAULT_SEED, asset: AssetKind::Native, configs: GranularityConfig::all() }
    }
}

/// In-memory result of one (dataset, config) run.
pub struct ScenarioResult {
    pub entry: ScenarioEntry,
    pub dataset: PaymentDataset,
    pub chain: Chain,
    pub information_loss: InformationLoss,
}

pub fn scenario_dir_name(config: &GranularityConfig) -> String {
    config.to_string()
}

/// Escrow funding: the full scheduled value, so a run can never outspend it.
pub fn funding_for(project: &Project) -> u128 {
    u128::from(project.total_scheduled_value())
}

/// Elements named by a bundle's delta items.
pub fn bundle_elements(project: &Project, bundle: &EvidenceBundle) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for item in &bundle.progress_delta.items {
        match item.key_kind {
            KeyKind::Element => {
                out.insert(item.key.clone());
            }
            KeyKind::ElementType => out.extend(project.elements_of_type(&item.key).map(|e| e.guid.clone())),
        }
    }
    out
}

/// Element scope recovered from a payment's lien token alone: token URI,
/// then evidence bundle, then its items. `None` when any link is broken
/// or the bundle disagrees with the token or the payment amount.
pub fn recover_from_lien(
    project: &Project,
    state: &WorldState,
    store: &ContentStore,
    payment: &PaymentRecord,
) -> Option<BTreeSet<String>> {
    let registry = state.lien_registry(&Roles::default().lien_registry)?;
    let token = registry.token(payment.lien_token_id).ok()?;
    let bundle = EvidenceBundle::from_slice(&store.get_content(&token.uri_cid).ok()?).ok()?;
    if bundle.scope != token.scope || bundle.rederive_amount()? != payment.amount_cents {
        return None;
    }
    Some(bundle_elements(project, &bundle))
}

/// Runs one scenario against `store`, which receives the project documents
/// and every evidence bundle.
pub fn run_one(
    input: &DatasetInput,
    config: GranularityConfig,
    asset: AssetKind,
    store: &mut ContentStore,
) -> Result<ScenarioResult, HarnessError> {
    let project = Project::from_dataset(&input.dataset, store)?;
    let outcome = run_scenario(&input.name, &project, config, asset, funding_for(&project), store)?;
    let fiat_run = fiat::simulate(&outcome.dataset);
    let state = outcome.chain.state();
    let information_loss =
        fiat::information_loss(&outcome.dataset, &fiat_run, |p| recover_from_lien(&project, state, store, p));
    Ok(ScenarioResult {
        entry: ScenarioEntry {
            dataset: input.name.clone(),
            scenario_id: config.scenario_id(),
            code: config.code(),
            dir: format!("{}/{}", input.name, scenario_dir_name(&config)),
        },
        dataset: outcome.dataset,
        chain: outcome.chain,
        information_loss,
    })
}

/// Runs every (dataset, config) pair in memory.
pub fn run_in_memory(inputs: &[DatasetInput], opts: &RunOptions) -> Result<Vec<ScenarioResult>, HarnessError> {
    let jobs: Vec<(&DatasetInput, GranularityConfig)> =
        inputs.iter().flat_map(|i| opts.configs.iter().map(move |c| (i, *c))).collect();
    jobs.into_par_iter()
        .map(|(input, config)| run_one(input, config, opts.asset, &mut ContentStore::in_memory()))
        .collect()
}

/// Runs the matrix and writes the run directory. Each scenario has its own
/// chain and its own evidence store; scenarios run in parallel and outputs
/// are assembled in a fixed order.
pub fn run_matrix(inputs: &[DatasetInput], opts: &RunOptions, out: &Path) -> Result<RunManifest, HarnessError> {
    let mut names = BTreeSet::new();
    for i in inputs {
        if !names.insert(i.name.as_str()) || i.name.is_empty() || i.name.contains(['/', '\\']) || i.name.starts_with('.') {
            return Err(HarnessError::Usage(format!("dataset name {:?} is duplicated or not a plain name", i.name)));
        }
    }
    fs::create_dir_all(out.join(DATASETS_DIR)).map_err(|e| HarnessError::io(out, e))?;

    let mut datasets = Vec::new();
    for input in inputs {
        let bytes = input.dataset.to_canonical_bytes();
        let file = format!("{DATASETS_DIR}/{}.json", input.name);
        write(&out.join(&file), &bytes)?;
        datasets.push(DatasetDescriptor {
            name: input.name.clone(),
            generated: input.generated.clone(),
            file,
            sha256: Digest::of(&bytes),
        });
    }

    let jobs: Vec<(&DatasetInput, GranularityConfig)> =
        inputs.iter().flat_map(|i| opts.configs.iter().map(move |c| (i, *c))).collect();
    let results: Vec<(ScenarioEntry, InformationLoss, PaymentDataset)> = jobs
        .into_par_iter()
        .map(|(input, config)| {
            let dir = out.join(&input.name).join(scenario_dir_name(&config));
            let mut store = ContentStore::open(dir.join(EVIDENCE_DIR))?;
            let result = run_one(input, config, opts.asset, &mut store)?;
            write_scenario(&dir, &result)?;
            Ok((result.entry, result.information_loss, result.dataset))
        })
        .collect::<Result<_, HarnessError>>()?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        asset: opts.asset,
        configs: opts.configs.clone(),
        datasets,
        scenarios: results.iter().map(|(e, _, _)| e.clone()).collect(),
    };
    write(&out.join(MANIFEST), &manifest.to_bytes())?;

    let profiles = inputs.iter().map(|i| (i.name.clone(), i.dataset.project.profile.clone())).collect();
    let report =
        super::report::Report::build(&manifest, &profiles, results.iter().map(|(e, loss, ds)| (e, ds, *loss)));
    write(&out.join(REPORT_JSON), &report.to_json())?;
    write(&out.join(REPORT_MD), report.to_markdown().as_bytes())?;
    Ok(manifest)
}

fn write_scenario(dir: &Path, result: &ScenarioResult) -> Result<(), HarnessError> {
    write(&dir.join(GENESIS), &canonical_json(result.chain.genesis()))?;
    write(&dir.join(CHAIN), &result.chain.export_jsonl())?;
    write(&dir.join(STATE), &canonical_json(&result.chain.state().dump()))?;
    write(&dir.join(PAYMENTS_JSON), &result.dataset.to_json())?;
    write(&dir.join(PAYMENTS_CSV), &result.dataset.to_csv())?;
    write(&dir.join(FIAT_CSV), &fiat::simulate(&result.dataset).reserve.entries_csv())?;
    Ok(())
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest, HarnessError> {
    let path: PathBuf = dir.join(MANIFEST);
    serde_json::from_slice(&read(&path)?).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))
}
