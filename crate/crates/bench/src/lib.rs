//! Fixtures shared by the benchmarks.

use flowledger::harness::{generate_dataset, GenOptions, Profile};
use flowledger::product::Project;
use flowledger::store::ContentStore;
use flowledger::Digest;

/// `n` pseudo-random 32-byte keys, fixed across runs.
pub fn keys(n: usize) -> Vec<Vec<u8>> {
    (0..n as u64).map(|i| Digest::of(&i.to_be_bytes()).0.to_vec()).collect()
}

/// A generated per-element project with its documents in a fresh store.
pub fn uav_project(elements: usize) -> (Project, ContentStore) {
    let mut store = ContentStore::in_memory();
    let dataset = generate_dataset(&GenOptions { profile: Profile::Uav, elements, seed: 1, divisible: false });
    let project = Project::from_dataset(&dataset, &mut store).expect("generated datasets are valid");
    (project, store)
}
