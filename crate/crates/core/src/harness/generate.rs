//! Synthetic project datasets shaped like the two field captures: a drone
//! survey with per-element progress and a ground-vehicle scan with
//! progress aggregated per element type.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{DAY, WEEK_DAYS};
use crate::product::{
    BuildingElement, Lod, ProgressReading, ProgressSnapshot, ProjectDataset, ProjectInfo, SovEntry, FULL_BP,
};

/// 2020-06-01T00:00:00Z.
pub const DEFAULT_HORIZON_START: u64 = 1_590_969_600;
pub const DEFAULT_HORIZON_DAYS: u32 = 28;
pub const WEEKS: u64 = 4;
/// Captures happen on the last day of each week.
pub const CAPTURE_DAY: u64 = 6;

pub const UAV_TRADES: [&str; 4] = ["framing", "insulation", "drywall", "painting"];
pub const UGV_TRADES: [&str; 3] = ["plumbing", "partitions", "hvac"];
/// (element type, trade) pairs for the ground-vehicle profile.
pub const UGV_TYPES: [(&str, &str); 3] = [("pipe", "plumbing"), ("partition", "partitions"), ("duct", "hvac")];

pub const UAV_DEFAULT_ELEMENTS: usize = 104;
pub const UGV_DEFAULT_ELEMENTS: usize = 60;
/// Share of partitions insulated in the second week, as 42 of 104.
const INSULATION_WEEK_TWO: (usize, usize) = (42, 104);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Uav,
    Ugv,
}

impl Profile {
    pub fn default_elements(self) -> usize {
        match self {
            Profile::Uav => UAV_DEFAULT_ELEMENTS,
            Profile::Ugv => UGV_DEFAULT_ELEMENTS,
        }
    }

    pub fn lod(self) -> Lod {
        match self {
            Profile::Uav => Lod::PerElement,
            Profile::Ugv => Lod::Aggregate,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Uav => "uav",
            Profile::Ugv => "ugv",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uav" => Ok(Profile::Uav),
            "ugv" => Ok(Profile::Ugv),
            _ => Err(format!("unknown profile {s:?} (expected uav or ugv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenOptions {
    pub profile: Profile,
    pub elements: usize,
    pub seed: u64,
    /// Every scheduled value a multiple of 10000 cents, so that no
    /// valuation ever rounds.
    pub divisible: bool,
}

impl GenOptions {
    pub fn new(profile: Profile, seed: u64) -> Self {
        GenOptions { profile, elements: profile.default_elements(), seed, divisible: false }
    }

    pub fn name(&self) -> String {
        let suffix = if self.divisible { "-div" } else { "" };
        format!("{}-{}-{}{suffix}", self.profile, self.elements, self.seed)
    }
}

fn guid(rng: &mut ChaCha20Rng) -> String {
    let bytes: [u8; 16] = rng.gen();
    hex::encode(bytes)
}

fn value(rng: &mut ChaCha20Rng, divisible: bool) -> u64 {
    if divisible {
        rng.gen_range(2..=40) * u64::from(FULL_BP)
    } else {
        rng.gen_range(15_000..=400_000)
    }
}

/// Cumulative basis points at the end of each week for an item starting in
/// week `start` (or never, if `start >= WEEKS`).
fn trajectory(rng: &mut ChaCha20Rng, start: u64) -> [u32; WEEKS as usize] {
    let mut out = [0; WEEKS as usize];
    let mut bp = 0u32;
    for w in 0..WEEKS {
        if w >= start && bp < FULL_BP {
            // mostly whole steps, sometimes an odd partial one
            let step = if rng.gen_bool(0.5) { FULL_BP } else { rng.gen_range(1_500..=7_500) };
            bp = (bp + step).min(FULL_BP);
        }
        out[w as usize] = bp;
    }
    out
}

fn capture_time(start: u64, week: u64) -> u64 {
    start + (week * u64::from(WEEK_DAYS) + CAPTURE_DAY) * DAY
}

/// Deterministic in `opts`. Progress never decreases between captures.
pub fn generate_dataset(opts: &GenOptions) -> ProjectDataset {
    assert!(opts.elements >= 1, "a dataset needs at least one element");
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    match opts.profile {
        Profile::Uav => uav(opts, &mut rng),
        Profile::Ugv => ugv(opts, &mut rng),
    }
}

fn info(opts: &GenOptions, trades: &[&str]) -> ProjectInfo {
    ProjectInfo {
        name: opts.name(),
        profile: opts.profile.to_string(),
        bim_ref: Some(format!("bim:{}:as-built", opts.name())),
        horizon_start: DEFAULT_HORIZON_START,
        horizon_days: DEFAULT_HORIZON_DAYS,
        trades: trades.iter().map(|s| s.to_string()).collect(),
    }
}

fn uav(opts: &GenOptions, rng: &mut ChaCha20Rng) -> ProjectDataset {
    let n = opts.elements;
    let elements: Vec<BuildingElement> = (0..n)
        .map(|_| BuildingElement {
            guid: guid(rng),
            element_type: "partition".into(),
            trades: UAV_TRADES.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let schedule: Vec<SovEntry> = elements
        .iter()
        .flat_map(|e| e.trades.iter().map(|t| (e.guid.clone(), t.clone())).collect::<Vec<_>>())
        .map(|(guid, trade)| SovEntry { guid, trade, value_cents: value(rng, opts.divisible) })
        .collect();

    let insulated_week_two = (n * INSULATION_WEEK_TWO.0 + INSULATION_WEEK_TWO.1 / 2) / INSULATION_WEEK_TWO.1;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut week_two = vec![false; n];
    for &i in &order[..insulated_week_two.min(n)] {
        week_two[i] = true;
    }

    // [element][trade][week]
    let mut progress = vec![[[0u32; WEEKS as usize]; 4]; n];
    for (i, row) in progress.iter_mut().enumerate() {
        for (t, cells) in row.iter_mut().enumerate() {
            let start = match t {
                // framing first, painting last; insulation fixed by crew plan
                0 => rng.gen_range(0..2),
                1 if week_two[i] => 1,
                1 => rng.gen_range(2..=WEEKS),
                2 => rng.gen_range(2..=WEEKS),
                _ => rng.gen_range(3..=WEEKS + 1),
            };
            *cells = trajectory(rng, start);
        }
    }

    let snapshots = (0..WEEKS)
        .map(|w| ProgressSnapshot {
            snapshot_id: format!("uav-w{}", w + 1),
            captured_at: capture_time(DEFAULT_HORIZON_START, w),
            lod: Lod::PerElement,
            per_element: elements
                .iter()
                .enumerate()
                .flat_map(|(i, e)| {
                    let row = progress[i];
                    UAV_TRADES.iter().enumerate().filter(move |&(t, _)| row[t][w as usize] > 0).map(move |(t, trade)| {
                        ProgressReading { key: e.guid.clone(), trade: trade.to_string(), basis_points: row[t][w as usize] }
                    })
                })
                .collect(),
            per_type: Vec::new(),
            source: "UAV photogrammetry + as-built BIM".into(),
        })
        .collect();

    ProjectDataset { project: info(opts, &UAV_TRADES), elements, schedule_of_values: schedule, snapshots }
}

fn ugv(opts: &GenOptions, rng: &mut ChaCha20Rng) -> ProjectDataset {
    let elements: Vec<BuildingElement> = (0..opts.elements)
        .map(|i| {
            let (ty, trade) = UGV_TYPES[i % UGV_TYPES.len()];
            BuildingElement { guid: guid(rng), element_type: ty.into(), trades: vec![trade.into()] }
        })
        .collect();
    let schedule: Vec<SovEntry> = elements
        .iter()
        .map(|e| SovEntry { guid: e.guid.clone(), trade: e.trades[0].clone(), value_cents: value(rng, opts.divisible) })
        .collect();

    let present: Vec<(&str, &str)> =
        UGV_TYPES.iter().copied().filter(|(ty, _)| elements.iter().any(|e| e.element_type == *ty)).collect();
    let trajectories: Vec<[u32; WEEKS as usize]> = present
        .iter()
        .map(|_| {
            // a type-level average moves in smaller steps
            let mut bp = 0u32;
            let mut out = [0; WEEKS as usize];
            for cell in &mut out {
                bp = (bp + rng.gen_range(0..=4_000)).min(FULL_BP);
                *cell = bp;
            }
            out
        })
        .collect();

    let snapshots = (0..WEEKS)
        .map(|w| ProgressSnapshot {
            snapshot_id: format!("ugv-w{}", w + 1),
            captured_at: capture_time(DEFAULT_HORIZON_START, w),
            lod: Lod::Aggregate,
            per_element: Vec::new(),
            per_type: present
                .iter()
                .zip(&trajectories)
                .filter(|(_, traj)| traj[w as usize] > 0)
                .map(|((ty, trade), traj)| ProgressReading {
                    key: ty.to_string(),
                    trade: trade.to_string(),
                    basis_points: traj[w as usize],
                })
                .collect(),
            source: "UGV laser scan, aggregated by element type".into(),
        })
        .collect();

    ProjectDataset { project: info(opts, &UGV_TRADES), elements, schedule_of_values: schedule, snapshots }
}
