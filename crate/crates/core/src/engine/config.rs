use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    High,
}

impl Level {
    fn bit(self) -> u8 {
        match self {
            Level::Low => 0,
            Level::High => 1,
        }
    }

    fn from_bit(b: u8) -> Self {
        if b & 1 == 1 {
            Level::High
        } else {
            Level::Low
        }
    }

    fn letter(self) -> char {
        match self {
            Level::Low => 'L',
            Level::High => 'H',
        }
    }
}

/// Granularity of payments along the product, time and trade axes.
///
/// - product: Low pays for all elements of a type together, High per element.
/// - time: Low settles monthly, High weekly.
/// - trade: Low pays the general contractor, High pays each subcontractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GranularityConfig {
    pub product: Level,
    pub time: Level,
    pub trade: Level,
}

impl GranularityConfig {
    pub const fn new(product: Level, time: Level, trade: Level) -> Self {
        GranularityConfig { product, time, trade }
    }

    /// `1 + 4·product + 2·time + trade`, with Low = 0 and High = 1.
    pub fn scenario_id(&self) -> u8 {
        1 + 4 * self.product.bit() + 2 * self.time.bit() + self.trade.bit()
    }

    pub fn from_scenario_id(id: u8) -> Option<Self> {
        if !(1..=8).contains(&id) {
            return None;
        }
        let bits = id - 1;
        Some(GranularityConfig {
            product: Level::from_bit(bits >> 2),
            time: Level::from_bit(bits >> 1),
            trade: Level::from_bit(bits),
        })
    }

    /// All eight configurations in scenario-id order.
    pub fn all() -> Vec<Self> {
        (1..=8).filter_map(Self::from_scenario_id).collect()
    }

    /// Three-letter code in product/time/trade order, e.g. `"HLH"`.
    pub fn code(&self) -> String {
        [self.product, self.time, self.trade].iter().map(|l| l.letter()).collect()
    }

    /// Position of this configuration in the published experiment's test
    /// list for one dataset (1–8). Tests 1–8 used the UGV project and 9–16
    /// the UAV project; add 8 for the latter.
    pub fn reference_test_index(&self) -> u8 {
        use Level::*;
        match (self.product, self.time, self.trade) {
            (Low, Low, Low) => 1,
            (Low, High, Low) => 2,
            (Low, Low, High) => 3,
            (High, High, Low) => 4,
            (High, Low, Low) => 5,
            (Low, High, High) => 6,
            (High, Low, High) => 7,
            (High, High, High) => 8,
        }
    }
}

impl fmt::Display for GranularityConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}-{}", self.scenario_id(), self.code())
    }
}

/// Parses `all`, or a comma-separated list of scenario ids and/or codes
/// (`"1,4,HHH"`).
pub fn parse_config_list(s: &str) -> Result<Vec<GranularityConfig>, String> {
    if s.trim() == "all" {
        return Ok(GranularityConfig::all());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let cfg = part.parse::<GranularityConfig>()?;
        if !out.contains(&cfg) {
            out.push(cfg);
        }
    }
    if out.is_empty() {
        return Err("empty configuration list".into());
    }
    Ok(out)
}

impl FromStr for GranularityConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(id) = s.parse::<u8>() {
            return Self::from_scenario_id(id).ok_or_else(|| format!("scenario id {id} is not in 1..=8"));
        }
        let levels: Vec<Level> = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'L' => Ok(Level::Low),
                'H' => Ok(Level::High),
                _ => Err(format!("bad configuration {s:?}")),
            })
            .collect::<Result<_, _>>()?;
        match levels[..] {
            [product, time, trade] => Ok(GranularityConfig { product, time, trade }),
            _ => Err(format!("bad configuration {s:?}")),
        }
    }
}
