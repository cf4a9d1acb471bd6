//! Period planning, scope partitioning and payee routing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EngineError, Level};
use crate::hash::Address;
use crate::product::{BillingPeriod, BuildingElement, ScopeSelector};

pub const DAY: u64 = 86_400;
pub const WEEK_DAYS: u32 = 7;

/// Simulated time span, normally one month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: u64,
    pub days: u32,
}

impl Horizon {
    pub fn end(&self) -> u64 {
        self.start + u64::from(self.days) * DAY
    }
}

/// Low: one period covering the horizon. High: consecutive 7-day periods,
/// the last one shortened to end with the horizon.
pub fn plan_periods(time: Level, horizon: Horizon) -> Vec<BillingPeriod> {
    match time {
        Level::Low => vec![BillingPeriod { start: horizon.start, end: horizon.end(), label: "month".into() }],
        Level::High => {
            let mut out = Vec::new();
            let mut start = horizon.start;
            while start < horizon.end() {
                let end = (start + u64::from(WEEK_DAYS) * DAY).min(horizon.end());
                out.push(BillingPeriod { start, end, label: format!("week {}", out.len() + 1) });
                start = end;
            }
            out
        }
    }
}

/// Low: one selector per element type (sorted by type). High: one selector
/// per element, in input order.
pub fn partition_scope(product: Level, elements: &[BuildingElement]) -> Vec<ScopeSelector> {
    match product {
        Level::Low => {
            let mut types: Vec<&str> = elements.iter().map(|e| e.element_type.as_str()).collect();
            types.sort_unstable();
            types.dedup();
            types.into_iter().map(|t| ScopeSelector::ElementType(t.to_string())).collect()
        }
        Level::High => elements.iter().map(|e| ScopeSelector::Element(e.guid.clone())).collect(),
    }
}

/// Who gets paid: the general contractor or one subcontractor per trade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayeeDirectory {
    pub general_contractor: Address,
    pub subcontractors: BTreeMap<String, Address>,
}

impl PayeeDirectory {
    /// Deterministic role addresses for a project's trades.
    pub fn for_trades(trades: &[String]) -> Self {
        PayeeDirectory {
            general_contractor: Address::derive("gc"),
            subcontractors: trades.iter().map(|t| (t.clone(), Address::derive(&format!("sub:{t}")))).collect(),
        }
    }
}

/// One payee and the trades its payment covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayeeGroup {
    pub payee: Address,
    pub trades: Vec<String>,
}

/// Low: a single group paying the GC for every trade. High: one group per
/// trade, paid to that trade's subcontractor.
pub fn resolve_payees(trade: Level, trades: &[String], dir: &PayeeDirectory) -> Result<Vec<PayeeGroup>, EngineError> {
    let subs: Vec<Address> = trades
        .iter()
        .map(|t| dir.subcontractors.get(t).copied().ok_or_else(|| EngineError::UnmappedTrade(t.clone())))
        .collect::<Result<_, _>>()?;
    if trades.is_empty() {
        return Ok(Vec::new());
    }
    Ok(match trade {
        Level::Low => vec![PayeeGroup { payee: dir.general_contractor, trades: trades.to_vec() }],
        Level::High => trades
            .iter()
            .zip(subs)
            .map(|(t, payee)| PayeeGroup { payee, trades: vec![t.clone()] })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const JUNE_1_2020: u64 = 1_590_969_600;

    fn partitions(n: usize) -> Vec<BuildingElement> {
        (0..n)
            .map(|i| BuildingElement {
                guid: format!("p{i}"),
                element_type: "partition".into(),
                trades: vec!["framing".into()],
            })
            .collect()
    }

    #[test]
    fn periods_over_28_days() {
        let h = Horizon { start: JUNE_1_2020, days: 28 };
        let low = plan_periods(Level::Low, h);
        assert_eq!(low.len(), 1);
        assert_eq!(low[0].end - low[0].start, 28 * DAY);
        let high = plan_periods(Level::High, h);
        assert_eq!(high.len(), 4);
        assert!(high.iter().all(|p| p.end - p.start == 7 * DAY));
        // tiling: contiguous, same span as the monthly period
        assert_eq!(high[0].start, low[0].start);
        assert_eq!(high[3].end, low[0].end);
        assert!(high.windows(2).all(|w| w[0].end == w[1].start));
    }

    #[test]
    fn thirty_day_month_has_five_weeks() {
        let high = plan_periods(Level::High, Horizon { start: 0, days: 30 });
        assert_eq!(high.len(), 5);
        assert_eq!(high[4].end - high[4].start, 2 * DAY);
    }

    #[test]
    fn scope_partitions() {
        let els = partitions(104);
        let low = partition_scope(Level::Low, &els);
        assert_eq!(low, vec![ScopeSelector::ElementType("partition".into())]);
        assert_eq!(partition_scope(Level::High, &els).len(), 104);
        assert!(partition_scope(Level::Low, &[]).is_empty());
        assert!(partition_scope(Level::High, &[]).is_empty());
    }

    #[test]
    fn payee_routing() {
        let trades: Vec<String> = ["framing", "insulation", "drywall", "painting"].map(String::from).to_vec();
        let dir = PayeeDirectory::for_trades(&trades);
        let low = resolve_payees(Level::Low, &trades, &dir).unwrap();
        assert_eq!(low.len(), 1);
        assert_eq!(low[0].payee, dir.general_contractor);
        assert_eq!(low[0].trades.len(), 4);
        let high = resolve_payees(Level::High, &trades, &dir).unwrap();
        assert_eq!(high.len(), 4);
        assert_eq!(high[1].payee, dir.subcontractors["insulation"]);
        let err = resolve_payees(Level::Low, &["roofing".to_string()], &dir).unwrap_err();
        assert!(matches!(err, EngineError::UnmappedTrade(t) if t == "roofing"));
    }
}
